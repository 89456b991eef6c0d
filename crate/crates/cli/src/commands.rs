//! One function per subcommand. Each returns the rendered artifact and
//! whether its check passed.

use std::path::Path;
use std::sync::Arc;

use pdm_core::classical_dynamics::{direct_fields, ScalarField};
use pdm_core::em_coupling::shell_points;
use pdm_core::mass_models::verify_pair;
use pdm_core::output::to_stable_json;
use pdm_core::*;
use serde_json::{json, Value};

use crate::config::{ClassicalMode, Coordinate, Format, MassConfig, PotentialTag, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Pairs,
    Transform,
    Spectrum,
    Isospectral,
    OrderingSweep,
    GaugeCheck,
    Landau,
    Classical,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Pairs,
        Command::Transform,
        Command::Spectrum,
        Command::Isospectral,
        Command::OrderingSweep,
        Command::GaugeCheck,
        Command::Landau,
        Command::Classical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Pairs => "pairs",
            Command::Transform => "transform",
            Command::Spectrum => "spectrum",
            Command::Isospectral => "isospectral",
            Command::OrderingSweep => "ordering-sweep",
            Command::GaugeCheck => "gauge-check",
            Command::Landau => "landau",
            Command::Classical => "classical",
        }
    }

    pub fn from_name(s: &str) -> CliResult<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let valid: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
            CliError::Validation(format!("unknown scenario '{s}'; valid scenarios: {}", valid.join(", ")))
        })
    }
}

/// A rendered artifact.
pub struct Outcome {
    pub body: Vec<u8>,
    pub passed: bool,
    /// Set when `passed` is false.
    pub failure: Option<String>,
    pub tolerances: Value,
}

impl Outcome {
    fn new(body: Vec<u8>, check: Option<(bool, String)>, tolerances: Value) -> Self {
        match check {
            Some((false, why)) => Outcome {
                body,
                passed: false,
                failure: Some(why),
                tolerances,
            },
            _ => Outcome {
                body,
                passed: true,
                failure: None,
                tolerances,
            },
        }
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> CliResult<Outcome> {
    match cmd {
        Command::Pairs => pairs(cfg),
        Command::Transform => transform(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Isospectral => isospectral(cfg),
        Command::OrderingSweep => sweep(cfg),
        Command::GaugeCheck => gauge_check(cfg),
        Command::Landau => landau(cfg),
        Command::Classical => classical(cfg),
    }
}

fn json_body(v: &Value) -> CliResult<Vec<u8>> {
    Ok(to_stable_json(v)?.into_bytes())
}

fn csv_body(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Numerical(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Numerical(format!("csv: {e}")))
}

fn f(x: f64) -> String {
    pdm_core::output::format_float(x)
}

fn catalog_entry(tag: &str, params: &std::collections::BTreeMap<String, f64>, dof: u32) -> CliResult<PairCatalogEntry> {
    let tag: PairTag = tag.parse()?;
    Ok(PairCatalogEntry::from_tag(tag, params, dof)?)
}

fn param(
    params: &std::collections::BTreeMap<String, f64>,
    allowed: &[&str],
    name: &str,
    default: f64,
) -> CliResult<f64> {
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(CliError::Validation(format!(
            "unknown mass parameter '{bad}'; expected one of: {}",
            if allowed.is_empty() {
                "(none)".to_string()
            } else {
                allowed.join(", ")
            }
        )));
    }
    Ok(params.get(name).copied().unwrap_or(default))
}

pub fn mass_profile(cfg: &RunConfig) -> CliResult<MassProfile> {
    match &cfg.mass {
        MassConfig::Profile { name, params } => match name.as_str() {
            "unit" => {
                param(params, &[], "", 0.0)?;
                Ok(MassProfile::unit())
            }
            "constant" => Ok(MassProfile::constant(param(params, &["value"], "value", 1.0)?)),
            "inverse-quartic" => {
                param(params, &[], "", 0.0)?;
                Ok(MassProfile::inverse_quartic())
            }
            "gaussian" => Ok(MassProfile::gaussian(param(params, &["width"], "width", 10.0)?)),
            "quadratic" => Ok(MassProfile::quadratic(param(params, &["a"], "a", 0.25)?)),
            other => Err(CliError::Validation(format!(
                "unknown mass profile '{other}'; valid profiles: unit, constant, inverse-quartic, gaussian, quadratic"
            ))),
        },
        MassConfig::Catalog { tag, params, dof } => Ok(catalog_entry(tag, params, *dof)?.mass),
        MassConfig::Csv { path, radial } => {
            let file = std::fs::File::open(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
            Ok(MassProfile::from_csv(file, *radial)?)
        }
    }
}

/// `V(q)` as configured; `box` and `none` are both zero.
fn potential_q(cfg: &RunConfig) -> PotentialFn {
    let (k, c) = (cfg.potential.k, cfg.potential.centre);
    match cfg.potential.tag {
        PotentialTag::Harmonic => Arc::new(move |q| k * (q - c) * (q - c)),
        PotentialTag::Box | PotentialTag::None => Arc::new(|_| 0.0),
    }
}

fn require_q_coordinate(cfg: &RunConfig, what: &str) -> CliResult<()> {
    if cfg.potential.coordinate != Coordinate::Q {
        return Err(CliError::Validation(format!(
            "{what} compares against q space; set potential.coordinate = \"q\""
        )));
    }
    Ok(())
}

fn spectral_options(cfg: &RunConfig) -> SpectralOptions {
    SpectralOptions {
        anchor_x: Some(cfg.solver.anchor_x),
        richardson: cfg.solver.richardson,
        require_confinement: cfg
            .solver
            .require_confinement
            .unwrap_or(cfg.potential.tag == PotentialTag::Harmonic),
    }
}

fn grid(cfg: &RunConfig) -> CliResult<Grid> {
    Ok(Grid::uniform(cfg.grid.min, cfg.grid.max, cfg.grid.n)?)
}

fn ordering(cfg: &RunConfig) -> OrderingParams {
    OrderingParams::from_alpha_beta(cfg.solver.alpha, cfg.solver.beta)
}

fn pairs(cfg: &RunConfig) -> CliResult<Outcome> {
    let entries = match &cfg.mass {
        MassConfig::Catalog { tag, params, dof } => vec![catalog_entry(tag, params, *dof)?],
        _ => PairCatalogEntry::defaults(cfg.pairs.dof),
    };
    let r = Grid::uniform(cfg.pairs.r_min, cfg.pairs.r_max, cfg.pairs.n)?;
    let reports: Vec<_> = entries.iter().map(|e| verify_pair(e, &r, cfg.pairs.tol)).collect();
    let failed: Vec<_> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.tag.to_string())
        .collect();
    let body = match cfg.output.format {
        Format::Json => json_body(&json!({
            "r_domain": [cfg.pairs.r_min, cfg.pairs.r_max],
            "n_points": cfg.pairs.n,
            "reports": reports,
            "params": entries.iter().map(|e| json!({"tag": e.tag, "params": e.params})).collect::<Vec<_>>(),
        }))?,
        Format::Csv => csv_body(
            &["tag", "dof", "max_residual", "worst_r", "tol", "passed"],
            reports.iter().map(|r| {
                vec![
                    r.tag.to_string(),
                    r.dof.to_string(),
                    f(r.max_residual),
                    f(r.worst_r),
                    f(r.tol),
                    r.passed.to_string(),
                ]
            }),
        )?,
    };
    let check = (
        failed.is_empty(),
        format!("generating relation violated for: {}", failed.join(", ")),
    );
    Ok(Outcome::new(body, Some(check), json!({"pairs.tol": cfg.pairs.tol})))
}

fn transform(cfg: &RunConfig) -> CliResult<Outcome> {
    let m = mass_profile(cfg)?;
    let map = build_map(&m, &grid(cfg)?)?.reanchored(cfg.solver.anchor_x)?;
    let body = match cfg.output.format {
        Format::Json => json_body(&json!({
            "anchor_x": cfg.solver.anchor_x,
            "q_range": map.q_range(),
            "upsilon": map.upsilon(),
            "x": map.x_grid().points(),
            "q": map.q_values(),
            "jacobian": map.jacobian(),
        }))?,
        Format::Csv => {
            let mut buf = Vec::new();
            map.write_csv(&mut buf)?;
            buf
        }
    };
    Ok(Outcome::new(body, None, json!({})))
}

fn spectrum(cfg: &RunConfig) -> CliResult<Outcome> {
    let m = mass_profile(cfg)?;
    let g = grid(cfg)?;
    let v = match cfg.potential.coordinate {
        Coordinate::Q => {
            let map = build_map(&m, &g)?.reanchored(cfg.solver.anchor_x)?;
            let vq = potential_q(cfg);
            PotentialSpec::through_map(&map, move |q| vq(q))
        }
        Coordinate::X => {
            let vx = potential_q(cfg);
            PotentialSpec::new(move |x| vx(x))
        }
    };
    let ord = ordering(cfg);
    let k = cfg.solver.k;
    let fine = solve_pdm(&m, &v, ord, &g, k, false)?;
    let extrapolated = if cfg.solver.richardson {
        let coarse = solve_pdm(&m, &v, ord, &g.coarsened()?, k, false)?;
        Some(
            fine.eigenvalues
                .iter()
                .zip(&coarse.eigenvalues)
                .map(|(f, c)| (4.0 * f - c) / 3.0)
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };
    let body = match cfg.output.format {
        Format::Json => {
            let mut doc = fine.to_json("spectrum")?;
            if let Value::Object(map) = &mut doc {
                map.insert("ordering".into(), serde_json::to_value(ord)?);
                map.insert("richardson".into(), json!(extrapolated));
            }
            json_body(&doc)?
        }
        Format::Csv => {
            let rich = extrapolated.clone().unwrap_or_default();
            csv_body(
                &["n", "eigenvalue", "residual", "richardson"],
                fine.eigenvalues
                    .iter()
                    .zip(&fine.residuals)
                    .enumerate()
                    .map(|(n, (e, r))| {
                        vec![
                            n.to_string(),
                            f(*e),
                            f(*r),
                            rich.get(n).map_or(String::new(), |v| f(*v)),
                        ]
                    }),
            )?
        }
    };
    Ok(Outcome::new(body, None, json!({})))
}

fn isospectral(cfg: &RunConfig) -> CliResult<Outcome> {
    require_q_coordinate(cfg, "isospectral")?;
    let m = mass_profile(cfg)?;
    let rep = isospectrality_check(
        &m,
        &potential_q(cfg),
        (cfg.grid.min, cfg.grid.max),
        cfg.grid.n,
        cfg.solver.k,
        cfg.solver.tol,
        &spectral_options(cfg),
    )?;
    let body = match cfg.output.format {
        Format::Json => json_body(&serde_json::to_value(&rep)?)?,
        Format::Csv => csv_body(
            &["n", "e_q", "e_x", "rel_diff"],
            (0..rep.e_q.len()).map(|n| vec![n.to_string(), f(rep.e_q[n]), f(rep.e_x[n]), f(rep.rel_diff[n])]),
        )?,
    };
    let check = (
        rep.passed,
        format!(
            "max relative difference {:.3e} exceeds {:.1e}",
            rep.max_rel_diff, rep.tol
        ),
    );
    Ok(Outcome::new(body, Some(check), json!({"solver.tol": cfg.solver.tol})))
}

fn sweep(cfg: &RunConfig) -> CliResult<Outcome> {
    require_q_coordinate(cfg, "ordering-sweep")?;
    let m = mass_profile(cfg)?;
    let mut orderings = NamedOrdering::standard_set();
    orderings.push(NamedOrdering::new("config", ordering(cfg)));
    let rep = ordering_sweep(
        &m,
        &potential_q(cfg),
        &orderings,
        (cfg.grid.min, cfg.grid.max),
        cfg.grid.n,
        cfg.solver.k,
        &spectral_options(cfg),
    )?;
    let body = match cfg.output.format {
        Format::Json => json_body(&serde_json::to_value(&rep)?)?,
        Format::Csv => csv_body(
            &[
                "label",
                "alpha",
                "beta",
                "gamma",
                "n",
                "eigenvalue",
                "reference",
                "rel_dev",
            ],
            rep.rows.iter().flat_map(|row| {
                let o = row.ordering;
                (0..row.eigenvalues.len())
                    .map(|n| {
                        vec![
                            row.label.clone(),
                            f(o.alpha()),
                            f(o.beta()),
                            f(o.gamma()),
                            n.to_string(),
                            f(row.eigenvalues[n]),
                            f(rep.reference[n]),
                            f(row.rel_dev[n]),
                        ]
                    })
                    .collect::<Vec<_>>()
            }),
        )?,
    };
    let mm = rep.row("mm").map_or(f64::INFINITY, |r| r.max_rel_dev);
    let check = (
        mm <= cfg.solver.tol,
        format!("MM ordering deviates by {mm:.3e}, above {:.1e}", cfg.solver.tol),
    );
    Ok(Outcome::new(body, Some(check), json!({"solver.tol": cfg.solver.tol})))
}

/// The catalog pair from `mass`, falling back to `s-unity` with `λ = 1`.
fn gauge_pair(cfg: &RunConfig) -> CliResult<PairCatalogEntry> {
    match &cfg.mass {
        MassConfig::Catalog { tag, params, dof } => catalog_entry(tag, params, *dof),
        _ => Ok(PairCatalogEntry::s_unity(1.0, 3)?),
    }
}

fn gauge_check(cfg: &RunConfig) -> CliResult<Outcome> {
    let pair = gauge_pair(cfg)?;
    let spec = VectorPotentialSpec::new(cfg.em.family, cfg.em.b0, pair.scalar.clone(), pair.mass.clone());
    let points = shell_points(cfg.gauge.points, cfg.gauge.r_min, cfg.gauge.r_max, cfg.gauge.seed);
    let elig = eligibility(&spec, &points)?;
    let report = gauge_divergence_residual(&spec, &points)?;
    let body = match cfg.output.format {
        Format::Json => json_body(&json!({
            "family": cfg.em.family,
            "B0": cfg.em.b0,
            "pair": {"tag": pair.tag, "params": pair.params, "dof": pair.dof},
            "eligible": elig.eligible,
            "reason": elig.reason,
            "report": report,
        }))?,
        Format::Csv => csv_body(
            &["x1", "x2", "x3", "residual"],
            points.iter().map(|p| {
                let r = spec.divergence_term(*p).map_or(f64::NAN, f64::abs);
                vec![f(p[0]), f(p[1]), f(p[2]), f(r)]
            }),
        )?,
    };
    Ok(Outcome::new(
        body,
        None,
        json!({"eligibility": pdm_core::em_coupling::ELIGIBILITY_TOL}),
    ))
}

fn landau(cfg: &RunConfig) -> CliResult<Outcome> {
    let lc = LandauConfig {
        b0: cfg.em.b0,
        charge: cfg.em.e,
        field: cfg.em.e0_field,
        k1: cfg.em.k1,
        k3: cfg.em.k3,
    };
    let r = pdm_core::em_coupling::solve_example_numeric(lc, None, cfg.em.n, cfg.em.levels, cfg.em.richardson)?;
    let pair = gauge_pair(cfg)?;
    let spec = VectorPotentialSpec::new(pdm_core::GaugeFamily::Symmetric, cfg.em.b0, pair.scalar, pair.mass);
    let gauge = gauge_divergence_residual(
        &spec,
        &shell_points(cfg.gauge.points, cfg.gauge.r_min, cfg.gauge.r_max, cfg.gauge.seed),
    )?;
    let worst = r.rel_err.iter().copied().fold(0.0, f64::max);
    let body = match cfg.output.format {
        Format::Json => json_body(&json!({
            "config": lc,
            "q2_domain": r.q2_domain,
            "richardson": r.richardson,
            "analytic_spectrum": r.analytic,
            "numeric_spectrum": r.numeric,
            "rel_err": r.rel_err,
            "overlaps": r.overlaps,
            "gauge_report": gauge,
        }))?,
        Format::Csv => csv_body(
            &["n", "analytic", "numeric", "rel_err", "overlap"],
            (0..r.analytic.len()).map(|n| {
                vec![
                    n.to_string(),
                    f(r.analytic[n]),
                    f(r.numeric[n]),
                    f(r.rel_err[n]),
                    f(r.overlaps[n]),
                ]
            }),
        )?,
    };
    let check = (
        worst <= cfg.em.tol,
        format!("Landau levels off by {worst:.3e}, above {:.1e}", cfg.em.tol),
    );
    Ok(Outcome::new(body, Some(check), json!({"em.tol": cfg.em.tol})))
}

fn classical(cfg: &RunConfig) -> CliResult<Outcome> {
    let c = &cfg.classical;
    let m = mass_profile(cfg)?;
    let vq = potential_q(cfg);
    let map_grid = grid(cfg)?;
    match c.mode {
        ClassicalMode::Equivalence => {
            require_q_coordinate(cfg, "classical equivalence")?;
            let mut setup = EquivalenceSetup::new(m, move |q| vq(q), map_grid).with_anchor(cfg.solver.anchor_x);
            setup.m0 = c.m0;
            let rep = transform_equivalence_check(&setup, c.x0, c.v0, c.dt, c.steps)?;
            let body = match cfg.output.format {
                Format::Json => json_body(&serde_json::to_value(&rep)?)?,
                Format::Csv => csv_body(
                    &[
                        "max_discrepancy",
                        "t_at_max",
                        "final_time",
                        "direct_drift",
                        "mapped_drift",
                    ],
                    [vec![
                        f(rep.max_discrepancy),
                        f(rep.t_at_max),
                        f(rep.final_time),
                        f(rep.direct_drift),
                        f(rep.mapped_drift),
                    ]],
                )?,
            };
            let check = (
                rep.max_discrepancy <= c.equivalence_tol,
                format!(
                    "trajectories differ by {:.3e}, above {:.1e}",
                    rep.max_discrepancy, c.equivalence_tol
                ),
            );
            Ok(Outcome::new(
                body,
                Some(check),
                json!({"classical.equivalence_tol": c.equivalence_tol}),
            ))
        }
        ClassicalMode::Trajectory => {
            let fields = match cfg.potential.coordinate {
                Coordinate::Q => {
                    let mut setup = EquivalenceSetup::new(m, move |q| vq(q), map_grid);
                    setup.m0 = c.m0;
                    let map = Arc::new(build_map(&setup.mass, &setup.map_grid)?.reanchored(cfg.solver.anchor_x)?);
                    direct_fields(&setup, &map)
                }
                Coordinate::X => {
                    let (k, centre) = (cfg.potential.k, cfg.potential.centre);
                    let v = match cfg.potential.tag {
                        PotentialTag::Harmonic => ScalarField::new(move |x| k * (x[0] - centre).powi(2))
                            .with_gradient(move |x| vec![2.0 * k * (x[0] - centre)]),
                        PotentialTag::Box | PotentialTag::None => ScalarField::constant(0.0),
                    };
                    ClassicalFields::new(1)
                        .with_mass_profile(&m)
                        .with_potential(v)
                        .with_m0(c.m0)
                }
            };
            let s0 = ClassicalState::from_velocity(vec![c.x0], &[c.v0], &fields)?;
            let mut traj = integrate(&s0, &fields, c.dt, c.steps, c.scheme)?;
            let last = traj.samples.len() - 1;
            let keep = |i: usize| i.is_multiple_of(c.record_every) || i == last;
            traj.samples = traj
                .samples
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, s)| s.clone())
                .collect();
            traj.energies = traj
                .energies
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, e)| *e)
                .collect();
            let body = match cfg.output.format {
                Format::Json => json_body(&serde_json::to_value(&traj)?)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    traj.write_csv(&mut buf)?;
                    buf
                }
            };
            let check = match &traj.diagnostic {
                Some(d) => (false, format!("trajectory stopped early: {d}")),
                None => (
                    traj.drift <= c.drift_tol,
                    format!("energy drift {:.3e} exceeds {:.1e}", traj.drift, c.drift_tol),
                ),
            };
            Ok(Outcome::new(
                body,
                Some(check),
                json!({"classical.drift_tol": c.drift_tol}),
            ))
        }
    }
}

/// Writes `body` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, body: &[u8]) -> CliResult<()> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| CliError::io(p.display().to_string(), e)),
        None => std::io::stdout()
            .write_all(body)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}
