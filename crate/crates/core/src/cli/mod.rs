//! Command-line front end: scenario files, subcommand runners and output.
//!
//! Every run writes its CSV files and a `run.json` manifest into the output
//! directory. Numerical failures write `diagnostics.json` instead of the
//! result files.

pub mod config;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::hyperbolicity::{critical_relative_velocity, map_hyperbolic_region};
use crate::solver::{integrate, Trajectory};
use crate::state::{primitive_to_evolved, EvolvedState, PrimitiveState};
use crate::verify::fields::TrigField;
use crate::verify::gibbs::{appendix_identities, gibbs_residual, ConvergenceStudy, IDENTITY_NAMES};
use crate::verify::{fick_residual, single_fluid_reduction};

pub use config::{parse_config, ScenarioConfig};
use output::{write_atomic, Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Environment variable that overrides `--out`.
pub const OUT_DIR_ENV: &str = "TWOFLUID_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    HyperbolicityMap,
    VerifyGibbs,
    FickRelax,
    ReduceCheck,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] = [
        Subcommand::Simulate,
        Subcommand::HyperbolicityMap,
        Subcommand::VerifyGibbs,
        Subcommand::FickRelax,
        Subcommand::ReduceCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::HyperbolicityMap => "hyperbolicity-map",
            Subcommand::VerifyGibbs => "verify-gibbs",
            Subcommand::FickRelax => "fick-relax",
            Subcommand::ReduceCheck => "reduce-check",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown subcommand {s:?}")))
    }
}

/// Files produced by a successful run, relative to the output directory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub files: Vec<String>,
}

/// Reads the config at `config_path`, runs `cmd` and returns the exit code.
/// Errors are reported on stderr; numerical failures also leave
/// `diagnostics.json` in `out`.
pub fn run_subcommand(cmd: Subcommand, config_path: &Path, out: &Path, seed: Option<u64>) -> i32 {
    let started = Instant::now();
    let prepared = std::fs::read_to_string(config_path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", config_path.display())))
        .and_then(|text| parse_config(&text))
        .and_then(|cfg| {
            std::fs::create_dir_all(out)
                .map_err(|e| Error::Invalid(format!("cannot create {}: {e}", out.display())))?;
            Ok(cfg)
        });
    let cfg = match prepared {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let seed = seed.or(cfg.run.seed).unwrap_or(0);
    match execute(cmd, &cfg, out, seed) {
        Ok(summary) => match write_manifest(cmd, &cfg, out, seed, started, &summary) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_INVALID
            }
        },
        Err(e) if e.is_validation() => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            if let Err(w) = write_diagnostics(cmd, out, &e) {
                eprintln!("error: {w}");
            }
            EXIT_NUMERICAL
        }
    }
}

/// Runs `cmd` on a validated config, writing result files into `out`.
pub fn execute(cmd: Subcommand, cfg: &ScenarioConfig, out: &Path, seed: u64) -> Result<RunSummary> {
    match cmd {
        Subcommand::Simulate => simulate(cfg, out),
        Subcommand::HyperbolicityMap => hyperbolicity_map(cfg, out),
        Subcommand::VerifyGibbs => verify_gibbs(cfg, out, seed),
        Subcommand::FickRelax => fick_relax(cfg, out),
        Subcommand::ReduceCheck => reduce_check(cfg, out),
    }
}

/// Cell-centred initial states from the `[initial]` profiles.
pub fn initial_primitives(cfg: &ScenarioConfig) -> Result<Vec<PrimitiveState>> {
    let profiles = cfg.initial.compiled()?;
    let grid = cfg.grid.grid()?;
    grid.centers()
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let v: Vec<f64> = profiles.iter().map(|p| p.eval(x)).collect::<Result<_>>()?;
            let p = PrimitiveState::new([v[0], v[1]], [v[2], v[3]], [v[4], v[5]]);
            p.check_admissible()
                .map_err(|e| Error::Invalid(format!("initial state in cell {i} (x = {x}): {e}")))?;
            Ok(p)
        })
        .collect()
}

fn initial_evolved(cfg: &ScenarioConfig) -> Result<Vec<EvolvedState>> {
    let model = cfg.potential.model()?;
    initial_primitives(cfg)?
        .iter()
        .enumerate()
        .map(|(i, p)| {
            primitive_to_evolved(&model, p).map_err(|e| Error::Step {
                time: 0.0,
                cell: i,
                cause: Box::new(e),
            })
        })
        .collect()
}

fn snapshot_table(cfg: &ScenarioConfig, traj: &Trajectory, index: usize) -> Result<Table> {
    let grid = cfg.grid.grid()?;
    let snap = &traj.snapshots[index];
    let mut t = Table::new(&[
        "x", "rho1", "rho2", "u1", "u2", "s1", "s2", "K1", "K2", "theta1", "theta2",
    ]);
    for (i, (p, e)) in snap.primitive.iter().zip(&snap.evolved).enumerate() {
        let th = snap.theta[i];
        t.push(
            [
                grid.center(i),
                p.rho[0],
                p.rho[1],
                p.u[0],
                p.u[1],
                p.s[0],
                p.s[1],
                e.k[0],
                e.k[1],
                th[0],
                th[1],
            ]
            .map(Cell::from)
            .into(),
        );
    }
    Ok(t)
}

fn simulate(cfg: &ScenarioConfig, out: &Path) -> Result<RunSummary> {
    let sim = cfg.simulation()?;
    let traj = integrate(&sim, &initial_evolved(cfg)?)?;
    let mut files = Vec::new();
    let mut index = Table::new(&["index", "t", "file"]);
    for k in 0..traj.snapshots.len() {
        let name = format!("snapshot_{k:05}.csv");
        snapshot_table(cfg, &traj, k)?.write(out, &name)?;
        index.push(vec![k.into(), traj.snapshots[k].t.into(), name.as_str().into()]);
        files.push(name);
    }
    index.write(out, "snapshots.csv")?;
    files.push("snapshots.csv".into());
    let mut reports = Table::new(&[
        "t",
        "dt",
        "max_speed",
        "mass1",
        "mass2",
        "impulse",
        "momentum",
        "energy",
        "entropy",
        "min_eig_A",
    ]);
    for r in &traj.reports {
        reports.push(
            [
                r.t,
                r.dt,
                r.max_speed,
                r.mass[0],
                r.mass[1],
                r.impulse,
                r.momentum,
                r.energy,
                r.entropy,
                r.min_eig_a,
            ]
            .map(Cell::from)
            .into(),
        );
    }
    reports.write(out, "reports.csv")?;
    files.push("reports.csv".into());
    Ok(RunSummary { files })
}

fn hyperbolicity_map(cfg: &ScenarioConfig, out: &Path) -> Result<RunSummary> {
    let model = cfg.potential.model()?;
    let grid = cfg.hyperbolicity.grid()?;
    let mut t = Table::new(&[
        "rho1",
        "rho2",
        "w",
        "min_eig_A",
        "ineq1",
        "ineq2",
        "ineq3",
        "lambda1",
        "lambda2",
        "lambda3",
        "lambda4",
        "hyperbolic",
    ]);
    for r in map_hyperbolic_region(&model, &grid) {
        let ineq = r.inequalities.map_or([f64::NAN; 3], |c| c.as_array().map(|q| q.value));
        let speeds = r.speeds.unwrap_or([f64::NAN; 4]);
        let mut row: Vec<Cell> = vec![
            r.state.rho[0].into(),
            r.state.rho[1].into(),
            r.state.w().into(),
            r.min_eig_a.into(),
        ];
        row.extend(ineq.map(Cell::from));
        row.extend(speeds.map(Cell::from));
        row.push(r.hyperbolic.into());
        t.push(row);
    }
    t.write(out, "hyperbolicity.csv")?;
    let mut files = vec!["hyperbolicity.csv".to_string()];
    if let Some(c) = &cfg.hyperbolicity.critical {
        let s = [cfg.hyperbolicity.s1, cfg.hyperbolicity.s2];
        let found = critical_relative_velocity(&model, [c.rho1, c.rho2], s, c.w_max, c.samples)?;
        let mut ct = Table::new(&[
            "rho1",
            "rho2",
            "w_max",
            "found",
            "w_star",
            "min_eig_below",
            "min_eig_above",
        ]);
        let (w, lo, hi) = found.map_or((f64::NAN, f64::NAN, f64::NAN), |f| {
            (f.w_star, f.min_eig_below, f.min_eig_above)
        });
        ct.push(vec![
            c.rho1.into(),
            c.rho2.into(),
            c.w_max.into(),
            found.is_some().into(),
            w.into(),
            lo.into(),
            hi.into(),
        ]);
        ct.write(out, "critical.csv")?;
        files.push("critical.csv".into());
    }
    Ok(RunSummary { files })
}

/// Random field sets and sample points drawn from one seeded stream.
pub fn gibbs_samples(seed: u64, field_sets: usize, points: usize) -> Vec<(TrigField, Vec<(f64, f64)>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..field_sets)
        .map(|_| {
            let field = TrigField::random(&mut rng);
            let pts = (0..points)
                .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
                .collect();
            (field, pts)
        })
        .collect()
}

struct GibbsRows {
    points: Vec<Vec<Cell>>,
    study: ConvergenceStudy,
}

fn gibbs_field(cfg: &ScenarioConfig, set: usize, field: &TrigField, pts: &[(f64, f64)]) -> Result<GibbsRows> {
    let model = cfg.potential.model()?;
    let closures = cfg.closures()?;
    let steps = &cfg.gibbs.steps;
    let mut study = ConvergenceStudy {
        h: steps.clone(),
        combination: Vec::new(),
        identities: Default::default(),
        energy_rate: Vec::new(),
        scale: 0.0,
    };
    let mut rows = Vec::new();
    for &h in steps {
        let (mut comb, mut ids, mut rate) = (0.0f64, [0.0f64; 6], 0.0f64);
        for &(t, x) in pts {
            let g = gibbs_residual(&model, &closures, field, t, x, h)?;
            let ap = appendix_identities(&model, &closures, field, t, x, h)?;
            comb = comb.max(g.combination.abs());
            rate = rate.max(ap.energy_rate.abs());
            study.scale = study.scale.max(g.scale);
            for k in 0..6 {
                ids[k] = ids[k].max(ap.residuals[k].abs());
                study.scale = study.scale.max(ap.scales[k]);
            }
            let mut row: Vec<Cell> = vec![set.into(), t.into(), x.into(), h.into()];
            row.extend([g.e, g.m[0], g.m[1], g.b[0], g.b[1], g.s, g.combination, g.scale].map(Cell::from));
            row.extend(ap.residuals.map(Cell::from));
            row.push(ap.energy_rate.into());
            rows.push(row);
        }
        study.combination.push(comb);
        for k in 0..6 {
            study.identities[k].push(ids[k]);
        }
        study.energy_rate.push(rate);
    }
    Ok(GibbsRows { points: rows, study })
}

fn verify_gibbs(cfg: &ScenarioConfig, out: &Path, seed: u64) -> Result<RunSummary> {
    let samples = gibbs_samples(seed, cfg.gibbs.field_sets, cfg.gibbs.points);
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(samples.len());
    let chunk = samples.len().div_ceil(workers);
    let results: Vec<Result<GibbsRows>> = std::thread::scope(|scope| {
        let handles: Vec<_> = samples
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                scope.spawn(move || {
                    part.iter()
                        .enumerate()
                        .map(|(j, (f, pts))| gibbs_field(cfg, c * chunk + j, f, pts))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("gibbs worker panicked"))
            .collect()
    });
    let mut header = vec![
        "field",
        "t",
        "x",
        "h",
        "E",
        "M1",
        "M2",
        "B1",
        "B2",
        "S",
        "combination",
        "scale",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    header.extend(IDENTITY_NAMES.iter().map(|n| format!("identity_{n}")));
    header.push("energy_rate".into());
    let mut points = Table::new(&header);
    let mut conv_header = vec![
        "field".to_string(),
        "h".into(),
        "combination".into(),
        "ratio_combination".into(),
    ];
    conv_header.extend(IDENTITY_NAMES.iter().map(|n| format!("identity_{n}")));
    conv_header.extend(["energy_rate".into(), "scale".into()]);
    let mut conv = Table::new(&conv_header);
    for (set, r) in results.into_iter().enumerate() {
        let r = r?;
        for row in r.points {
            points.push(row);
        }
        let ratios = r.study.ratios(&r.study.combination);
        for (k, &h) in r.study.h.iter().enumerate() {
            let ratio = if k == 0 { f64::NAN } else { ratios[k - 1] };
            let mut row: Vec<Cell> = vec![set.into(), h.into(), r.study.combination[k].into(), ratio.into()];
            row.extend((0..6).map(|i| Cell::from(r.study.identities[i][k])));
            row.extend([r.study.energy_rate[k], r.study.scale].map(Cell::from));
            conv.push(row);
        }
    }
    points.write(out, "gibbs_points.csv")?;
    conv.write(out, "gibbs_convergence.csv")?;
    Ok(RunSummary {
        files: vec!["gibbs_points.csv".into(), "gibbs_convergence.csv".into()],
    })
}

fn fick_relax(cfg: &ScenarioConfig, out: &Path) -> Result<RunSummary> {
    let mut sim = cfg.simulation()?;
    sim.output_interval = None;
    let model = cfg.potential.model()?;
    let closures = cfg.closures()?;
    let grid = cfg.grid.grid()?;
    let times = if cfg.fick.sample_times.is_empty() {
        vec![cfg.run.t_end]
    } else {
        cfg.fick.sample_times.clone()
    };
    let mut cells = initial_evolved(cfg)?;
    let mut primitive = initial_primitives(cfg)?;
    let mut t_now = 0.0;
    let mut table = Table::new(&["t", "relative_residual", "grad_mu_norm", "theta_deviation"]);
    for &t in &times {
        if t > t_now {
            sim.t_end = t - t_now;
            let traj = integrate(&sim, &cells).map_err(|e| shift_time(e, t_now))?;
            let last = traj.final_snapshot();
            cells = last.evolved.clone();
            primitive = last.primitive.clone();
            t_now = t;
        }
        let r = fick_residual(
            &model,
            &closures,
            &grid,
            &primitive,
            cfg.run.theta0,
            cfg.fick.max_theta_deviation,
        )?;
        table.push(
            [t, r.relative, r.grad_mu_norm, r.theta_deviation]
                .map(Cell::from)
                .into(),
        );
    }
    table.write(out, "fick.csv")?;
    Ok(RunSummary {
        files: vec!["fick.csv".into()],
    })
}

fn shift_time(e: Error, offset: f64) -> Error {
    match e {
        Error::Step { time, cell, cause } => Error::Step {
            time: time + offset,
            cell,
            cause,
        },
        Error::StepSize { time, cell, value } => Error::StepSize {
            time: time + offset,
            cell,
            value,
        },
        other => other,
    }
}

fn reduce_check(cfg: &ScenarioConfig, out: &Path) -> Result<RunSummary> {
    let r = single_fluid_reduction(&cfg.reduction()?)?;
    let mut t = Table::new(&["n", "l1_rho", "l1_u", "phase_mismatch", "order_rho", "order_u"]);
    for (k, row) in r.rows.iter().enumerate() {
        let (o_rho, o_u) = if k == 0 {
            (f64::NAN, f64::NAN)
        } else {
            (r.order_rho[k - 1], r.order_u[k - 1])
        };
        t.push(vec![
            row.n.into(),
            row.l1_rho.into(),
            row.l1_u.into(),
            row.phase_mismatch.into(),
            o_rho.into(),
            o_u.into(),
        ]);
    }
    t.write(out, "reduction.csv")?;
    Ok(RunSummary {
        files: vec!["reduction.csv".into()],
    })
}

fn write_manifest(
    cmd: Subcommand,
    cfg: &ScenarioConfig,
    out: &Path,
    seed: u64,
    started: Instant,
    summary: &RunSummary,
) -> Result<()> {
    let manifest = json!({
        "subcommand": cmd.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "files": summary.files,
        "config": cfg,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Invalid(e.to_string()))?;
    write_atomic(out, "run.json", text.as_bytes())
}

/// Where and when a numerical failure happened, if the error records it.
pub fn failure_location(e: &Error) -> (Option<f64>, Option<usize>) {
    match e {
        Error::Step { time, cell, .. } | Error::StepSize { time, cell, .. } => (Some(*time), Some(*cell)),
        _ => (None, None),
    }
}

fn write_diagnostics(cmd: Subcommand, out: &Path, e: &Error) -> Result<()> {
    let (time, cell) = failure_location(e);
    let diag = json!({
        "subcommand": cmd.name(),
        "error": e.to_string(),
        "time": time,
        "cell": cell,
    });
    let text = serde_json::to_string_pretty(&diag).map_err(|e| Error::Invalid(e.to_string()))?;
    write_atomic(out, "diagnostics.json", text.as_bytes())
}

/// Output directory after applying the environment override.
pub fn resolve_out_dir(cli_value: PathBuf) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cli_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcommand_names_round_trip() {
        for c in Subcommand::ALL {
            assert_eq!(c.name().parse::<Subcommand>().unwrap(), c);
        }
        assert!("bogus".parse::<Subcommand>().is_err());
    }

    #[test]
    fn zero_end_time_writes_one_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("[potential]\ngamma1 = 1.4\ngamma2 = 1.6\n[grid]\ncells = 8\n").unwrap();
        let s = execute(Subcommand::Simulate, &cfg, dir.path(), 0).unwrap();
        assert_eq!(s.files, vec!["snapshot_00000.csv", "snapshots.csv", "reports.csv"]);
        let snap = std::fs::read_to_string(dir.path().join("snapshot_00000.csv")).unwrap();
        assert_eq!(snap.lines().count(), 9);
    }

    #[test]
    fn gibbs_samples_depend_only_on_seed() {
        let a = gibbs_samples(5, 2, 3);
        let b = gibbs_samples(5, 2, 3);
        assert_eq!(a[1].1, b[1].1);
        assert_ne!(gibbs_samples(6, 2, 3)[1].1, a[1].1);
    }

    #[test]
    fn step_errors_report_location() {
        let e = Error::StepSize {
            time: 0.5,
            cell: 3,
            value: -1.0,
        };
        assert_eq!(failure_location(&e), (Some(0.5), Some(3)));
        assert_eq!(
            shift_time(e, 1.0),
            Error::StepSize {
                time: 1.5,
                cell: 3,
                value: -1.0
            }
        );
    }
}
