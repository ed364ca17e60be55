//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twofluid::closures::{drag_and_heat, entropy_production, ClosureParams};
use twofluid::hyperbolicity::{
    assemble_symmetric_system, characteristic_speeds, check_stability_inequalities, critical_relative_velocity,
    legendre_potential, legendre_transform, rest_frame_velocities, speeds_closed_form,
};
use twofluid::potential::{
    eval_potential, fd_step, var, AddedMass, ComponentParams, PotentialModel, SeparableAddedMass, ThermoVars,
};
use twofluid::solver::{integrate, Boundary, Grid1D, SimulationConfig, Trajectory};
use twofluid::state::{dynamic_quantities, evolved_to_primitive, primitive_to_evolved, EvolvedState, PrimitiveState};
use twofluid::verify::gibbs::drag_work_identity;
use twofluid::verify::reduction::ReductionConfig;
use twofluid::verify::{
    conservation_drift, entropy_monotonicity, fick_residual, gibbs_convergence, pressure_balanced_state,
    single_fluid_reduction, ConvergenceStudy, TrigField,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Check = Result<Outcome, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn random_component(rng: &mut ChaCha8Rng) -> ComponentParams {
    ComponentParams::new(
        rng.gen_range(1.1..2.0),
        rng.gen_range(0.5..3.0),
        rng.gen_range(-0.2..0.2),
        rng.gen_range(0.5..2.0),
    )
}

fn random_law(rng: &mut ChaCha8Rng, a_max: f64) -> SeparableAddedMass {
    let c1 = random_component(rng);
    let c2 = random_component(rng);
    SeparableAddedMass::new(c1, c2, rng.gen_range(0.0..a_max)).unwrap()
}

fn random_rest_state(rng: &mut ChaCha8Rng, w_max: f64) -> PrimitiveState {
    let rho = [rng.gen_range(0.3..3.0), rng.gen_range(0.3..3.0)];
    let w = rng.gen_range(-w_max..=w_max);
    let s = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
    PrimitiveState::new(rho, rest_frame_velocities(rho, w), s)
}

// 1 and 2 share the manufactured-solution studies.
struct GibbsRun {
    studies: Vec<ConvergenceStudy>,
    elapsed: Duration,
}

fn gibbs_run() -> Result<GibbsRun, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let closures = ClosureParams::new(1.5, 0.7).map_err(err)?;
    let steps = [1e-2, 5e-3, 2.5e-3];
    let mut studies = Vec::new();
    for _ in 0..20 {
        let law = random_law(&mut rng, 1.5);
        let field = TrigField::random(&mut rng);
        let points: Vec<(f64, f64)> = (0..4)
            .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        studies.push(gibbs_convergence(&law, &closures, &field, &points, &steps).map_err(err)?);
    }
    Ok(GibbsRun {
        studies,
        elapsed: start.elapsed(),
    })
}

fn criterion_1(run: &GibbsRun) -> Check {
    let worst = run
        .studies
        .iter()
        .flat_map(|s| s.ratios(&s.combination))
        .fold(f64::INFINITY, f64::min);
    let secs = run.elapsed.as_secs_f64();
    Ok(outcome(
        worst >= 3.6 && secs < 10.0,
        format!("min Richardson ratio {worst:.4} over 20 field sets (need >= 3.6), runtime {secs:.3} s (need < 10 s)"),
    ))
}

fn criterion_2(run: &GibbsRun) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let closures = ClosureParams::new(2.0, 1.0).map_err(err)?;
    let law = random_law(&mut rng, 1.0);
    let mut worst_a = 0.0f64;
    for _ in 0..100_000 {
        let mut p = random_rest_state(&mut rng, 1.0);
        p = p.boosted(rng.gen_range(-3.0..3.0));
        let theta = eval_potential(&law, &p).map_err(err)?.theta;
        let f = drag_and_heat(&closures, &p, theta).map_err(err)?.f;
        let (res, scale) = drag_work_identity(f, p.u);
        if scale > 0.0 {
            worst_a = worst_a.max(res.abs() / scale);
        }
    }
    let mut worst_order = [f64::INFINITY; 5];
    for s in &run.studies {
        for k in 1..6 {
            for o in s.orders(&s.identities[k]) {
                worst_order[k - 1] = worst_order[k - 1].min(o);
            }
        }
    }
    let orders_ok = worst_order.iter().all(|o| *o >= 1.85);
    let shown: Vec<String> = worst_order
        .iter()
        .zip(["b", "c", "d", "e", "f"])
        .map(|(o, n)| format!("{n}={o:.3}"))
        .collect();
    Ok(outcome(
        worst_a <= 1e-14 && orders_ok,
        format!(
            "identity a max |res|/scale {worst_a:.2e} at 1e5 states (need <= 1e-14); min orders {} (need >= 1.85)",
            shown.join(" ")
        ),
    ))
}

// States where the Legendre map is a well-conditioned transform: A is
// positive definite and no characteristic speed is near zero (at a zero
// speed ∂²L/∂ρ² is singular).
fn random_invertible_state(rng: &mut ChaCha8Rng, law: &SeparableAddedMass) -> Result<PrimitiveState, String> {
    loop {
        let p = random_rest_state(rng, 0.3).boosted(rng.gen_range(-1.0..1.0));
        if let Some(speeds) = speeds_closed_form(law, &p).map_err(err)?.speeds.speeds() {
            let slowest = speeds.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            let fastest = speeds.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if slowest >= 0.1 * fastest {
                return Ok(p);
            }
        }
    }
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let law = random_law(&mut rng, 1.0);
        let p = random_invertible_state(&mut rng, &law)?;
        let lv = legendre_transform(&law, &p).map_err(err)?;
        let k = dynamic_quantities(&law, &p, [0.0; 2], 1.0).map_err(err)?.k;
        let exact = Vector4::new(-p.rho[0], -p.rho[1], k[0], k[1]);
        let u = lv.as_vector();
        let mut fd = Vector4::zeros();
        for m in 0..4 {
            let h = fd_step(u[m]);
            let (mut up, mut um) = (u, u);
            up[m] += h;
            um[m] -= h;
            let gp = legendre_potential(&law, p.s, &up, p.rho).map_err(err)?;
            let gm = legendre_potential(&law, p.s, &um, p.rho).map_err(err)?;
            fd[m] = (gp - gm) / (2.0 * h);
        }
        worst = worst.max((fd - exact).amax() / exact.amax());
    }
    Ok(outcome(
        worst <= 1e-6,
        format!("max relative error of (dG/dsigma, dG/dj) vs (-rho, K) {worst:.2e} at 1e3 states (need <= 1e-6)"),
    ))
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut asym_a, mut asym_b) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let law = random_law(&mut rng, 1.0);
        let p = random_rest_state(&mut rng, 0.3);
        let sys = assemble_symmetric_system(&law, &p).map_err(err)?;
        asym_a = asym_a.max(sys.asymmetry_a);
        asym_b = asym_b.max(sys.asymmetry_b);
    }
    let (mut checked, mut violations, mut worst_min) = (0usize, 0usize, f64::INFINITY);
    for _ in 0..1000 {
        let law = random_law(&mut rng, 2.0);
        let p = random_rest_state(&mut rng, 0.0);
        if !check_stability_inequalities(&law, &p).map_err(err)?.all_hold() {
            continue;
        }
        checked += 1;
        let sys = assemble_symmetric_system(&law, &p).map_err(err)?;
        worst_min = worst_min.min(sys.min_eig_a());
        if !(sys.min_eig_a() > 0.0) {
            violations += 1;
        }
    }
    Ok(outcome(
        asym_a <= 1e-6 && asym_b <= 1e-6 && violations == 0 && checked > 0,
        format!(
            "max asymmetry A {asym_a:.2e}, B {asym_b:.2e} at 1e3 states (need <= 1e-6); \
             {checked} states at w = 0 satisfy the inequalities, smallest min-eig(A) {worst_min:.3e}, {violations} not positive"
        ),
    ))
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_closed, mut worst_fd) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let law = random_law(&mut rng, f64::MIN_POSITIVE)
            .with_constant_added_mass(0.0)
            .map_err(err)?;
        let rho = [rng.gen_range(0.3..3.0), rng.gen_range(0.3..3.0)];
        let s = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let c = [0, 1].map(|a| law.components[a].sound_speed_sq(rho[a], s[a]).sqrt());
        // Subsonic in each phase, where the symmetric form exists.
        let p = PrimitiveState::new(rho, [0, 1].map(|a| c[a] * rng.gen_range(-0.9..0.9)), s);
        let t = eval_potential(&law, &p).map_err(err)?;
        let mut expect: Vec<f64> = (0..2)
            .flat_map(|a| {
                let c = (p.rho[a] * t.hessian[(var::rho(a), var::rho(a))]).sqrt();
                [p.u[a] - c, p.u[a] + c]
            })
            .collect();
        expect.sort_by(f64::total_cmp);
        let scale = expect.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let closed = speeds_closed_form(&law, &p)
            .map_err(err)?
            .speeds
            .speeds()
            .ok_or("closed form not hyperbolic")?;
        let sys = assemble_symmetric_system(&law, &p).map_err(err)?;
        let fd = characteristic_speeds(&sys)
            .map_err(err)?
            .speeds()
            .ok_or("not hyperbolic")?;
        for k in 0..4 {
            worst_closed = worst_closed.max((closed[k] - expect[k]).abs() / scale);
            worst_fd = worst_fd.max((fd[k] - expect[k]).abs() / scale);
        }
    }
    Ok(outcome(
        worst_closed <= 1e-8 && worst_fd <= 1e-8,
        format!(
            "max relative speed error at a = 0: closed-form route {worst_closed:.2e}, finite-difference route {worst_fd:.2e} at 1e3 states (need <= 1e-8)"
        ),
    ))
}

fn criterion_6() -> Check {
    let c1 = ComponentParams::new(1.4, 1.0, 0.0, 1.0);
    let c2 = ComponentParams::new(1.6, 1.0, 0.0, 1.0);
    let mut lines = Vec::new();
    let mut pass = true;
    for rho in [[1.0, 1.0], [0.5, 2.0], [2.0, 1.5]] {
        let mut runs = Vec::new();
        for _ in 0..3 {
            let law = SeparableAddedMass::new(c1, c2, 1.0).map_err(err)?;
            runs.push(critical_relative_velocity(&law, rho, [0.0; 2], 20.0, 400).map_err(err)?);
        }
        let Some(first) = runs[0] else {
            pass = false;
            lines.push(format!("rho {rho:?}: no loss of hyperbolicity below w = 20"));
            continue;
        };
        let spread = runs
            .iter()
            .map(|r| r.map_or(f64::INFINITY, |r| (r.w_star - first.w_star).abs() / first.w_star))
            .fold(0.0f64, f64::max);
        let sign_change = first.min_eig_below > 0.0 && first.min_eig_above < 0.0;
        pass &= spread <= 1e-6 && sign_change;
        lines.push(format!(
            "rho {rho:?}: w* = {:.9}, spread {spread:.1e}, min-eig {:.3e} -> {:.3e}",
            first.w_star, first.min_eig_below, first.min_eig_above
        ));
    }
    Ok(outcome(pass, lines.join("; ")))
}

fn bisection_oracle(law: &SeparableAddedMass, e: &EvolvedState) -> f64 {
    let inv_sum = 1.0 / e.rho[0] + 1.0 / e.rho[1];
    let target = e.k[1] - e.k[0];
    let defect = |w: f64| w - inv_sum * law.gradient(&ThermoVars::new(e.rho, e.s, w))[var::W] - target;
    let mut width = 1.0;
    while defect(-width) > 0.0 || defect(width) < 0.0 {
        width *= 2.0;
    }
    let (mut lo, mut hi) = (-width, width);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if defect(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_oracle, mut worst_closed) = (0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let law = random_law(&mut rng, 5.0);
        let rho = [rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0)];
        let p = PrimitiveState::new(
            rho,
            [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
            [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
        );
        let e = primitive_to_evolved(&law, &p).map_err(err)?;
        let q = evolved_to_primitive(&law, &e).map_err(err)?;
        let scale = 1f64.max(e.k[0].abs()).max(e.k[1].abs());
        let w_oracle = bisection_oracle(&law, &e);
        worst_oracle = worst_oracle.max((q.w() - w_oracle).abs() / scale);
        let AddedMass::Constant(a) = law.added_mass else {
            return Err("expected a constant added mass".into());
        };
        let w_closed = (e.k[1] - e.k[0]) / (1.0 + a * (1.0 / rho[0] + 1.0 / rho[1]));
        worst_closed = worst_closed.max((q.w() - w_closed).abs() / scale);
    }
    Ok(outcome(
        worst_oracle <= 1e-12 && worst_closed <= 1e-12,
        format!(
            "max |w - w_bisection| {worst_oracle:.2e}, max |w - w_closed_form| {worst_closed:.2e} at 1e5 states, relative to max(1, |K|) (need <= 1e-12)"
        ),
    ))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let r = single_fluid_reduction(&ReductionConfig::default()).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let min_order = r.order_rho.iter().copied().fold(f64::INFINITY, f64::min);
    let errors: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("N={} {:.3e}", row.n, row.l1_rho))
        .collect();
    Ok(outcome(
        min_order >= 0.8 && secs < 60.0,
        format!(
            "L1(rho) errors {}; orders {:?} (need >= 0.8); runtime {secs:.1} s (need < 60 s)",
            errors.join(", "),
            r.order_rho.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    ))
}

fn conservation_run(n: usize) -> Result<Trajectory, String> {
    let law = SeparableAddedMass::new(
        ComponentParams::new(1.4, 1.0, 0.0, 1.0),
        ComponentParams::new(1.6, 2.0, 0.0, 0.8),
        0.5,
    )
    .map_err(err)?;
    let grid = Grid1D::new(0.0, 4.0, n, Boundary::Periodic).map_err(err)?;
    let mut cfg = SimulationConfig::new(grid, Arc::new(law.clone()));
    cfg.closures = ClosureParams::new(0.5, 0.2).map_err(err)?;
    cfg.t_end = 1.0;
    let tau = std::f64::consts::TAU / 4.0;
    let cells = grid
        .centers()
        .into_iter()
        .map(|x| {
            let (s, c) = (tau * x).sin_cos();
            let p = PrimitiveState::new(
                [1.0 + 0.1 * s, 0.8 + 0.05 * c],
                [0.5 + 0.05 * s, 0.5 - 0.05 * c],
                [0.05 * c, 0.0],
            );
            primitive_to_evolved(&law, &p)
        })
        .collect::<twofluid::Result<Vec<_>>>()
        .map_err(err)?;
    integrate(&cfg, &cells).map_err(err)
}

fn criterion_9(coarse: &Trajectory, fine: &Trajectory) -> Check {
    let dc = conservation_drift(&coarse.reports);
    let df = conservation_drift(&fine.reports);
    let mass = dc
        .mass
        .iter()
        .chain(&df.mass)
        .map(|d| d.relative)
        .fold(0.0f64, f64::max);
    let ratio_i = dc.impulse.relative / df.impulse.relative;
    let ratio_e = dc.energy.relative / df.energy.relative;
    let pass = mass <= 1e-12
        && dc.impulse.relative <= 1e-3
        && dc.energy.relative <= 1e-3
        && df.impulse.relative <= 0.5e-3
        && df.energy.relative <= 0.5e-3
        && ratio_i >= 1.9
        && ratio_e >= 1.9;
    Ok(outcome(
        pass,
        format!(
            "mass drift {mass:.2e} (need <= 1e-12); N=400 impulse {:.3e} energy {:.3e} (need <= 1e-3); \
             N=800 impulse {:.3e} energy {:.3e} (need <= 5e-4); drift ratios {ratio_i:.3} and {ratio_e:.3} (need >= 1.9, first order)",
            dc.impulse.relative, dc.energy.relative, df.impulse.relative, df.energy.relative
        ),
    ))
}

fn criterion_10(dissipative: &[(&str, &Trajectory)]) -> Check {
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, traj) in dissipative {
        let e = entropy_monotonicity(&traj.reports);
        pass &= e.nondecreasing(1e-12) && e.steps > 0;
        lines.push(format!(
            "{name}: worst step change {:.2e} (scale {:.2})",
            e.worst_decrease, e.scale
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let law = random_law(&mut rng, 1.0);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = random_rest_state(&mut rng, 1.0).boosted(rng.gen_range(-1.0..1.0));
        let theta = eval_potential(&law, &p).map_err(err)?.theta;
        let forces = drag_and_heat(&ClosureParams::conservative(), &p, theta).map_err(err)?;
        worst = worst.max(entropy_production(&forces, &p, theta).map_err(err)?.abs());
    }
    pass &= worst <= 1e-14;
    lines.push(format!("k = kappa = 0: max |production| {worst:.1e} (need <= 1e-14)"));
    Ok(outcome(pass, lines.join("; ")))
}

struct FickRun {
    trajectory: Trajectory,
    law: SeparableAddedMass,
    grid: Grid1D,
    closures: ClosureParams,
    theta0: f64,
}

fn fick_run() -> Result<FickRun, String> {
    let c = ComponentParams::new(1.1, 10.0, 0.0, 1.0);
    let law = SeparableAddedMass::new(c, c, 0.5).map_err(err)?;
    let grid = Grid1D::new(0.0, 1.0, 100, Boundary::Periodic).map_err(err)?;
    let closures = ClosureParams::new(100.0, 0.0).map_err(err)?;
    let mut cfg = SimulationConfig::new(grid, Arc::new(law.clone()));
    cfg.closures = closures;
    cfg.t_end = 4.0;
    cfg.output_interval = Some(1.0);
    let p_total = 2.0 * c.pressure(1.0, 0.0);
    let cells = grid
        .centers()
        .into_iter()
        .map(|x| {
            let p = pressure_balanced_state(&law, 1.0 + 0.2 * (std::f64::consts::TAU * x).sin(), [0.0; 2], p_total)?;
            primitive_to_evolved(&law, &p)
        })
        .collect::<twofluid::Result<Vec<_>>>()
        .map_err(err)?;
    let theta0 = eval_potential(&law, &PrimitiveState::new([1.0, 1.0], [0.0; 2], [0.0; 2]))
        .map_err(err)?
        .theta[0];
    Ok(FickRun {
        trajectory: integrate(&cfg, &cells).map_err(err)?,
        law,
        grid,
        closures,
        theta0,
    })
}

fn criterion_11(run: &FickRun) -> Check {
    let mut residuals = Vec::new();
    for snap in run.trajectory.snapshots.iter().filter(|s| s.t >= 2.0 - 1e-12) {
        let r = fick_residual(&run.law, &run.closures, &run.grid, &snap.primitive, run.theta0, 0.05).map_err(err)?;
        residuals.push((snap.t, r.relative));
    }
    let pass = residuals.len() == 3
        && residuals.iter().all(|(_, r)| *r <= 0.05)
        && residuals.windows(2).all(|w| w[1].1 < w[0].1);
    let shown: Vec<String> = residuals.iter().map(|(t, r)| format!("t={t:.1} {r:.4e}")).collect();
    Ok(outcome(
        pass,
        format!("relative residuals {} (need <= 5e-2 and decreasing)", shown.join(", ")),
    ))
}

const DETERMINISM_CONFIG: &str = r#"
[potential]
gamma1 = 1.4
gamma2 = 1.6
cv2 = 2.0
added_mass = 0.5

[closures]
k = 0.5
kappa = 0.2

[grid]
cells = 64

[initial]
rho1 = "1 + 0.1 * math::sin(2 * pi * x)"
rho2 = 0.8
u1 = "0.2 * math::cos(2 * pi * x)"
s1 = { breakpoints = [0.5], values = [0.0, 0.05] }

[run]
t_end = 0.2
output_interval = 0.1

[hyperbolicity]
rho1 = { min = 0.5, max = 2.0, count = 5 }
rho2 = { min = 0.5, max = 2.0, count = 5 }
w = { min = 0.0, max = 2.0, count = 5 }
critical = { rho1 = 1.0, rho2 = 1.0, w_max = 5.0 }

[gibbs]
field_sets = 3
points = 2

[fick]
sample_times = [0.1, 0.2]
max_theta_deviation = 10.0

[reduce]
resolutions = [32, 64]
reference_cells = 256
t_end = 0.05
"#;

fn csv_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(err)? {
        let path = entry.map_err(err)?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            files.push((name, std::fs::read(&path).map_err(err)?));
        }
    }
    files.sort();
    Ok(files)
}

fn criterion_12() -> Check {
    let work = tempfile::tempdir().map_err(err)?;
    let config = work.path().join("scenario.toml");
    std::fs::write(&config, DETERMINISM_CONFIG).map_err(err)?;
    let mut compared = 0;
    for cmd in [
        "simulate",
        "hyperbolicity-map",
        "verify-gibbs",
        "fick-relax",
        "reduce-check",
    ] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = work.path().join(format!("{cmd}-{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_twofluid"))
                .arg(cmd)
                .arg("--config")
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .args(["--seed", "42"])
                .env_remove("TWOFLUID_OUT_DIR")
                .status()
                .map_err(err)?;
            if !status.success() {
                return Ok(outcome(false, format!("{cmd} exited with {status}")));
            }
            outputs.push(csv_files(&out)?);
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            return Ok(outcome(
                false,
                format!("{cmd}: CSV output differs between identical runs"),
            ));
        }
        compared += outputs[0].len();
    }
    Ok(outcome(
        true,
        format!("{compared} CSV files byte-identical across two runs of all five subcommands"),
    ))
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Check)> = Vec::new();
    let gibbs = gibbs_run();
    let with_gibbs = |f: fn(&GibbsRun) -> Check| match &gibbs {
        Ok(run) => f(run),
        Err(e) => Err(e.clone()),
    };
    results.push((1, "dynamic Gibbs identity", with_gibbs(criterion_1)));
    results.push((2, "constituent identities", with_gibbs(criterion_2)));
    results.push((3, "Legendre identities", criterion_3()));
    results.push((4, "symmetric form", criterion_4()));
    results.push((5, "decoupled characteristic speeds", criterion_5()));
    results.push((6, "hyperbolicity loss", criterion_6()));
    results.push((7, "velocity recovery", criterion_7()));
    results.push((8, "single-fluid reduction", criterion_8()));
    let coarse = conservation_run(400);
    let fine = conservation_run(800);
    let fick = fick_run();
    results.push((
        9,
        "conservation",
        match (&coarse, &fine) {
            (Ok(c), Ok(f)) => criterion_9(c, f),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        },
    ));
    results.push((
        10,
        "entropy inequality",
        match (&coarse, &fine, &fick) {
            (Ok(c), Ok(f), Ok(k)) => criterion_10(&[
                ("conservation N=400", c),
                ("conservation N=800", f),
                ("Fick relaxation", &k.trajectory),
            ]),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => Err(e.clone()),
        },
    ));
    results.push((
        11,
        "Fick law",
        match &fick {
            Ok(run) => criterion_11(run),
            Err(e) => Err(e.clone()),
        },
    ));
    results.push((12, "determinism", criterion_12()));

    let mut failures = 0;
    for (n, name, r) in &results {
        let (pass, detail) = match r {
            Ok(o) => (o.pass, o.detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("[{}] {n:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed", results.len() - failures, results.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
