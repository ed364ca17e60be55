//! Single-fluid limit: two identical, decoupled phases moving together must
//! each follow the Euler equations in enthalpy form
//! `du/dt + ∂x(h + Ω) = θ ∂xs`. The reference solution uses fourth-order
//! central differences with RK4 on a fine grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::potential::{ComponentParams, SeparableAddedMass};
use crate::solver::{integrate, Boundary, ExternalPotential, Grid1D, SimulationConfig};
use crate::state::{primitive_to_evolved, PrimitiveState};

/// `ρ = background + amplitude·exp(−((x − center)/width)²)` with uniform
/// velocity and entropy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseProfile {
    pub background: f64,
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub velocity: f64,
    pub entropy: f64,
}

impl PulseProfile {
    pub fn density(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        self.background + self.amplitude * (-z * z).exp()
    }
}

impl Default for PulseProfile {
    fn default() -> Self {
        Self {
            background: 1.0,
            amplitude: 0.05,
            center: 0.5,
            width: 0.1,
            velocity: 0.0,
            entropy: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionConfig {
    pub component: ComponentParams,
    pub omega: ExternalPotential,
    pub boundary: Boundary,
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub resolutions: Vec<usize>,
    pub reference_cells: usize,
    pub profile: PulseProfile,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            component: ComponentParams::new(1.4, 1.0, 0.0, 1.0),
            omega: ExternalPotential::Zero,
            boundary: Boundary::Periodic,
            x_lo: 0.0,
            x_hi: 1.0,
            t_end: 0.15,
            cfl: 0.45,
            resolutions: vec![200, 400, 800],
            reference_cells: 3200,
            profile: PulseProfile::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionRow {
    pub n: usize,
    pub l1_rho: f64,
    pub l1_u: f64,
    /// `max |ρ₁ − ρ₂| + max |u₁ − u₂|`; identical phases must stay identical.
    pub phase_mismatch: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionResult {
    pub rows: Vec<ReductionRow>,
    /// Observed orders between successive resolutions.
    pub order_rho: Vec<f64>,
    pub order_u: Vec<f64>,
}

fn orders(rows: &[ReductionRow], pick: impl Fn(&ReductionRow) -> f64) -> Vec<f64> {
    rows.windows(2)
        .map(|p| (pick(&p[0]) / pick(&p[1])).ln() / (p[1].n as f64 / p[0].n as f64).ln())
        .collect()
}

/// Point values `(ρ, u, s)` of the reference solution at cell centres.
pub fn single_fluid_reference(cfg: &ReductionConfig) -> Result<Vec<[f64; 3]>> {
    let n = cfg.reference_cells;
    let grid = Grid1D::new(cfg.x_lo, cfg.x_hi, n, cfg.boundary)?;
    let dx = grid.dx();
    let c = cfg.component;
    let xs = grid.centers();
    let mut y: Vec<[f64; 3]> = xs
        .iter()
        .map(|&x| [cfg.profile.density(x), cfg.profile.velocity, cfg.profile.entropy])
        .collect();
    let idx = |i: isize| -> usize {
        match cfg.boundary {
            Boundary::Periodic => i.rem_euclid(n as isize) as usize,
            Boundary::Transmissive => i.clamp(0, n as isize - 1) as usize,
        }
    };
    let d = |f: &[f64], i: usize| {
        let i = i as isize;
        (-f[idx(i + 2)] + 8.0 * f[idx(i + 1)] - 8.0 * f[idx(i - 1)] + f[idx(i - 2)]) / (12.0 * dx)
    };
    let enthalpy = |rho: f64, s: f64| c.gamma / (c.gamma - 1.0) * c.pressure(rho, s) / rho;
    let rhs = |y: &[[f64; 3]]| -> Vec<[f64; 3]> {
        let mass: Vec<f64> = y.iter().map(|v| v[0] * v[1]).collect();
        let u: Vec<f64> = y.iter().map(|v| v[1]).collect();
        let s: Vec<f64> = y.iter().map(|v| v[2]).collect();
        let h: Vec<f64> = y.iter().map(|v| enthalpy(v[0], v[2])).collect();
        (0..n)
            .map(|i| {
                let theta = c.specific_energy(y[i][0], y[i][2]) / c.cv;
                let ds = d(&s, i);
                [
                    -d(&mass, i),
                    -u[i] * d(&u, i) - d(&h, i) - cfg.omega.gradient(xs[i]) + theta * ds,
                    -u[i] * ds,
                ]
            })
            .collect()
    };
    let combine = |y: &[[f64; 3]], k: &[[f64; 3]], a: f64| -> Vec<[f64; 3]> {
        y.iter()
            .zip(k)
            .map(|(v, r)| std::array::from_fn(|m| v[m] + a * r[m]))
            .collect()
    };
    let mut t = 0.0;
    while t < cfg.t_end {
        let speed = y
            .iter()
            .map(|v| v[1].abs() + c.sound_speed_sq(v[0], v[2]).sqrt())
            .fold(0.0f64, f64::max);
        let mut dt = 0.5 * dx / speed;
        if t + dt >= cfg.t_end {
            dt = cfg.t_end - t;
        }
        let k1 = rhs(&y);
        let k2 = rhs(&combine(&y, &k1, 0.5 * dt));
        let k3 = rhs(&combine(&y, &k2, 0.5 * dt));
        let k4 = rhs(&combine(&y, &k3, dt));
        for i in 0..n {
            for m in 0..3 {
                y[i][m] += dt / 6.0 * (k1[i][m] + 2.0 * k2[i][m] + 2.0 * k3[i][m] + k4[i][m]);
            }
        }
        if !y.iter().all(|v| v[0] > 0.0 && v.iter().all(|x| x.is_finite())) {
            return Err(Error::Step {
                time: t,
                cell: y.iter().position(|v| !(v[0] > 0.0)).unwrap_or(0),
                cause: Box::new(Error::domain(
                    "rho",
                    f64::NAN,
                    "reference solution left the admissible set",
                )),
            });
        }
        t += dt;
    }
    Ok(y)
}

/// Runs the two-fluid solver at each resolution and compares phase 1 with
/// the reference solution averaged onto the coarse cells.
pub fn single_fluid_reduction(cfg: &ReductionConfig) -> Result<ReductionResult> {
    for &n in &cfg.resolutions {
        if n == 0 || !cfg.reference_cells.is_multiple_of(n) {
            return Err(Error::Invalid(format!(
                "resolution {n} must divide the reference resolution {}",
                cfg.reference_cells
            )));
        }
    }
    let reference = single_fluid_reference(cfg)?;
    let model = Arc::new(SeparableAddedMass::new(cfg.component, cfg.component, 0.0)?);
    let mut rows = Vec::new();
    for &n in &cfg.resolutions {
        let grid = Grid1D::new(cfg.x_lo, cfg.x_hi, n, cfg.boundary)?;
        let mut sim = SimulationConfig::new(grid, model.clone());
        sim.omega = [cfg.omega; 2];
        sim.cfl = cfg.cfl;
        sim.t_end = cfg.t_end;
        let initial = grid
            .centers()
            .into_iter()
            .map(|x| {
                let pr = &cfg.profile;
                let rho = pr.density(x);
                primitive_to_evolved(
                    model.as_ref(),
                    &PrimitiveState::new([rho, rho], [pr.velocity; 2], [pr.entropy; 2]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let traj = integrate(&sim, &initial)?;
        let last = traj.final_snapshot();
        let ratio = cfg.reference_cells / n;
        let dx = grid.dx();
        let mut row = ReductionRow {
            n,
            l1_rho: 0.0,
            l1_u: 0.0,
            phase_mismatch: 0.0,
        };
        let (mut drho, mut du) = (0.0f64, 0.0f64);
        for (i, p) in last.primitive.iter().enumerate() {
            let block = &reference[i * ratio..(i + 1) * ratio];
            let rho_ref = block.iter().map(|v| v[0]).sum::<f64>() / ratio as f64;
            let u_ref = block.iter().map(|v| v[1]).sum::<f64>() / ratio as f64;
            row.l1_rho += (p.rho[0] - rho_ref).abs() * dx;
            row.l1_u += (p.u[0] - u_ref).abs() * dx;
            drho = drho.max((p.rho[0] - p.rho[1]).abs());
            du = du.max((p.u[0] - p.u[1]).abs());
        }
        row.phase_mismatch = drho + du;
        rows.push(row);
    }
    Ok(ReductionResult {
        order_rho: orders(&rows, |r| r.l1_rho),
        order_u: orders(&rows, |r| r.l1_u),
        rows,
    })
}
