//! Finite-volume method of lines for the dissipative two-fluid system in one
//! space dimension.
//!
//! Each cell carries `(ρ₁, ρ₂, K₁, K₂, ρ₁s₁, ρ₂s₂)`:
//!
//! ```text
//! ∂t ρα      + ∂x(ραuα)      = 0
//! ∂t Kα      + ∂x(Kαuα − Rα) = θα ∂x sα + fα/ρα
//! ∂t (ραsα)  + ∂x(ραsαuα)    = −(fα(uα − u) + qα)/θα
//! ```
//!
//! Entropy is carried in the conservative form `ραsα`, which is equivalent to
//! the advective form for smooth solutions and makes the discrete total
//! entropy change exactly equal to the (non-negative) production.
//!
//! Conservative fluxes use the Rusanov flux with the largest characteristic
//! speed of the two neighbours; `θα ∂x sα` uses central differences of cell
//! values. Time stepping is Heun's SSP-RK2.
//!
//! Discontinuous data is accepted, but the nonconservative product makes the
//! limit of such runs scheme dependent.

use std::sync::Arc;

use crate::closures::{drag_and_heat, entropy_sources, ClosureParams};
use crate::error::{Error, Result};
use crate::hyperbolicity::{speeds_closed_form, CharacteristicSpeeds};
use crate::potential::{eval_potential, PotentialModel, MIN_DENSITY};
use crate::state::{evolved_to_primitive, impulse_velocities, mixture_aggregates, EvolvedState, PrimitiveState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Zero-gradient ghost cells.
    Transmissive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn new(x_lo: f64, x_hi: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if n < 4 {
            return Err(Error::Invalid(format!("cells must be at least 4, got {n}")));
        }
        if !(x_lo.is_finite() && x_hi.is_finite() && x_hi > x_lo) {
            return Err(Error::Invalid(format!(
                "domain [{x_lo}, {x_hi}] must be finite with x_hi > x_lo"
            )));
        }
        Ok(Self {
            x_lo,
            x_hi,
            n,
            boundary,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    fn neighbours(&self, i: usize) -> (usize, usize) {
        let n = self.n;
        match self.boundary {
            Boundary::Periodic => ((i + n - 1) % n, (i + 1) % n),
            Boundary::Transmissive => (i.saturating_sub(1), (i + 1).min(n - 1)),
        }
    }
}

/// Time-independent external potential `Ω(x)` of one component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExternalPotential {
    Zero,
    /// `Ω = slope·x`.
    Linear {
        slope: f64,
    },
    /// `Ω = amplitude·sin(wavenumber·x)`.
    Sine {
        amplitude: f64,
        wavenumber: f64,
    },
}

impl ExternalPotential {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ExternalPotential::Zero => 0.0,
            ExternalPotential::Linear { slope } => slope * x,
            ExternalPotential::Sine { amplitude, wavenumber } => amplitude * (wavenumber * x).sin(),
        }
    }

    pub fn gradient(&self, x: f64) -> f64 {
        match *self {
            ExternalPotential::Zero => 0.0,
            ExternalPotential::Linear { slope } => slope,
            ExternalPotential::Sine { amplitude, wavenumber } => amplitude * wavenumber * (wavenumber * x).cos(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExternalPotential::Zero)
    }
}

#[derive(Clone)]
pub struct SimulationConfig {
    pub grid: Grid1D,
    pub model: Arc<dyn PotentialModel>,
    pub closures: ClosureParams,
    pub omega: [ExternalPotential; 2],
    pub cfl: f64,
    pub t_end: f64,
    /// Snapshot spacing in time; `None` keeps only the initial and final states.
    pub output_interval: Option<f64>,
    /// Reference temperature for chemical potentials in diagnostics.
    pub theta0: f64,
}

impl std::fmt::Debug for SimulationConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimulationConfig")
            .field("grid", &self.grid)
            .field("closures", &self.closures)
            .field("omega", &self.omega)
            .field("cfl", &self.cfl)
            .field("t_end", &self.t_end)
            .field("output_interval", &self.output_interval)
            .field("theta0", &self.theta0)
            .finish_non_exhaustive()
    }
}

impl SimulationConfig {
    pub fn new(grid: Grid1D, model: Arc<dyn PotentialModel>) -> Self {
        Self {
            grid,
            model,
            closures: ClosureParams::default(),
            omega: [ExternalPotential::Zero; 2],
            cfl: 0.45,
            t_end: 0.0,
            output_interval: None,
            theta0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::Invalid(format!("cfl must lie in (0, 0.9], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Invalid(format!(
                "t_end must be finite and non-negative, got {}",
                self.t_end
            )));
        }
        if let Some(dt) = self.output_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Invalid(format!("output interval must be positive, got {dt}")));
            }
        }
        if !(self.theta0 > 0.0 && self.theta0.is_finite()) {
            return Err(Error::Invalid(format!("theta0 must be positive, got {}", self.theta0)));
        }
        ClosureParams::new(self.closures.k, self.closures.kappa)?;
        Ok(())
    }
}

/// Integrated cell vector `(ρ₁, ρ₂, K₁, K₂, ρ₁s₁, ρ₂s₂)`.
pub type CellVector = [f64; 6];

pub fn to_cell_vector(e: &EvolvedState) -> CellVector {
    [e.rho[0], e.rho[1], e.k[0], e.k[1], e.rho[0] * e.s[0], e.rho[1] * e.s[1]]
}

pub fn from_cell_vector(v: &CellVector) -> EvolvedState {
    EvolvedState::new([v[0], v[1]], [v[2], v[3]], [v[4] / v[0], v[5] / v[1]])
}

/// Time derivatives of one cell's integrated variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellRates {
    pub rho: [f64; 2],
    pub k: [f64; 2],
    pub rho_s: [f64; 2],
}

impl From<CellVector> for CellRates {
    fn from(v: CellVector) -> Self {
        Self {
            rho: [v[0], v[1]],
            k: [v[2], v[3]],
            rho_s: [v[4], v[5]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStepReport {
    pub t: f64,
    /// Step that produced this state (0 for the initial state).
    pub dt: f64,
    pub max_speed: f64,
    pub mass: [f64; 2],
    /// `Σ ραKα Δx`.
    pub impulse: f64,
    /// `Σ ραuα Δx`.
    pub momentum: f64,
    /// `Σ (Σα(½ραuα² + ραΩα) + U) Δx`.
    pub energy: f64,
    /// `Σ Σα ραsα Δx`.
    pub entropy: f64,
    pub min_eig_a: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub evolved: Vec<EvolvedState>,
    pub primitive: Vec<PrimitiveState>,
    pub theta: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub reports: Vec<TimeStepReport>,
}

impl Trajectory {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the initial snapshot")
    }
}

struct CellEval {
    primitive: PrimitiveState,
    flux: CellVector,
    source: CellVector,
    theta: [f64; 2],
    speed: f64,
    min_eig_a: f64,
    /// Linearized relaxation rate of drag and heat exchange.
    stiffness: f64,
    energy: f64,
}

fn evaluate_cell(cfg: &SimulationConfig, v: &CellVector, x: f64, t: f64, cell: usize) -> Result<CellEval> {
    let fail = |cause: Error| Error::Step {
        time: t,
        cell,
        cause: Box::new(cause),
    };
    let e = from_cell_vector(v);
    let p = evolved_to_primitive(cfg.model.as_ref(), &e).map_err(fail)?;
    let thermo = eval_potential(cfg.model.as_ref(), &p).map_err(fail)?;
    let theta = thermo.theta;
    let summary = speeds_closed_form(cfg.model.as_ref(), &p).map_err(fail)?;
    let speeds = match summary.speeds {
        CharacteristicSpeeds::Hyperbolic(s) => s,
        CharacteristicSpeeds::NotHyperbolic { min_eig_a } => {
            return Err(fail(Error::domain(
                "min_eig_a",
                min_eig_a,
                "the symmetric system is not positive definite (hyperbolicity lost)",
            )))
        }
    };
    let speed = speeds.iter().chain(p.u.iter()).fold(0.0f64, |m, s| m.max(s.abs()));

    let omega = [cfg.omega[0].value(x), cfg.omega[1].value(x)];
    let k = impulse_velocities(&p, thermo.d_w());
    let mut flux = [0.0; 6];
    let mut source = [0.0; 6];
    let forces = drag_and_heat(&cfg.closures, &p, theta).map_err(fail)?;
    let s_dot = entropy_sources(&forces, &p, theta).map_err(fail)?;
    let mut energy = thermo.internal_energy;
    for a in 0..2 {
        let r = 0.5 * p.u[a] * p.u[a] - thermo.d_rho(a) - omega[a];
        flux[a] = p.rho[a] * p.u[a];
        flux[2 + a] = k[a] * p.u[a] - r;
        flux[4 + a] = v[4 + a] * p.u[a];
        source[2 + a] = forces.f[a] / p.rho[a];
        source[4 + a] = p.rho[a] * s_dot[a];
        energy += p.rho[a] * (0.5 * p.u[a] * p.u[a] + omega[a]);
    }
    let (k_drag, kappa) = (cfg.closures.k, cfg.closures.kappa);
    let stiffness = k_drag * (p.rho[0] / theta[1] + p.rho[1] / theta[0]) / (p.rho[0] * p.rho[1])
        + kappa
            * (0..2)
                .map(|a| (thermo.hessian[(2 + a, 2 + a)] / (p.rho[a] * p.rho[a] * theta[a].powi(3))).abs())
                .sum::<f64>();
    Ok(CellEval {
        primitive: p,
        flux,
        source,
        theta,
        speed,
        min_eig_a: summary.min_eig_a,
        stiffness,
        energy,
    })
}

struct Evaluation {
    rates: Vec<CellVector>,
    cells: Vec<CellEval>,
    max_speed: f64,
    max_stiffness: f64,
}

fn evaluate(cfg: &SimulationConfig, cells: &[CellVector], t: f64) -> Result<Evaluation> {
    let grid = &cfg.grid;
    let dx = grid.dx();
    let evals = cells
        .iter()
        .enumerate()
        .map(|(i, v)| evaluate_cell(cfg, v, grid.center(i), t, i))
        .collect::<Result<Vec<_>>>()?;
    let n = grid.n;

    // Interface i carries the flux between cell i and its right neighbour.
    let interface = |i: usize| -> CellVector {
        let (_, r) = grid.neighbours(i);
        let (a, b) = (&evals[i], &evals[r]);
        let (ua, ub) = (&cells[i], &cells[r]);
        let speed = a.speed.max(b.speed);
        std::array::from_fn(|m| 0.5 * (a.flux[m] + b.flux[m]) - 0.5 * speed * (ub[m] - ua[m]))
    };
    let right: Vec<CellVector> = (0..n).map(interface).collect();
    let rates = (0..n)
        .map(|i| {
            let (l, r) = grid.neighbours(i);
            let left_flux = match grid.boundary {
                Boundary::Transmissive if i == 0 => evals[0].flux,
                _ => right[l],
            };
            let right_flux = match grid.boundary {
                Boundary::Transmissive if i == n - 1 => evals[n - 1].flux,
                _ => right[i],
            };
            let e = &evals[i];
            let mut rate: CellVector = std::array::from_fn(|m| -(right_flux[m] - left_flux[m]) / dx + e.source[m]);
            for a in 0..2 {
                let ds = (evals[r].primitive.s[a] - evals[l].primitive.s[a]) / (2.0 * dx);
                rate[2 + a] += e.theta[a] * ds;
            }
            rate
        })
        .collect();
    let max_speed = evals.iter().fold(0.0f64, |m, e| m.max(e.speed));
    let max_stiffness = evals.iter().fold(0.0f64, |m, e| m.max(e.stiffness));
    Ok(Evaluation {
        rates,
        cells: evals,
        max_speed,
        max_stiffness,
    })
}

/// Semi-discrete right-hand side at time `t`.
pub fn assemble_rhs(cfg: &SimulationConfig, cells: &[EvolvedState]) -> Result<Vec<CellRates>> {
    check_cell_count(cfg, cells.len())?;
    let v: Vec<CellVector> = cells.iter().map(to_cell_vector).collect();
    Ok(evaluate(cfg, &v, 0.0)?.rates.into_iter().map(CellRates::from).collect())
}

fn check_cell_count(cfg: &SimulationConfig, n: usize) -> Result<()> {
    if n != cfg.grid.n {
        return Err(Error::Invalid(format!("expected {} cells, got {n}", cfg.grid.n)));
    }
    Ok(())
}

fn check_stage(cells: &[CellVector], t: f64) -> Result<()> {
    for (i, v) in cells.iter().enumerate() {
        for a in 0..2 {
            if !(v[a] >= MIN_DENSITY) {
                return Err(Error::StepSize {
                    time: t,
                    cell: i,
                    value: v[a],
                });
            }
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::Step {
                time: t,
                cell: i,
                cause: Box::new(Error::domain("cell vector", f64::NAN, "non-finite value after stage")),
            });
        }
    }
    Ok(())
}

fn axpy(cells: &[CellVector], dt: f64, rates: &[CellVector]) -> Vec<CellVector> {
    cells
        .iter()
        .zip(rates)
        .map(|(c, r)| std::array::from_fn(|m| c[m] + dt * r[m]))
        .collect()
}

/// Heun step using precomputed rates at `cells`.
fn heun(
    cfg: &SimulationConfig,
    cells: &[CellVector],
    rates: &[CellVector],
    t: f64,
    dt: f64,
) -> Result<Vec<CellVector>> {
    let stage = axpy(cells, dt, rates);
    check_stage(&stage, t + dt)?;
    let second = evaluate(cfg, &stage, t + dt)?;
    let next: Vec<CellVector> = cells
        .iter()
        .zip(&stage)
        .zip(&second.rates)
        .map(|((c, s), r)| std::array::from_fn(|m| 0.5 * c[m] + 0.5 * (s[m] + dt * r[m])))
        .collect();
    check_stage(&next, t + dt)?;
    Ok(next)
}

/// One SSP-RK2 step of size `dt` from time `t`.
pub fn step(cfg: &SimulationConfig, cells: &[EvolvedState], t: f64, dt: f64) -> Result<Vec<EvolvedState>> {
    check_cell_count(cfg, cells.len())?;
    let v: Vec<CellVector> = cells.iter().map(to_cell_vector).collect();
    let first = evaluate(cfg, &v, t)?;
    let limit = stable_dt(cfg, &first);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Invalid(format!(
            "dt = {dt:e} exceeds the stability limit {limit:e}"
        )));
    }
    Ok(heun(cfg, &v, &first.rates, t, dt)?
        .iter()
        .map(from_cell_vector)
        .collect())
}

/// `CFL·min(Δx/max|λ|, 1/rate)`, where `rate` bounds the linearized drag and
/// heat-exchange relaxation; the second bound is inactive when `k = κ = 0`.
fn stable_dt(cfg: &SimulationConfig, eval: &Evaluation) -> f64 {
    let advective = if eval.max_speed > 0.0 {
        cfg.grid.dx() / eval.max_speed
    } else {
        f64::INFINITY
    };
    let relaxation = if eval.max_stiffness > 0.0 {
        1.0 / eval.max_stiffness
    } else {
        f64::INFINITY
    };
    cfg.cfl * advective.min(relaxation)
}

fn report(cfg: &SimulationConfig, cells: &[CellVector], eval: &Evaluation, t: f64, dt: f64) -> TimeStepReport {
    let dx = cfg.grid.dx();
    let mut r = TimeStepReport {
        t,
        dt,
        max_speed: eval.max_speed,
        mass: [0.0; 2],
        impulse: 0.0,
        momentum: 0.0,
        energy: 0.0,
        entropy: 0.0,
        min_eig_a: f64::INFINITY,
    };
    for (v, e) in cells.iter().zip(&eval.cells) {
        for a in 0..2 {
            r.mass[a] += v[a] * dx;
            r.entropy += v[4 + a] * dx;
            r.impulse += v[a] * v[2 + a] * dx;
        }
        r.momentum += mixture_aggregates(&e.primitive).momentum * dx;
        r.energy += e.energy * dx;
        r.min_eig_a = r.min_eig_a.min(e.min_eig_a);
    }
    r
}

fn snapshot(cells: &[CellVector], eval: &Evaluation, t: f64) -> Snapshot {
    Snapshot {
        t,
        evolved: cells.iter().map(from_cell_vector).collect(),
        primitive: eval.cells.iter().map(|e| e.primitive).collect(),
        theta: eval.cells.iter().map(|e| e.theta).collect(),
    }
}

/// Integrates from `t = 0` to `cfg.t_end`. Every step is reported; snapshots
/// are taken at multiples of the output interval and at the end time.
pub fn integrate(cfg: &SimulationConfig, initial: &[EvolvedState]) -> Result<Trajectory> {
    cfg.validate()?;
    check_cell_count(cfg, initial.len())?;
    let mut cells: Vec<CellVector> = initial.iter().map(to_cell_vector).collect();
    check_stage(&cells, 0.0)?;
    let mut t = 0.0;
    let mut dt_taken = 0.0;
    let interval = cfg.output_interval.unwrap_or(f64::INFINITY);
    let mut outputs = 1u64;
    let output_time = |k: u64| {
        let t = k as f64 * interval;
        if t >= cfg.t_end * (1.0 - 1e-12) {
            cfg.t_end
        } else {
            t
        }
    };
    let mut next_output = output_time(outputs);
    let mut traj = Trajectory {
        snapshots: Vec::new(),
        reports: Vec::new(),
    };
    loop {
        let eval = evaluate(cfg, &cells, t)?;
        traj.reports.push(report(cfg, &cells, &eval, t, dt_taken));
        let done = t >= cfg.t_end;
        if traj.snapshots.is_empty() || done || t >= next_output {
            traj.snapshots.push(snapshot(&cells, &eval, t));
            while next_output <= t && next_output < cfg.t_end {
                outputs += 1;
                next_output = output_time(outputs);
            }
        }
        if done {
            break;
        }
        let mut dt = stable_dt(cfg, &eval);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Step {
                time: t,
                cell: 0,
                cause: Box::new(Error::domain("dt", dt, "no finite stable time step")),
            });
        }
        let target = next_output.min(cfg.t_end);
        let land = t + dt >= target - 1e-12 * target.abs();
        if land {
            dt = target - t;
        }
        cells = heun(cfg, &cells, &eval.rates, t, dt)?;
        t = if land { target } else { t + dt };
        dt_taken = dt;
    }
    Ok(traj)
}
