//! Primitive and evolved state representations and the dynamic quantities
//! `Kα`, `Rα`, `θα`, `μα` built from them.

use crate::error::Result;
use crate::potential::{check_densities, eval_at, var, PotentialModel, ThermoVars};
use crate::roots::{expand_bracket, safeguarded_newton};

/// `(ρα, uα, sα)` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimitiveState {
    pub rho: [f64; 2],
    pub u: [f64; 2],
    pub s: [f64; 2],
}

impl PrimitiveState {
    pub fn new(rho: [f64; 2], u: [f64; 2], s: [f64; 2]) -> Self {
        Self { rho, u, s }
    }

    /// Relative velocity `w = u₂ − u₁`.
    pub fn w(&self) -> f64 {
        self.u[1] - self.u[0]
    }

    /// Same state seen from a frame moving at `−c`.
    pub fn boosted(&self, c: f64) -> Self {
        Self {
            u: [self.u[0] + c, self.u[1] + c],
            ..*self
        }
    }

    pub fn check_admissible(&self) -> Result<()> {
        check_densities(self.rho)
    }
}

/// `(ρα, Kα, sα)`, the unknowns carried by the solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolvedState {
    pub rho: [f64; 2],
    pub k: [f64; 2],
    pub s: [f64; 2],
}

impl EvolvedState {
    pub fn new(rho: [f64; 2], k: [f64; 2], s: [f64; 2]) -> Self {
        Self { rho, k, s }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicQuantities {
    /// `Rα = ½uα² − ∂W/∂ρα − Ωα`.
    pub r: [f64; 2],
    pub k: [f64; 2],
    pub theta: [f64; 2],
    /// `μα = ∂W/∂ρα − θ₀·sα`.
    pub mu: [f64; 2],
    /// `μ₂ − μ₁`.
    pub mu_diff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureAggregates {
    pub density: f64,
    pub momentum: f64,
    pub velocity: f64,
}

/// `Kα = uα − (−1)^α (1/ρα) ∂W/∂w`, so `K₁ = u₁ + W_w/ρ₁` and `K₂ = u₂ − W_w/ρ₂`.
pub fn primitive_to_evolved<M: PotentialModel + ?Sized>(model: &M, p: &PrimitiveState) -> Result<EvolvedState> {
    p.check_admissible()?;
    let d_w = model.gradient(&ThermoVars::from(p))[var::W];
    Ok(EvolvedState {
        rho: p.rho,
        k: impulse_velocities(p, d_w),
        s: p.s,
    })
}

pub(crate) fn impulse_velocities(p: &PrimitiveState, d_w: f64) -> [f64; 2] {
    [p.u[0] + d_w / p.rho[0], p.u[1] - d_w / p.rho[1]]
}

/// Maximum number of bracket doublings in velocity recovery.
pub const RECOVERY_MAX_DOUBLINGS: usize = 40;

/// Residual tolerance of velocity recovery, relative to `max(1, |K₁|, |K₂|)`.
pub const RECOVERY_TOL: f64 = 1e-12;

/// Recovers `(u₁, u₂)` from `(K₁, K₂)` by solving
/// `K₂ − K₁ = w − (1/ρ₁ + 1/ρ₂)·∂W/∂w(w)` for `w`.
pub fn evolved_to_primitive<M: PotentialModel + ?Sized>(model: &M, e: &EvolvedState) -> Result<PrimitiveState> {
    check_densities(e.rho)?;
    let inv_sum = 1.0 / e.rho[0] + 1.0 / e.rho[1];
    let target = e.k[1] - e.k[0];
    let tol = RECOVERY_TOL * 1f64.max(e.k[0].abs()).max(e.k[1].abs());
    let at = |w: f64| ThermoVars::new(e.rho, e.s, w);
    let defect = |w: f64| w - inv_sum * model.gradient(&at(w))[var::W] - target;

    let w = {
        let first = defect(target);
        if first.abs() <= tol {
            target
        } else {
            let bracket = expand_bracket(
                defect,
                target,
                target.abs() + 1.0,
                RECOVERY_MAX_DOUBLINGS,
                "velocity recovery",
            )?;
            safeguarded_newton(
                |w| {
                    let x = at(w);
                    let g = model.gradient(&x)[var::W];
                    let h = model.hessian(&x)[(var::W, var::W)];
                    (w - inv_sum * g - target, 1.0 - inv_sum * h)
                },
                bracket,
                tol,
                200,
                "velocity recovery",
            )?
        }
    };
    let d_w = model.gradient(&at(w))[var::W];
    let u1 = e.k[0] - d_w / e.rho[0];
    Ok(PrimitiveState {
        rho: e.rho,
        u: [u1, u1 + w],
        s: e.s,
    })
}

/// `Rα`, `Kα`, `θα` and the chemical potentials at reference temperature `θ₀`.
pub fn dynamic_quantities<M: PotentialModel + ?Sized>(
    model: &M,
    p: &PrimitiveState,
    omega: [f64; 2],
    theta0: f64,
) -> Result<DynamicQuantities> {
    let t = eval_at(model, &ThermoVars::from(p))?;
    let r = [0, 1].map(|a| 0.5 * p.u[a] * p.u[a] - t.d_rho(a) - omega[a]);
    let mu = [0, 1].map(|a| t.d_rho(a) - theta0 * p.s[a]);
    Ok(DynamicQuantities {
        r,
        k: impulse_velocities(p, t.d_w()),
        theta: t.theta,
        mu,
        mu_diff: mu[1] - mu[0],
    })
}

pub fn mixture_aggregates(p: &PrimitiveState) -> MixtureAggregates {
    let density = p.rho[0] + p.rho[1];
    let momentum = p.rho[0] * p.u[0] + p.rho[1] * p.u[1];
    MixtureAggregates {
        density,
        momentum,
        velocity: momentum / density,
    }
}
