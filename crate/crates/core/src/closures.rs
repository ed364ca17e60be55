//! Interphase drag and heat exchange written in terms of coldness `1/θα`,
//! with the resulting entropy sources and entropy production.

use crate::error::{Error, Result};
use crate::state::{mixture_aggregates, PrimitiveState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureParams {
    /// Drag coefficient `k ≥ 0`.
    pub k: f64,
    /// Heat-exchange coefficient `κ ≥ 0`.
    pub kappa: f64,
}

impl ClosureParams {
    pub fn new(k: f64, kappa: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::Invalid("k must be finite and non-negative".into()));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Invalid("kappa must be finite and non-negative".into()));
        }
        Ok(Self { k, kappa })
    }

    pub fn conservative() -> Self {
        Self { k: 0.0, kappa: 0.0 }
    }
}

impl Default for ClosureParams {
    fn default() -> Self {
        Self::conservative()
    }
}

/// Drag forces `fα` and heat supplies `qα` per unit volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipationForces {
    pub f: [f64; 2],
    pub q: [f64; 2],
}

fn check_temperatures(theta: [f64; 2]) -> Result<()> {
    for (alpha, &t) in theta.iter().enumerate() {
        if !(t > 0.0) {
            return Err(Error::domain(
                format!("theta{}", alpha + 1),
                t,
                "temperature must be positive",
            ));
        }
    }
    Ok(())
}

/// `f₁ = k((u₂−u)/θ₂ − (u₁−u)/θ₁)`, `f₂ = −f₁`, `q₁ = κ(1/θ₂ − 1/θ₁)`, `q₂ = −q₁`,
/// with `u` the mixture velocity.
pub fn drag_and_heat(params: &ClosureParams, p: &PrimitiveState, theta: [f64; 2]) -> Result<DissipationForces> {
    check_temperatures(theta)?;
    let u = mixture_aggregates(p).velocity;
    let f1 = params.k * ((p.u[1] - u) / theta[1] - (p.u[0] - u) / theta[0]);
    let q1 = params.kappa * (1.0 / theta[1] - 1.0 / theta[0]);
    Ok(DissipationForces {
        f: [f1, -f1],
        q: [q1, -q1],
    })
}

/// Rates `dαsα/dt = −(fα(uα − u) + qα)/(ραθα)` of the specific entropies.
pub fn entropy_sources(forces: &DissipationForces, p: &PrimitiveState, theta: [f64; 2]) -> Result<[f64; 2]> {
    check_temperatures(theta)?;
    let u = mixture_aggregates(p).velocity;
    Ok([0, 1].map(|a| -(forces.f[a] * (p.u[a] - u) + forces.q[a]) / (p.rho[a] * theta[a])))
}

/// Entropy production `−Σα [(fα/θα)(uα − u) + qα/θα]`.
pub fn entropy_production(forces: &DissipationForces, p: &PrimitiveState, theta: [f64; 2]) -> Result<f64> {
    check_temperatures(theta)?;
    let u = mixture_aggregates(p).velocity;
    Ok(-(0..2)
        .map(|a| forces.f[a] / theta[a] * (p.u[a] - u) + forces.q[a] / theta[a])
        .sum::<f64>())
}
