//! Slow isothermal limit: in drag-dominated flow the momentum balances
//! reduce to `∇μ = ρf/(ρ₁ρ₂)` with `μ = μ₂ − μ₁`, `μα = ∂W/∂ρα − θ₀sα` and
//! `f = −f₁`.

use crate::closures::{drag_and_heat, ClosureParams};
use crate::error::{Error, Result};
use crate::potential::{eval_potential, PotentialModel, SeparableAddedMass};
use crate::solver::{Boundary, Grid1D};
use crate::state::{dynamic_quantities, PrimitiveState};

#[derive(Clone, Debug, PartialEq)]
pub struct FickResidual {
    /// `‖∇μ − ρf/(ρ₁ρ₂)‖₂ / ‖∇μ‖₂` over the evaluated cells.
    pub relative: f64,
    pub grad_mu_norm: f64,
    /// Pointwise `∇μ − ρf/(ρ₁ρ₂)`; NaN in cells without a centred stencil.
    pub residual: Vec<f64>,
    /// `max |θα − θ₀|/θ₀`.
    pub theta_deviation: f64,
}

/// Evaluates the Fick residual on cell values, using centred differences
/// (wrapping for periodic grids, interior cells otherwise).
///
/// Fails with a precondition error when the temperatures deviate from `θ₀`
/// by more than `max_theta_deviation` (relative).
pub fn fick_residual<M: PotentialModel + ?Sized>(
    model: &M,
    closures: &ClosureParams,
    grid: &Grid1D,
    cells: &[PrimitiveState],
    theta0: f64,
    max_theta_deviation: f64,
) -> Result<FickResidual> {
    let n = cells.len();
    if n != grid.n {
        return Err(Error::Invalid(format!("expected {} cells, got {n}", grid.n)));
    }
    let mut mu = Vec::with_capacity(n);
    let mut drag = Vec::with_capacity(n);
    let mut theta_deviation = 0.0f64;
    for p in cells {
        let d = dynamic_quantities(model, p, [0.0; 2], theta0)?;
        let theta = eval_potential(model, p)?.theta;
        for th in theta {
            theta_deviation = theta_deviation.max((th - theta0).abs() / theta0);
        }
        let f = -drag_and_heat(closures, p, theta)?.f[0];
        mu.push(d.mu_diff);
        drag.push((p.rho[0] + p.rho[1]) * f / (p.rho[0] * p.rho[1]));
    }
    if !(theta_deviation <= max_theta_deviation) {
        return Err(Error::Precondition(format!(
            "flow is not near-isothermal: max |theta - theta0|/theta0 = {theta_deviation:e} exceeds {max_theta_deviation:e}"
        )));
    }
    let dx = grid.dx();
    let mut residual = vec![f64::NAN; n];
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let (l, r) = match grid.boundary {
            Boundary::Periodic => ((i + n - 1) % n, (i + 1) % n),
            Boundary::Transmissive if i == 0 || i == n - 1 => continue,
            Boundary::Transmissive => (i - 1, i + 1),
        };
        let grad = (mu[r] - mu[l]) / (2.0 * dx);
        residual[i] = grad - drag[i];
        num += residual[i] * residual[i];
        den += grad * grad;
    }
    Ok(FickResidual {
        relative: if den > 0.0 {
            (num / den).sqrt()
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        },
        grad_mu_norm: (den * dx).sqrt(),
        residual,
        theta_deviation,
    })
}

/// Rest state with entropies `s` and total pressure `p_total`, given `ρ₁`.
pub fn pressure_balanced_state(
    model: &SeparableAddedMass,
    rho1: f64,
    s: [f64; 2],
    p_total: f64,
) -> Result<PrimitiveState> {
    let [c1, c2] = model.components;
    let p2 = p_total - c1.pressure(rho1, s[0]);
    if !(p2 > 0.0) {
        return Err(Error::domain("p2", p2, "total pressure leaves no room for component 2"));
    }
    let rho2 = (p2 / c2.pressure(1.0, s[1])).powf(1.0 / c2.gamma);
    Ok(PrimitiveState::new([rho1, rho2], [0.0, 0.0], s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::ComponentParams;

    fn law() -> SeparableAddedMass {
        SeparableAddedMass::new(
            ComponentParams::new(1.1, 10.0, 0.0, 1.0),
            ComponentParams::new(1.1, 10.0, 0.0, 1.0),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn uniform_equilibrium_has_zero_residual() {
        let grid = Grid1D::new(0.0, 1.0, 8, Boundary::Periodic).unwrap();
        let p = PrimitiveState::new([1.0, 1.0], [0.2, 0.2], [0.0, 0.0]);
        let theta = eval_potential(&law(), &p).unwrap().theta[0];
        let r = fick_residual(
            &law(),
            &ClosureParams::new(10.0, 0.0).unwrap(),
            &grid,
            &vec![p; 8],
            theta,
            0.01,
        )
        .unwrap();
        assert_eq!(r.relative, 0.0);
        assert!(r.residual.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hot_state_violates_precondition() {
        let grid = Grid1D::new(0.0, 1.0, 8, Boundary::Periodic).unwrap();
        let p = PrimitiveState::new([1.0, 1.0], [0.0, 0.0], [0.0, 0.0]);
        let err = fick_residual(&law(), &ClosureParams::conservative(), &grid, &vec![p; 8], 100.0, 0.05).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn balanced_state_has_requested_pressure() {
        let m = law();
        let p = pressure_balanced_state(&m, 0.7, [0.0, 0.1], 3.0).unwrap();
        let total = m.components[0].pressure(p.rho[0], 0.0) + m.components[1].pressure(p.rho[1], 0.1);
        assert!((total - 3.0).abs() < 1e-13);
        assert!(pressure_balanced_state(&m, 10.0, [0.0, 0.0], 1.0).is_err());
    }
}
