//! Partial Legendre transform of the mechanical Lagrangian, the symmetric
//! form `A u_t + B u_x = 0` with `u = (σ₁, σ₂, j₁, j₂)`, characteristic
//! speeds and hyperbolicity scans.
//!
//! Entropies are frozen parameters here and external potentials vanish.
//! With `L(ρ, j) = Σ jα²/(2ρα) − W(ρ₁, ρ₂, w)`, `w = j₂/ρ₂ − j₁/ρ₁`, the
//! transform is `G(σ, j) = L − Σ σαρα` with `σα = ∂L/∂ρα` at fixed `j`, so
//! that `∂G/∂σα = −ρα`, `∂G/∂jα = Kα` and `A = ∂²G/∂u²`. The conservation
//! laws `∂t(∂G/∂u) − ∂x(∂Φ/∂u) = 0` with `Φ = Σ σβ jβ` give `B = −∂²Φ/∂u²`.
//!
//! Positive definiteness of `A` is a sufficient condition and depends on the
//! frame: `A` is evaluated for the velocities stored in the state.

use nalgebra::{Cholesky, Matrix2, Matrix4, SMatrix, SymmetricEigen, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::potential::{var, PotentialModel, ThermoVars};
use crate::state::PrimitiveState;

/// Relative asymmetry above which numerically assembled matrices are rejected.
pub const ASYMMETRY_TOL: f64 = 1e-6;

/// `A` counts as positive definite when `min eig(A) > PD_TOL·‖A‖`.
pub const PD_TOL: f64 = 1e-10;

/// Relative bisection tolerance for the critical relative velocity.
pub const CRITICAL_W_RTOL: f64 = 1e-6;

/// Value, gradient and Hessian of the mechanical Lagrangian in `v = (ρ₁, ρ₂, j₁, j₂)`.
#[derive(Clone, Debug)]
struct LagrangianJet {
    value: f64,
    grad: Vector4<f64>,
    hess: Matrix4<f64>,
}

impl LagrangianJet {
    fn sigma(&self) -> [f64; 2] {
        [self.grad[0], self.grad[1]]
    }

    fn impulse(&self) -> [f64; 2] {
        [self.grad[2], self.grad[3]]
    }

    fn l_rho_rho(&self) -> Matrix2<f64> {
        self.hess.fixed_view::<2, 2>(0, 0).into_owned()
    }
}

fn lagrangian_jet<M: PotentialModel + ?Sized>(
    model: &M,
    s: [f64; 2],
    rho: [f64; 2],
    j: [f64; 2],
) -> Result<LagrangianJet> {
    let x = ThermoVars::new(rho, s, j[1] / rho[1] - j[0] / rho[0]);
    x.check_admissible()?;
    let u = [j[0] / rho[0], j[1] / rho[1]];
    let (w_val, w_grad, w_hess) = model.derivatives(&x);

    // Restriction of W to (ρ₁, ρ₂, w).
    let idx = [var::RHO1, var::RHO2, var::W];
    let g3 = nalgebra::Vector3::from_fn(|i, _| w_grad[idx[i]]);
    let h3 = nalgebra::Matrix3::from_fn(|i, k| w_hess[(idx[i], idx[k])]);

    // Chain rule through w(ρ, j).
    let dw = Vector4::new(u[0] / rho[0], -u[1] / rho[1], -1.0 / rho[0], 1.0 / rho[1]);
    let mut d2w = Matrix4::zeros();
    d2w[(0, 0)] = -2.0 * u[0] / (rho[0] * rho[0]);
    d2w[(1, 1)] = 2.0 * u[1] / (rho[1] * rho[1]);
    d2w[(0, 2)] = 1.0 / (rho[0] * rho[0]);
    d2w[(2, 0)] = d2w[(0, 2)];
    d2w[(1, 3)] = -1.0 / (rho[1] * rho[1]);
    d2w[(3, 1)] = d2w[(1, 3)];
    let mut jac = SMatrix::<f64, 3, 4>::zeros();
    jac[(0, 0)] = 1.0;
    jac[(1, 1)] = 1.0;
    jac.set_row(2, &dw.transpose());
    let grad_w = jac.transpose() * g3;
    let hess_w = jac.transpose() * h3 * jac + d2w * g3[2];

    let kinetic = 0.5 * (j[0] * u[0] + j[1] * u[1]);
    let grad_t = Vector4::new(-0.5 * u[0] * u[0], -0.5 * u[1] * u[1], u[0], u[1]);
    let mut hess_t = Matrix4::zeros();
    for a in 0..2 {
        hess_t[(a, a)] = u[a] * u[a] / rho[a];
        hess_t[(a, a + 2)] = -u[a] / rho[a];
        hess_t[(a + 2, a)] = -u[a] / rho[a];
        hess_t[(a + 2, a + 2)] = 1.0 / rho[a];
    }
    Ok(LagrangianJet {
        value: kinetic - w_val,
        grad: grad_t - grad_w,
        hess: hess_t - hess_w,
    })
}

/// Legendre variables at a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegendreVars {
    /// `σα = ∂L/∂ρα` at fixed `j`; equals `Rα − Kα·uα` when `Ω = 0`.
    pub sigma: [f64; 2],
    /// `jα = ραuα`.
    pub j: [f64; 2],
    /// `G = L − Σ σαρα`.
    pub g: f64,
}

impl LegendreVars {
    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.sigma[0], self.sigma[1], self.j[0], self.j[1])
    }
}

pub fn legendre_transform<M: PotentialModel + ?Sized>(model: &M, p: &PrimitiveState) -> Result<LegendreVars> {
    p.check_admissible()?;
    let j = [p.rho[0] * p.u[0], p.rho[1] * p.u[1]];
    let jet = lagrangian_jet(model, p.s, p.rho, j)?;
    let sigma = jet.sigma();
    Ok(LegendreVars {
        sigma,
        j,
        g: jet.value - sigma[0] * p.rho[0] - sigma[1] * p.rho[1],
    })
}

/// Inverse Legendre map: the densities with `∂L/∂ρ(ρ, j) = σ`, found by
/// Newton iteration from `guess`.
pub fn invert_legendre<M: PotentialModel + ?Sized>(
    model: &M,
    s: [f64; 2],
    sigma: [f64; 2],
    j: [f64; 2],
    guess: [f64; 2],
) -> Result<[f64; 2]> {
    let mut rho = guess;
    let mut polish = false;
    for _ in 0..80 {
        let jet = lagrangian_jet(model, s, rho, j)?;
        let sg = jet.sigma();
        let residual = Vector2::new(sg[0] - sigma[0], sg[1] - sigma[1]);
        let step = jet
            .l_rho_rho()
            .lu()
            .solve(&(-residual))
            .ok_or_else(|| Error::LegendreInversion(format!("singular ∂²L/∂ρ² at rho = {rho:?}")))?;
        let mut damping = 1.0f64;
        for a in 0..2 {
            if rho[a] + step[a] <= 0.5 * rho[a] {
                damping = damping.min(0.5 * rho[a] / step[a].abs());
            }
        }
        let rel = (0..2).map(|a| (step[a] / rho[a]).abs()).fold(0.0, f64::max);
        for a in 0..2 {
            rho[a] += damping * step[a];
        }
        if !rho.iter().all(|r| r.is_finite()) {
            break;
        }
        if polish {
            return Ok(rho);
        }
        if rel <= 1e-13 {
            polish = true;
        }
    }
    Err(Error::LegendreInversion(format!(
        "no convergence for sigma = {sigma:?}, j = {j:?} from rho = {guess:?}"
    )))
}

/// `(∂G/∂σ, ∂G/∂j) = (−ρ, K)` as a function of `u = (σ, j)`.
fn potential_gradient_at<M: PotentialModel + ?Sized>(
    model: &M,
    s: [f64; 2],
    u: &Vector4<f64>,
    guess: [f64; 2],
) -> Result<Vector4<f64>> {
    let sigma = [u[0], u[1]];
    let j = [u[2], u[3]];
    let rho = invert_legendre(model, s, sigma, j, guess)?;
    let k = lagrangian_jet(model, s, rho, j)?.impulse();
    Ok(Vector4::new(-rho[0], -rho[1], k[0], k[1]))
}

/// `G(σ, j)` through the inverse Legendre map.
pub fn legendre_potential<M: PotentialModel + ?Sized>(
    model: &M,
    s: [f64; 2],
    u: &Vector4<f64>,
    guess: [f64; 2],
) -> Result<f64> {
    let sigma = [u[0], u[1]];
    let j = [u[2], u[3]];
    let rho = invert_legendre(model, s, sigma, j, guess)?;
    let jet = lagrangian_jet(model, s, rho, j)?;
    Ok(jet.value - sigma[0] * rho[0] - sigma[1] * rho[1])
}

/// Flux `−∂Φ/∂u = −(j₁, j₂, σ₁, σ₂)` of the symmetric system.
fn symmetric_flux(u: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(-u[2], -u[3], -u[0], -u[1])
}

fn relative_asymmetry(m: &Matrix4<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        0.0
    } else {
        (m - m.transpose()).norm() / norm
    }
}

/// Jacobian by Ridders' extrapolation of central differences. The initial
/// step `3·10⁻³·max(1, |x|)` is halved until both probes stay in the domain
/// of `f` and move it by at most 5% of `max |f(x)|`; the step then shrinks
/// geometrically and the tableau entry with the smallest error estimate is
/// kept.
fn central_jacobian<F>(mut f: F, u: &Vector4<f64>) -> Result<Matrix4<f64>>
where
    F: FnMut(&Vector4<f64>) -> Result<Vector4<f64>>,
{
    const SHRINK: f64 = 1.4;
    const TABLE: usize = 10;
    let scale = f(u)?.amax();
    let mut m = Matrix4::zeros();
    for k in 0..4 {
        let mut probes = |h: f64| -> Result<(Vector4<f64>, Vector4<f64>)> {
            let (mut up, mut um) = (*u, *u);
            up[k] += h;
            um[k] -= h;
            Ok((f(&up)?, f(&um)?))
        };
        let mut h = 3e-3 * u[k].abs().max(1.0);
        let mut first = None;
        for _ in 0..60 {
            if let Ok((fp, fm)) = probes(h) {
                if (fp - fm).amax() <= 0.05 * scale {
                    first = Some((fp - fm) / (2.0 * h));
                    break;
                }
            }
            h *= 0.5;
        }
        let first =
            first.ok_or_else(|| Error::LegendreInversion(format!("no admissible difference step in direction {k}")))?;
        let mut diff = |h: f64| -> Result<Vector4<f64>> {
            let (fp, fm) = probes(h)?;
            Ok((fp - fm) / (2.0 * h))
        };
        let mut table: Vec<Vec<Vector4<f64>>> = vec![vec![first]];
        let mut best = table[0][0];
        let mut best_err = f64::INFINITY;
        for i in 1..TABLE {
            h /= SHRINK;
            let mut row = vec![diff(h)?];
            let mut fac = SHRINK * SHRINK;
            for j in 1..=i {
                let next = (row[j - 1] * fac - table[i - 1][j - 1]) / (fac - 1.0);
                fac *= SHRINK * SHRINK;
                let err = (next - row[j - 1]).amax().max((next - table[i - 1][j - 1]).amax());
                if err <= best_err {
                    best_err = err;
                    best = next;
                }
                row.push(next);
            }
            let drift = (row[i] - table[i - 1][i - 1]).amax();
            table.push(row);
            if drift >= 2.0 * best_err {
                break;
            }
        }
        m.set_column(k, &best);
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSystem {
    pub state: PrimitiveState,
    pub legendre: LegendreVars,
    /// `A = ∂²G/∂u²`, symmetrized.
    pub a: Matrix4<f64>,
    /// 1D flux Jacobian in `u`, symmetrized.
    pub b: Matrix4<f64>,
    /// Eigenvalues of `A`, ascending.
    pub a_eigenvalues: [f64; 4],
    /// `‖A − Aᵀ‖/‖A‖` before symmetrization.
    pub asymmetry_a: f64,
    pub asymmetry_b: f64,
}

impl SymmetricSystem {
    pub fn min_eig_a(&self) -> f64 {
        self.a_eigenvalues[0]
    }

    pub fn is_positive_definite(&self) -> bool {
        positive_definite(&self.a_eigenvalues)
    }
}

fn positive_definite(eigs: &[f64; 4]) -> bool {
    let norm = eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    eigs[0] > PD_TOL * norm
}

fn sorted_eigenvalues(m: &Matrix4<f64>) -> Result<[f64; 4]> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let mut e: [f64; 4] = SymmetricEigen::new(*m).eigenvalues.into();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Assembles `A` and `B` by central differences of `(−ρ, K)` and of the flux
/// with respect to `u = (σ, j)`, inverting the Legendre map by Newton.
pub fn assemble_symmetric_system<M: PotentialModel + ?Sized>(model: &M, p: &PrimitiveState) -> Result<SymmetricSystem> {
    let legendre = legendre_transform(model, p)?;
    let u = legendre.as_vector();
    let a_raw = central_jacobian(|v| potential_gradient_at(model, p.s, v, p.rho), &u)?;
    let b_raw = central_jacobian(|v| Ok(symmetric_flux(v)), &u)?;
    let asymmetry_a = relative_asymmetry(&a_raw);
    let asymmetry_b = relative_asymmetry(&b_raw);
    for (name, asym) in [("A", asymmetry_a), ("B", asymmetry_b)] {
        if !(asym <= ASYMMETRY_TOL) {
            return Err(Error::Asymmetry {
                name,
                asymmetry: asym,
                tolerance: ASYMMETRY_TOL,
            });
        }
    }
    let a = (a_raw + a_raw.transpose()) * 0.5;
    let b = (b_raw + b_raw.transpose()) * 0.5;
    Ok(SymmetricSystem {
        state: *p,
        legendre,
        a,
        b,
        a_eigenvalues: sorted_eigenvalues(&a)?,
        asymmetry_a,
        asymmetry_b,
    })
}

/// `A` in closed form from the Hessian of `L(ρ, j)`:
/// `A = [[−P, P·L_ρj], [L_jρ·P, L_jj − L_jρ·P·L_ρj]]`, `P = (L_ρρ)⁻¹`.
pub fn symmetric_matrix_closed_form<M: PotentialModel + ?Sized>(model: &M, p: &PrimitiveState) -> Result<Matrix4<f64>> {
    p.check_admissible()?;
    let j = [p.rho[0] * p.u[0], p.rho[1] * p.u[1]];
    let jet = lagrangian_jet(model, p.s, p.rho, j)?;
    let h = &jet.hess;
    let l_rr = jet.l_rho_rho();
    let l_rj: Matrix2<f64> = h.fixed_view::<2, 2>(0, 2).into_owned();
    let l_jj: Matrix2<f64> = h.fixed_view::<2, 2>(2, 2).into_owned();
    let p_inv = l_rr
        .try_inverse()
        .ok_or_else(|| Error::LegendreInversion("singular ∂²L/∂ρ²".into()))?;
    let mut a = Matrix4::zeros();
    a.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-p_inv));
    let upper = p_inv * l_rj;
    a.fixed_view_mut::<2, 2>(0, 2).copy_from(&upper);
    a.fixed_view_mut::<2, 2>(2, 0).copy_from(&upper.transpose());
    a.fixed_view_mut::<2, 2>(2, 2)
        .copy_from(&(l_jj - l_rj.transpose() * p_inv * l_rj));
    Ok((a + a.transpose()) * 0.5)
}

/// The constant flux Jacobian `−[[0, I], [I, 0]]` of the 1D symmetric system.
pub fn flux_matrix() -> Matrix4<f64> {
    let mut b = Matrix4::zeros();
    for k in 0..2 {
        b[(k, k + 2)] = -1.0;
        b[(k + 2, k)] = -1.0;
    }
    b
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CharacteristicSpeeds {
    /// Real speeds, ascending.
    Hyperbolic([f64; 4]),
    /// `A` is not positive definite.
    NotHyperbolic { min_eig_a: f64 },
}

impl CharacteristicSpeeds {
    pub fn speeds(&self) -> Option<[f64; 4]> {
        match self {
            CharacteristicSpeeds::Hyperbolic(s) => Some(*s),
            CharacteristicSpeeds::NotHyperbolic { .. } => None,
        }
    }
}

fn generalized_speeds(a: &Matrix4<f64>, b: &Matrix4<f64>, a_eigs: &[f64; 4]) -> Result<CharacteristicSpeeds> {
    if !positive_definite(a_eigs) {
        return Ok(CharacteristicSpeeds::NotHyperbolic { min_eig_a: a_eigs[0] });
    }
    let chol = Cholesky::new(*a).ok_or_else(|| Error::Eigen("Cholesky factorization of A failed".into()))?;
    let l = chol.l();
    let l_inv = l
        .solve_lower_triangular(&Matrix4::identity())
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let c = l_inv * b * l_inv.transpose();
    let c = (c + c.transpose()) * 0.5;
    Ok(CharacteristicSpeeds::Hyperbolic(sorted_eigenvalues(&c)?))
}

/// Roots of `det(B − λA) = 0` when `A` is positive definite.
pub fn characteristic_speeds(sys: &SymmetricSystem) -> Result<CharacteristicSpeeds> {
    generalized_speeds(&sys.a, &sys.b, &sys.a_eigenvalues)
}

/// Speeds and `min eig(A)` from the closed-form `A`; used inside time stepping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedSummary {
    pub speeds: CharacteristicSpeeds,
    pub min_eig_a: f64,
}

pub fn speeds_closed_form<M: PotentialModel + ?Sized>(model: &M, p: &PrimitiveState) -> Result<SpeedSummary> {
    let a = match symmetric_matrix_closed_form(model, p) {
        Ok(a) => a,
        // Singular ∂²L/∂ρ² sits exactly on the boundary of definiteness.
        Err(Error::LegendreInversion(_)) => {
            return Ok(SpeedSummary {
                speeds: CharacteristicSpeeds::NotHyperbolic { min_eig_a: 0.0 },
                min_eig_a: 0.0,
            })
        }
        Err(e) => return Err(e),
    };
    let eigs = sorted_eigenvalues(&a)?;
    Ok(SpeedSummary {
        speeds: generalized_speeds(&a, &flux_matrix(), &eigs)?,
        min_eig_a: eigs[0],
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityCheck {
    pub value: f64,
    pub holds: bool,
    /// The value is zero to rounding: the strict inequality fails at equality.
    pub boundary: bool,
}

/// The three sign conditions `∂²W/∂w² < 0`, `∂²W/∂ρ₁² > 0` and
/// `∂²W/∂ρ₁²·∂²W/∂ρ₂² − (∂²W/∂ρ₁∂ρ₂)² > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityChecks {
    pub concave_in_w: InequalityCheck,
    pub convex_in_rho1: InequalityCheck,
    pub density_determinant: InequalityCheck,
}

impl StabilityChecks {
    pub fn all_hold(&self) -> bool {
        self.concave_in_w.holds && self.convex_in_rho1.holds && self.density_determinant.holds
    }

    pub fn as_array(&self) -> [InequalityCheck; 3] {
        [self.concave_in_w, self.convex_in_rho1, self.density_determinant]
    }
}

pub fn check_stability_inequalities<M: PotentialModel + ?Sized>(
    model: &M,
    p: &PrimitiveState,
) -> Result<StabilityChecks> {
    let x = ThermoVars::from(p);
    x.check_admissible()?;
    let h = model.hessian(&x);
    let (w_ww, w_11, w_22, w_12) = (
        h[(var::W, var::W)],
        h[(var::RHO1, var::RHO1)],
        h[(var::RHO2, var::RHO2)],
        h[(var::RHO1, var::RHO2)],
    );
    let det = w_11 * w_22 - w_12 * w_12;
    let check = |value: f64, positive: bool, scale: f64| InequalityCheck {
        value,
        holds: if positive { value > 0.0 } else { value < 0.0 },
        boundary: value.abs() <= 4.0 * f64::EPSILON * scale,
    };
    Ok(StabilityChecks {
        concave_in_w: check(w_ww, false, 0.0),
        convex_in_rho1: check(w_11, true, 0.0),
        density_determinant: check(det, true, (w_11 * w_22).abs() + w_12 * w_12),
    })
}

/// Outcome of the hyperbolicity analysis at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicityReport {
    pub state: PrimitiveState,
    /// NaN when assembly failed.
    pub min_eig_a: f64,
    pub inequalities: Option<StabilityChecks>,
    pub speeds: Option<[f64; 4]>,
    pub hyperbolic: bool,
    pub failure: Option<String>,
}

/// Velocities `(u₁, u₂)` with relative velocity `w` in the frame where the
/// mixture momentum vanishes.
pub fn rest_frame_velocities(rho: [f64; 2], w: f64) -> [f64; 2] {
    let total = rho[0] + rho[1];
    [-rho[1] * w / total, rho[0] * w / total]
}

pub fn analyze_state<M: PotentialModel + ?Sized>(model: &M, p: &PrimitiveState) -> HyperbolicityReport {
    let inequalities = check_stability_inequalities(model, p).ok();
    let outcome = assemble_symmetric_system(model, p).and_then(|sys| {
        let speeds = characteristic_speeds(&sys)?;
        Ok((sys.min_eig_a(), speeds))
    });
    match outcome {
        Ok((min_eig_a, speeds)) => HyperbolicityReport {
            state: *p,
            min_eig_a,
            inequalities,
            speeds: speeds.speeds(),
            hyperbolic: speeds.speeds().is_some(),
            failure: None,
        },
        Err(e) => HyperbolicityReport {
            state: *p,
            min_eig_a: f64::NAN,
            inequalities,
            speeds: None,
            hyperbolic: false,
            failure: Some(e.to_string()),
        },
    }
}

/// Tensor grid over `(ρ₁, ρ₂, w)` at frozen entropies; states are placed in
/// the mixture rest frame.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicityGrid {
    pub rho1: Vec<f64>,
    pub rho2: Vec<f64>,
    pub w: Vec<f64>,
    pub s: [f64; 2],
}

impl HyperbolicityGrid {
    pub fn len(&self) -> usize {
        self.rho1.len() * self.rho2.len() * self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in row-major order (`ρ₁` slowest, `w` fastest).
    pub fn states(&self) -> Vec<PrimitiveState> {
        let mut out = Vec::with_capacity(self.len());
        for &r1 in &self.rho1 {
            for &r2 in &self.rho2 {
                for &w in &self.w {
                    let rho = [r1, r2];
                    out.push(PrimitiveState::new(rho, rest_frame_velocities(rho, w), self.s));
                }
            }
        }
        out
    }
}

/// One report per grid point, in grid order. Points are independent and
/// are evaluated on scoped worker threads.
pub fn map_hyperbolic_region<M: PotentialModel + ?Sized>(
    model: &M,
    grid: &HyperbolicityGrid,
) -> Vec<HyperbolicityReport> {
    let states = grid.states();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(states.len().max(1));
    let chunk = states.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = states
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|p| analyze_state(model, p)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("hyperbolicity worker panicked"))
            .collect()
    })
}

/// Location where `A` stops being positive definite along a scan in `w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalVelocity {
    pub w_star: f64,
    /// `min eig(A)` just below and just above `w_star` (relative offset `CRITICAL_W_RTOL`).
    pub min_eig_below: f64,
    pub min_eig_above: f64,
}

fn rest_frame_summary<M: PotentialModel + ?Sized>(
    model: &M,
    rho: [f64; 2],
    s: [f64; 2],
    w: f64,
) -> Result<SpeedSummary> {
    speeds_closed_form(model, &PrimitiveState::new(rho, rest_frame_velocities(rho, w), s))
}

/// Scans `w ∈ (0, w_max]` in `samples` uniform steps at fixed densities (rest
/// frame) and bisects the first loss of positive definiteness of `A` to
/// relative width `CRITICAL_W_RTOL`. Returns `None` if `A` stays definite.
pub fn critical_relative_velocity<M: PotentialModel + ?Sized>(
    model: &M,
    rho: [f64; 2],
    s: [f64; 2],
    w_max: f64,
    samples: usize,
) -> Result<Option<CriticalVelocity>> {
    if !(w_max > 0.0) || samples == 0 {
        return Err(Error::Invalid("critical scan needs w_max > 0 and samples > 0".into()));
    }
    let hyperbolic = |w: f64| -> Result<bool> {
        Ok(matches!(
            rest_frame_summary(model, rho, s, w)?.speeds,
            CharacteristicSpeeds::Hyperbolic(_)
        ))
    };
    if !hyperbolic(0.0)? {
        return Err(Error::Precondition("A is not positive definite at w = 0".into()));
    }
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=samples {
        let w = w_max * i as f64 / samples as f64;
        if hyperbolic(w)? {
            lo = w;
        } else {
            hi = Some(w);
            break;
        }
    }
    let Some(mut hi) = hi else {
        return Ok(None);
    };
    while hi - lo > CRITICAL_W_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if hyperbolic(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w_star = 0.5 * (lo + hi);
    let probe = |w: f64| rest_frame_summary(model, rho, s, w).map(|r| r.min_eig_a);
    Ok(Some(CriticalVelocity {
        w_star,
        min_eig_below: probe(w_star * (1.0 - CRITICAL_W_RTOL))?,
        min_eig_above: probe(w_star * (1.0 + CRITICAL_W_RTOL))?,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{ComponentParams, Gradient, Hessian, SeparableAddedMass};
    use crate::state::primitive_to_evolved;
    use proptest::prelude::*;

    fn law(a: f64) -> SeparableAddedMass {
        SeparableAddedMass::new(
            ComponentParams::new(1.4, 1.0, 0.0, 1.0),
            ComponentParams::new(2.0, 1.5, 0.2, 0.7),
            a,
        )
        .unwrap()
    }

    fn state() -> PrimitiveState {
        PrimitiveState::new([1.1, 0.8], [0.05, 0.2], [0.1, 0.3])
    }

    #[test]
    fn rest_state_transform() {
        let m = law(0.6);
        let p = PrimitiveState::new([1.1, 0.8], [0.0, 0.0], [0.1, 0.3]);
        let lv = legendre_transform(&m, &p).unwrap();
        let g = m.gradient(&ThermoVars::from(&p));
        assert_eq!(lv.j, [0.0, 0.0]);
        assert_eq!(lv.sigma, [-g[0], -g[1]]);
        let expect = -m.value(&ThermoVars::from(&p)) + 1.1 * g[0] + 0.8 * g[1];
        assert!((lv.g - expect).abs() < 1e-13 * expect.abs());
    }

    #[test]
    fn sigma_is_bernoulli_minus_impulse_flux() {
        let m = law(0.6);
        let p = state();
        let lv = legendre_transform(&m, &p).unwrap();
        let d = crate::state::dynamic_quantities(&m, &p, [0.0; 2], 1.0).unwrap();
        for a in 0..2 {
            assert!((lv.sigma[a] - (d.r[a] - d.k[a] * p.u[a])).abs() < 1e-13);
        }
    }

    #[test]
    fn decoupled_transform_splits() {
        let c = law(0.0).components;
        let single = |alpha: usize| {
            let mut comps = [c[alpha]; 2];
            comps[1 - alpha] = c[1 - alpha];
            comps
        };
        let m = law(0.0);
        let p = state();
        let both = legendre_transform(&m, &p).unwrap();
        // Each σα depends only on its own component.
        let mut q = p;
        q.rho[1] *= 1.3;
        q.u[1] -= 0.1;
        let other = legendre_transform(&SeparableAddedMass::new(single(0)[0], single(0)[1], 0.0).unwrap(), &q).unwrap();
        assert!((both.sigma[0] - other.sigma[0]).abs() < 1e-14);
    }

    #[test]
    fn impulse_is_gradient_of_g() {
        let m = law(0.6);
        let p = state();
        let lv = legendre_transform(&m, &p).unwrap();
        let u = lv.as_vector();
        let k = primitive_to_evolved(&m, &p).unwrap().k;
        for a in 0..2 {
            let h = 1e-5;
            let mut up = u;
            let mut um = u;
            up[2 + a] += h;
            um[2 + a] -= h;
            let d = (legendre_potential(&m, p.s, &up, p.rho).unwrap()
                - legendre_potential(&m, p.s, &um, p.rho).unwrap())
                / (2.0 * h);
            assert!((d - k[a]).abs() < 1e-8, "{d} vs {}", k[a]);
        }
    }

    #[test]
    fn finite_difference_and_closed_form_agree() {
        for a in [0.0, 0.3, 2.0] {
            let m = law(a);
            let p = state();
            let sys = assemble_symmetric_system(&m, &p).unwrap();
            let closed = symmetric_matrix_closed_form(&m, &p).unwrap();
            assert!((sys.a - closed).amax() < 1e-8 * closed.amax(), "a = {a}");
            assert!((sys.b - flux_matrix()).amax() < 1e-9);
            assert!(sys.asymmetry_a < 1e-8);
        }
    }

    #[test]
    fn rest_state_is_positive_definite() {
        let m = law(1.0);
        let p = PrimitiveState::new([1.0, 2.0], [0.0, 0.0], [0.0, 0.0]);
        let sys = assemble_symmetric_system(&m, &p).unwrap();
        assert!(sys.is_positive_definite());
    }

    #[test]
    fn decoupled_speeds_are_sound_speeds() {
        let m = law(0.0);
        let p = state();
        let sys = assemble_symmetric_system(&m, &p).unwrap();
        // A is block diagonal in (σ₁, j₁) and (σ₂, j₂).
        for (r, c) in [(0, 1), (0, 3), (1, 2), (2, 3)] {
            assert!(sys.a[(r, c)].abs() < 1e-8 * sys.a.amax());
        }
        let speeds = characteristic_speeds(&sys).unwrap().speeds().unwrap();
        let mut expect: Vec<f64> = (0..2)
            .flat_map(|a| {
                let c = m.components[a].sound_speed_sq(p.rho[a], p.s[a]).sqrt();
                [p.u[a] - c, p.u[a] + c]
            })
            .collect();
        expect.sort_by(f64::total_cmp);
        for (s, e) in speeds.iter().zip(&expect) {
            assert!((s - e).abs() < 1e-8, "{speeds:?} vs {expect:?}");
        }
    }

    #[test]
    fn symmetric_rest_state_has_paired_speeds() {
        let c = ComponentParams::new(1.6, 1.0, 0.0, 1.0);
        let m = SeparableAddedMass::new(c, c, 0.8).unwrap();
        let p = PrimitiveState::new([1.0, 1.0], [0.0, 0.0], [0.0, 0.0]);
        let s = speeds_closed_form(&m, &p).unwrap().speeds.speeds().unwrap();
        assert!((s[0] + s[3]).abs() < 1e-12);
        assert!((s[1] + s[2]).abs() < 1e-12);
    }

    #[test]
    fn large_relative_velocity_loses_definiteness() {
        let m = law(1.0);
        let rho = [1.0, 1.0];
        let fast = PrimitiveState::new(rho, rest_frame_velocities(rho, 20.0), [0.0, 0.0]);
        let sys = assemble_symmetric_system(&m, &fast);
        let flagged = match sys {
            Ok(sys) => matches!(
                characteristic_speeds(&sys).unwrap(),
                CharacteristicSpeeds::NotHyperbolic { .. }
            ),
            Err(_) => true,
        };
        assert!(flagged);
        let crit = critical_relative_velocity(&m, rho, [0.0, 0.0], 20.0, 200)
            .unwrap()
            .unwrap();
        assert!(crit.w_star > 0.0 && crit.w_star < 20.0);
        assert!(crit.min_eig_below > 0.0);
        assert!(crit.min_eig_above < 0.0);
    }

    #[test]
    fn inequalities_for_builtin_law() {
        let c = check_stability_inequalities(&law(0.5), &state()).unwrap();
        assert!(c.all_hold());
        let c = check_stability_inequalities(&law(0.0), &state()).unwrap();
        assert!(!c.concave_in_w.holds);
        assert!(c.concave_in_w.boundary);
        assert!(c.convex_in_rho1.holds && c.density_determinant.holds);
    }

    #[test]
    fn cross_coupled_law_fails_determinant() {
        struct Cross;
        impl PotentialModel for Cross {
            fn value(&self, x: &ThermoVars) -> f64 {
                0.5 * (x.rho[0] * x.rho[0] + x.rho[1] * x.rho[1]) + 2.0 * x.rho[0] * x.rho[1] - 0.5 * x.w * x.w
            }
            fn gradient(&self, x: &ThermoVars) -> Gradient {
                Gradient::from([x.rho[0] + 2.0 * x.rho[1], x.rho[1] + 2.0 * x.rho[0], 0.0, 0.0, -x.w])
            }
            fn hessian(&self, _: &ThermoVars) -> Hessian {
                let mut h = Hessian::zeros();
                h[(0, 0)] = 1.0;
                h[(1, 1)] = 1.0;
                h[(0, 1)] = 2.0;
                h[(1, 0)] = 2.0;
                h[(4, 4)] = -1.0;
                h
            }
        }
        let c = check_stability_inequalities(&Cross, &state()).unwrap();
        assert!(c.concave_in_w.holds && c.convex_in_rho1.holds);
        assert!(!c.density_determinant.holds);
        assert_eq!(c.density_determinant.value, -3.0);
    }

    #[test]
    fn grid_is_ordered_and_complete() {
        let g = HyperbolicityGrid {
            rho1: vec![0.5, 1.0],
            rho2: vec![0.5, 1.0, 1.5],
            w: vec![0.0, 0.1],
            s: [0.0, 0.0],
        };
        let reports = map_hyperbolic_region(&law(1.0), &g);
        assert_eq!(reports.len(), 12);
        assert_eq!(reports[0].state.rho, [0.5, 0.5]);
        assert_eq!(reports[11].state.rho, [1.0, 1.5]);
        let w0: Vec<_> = reports.iter().filter(|r| r.state.w() == 0.0).collect();
        assert!(w0.iter().all(|r| r.hyperbolic));
    }

    fn rest_state() -> impl Strategy<Value = (PrimitiveState, f64)> {
        (
            0.3f64..3.0,
            0.3f64..3.0,
            -0.3f64..0.3,
            -0.5f64..0.5,
            -0.5f64..0.5,
            0.0f64..2.0,
        )
            .prop_map(|(r1, r2, w, s1, s2, a)| {
                let rho = [r1, r2];
                (PrimitiveState::new(rho, rest_frame_velocities(rho, w), [s1, s2]), a)
            })
    }

    proptest! {
        #[test]
        fn boost_shifts_speeds((p, a) in rest_state(), c in -1.0f64..1.0) {
            let m = law(a);
            let s0 = speeds_closed_form(&m, &p).unwrap().speeds.speeds();
            let s1 = speeds_closed_form(&m, &p.boosted(c)).unwrap().speeds.speeds();
            prop_assume!(s0.is_some() && s1.is_some());
            let (s0, s1) = (s0.unwrap(), s1.unwrap());
            for k in 0..4 {
                prop_assert!((s1[k] - s0[k] - c).abs() <= 1e-9 * (1.0 + s0[k].abs()));
            }
        }

        #[test]
        fn stable_rest_states_are_definite((p, a) in rest_state()) {
            let m = law(a);
            let p = PrimitiveState::new(p.rho, [0.0; 2], p.s);
            prop_assume!(check_stability_inequalities(&m, &p).unwrap().all_hold());
            prop_assert!(speeds_closed_form(&m, &p).unwrap().min_eig_a > 0.0);
        }

        #[test]
        fn definite_a_gives_real_speeds((p, a) in rest_state(), c in -2.0f64..2.0) {
            let m = law(a);
            let summary = speeds_closed_form(&m, &p.boosted(c)).unwrap();
            if summary.min_eig_a > 0.0 {
                let speeds = summary.speeds.speeds();
                prop_assert!(speeds.is_some());
                prop_assert!(speeds.unwrap().iter().all(|v| v.is_finite()));
            }
        }
    }
}
