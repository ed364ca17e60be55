//! Constitutive potential `W(ρ₁, ρ₂, s₁, s₂, w)` of the mixture.
//!
//! `W` is the potential per unit volume entering the Lagrangian with a minus
//! sign. Its dependence on the relative velocity `w = u₂ − u₁` carries the
//! added-mass coupling between the components. Derivatives are requested
//! through [`PotentialModel`]; laws that only provide values fall back to
//! central finite differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::state::PrimitiveState;

/// Smallest admissible partial density. Anything below is a hard error.
pub const MIN_DENSITY: f64 = 1e-12;

/// Indices of the thermodynamic variables in gradients and Hessians.
pub mod var {
    pub const RHO1: usize = 0;
    pub const RHO2: usize = 1;
    pub const S1: usize = 2;
    pub const S2: usize = 3;
    pub const W: usize = 4;

    pub const NAMES: [&str; 5] = ["rho1", "rho2", "s1", "s2", "w"];

    pub const fn rho(alpha: usize) -> usize {
        alpha
    }

    pub const fn s(alpha: usize) -> usize {
        2 + alpha
    }
}

pub type Gradient = SVector<f64, 5>;
pub type Hessian = SMatrix<f64, 5, 5>;

/// Arguments of the potential: partial densities, specific entropies and
/// the scalar relative velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermoVars {
    pub rho: [f64; 2],
    pub s: [f64; 2],
    pub w: f64,
}

impl ThermoVars {
    pub fn new(rho: [f64; 2], s: [f64; 2], w: f64) -> Self {
        Self { rho, s, w }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.rho[0], self.rho[1], self.s[0], self.s[1], self.w]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            rho: [a[0], a[1]],
            s: [a[2], a[3]],
            w: a[4],
        }
    }

    /// Copy with variable `index` displaced by `delta`.
    pub fn shifted(&self, index: usize, delta: f64) -> Self {
        let mut a = self.to_array();
        a[index] += delta;
        Self::from_array(a)
    }

    pub fn check_admissible(&self) -> Result<()> {
        check_densities(self.rho)
    }
}

impl From<&PrimitiveState> for ThermoVars {
    fn from(p: &PrimitiveState) -> Self {
        ThermoVars::new(p.rho, p.s, p.w())
    }
}

pub(crate) fn check_densities(rho: [f64; 2]) -> Result<()> {
    for (alpha, &r) in rho.iter().enumerate() {
        if !(r >= MIN_DENSITY) {
            return Err(Error::domain(
                format!("rho{}", alpha + 1),
                r,
                format!("partial density must be at least {MIN_DENSITY:e}"),
            ));
        }
    }
    Ok(())
}

/// Central-difference step `ε^(1/3)·max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// A constitutive law for the mixture potential.
///
/// Only [`value`](PotentialModel::value) is required. The default gradient
/// differentiates values, and the default Hessian differentiates the
/// gradient, both with central differences at [`fd_step`].
pub trait PotentialModel: Send + Sync {
    fn value(&self, x: &ThermoVars) -> f64;

    fn gradient(&self, x: &ThermoVars) -> Gradient {
        let mut g = Gradient::zeros();
        for i in 0..5 {
            let h = fd_step(x.to_array()[i]);
            g[i] = (self.value(&x.shifted(i, h)) - self.value(&x.shifted(i, -h))) / (2.0 * h);
        }
        g
    }

    fn hessian(&self, x: &ThermoVars) -> Hessian {
        let mut m = Hessian::zeros();
        for j in 0..5 {
            let h = fd_step(x.to_array()[j]);
            let gp = self.gradient(&x.shifted(j, h));
            let gm = self.gradient(&x.shifted(j, -h));
            m.set_column(j, &((gp - gm) / (2.0 * h)));
        }
        (m + m.transpose()) * 0.5
    }

    /// Value, gradient and Hessian in one call.
    fn derivatives(&self, x: &ThermoVars) -> (f64, Gradient, Hessian) {
        (self.value(x), self.gradient(x), self.hessian(x))
    }
}

impl<T: PotentialModel + ?Sized> PotentialModel for Arc<T> {
    fn value(&self, x: &ThermoVars) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &ThermoVars) -> Gradient {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &ThermoVars) -> Hessian {
        (**self).hessian(x)
    }
    fn derivatives(&self, x: &ThermoVars) -> (f64, Gradient, Hessian) {
        (**self).derivatives(x)
    }
}

impl<T: PotentialModel + ?Sized> PotentialModel for &T {
    fn value(&self, x: &ThermoVars) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &ThermoVars) -> Gradient {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &ThermoVars) -> Hessian {
        (**self).hessian(x)
    }
    fn derivatives(&self, x: &ThermoVars) -> (f64, Gradient, Hessian) {
        (**self).derivatives(x)
    }
}

/// Polytropic parameters of one component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentParams {
    /// Polytropic exponent, > 1.
    pub gamma: f64,
    /// Specific-heat scale, > 0.
    pub cv: f64,
    /// Reference entropy.
    pub s0: f64,
    /// Pressure scale, > 0.
    pub k0: f64,
}

impl ComponentParams {
    pub fn new(gamma: f64, cv: f64, s0: f64, k0: f64) -> Self {
        Self { gamma, cv, s0, k0 }
    }

    pub fn validate(&self, alpha: usize) -> Result<()> {
        let n = alpha + 1;
        if !(self.gamma > 1.0) {
            return Err(Error::Invalid(format!("gamma{n} must exceed 1")));
        }
        if !(self.cv > 0.0) {
            return Err(Error::Invalid(format!("cv{n} must be positive")));
        }
        if !(self.k0 > 0.0) {
            return Err(Error::Invalid(format!("K{n} must be positive")));
        }
        if !self.s0.is_finite() {
            return Err(Error::Invalid(format!("s0{n} must be finite")));
        }
        Ok(())
    }

    /// Specific internal energy `e = K₀/(γ−1)·ρ^(γ−1)·exp((s−s₀)/c_v)`.
    pub fn specific_energy(&self, rho: f64, s: f64) -> f64 {
        self.k0 / (self.gamma - 1.0) * rho.powf(self.gamma - 1.0) * ((s - self.s0) / self.cv).exp()
    }

    /// `[W, ∂ρW, ∂sW, ∂ρρW, ∂ρsW, ∂ssW]` of `W = ρ·e(ρ, s)`.
    fn volume_energy(&self, rho: f64, s: f64) -> [f64; 6] {
        let g = self.gamma;
        let factor = self.k0 * ((s - self.s0) / self.cv).exp();
        let rg2 = rho.powf(g - 2.0);
        let w = factor / (g - 1.0) * rg2 * rho * rho;
        let w_r = factor * g / (g - 1.0) * rg2 * rho;
        let w_rr = factor * g * rg2;
        [w, w_r, w / self.cv, w_rr, w_r / self.cv, w / (self.cv * self.cv)]
    }

    /// Pressure `ρ ∂ρW − W` of the component alone.
    pub fn pressure(&self, rho: f64, s: f64) -> f64 {
        self.k0 * rho.powf(self.gamma) * ((s - self.s0) / self.cv).exp()
    }

    /// Sound speed squared `ρ ∂²W/∂ρ²` of the component alone.
    pub fn sound_speed_sq(&self, rho: f64, s: f64) -> f64 {
        rho * self.volume_energy(rho, s)[3]
    }
}

/// Density-dependent added-mass coefficient `a(ρ₁, ρ₂)`.
pub trait AddedMassLaw: Send + Sync {
    /// Returns `a`, `[∂a/∂ρ₁, ∂a/∂ρ₂]` and the 2×2 Hessian of `a`.
    fn coefficient(&self, rho: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]);
}

#[derive(Clone)]
pub enum AddedMass {
    Constant(f64),
    Variable(Arc<dyn AddedMassLaw>),
}

impl AddedMass {
    fn eval(&self, rho: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        match self {
            AddedMass::Constant(a) => (*a, [0.0; 2], [[0.0; 2]; 2]),
            AddedMass::Variable(law) => law.coefficient(rho),
        }
    }
}

impl fmt::Debug for AddedMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AddedMass::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            AddedMass::Variable(_) => f.write_str("Variable(..)"),
        }
    }
}

/// Built-in law `W = W₁(ρ₁,s₁) + W₂(ρ₂,s₂) − ½·a(ρ₁,ρ₂)·w²` with
/// polytropic `Wα = ρα·eα(ρα, sα)`.
///
/// With `a ≥ 0` and `γα > 1` it satisfies `∂²W/∂w² = −a ≤ 0`, `∂²W/∂ρα² > 0`
/// and a vanishing density cross term, so the stability inequalities hold
/// wherever `∂²W/∂ρα∂w` is negligible.
#[derive(Clone, Debug)]
pub struct SeparableAddedMass {
    pub components: [ComponentParams; 2],
    pub added_mass: AddedMass,
}

impl SeparableAddedMass {
    pub fn new(c1: ComponentParams, c2: ComponentParams, a: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Invalid("a must be finite and non-negative".into()));
        }
        let law = Self {
            components: [c1, c2],
            added_mass: AddedMass::Constant(a),
        };
        c1.validate(0)?;
        c2.validate(1)?;
        Ok(law)
    }

    pub fn with_added_mass_law(c1: ComponentParams, c2: ComponentParams, law: Arc<dyn AddedMassLaw>) -> Result<Self> {
        c1.validate(0)?;
        c2.validate(1)?;
        Ok(Self {
            components: [c1, c2],
            added_mass: AddedMass::Variable(law),
        })
    }

    /// Same two components with a different constant added-mass coefficient.
    pub fn with_constant_added_mass(&self, a: f64) -> Result<Self> {
        Self::new(self.components[0], self.components[1], a)
    }
}

impl PotentialModel for SeparableAddedMass {
    fn value(&self, x: &ThermoVars) -> f64 {
        let (a, _, _) = self.added_mass.eval(x.rho);
        let w1 = self.components[0].volume_energy(x.rho[0], x.s[0])[0];
        let w2 = self.components[1].volume_energy(x.rho[1], x.s[1])[0];
        w1 + w2 - 0.5 * a * x.w * x.w
    }

    fn gradient(&self, x: &ThermoVars) -> Gradient {
        self.derivatives(x).1
    }

    fn hessian(&self, x: &ThermoVars) -> Hessian {
        self.derivatives(x).2
    }

    fn derivatives(&self, x: &ThermoVars) -> (f64, Gradient, Hessian) {
        let (a, da, dda) = self.added_mass.eval(x.rho);
        let w = x.w;
        let mut value = -0.5 * a * w * w;
        let mut g = Gradient::zeros();
        let mut h = Hessian::zeros();
        for alpha in 0..2 {
            let [e, e_r, e_s, e_rr, e_rs, e_ss] = self.components[alpha].volume_energy(x.rho[alpha], x.s[alpha]);
            let (r, s) = (var::rho(alpha), var::s(alpha));
            value += e;
            g[r] = e_r - 0.5 * da[alpha] * w * w;
            g[s] = e_s;
            h[(r, s)] = e_rs;
            h[(s, r)] = e_rs;
            h[(s, s)] = e_ss;
            h[(r, var::W)] = -da[alpha] * w;
            h[(var::W, r)] = -da[alpha] * w;
            for beta in 0..2 {
                h[(r, var::rho(beta))] = -0.5 * dda[alpha][beta] * w * w;
            }
            h[(r, r)] += e_rr;
        }
        g[var::W] = -a * w;
        h[(var::W, var::W)] = -a;
        (value, g, h)
    }
}

/// Everything derived from `W` at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoEval {
    pub potential: f64,
    /// Internal energy `U = W − (∂W/∂w)·w`.
    pub internal_energy: f64,
    /// Temperatures `θα = (1/ρα)·∂W/∂sα`.
    pub theta: [f64; 2],
    /// `i* = −∂W/∂w`.
    pub i_star: f64,
    pub gradient: Gradient,
    pub hessian: Hessian,
}

impl ThermoEval {
    pub fn d_rho(&self, alpha: usize) -> f64 {
        self.gradient[var::rho(alpha)]
    }

    pub fn d_s(&self, alpha: usize) -> f64 {
        self.gradient[var::s(alpha)]
    }

    pub fn d_w(&self) -> f64 {
        self.gradient[var::W]
    }
}

/// Evaluates `W`, its derivatives, `U`, `θα` and `i*` at a primitive state.
pub fn eval_potential<M: PotentialModel + ?Sized>(model: &M, state: &PrimitiveState) -> Result<ThermoEval> {
    eval_at(model, &ThermoVars::from(state))
}

pub(crate) fn eval_at<M: PotentialModel + ?Sized>(model: &M, x: &ThermoVars) -> Result<ThermoEval> {
    x.check_admissible()?;
    let (potential, gradient, hessian) = model.derivatives(x);
    let d_w = gradient[var::W];
    Ok(ThermoEval {
        potential,
        internal_energy: potential - d_w * x.w,
        theta: [gradient[var::S1] / x.rho[0], gradient[var::S2] / x.rho[1]],
        i_star: -d_w,
        gradient,
        hessian,
    })
}

/// Lagrangian density `Σα (½ραuα² − ραΩα) − W`.
pub fn eval_lagrangian<M: PotentialModel + ?Sized>(model: &M, state: &PrimitiveState, omega: [f64; 2]) -> Result<f64> {
    let x = ThermoVars::from(state);
    x.check_admissible()?;
    let kinetic: f64 = (0..2)
        .map(|a| 0.5 * state.rho[a] * state.u[a] * state.u[a] - state.rho[a] * omega[a])
        .sum();
    Ok(kinetic - model.value(&x))
}

/// Largest discrepancy between the model's gradient/Hessian and central
/// differences with relative step `h` (step `h·max(1,|x|)` per variable).
///
/// Entries are compared relative to `max(1, |analytic|, |numeric|)`.
pub fn fd_check_derivatives<M: PotentialModel + ?Sized>(model: &M, state: &PrimitiveState, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Invalid("finite-difference step must be positive".into()));
    }
    let x = ThermoVars::from(state);
    x.check_admissible()?;
    let arr = x.to_array();
    let steps: Vec<f64> = arr.iter().map(|v| h * v.abs().max(1.0)).collect();
    for alpha in 0..2 {
        let lowest = x.rho[alpha] - steps[var::rho(alpha)];
        if lowest < MIN_DENSITY {
            return Err(Error::domain(
                format!("rho{}", alpha + 1),
                x.rho[alpha],
                format!("finite-difference stencil reaches {lowest:e}"),
            ));
        }
    }
    let (_, grad, hess) = model.derivatives(&x);
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1.0);
    let mut worst = 0.0f64;
    for i in 0..5 {
        let hi = steps[i];
        let xp = x.shifted(i, hi);
        let xm = x.shifted(i, -hi);
        let numeric = (model.value(&xp) - model.value(&xm)) / (2.0 * hi);
        worst = worst.max(rel(grad[i], numeric));
        let gp = model.gradient(&xp);
        let gm = model.gradient(&xm);
        for j in 0..5 {
            let numeric = (gp[j] - gm[j]) / (2.0 * hi);
            worst = worst.max(rel(hess[(j, i)], numeric));
        }
    }
    Ok(worst)
}
