//! The dynamic Gibbs identity in one space dimension,
//!
//! ```text
//! E − Σα (Mα·uα + (Kα·uα − Rα)·Bα) − S ≡ 0,
//! Mα = ρα dαKα/dt + ραKα ∂xuα − ρα ∂xRα − ραθα ∂xsα − fα
//! Bα = ∂tρα + ∂x(ραuα)
//! S  = Σα ραθα dαsα/dt + fαuα
//! E  = ∂t(Σα ρα(½uα² + Ωα) + U) + ∂x(Σα ραuα(Kαuα − Rα)) − Σα ρα ∂tΩα
//! ```
//!
//! together with the six identities whose sum it is. All derivatives are
//! central differences with one step `h` in `t` and `x`; material derivatives
//! `dα/dt` difference along the straight path `x + uα·(t − t₀)`.

use crate::closures::{drag_and_heat, ClosureParams};
use crate::error::{Error, Result};
use crate::potential::{eval_potential, PotentialModel};
use crate::verify::fields::{FieldValue, ManufacturedField};

/// Pointwise quantities entering the identities.
#[derive(Clone, Copy, Debug)]
struct Local {
    v: FieldValue,
    theta: [f64; 2],
    w_rho: [f64; 2],
    i_star: f64,
    internal_energy: f64,
    k: [f64; 2],
    r: [f64; 2],
    f: [f64; 2],
}

impl Local {
    /// `(−1)^α i*/ρα`, the part of `Kα` beyond `uα`.
    fn phi(&self, a: usize) -> f64 {
        let sign = if a == 0 { -1.0 } else { 1.0 };
        sign * self.i_star / self.v.rho[a]
    }
}

fn local<M: PotentialModel + ?Sized>(
    model: &M,
    closures: &ClosureParams,
    field: &dyn ManufacturedField,
    t: f64,
    x: f64,
) -> Result<Local> {
    let v = field.eval(t, x);
    let p = v.primitive();
    let th = eval_potential(model, &p).map_err(|e| match e {
        Error::Domain {
            quantity,
            value,
            reason,
        } => Error::Domain {
            quantity,
            value,
            reason: format!("{reason} at (t, x) = ({t}, {x})"),
        },
        other => other,
    })?;
    let forces = drag_and_heat(closures, &p, th.theta)?;
    let i_star = th.i_star;
    let k = [v.u[0] - i_star / v.rho[0], v.u[1] + i_star / v.rho[1]];
    let w_rho = [th.d_rho(0), th.d_rho(1)];
    let r = [0, 1].map(|a| 0.5 * v.u[a] * v.u[a] - w_rho[a] - v.omega[a]);
    Ok(Local {
        v,
        theta: th.theta,
        w_rho,
        i_star,
        internal_energy: th.internal_energy,
        k,
        r,
        f: forces.f,
    })
}

/// Stencil around `(t, x)`: centre, `t ± h`, `x ± h`, and the two material
/// paths `(t ± h, x ± uα h)`.
struct Stencil {
    h: f64,
    c: Local,
    tp: Local,
    tm: Local,
    xp: Local,
    xm: Local,
    path: [(Local, Local); 2],
}

impl Stencil {
    fn new<M: PotentialModel + ?Sized>(
        model: &M,
        closures: &ClosureParams,
        field: &dyn ManufacturedField,
        t: f64,
        x: f64,
        h: f64,
    ) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Invalid("finite-difference step must be positive".into()));
        }
        let at = |t, x| local(model, closures, field, t, x);
        let c = at(t, x)?;
        let path = [0, 1].map(|a| {
            let u = c.v.u[a];
            Ok::<_, Error>((at(t + h, x + u * h)?, at(t - h, x - u * h)?))
        });
        let [p0, p1] = path;
        Ok(Self {
            h,
            c,
            tp: at(t + h, x)?,
            tm: at(t - h, x)?,
            xp: at(t, x + h)?,
            xm: at(t, x - h)?,
            path: [p0?, p1?],
        })
    }

    fn dt(&self, g: impl Fn(&Local) -> f64) -> f64 {
        (g(&self.tp) - g(&self.tm)) / (2.0 * self.h)
    }

    fn dx(&self, g: impl Fn(&Local) -> f64) -> f64 {
        (g(&self.xp) - g(&self.xm)) / (2.0 * self.h)
    }

    fn material(&self, a: usize, g: impl Fn(&Local) -> f64) -> f64 {
        let (p, m) = &self.path[a];
        (g(p) - g(m)) / (2.0 * self.h)
    }

    fn mass_defect(&self, a: usize) -> f64 {
        self.dt(|l| l.v.rho[a]) + self.dx(|l| l.v.rho[a] * l.v.u[a])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsResidual {
    pub e: f64,
    pub m: [f64; 2],
    pub b: [f64; 2],
    pub s: f64,
    /// `E − Σα(Mα·uα + (Kα·uα − Rα)·Bα) − S`.
    pub combination: f64,
    /// Largest magnitude among the summed terms.
    pub scale: f64,
}

pub fn gibbs_residual<M: PotentialModel + ?Sized>(
    model: &M,
    closures: &ClosureParams,
    field: &dyn ManufacturedField,
    t: f64,
    x: f64,
    h: f64,
) -> Result<GibbsResidual> {
    let st = Stencil::new(model, closures, field, t, x, h)?;
    let c = &st.c;
    let (rho, u) = (c.v.rho, c.v.u);
    let b = [0, 1].map(|a| st.mass_defect(a));
    let m = [0, 1].map(|a| {
        rho[a] * st.material(a, |l| l.k[a]) + rho[a] * c.k[a] * st.dx(|l| l.v.u[a])
            - rho[a] * st.dx(|l| l.r[a])
            - rho[a] * c.theta[a] * st.dx(|l| l.v.s[a])
            - c.f[a]
    });
    let s = (0..2)
        .map(|a| rho[a] * c.theta[a] * st.material(a, |l| l.v.s[a]) + c.f[a] * u[a])
        .sum::<f64>();
    let density = |l: &Local| {
        l.internal_energy
            + (0..2)
                .map(|a| l.v.rho[a] * (0.5 * l.v.u[a] * l.v.u[a] + l.v.omega[a]))
                .sum::<f64>()
    };
    let flux = |l: &Local| {
        (0..2)
            .map(|a| l.v.rho[a] * l.v.u[a] * (l.k[a] * l.v.u[a] - l.r[a]))
            .sum::<f64>()
    };
    let e = st.dt(density) + st.dx(flux) - (0..2).map(|a| rho[a] * st.dt(|l| l.v.omega[a])).sum::<f64>();
    let terms: Vec<f64> = (0..2)
        .flat_map(|a| [m[a] * u[a], (c.k[a] * u[a] - c.r[a]) * b[a]])
        .chain([e, s])
        .collect();
    let combination = e - terms[..4].iter().sum::<f64>() - s;
    Ok(GibbsResidual {
        e,
        m,
        b,
        s,
        combination,
        scale: terms.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
    })
}

/// Residuals of the six constituent identities (summed over components
/// where the identity is per component) and of the internal-energy rate
/// `∂tU = ∂t i*·w + Σα(∂W/∂ρα ∂tρα + ραθα ∂tsα)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppendixResiduals {
    /// a (drag work), b (external potentials), c (kinetic), d (`∂W/∂ρα`),
    /// e (entropy), f (`i*`).
    pub residuals: [f64; 6],
    pub energy_rate: f64,
    /// Term scale of each identity.
    pub scales: [f64; 6],
}

pub const IDENTITY_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Drag-work cancellation `f₁u₁ + f₂u₂ − f₁u₁ − f₂u₂`; the only identity
/// with no derivatives. Returns `(residual, scale)`.
pub fn drag_work_identity(f: [f64; 2], u: [f64; 2]) -> (f64, f64) {
    let w = [f[0] * u[0], f[1] * u[1]];
    (w[0] + w[1] - w[0] - w[1], w[0].abs() + w[1].abs())
}

pub fn appendix_identities<M: PotentialModel + ?Sized>(
    model: &M,
    closures: &ClosureParams,
    field: &dyn ManufacturedField,
    t: f64,
    x: f64,
    h: f64,
) -> Result<AppendixResiduals> {
    let st = Stencil::new(model, closures, field, t, x, h)?;
    let c = &st.c;
    let (rho, u) = (c.v.rho, c.v.u);
    let b = [0, 1].map(|a| st.mass_defect(a));
    let (ra, sa) = drag_work_identity(c.f, u);
    let mut res = [ra, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut scale = [sa, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut add = |id: usize, terms: &[f64]| {
        res[id] += terms.iter().sum::<f64>();
        scale[id] = terms.iter().fold(scale[id], |m, v| m.max(v.abs()));
    };

    for a in 0..2 {
        let om = c.v.omega[a];
        add(
            1,
            &[
                st.dt(|l| l.v.rho[a] * l.v.omega[a]),
                st.dx(|l| l.v.rho[a] * l.v.omega[a] * l.v.u[a]),
                -rho[a] * st.dx(|l| l.v.omega[a]) * u[a],
                -b[a] * om,
                -rho[a] * st.dt(|l| l.v.omega[a]),
            ],
        );
        let half = 0.5 * u[a] * u[a];
        add(
            2,
            &[
                st.dt(|l| 0.5 * l.v.rho[a] * l.v.u[a] * l.v.u[a]),
                st.dx(|l| l.v.rho[a] * l.v.u[a] * 0.5 * l.v.u[a] * l.v.u[a]),
                -b[a] * half,
                -(rho[a] * st.material(a, |l| l.v.u[a]) + rho[a] * u[a] * st.dx(|l| l.v.u[a])
                    - rho[a] * st.dx(|l| 0.5 * l.v.u[a] * l.v.u[a]))
                    * u[a],
            ],
        );
        add(
            3,
            &[
                c.w_rho[a] * st.dt(|l| l.v.rho[a]),
                st.dx(|l| l.w_rho[a] * l.v.rho[a] * l.v.u[a]),
                -rho[a] * st.dx(|l| l.w_rho[a]) * u[a],
                -c.w_rho[a] * b[a],
            ],
        );
        let rt = rho[a] * c.theta[a];
        add(
            4,
            &[
                rt * st.dt(|l| l.v.s[a]),
                rt * st.dx(|l| l.v.s[a]) * u[a],
                -rt * st.material(a, |l| l.v.s[a]),
            ],
        );
        add(
            5,
            &[
                st.dx(|l| l.phi(a) * l.v.u[a] * l.v.rho[a] * l.v.u[a]),
                -(rho[a] * st.material(a, |l| l.phi(a)) + rho[a] * c.phi(a) * st.dx(|l| l.v.u[a])) * u[a],
                -c.phi(a) * u[a] * b[a],
            ],
        );
    }
    let w = u[1] - u[0];
    add(5, &[st.dt(|l| l.i_star) * w]);

    let energy_rate = st.dt(|l| l.internal_energy)
        - st.dt(|l| l.i_star) * w
        - (0..2)
            .map(|a| c.w_rho[a] * st.dt(|l| l.v.rho[a]) + rho[a] * c.theta[a] * st.dt(|l| l.v.s[a]))
            .sum::<f64>();
    Ok(AppendixResiduals {
        residuals: res,
        energy_rate,
        scales: scale,
    })
}

/// Residual norms (max over sample points) for a sequence of steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub h: Vec<f64>,
    pub combination: Vec<f64>,
    /// Per identity a–f.
    pub identities: [Vec<f64>; 6],
    pub energy_rate: Vec<f64>,
    /// Largest term scale seen, for the round-off floor.
    pub scale: f64,
}

impl ConvergenceStudy {
    /// Ratios `norm(h_k)/norm(h_{k+1})`; `+∞` when both norms sit at the
    /// round-off floor (the identity is satisfied exactly).
    pub fn ratios(&self, norms: &[f64]) -> Vec<f64> {
        let floor = ROUND_OFF_FLOOR * self.scale.max(1.0);
        norms
            .windows(2)
            .map(|p| {
                if p[0] <= floor && p[1] <= floor {
                    f64::INFINITY
                } else {
                    p[0] / p[1]
                }
            })
            .collect()
    }

    /// Observed orders `log₂` of the ratios, assuming the steps halve.
    pub fn orders(&self, norms: &[f64]) -> Vec<f64> {
        self.ratios(norms)
            .into_iter()
            .zip(self.h.windows(2))
            .map(|(r, h)| r.ln() / (h[0] / h[1]).ln())
            .collect()
    }
}

/// Residual level below which a norm counts as round-off, relative to the
/// term scale.
pub const ROUND_OFF_FLOOR: f64 = 1e-13;

pub fn gibbs_convergence<M: PotentialModel + ?Sized>(
    model: &M,
    closures: &ClosureParams,
    field: &dyn ManufacturedField,
    points: &[(f64, f64)],
    h: &[f64],
) -> Result<ConvergenceStudy> {
    let mut study = ConvergenceStudy {
        h: h.to_vec(),
        combination: Vec::new(),
        identities: Default::default(),
        energy_rate: Vec::new(),
        scale: 0.0,
    };
    for &step in h {
        let mut comb = 0.0f64;
        let mut ids = [0.0f64; 6];
        let mut rate = 0.0f64;
        for &(t, x) in points {
            let g = gibbs_residual(model, closures, field, t, x, step)?;
            let ap = appendix_identities(model, closures, field, t, x, step)?;
            comb = comb.max(g.combination.abs());
            study.scale = study.scale.max(g.scale);
            for k in 0..6 {
                ids[k] = ids[k].max(ap.residuals[k].abs());
                study.scale = study.scale.max(ap.scales[k]);
            }
            rate = rate.max(ap.energy_rate.abs());
        }
        study.combination.push(comb);
        for k in 0..6 {
            study.identities[k].push(ids[k]);
        }
        study.energy_rate.push(rate);
    }
    Ok(study)
}
