//! Smooth closed-form space-time fields used to exercise identities that hold
//! for any motion, not only for solutions.

use std::f64::consts::TAU;

use rand::Rng;

use crate::state::PrimitiveState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValue {
    pub rho: [f64; 2],
    pub u: [f64; 2],
    pub s: [f64; 2],
    pub omega: [f64; 2],
}

impl FieldValue {
    pub fn primitive(&self) -> PrimitiveState {
        PrimitiveState::new(self.rho, self.u, self.s)
    }
}

pub trait ManufacturedField: Send + Sync {
    fn eval(&self, t: f64, x: f64) -> FieldValue;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantField(pub FieldValue);

impl ManufacturedField for ConstantField {
    fn eval(&self, _: f64, _: f64) -> FieldValue {
        self.0
    }
}

/// `base + Σ amplitude·sin(k·x + ω·t + φ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries {
    pub base: f64,
    /// `(amplitude, k, ω, φ)` per mode.
    pub modes: Vec<[f64; 4]>,
}

impl TrigSeries {
    pub fn constant(base: f64) -> Self {
        Self {
            base,
            modes: Vec::new(),
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.base
            + self
                .modes
                .iter()
                .map(|m| m[0] * (m[1] * x + m[2] * t + m[3]).sin())
                .sum::<f64>()
    }

    /// Random series with `modes` terms whose amplitudes sum to at most `spread`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, base: f64, spread: f64, modes: usize) -> Self {
        let modes = (0..modes)
            .map(|_| {
                [
                    spread / modes as f64 * rng.gen_range(0.2..1.0),
                    rng.gen_range(1.0..TAU),
                    rng.gen_range(-TAU..TAU),
                    rng.gen_range(0.0..TAU),
                ]
            })
            .collect();
        Self { base, modes }
    }
}

/// Independent trigonometric series for every quantity and component.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigField {
    pub rho: [TrigSeries; 2],
    pub u: [TrigSeries; 2],
    pub s: [TrigSeries; 2],
    pub omega: [TrigSeries; 2],
}

impl TrigField {
    /// Densities stay within `[0.5·base, 1.5·base]` with base in `[0.8, 1.5]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut series = |lo: f64, hi: f64, rel_spread: f64, abs_spread: f64| {
            let base = rng.gen_range(lo..hi);
            TrigSeries::random(rng, base, rel_spread * base.abs() + abs_spread, 2)
        };
        Self {
            rho: [series(0.8, 1.5, 0.5, 0.0), series(0.8, 1.5, 0.5, 0.0)],
            u: [series(-0.5, 0.5, 0.0, 0.3), series(-0.5, 0.5, 0.0, 0.3)],
            s: [series(-0.2, 0.2, 0.0, 0.2), series(-0.2, 0.2, 0.0, 0.2)],
            omega: [series(-0.1, 0.1, 0.0, 0.3), series(-0.1, 0.1, 0.0, 0.3)],
        }
    }

    pub fn without_external_potential(mut self) -> Self {
        self.omega = [TrigSeries::constant(0.0), TrigSeries::constant(0.0)];
        self
    }
}

impl ManufacturedField for TrigField {
    fn eval(&self, t: f64, x: f64) -> FieldValue {
        let ev = |s: &[TrigSeries; 2]| [s[0].eval(t, x), s[1].eval(t, x)];
        FieldValue {
            rho: ev(&self.rho),
            u: ev(&self.u),
            s: ev(&self.s),
            omega: ev(&self.omega),
        }
    }
}

/// Each component translates rigidly at its own constant speed, so mass
/// conservation and entropy advection hold exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslatingField {
    pub speed: [f64; 2],
    /// Profiles in the co-moving coordinate `x − cα·t`.
    pub rho: [TrigSeries; 2],
    pub s: [TrigSeries; 2],
}

impl TranslatingField {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut profile = |base: f64, spread: f64| {
            let mut p = TrigSeries::random(rng, base, spread, 2);
            for m in &mut p.modes {
                m[2] = 0.0;
            }
            p
        };
        let rho = [profile(1.0, 0.4), profile(1.2, 0.4)];
        let s = [profile(0.0, 0.2), profile(0.1, 0.2)];
        Self {
            speed: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
            rho,
            s,
        }
    }
}

impl ManufacturedField for TranslatingField {
    fn eval(&self, t: f64, x: f64) -> FieldValue {
        let xi = [x - self.speed[0] * t, x - self.speed[1] * t];
        FieldValue {
            rho: [self.rho[0].eval(0.0, xi[0]), self.rho[1].eval(0.0, xi[1])],
            u: self.speed,
            s: [self.s[0].eval(0.0, xi[0]), self.s[1].eval(0.0, xi[1])],
            omega: [0.0, 0.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_fields_keep_densities_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = TrigField::random(&mut rng);
            for i in 0..100 {
                let v = f.eval(0.01 * i as f64, 0.013 * i as f64);
                assert!(v.rho.iter().all(|r| *r > 0.3));
            }
        }
    }

    #[test]
    fn seeded_fields_are_reproducible() {
        let a = TrigField::random(&mut ChaCha8Rng::seed_from_u64(9));
        let b = TrigField::random(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn translation_is_rigid() {
        let f = TranslatingField::random(&mut ChaCha8Rng::seed_from_u64(1));
        let a = f.eval(0.0, 0.3);
        let b = f.eval(0.5, 0.3 + 0.5 * f.speed[0]);
        assert!((a.rho[0] - b.rho[0]).abs() < 1e-14);
        assert!((a.s[0] - b.s[0]).abs() < 1e-14);
    }
}
