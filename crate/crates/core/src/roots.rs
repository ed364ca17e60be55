//! Scalar root finding: geometric bracket expansion and Newton's method
//! safeguarded by bisection.

use crate::error::{Error, Result};

/// A bracket `[lo, hi]` with `f(lo)·f(hi) ≤ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Grows `[center − Δ, center + Δ]`, doubling `Δ` from `initial` up to
/// `max_doublings` times, until `f` changes sign.
pub fn expand_bracket<F>(mut f: F, center: f64, initial: f64, max_doublings: usize, context: &str) -> Result<Bracket>
where
    F: FnMut(f64) -> f64,
{
    let mut delta = initial;
    let (mut lo, mut hi, mut f_lo, mut f_hi) = (center, center, f64::NAN, f64::NAN);
    for _ in 0..=max_doublings {
        lo = center - delta;
        hi = center + delta;
        f_lo = f(lo);
        f_hi = f(hi);
        if f_lo * f_hi <= 0.0 {
            return Ok(Bracket { lo, hi, f_lo, f_hi });
        }
        delta *= 2.0;
    }
    Err(Error::Convergence {
        context: format!("{context}: no sign change"),
        lo,
        hi,
        f_lo,
        f_hi,
        iterations: max_doublings,
    })
}

/// Newton iteration kept inside `bracket`; falls back to bisection whenever
/// the Newton step leaves the bracket or stalls. Stops when `|f| ≤ f_tol`.
///
/// `fdf` returns `(f(x), f'(x))`.
pub fn safeguarded_newton<F>(mut fdf: F, bracket: Bracket, f_tol: f64, max_iter: usize, context: &str) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let Bracket {
        mut lo,
        mut hi,
        mut f_lo,
        mut f_hi,
    } = bracket;
    if f_lo.abs() <= f_tol {
        return Ok(lo);
    }
    if f_hi.abs() <= f_tol {
        return Ok(hi);
    }
    // Orient so that f(lo) < 0 < f(hi).
    if f_lo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
        std::mem::swap(&mut f_lo, &mut f_hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = fdf(x);
    for _ in 0..max_iter {
        if fx.abs() <= f_tol {
            return Ok(x);
        }
        let out_of_range = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
        let too_slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        if out_of_range || too_slow || dfx == 0.0 {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x -= dx;
        }
        (fx, dfx) = fdf(x);
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if dx.abs() <= f64::EPSILON * x.abs() && fx.abs() <= 1e3 * f_tol {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        context: context.to_string(),
        lo,
        hi,
        f_lo: fx,
        f_hi: fx,
        iterations: max_iter,
    })
}
