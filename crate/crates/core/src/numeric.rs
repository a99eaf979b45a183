//! Scalar numerics shared by the rest of the crate: monotone root finding,
//! unimodal minimisation and the principal branch of the Lambert W function.
//!
//! Every target function in this crate is smooth and monotone on the
//! interval of interest, so the solvers here assume a sign-changing bracket
//! and never search for multiple roots.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// Stopping rule for the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative residual tolerance, scaled by `max(1, |target|)`.
    pub rel: f64,
    /// Absolute bracket width below which the bracket is considered collapsed.
    pub abs: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-12,
            abs: 1e-14,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    pub fn with_rel(rel: f64) -> Self {
        Tolerance {
            rel,
            ..Self::default()
        }
    }
}

const MAX_DOUBLINGS: usize = 1100;

/// Grows `hi` by doubling until `f(hi) >= target`, moving `lo` along behind it.
///
/// `f` must be nondecreasing on `[lo, inf)` and `f(lo) <= target`.
pub fn bracket_upward<F>(f: F, target: f64, lo: f64, hi: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let mut lo = lo;
    let mut hi = hi;
    for _ in 0..MAX_DOUBLINGS {
        let v = f(hi);
        if v.is_nan() {
            break;
        }
        if v >= target {
            return Ok((lo, hi));
        }
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "bracket expansion",
        iterations: MAX_DOUBLINGS,
        last: hi,
    })
}

/// Solves `f(x) = target` for a nondecreasing `f` on `[lo, hi]`.
///
/// Safeguarded Newton: a Newton step from the current iterate is taken when
/// a derivative is supplied and the step lands strictly inside the bracket
/// and halves it at least every other iteration; otherwise the bracket is
/// bisected.
pub fn solve_increasing<F, D>(
    f: F,
    df: Option<D>,
    target: f64,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let ftol = tol.rel * target.abs().max(1.0);
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));

    let flo = f(lo) - target;
    if flo.abs() <= ftol {
        return Ok(lo);
    }
    let fhi = f(hi) - target;
    if fhi.abs() <= ftol {
        return Ok(hi);
    }
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "target {target} not bracketed by [{lo}, {hi}]"
        )));
    }

    let mut x = 0.5 * (lo + hi);
    let mut width_before = hi - lo;
    let mut slow_steps = 0usize;
    for _ in 0..tol.max_iter {
        let fx = f(x) - target;
        if fx.is_nan() {
            return Err(Error::NoConvergence {
                what: "monotone solve (NaN residual)",
                iterations: 0,
                last: x,
            });
        }
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= tol.abs + 4.0 * f64::EPSILON * x.abs() {
            return Ok(x);
        }
        if width > 0.5 * width_before {
            slow_steps += 1;
        } else {
            slow_steps = 0;
        }
        width_before = width;

        let newton = df.as_ref().and_then(|d| {
            let slope = d(x);
            (slope.is_finite() && slope > 0.0).then(|| x - fx / slope)
        });
        x = match newton {
            Some(n) if n > lo && n < hi && slow_steps < 2 => n,
            _ => {
                slow_steps = 0;
                0.5 * (lo + hi)
            }
        };
    }
    Err(Error::NoConvergence {
        what: "monotone solve",
        iterations: tol.max_iter,
        last: x,
    })
}

/// Convenience wrapper: bracket from `[lo, lo + 1]` upward, then solve.
pub fn solve_increasing_from<F, D>(f: F, df: Option<D>, target: f64, lo: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (a, b) = bracket_upward(&f, target, lo, lo + 1.0)?;
    solve_increasing(f, df, target, a, b, tol)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimises a unimodal function of one variable, starting the downhill
/// bracket search at `x0` with initial step `step`.
///
/// Returns `(argmin, min)`.
pub fn minimize_unimodal<F>(f: F, x0: f64, step: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = bracket_minimum(&f, x0, step)?;

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a).abs() > xtol * (1.0 + c.abs()) {
        iterations += 1;
        if iterations > 500 {
            return Err(Error::NoConvergence {
                what: "golden-section search",
                iterations,
                last: 0.5 * (a + b),
            });
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok((x, fx))
}

fn bracket_minimum<F>(f: &F, x0: f64, step: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let f0 = f(x0);
    let (fl, fr) = (f(x0 - step), f(x0 + step));
    if fl >= f0 && fr >= f0 {
        return Ok((x0 - step, x0 + step));
    }
    // walk downhill with a doubling step
    let dir = if fl < fr { -1.0 } else { 1.0 };
    let mut prev = x0;
    let mut cur = x0 + dir * step;
    let mut fcur = if dir < 0.0 { fl } else { fr };
    let mut h = step;
    for _ in 0..200 {
        h *= 2.0;
        let next = cur + dir * h;
        let fnext = f(next);
        if fnext.is_nan() {
            break;
        }
        if fnext >= fcur {
            return Ok((prev.min(next), prev.max(next)));
        }
        prev = cur;
        cur = next;
        fcur = fnext;
    }
    Err(Error::NoConvergence {
        what: "minimum bracketing",
        iterations: 200,
        last: cur,
    })
}

/// Principal branch W0 of the Lambert W function, the inverse of `w e^w`
/// on `[-1/e, inf)`.
///
/// Halley iteration from a branch-aware initial guess until the step
/// stalls; the result is accepted only if `|w e^w - x| <= 1e-12 * max(1, |x|)`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch - 1e-15 {
        return Err(Error::InvalidArgument(format!(
            "Lambert W0 is undefined below -1/e (got {x})"
        )));
    }
    if x <= branch {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if x < -0.25 {
        // series about the branch point
        let p = (2.0 * (E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = (1.0 + x).ln();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    let scale = x.abs().max(1.0);
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    let residual = w * w.exp() - x;
    if residual.abs() <= 1e-12 * scale {
        Ok(w)
    } else {
        Err(Error::NoConvergence {
            what: "Lambert W0 Halley iteration",
            iterations: 100,
            last: w,
        })
    }
}
