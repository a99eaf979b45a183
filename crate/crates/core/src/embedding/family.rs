//! Nested rectangle families and their feasibility certificate.
//!
//! For a factor with capacity `c_i` and slack `shift = eps / n`, the
//! constraint rectangle at action `A` has half-widths
//! `a(A) = phi^{-1}(A / c_i + shift)` and `b(A) = (phi*)^{-1}(A / c_i + shift)`.
//! The realised rectangle `R(A)` shrinks it uniformly to area exactly `A`:
//! `alpha = sqrt(A a / (4 b))`, `beta = A / (4 alpha)`.

use crate::error::{Error, Result};
use crate::numeric::minimize_unimodal;
use crate::young::{ConjugateFunction, ConvexProfile, YoungFunction};

/// Everything known about `R(A)` at one action value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectState {
    pub action: f64,
    /// Constraint half-widths.
    pub a: f64,
    pub b: f64,
    /// Realised half-widths, `4 alpha beta = A`.
    pub alpha: f64,
    pub beta: f64,
    /// Derivatives of `alpha` and `beta` with respect to `A`.
    pub dalpha: f64,
    pub dbeta: f64,
}

impl RectState {
    /// Boundary measure of the four sides, `4 (alpha beta)'`; equal to 1.
    pub fn boundary_mass(&self) -> f64 {
        4.0 * (self.dalpha * self.beta + self.alpha * self.dbeta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedRectFamily {
    function: YoungFunction,
    conjugate: ConjugateFunction,
    capacity: f64,
    shift: f64,
}

impl NestedRectFamily {
    pub fn new(function: &YoungFunction, conjugate: &ConjugateFunction, capacity: f64, epsilon: f64, n: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        if n == 0 || !(capacity > 0.0) {
            return Err(Error::InvalidArgument("need n >= 1 and a positive capacity".into()));
        }
        Ok(NestedRectFamily {
            function: function.clone(),
            conjugate: conjugate.clone(),
            capacity,
            shift: epsilon / n as f64,
        })
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// `eps / n`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn function(&self) -> &YoungFunction {
        &self.function
    }

    pub fn conjugate(&self) -> &ConjugateFunction {
        &self.conjugate
    }

    /// Right-hand side of both constraints, `A / c_i + eps / n`.
    pub fn level(&self, action: f64) -> f64 {
        action / self.capacity + self.shift
    }

    /// Constraint half-widths `(a(A), b(A))`.
    pub fn constraint_half_widths(&self, action: f64) -> Result<(f64, f64)> {
        let u = self.level(action);
        Ok((self.function.inverse(u)?, self.conjugate.inverse(u)?))
    }

    pub fn state(&self, action: f64) -> Result<RectState> {
        let (a, b) = self.constraint_half_widths(action)?;
        if action <= 0.0 {
            return Ok(RectState {
                action: 0.0,
                a,
                b,
                alpha: 0.0,
                beta: 0.0,
                dalpha: f64::INFINITY,
                dbeta: f64::INFINITY,
            });
        }
        let alpha = (action * a / (4.0 * b)).sqrt();
        let beta = action / (4.0 * alpha);
        // logarithmic derivatives of a and b in A
        let la = 1.0 / (self.capacity * self.function.slope(a) * a);
        let lb = 1.0 / (self.capacity * self.conjugate.slope(b) * b);
        let inv_a = 1.0 / action;
        Ok(RectState {
            action,
            a,
            b,
            alpha,
            beta,
            dalpha: 0.5 * alpha * (inv_a + la - lb),
            dbeta: 0.5 * beta * (inv_a - la + lb),
        })
    }
}

/// Slack `4 phi^{-1}(s + eps/n) (phi*)^{-1}(s + eps/n) - c_i s` of the
/// constraint rectangle over a disc of normalised action `s`.
pub fn constraint_slack(f: &YoungFunction, conj: &ConjugateFunction, capacity: f64, shift: f64, s: f64) -> Result<f64> {
    let u = s + shift;
    Ok(4.0 * f.inverse(u)? * conj.inverse(u)? - capacity * s)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Feasibility {
    pub min_slack: f64,
    pub argmin_s: f64,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.min_slack > 0.0
    }
}

/// Minimum of the constraint slack over `s in [0, 1]`: a dense scan of
/// `grid_n + 1` points followed by golden-section refinement around the
/// best grid point. A positive minimum means every disc `B^2(A)` fits its
/// constraint rectangle with room to spare.
pub fn feasibility_certificate(
    f: &YoungFunction,
    conj: &ConjugateFunction,
    capacity: f64,
    epsilon: f64,
    n: usize,
    grid_n: usize,
) -> Result<Feasibility> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if grid_n < 1000 {
        return Err(Error::InvalidArgument(format!("feasibility grid needs >= 1000 points, got {grid_n}")));
    }
    let shift = epsilon / n.max(1) as f64;
    let slack = |s: f64| constraint_slack(f, conj, capacity, shift, s);

    let mut best = (0.0, slack(0.0)?);
    for k in 1..=grid_n {
        let s = k as f64 / grid_n as f64;
        let v = slack(s)?;
        if v < best.1 {
            best = (s, v);
        }
    }

    let h = 1.0 / grid_n as f64;
    let (lo, hi) = ((best.0 - h).max(0.0), (best.0 + h).min(1.0));
    let clamped = |s: f64| slack(s.clamp(lo, hi)).unwrap_or(f64::INFINITY);
    if let Ok((s, v)) = minimize_unimodal(clamped, best.0, 0.25 * h, 1e-12) {
        let s = s.clamp(lo, hi);
        if v < best.1 {
            best = (s, v);
        }
    }
    Ok(Feasibility {
        min_slack: best.1,
        argmin_s: best.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn parts(f: YoungFunction) -> (YoungFunction, ConjugateFunction, f64) {
        let g = f.conjugate().unwrap();
        let rho = f.inverse(1.0).unwrap() * g.inverse(1.0).unwrap();
        (f, g, 4.0 * rho)
    }

    #[test]
    fn power_slack_is_constant() {
        for p in [1.5, 2.0, 2.5, 4.0] {
            let (f, g, c) = parts(YoungFunction::power(p).unwrap());
            let cert = feasibility_certificate(&f, &g, c, 0.05, 2, 1000).unwrap();
            assert_relative_eq!(cert.min_slack, c * 0.05 / 2.0, epsilon = 1e-9);
            for s in [0.0, 0.3, 1.0] {
                assert_relative_eq!(constraint_slack(&f, &g, c, 0.025, s).unwrap(), c * 0.025, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn slack_at_zero_action() {
        let (f, g, c) = parts(YoungFunction::ScaledExp);
        let v = constraint_slack(&f, &g, c, 0.005, 0.0).unwrap();
        assert!(v > 0.0);
        assert_relative_eq!(v, 4.0 * f.inverse(0.005).unwrap() * g.inverse(0.005).unwrap());
    }

    #[test]
    fn scaled_exp_is_infeasible_at_small_epsilon() {
        let (f, g, c) = parts(YoungFunction::ScaledExp);
        let cert = feasibility_certificate(&f, &g, c, 0.01, 2, 10_000).unwrap();
        assert!(!cert.is_feasible());
        // independent dense scan with bracketing solvers and scipy's Lambert W
        assert_relative_eq!(cert.min_slack, -0.141_458_173_897_521_36, epsilon = 1e-9);
        assert_relative_eq!(cert.argmin_s, 0.210_893, epsilon = 1e-4);
    }

    #[test]
    fn certificate_preconditions() {
        let (f, g, c) = parts(YoungFunction::ScaledExp);
        assert!(feasibility_certificate(&f, &g, c, 0.0, 2, 1000).is_err());
        assert!(feasibility_certificate(&f, &g, c, 0.1, 2, 999).is_err());
    }

    #[test]
    fn realised_rectangle_has_area_action() {
        let (f, g, c) = parts(YoungFunction::power(2.5).unwrap());
        let fam = NestedRectFamily::new(&f, &g, c, 0.05, 2).unwrap();
        for k in 1..=50 {
            let a = c * k as f64 / 50.0;
            let st = fam.state(a).unwrap();
            assert_relative_eq!(4.0 * st.alpha * st.beta, a, epsilon = 1e-12 * a.max(1.0));
            assert_relative_eq!(st.boundary_mass(), 1.0, epsilon = 1e-10);
            assert!(st.alpha <= st.a && st.beta <= st.b);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (f, g, c) = parts(YoungFunction::ScaledExp);
        let fam = NestedRectFamily::new(&f, &g, c, 0.5, 1).unwrap();
        let h = 1e-6;
        for a in [0.1, 1.0, 4.0, 7.5] {
            let st = fam.state(a).unwrap();
            let (up, dn) = (fam.state(a + h).unwrap(), fam.state(a - h).unwrap());
            assert_relative_eq!(st.dalpha, (up.alpha - dn.alpha) / (2.0 * h), max_relative = 1e-6);
            assert_relative_eq!(st.dbeta, (up.beta - dn.beta) / (2.0 * h), max_relative = 1e-6);
        }
    }
}
