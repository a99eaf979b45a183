//! Young functions and their Legendre conjugates.
//!
//! A Young function is a convex, nondecreasing map `[0, inf) -> [0, inf)`
//! with `phi(0) = 0` and `phi(t) -> inf`. Each family here has a closed-form
//! value, slope and curvature. Inverses are computed by bracketed
//! root-finding; conjugates use a closed form for the power and scaled
//! exponential families and otherwise solve `phi'(x) = y` numerically.
//!
//! Functions are only ever evaluated on `[0, inf)`. Callers that work on the
//! whole line pass `|t|`.

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{lambert_w0, solve_increasing_from, Tolerance};

/// Convex nondecreasing profile on `[0, inf)` vanishing at the origin.
///
/// Implemented by both [`YoungFunction`] and [`ConjugateFunction`], so the
/// Orlicz-ball geometry can be written once for either side of the duality.
/// Methods take unchecked arguments: `t` is assumed to be `>= 0`.
pub trait ConvexProfile {
    fn value(&self, t: f64) -> f64;
    fn slope(&self, t: f64) -> f64;
    fn curvature(&self, t: f64) -> f64;

    /// Right derivative at the origin; the profile is flat for slopes up to it.
    fn slope_at_zero(&self) -> f64 {
        self.slope(0.0)
    }

    /// Generalised inverse `inf { t >= 0 : value(t) >= s }`.
    fn inverse(&self, s: f64) -> Result<f64>;

    /// Maximiser of `x y - value(x)` over `x >= 0`, i.e. the inverse of the
    /// slope, clamped to 0 when `y <= slope_at_zero()`.
    fn slope_inverse(&self, y: f64) -> Result<f64>;
}

/// Numeric Legendre transform `sup_{x >= 0} (x y - g(x))`, evaluated at the
/// stationary point `g'(x) = y`.
pub fn legendre<G: ConvexProfile + ?Sized>(g: &G, y: f64) -> Result<f64> {
    if y < 0.0 {
        return Err(Error::NegativeArgument(y));
    }
    let x = g.slope_inverse(y)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok((x * y - g.value(x)).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum YoungFunction {
    /// `t^p / p`, `p > 1`.
    Power { p: f64 },
    /// `(e^t - 1) / e`.
    ScaledExp,
    /// `e^t - 1`.
    Exp,
    /// `a_1 t + a_2 t^2 + ... + a_k t^k`; `coeffs[j]` multiplies `t^(j+1)`.
    Polynomial { coeffs: Vec<f64> },
    /// `factor * base(t)`.
    Scaled {
        factor: f64,
        base: Box<YoungFunction>,
    },
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YoungFunction::Power { p } => write!(f, "power(p={p})"),
            YoungFunction::ScaledExp => write!(f, "scaled_exp"),
            YoungFunction::Exp => write!(f, "exp"),
            YoungFunction::Polynomial { coeffs } => write!(f, "polynomial{coeffs:?}"),
            YoungFunction::Scaled { factor, base } => write!(f, "{factor}*{base}"),
        }
    }
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidFunction(format!("power exponent must be > 1, got {p}")));
        }
        Ok(YoungFunction::Power { p })
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidFunction(
                "polynomial needs at least one finite coefficient".into(),
            ));
        }
        Ok(YoungFunction::Polynomial { coeffs })
    }

    pub fn scaled(base: YoungFunction, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidFunction(format!("scale factor must be > 0, got {factor}")));
        }
        Ok(YoungFunction::Scaled {
            factor,
            base: Box::new(base),
        })
    }

    /// `phi(t)` for `t >= 0`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        check_nonnegative(t)?;
        Ok(self.value(t))
    }

    /// `phi'(t)` for `t >= 0`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        check_nonnegative(t)?;
        Ok(self.slope(t))
    }

    /// Solves `phi(t) = s` to `|phi(t) - s| <= tol.rel * max(1, s)`.
    pub fn inverse_with(&self, s: f64, tol: Tolerance) -> Result<f64> {
        check_nonnegative(s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        match self {
            YoungFunction::Power { p } => Ok((p * s).powf(1.0 / p)),
            YoungFunction::ScaledExp => Ok((E * s).ln_1p()),
            YoungFunction::Exp => Ok(s.ln_1p()),
            YoungFunction::Scaled { factor, base } => base.inverse_with(s / factor, tol),
            YoungFunction::Polynomial { .. } => {
                solve_increasing_from(|t| self.value(t), Some(|t| self.slope(t)), s, 0.0, tol)
            }
        }
    }

    /// The Legendre conjugate, with closed forms where the family has one.
    pub fn conjugate(&self) -> Result<ConjugateFunction> {
        self.check_superlinear()?;
        let form = match self {
            YoungFunction::Power { p } => ConjugateForm::Power { q: p / (p - 1.0) },
            YoungFunction::ScaledExp => ConjugateForm::ScaledExp,
            YoungFunction::Scaled { factor, base } => ConjugateForm::Scaled {
                factor: *factor,
                inner: Box::new(base.conjugate()?),
            },
            YoungFunction::Exp | YoungFunction::Polynomial { .. } => ConjugateForm::Numeric,
        };
        Ok(ConjugateFunction {
            threshold: self.slope_at_zero(),
            source: self.clone(),
            form,
        })
    }

    /// The conjugate evaluated purely by root-finding on `phi'`, ignoring any
    /// closed form.
    pub fn numeric_conjugate(&self) -> Result<ConjugateFunction> {
        self.check_superlinear()?;
        Ok(ConjugateFunction {
            threshold: self.slope_at_zero(),
            source: self.clone(),
            form: ConjugateForm::Numeric,
        })
    }

    fn check_superlinear(&self) -> Result<()> {
        match self {
            YoungFunction::Polynomial { coeffs } => {
                let degree = coeffs.iter().rposition(|a| *a != 0.0).map_or(0, |j| j + 1);
                if degree < 2 {
                    return Err(Error::UnboundedConjugate {
                        slope: coeffs.first().copied().unwrap_or(0.0),
                    });
                }
                Ok(())
            }
            YoungFunction::Scaled { base, .. } => base.check_superlinear(),
            _ => Ok(()),
        }
    }

    /// Numerical check of the Young-function axioms on `grid_n` equispaced
    /// points of `[0, grid_max]`. An empty report means the function passed.
    pub fn validate(&self, grid_max: f64, grid_n: usize) -> Diagnostics {
        let mut report = Diagnostics::default();
        self.validate_parameters(&mut report);
        if report.has(ViolationKind::Parameter) {
            return report;
        }
        let n = grid_n.max(2);
        let grid: Vec<f64> = (0..n).map(|k| grid_max * k as f64 / (n - 1) as f64).collect();

        let v0 = self.value(0.0);
        if v0 != 0.0 {
            report.push(ViolationKind::NonzeroAtOrigin, Some(0.0), format!("phi(0) = {v0}"));
        }
        let mut prev: Option<(f64, f64, f64)> = None;
        for &t in &grid {
            let (v, s, c) = (self.value(t), self.slope(t), self.curvature(t));
            if !(v.is_finite() && s.is_finite()) || c.is_nan() {
                report.push(ViolationKind::NonFinite, Some(t), format!("phi = {v}, phi' = {s}"));
                continue;
            }
            if s < 0.0 {
                report.push(ViolationKind::NegativeSlope, Some(t), format!("phi'({t}) = {s}"));
            }
            if c < -1e-12 * (1.0 + s.abs()) {
                report.push(ViolationKind::NegativeCurvature, Some(t), format!("phi''({t}) = {c}"));
            }
            if let Some((tp, vp, sp)) = prev {
                if v < vp - 1e-12 * (1.0 + vp.abs()) {
                    report.push(ViolationKind::Decreasing, Some(t), format!("phi({tp}) = {vp} > phi({t}) = {v}"));
                }
                if s < sp - 1e-12 * (1.0 + sp.abs()) {
                    report.push(ViolationKind::SlopeDecreasing, Some(t), format!("phi'({tp}) = {sp} > phi'({t}) = {s}"));
                }
            }
            prev = Some((t, v, s));
        }
        report
    }

    fn validate_parameters(&self, report: &mut Diagnostics) {
        match self {
            YoungFunction::Power { p } => {
                if !(p.is_finite() && *p > 1.0) {
                    report.push(ViolationKind::Parameter, None, format!("power exponent {p} must exceed 1"));
                }
            }
            YoungFunction::ScaledExp | YoungFunction::Exp => {}
            YoungFunction::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|a| !a.is_finite()) {
                    report.push(ViolationKind::Parameter, None, "coefficients must be finite and nonempty".into());
                    return;
                }
                if coeffs[0] < 0.0 {
                    report.push(
                        ViolationKind::NegativeSlope,
                        Some(0.0),
                        format!("a_1 = {} < 0 gives phi'(0) < 0", coeffs[0]),
                    );
                }
                match coeffs.iter().rposition(|a| *a != 0.0) {
                    Some(j) if j >= 1 && coeffs[j] > 0.0 => {}
                    _ => report.push(
                        ViolationKind::NotCoercive,
                        None,
                        "leading coefficient must be positive with degree >= 2".into(),
                    ),
                }
            }
            YoungFunction::Scaled { factor, base } => {
                if !(factor.is_finite() && *factor > 0.0) {
                    report.push(ViolationKind::Parameter, None, format!("scale factor {factor} must be > 0"));
                }
                base.validate_parameters(report);
            }
        }
    }
}

fn check_nonnegative(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeArgument(t))
    } else {
        Ok(())
    }
}

impl ConvexProfile for YoungFunction {
    fn value(&self, t: f64) -> f64 {
        match self {
            YoungFunction::Power { p } => t.powf(*p) / p,
            YoungFunction::ScaledExp => t.exp_m1() / E,
            YoungFunction::Exp => t.exp_m1(),
            YoungFunction::Polynomial { coeffs } => t * horner(coeffs, t),
            YoungFunction::Scaled { factor, base } => factor * base.value(t),
        }
    }

    fn slope(&self, t: f64) -> f64 {
        match self {
            YoungFunction::Power { p } => t.powf(p - 1.0),
            YoungFunction::ScaledExp => (t - 1.0).exp(),
            YoungFunction::Exp => t.exp(),
            YoungFunction::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (j, a) in coeffs.iter().enumerate().rev() {
                    acc = acc * t + (j + 1) as f64 * a;
                }
                acc
            }
            YoungFunction::Scaled { factor, base } => factor * base.slope(t),
        }
    }

    fn curvature(&self, t: f64) -> f64 {
        match self {
            YoungFunction::Power { p } => (p - 1.0) * t.powf(p - 2.0),
            YoungFunction::ScaledExp => (t - 1.0).exp(),
            YoungFunction::Exp => t.exp(),
            YoungFunction::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (j, a) in coeffs.iter().enumerate().skip(1).rev() {
                    let k = (j + 1) as f64;
                    acc = acc * t + k * (k - 1.0) * a;
                }
                acc
            }
            YoungFunction::Scaled { factor, base } => factor * base.curvature(t),
        }
    }

    fn inverse(&self, s: f64) -> Result<f64> {
        self.inverse_with(s, Tolerance::default())
    }

    fn slope_inverse(&self, y: f64) -> Result<f64> {
        check_nonnegative(y)?;
        if y <= self.slope_at_zero() {
            return Ok(0.0);
        }
        solve_increasing_from(
            |x| self.slope(x),
            Some(|x| self.curvature(x)),
            y,
            0.0,
            Tolerance::default(),
        )
    }
}

/// `a_1 + a_2 t + ... + a_k t^(k-1)`.
fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * t + a)
}

/// Closed-form tag of a conjugate, if it has one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ClosedForm {
    /// `y^q / q`.
    Power { q: f64 },
    /// `y ln y + 1/e` for `y >= 1/e`, else 0.
    ScaledExp,
}

#[derive(Debug, Clone, PartialEq)]
enum ConjugateForm {
    Power { q: f64 },
    ScaledExp,
    /// `(c phi)^*(y) = c phi^*(y / c)`.
    Scaled {
        factor: f64,
        inner: Box<ConjugateFunction>,
    },
    Numeric,
}

/// Legendre transform `phi^*(y) = sup_{x >= 0} (x y - phi(x))` of a Young
/// function.
///
/// `phi^*` vanishes on the plateau `[0, phi'(0)]` and is finite everywhere:
/// functions with bounded slope are rejected when the conjugate is built.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateFunction {
    source: YoungFunction,
    form: ConjugateForm,
    threshold: f64,
}

impl ConjugateFunction {
    pub fn source(&self) -> &YoungFunction {
        &self.source
    }

    /// `phi'(0)`: the conjugate is identically zero up to here.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        match self.form {
            ConjugateForm::Power { q } => Some(ClosedForm::Power { q }),
            ConjugateForm::ScaledExp => Some(ClosedForm::ScaledExp),
            _ => None,
        }
    }

    pub fn evaluate(&self, y: f64) -> Result<f64> {
        check_nonnegative(y)?;
        match &self.form {
            ConjugateForm::Numeric => legendre(&self.source, y),
            _ => Ok(self.value(y)),
        }
    }

    /// `inf { t : phi^*(t) >= s }` within `tol`.
    pub fn inverse_with(&self, s: f64, tol: Tolerance) -> Result<f64> {
        check_nonnegative(s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        match &self.form {
            ConjugateForm::Power { q } => Ok((q * s).powf(1.0 / q)),
            ConjugateForm::ScaledExp => Ok(lambert_w0(s - 1.0 / E)?.exp()),
            ConjugateForm::Scaled { factor, inner } => Ok(factor * inner.inverse_with(s / factor, tol)?),
            _ => {
                let start = self.threshold;
                solve_increasing_from(|t| self.value(t), Some(|t| self.slope(t)), s, start, tol)
            }
        }
    }
}

impl ConvexProfile for ConjugateFunction {
    fn value(&self, y: f64) -> f64 {
        match &self.form {
            ConjugateForm::Power { q } => y.powf(*q) / q,
            ConjugateForm::ScaledExp => {
                if y <= 1.0 / E {
                    0.0
                } else {
                    (y * y.ln() + 1.0 / E).max(0.0)
                }
            }
            ConjugateForm::Scaled { factor, inner } => factor * inner.value(y / factor),
            ConjugateForm::Numeric => legendre(&self.source, y).unwrap_or(f64::NAN),
        }
    }

    fn slope(&self, y: f64) -> f64 {
        match &self.form {
            ConjugateForm::Power { q } => y.powf(q - 1.0),
            ConjugateForm::ScaledExp => {
                if y <= 1.0 / E {
                    0.0
                } else {
                    1.0 + y.ln()
                }
            }
            ConjugateForm::Scaled { factor, inner } => inner.slope(y / factor),
            ConjugateForm::Numeric => self.source.slope_inverse(y).unwrap_or(f64::NAN),
        }
    }

    fn curvature(&self, y: f64) -> f64 {
        match &self.form {
            ConjugateForm::Power { q } => (q - 1.0) * y.powf(q - 2.0),
            ConjugateForm::ScaledExp => {
                if y <= 1.0 / E {
                    0.0
                } else {
                    1.0 / y
                }
            }
            ConjugateForm::Scaled { factor, inner } => inner.curvature(y / factor) / factor,
            ConjugateForm::Numeric => {
                if y <= self.threshold {
                    return 0.0;
                }
                match self.source.slope_inverse(y) {
                    Ok(x) => 1.0 / self.source.curvature(x),
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    fn slope_at_zero(&self) -> f64 {
        0.0
    }

    fn inverse(&self, s: f64) -> Result<f64> {
        self.inverse_with(s, Tolerance::default())
    }

    /// Solves `(phi^*)'(y) = t` by root-finding on the conjugate's own slope.
    fn slope_inverse(&self, t: f64) -> Result<f64> {
        check_nonnegative(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        solve_increasing_from(
            |y| self.slope(y),
            Some(|y| self.curvature(y)),
            t,
            self.threshold,
            Tolerance::default(),
        )
    }
}

/// Fenchel–Young gap `phi(x) + phi^*(y) - x y`; nonnegative, and zero
/// exactly when `y = phi'(x)`.
pub fn young_gap(f: &YoungFunction, x: f64, y: f64) -> Result<f64> {
    check_nonnegative(x)?;
    check_nonnegative(y)?;
    let conj = f.conjugate()?;
    Ok(f.value(x) + conj.evaluate(y)? - x * y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Parameter,
    NonzeroAtOrigin,
    NegativeSlope,
    NegativeCurvature,
    Decreasing,
    SlopeDecreasing,
    NotCoercive,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub at: Option<f64>,
    pub detail: String,
}

/// Axiom violations found by [`YoungFunction::validate`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
}

impl Diagnostics {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, at: Option<f64>, detail: String) {
        self.violations.push(Violation { kind, at, detail });
    }
}

/// Representative functions for audits: `Power(p)` at 50 evenly spaced
/// `p in [1.1, 10]`, `ScaledExp`, `Exp`, and 20 convex polynomials of
/// degree 2 to 5 with nonnegative coefficients drawn from `seed`.
pub fn registry(seed: u64) -> Vec<YoungFunction> {
    use rand::Rng;

    let mut out: Vec<YoungFunction> = (0..50)
        .map(|k| YoungFunction::Power {
            p: 1.1 + 8.9 * k as f64 / 49.0,
        })
        .collect();
    out.push(YoungFunction::ScaledExp);
    out.push(YoungFunction::Exp);
    let mut rng = crate::bodies::chunk_rng(seed, 0);
    for _ in 0..20 {
        let degree = rng.random_range(2..=5);
        let mut coeffs: Vec<f64> = (0..degree).map(|_| rng.random_range(0.0..2.0)).collect();
        coeffs[degree - 1] = rng.random_range(0.1..2.0);
        out.push(YoungFunction::Polynomial { coeffs });
    }
    out
}
