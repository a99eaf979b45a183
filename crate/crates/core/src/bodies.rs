//! Luxemburg unit balls `K_phi`, conjugate balls `K_phi*` and polar duals
//! `K_phi°` for an n-tuple of Young functions.
//!
//! All three bodies are convex, centrally symmetric and unconditional
//! (invariant under coordinate sign flips), so every routine reduces to the
//! positive orthant by taking absolute values first.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{minimize_unimodal, solve_increasing, solve_increasing_from, Tolerance};
use crate::young::{ConjugateFunction, ConvexProfile, YoungFunction};

const VALIDATION_GRID_MAX: f64 = 10.0;
const VALIDATION_GRID_N: usize = 512;

/// Default relative membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// An ordered n-tuple of validated Young functions with their conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungTuple {
    functions: Vec<YoungFunction>,
    conjugates: Vec<ConjugateFunction>,
}

impl YoungTuple {
    pub fn new(functions: Vec<YoungFunction>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidArgument("a Young tuple needs at least one function".into()));
        }
        for f in &functions {
            let report = f.validate(VALIDATION_GRID_MAX, VALIDATION_GRID_N);
            if let Some(v) = report.violations.first() {
                return Err(Error::InvalidFunction(format!("{f}: {}", v.detail)));
            }
        }
        let conjugates = functions.iter().map(|f| f.conjugate()).collect::<Result<Vec<_>>>()?;
        Ok(YoungTuple { functions, conjugates })
    }

    /// `n` copies of the same function.
    pub fn uniform(f: YoungFunction, n: usize) -> Result<Self> {
        Self::new(vec![f; n])
    }

    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    pub fn functions(&self) -> &[YoungFunction] {
        &self.functions
    }

    pub fn conjugates(&self) -> &[ConjugateFunction] {
        &self.conjugates
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite vector {v:?}")));
        }
        Ok(())
    }

    /// `sum_i phi_i(|x_i|)`.
    pub fn modular(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(modular(&self.functions, x))
    }

    /// `sum_i phi*_i(|y_i|)`.
    pub fn conjugate_modular(&self, y: &[f64]) -> Result<f64> {
        self.check_dim(y)?;
        Ok(modular(&self.conjugates, y))
    }

    /// Luxemburg norm `inf { lambda > 0 : sum_i phi_i(|x_i| / lambda) <= 1 }`.
    pub fn luxemburg_norm(&self, x: &[f64], tol: f64) -> Result<f64> {
        self.check_dim(x)?;
        luxemburg_norm(&self.functions, x, tol)
    }

    /// Luxemburg norm of the conjugate tuple; its unit ball is `K_phi*`.
    pub fn conjugate_luxemburg_norm(&self, y: &[f64], tol: f64) -> Result<f64> {
        self.check_dim(y)?;
        luxemburg_norm(&self.conjugates, y, tol)
    }

    /// Support function `h(y) = sup { <x, y> : x in K_phi }`.
    pub fn support(&self, y: &[f64], tol: f64) -> Result<f64> {
        self.check_dim(y)?;
        support_function(&self.functions, y, tol)
    }

    /// Amemiya formula `inf_{k > 0} (1 + sum_i phi*_i(k |y_i|)) / k`.
    ///
    /// Computed independently of [`Self::support`] (minimisation over the
    /// conjugates rather than a KKT solve over the `phi_i`), and equal to it.
    pub fn amemiya_norm(&self, y: &[f64], tol: f64) -> Result<f64> {
        self.check_dim(y)?;
        amemiya_norm(&self.conjugates, y, tol)
    }
}

fn modular<G: ConvexProfile>(profiles: &[G], x: &[f64]) -> f64 {
    profiles.iter().zip(x).map(|(g, xi)| g.value(xi.abs())).sum()
}

/// Luxemburg norm for any tuple of convex profiles.
///
/// Solves `M(mu) = sum_i g_i(mu |x_i|) = 1` for the scale `mu = 1 / lambda`;
/// `M` is increasing in `mu` with `M(0) = 0`.
pub fn luxemburg_norm<G: ConvexProfile>(profiles: &[G], x: &[f64], tol: f64) -> Result<f64> {
    if x.iter().all(|c| *c == 0.0) {
        return Ok(0.0);
    }
    let abs: Vec<f64> = x.iter().map(|c| c.abs()).collect();
    let m = |mu: f64| modular(profiles, &abs.iter().map(|a| mu * a).collect::<Vec<_>>());
    let dm = |mu: f64| {
        profiles
            .iter()
            .zip(&abs)
            .map(|(g, a)| if *a == 0.0 { 0.0 } else { a * g.slope(mu * a) })
            .sum::<f64>()
    };
    let mu = solve_increasing_from(m, Some(dm), 1.0, 0.0, Tolerance::with_rel(tol))?;
    Ok(1.0 / mu)
}

/// Support function of the unit ball `{ sum_i g_i(|x_i|) <= 1 }`.
///
/// The maximiser of `<x, y>` on the ball satisfies `y_i = mu g_i'(x_i)` with
/// `x_i = 0` whenever `y_i / mu <= g_i'(0)`. With `nu = 1 / mu` each
/// coordinate `x_i(nu) = (g_i')^{-1}(nu |y_i|)` is increasing, so the active
/// constraint `sum_i g_i(x_i(nu)) = 1` is a one-dimensional monotone solve.
pub fn support_function<G: ConvexProfile>(profiles: &[G], y: &[f64], tol: f64) -> Result<f64> {
    if y.iter().all(|c| *c == 0.0) {
        return Ok(0.0);
    }
    let abs: Vec<f64> = y.iter().map(|c| c.abs()).collect();
    let maximiser = |nu: f64| -> Result<Vec<f64>> {
        profiles
            .iter()
            .zip(&abs)
            .map(|(g, a)| if *a == 0.0 { Ok(0.0) } else { g.slope_inverse(nu * a) })
            .collect()
    };
    let constraint = |nu: f64| match maximiser(nu) {
        Ok(x) => modular(profiles, &x),
        Err(_) => f64::NAN,
    };
    let constraint_slope = |nu: f64| match maximiser(nu) {
        Ok(x) => profiles
            .iter()
            .zip(&abs)
            .zip(&x)
            .map(|((g, a), xi)| {
                if *xi == 0.0 {
                    0.0
                } else {
                    nu * a * a / g.curvature(*xi)
                }
            })
            .sum(),
        Err(_) => f64::NAN,
    };

    // the constraint is flat (zero) until nu |y_i| clears some g_i'(0)
    let start = profiles
        .iter()
        .zip(&abs)
        .filter(|(_, a)| **a > 0.0)
        .map(|(g, a)| g.slope_at_zero() / a)
        .fold(f64::INFINITY, f64::min);
    let tol = Tolerance::with_rel(tol.min(1e-12));
    let (lo, hi) = crate::numeric::bracket_upward(constraint, 1.0, start, start + 1.0)?;
    let nu = solve_increasing(constraint, Some(&constraint_slope), 1.0, lo, hi, tol)?;
    let x = maximiser(nu)?;
    Ok(x.iter().zip(&abs).map(|(xi, a)| xi * a).sum())
}

/// Amemiya norm of `y` built from the conjugate profiles.
pub fn amemiya_norm<G: ConvexProfile>(conjugates: &[G], y: &[f64], tol: f64) -> Result<f64> {
    let ymax = y.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if ymax == 0.0 {
        return Ok(0.0);
    }
    let abs: Vec<f64> = y.iter().map(|c| c.abs()).collect();
    let objective = |u: f64| {
        let k = u.exp();
        let s: f64 = conjugates.iter().zip(&abs).map(|(g, a)| g.value(k * a)).sum();
        (1.0 + s) / k
    };
    let (_, value) = minimize_unimodal(objective, -ymax.ln(), 0.5, tol.clamp(1e-14, 1e-8))?;
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BodyKind {
    /// `K_phi`.
    #[serde(rename = "kphi")]
    OrliczBall,
    /// `K_phi*`, the unit ball of the conjugate tuple.
    #[serde(rename = "kphistar")]
    ConjugateBall,
    /// `K_phi°`, the absolute polar of `K_phi`.
    #[serde(rename = "kpolar")]
    PolarDual,
}

/// One of the three bodies of a tuple, with its axis-aligned bounding box.
#[derive(Debug, Clone)]
pub struct Body {
    kind: BodyKind,
    tuple: YoungTuple,
    half_widths: Vec<f64>,
}

impl Body {
    pub fn new(kind: BodyKind, tuple: &YoungTuple) -> Result<Self> {
        let half_widths = match kind {
            BodyKind::OrliczBall => tuple.functions.iter().map(|f| f.inverse(1.0)).collect::<Result<Vec<_>>>()?,
            BodyKind::ConjugateBall => tuple.conjugates.iter().map(|g| g.inverse(1.0)).collect::<Result<Vec<_>>>()?,
            // h_{K°}(e_i) is the gauge of K_phi at e_i
            BodyKind::PolarDual => tuple
                .functions
                .iter()
                .map(|f| f.inverse(1.0).map(|w| 1.0 / w))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(Body {
            kind,
            tuple: tuple.clone(),
            half_widths,
        })
    }

    pub fn kind(&self) -> BodyKind {
        self.kind
    }

    pub fn tuple(&self) -> &YoungTuple {
        &self.tuple
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    /// Per-axis half-widths of the bounding box; these are the axis intercepts.
    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    /// The membership functional whose sublevel set `{ <= 1 }` is the body:
    /// the modular for the two Orlicz balls and `h_{K_phi}` for the polar.
    pub fn gauge_value(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            BodyKind::OrliczBall => self.tuple.modular(x),
            BodyKind::ConjugateBall => self.tuple.conjugate_modular(x),
            BodyKind::PolarDual => self.tuple.support(x, 1e-13),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.gauge_value(x)? <= 1.0 + tol)
    }

    /// Minkowski functional of the body.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            BodyKind::OrliczBall => self.tuple.luxemburg_norm(x, 1e-13),
            BodyKind::ConjugateBall => self.tuple.conjugate_luxemburg_norm(x, 1e-13),
            BodyKind::PolarDual => self.tuple.support(x, 1e-13),
        }
    }

    /// The point where the ray through `direction` leaves the body.
    pub fn boundary_point(&self, direction: &[f64]) -> Result<Vec<f64>> {
        if direction.iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidArgument("boundary direction must be nonzero".into()));
        }
        let r = self.norm(direction)?;
        Ok(direction.iter().map(|d| d / r).collect())
    }

    /// Closed boundary curve of a planar body, sampled at `resolution`
    /// equally spaced polar angles starting from the positive x-axis.
    /// Rows are `(theta, x1, x2)`.
    pub fn boundary_curve(&self, resolution: usize) -> Result<Vec<[f64; 3]>> {
        if self.dim() != 2 {
            return Err(Error::NotSupported(format!(
                "boundary curves are only drawn for planar bodies (n = {})",
                self.dim()
            )));
        }
        if resolution < 3 {
            return Err(Error::InvalidArgument("resolution must be at least 3".into()));
        }
        (0..resolution)
            .map(|k| {
                let theta = std::f64::consts::TAU * k as f64 / resolution as f64;
                let p = self.boundary_point(&[theta.cos(), theta.sin()])?;
                Ok([theta, p[0], p[1]])
            })
            .collect()
    }

    /// Hit-or-miss Monte Carlo volume inside the bounding box.
    ///
    /// Samples are drawn in fixed-size chunks, each from its own ChaCha
    /// stream keyed by the chunk index, so the estimate does not depend on
    /// how rayon schedules the chunks.
    pub fn volume_mc(&self, n_samples: usize, seed: u64) -> Result<VolumeEstimate> {
        if self.dim() == 0 {
            return Err(Error::NotSupported("volume of a zero-dimensional body".into()));
        }
        if n_samples < 1000 {
            return Err(Error::InvalidArgument(format!(
                "volume estimates need at least 1000 samples, got {n_samples}"
            )));
        }
        let chunks = n_samples.div_ceil(MC_CHUNK);
        let hits: usize = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let len = MC_CHUNK.min(n_samples - chunk * MC_CHUNK);
                let mut rng = chunk_rng(seed, chunk as u64);
                let mut x = vec![0.0; self.dim()];
                let mut count = 0usize;
                for _ in 0..len {
                    for (xi, w) in x.iter_mut().zip(&self.half_widths) {
                        *xi = w * rng.random_range(-1.0..1.0);
                    }
                    if self.gauge_value(&x).map(|g| g <= 1.0).unwrap_or(false) {
                        count += 1;
                    }
                }
                count
            })
            .sum();
        let box_volume: f64 = self.half_widths.iter().map(|w| 2.0 * w).product();
        let rate = hits as f64 / n_samples as f64;
        Ok(VolumeEstimate {
            estimate: box_volume * rate,
            stderr: box_volume * (rate * (1.0 - rate) / n_samples as f64).sqrt(),
            n_samples,
            seed,
        })
    }
}

pub(crate) const MC_CHUNK: usize = 1 << 14;

/// Deterministic per-chunk generator: one ChaCha stream per chunk index.
pub(crate) fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}
