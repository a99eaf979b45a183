//! Capacity formulas for the two Lagrangian products built from a tuple.
//!
//! For `K_phi x K_phi*` every normalized capacity equals `4 min_i rho_i`
//! with `rho_i = phi_i^{-1}(1) (phi_i*)^{-1}(1)`. For `K_phi x K_phi°` only
//! the interval `[2 min_i rho_i, 4]` is known. Since `1 < rho_i <= 2`, the
//! first value lies in `(4, 8]` and the lower bound of the second in `(2, 4]`.
//!
//! Alongside the formulas this module audits the scalar inequalities they
//! rest on and the volume chain `4^n/n! <= V V* / rho^n < V V*`.

use rand::Rng;
use serde::Serialize;

use crate::bodies::{chunk_rng, Body, BodyKind, VolumeEstimate, YoungTuple};
use crate::error::Result;
use crate::young::{ConvexProfile, YoungFunction};

pub const DEFAULT_FLAG_TOL: f64 = 1e-9;

/// `rho_i = phi_i^{-1}(1) (phi_i*)^{-1}(1)` for every component.
pub fn index_products(tuple: &YoungTuple) -> Result<Vec<f64>> {
    tuple
        .functions()
        .iter()
        .zip(tuple.conjugates())
        .map(|(f, g)| Ok(f.inverse(1.0)? * g.inverse(1.0)?))
        .collect()
}

/// Index of the smallest entry; ties go to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Common value of all normalized capacities of `K_phi x K_phi*`.
pub fn capacity_dual_product(tuple: &YoungTuple) -> Result<f64> {
    let rho = index_products(tuple)?;
    Ok(4.0 * rho[argmin(&rho)])
}

/// `(2 min rho, 4)`: bounds on any normalized capacity of `K_phi x K_phi°`.
pub fn capacity_polar_bounds(tuple: &YoungTuple) -> Result<(f64, f64)> {
    let rho = index_products(tuple)?;
    Ok((2.0 * rho[argmin(&rho)], 4.0))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Whether `(phi*)^{-1}(1) = phi'(phi^{-1}(1))`, i.e. Young's inequality is
/// an equality at the corner of the rectangle `[phi^{-1}(1)] x [(phi*)^{-1}(1)]`.
fn young_equality_at_unit_level(f: &YoungFunction, tol: f64) -> Result<bool> {
    let x = f.inverse(1.0)?;
    let y = f.conjugate()?.inverse(1.0)?;
    Ok(close(y, f.slope(x), tol))
}

/// Three separately computed conditions bearing on whether the polar
/// product has capacity exactly 4.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViterboCertificate {
    pub index: usize,
    pub rho_min: f64,
    /// `min rho = 2`: the lower bound `2 min rho` meets the upper bound 4.
    pub pinned: bool,
    /// `phi_I'(1) = 1` at the minimising index.
    pub unit_slope: bool,
    /// `(phi_I*)^{-1}(1) = phi_I'(phi_I^{-1}(1))`.
    pub young_equality: bool,
    /// `pinned` and `unit_slope` disagree.
    pub disagreement: bool,
    pub capacity_interval: (f64, f64),
}

pub fn strong_viterbo_check(tuple: &YoungTuple, tol: f64) -> Result<ViterboCertificate> {
    let rho = index_products(tuple)?;
    let index = argmin(&rho);
    let rho_min = rho[index];
    let f = &tuple.functions()[index];
    let pinned = close(rho_min, 2.0, tol);
    let unit_slope = close(f.slope(1.0), 1.0, tol);
    let young_equality = young_equality_at_unit_level(f, tol)?;
    Ok(ViterboCertificate {
        index,
        rho_min,
        pinned,
        unit_slope,
        young_equality,
        disagreement: pinned != unit_slope,
        capacity_interval: (2.0 * rho_min, 4.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MahlerChain {
    pub n: usize,
    pub vol_k: VolumeEstimate,
    pub vol_kstar: VolumeEstimate,
    /// `4^n / n!`.
    pub lower: f64,
    /// `V V* / (min rho)^n`.
    pub middle: f64,
    pub middle_stderr: f64,
    /// `V V*`.
    pub upper: f64,
    pub upper_stderr: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

impl MahlerChain {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Monte Carlo check of `4^n/n! <= V(K) V(K*) / (min rho)^n < V(K) V(K*)`.
///
/// `K_phi` is sampled with `seed` and `K_phi*` with `seed + 1`. The lower
/// inequality is accepted within three propagated standard errors.
pub fn mahler_chain(tuple: &YoungTuple, mc_samples: usize, seed: u64) -> Result<MahlerChain> {
    let n = tuple.dim();
    let rho = index_products(tuple)?;
    let rho_min = rho[argmin(&rho)];
    let vol_k = Body::new(BodyKind::OrliczBall, tuple)?.volume_mc(mc_samples, seed)?;
    let vol_kstar = Body::new(BodyKind::ConjugateBall, tuple)?.volume_mc(mc_samples, seed.wrapping_add(1))?;

    let upper = vol_k.estimate * vol_kstar.estimate;
    let rel_err = rel(vol_k).hypot(rel(vol_kstar));
    let upper_stderr = upper * rel_err;
    let scale = rho_min.powi(n as i32);
    let middle = upper / scale;
    let middle_stderr = upper_stderr / scale;
    let lower = 4f64.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();

    Ok(MahlerChain {
        n,
        vol_k,
        vol_kstar,
        lower,
        middle,
        middle_stderr,
        upper,
        upper_stderr,
        lower_holds: lower <= middle + 3.0 * middle_stderr + 1e-12 * lower,
        upper_holds: middle < upper,
    })
}

fn rel(v: VolumeEstimate) -> f64 {
    if v.estimate > 0.0 {
        v.stderr / v.estimate
    } else {
        0.0
    }
}

/// Sampling plan for [`inequality_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityGrid {
    /// Random `(x, y)` pairs in `[0, x_max]^2` for the Young gap.
    pub n_random: usize,
    /// Points per axis on `(0, x_max]` for the deterministic grids.
    pub grid_n: usize,
    pub x_max: f64,
    pub seed: u64,
}

impl Default for InequalityGrid {
    fn default() -> Self {
        InequalityGrid {
            n_random: 10_000,
            grid_n: 100,
            x_max: 10.0,
            seed: 0,
        }
    }
}

pub const YOUNG_GAP_FLOOR: f64 = -1e-12;
pub const EQUALITY_GAP_CEIL: f64 = 1e-10;
pub const PRODUCT_SLACK: f64 = 1e-10;

/// Worst margins of the scalar inequalities for one component.
///
/// Young gaps are divided by `max(1, phi(x) + phi*(y))` so that the
/// thresholds stay meaningful once the terms outgrow double precision at
/// unit scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentInequalities {
    pub function: String,
    /// `min (phi(x) + phi*(y) - x y)` over random pairs, scaled.
    pub young_gap_min: f64,
    /// `max (phi(x) + phi*(phi'(x)) - x phi'(x))` over the grid, scaled.
    pub equality_gap_max: f64,
    /// `min (x + y - phi^{-1}(x) (phi*)^{-1}(y))`.
    pub product_margin: f64,
    /// `min (phi^{-1}(x) (phi*)^{-1}(x) - x)`.
    pub lower_margin: f64,
    /// `min (phi(a) - phi*(phi(a) / a))`.
    pub dual_margin: f64,
    pub slope_nondecreasing: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub components: Vec<ComponentInequalities>,
    pub worst_young_gap: f64,
    pub worst_equality_gap: f64,
    pub worst_product_margin: f64,
    pub worst_lower_margin: f64,
    pub worst_dual_margin: f64,
    pub pass: bool,
}

pub fn component_inequalities(f: &YoungFunction, grid: &InequalityGrid) -> Result<ComponentInequalities> {
    let conj = f.conjugate()?;
    let g = grid.grid_n.max(2);
    let axis: Vec<f64> = (1..=g).map(|k| grid.x_max * k as f64 / g as f64).collect();

    let mut rng = chunk_rng(grid.seed, 0);
    let mut young_gap_min = f64::INFINITY;
    for _ in 0..grid.n_random {
        let x = rng.random_range(0.0..=grid.x_max);
        let y = rng.random_range(0.0..=grid.x_max);
        let (fx, gy) = (f.value(x), conj.evaluate(y)?);
        let gap = (fx + gy - x * y) / (fx + gy).max(1.0);
        young_gap_min = young_gap_min.min(gap);
    }

    let mut equality_gap_max = f64::NEG_INFINITY;
    for x in std::iter::once(0.0).chain(axis.iter().copied()) {
        let y = f.slope(x);
        let (fx, gy) = (f.value(x), conj.evaluate(y)?);
        equality_gap_max = equality_gap_max.max((fx + gy - x * y) / (fx + gy).max(1.0));
    }

    let inv: Vec<f64> = axis.iter().map(|&s| f.inverse(s)).collect::<Result<_>>()?;
    let conj_inv: Vec<f64> = axis.iter().map(|&s| conj.inverse(s)).collect::<Result<_>>()?;
    let mut product_margin = f64::INFINITY;
    for (i, x) in axis.iter().enumerate() {
        for (j, y) in axis.iter().enumerate() {
            product_margin = product_margin.min(x + y - inv[i] * conj_inv[j]);
        }
    }
    let lower_margin = axis
        .iter()
        .enumerate()
        .map(|(k, x)| inv[k] * conj_inv[k] - x)
        .fold(f64::INFINITY, f64::min);

    let mut dual_margin = f64::INFINITY;
    for &a in &axis {
        let fa = f.value(a);
        dual_margin = dual_margin.min(fa - conj.evaluate(fa / a)?);
    }

    let slope_nondecreasing = axis.windows(2).all(|w| f.slope(w[1]) >= f.slope(w[0]));
    let pass = young_gap_min >= YOUNG_GAP_FLOOR
        && equality_gap_max <= EQUALITY_GAP_CEIL
        && product_margin >= -PRODUCT_SLACK
        && lower_margin > 0.0
        && dual_margin > 0.0
        && slope_nondecreasing;

    Ok(ComponentInequalities {
        function: f.to_string(),
        young_gap_min,
        equality_gap_max,
        product_margin,
        lower_margin,
        dual_margin,
        slope_nondecreasing,
        pass,
    })
}

/// Runs the scalar inequality battery on every component of the tuple.
pub fn inequality_suite(tuple: &YoungTuple, grid: &InequalityGrid) -> Result<InequalityReport> {
    let components = tuple
        .functions()
        .iter()
        .map(|f| component_inequalities(f, grid))
        .collect::<Result<Vec<_>>>()?;
    let worst = |pick: fn(&ComponentInequalities) -> f64, max: bool| {
        components.iter().map(pick).fold(if max { f64::NEG_INFINITY } else { f64::INFINITY }, |a, b| {
            if max {
                a.max(b)
            } else {
                a.min(b)
            }
        })
    };
    Ok(InequalityReport {
        worst_young_gap: worst(|c| c.young_gap_min, false),
        worst_equality_gap: worst(|c| c.equality_gap_max, true),
        worst_product_margin: worst(|c| c.product_margin, false),
        worst_lower_margin: worst(|c| c.lower_margin, false),
        worst_dual_margin: worst(|c| c.dual_margin, false),
        pass: components.iter().all(|c| c.pass),
        components,
    })
}

/// Capacity values, bounds and condition flags for one tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub rho: Vec<f64>,
    pub argmin_index: usize,
    pub c_dual: f64,
    pub polar_lower: f64,
    pub polar_upper: f64,
    pub equality_flags: Vec<bool>,
    /// `phi_I'(1) = 1` at the minimising index.
    pub unit_slope_flag: bool,
    pub certificate: ViterboCertificate,
    pub mahler: Option<MahlerChain>,
    pub violations: Vec<String>,
}

impl CapacityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Builds the full report. The volume chain is included when `mahler` is
/// `Some((samples, seed))`.
pub fn capacity_report(tuple: &YoungTuple, tol: f64, mahler: Option<(usize, u64)>) -> Result<CapacityReport> {
    let rho = index_products(tuple)?;
    let argmin_index = argmin(&rho);
    let rho_min = rho[argmin_index];
    let certificate = strong_viterbo_check(tuple, tol)?;
    let equality_flags = tuple
        .functions()
        .iter()
        .map(|f| young_equality_at_unit_level(f, tol))
        .collect::<Result<Vec<_>>>()?;
    let mahler = mahler.map(|(samples, seed)| mahler_chain(tuple, samples, seed)).transpose()?;

    let (c_dual, polar_lower, polar_upper) = (4.0 * rho_min, 2.0 * rho_min, 4.0);
    let mut violations = Vec::new();
    for (i, r) in rho.iter().enumerate() {
        if !(*r > 1.0 && *r <= 2.0 + 1e-12) {
            violations.push(format!("rho[{i}] = {r} outside (1, 2]"));
        }
    }
    if c_dual > 8.0 + 1e-12 {
        violations.push(format!("c_dual = {c_dual} exceeds 8"));
    }
    if polar_lower > polar_upper + 1e-12 {
        violations.push(format!("polar lower bound {polar_lower} exceeds upper bound {polar_upper}"));
    }
    if polar_lower <= 2.0 {
        violations.push(format!("polar lower bound {polar_lower} is not above 2"));
    }
    if let Some(m) = &mahler {
        if !m.holds() {
            violations.push(format!(
                "volume chain fails: {} <= {} +- {} < {}",
                m.lower, m.middle, m.middle_stderr, m.upper
            ));
        }
    }

    Ok(CapacityReport {
        unit_slope_flag: certificate.unit_slope,
        rho,
        argmin_index,
        c_dual,
        polar_lower,
        polar_upper,
        equality_flags,
        certificate,
        mahler,
        violations,
    })
}
