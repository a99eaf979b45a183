//! Product embeddings of `B^{2n}(c)` and their containment checks.
//!
//! Coordinates: a point of `B^{2n}` is stored as planar pairs
//! `(u_1, v_1, ..., u_n, v_n)`; an image point is stored in Lagrangian order
//! `(x_1, ..., x_n, y_1, ..., y_n)`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::family::{feasibility_certificate, Feasibility};
use super::sigma::{build_sigma, JacobianAudit, SigmaMap, FEASIBILITY_GRID};
use crate::bodies::{chunk_rng, YoungTuple, MC_CHUNK};
use crate::capacity::index_products;
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EmbeddingSpec {
    tuple: YoungTuple,
    epsilon: f64,
    capacities: Vec<f64>,
    c: f64,
}

impl EmbeddingSpec {
    /// `c_i = 4 rho_i` for each factor and `c = min c_i`; requires
    /// `epsilon in (0, 1]` and `4 < c_i <= 8`.
    pub fn new(tuple: YoungTuple, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        let capacities: Vec<f64> = index_products(&tuple)?.iter().map(|r| 4.0 * r).collect();
        if let Some(ci) = capacities.iter().find(|ci| !(**ci > 4.0 && **ci <= 8.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!("factor capacity {ci} outside (4, 8]")));
        }
        let c = capacities.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(EmbeddingSpec {
            tuple,
            epsilon,
            capacities,
            c,
        })
    }

    pub fn tuple(&self) -> &YoungTuple {
        &self.tuple
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> usize {
        self.tuple.dim()
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    /// Capacity of the embedded ball.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Feasibility certificate of every factor.
    pub fn feasibility(&self) -> Result<Vec<Feasibility>> {
        let t = &self.tuple;
        t.functions()
            .iter()
            .zip(t.conjugates())
            .zip(&self.capacities)
            .map(|((f, g), ci)| feasibility_certificate(f, g, *ci, self.epsilon, self.n(), FEASIBILITY_GRID))
            .collect()
    }
}

/// `sigma_1 x ... x sigma_n` on `B^{2n}(c)`.
#[derive(Debug, Clone)]
pub struct ProductEmbedding {
    spec: EmbeddingSpec,
    maps: Vec<SigmaMap>,
}

impl ProductEmbedding {
    pub fn build(spec: EmbeddingSpec) -> Result<Self> {
        let n = spec.n();
        let t = spec.tuple();
        let maps = t
            .functions()
            .iter()
            .zip(t.conjugates())
            .zip(spec.capacities())
            .map(|((f, g), ci)| build_sigma(f, g, *ci, spec.epsilon(), n))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductEmbedding { spec, maps })
    }

    pub fn spec(&self) -> &EmbeddingSpec {
        &self.spec
    }

    pub fn maps(&self) -> &[SigmaMap] {
        &self.maps
    }

    pub fn evaluate(&self, z: &[f64]) -> Result<Vec<f64>> {
        product_map(&self.maps, z)
    }
}

/// Applies the planar maps pair by pair; see the module docs for layout.
pub fn product_map(maps: &[SigmaMap], z: &[f64]) -> Result<Vec<f64>> {
    let n = maps.len();
    if z.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: z.len(),
        });
    }
    let c = maps.iter().map(SigmaMap::capacity).fold(f64::INFINITY, f64::min);
    let action = PI * z.iter().map(|v| v * v).sum::<f64>();
    if !(action <= c * (1.0 + 1e-12)) {
        return Err(Error::OutOfDomain { action, capacity: c });
    }
    let mut out = vec![0.0; 2 * n];
    for (i, m) in maps.iter().enumerate() {
        let w = m.evaluate([z[2 * i], z[2 * i + 1]])?;
        out[i] = w[0];
        out[n + i] = w[1];
    }
    Ok(out)
}

/// Uniform point of `B^{2n}(c)`, or of its boundary sphere when `on_boundary`.
fn sample_ball<R: Rng>(rng: &mut R, dim: usize, c: f64, on_boundary: bool) -> Vec<f64> {
    let radius = (c / PI).sqrt();
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = if on_boundary {
        radius
    } else {
        radius * rng.random::<f64>().powf(1.0 / dim as f64)
    };
    v.iter_mut().for_each(|x| *x *= r / norm);
    v
}

/// Every eighth sample sits on the boundary sphere; sample 0 is the origin.
fn sample_point<R: Rng>(rng: &mut R, index: usize, dim: usize, c: f64) -> Vec<f64> {
    if index == 0 {
        vec![0.0; dim]
    } else {
        sample_ball(rng, dim, c, index % 8 == 7)
    }
}

/// Runs `visit` over `n_samples` deterministic ball samples, chunk by
/// chunk, and merges the per-chunk summaries in chunk order.
fn over_samples<S, V, M>(spec: &EmbeddingSpec, n_samples: usize, seed: u64, visit: V, merge: M, empty: S) -> Result<S>
where
    S: Send + Sync + Clone,
    V: Fn(&mut S, Vec<f64>) -> Result<()> + Sync,
    M: Fn(S, S) -> S,
{
    let dim = 2 * spec.n();
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<S> {
            let start = chunk * MC_CHUNK;
            let len = MC_CHUNK.min(n_samples - start);
            let mut rng = chunk_rng(seed, chunk as u64);
            let mut acc = empty.clone();
            for k in 0..len {
                visit(&mut acc, sample_point(&mut rng, start + k, dim, spec.c()))?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<S>>>()?;
    Ok(parts.into_iter().fold(empty, merge))
}

/// A running maximum with the preimage that attains it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub at: Vec<f64>,
}

impl Extremum {
    fn max() -> Self {
        Extremum {
            value: f64::NEG_INFINITY,
            at: Vec::new(),
        }
    }

    fn min() -> Self {
        Extremum {
            value: f64::INFINITY,
            at: Vec::new(),
        }
    }

    fn raise(&mut self, v: f64, z: &[f64]) {
        if v > self.value {
            self.value = v;
            self.at = z.to_vec();
        }
    }

    fn lower(&mut self, v: f64, z: &[f64]) {
        if v < self.value {
            self.value = v;
            self.at = z.to_vec();
        }
    }

    fn keep_max(self, other: Self) -> Self {
        if other.value > self.value {
            other
        } else {
            self
        }
    }

    fn keep_min(self, other: Self) -> Self {
        if other.value < self.value {
            other
        } else {
            self
        }
    }
}

/// Result of [`verify_containment_dual`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualContainment {
    pub samples: usize,
    pub seed: u64,
    /// `1 + eps`.
    pub bound: f64,
    /// Largest `sum_i phi_i(|x_i|)`.
    pub phi_sum: Extremum,
    /// Largest `sum_i phi*_i(|y_i|)`.
    pub conjugate_sum: Extremum,
    /// Smallest `A_i / c_i + eps / n - phi_i(|x_i|)` over samples and factors.
    pub margin_i: Extremum,
    /// Smallest `A_i / c_i + eps / n - phi*_i(|y_i|)`.
    pub margin_ii: Extremum,
}

impl DualContainment {
    pub fn pass(&self) -> bool {
        self.phi_sum.value <= self.bound
            && self.conjugate_sum.value <= self.bound
            && self.margin_i.value > 0.0
            && self.margin_ii.value > 0.0
    }
}

/// Samples `B^{2n}(c)` and checks that the image lies in
/// `(1 + eps) (K_phi x K_phi*)` and that both planar constraints hold
/// strictly in every factor.
pub fn verify_containment_dual(pm: &ProductEmbedding, n_samples: usize, seed: u64) -> Result<DualContainment> {
    let spec = pm.spec();
    let t = spec.tuple();
    let bound = 1.0 + spec.epsilon();
    let empty = (Extremum::max(), Extremum::max(), Extremum::min(), Extremum::min());
    let (phi_sum, conjugate_sum, margin_i, margin_ii) = over_samples(
        spec,
        n_samples,
        seed,
        |acc, z| {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for (i, m) in pm.maps().iter().enumerate() {
                let (u, v) = (z[2 * i], z[2 * i + 1]);
                let w = m.evaluate([u, v])?;
                let level = m.family().level((PI * (u * u + v * v)).min(m.capacity()));
                let fx = t.functions()[i].evaluate(w[0].abs())?;
                let fy = t.conjugates()[i].evaluate(w[1].abs())?;
                sx += fx;
                sy += fy;
                acc.2.lower(level - fx, &z);
                acc.3.lower(level - fy, &z);
            }
            acc.0.raise(sx, &z);
            acc.1.raise(sy, &z);
            Ok(())
        },
        |a, b| (a.0.keep_max(b.0), a.1.keep_max(b.1), a.2.keep_min(b.2), a.3.keep_min(b.3)),
        empty,
    )?;
    let report = DualContainment {
        samples: n_samples,
        seed,
        bound,
        phi_sum,
        conjugate_sum,
        margin_i,
        margin_ii,
    };
    for (what, e) in [("sum phi(|x|)", &report.phi_sum), ("sum phi*(|y|)", &report.conjugate_sum)] {
        if e.value > bound {
            return Err(violation(what, e.value, bound, &e.at));
        }
    }
    for (what, e) in [("negated margin (i)", &report.margin_i), ("negated margin (ii)", &report.margin_ii)] {
        if !(e.value > 0.0) {
            return Err(violation(what, -e.value, 0.0, &e.at));
        }
    }
    Ok(report)
}

fn violation(what: &'static str, value: f64, bound: f64, witness: &[f64]) -> Error {
    Error::ContainmentViolation {
        what,
        value,
        bound,
        witness: witness.to_vec(),
    }
}

/// Gauges of one image point `(x, y)` against the polar-product bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarPoint {
    pub phi_sum: f64,
    /// `h_{K_phi}(y)`.
    pub support: f64,
    /// Luxemburg norm of `sqrt(2) x`.
    pub rescaled_gauge: f64,
    /// `h_{K_phi}(y / sqrt(2))`.
    pub rescaled_support: f64,
}

/// Bounds used by [`check_polar_point`]: `1 + eps`, `2 + eps` and `sqrt(2) (1 + eps)`.
pub fn polar_bounds(epsilon: f64) -> (f64, f64, f64) {
    (1.0 + epsilon, 2.0 + epsilon, SQRT_2 * (1.0 + epsilon))
}

/// Checks `sum phi(|x|) <= 1 + eps`, `h(y) <= 2 + eps`, and that the
/// rescaled point `(sqrt(2) x, y / sqrt(2))` lies in
/// `sqrt(2) (1 + eps) (K_phi x K_phi°)`.
pub fn check_polar_point(tuple: &YoungTuple, x: &[f64], y: &[f64], epsilon: f64) -> Result<PolarPoint> {
    let (b_mod, b_supp, b_scaled) = polar_bounds(epsilon);
    let xs: Vec<f64> = x.iter().map(|v| SQRT_2 * v).collect();
    let ys: Vec<f64> = y.iter().map(|v| v / SQRT_2).collect();
    let pt = PolarPoint {
        phi_sum: tuple.modular(x)?,
        support: tuple.support(y, NORM_TOL)?,
        rescaled_gauge: tuple.luxemburg_norm(&xs, NORM_TOL)?,
        rescaled_support: tuple.support(&ys, NORM_TOL)?,
    };
    let witness = || [x, y].concat();
    let checks = [
        ("sum phi(|x|)", pt.phi_sum, b_mod),
        ("support h(y)", pt.support, b_supp),
        ("rescaled gauge of sqrt(2) x", pt.rescaled_gauge, b_scaled),
        ("rescaled support h(y / sqrt(2))", pt.rescaled_support, b_scaled),
    ];
    for (what, value, bound) in checks {
        if value > bound {
            return Err(violation(what, value, bound, &witness()));
        }
    }
    Ok(pt)
}

/// Result of [`verify_containment_polar`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarContainment {
    pub samples: usize,
    pub seed: u64,
    pub phi_sum: Extremum,
    pub support: Extremum,
    pub rescaled_gauge: Extremum,
    pub rescaled_support: Extremum,
    pub phi_bound: f64,
    pub support_bound: f64,
    pub rescaled_bound: f64,
}

/// Samples `B^{2n}(c)` and runs [`check_polar_point`] on every image.
pub fn verify_containment_polar(pm: &ProductEmbedding, n_samples: usize, seed: u64) -> Result<PolarContainment> {
    let spec = pm.spec();
    let n = spec.n();
    let eps = spec.epsilon();
    let empty = [Extremum::max(), Extremum::max(), Extremum::max(), Extremum::max()];
    let [phi_sum, support, rescaled_gauge, rescaled_support] = over_samples(
        spec,
        n_samples,
        seed,
        |acc, z| {
            let img = pm.evaluate(&z)?;
            let pt = match check_polar_point(spec.tuple(), &img[..n], &img[n..], eps) {
                Ok(pt) => pt,
                // report the preimage rather than the image
                Err(Error::ContainmentViolation { what, value, bound, .. }) => {
                    return Err(violation(what, value, bound, &z))
                }
                Err(e) => return Err(e),
            };
            acc[0].raise(pt.phi_sum, &z);
            acc[1].raise(pt.support, &z);
            acc[2].raise(pt.rescaled_gauge, &z);
            acc[3].raise(pt.rescaled_support, &z);
            Ok(())
        },
        |a, b| {
            let [a0, a1, a2, a3] = a;
            let [b0, b1, b2, b3] = b;
            [a0.keep_max(b0), a1.keep_max(b1), a2.keep_max(b2), a3.keep_max(b3)]
        },
        empty,
    )?;
    let (phi_bound, support_bound, rescaled_bound) = polar_bounds(eps);
    Ok(PolarContainment {
        samples: n_samples,
        seed,
        phi_sum,
        support,
        rescaled_gauge,
        rescaled_support,
        phi_bound,
        support_bound,
        rescaled_bound,
    })
}

/// Sample counts and seeds for [`embed_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbedSettings {
    pub dual_samples: usize,
    pub polar_samples: usize,
    pub jacobian_points: usize,
    pub jacobian_step: f64,
    pub seed: u64,
}

impl Default for EmbedSettings {
    fn default() -> Self {
        EmbedSettings {
            dual_samples: 100_000,
            polar_samples: 10_000,
            jacobian_points: 10_000,
            jacobian_step: 1e-4,
            seed: 0,
        }
    }
}

/// Largest tolerated `|det D sigma - 1|` in the Jacobian audit.
pub const JACOBIAN_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintMargins {
    pub condition_i: f64,
    pub condition_ii: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Containment {
    pub dual: Option<DualContainment>,
    pub polar: Option<PolarContainment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub dual: u64,
    pub polar: u64,
    pub jacobian: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedReport {
    pub epsilon: f64,
    pub n: usize,
    pub capacities: Vec<f64>,
    pub c: f64,
    /// One certificate per factor.
    pub feasibility: Vec<Feasibility>,
    pub built: bool,
    /// Why the construction was refused, when it was.
    pub build_error: Option<String>,
    pub jacobian: Vec<JacobianAudit>,
    pub jacobian_max_dev: Option<f64>,
    pub constraint_margins: Option<ConstraintMargins>,
    pub containment: Containment,
    pub seeds: Seeds,
    /// Failed checks on a built embedding.
    pub violations: Vec<String>,
}

impl EmbedReport {
    /// True when every check on a built embedding passed. An embedding
    /// that could not be built carries no violations: infeasibility is a
    /// finding, recorded in `feasibility` and `build_error`.
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Feasibility, construction and all verification passes for one tuple.
pub fn embed_report(spec: EmbeddingSpec, settings: &EmbedSettings) -> Result<EmbedReport> {
    let seed = settings.seed;
    let seeds = Seeds {
        dual: seed,
        polar: seed.wrapping_add(1),
        jacobian: (0..spec.n() as u64).map(|i| seed.wrapping_add(2 + i)).collect(),
    };
    let mut report = EmbedReport {
        epsilon: spec.epsilon(),
        n: spec.n(),
        capacities: spec.capacities().to_vec(),
        c: spec.c(),
        feasibility: spec.feasibility()?,
        built: false,
        build_error: None,
        jacobian: Vec::new(),
        jacobian_max_dev: None,
        constraint_margins: None,
        containment: Containment { dual: None, polar: None },
        seeds,
        violations: Vec::new(),
    };

    let pm = match ProductEmbedding::build(spec) {
        Ok(pm) => pm,
        Err(e @ (Error::InfeasibleConstraints { .. } | Error::NonMonotoneFamily { .. })) => {
            report.build_error = Some(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.built = true;

    for (m, s) in pm.maps().iter().zip(&report.seeds.jacobian) {
        report.jacobian.push(m.jacobian_audit(settings.jacobian_points, settings.jacobian_step, *s)?);
    }
    let worst = report.jacobian.iter().map(|a| a.max_dev).fold(0.0, f64::max);
    report.jacobian_max_dev = Some(worst);
    if worst > JACOBIAN_TOL {
        report.violations.push(format!("jacobian deviation {worst:e} exceeds {JACOBIAN_TOL:e}"));
    }

    match verify_containment_dual(&pm, settings.dual_samples, report.seeds.dual) {
        Ok(d) => {
            report.constraint_margins = Some(ConstraintMargins {
                condition_i: d.margin_i.value,
                condition_ii: d.margin_ii.value,
            });
            report.containment.dual = Some(d);
        }
        Err(e @ Error::ContainmentViolation { .. }) => report.violations.push(e.to_string()),
        Err(e) => return Err(e),
    }
    match verify_containment_polar(&pm, settings.polar_samples, report.seeds.polar) {
        Ok(p) => report.containment.polar = Some(p),
        Err(e @ Error::ContainmentViolation { .. }) => report.violations.push(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::young::YoungFunction;

    fn spec(f: YoungFunction, n: usize, eps: f64) -> EmbeddingSpec {
        EmbeddingSpec::new(YoungTuple::uniform(f, n).unwrap(), eps).unwrap()
    }

    #[test]
    fn spec_rejects_bad_epsilon() {
        let t = YoungTuple::uniform(YoungFunction::power(2.0).unwrap(), 2).unwrap();
        assert!(EmbeddingSpec::new(t.clone(), 0.0).is_err());
        assert!(EmbeddingSpec::new(t.clone(), 1.5).is_err());
        assert!(EmbeddingSpec::new(t, 1.0).is_ok());
    }

    #[test]
    fn origin_maps_to_origin() {
        let pm = ProductEmbedding::build(spec(YoungFunction::power(2.0).unwrap(), 2, 0.05)).unwrap();
        assert_eq!(pm.evaluate(&[0.0; 4]).unwrap(), vec![0.0; 4]);
        assert!(matches!(pm.evaluate(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(pm.evaluate(&[2.0, 0.0, 0.0, 0.0]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn single_factor_matches_planar_map() {
        let pm = ProductEmbedding::build(spec(YoungFunction::power(2.0).unwrap(), 1, 0.05)).unwrap();
        let z = [0.4, -0.9];
        let w = pm.maps()[0].evaluate(z).unwrap();
        assert_eq!(pm.evaluate(&z).unwrap(), w.to_vec());
    }

    #[test]
    fn ball_samples_stay_in_ball() {
        let s = spec(YoungFunction::power(2.0).unwrap(), 3, 0.05);
        let mut rng = chunk_rng(9, 0);
        for k in 0..500 {
            let z = sample_point(&mut rng, k, 6, s.c());
            let a = PI * z.iter().map(|v| v * v).sum::<f64>();
            assert!(a <= s.c() * (1.0 + 1e-14));
            if k % 8 == 7 {
                assert!((a - s.c()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn synthetic_polar_witness_is_caught() {
        let t = YoungTuple::uniform(YoungFunction::power(2.0).unwrap(), 2).unwrap();
        let eps = 0.05;
        // for p = 2, h(y) = sqrt(2) |y|, so this y has support exactly 2 + eps + 1e-3
        let target = 2.0 + eps + 1e-3;
        let y = [target / SQRT_2, 0.0];
        match check_polar_point(&t, &[0.0, 0.0], &y, eps) {
            Err(Error::ContainmentViolation { what, value, witness, .. }) => {
                assert_eq!(what, "support h(y)");
                assert!((value - target).abs() < 1e-9);
                assert_eq!(witness.len(), 4);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }
}
