//! The planar maps: circles of action `A` go to the boundary of `R(A)`,
//! parameterised by boundary measure.
//!
//! The four sides of `R(A)` move outward with normal speeds `alpha'` (left
//! and right) and `beta'` (top and bottom). Giving each side the measure
//! `speed x length` makes the total `4 (alpha beta)' = 1`, and sending the
//! angle `theta` to the point at cumulative measure `theta / 2 pi` yields a
//! map with Jacobian 1 away from the four corners.
//!
//! Measure starts at `(alpha, 0)` and runs counterclockwise.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use super::family::{feasibility_certificate, Feasibility, NestedRectFamily, RectState};
use crate::bodies::{chunk_rng, MC_CHUNK};
use crate::error::{Error, Result};
use crate::numeric::{solve_increasing, Tolerance};
use crate::young::{ConjugateFunction, YoungFunction};
use rand::Rng;

/// Grid used for the construction audit (nesting, area, mass).
pub const CONSTRUCTION_GRID: usize = 10_000;
/// Grid used for the feasibility certificate inside [`build_sigma`].
pub const FEASIBILITY_GRID: usize = 10_000;
/// Seam clearance for finite differences, in units of the step.
pub const SEAM_CLEARANCE_STEPS: f64 = 10.0;
/// Points closer to the origin than this many steps are not differenced:
/// the map is only Lipschitz there and the stencil error is about `h^2 / (6 |z|^2)`.
pub const CORE_CLEARANCE_STEPS: f64 = 100.0;
/// Actions below this are treated as degenerate by [`SigmaMap::jacobian_check`].
pub const MIN_JACOBIAN_ACTION: f64 = 1e-6;

const AREA_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-10;

/// One side of a rectangle, in boundary order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Top,
    Left,
    Bottom,
}

/// Cumulative measure at the four corners of `R(A)`, starting from `(alpha, 0)`.
fn corners(st: &RectState) -> [f64; 4] {
    let half_right = st.dalpha * st.beta;
    let top = 2.0 * st.alpha * st.dbeta;
    let left = 2.0 * st.beta * st.dalpha;
    let c1 = half_right;
    let c2 = c1 + top;
    let c3 = c2 + left;
    let c4 = c3 + top;
    [c1, c2, c3, c4]
}

fn side_of(st: &RectState, m: f64) -> Side {
    let [c1, c2, c3, c4] = corners(st);
    if m < c1 || m >= c4 {
        Side::Right
    } else if m < c2 {
        Side::Top
    } else if m < c3 {
        Side::Left
    } else {
        Side::Bottom
    }
}

/// Point of `boundary R(A)` at cumulative measure `m in [0, 1)`.
fn boundary_at(st: &RectState, m: f64) -> [f64; 2] {
    let [c1, c2, c3, c4] = corners(st);
    let (al, be) = (st.alpha, st.beta);
    if m < c1 {
        [al, m / st.dalpha]
    } else if m < c2 {
        [al - (m - c1) / st.dbeta, be]
    } else if m < c3 {
        [-al, be - (m - c2) / st.dalpha]
    } else if m < c4 {
        [-al + (m - c3) / st.dbeta, -be]
    } else {
        [al, -be + (m - c4) / st.dalpha]
    }
}

/// Cumulative measure of a point known to lie on `boundary R(A)`.
fn measure_of(st: &RectState, w: [f64; 2]) -> f64 {
    let [c1, c2, c3, _] = corners(st);
    let (al, be) = (st.alpha, st.beta);
    let vertical = w[0].abs() * be >= w[1].abs() * al;
    let m = if vertical {
        if w[0] > 0.0 {
            if w[1] >= 0.0 {
                w[1] * st.dalpha
            } else {
                1.0 + w[1] * st.dalpha
            }
        } else {
            c2 + (be - w[1]) * st.dalpha
        }
    } else if w[1] > 0.0 {
        c1 + (al - w[0]) * st.dbeta
    } else {
        c3 + (w[0] + al) * st.dbeta
    };
    m.rem_euclid(1.0)
}

/// An area-preserving map `B^2(c_i) -> R(c_i)` built from a certified
/// nested rectangle family.
#[derive(Debug, Clone)]
pub struct SigmaMap {
    family: NestedRectFamily,
    feasibility: Feasibility,
}

/// Builds the map after checking feasibility and nesting.
///
/// Nesting is checked on a grid of [`CONSTRUCTION_GRID`] actions: `alpha`
/// and `beta` (equivalently `A a / b` and `A b / a`) must increase strictly,
/// both side speeds must be positive, and area and boundary mass must be
/// exact to `1e-12` and `1e-10`.
pub fn build_sigma(
    f: &YoungFunction,
    conj: &ConjugateFunction,
    capacity: f64,
    epsilon: f64,
    n: usize,
) -> Result<SigmaMap> {
    let family = NestedRectFamily::new(f, conj, capacity, epsilon, n)?;
    let feasibility = feasibility_certificate(f, conj, capacity, epsilon, n, FEASIBILITY_GRID)?;
    if !feasibility.is_feasible() {
        return Err(Error::InfeasibleConstraints {
            min_slack: feasibility.min_slack,
            argmin_s: feasibility.argmin_s,
        });
    }

    let mut prev: Option<RectState> = None;
    for k in 1..=CONSTRUCTION_GRID {
        let action = capacity * k as f64 / CONSTRUCTION_GRID as f64;
        let st = family.state(action)?;
        let nested = prev.is_none_or(|p| st.alpha > p.alpha && st.beta > p.beta);
        let speeds = st.dalpha > 0.0 && st.dbeta > 0.0 && st.dalpha.is_finite() && st.dbeta.is_finite();
        let area = (4.0 * st.alpha * st.beta - action).abs() <= AREA_TOL * action.max(1.0);
        let mass = (st.boundary_mass() - 1.0).abs() <= MASS_TOL;
        let inside = st.alpha < st.a && st.beta < st.b;
        if !(nested && speeds && area && mass && inside) {
            return Err(Error::NonMonotoneFamily { action });
        }
        prev = Some(st);
    }
    Ok(SigmaMap { family, feasibility })
}

impl SigmaMap {
    pub fn family(&self) -> &NestedRectFamily {
        &self.family
    }

    pub fn capacity(&self) -> f64 {
        self.family.capacity()
    }

    pub fn feasibility(&self) -> Feasibility {
        self.feasibility
    }

    fn check_action(&self, action: f64) -> Result<()> {
        let c = self.capacity();
        if action > c * (1.0 + 1e-12) || !action.is_finite() {
            return Err(Error::OutOfDomain { action, capacity: c });
        }
        Ok(())
    }

    /// `sigma(z)`: the point of `boundary R(pi |z|^2)` at measure `theta / 2 pi`.
    pub fn evaluate(&self, z: [f64; 2]) -> Result<[f64; 2]> {
        let action = PI * (z[0] * z[0] + z[1] * z[1]);
        self.check_action(action)?;
        if action == 0.0 {
            return Ok([0.0, 0.0]);
        }
        let st = self.family.state(action.min(self.capacity()))?;
        Ok(boundary_at(&st, angle_measure(z)))
    }

    /// `(sigma(z), level - phi(|x|), level - phi*(|y|))` with
    /// `level = A / c_i + eps / n`: the image and the margins of the two
    /// constraints it is built to satisfy.
    pub fn evaluate_with_margins(&self, z: [f64; 2]) -> Result<([f64; 2], f64, f64)> {
        let w = self.evaluate(z)?;
        let action = (PI * (z[0] * z[0] + z[1] * z[1])).min(self.capacity());
        let level = self.family.level(action);
        let mx = level - self.family.function().evaluate(w[0].abs())?;
        let my = level - self.family.conjugate().evaluate(w[1].abs())?;
        Ok((w, mx, my))
    }

    /// Action of the rectangle whose boundary passes through `w`.
    pub fn action_of(&self, w: [f64; 2]) -> Result<f64> {
        if w == [0.0, 0.0] {
            return Ok(0.0);
        }
        let c = self.capacity();
        // min(alpha / |w1|, beta / |w2|) increases from 0 and reaches 1 on boundary R(A)
        let (u, v) = (w[0].abs(), w[1].abs());
        let ratio = |a: f64| {
            self.family
                .state(a)
                .map(|st| (st.alpha / u).min(st.beta / v))
                .unwrap_or(f64::NAN)
        };
        let slope = |a: f64| {
            self.family
                .state(a)
                .map(|st| {
                    if st.alpha * v <= st.beta * u {
                        st.dalpha / u
                    } else {
                        st.dbeta / v
                    }
                })
                .unwrap_or(f64::NAN)
        };
        if ratio(c) < 1.0 {
            return Err(Error::OutOfDomain {
                action: f64::INFINITY,
                capacity: c,
            });
        }
        solve_increasing(ratio, Some(slope), 1.0, 0.0, c, Tolerance::with_rel(1e-14))
    }

    /// `sigma^{-1}(w)` for `w` in `R(c_i)`.
    pub fn inverse(&self, w: [f64; 2]) -> Result<[f64; 2]> {
        let action = self.action_of(w)?;
        if action == 0.0 {
            return Ok([0.0, 0.0]);
        }
        let st = self.family.state(action)?;
        let theta = TAU * measure_of(&st, w);
        let r = (action / PI).sqrt();
        Ok([r * theta.cos(), r * theta.sin()])
    }

    /// Angles (in `[0, 2 pi)`) of the four corner seams on the circle of action `A`.
    pub fn seam_angles(&self, action: f64) -> Result<[f64; 4]> {
        self.check_action(action)?;
        let st = self.family.state(action.max(f64::MIN_POSITIVE))?;
        Ok(corners(&st).map(|c| TAU * c))
    }

    /// `|det D sigma(z) - 1|` by central differences with step `h`.
    ///
    /// Refuses points where the stencil could straddle a corner seam: the
    /// arc distance to every seam must be at least `10 h`, all stencil points
    /// must land on the same side, `A >= 1e-6`, and `|z|` must be at least
    /// [`CORE_CLEARANCE_STEPS`] steps.
    pub fn jacobian_check(&self, z: [f64; 2], h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
        }
        let r = z[0].hypot(z[1]);
        let action = PI * r * r;
        self.check_action(action)?;
        if action < MIN_JACOBIAN_ACTION || r < CORE_CLEARANCE_STEPS * h {
            return Err(Error::SeamProximity { point: z });
        }
        let st = self.family.state(action)?;
        let m = angle_measure(z);
        let clearance = corners(&st)
            .iter()
            .map(|c| {
                let d = (m - c).abs();
                d.min(1.0 - d)
            })
            .fold(f64::INFINITY, f64::min);
        if r * TAU * clearance < SEAM_CLEARANCE_STEPS * h {
            return Err(Error::SeamProximity { point: z });
        }

        let side = side_of(&st, m);
        let stencil = [
            [z[0] + h, z[1]],
            [z[0] - h, z[1]],
            [z[0], z[1] + h],
            [z[0], z[1] - h],
        ];
        let mut images = [[0.0; 2]; 4];
        for (img, p) in images.iter_mut().zip(&stencil) {
            let a = PI * (p[0] * p[0] + p[1] * p[1]);
            self.check_action(a)?;
            let sp = self.family.state(a)?;
            let mp = angle_measure(*p);
            if side_of(&sp, mp) != side {
                return Err(Error::SeamProximity { point: z });
            }
            *img = boundary_at(&sp, mp);
        }
        let d = 2.0 * h;
        let j00 = (images[0][0] - images[1][0]) / d;
        let j10 = (images[0][1] - images[1][1]) / d;
        let j01 = (images[2][0] - images[3][0]) / d;
        let j11 = (images[2][1] - images[3][1]) / d;
        Ok((j00 * j11 - j01 * j10 - 1.0).abs())
    }

    /// Finite-difference Jacobian audit at `points` random off-seam points.
    ///
    /// Candidates are uniform in the disc of radius `sqrt(c_i / pi) - 2h`;
    /// those refused with `SeamProximity` are counted and replaced.
    pub fn jacobian_audit(&self, points: usize, h: f64, seed: u64) -> Result<JacobianAudit> {
        let radius = (self.capacity() / PI).sqrt() - 2.0 * h;
        let mut audit = JacobianAudit {
            checked: 0,
            skipped: 0,
            max_dev: 0.0,
            worst_point: [0.0, 0.0],
            step: h,
            seed,
        };
        let mut chunk = 0u64;
        while audit.checked < points {
            if chunk > 64 + 4 * (points / MC_CHUNK) as u64 {
                return Err(Error::NoConvergence {
                    what: "jacobian audit sampling",
                    iterations: chunk as usize,
                    last: audit.skipped as f64,
                });
            }
            // a batch of chunks at a time, folded in chunk order
            let batch: Vec<Vec<Result<([f64; 2], f64)>>> = (chunk..chunk + 4)
                .into_par_iter()
                .map(|c| {
                    let mut rng = chunk_rng(seed, c);
                    (0..MC_CHUNK)
                        .map(|_| {
                            let z = uniform_disc(&mut rng, radius);
                            self.jacobian_check(z, h).map(|dev| (z, dev))
                        })
                        .collect()
                })
                .collect();
            chunk += 4;
            for outcome in batch.into_iter().flatten() {
                if audit.checked == points {
                    break;
                }
                match outcome {
                    Ok((z, dev)) => {
                        audit.checked += 1;
                        if dev > audit.max_dev {
                            audit.max_dev = dev;
                            audit.worst_point = z;
                        }
                    }
                    Err(Error::SeamProximity { .. }) => audit.skipped += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(audit)
    }

    /// Hit-or-miss area of `sigma(B^2(A))`, sampling the box `1.5 R(A)` and
    /// deciding membership through the inverse map.
    pub fn image_area_mc(&self, action: f64, n_samples: usize, seed: u64) -> Result<AreaEstimate> {
        self.check_action(action)?;
        if n_samples < 1000 || !(action > 0.0) {
            return Err(Error::InvalidArgument("need a positive action and at least 1000 samples".into()));
        }
        let st = self.family.state(action)?;
        let (bx, by) = (1.5 * st.alpha, 1.5 * st.beta);
        let chunks = n_samples.div_ceil(MC_CHUNK);
        let hits = (0..chunks)
            .into_par_iter()
            .map(|chunk| -> Result<usize> {
                let len = MC_CHUNK.min(n_samples - chunk * MC_CHUNK);
                let mut rng = chunk_rng(seed, chunk as u64);
                let mut count = 0;
                for _ in 0..len {
                    let w = [bx * rng.random_range(-1.0..1.0), by * rng.random_range(-1.0..1.0)];
                    match self.inverse(w) {
                        Ok(z) if PI * (z[0] * z[0] + z[1] * z[1]) <= action => count += 1,
                        Ok(_) | Err(Error::OutOfDomain { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                Ok(count)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        let box_area = 4.0 * bx * by;
        let rate = hits as f64 / n_samples as f64;
        Ok(AreaEstimate {
            action,
            estimate: box_area * rate,
            stderr: box_area * (rate * (1.0 - rate) / n_samples as f64).sqrt(),
            n_samples,
            seed,
        })
    }

    /// Pushes `n_samples` uniform points of `B^2(A)` through the map and
    /// counts them in a `k x k` grid of cells tiling `R(A)`. Area
    /// preservation makes every cell equally likely; returns the largest
    /// absolute z-score over the cells.
    pub fn pushforward_uniformity(&self, action: f64, k: usize, n_samples: usize, seed: u64) -> Result<f64> {
        self.check_action(action)?;
        if k == 0 || n_samples < 1000 || !(action > 0.0) {
            return Err(Error::InvalidArgument("need k >= 1, a positive action and >= 1000 samples".into()));
        }
        let st = self.family.state(action)?;
        let radius = (action / PI).sqrt();
        let chunks = n_samples.div_ceil(MC_CHUNK);
        let counts = (0..chunks)
            .into_par_iter()
            .map(|chunk| -> Result<Vec<usize>> {
                let len = MC_CHUNK.min(n_samples - chunk * MC_CHUNK);
                let mut rng = chunk_rng(seed, chunk as u64);
                let mut cells = vec![0usize; k * k];
                for _ in 0..len {
                    let w = self.evaluate(uniform_disc(&mut rng, radius))?;
                    let cx = cell_index(w[0], st.alpha, k);
                    let cy = cell_index(w[1], st.beta, k);
                    cells[cy * k + cx] += 1;
                }
                Ok(cells)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(vec![0usize; k * k], |mut acc, c| {
                acc.iter_mut().zip(c).for_each(|(a, b)| *a += b);
                acc
            });
        let p = 1.0 / (k * k) as f64;
        let nf = n_samples as f64;
        let sd = (nf * p * (1.0 - p)).sqrt().max(f64::MIN_POSITIVE);
        Ok(counts
            .iter()
            .map(|&c| ((c as f64 - nf * p) / sd).abs())
            .fold(0.0, f64::max))
    }
}

fn cell_index(v: f64, half: f64, k: usize) -> usize {
    let t = ((v + half) / (2.0 * half) * k as f64).floor();
    (t.max(0.0) as usize).min(k - 1)
}

/// `theta / 2 pi` in `[0, 1)`.
fn angle_measure(z: [f64; 2]) -> f64 {
    let m = z[1].atan2(z[0]) / TAU;
    if m < 0.0 {
        (m + 1.0).min(1.0 - f64::EPSILON)
    } else {
        m
    }
}

pub(crate) fn uniform_disc<R: Rng>(rng: &mut R, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let t = TAU * rng.random::<f64>();
    [r * t.cos(), r * t.sin()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianAudit {
    pub checked: usize,
    /// Candidates refused for seam or origin proximity.
    pub skipped: usize,
    pub max_dev: f64,
    pub worst_point: [f64; 2],
    pub step: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaEstimate {
    pub action: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}
