//! Weighted point clouds as mass distributions.
//!
//! A cloud is evaluated against closed half-spaces either by plain counting
//! (`h = 0`, boundary atoms count for both sides) or through the Gaussian CDF
//! of the signed distance (`h > 0`), which makes every half-space measure a
//! smooth, strictly monotone function of the offset.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{self, FramePoint, SubspaceBasis, Vector};
use crate::roots;

/// Relative accuracy of bisecting offsets, in units of the total weight.
pub const EPS_BIS_REL: f64 = 1e-10;
/// Lines this close to parallel with the target subspace are rejected.
pub const EPS_PAR: f64 = 1e-9;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal cumulative distribution function.
pub fn gauss_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Finite weighted point set in `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCloud {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedCloud {
    pub fn new(dim: usize, points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Dimension(format!("point {i} has {} coordinates, expected {dim}", p.len())));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!("point {i} is not finite")));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Unit weights.
    pub fn uniform(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        Self::new(dim, points, vec![1.0; points.len()])
    }

    /// Row-major coordinates, `dim` per point.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 && !weights.is_empty() {
            return Err(Error::Dimension("clouds need dimension >= 1".into()));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::Dimension(format!(
                "{} coordinates do not fit {} points of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Invalid("weights must be positive and finite".into()));
        }
        if weights.is_empty() {
            return Err(Error::Invalid("a cloud needs at least one point".into()));
        }
        Ok(WeightedCloud { dim, coords, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `<p_i, n>` for every point.
    pub fn project(&self, n: &[f64]) -> Vec<f64> {
        debug_assert_eq!(n.len(), self.dim);
        self.points()
            .map(|p| p.iter().zip(n).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Axis-aligned bounding box `(min, max)` per coordinate.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for j in 0..self.dim {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        (lo, hi)
    }

    /// Weighted centroid.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.points().zip(&self.weights) {
            for j in 0..self.dim {
                m[j] += w * p[j];
            }
        }
        let total = self.total();
        m.iter_mut().for_each(|x| *x /= total);
        m
    }

    /// Applies `f` to every point, keeping weights.
    pub fn map_points<F: FnMut(&[f64]) -> Vec<f64>>(&self, out_dim: usize, mut f: F) -> Result<Self> {
        let mut coords = Vec::with_capacity(out_dim * self.len());
        for p in self.points() {
            let q = f(p);
            debug_assert_eq!(q.len(), out_dim);
            coords.extend(q);
        }
        Self::from_flat(out_dim, coords, self.weights.clone())
    }
}

/// Gaussian bandwidth; `h = 0` selects closed-side counting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingSpec {
    pub h: f64,
}

impl SmoothingSpec {
    pub fn new(h: f64) -> Result<Self> {
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::Invalid(format!("smoothing bandwidth must be finite and >= 0, got {h}")));
        }
        Ok(SmoothingSpec { h })
    }

    pub fn discrete() -> Self {
        SmoothingSpec { h: 0.0 }
    }

    pub fn is_discrete(&self) -> bool {
        self.h == 0.0
    }
}

/// A line `{base + s * direction}` of `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub base: Vector,
    pub direction: Vector,
}

impl Line {
    pub fn new(base: Vector, direction: Vector) -> Result<Self> {
        if base.len() != direction.len() {
            return Err(Error::Dimension("line base and direction differ in dimension".into()));
        }
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Invalid("line direction must be non-zero".into()));
        }
        Ok(Line {
            base,
            direction: direction / n,
        })
    }
}

/// Rule producing a mass distribution on each admissible subspace.
#[derive(Clone, Debug, PartialEq)]
pub enum AssignmentSpec {
    /// Orthogonal projection of a fixed cloud of `R^d`.
    Projection(WeightedCloud),
    /// One unit atom per line, at its intersection with the hyperplane `L`.
    LineFamily(Vec<Line>),
}

impl AssignmentSpec {
    /// Dimension of the ambient space the assignment lives in.
    pub fn ambient_dim(&self) -> usize {
        match self {
            AssignmentSpec::Projection(c) => c.dim(),
            AssignmentSpec::LineFamily(lines) => lines.first().map_or(0, |l| l.base.len()),
        }
    }

    /// Total mass, independent of the subspace.
    pub fn total(&self) -> f64 {
        match self {
            AssignmentSpec::Projection(c) => c.total(),
            AssignmentSpec::LineFamily(lines) => lines.len() as f64,
        }
    }
}

/// The distribution assigned to `L = span(basis)`, in L-coordinates.
pub fn assign(spec: &AssignmentSpec, basis: &SubspaceBasis) -> Result<WeightedCloud> {
    match spec {
        AssignmentSpec::Projection(cloud) => {
            if cloud.dim() != basis.d {
                return Err(Error::Dimension(format!(
                    "projection cloud lives in R^{} but L is in R^{}",
                    cloud.dim(),
                    basis.d
                )));
            }
            let k = basis.k();
            cloud.map_points(k, |p| {
                basis
                    .b
                    .iter()
                    .map(|bj| bj.iter().zip(p).map(|(a, b)| a * b).sum())
                    .collect()
            })
        }
        AssignmentSpec::LineFamily(lines) => {
            let d = basis.d;
            if basis.k() + 1 != d {
                return Err(Error::Dimension(format!(
                    "line families need a hyperplane L (k = d - 1), got k = {} in R^{d}",
                    basis.k()
                )));
            }
            let normal = geometry::orthonormal_complement(&basis.b, d)
                .pop()
                .ok_or_else(|| Error::Dimension("L has no normal".into()))?;
            let mut coords = Vec::with_capacity(lines.len() * basis.k());
            for (index, line) in lines.iter().enumerate() {
                if line.base.len() != d {
                    return Err(Error::Dimension(format!("line {index} is not in R^{d}")));
                }
                let dot = line.direction.dot(&normal);
                if dot.abs() <= EPS_PAR {
                    return Err(Error::LineParallel { index, dot });
                }
                let s = -line.base.dot(&normal) / dot;
                let x: DVector<f64> = &line.base + &line.direction * s;
                coords.extend(basis.b.iter().map(|bj| bj.dot(&x)));
            }
            WeightedCloud::from_flat(basis.k(), coords, vec![1.0; lines.len()])
        }
    }
}

/// `nu({<p, n> >= c})` for unit `n`; smoothed when `h > 0`.
pub fn halfspace_measure(cloud: &WeightedCloud, normal: &[f64], offset: f64, smoothing: SmoothingSpec) -> f64 {
    upper_mass(&cloud.project(normal), cloud.weights(), offset, smoothing)
}

/// Mass of `{z >= c}` for projected values `z`.
pub fn upper_mass(z: &[f64], weights: &[f64], c: f64, smoothing: SmoothingSpec) -> f64 {
    if smoothing.is_discrete() {
        z.iter().zip(weights).filter(|(zi, _)| **zi >= c).map(|(_, w)| w).sum()
    } else {
        let h = smoothing.h;
        z.iter().zip(weights).map(|(zi, w)| w * gauss_cdf((zi - c) / h)).sum()
    }
}

/// Mass of `{z <= c}`.
pub fn lower_mass(z: &[f64], weights: &[f64], c: f64, smoothing: SmoothingSpec) -> f64 {
    if smoothing.is_discrete() {
        z.iter().zip(weights).filter(|(zi, _)| **zi <= c).map(|(_, w)| w).sum()
    } else {
        let h = smoothing.h;
        z.iter().zip(weights).map(|(zi, w)| w * gauss_cdf((c - zi) / h)).sum()
    }
}

/// `nu(H+) - nu(H-)` for `H = {z = c}`; an odd function of `(z, c)`.
pub fn mass_difference(z: &[f64], weights: &[f64], c: f64, smoothing: SmoothingSpec) -> f64 {
    if smoothing.is_discrete() {
        z.iter()
            .zip(weights)
            .map(|(zi, w)| {
                if *zi > c {
                    *w
                } else if *zi < c {
                    -*w
                } else {
                    0.0
                }
            })
            .sum()
    } else {
        let s = 1.0 / (smoothing.h * SQRT_2);
        z.iter().zip(weights).map(|(zi, w)| w * libm::erf((zi - c) * s)).sum()
    }
}

/// Bisecting translate of `{<p, w> = c}` for a cloud.
pub fn bisecting_offset(cloud: &WeightedCloud, direction: &[f64], smoothing: SmoothingSpec) -> f64 {
    bisecting_offset_1d(&cloud.project(direction), cloud.weights(), smoothing)
}

/// Bisecting offset for projected values.
///
/// `h > 0`: the unique root of the strictly decreasing `c -> nu(z >= c) - nu(z <= c)`.
/// `h = 0`: midpoint of the interval of weighted medians.
///
/// Satisfies `offset(-z) = -offset(z)` exactly.
pub fn bisecting_offset_1d(z: &[f64], weights: &[f64], smoothing: SmoothingSpec) -> f64 {
    if smoothing.is_discrete() {
        return median_midpoint(z, weights);
    }
    // Solve on the representative with non-negative weighted sum; negating all
    // values negates this sum exactly, so the choice is sign-consistent.
    let sum: f64 = z.iter().zip(weights).map(|(a, w)| a * w).sum();
    if sum > 0.0 {
        smooth_root(z, weights, smoothing.h)
    } else if sum < 0.0 {
        let neg: Vec<f64> = z.iter().map(|x| -x).collect();
        -smooth_root(&neg, weights, smoothing.h)
    } else {
        let neg: Vec<f64> = z.iter().map(|x| -x).collect();
        0.5 * (smooth_root(z, weights, smoothing.h) - smooth_root(&neg, weights, smoothing.h))
    }
}

fn smooth_root(z: &[f64], weights: &[f64], h: f64) -> f64 {
    let (lo, hi) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let smoothing = SmoothingSpec { h };
    let f = |c: f64| mass_difference(z, weights, c, smoothing);
    let (a, b) = roots::bracket_decreasing(f, lo - 10.0 * h, hi + 10.0 * h, 200)
        .expect("smoothed mass difference always changes sign");
    roots::brent(f, a, b, 200)
}

fn median_midpoint(z: &[f64], weights: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]));
    let total: f64 = weights.iter().sum();
    let half = 0.5 * total * (1.0 + 1e-12);
    // distinct values with the mass strictly below each
    let mut values: Vec<(f64, f64, f64)> = Vec::new(); // (value, mass_below, mass_at)
    let mut below = 0.0;
    let mut i = 0;
    while i < order.len() {
        let u = z[order[i]];
        let mut at = 0.0;
        while i < order.len() && z[order[i]] == u {
            at += weights[order[i]];
            i += 1;
        }
        values.push((u, below, at));
        below += at;
    }
    let lower = values
        .iter()
        .find(|(_, below, at)| total - below - at <= half)
        .map(|v| v.0)
        .unwrap_or(values[values.len() - 1].0);
    let upper = values
        .iter()
        .rev()
        .find(|(_, below, _)| *below <= half)
        .map(|v| v.0)
        .unwrap_or(values[0].0);
    0.5 * (lower + upper)
}

/// How a cloud in L-coordinates is pushed into `R^{d+1}`.
pub enum Lifter<'a> {
    /// `sigma(i(sum a_j b_j))` onto the sphere `S`.
    Sphere(&'a SubspaceBasis),
    /// Parabolic wrap along the last frame vector.
    Parabolic(&'a FramePoint),
}

/// Pushforward of an L-coordinate cloud through a lifting; weights are preserved.
pub fn lift_cloud(cloud: &WeightedCloud, lifter: &Lifter<'_>) -> Result<WeightedCloud> {
    match lifter {
        Lifter::Sphere(basis) => {
            if cloud.dim() != basis.k() {
                return Err(Error::Dimension("cloud is not in L-coordinates".into()));
            }
            cloud.map_points(basis.d + 1, |a| {
                geometry::sphere_lift(&Vector::from_column_slice(a), basis)
                    .iter()
                    .copied()
                    .collect()
            })
        }
        Lifter::Parabolic(frame) => {
            if cloud.dim() > frame.d() || frame.m() != frame.d() {
                return Err(Error::Dimension("parabolic lift needs a full frame".into()));
            }
            cloud.map_points(frame.d() + 1, |a| {
                geometry::parabolic_lift(&Vector::from_column_slice(a), frame)
                    .iter()
                    .copied()
                    .collect()
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::axis;

    fn cloud(dim: usize, pts: &[&[f64]]) -> WeightedCloud {
        let pts: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        WeightedCloud::uniform(dim, &pts).unwrap()
    }

    #[test]
    fn cloud_validation() {
        assert!(WeightedCloud::new(2, &[vec![0.0, 1.0]], vec![0.0]).is_err());
        assert!(WeightedCloud::new(2, &[vec![0.0]], vec![1.0]).is_err());
        assert!(WeightedCloud::new(1, &[vec![f64::NAN]], vec![1.0]).is_err());
        assert!(WeightedCloud::new(1, &[], vec![]).is_err());
        let c = WeightedCloud::new(1, &[vec![1.0], vec![2.0]], vec![0.5, 1.5]).unwrap();
        assert_eq!(c.total(), 2.0);
    }

    #[test]
    fn projection_assignment() {
        let spec = AssignmentSpec::Projection(cloud(3, &[&[1.0, 2.0, 3.0]]));
        let basis = SubspaceBasis::new(3, vec![axis(3, 0), axis(3, 1)]).unwrap();
        let out = assign(&spec, &basis).unwrap();
        assert_eq!(out.point(0), &[1.0, 2.0]);

        let spec = AssignmentSpec::Projection(cloud(2, &[&[1.5, -2.0], &[0.0, 4.0]]));
        let out = assign(&spec, &SubspaceBasis::identity(2)).unwrap();
        assert_eq!(out.point(0), &[1.5, -2.0]);
        assert_eq!(out.point(1), &[0.0, 4.0]);
    }

    #[test]
    fn line_assignment() {
        let u = Vector::from_column_slice(&[0.0, -1.0, 5.0]);
        let line = Line::new(Vector::from_column_slice(&[0.0, 1.0, 0.0]), u).unwrap();
        let basis = SubspaceBasis::new(3, vec![axis(3, 0), axis(3, 2)]).unwrap();
        let out = assign(&AssignmentSpec::LineFamily(vec![line]), &basis).unwrap();
        assert!((out.point(0)[0]).abs() < 1e-15);
        assert!((out.point(0)[1] - 5.0).abs() < 1e-14);
        assert_eq!(out.weights(), &[1.0]);

        let flat = Line::new(
            Vector::from_column_slice(&[0.0, 1.0, 0.0]),
            Vector::from_column_slice(&[1.0, 0.0, 0.0]),
        )
        .unwrap();
        let err = assign(&AssignmentSpec::LineFamily(vec![flat.clone(), flat]), &basis).unwrap_err();
        assert!(matches!(err, Error::LineParallel { index: 0, .. }));
    }

    #[test]
    fn closed_halfspaces_double_count() {
        let c = cloud(1, &[&[0.0], &[1.0], &[2.0]]);
        let plus = halfspace_measure(&c, &[1.0], 1.0, SmoothingSpec::discrete());
        let minus = halfspace_measure(&c, &[-1.0], -1.0, SmoothingSpec::discrete());
        assert_eq!((plus, minus), (2.0, 2.0));
        assert_eq!(halfspace_measure(&c, &[1.0], -1e300, SmoothingSpec::discrete()), 3.0);
        let smooth = SmoothingSpec::new(0.3).unwrap();
        assert!((halfspace_measure(&c, &[1.0], -1e6, smooth) - 3.0).abs() < 1e-12);
        let sym = cloud(1, &[&[-0.7], &[0.7]]);
        let half = halfspace_measure(&sym, &[1.0], 0.0, SmoothingSpec::new(0.5).unwrap());
        assert!((half - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smoothed_sides_sum_to_total() {
        let c = cloud(2, &[&[0.1, 0.3], &[1.0, -2.0], &[0.4, 0.4], &[-3.0, 1.0]]);
        let s = SmoothingSpec::new(0.2).unwrap();
        let n = [0.6, 0.8];
        for &off in &[-2.0, -0.1, 0.0, 0.37, 5.0] {
            let up = halfspace_measure(&c, &n, off, s);
            let down = halfspace_measure(&c, &[-0.6, -0.8], -off, s);
            assert!((up + down - c.total()).abs() < 1e-12);
        }
    }

    #[test]
    fn offsets_by_midpoint_rule() {
        let d = SmoothingSpec::discrete();
        assert_eq!(bisecting_offset_1d(&[-1.0, 1.0], &[1.0, 1.0], d), 0.0);
        assert_eq!(bisecting_offset_1d(&[0.0, 0.0, 3.0], &[1.0, 1.0, 1.0], d), 0.0);
        assert_eq!(bisecting_offset_1d(&[5.0, 1.0, 2.0, 10.0], &[1.0; 4], d), 3.5);
        assert_eq!(bisecting_offset_1d(&[0.0, 1.0, 2.0], &[1.0, 1.0, 5.0], d), 2.0);
    }

    #[test]
    fn symmetric_clouds_bisect_at_zero() {
        let z = [-2.0, -0.5, 0.5, 2.0, -1.25, 1.25];
        let w = [1.0; 6];
        for h in [0.0, 0.01, 0.3, 4.0] {
            let c = bisecting_offset_1d(&z, &w, SmoothingSpec { h });
            assert!(c.abs() < 1e-15, "h={h}: {c}");
        }
    }

    #[test]
    fn smoothed_offset_bisects() {
        let z = [0.3, 1.1, -0.4, 2.5, 2.6, 7.0, -1.0];
        let w = [1.0, 2.0, 0.5, 1.0, 1.0, 0.25, 3.0];
        let s = SmoothingSpec::new(0.2).unwrap();
        let c = bisecting_offset_1d(&z, &w, s);
        let total: f64 = w.iter().sum();
        assert!(mass_difference(&z, &w, c, s).abs() <= EPS_BIS_REL * total);
        let neg: Vec<f64> = z.iter().map(|x| -x).collect();
        assert_eq!(bisecting_offset_1d(&neg, &w, s), -c);
        let discrete = bisecting_offset_1d(&z, &w, SmoothingSpec::discrete());
        assert_eq!(bisecting_offset_1d(&neg, &w, SmoothingSpec::discrete()), -discrete);
    }

    #[test]
    fn lifted_cloud_keeps_weights() {
        let basis = SubspaceBasis::identity(2);
        let c = WeightedCloud::new(2, &[vec![0.0, 0.0], vec![3.0, -1.0]], vec![2.0, 0.5]).unwrap();
        let lifted = lift_cloud(&c, &Lifter::Sphere(&basis)).unwrap();
        assert_eq!(lifted.point(0), &[0.0, 0.0, 1.0]);
        assert_eq!(lifted.total(), c.total());
        for p in lifted.points() {
            let r2 = p[0] * p[0] + p[1] * p[1] + (p[2] - 0.5) * (p[2] - 0.5);
            assert!((r2.sqrt() - 0.5).abs() < 1e-12);
        }
    }
}
