//! Independent oracles.
//!
//! Every check here evaluates measures of balls, slabs, quadrants and
//! half-spaces directly in L-coordinates. Nothing is lifted and no test map
//! is called. With `h = 0` a region bisects when both closed sides hold at
//! least half the weight, and the residual is the shortfall
//! `max(0, W/2 - mu(closed inside), W/2 - mu(closed outside))`. With `h > 0`
//! the residual is `|mu(region) - W/2|` for the smoothed measure, using the
//! kernel that matches the signed distance to the lifted hyperplane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SlabKind, SlabPartition, SphereKind, SpherePartition, SubspaceBasis, Vector};
use crate::measures::{assign, gauss_cdf, AssignmentSpec, Line, SmoothingSpec, WeightedCloud, EPS_PAR};
use crate::solvers::chart::EuclideanChart;
use crate::solvers::lm::{levenberg_marquardt, Acceptance, LmOptions};
use crate::wedges::{DownWedge, Orientation, WedgeFrame};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Absolute residual per assignment.
    pub residuals: Vec<f64>,
    pub totals: Vec<f64>,
    /// Relative tolerance.
    pub tol: f64,
    pub pass: bool,
}

impl VerifyReport {
    fn new(residuals: Vec<f64>, totals: Vec<f64>, tol: f64) -> Self {
        let pass = residuals.iter().zip(&totals).all(|(r, w)| *r <= tol * w);
        VerifyReport { residuals, totals, tol, pass }
    }

    /// `max_j residual_j / W_j`.
    pub fn max_relative(&self) -> f64 {
        self.residuals.iter().zip(&self.totals).fold(0.0, |a, (r, w)| a.max(r / w))
    }
}

/// Residual of one cloud from per-point "signed inside" values `s_i`.
///
/// `h = 0`: `s_i >= 0` is the closed inside, `s_i <= 0` the closed outside.
/// `h > 0`: inside weight is `sum w_i G(s_i / h)`.
fn residual_from_signed(s: &[f64], w: &[f64], smoothing: SmoothingSpec) -> f64 {
    let total: f64 = w.iter().sum();
    if smoothing.is_discrete() {
        let (inside, outside) = s.iter().zip(w).fold((0.0, 0.0), |(a, b), (si, wi)| {
            (a + if *si >= 0.0 { *wi } else { 0.0 }, b + if *si <= 0.0 { *wi } else { 0.0 })
        });
        (0.5 * total - inside).max(0.5 * total - outside).max(0.0)
    } else {
        let inside: f64 = s.iter().zip(w).map(|(si, wi)| wi * gauss_cdf(si / smoothing.h)).sum();
        (inside - 0.5 * total).abs()
    }
}

/// Signed "inside" value of L-coordinates `a` for a sphere partition.
///
/// For a ball this is `|c| (r^2 - |a - center|^2) / (1 + |a|^2)`, the signed
/// distance of the lifted point to the hyperplane, with `|c|` recovered from
/// the center and radius.
pub fn sphere_signed(kind: &SphereKind, a: &[f64]) -> f64 {
    let n2: f64 = a.iter().map(|x| x * x).sum();
    match kind {
        SphereKind::Sphere { center, radius } => {
            let c2 = center.norm_squared();
            let r2 = radius * radius;
            let scale = 1.0 / (4.0 * c2 + (1.0 - c2 + r2).powi(2)).sqrt();
            let dist2: f64 = a.iter().zip(center.iter()).map(|(x, c)| (x - c).powi(2)).sum();
            scale * (r2 - dist2) / (1.0 + n2)
        }
        SphereKind::Halfspace { normal, offset } => {
            let scale = 1.0 / (1.0 + offset * offset).sqrt();
            let dot: f64 = a.iter().zip(normal.iter()).map(|(x, n)| x * n).sum();
            scale * (dot - offset) / (1.0 + n2)
        }
    }
}

/// Signed "inside" value of the last L-coordinate for a slab partition.
pub fn slab_signed(kind: &SlabKind, a_last: f64) -> f64 {
    match *kind {
        SlabKind::Slab { r1, r2 } => -(a_last - r1) * (a_last - r2) / (1.0 + (r1 + r2).powi(2)).sqrt(),
        SlabKind::Halfspace { offset } => offset - a_last,
    }
}

fn clouds_on(assignments: &[AssignmentSpec], basis: &SubspaceBasis) -> Result<Vec<WeightedCloud>> {
    assignments.iter().map(|a| assign(a, basis)).collect()
}

/// Measure of the closed ball (or half-space) against half of each assignment.
pub fn verify_sphere(assignments: &[AssignmentSpec], solution: &SpherePartition, smoothing: SmoothingSpec, tol: f64) -> Result<VerifyReport> {
    let clouds = clouds_on(assignments, &solution.basis)?;
    let residuals = clouds
        .iter()
        .map(|c| {
            let s: Vec<f64> = c.points().map(|a| sphere_signed(&solution.kind, a)).collect();
            residual_from_signed(&s, c.weights(), smoothing)
        })
        .collect();
    Ok(VerifyReport::new(residuals, clouds.iter().map(WeightedCloud::total).collect(), tol))
}

/// Measure of `{r1 <= a_d <= r2}` (or `{a_d <= offset}`) against half of each assignment.
pub fn verify_slab(assignments: &[AssignmentSpec], solution: &SlabPartition, smoothing: SmoothingSpec, tol: f64) -> Result<VerifyReport> {
    let clouds = clouds_on(assignments, &solution.basis)?;
    let k = solution.basis.k();
    let residuals = clouds
        .iter()
        .map(|c| {
            let s: Vec<f64> = c.points().map(|a| slab_signed(&solution.kind, a[k - 1])).collect();
            residual_from_signed(&s, c.weights(), smoothing)
        })
        .collect();
    Ok(VerifyReport::new(residuals, clouds.iter().map(WeightedCloud::total).collect(), tol))
}

/// Measure of the convex side of a down-wedge in `H_v` against half of each assignment.
pub fn verify_wedge(assignments: &[AssignmentSpec], wedge: &DownWedge, plane: &WedgeFrame, smoothing: SmoothingSpec, tol: f64) -> Result<VerifyReport> {
    let clouds = clouds_on(assignments, &plane.basis())?;
    let residuals = clouds
        .iter()
        .map(|c| {
            let total = c.total();
            if smoothing.is_discrete() {
                let (a, b) = c.points().zip(c.weights()).fold((0.0, 0.0), |(a, b), (p, w)| {
                    (a + if wedge.in_a(p[0], p[1]) { *w } else { 0.0 }, b + if wedge.in_b(p[0], p[1]) { *w } else { 0.0 })
                });
                (0.5 * total - a).max(0.5 * total - b).max(0.0)
            } else {
                let h = smoothing.h;
                let inside: f64 = c
                    .points()
                    .zip(c.weights())
                    .map(|(p, w)| {
                        w * match *wedge {
                            DownWedge::Wedge { t, y, orientation: Orientation::Left } => gauss_cdf((t - p[0]) / h) * gauss_cdf((y - p[1]) / h),
                            DownWedge::Wedge { t, y, orientation: Orientation::Right } => gauss_cdf((p[0] - t) / h) * gauss_cdf((y - p[1]) / h),
                            DownWedge::VerticalLine { t } => gauss_cdf((t - p[0]) / h),
                            DownWedge::HorizontalLine { y } => gauss_cdf((y - p[1]) / h),
                        }
                    })
                    .sum();
                (inside - 0.5 * total).abs()
            }
        })
        .collect();
    Ok(VerifyReport::new(residuals, clouds.iter().map(WeightedCloud::total).collect(), tol))
}

/// Counts lines meeting the closed disc (or half-plane) of `circle` in its plane, and lines meeting its closed exterior.
///
/// A line hitting the boundary counts in both.
pub fn count_lines_through_disc(family: &[Line], circle: &SpherePartition) -> Result<(usize, usize)> {
    let basis = &circle.basis;
    if basis.d != 3 || basis.k() != 2 {
        return Err(Error::Dimension("line counting needs a plane in R^3".into()));
    }
    let (b1, b2) = (&basis.b[0], &basis.b[1]);
    let n = b1.cross(b2);
    let mut through = 0;
    let mut outside = 0;
    for (index, line) in family.iter().enumerate() {
        let dot = line.direction.dot(&n);
        if dot.abs() <= EPS_PAR {
            return Err(Error::LineParallel { index, dot });
        }
        let s = -line.base.dot(&n) / dot;
        let q: Vector = &line.base + &line.direction * s;
        let a = [q.dot(b1), q.dot(b2)];
        let inside = match &circle.kind {
            SphereKind::Sphere { center, radius } => radius * radius - ((a[0] - center[0]).powi(2) + (a[1] - center[1]).powi(2)),
            SphereKind::Halfspace { normal, offset } => a[0] * normal[0] + a[1] * normal[1] - offset,
        };
        if inside >= 0.0 {
            through += 1;
        }
        if inside <= 0.0 {
            outside += 1;
        }
    }
    Ok((through, outside))
}

/// Grid for [`optimality_scan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lattice points per axis over the bounding box of the projected clouds.
    pub centers_per_axis: usize,
    /// Log-spaced radii from `1e-2` to `2` times the box diameter.
    pub n_radii: usize,
    /// Half-space normals (equally spaced angles when `k = 2`).
    pub n_directions: usize,
    /// Half-space offsets per normal.
    pub n_offsets: usize,
    /// Random subspaces scanned when `k < d`.
    pub n_subspaces: usize,
    /// Local refinement from the best cells; `0` disables it.
    pub polish_starts: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { centers_per_axis: 41, n_radii: 40, n_directions: 64, n_offsets: 41, n_subspaces: 16, polish_starts: 16, seed: 0 }
    }
}

impl GridSpec {
    pub fn grid_only(&self) -> Self {
        GridSpec { polish_starts: 0, ..self.clone() }
    }

    /// Every grid coordinate of `self` also appears in the result.
    pub fn refined(&self) -> Self {
        GridSpec {
            centers_per_axis: 2 * self.centers_per_axis - 1,
            n_radii: 2 * self.n_radii - 1,
            n_directions: 2 * self.n_directions,
            n_offsets: 2 * self.n_offsets - 1,
            ..self.clone()
        }
    }
}

/// The scanned region with the smallest deficiency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub subspace: usize,
    pub ball: Option<(Vec<f64>, f64)>,
    pub halfspace: Option<(Vec<f64>, f64)>,
    pub deficiency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    /// Smallest `max_j deficiency_j / W_j` over all evaluated regions.
    pub delta: f64,
    pub best: ScanCell,
    pub evaluated: usize,
}

/// `i`-th of `n` evenly spaced values on `[lo, hi]`, written so nested grids share values exactly.
fn lattice(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n <= 1 {
        return 0.5 * (lo + hi);
    }
    lo + (hi - lo) * (i as f64 / (n - 1) as f64)
}

/// Sorted keys with prefix sums of weights, for closed-side counting by bisection.
struct Sorted {
    keys: Vec<f64>,
    prefix: Vec<f64>,
}

impl Sorted {
    fn new(keys: &[f64], w: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..keys.len()).collect();
        idx.sort_by(|a, b| keys[*a].total_cmp(&keys[*b]));
        let mut prefix = Vec::with_capacity(keys.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &i in &idx {
            acc += w[i];
            prefix.push(acc);
        }
        Sorted { keys: idx.iter().map(|&i| keys[i]).collect(), prefix }
    }

    /// `(weight with key <= x, weight with key >= x)`.
    fn split(&self, x: f64) -> (f64, f64) {
        let le = self.keys.partition_point(|k| *k <= x);
        let lt = self.keys.partition_point(|k| *k < x);
        let total = *self.prefix.last().unwrap_or(&0.0);
        (self.prefix[le], total - self.prefix[lt])
    }
}

fn deficiency(inside: f64, outside: f64, total: f64) -> f64 {
    (0.5 * total - inside).max(0.5 * total - outside).max(0.0) / total
}

fn random_subspace(d: usize, k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> SubspaceBasis {
    let f = crate::solvers::sample_frame(d, k, rng);
    SubspaceBasis { d, b: f.v }
}

/// Min-max deficiency of balls and half-spaces in `k`-dimensional subspaces.
///
/// For every scanned subspace the clouds are projected, and every ball of a
/// center lattice times log-spaced radii, plus every half-space of a grid of
/// normals and offsets, is evaluated by closed counting. With polishing, a
/// least-squares refinement of smoothed ball residuals runs from the best
/// cells and its iterates are evaluated by closed counting as well. The
/// returned `delta` is the minimum over everything evaluated, so it can only
/// decrease when the grid is refined. Heuristic: no Lipschitz certificate.
pub fn optimality_scan(clouds: &[WeightedCloud], k: usize, grid: &GridSpec) -> Result<ScanReport> {
    use rand::SeedableRng;
    let d = clouds.first().ok_or_else(|| Error::Invalid("no clouds to scan".into()))?.dim();
    if clouds.iter().any(|c| c.dim() != d) || k == 0 || k > d {
        return Err(Error::Dimension("scan needs clouds in a common R^d and 1 <= k <= d".into()));
    }
    let subspaces: Vec<SubspaceBasis> = if k == d {
        vec![SubspaceBasis::identity(d)]
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(grid.seed);
        (0..grid.n_subspaces.max(1)).map(|_| random_subspace(d, k, &mut rng)).collect()
    };
    let mut best: Option<ScanReport> = None;
    for (si, basis) in subspaces.iter().enumerate() {
        let specs: Vec<AssignmentSpec> = clouds.iter().cloned().map(AssignmentSpec::Projection).collect();
        let proj = clouds_on(&specs, basis)?;
        let rep = scan_subspace(&proj, si, grid);
        if best.as_ref().is_none_or(|b| rep.delta < b.delta) {
            let evaluated = best.as_ref().map_or(0, |b| b.evaluated) + rep.evaluated;
            best = Some(ScanReport { evaluated, ..rep });
        } else if let Some(b) = best.as_mut() {
            b.evaluated += rep.evaluated;
        }
    }
    best.ok_or_else(|| Error::Invalid("empty scan".into()))
}

fn scan_subspace(clouds: &[WeightedCloud], subspace: usize, grid: &GridSpec) -> ScanReport {
    let k = clouds[0].dim();
    let totals: Vec<f64> = clouds.iter().map(WeightedCloud::total).collect();
    let (mut lo, mut hi) = clouds[0].bounds();
    for c in &clouds[1..] {
        let (l, h) = c.bounds();
        for j in 0..k {
            lo[j] = lo[j].min(l[j]);
            hi[j] = hi[j].max(h[j]);
        }
    }
    let diam = lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt().max(1e-12);
    let n = grid.centers_per_axis.max(1);
    let n_centers = n.pow(k as u32);
    let radii: Vec<f64> = (0..grid.n_radii).map(|i| (1e-2 * diam) * 200f64.powf(lattice(0.0, 1.0, i, grid.n_radii))).collect();

    let center_of = |idx: usize| -> Vec<f64> {
        let mut rem = idx;
        (0..k)
            .map(|j| {
                let i = rem % n;
                rem /= n;
                lattice(lo[j], hi[j], i, n)
            })
            .collect()
    };
    let ball_cells = (0..n_centers).into_par_iter().map(|ci| {
        let center = center_of(ci);
        let sorted: Vec<Sorted> = clouds
            .iter()
            .map(|c| {
                let d2: Vec<f64> = c.points().map(|p| p.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum()).collect();
                Sorted::new(&d2, c.weights())
            })
            .collect();
        let mut local = (f64::INFINITY, 0.0);
        for &r in &radii {
            let def = sorted
                .iter()
                .zip(&totals)
                .map(|(s, w)| {
                    let (inside, outside) = s.split(r * r);
                    deficiency(inside, outside, *w)
                })
                .fold(0.0, f64::max);
            if def < local.0 {
                local = (def, r);
            }
        }
        (local.0, ScanCell { subspace, ball: Some((center, local.1)), halfspace: None, deficiency: local.0 })
    });
    let normals: Vec<Vec<f64>> = if k == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else if k == 2 {
        (0..grid.n_directions)
            .map(|i| {
                let a = std::f64::consts::TAU * (i as f64 / grid.n_directions as f64);
                vec![a.cos(), a.sin()]
            })
            .collect()
    } else {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(grid.seed ^ 0x5EED);
        (0..grid.n_directions).map(|_| crate::solvers::sample_frame(k - 1, 0, &mut rng).w.iter().copied().collect()).collect()
    };
    let half_cells = normals.par_iter().map(|nrm| {
        let sorted: Vec<Sorted> = clouds
            .iter()
            .map(|c| {
                let z: Vec<f64> = c.points().map(|p| p.iter().zip(nrm).map(|(a, b)| a * b).sum()).collect();
                Sorted::new(&z, c.weights())
            })
            .collect();
        let (zlo, zhi) = sorted.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
            (a.min(*s.keys.first().unwrap_or(&0.0)), b.max(*s.keys.last().unwrap_or(&0.0)))
        });
        let mut local = (f64::INFINITY, 0.0);
        for i in 0..grid.n_offsets {
            let off = lattice(zlo, zhi, i, grid.n_offsets);
            let def = sorted
                .iter()
                .zip(&totals)
                .map(|(s, w)| {
                    let (below, above) = s.split(off);
                    deficiency(above, below, *w)
                })
                .fold(0.0, f64::max);
            if def < local.0 {
                local = (def, off);
            }
        }
        (local.0, ScanCell { subspace, ball: None, halfspace: Some((nrm.clone(), local.1)), deficiency: local.0 })
    });
    let mut cells: Vec<(f64, ScanCell)> = ball_cells.chain(half_cells).collect();
    let evaluated = n_centers * radii.len() + normals.len() * grid.n_offsets;
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = cells[0].1.clone();
    let mut extra = 0;
    if grid.polish_starts > 0 {
        let starts: Vec<&ScanCell> = cells.iter().filter(|(_, c)| c.ball.is_some()).take(grid.polish_starts).map(|(_, c)| c).collect();
        let polished: Vec<(ScanCell, usize)> = starts.par_iter().map(|c| polish_ball(clouds, c, diam)).collect();
        for (c, e) in polished {
            extra += e;
            if c.deficiency < best.deficiency {
                best = c;
            }
        }
    }
    ScanReport { delta: best.deficiency, best, evaluated: evaluated + extra }
}

/// Closed-count deficiency of a ball.
fn ball_deficiency(clouds: &[WeightedCloud], center: &[f64], r: f64) -> f64 {
    clouds
        .iter()
        .map(|c| {
            let (inside, outside) = c.points().zip(c.weights()).fold((0.0, 0.0), |(a, b), (p, w)| {
                let d2: f64 = p.iter().zip(center).map(|(x, y)| (x - y).powi(2)).sum();
                (a + if d2 <= r * r { *w } else { 0.0 }, b + if d2 >= r * r { *w } else { 0.0 })
            });
            deficiency(inside, outside, c.total())
        })
        .fold(0.0, f64::max)
}

/// Least squares on smoothed ball residuals over `(center, log r)` at shrinking bandwidths.
fn polish_ball(clouds: &[WeightedCloud], start: &ScanCell, diam: f64) -> (ScanCell, usize) {
    let (c0, r0) = start.ball.clone().expect("ball cell");
    let k = c0.len();
    let chart = EuclideanChart { n: k + 1 };
    let mut x: Vec<f64> = c0.clone();
    x.push(r0.ln());
    let mut best = start.clone();
    let mut evals = 0;
    for scale in [3e-2, 1e-2, 3e-3, 1e-3] {
        let h = scale * diam;
        let res = |x: &Vec<f64>| -> Option<Vec<f64>> {
            let r = x[k].exp();
            if !r.is_finite() {
                return None;
            }
            Some(
                clouds
                    .iter()
                    .map(|c| {
                        let inside: f64 = c
                            .points()
                            .zip(c.weights())
                            .map(|(p, w)| {
                                let dist = p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                                w * gauss_cdf((r - dist) / h)
                            })
                            .sum();
                        inside / c.total() - 0.5
                    })
                    .collect(),
            )
        };
        let opts = LmOptions { max_iter: 60, fd_step: 1e-4 * h, max_step: 0.2 * diam, polish: 0, compass_evals: 0 };
        let Some(out) = levenberg_marquardt(&chart, &res, x.clone(), &Acceptance::uniform(clouds.len(), 1e-9), &opts) else {
            break;
        };
        evals += out.evaluations;
        x = out.point;
        let r = x[k].exp();
        let def = ball_deficiency(clouds, &x[..k], r);
        evals += 1;
        if def < best.deficiency {
            best = ScanCell { subspace: start.subspace, ball: Some((x[..k].to_vec(), r)), halfspace: None, deficiency: def };
        }
    }
    (best, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{axis, SubspaceBasis};
    use crate::wedges::WedgeFrame;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn ring(n: usize, r: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64;
                vec![r * a.cos(), r * a.sin()]
            })
            .collect()
    }

    fn half_inside_cloud() -> WeightedCloud {
        let mut pts = ring(20, 0.5);
        pts.extend(ring(20, 2.0));
        WeightedCloud::uniform(2, &pts).unwrap()
    }

    #[test]
    fn constructed_circle_bisects() {
        let c = half_inside_cloud();
        let part = SpherePartition { basis: SubspaceBasis::identity(2), kind: SphereKind::Sphere { center: v(&[0.0, 0.0]), radius: 1.0 } };
        let a = vec![AssignmentSpec::Projection(c.clone()); 2];
        let rep = verify_sphere(&a, &part, SmoothingSpec::discrete(), 1e-12).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.residuals[0], rep.residuals[1]);
        let rep = verify_sphere(&a, &part, SmoothingSpec::new(1e-3).unwrap(), 1e-9).unwrap();
        assert!(rep.pass, "{:?}", rep);
        let small = SpherePartition { basis: SubspaceBasis::identity(2), kind: SphereKind::Sphere { center: v(&[0.0, 0.0]), radius: 0.1 } };
        let rep = verify_sphere(&a, &small, SmoothingSpec::discrete(), 1e-3).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.residuals[0], 20.0);
    }

    #[test]
    fn whole_line_slab_fails() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![0.0, i as f64 - 4.5]).collect();
        let c = WeightedCloud::uniform(2, &pts).unwrap();
        let a = vec![AssignmentSpec::Projection(c)];
        let basis = SubspaceBasis::identity(2);
        let all = SlabPartition { basis: basis.clone(), kind: SlabKind::Slab { r1: f64::MIN, r2: f64::MAX } };
        let rep = verify_slab(&a, &all, SmoothingSpec::discrete(), 1e-3).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.residuals[0], 5.0);
        let mid = SlabPartition { basis, kind: SlabKind::Slab { r1: -3.0, r2: 2.0 } };
        assert!(verify_slab(&a, &mid, SmoothingSpec::discrete(), 1e-12).unwrap().pass);
    }

    #[test]
    fn wedge_oracle() {
        let pts = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let c = WeightedCloud::uniform(2, &pts).unwrap();
        let a = vec![AssignmentSpec::Projection(c)];
        let plane = WedgeFrame::from_horizontal(&[1.0]).unwrap();
        let line = DownWedge::VerticalLine { t: 0.0 };
        assert!(verify_wedge(&a, &line, &plane, SmoothingSpec::discrete(), 0.0).unwrap().pass);
        assert!(verify_wedge(&a, &line, &plane, SmoothingSpec::new(0.3).unwrap(), 1e-12).unwrap().pass);
        let corner = DownWedge::Wedge { t: 0.0, y: 0.0, orientation: Orientation::Left };
        let rep = verify_wedge(&a, &corner, &plane, SmoothingSpec::discrete(), 1e-3).unwrap();
        assert_eq!(rep.residuals[0], 1.0);
    }

    #[test]
    fn line_counting() {
        // plane x = 0 spanned by e_2, e_3; lines along e_1
        let lines: Vec<Line> = (0..6).map(|i| Line::new(v(&[5.0, i as f64, 0.0]), v(&[1.0, 0.0, 0.0])).unwrap()).collect();
        let basis = SubspaceBasis { d: 3, b: vec![axis(3, 1), axis(3, 2)] };
        let huge = SpherePartition { basis: basis.clone(), kind: SphereKind::Sphere { center: v(&[0.0, 0.0]), radius: 1e6 } };
        assert_eq!(count_lines_through_disc(&lines, &huge).unwrap(), (6, 0));
        let tiny = SpherePartition { basis: basis.clone(), kind: SphereKind::Sphere { center: v(&[0.5, 0.0]), radius: 1e-9 } };
        assert_eq!(count_lines_through_disc(&lines, &tiny).unwrap(), (0, 6));
        let edge = SpherePartition { basis: basis.clone(), kind: SphereKind::Sphere { center: v(&[0.0, 0.0]), radius: 2.0 } };
        assert_eq!(count_lines_through_disc(&lines, &edge).unwrap(), (3, 4));
        let flat = vec![Line::new(v(&[0.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])).unwrap()];
        assert!(count_lines_through_disc(&flat, &huge).is_err());
    }

    #[test]
    fn single_cloud_scan_finds_a_bisector() {
        let c = half_inside_cloud();
        let rep = optimality_scan(&[c], 2, &GridSpec { centers_per_axis: 11, n_radii: 20, polish_starts: 0, ..GridSpec::default() }).unwrap();
        assert!(rep.delta <= 0.05, "{}", rep.delta);
    }

    #[test]
    fn refining_never_increases_delta() {
        let inst = crate::scenarios::gen_counterexample(2, 2, 200, 3);
        let coarse = GridSpec { centers_per_axis: 9, n_radii: 8, n_directions: 8, n_offsets: 9, polish_starts: 0, ..GridSpec::default() };
        let a = optimality_scan(&inst.clouds, 2, &coarse).unwrap();
        let b = optimality_scan(&inst.clouds, 2, &coarse.refined()).unwrap();
        assert!(b.delta <= a.delta);
    }
}
