//! Down-wedges on vertical planes.
//!
//! A vertical plane `H_v` is spanned by a horizontal unit vector `v` and
//! `e_d`, with plane coordinates `(x, y) = (<p, v>, p_d)`. A down-wedge with
//! vertex `(t, y)` has a vertical ray pointing down and a horizontal ray
//! pointing left or right; its convex side `A` is the closed quadrant between
//! the rays and `B` is the closure of the complement. Vertical and horizontal
//! lines are the degenerate cases, with `A` the left or bottom half-plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axis, SubspaceBasis, Vector};
use crate::measures::{self, assign, gauss_cdf, AssignmentSpec, SmoothingSpec, WeightedCloud, EPS_BIS_REL};
use crate::roots::{bracket_decreasing, brent};
use crate::solvers::chart::{SphereIntervalChart, SpherePhase};
use crate::solvers::lm::{levenberg_marquardt, Acceptance, LmOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DownWedge {
    Wedge { t: f64, y: f64, orientation: Orientation },
    VerticalLine { t: f64 },
    HorizontalLine { y: f64 },
}

impl DownWedge {
    /// Closed side `A`.
    pub fn in_a(&self, x: f64, y: f64) -> bool {
        match *self {
            DownWedge::Wedge { t, y: y0, orientation: Orientation::Left } => x <= t && y <= y0,
            DownWedge::Wedge { t, y: y0, orientation: Orientation::Right } => x >= t && y <= y0,
            DownWedge::VerticalLine { t } => x <= t,
            DownWedge::HorizontalLine { y: y0 } => y <= y0,
        }
    }

    /// Closed side `B`.
    pub fn in_b(&self, x: f64, y: f64) -> bool {
        match *self {
            DownWedge::Wedge { t, y: y0, orientation: Orientation::Left } => x >= t || y >= y0,
            DownWedge::Wedge { t, y: y0, orientation: Orientation::Right } => x <= t || y >= y0,
            DownWedge::VerticalLine { t } => x >= t,
            DownWedge::HorizontalLine { y: y0 } => y >= y0,
        }
    }

    /// The same wedge after `x -> -x`, with `A` kept as the convex side.
    pub fn mirrored(&self) -> Self {
        match *self {
            DownWedge::Wedge { t, y, orientation } => DownWedge::Wedge {
                t: -t,
                y,
                orientation: match orientation {
                    Orientation::Left => Orientation::Right,
                    Orientation::Right => Orientation::Left,
                },
            },
            DownWedge::VerticalLine { t } => DownWedge::VerticalLine { t: -t },
            h => h,
        }
    }
}

/// The plane `H_v = span(v, e_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WedgeFrame {
    pub v: Vector,
}

impl WedgeFrame {
    /// `v` must be horizontal; it is normalized.
    pub fn new(v: Vector) -> Result<Self> {
        let d = v.len();
        if d < 2 {
            return Err(Error::Dimension("vertical planes need d >= 2".into()));
        }
        if v[d - 1].abs() > 1e-12 {
            return Err(Error::Invalid(format!("v has vertical component {}", v[d - 1])));
        }
        let n = v.norm();
        if n < 1e-12 {
            return Err(Error::Invalid("v must be nonzero".into()));
        }
        Ok(WedgeFrame { v: v / n })
    }

    /// `v` from its horizontal coordinates `(v_1..v_{d-1})`.
    pub fn from_horizontal(h: &[f64]) -> Result<Self> {
        let mut v: Vec<f64> = h.to_vec();
        v.push(0.0);
        Self::new(Vector::from_vec(v))
    }

    /// `v = (cos a, sin a, 0)` in `R^3`.
    pub fn from_angle(a: f64) -> Self {
        WedgeFrame { v: Vector::from_column_slice(&[a.cos(), a.sin(), 0.0]) }
    }

    pub fn d(&self) -> usize {
        self.v.len()
    }

    pub fn basis(&self) -> SubspaceBasis {
        let d = self.d();
        SubspaceBasis { d, b: vec![self.v.clone(), axis(d, d - 1)] }
    }

    pub fn opposite(&self) -> Self {
        WedgeFrame { v: -self.v.clone() }
    }

    /// Horizontal coordinates of `v`.
    pub fn horizontal(&self) -> Vec<f64> {
        self.v.iter().take(self.d() - 1).copied().collect()
    }
}

fn column(cloud: &WeightedCloud, j: usize) -> Vec<f64> {
    cloud.points().map(|p| p[j]).collect()
}

/// Measure of the quadrant `{+-(t - x) >= 0, y' <= y}`; product of Gaussian CDFs when `h > 0`.
pub fn quadrant_measure(cloud: &WeightedCloud, t: f64, y: f64, orientation: Orientation, smoothing: SmoothingSpec) -> f64 {
    let sx = match orientation {
        Orientation::Left => 1.0,
        Orientation::Right => -1.0,
    };
    let h = smoothing.h;
    cloud
        .points()
        .zip(cloud.weights())
        .map(|(p, w)| {
            if h > 0.0 {
                w * gauss_cdf(sx * (t - p[0]) / h) * gauss_cdf((y - p[1]) / h)
            } else if sx * (t - p[0]) >= 0.0 && p[1] <= y {
                *w
            } else {
                0.0
            }
        })
        .sum()
}

/// `mu(A) - mu(B)` for a 2-D cloud. Odd under `x -> -x` for vertical lines.
pub fn side_difference(cloud: &WeightedCloud, wedge: &DownWedge, smoothing: SmoothingSpec) -> f64 {
    let w = cloud.weights();
    match *wedge {
        DownWedge::VerticalLine { t } => -measures::mass_difference(&column(cloud, 0), w, t, smoothing),
        DownWedge::HorizontalLine { y } => -measures::mass_difference(&column(cloud, 1), w, y, smoothing),
        DownWedge::Wedge { t, y, orientation } => {
            if smoothing.is_discrete() {
                let (a, b) = closed_sides(cloud, wedge);
                a - b
            } else {
                2.0 * quadrant_measure(cloud, t, y, orientation, smoothing) - cloud.total()
            }
        }
    }
}

/// Closed-side weights `(mu(A), mu(B))`; boundary points count for both.
pub fn closed_sides(cloud: &WeightedCloud, wedge: &DownWedge) -> (f64, f64) {
    cloud.points().zip(cloud.weights()).fold((0.0, 0.0), |(a, b), (p, w)| {
        (a + if wedge.in_a(p[0], p[1]) { *w } else { 0.0 }, b + if wedge.in_b(p[0], p[1]) { *w } else { 0.0 })
    })
}

/// Both closed sides hold at least half of the cloud.
pub fn closed_bisects(cloud: &WeightedCloud, wedge: &DownWedge) -> bool {
    let (a, b) = closed_sides(cloud, wedge);
    let half = 0.5 * cloud.total() * (1.0 - 1e-12);
    a >= half && b >= half
}

/// The vertical bisecting offset `lambda` of a 2-D cloud.
pub fn vertical_offset(cloud: &WeightedCloud, smoothing: SmoothingSpec) -> f64 {
    measures::bisecting_offset_1d(&column(cloud, 0), cloud.weights(), smoothing)
}

/// The unique bisecting down-wedge whose vertical ray lies on `x = t`.
///
/// `t = inf` gives the horizontal bisecting line. When `x = t` already
/// bisects (to `1e-10 W`) the result is that vertical line. Otherwise the
/// horizontal ray points to the heavier side and the vertex height solves
/// `mu(X_t(y)) = W / 2`. Requires `h > 0`.
pub fn down_wedge(cloud: &WeightedCloud, t: f64, smoothing: SmoothingSpec) -> Result<DownWedge> {
    if cloud.dim() != 2 {
        return Err(Error::Dimension(format!("down-wedges live in the plane, got dimension {}", cloud.dim())));
    }
    if smoothing.is_discrete() {
        return Err(Error::Invalid("down_wedge needs a positive bandwidth".into()));
    }
    let total = cloud.total();
    let ys = column(cloud, 1);
    if t == f64::INFINITY {
        return Ok(DownWedge::HorizontalLine { y: measures::bisecting_offset_1d(&ys, cloud.weights(), smoothing) });
    }
    if !t.is_finite() {
        return Err(Error::Invalid(format!("wedge parameter {t}")));
    }
    let left: f64 = cloud.points().zip(cloud.weights()).map(|(p, w)| w * gauss_cdf((t - p[0]) / smoothing.h)).sum();
    let excess = left - 0.5 * total;
    if excess.abs() <= EPS_BIS_REL * total {
        return Ok(DownWedge::VerticalLine { t });
    }
    let orientation = if excess > 0.0 { Orientation::Left } else { Orientation::Right };
    let g = |y: f64| 0.5 * total - quadrant_measure(cloud, t, y, orientation, smoothing);
    let (lo, hi) = cloud.bounds();
    let (lo, hi) = bracket_decreasing(g, lo[1] - smoothing.h, hi[1] + smoothing.h, 200).ok_or(Error::NoSignChange)?;
    let y = brent(g, lo, hi, 200);
    Ok(DownWedge::Wedge { t, y, orientation })
}

/// The wedge test map `S^{d-2} x [0, 1] -> R^{d-1}`; the last assignment is the pivot.
#[derive(Clone, Debug)]
pub struct WedgeTestMap {
    pub d: usize,
    pub assignments: Vec<AssignmentSpec>,
    pub smoothing: SmoothingSpec,
}

/// Everything the map computes at one `(v, t)`.
#[derive(Clone, Debug)]
pub struct WedgeEval {
    pub lambda: f64,
    pub wedge: DownWedge,
    pub clouds: Vec<WeightedCloud>,
    pub values: Vec<f64>,
}

impl WedgeTestMap {
    pub fn new(d: usize, assignments: Vec<AssignmentSpec>, smoothing: SmoothingSpec) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension("wedges need d >= 2".into()));
        }
        if assignments.len() != d {
            return Err(Error::Invalid(format!("expected {d} assignments, got {}", assignments.len())));
        }
        if let Some(a) = assignments.iter().find(|a| a.ambient_dim() != d) {
            return Err(Error::Dimension(format!("assignment lives in R^{}, expected R^{d}", a.ambient_dim())));
        }
        Ok(WedgeTestMap { d, assignments, smoothing })
    }

    pub fn clouds(&self, frame: &WedgeFrame) -> Result<Vec<WeightedCloud>> {
        let basis = frame.basis();
        self.assignments.iter().map(|a| assign(a, &basis)).collect()
    }

    /// The map at `(v, t)` together with the wedge it uses.
    pub fn evaluate(&self, frame: &WedgeFrame, t: f64) -> Result<WedgeEval> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Invalid(format!("t = {t} outside [0, 1]")));
        }
        let clouds = self.clouds(frame)?;
        let pivot = &clouds[self.d - 1];
        let lambda = vertical_offset(pivot, self.smoothing);
        let wedge = if t == 0.0 {
            down_wedge(pivot, f64::INFINITY, self.smoothing)?
        } else if t == 1.0 {
            DownWedge::VerticalLine { t: lambda }
        } else {
            down_wedge(pivot, lambda + (1.0 / t - 1.0), self.smoothing)?
        };
        let values = clouds[..self.d - 1].iter().map(|c| side_difference(c, &wedge, self.smoothing)).collect();
        Ok(WedgeEval { lambda, wedge, clouds, values })
    }

    pub fn eval(&self, frame: &WedgeFrame, t: f64) -> Result<Vec<f64>> {
        Ok(self.evaluate(frame, t)?.values)
    }

    pub fn totals(&self) -> Vec<f64> {
        self.assignments.iter().map(AssignmentSpec::total).collect()
    }
}

/// A wedge in a vertical plane with the map parameters that produced it.
#[derive(Clone, Debug)]
pub struct WedgeSolution {
    pub frame: WedgeFrame,
    pub t: f64,
    pub wedge: DownWedge,
    /// `max_j |mu_j(A) - mu_j(B)| / W_j` over the non-pivot assignments.
    pub ratio: f64,
    pub h: f64,
    /// Whether the closed sides bisect every assignment by counting.
    pub closed_ok: bool,
}

fn max_ratio(values: &[f64], totals: &[f64]) -> f64 {
    values.iter().zip(totals).fold(0.0, |a, (v, w)| a.max(v.abs() / w))
}

/// Planar wedge bisecting `mu1` and `mu2` at bandwidth `h > 0`.
///
/// Scans the two branches `v = +-e_1`: since the map is even at `t = 0` and
/// odd at `t = 1`, one branch changes sign on `[0, 1]`, and Brent's method
/// locates the root. The wedge is returned in the coordinates of its branch.
pub fn planar_wedge_solve(mu1: &WeightedCloud, mu2: &WeightedCloud, smoothing: SmoothingSpec) -> Result<WedgeSolution> {
    if mu1.dim() != 2 || mu2.dim() != 2 {
        return Err(Error::Dimension("planar wedges need clouds in R^2".into()));
    }
    let map = WedgeTestMap::new(
        2,
        vec![AssignmentSpec::Projection(mu1.clone()), AssignmentSpec::Projection(mu2.clone())],
        smoothing,
    )?;
    let w1 = mu1.total();
    let plus = WedgeFrame::from_horizontal(&[1.0])?;
    let f0 = map.eval(&plus, 0.0)?[0];
    let f1 = map.eval(&plus, 1.0)?[0];
    let frame = if f0 == 0.0 || f0.signum() != f1.signum() || f1 == 0.0 { plus } else { plus.opposite() };
    let fa = map.eval(&frame, 0.0)?[0];
    let fb = map.eval(&frame, 1.0)?[0];
    if fa != 0.0 && fb != 0.0 && fa.signum() == fb.signum() {
        return Err(Error::NoSignChange);
    }
    let f = |t: f64| map.eval(&frame, t).map(|v| v[0]).unwrap_or(f64::NAN);
    let t = brent(f, 0.0, 1.0, 300);
    let ev = map.evaluate(&frame, t)?;
    Ok(WedgeSolution {
        closed_ok: ev.clouds.iter().all(|c| closed_bisects(c, &ev.wedge)),
        ratio: ev.values[0].abs() / w1,
        frame,
        t,
        wedge: ev.wedge,
        h: smoothing.h,
    })
}

/// Runs [`planar_wedge_solve`] along `h0, h0/2, ..` until the closed sides bisect
/// both clouds by counting, or the wedge stops moving (within `tol`).
pub fn planar_wedge_limit(mu1: &WeightedCloud, mu2: &WeightedCloud, h0: f64, max_halvings: usize, tol: f64) -> Result<WedgeSolution> {
    let mut h = h0;
    let mut prev: Option<WedgeSolution> = None;
    for _ in 0..=max_halvings {
        let sol = planar_wedge_solve(mu1, mu2, SmoothingSpec::new(h)?)?;
        if sol.closed_ok {
            return Ok(sol);
        }
        if let Some(p) = &prev {
            if p.frame == sol.frame && wedge_distance(&p.wedge, &sol.wedge) <= tol {
                break;
            }
        }
        prev = Some(sol);
        h *= 0.5;
    }
    let mut sol = prev.ok_or(Error::NoSignChange)?;
    let basis = sol.frame.basis();
    let clouds: Vec<WeightedCloud> = [mu1, mu2].iter().map(|c| assign(&AssignmentSpec::Projection((*c).clone()), &basis)).collect::<Result<_>>()?;
    if let Some(w) = snap_closed(&clouds, &sol.wedge, SNAP_WINDOW) {
        sol.wedge = w;
        sol.closed_ok = true;
    }
    Ok(sol)
}

/// Data coordinates tried on each side of a limit vertex by [`snap_closed`].
pub const SNAP_WINDOW: usize = 8;

/// Moves the vertex of `wedge` onto data coordinates so that ties count on
/// both closed sides. Heights are searched over all data values: near a
/// vertical line the smoothed vertex can sit far below a gap in the data
/// that the limit wedge spans. Returns the closest candidate whose closed
/// sides bisect every cloud, if any.
pub fn snap_closed(clouds: &[WeightedCloud], wedge: &DownWedge, window: usize) -> Option<DownWedge> {
    let coords = |axis: usize| {
        let mut v: Vec<f64> = clouds.iter().flat_map(|c| c.points().map(|p| p[axis]).collect::<Vec<_>>()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let near = |v: &[f64], x: f64| {
        let i = v.partition_point(|a| *a < x);
        v[i.saturating_sub(window)..(i + window).min(v.len())].to_vec()
    };
    let (xs, ys) = (coords(0), coords(1));
    let (t0, y0) = match *wedge {
        DownWedge::Wedge { t, y, .. } => (Some(t), Some(y)),
        DownWedge::VerticalLine { t } => (Some(t), None),
        DownWedge::HorizontalLine { y } => (None, Some(y)),
    };
    let mut cands = Vec::new();
    let tx = t0.map_or_else(|| xs.clone(), |t| near(&xs, t));
    let ty = if t0.is_some() { ys.clone() } else { y0.map(|y| near(&ys, y)).unwrap_or_default() };
    if let Some(t) = t0 {
        cands.extend(near(&xs, t).into_iter().map(|t| DownWedge::VerticalLine { t }));
    }
    if let Some(y) = y0 {
        cands.extend(near(&ys, y).into_iter().map(|y| DownWedge::HorizontalLine { y }));
    }
    for &t in &tx {
        for &y in &ty {
            for orientation in [Orientation::Left, Orientation::Right] {
                cands.push(DownWedge::Wedge { t, y, orientation });
            }
        }
    }
    let same = |w: &DownWedge| std::mem::discriminant(w) == std::mem::discriminant(wedge);
    let dist = |w: &DownWedge| {
        let (t, y) = match *w {
            DownWedge::Wedge { t, y, .. } => (Some(t), Some(y)),
            DownWedge::VerticalLine { t } => (Some(t), None),
            DownWedge::HorizontalLine { y } => (None, Some(y)),
        };
        let gap = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        };
        let kind: f64 = if same(w) { 0.0 } else { 1.0 };
        (kind, gap(t, t0).max(gap(y, y0)))
    };
    cands
        .into_par_iter()
        .filter(|w| clouds.iter().all(|c| closed_bisects(c, w)))
        .min_by(|a, b| {
            let (ka, da) = dist(a);
            let (kb, db) = dist(b);
            ka.total_cmp(&kb).then(da.total_cmp(&db))
        })
}

/// Distance between wedge parameters; infinite across kinds.
pub fn wedge_distance(a: &DownWedge, b: &DownWedge) -> f64 {
    match (a, b) {
        (DownWedge::Wedge { t, y, orientation }, DownWedge::Wedge { t: t2, y: y2, orientation: o2 }) if orientation == o2 => {
            (t - t2).abs().max((y - y2).abs())
        }
        (DownWedge::VerticalLine { t }, DownWedge::VerticalLine { t: t2 }) => (t - t2).abs(),
        (DownWedge::HorizontalLine { y }, DownWedge::HorizontalLine { y: y2 }) => (y - y2).abs(),
        _ => f64::INFINITY,
    }
}

/// Whether some down-wedge (either orientation) or axis line has both closed
/// sides holding half of each cloud, by exhaustive search over vertices
/// taken from the data coordinates. Returns a witness.
pub fn brute_force_wedge(clouds: &[WeightedCloud]) -> Option<DownWedge> {
    let mut xs: Vec<f64> = clouds.iter().flat_map(|c| c.points().map(|p| p[0]).collect::<Vec<_>>()).collect();
    let mut ys: Vec<f64> = clouds.iter().flat_map(|c| c.points().map(|p| p[1]).collect::<Vec<_>>()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let ok = |w: &DownWedge| clouds.iter().all(|c| closed_bisects(c, w));
    if let Some(w) = xs.iter().map(|&t| DownWedge::VerticalLine { t }).find(|w| ok(w)) {
        return Some(w);
    }
    if let Some(w) = ys.iter().map(|&y| DownWedge::HorizontalLine { y }).find(|w| ok(w)) {
        return Some(w);
    }
    xs.par_iter().find_map_first(|&t| {
        for orientation in [Orientation::Left, Orientation::Right] {
            for &y in &ys {
                let w = DownWedge::Wedge { t, y, orientation };
                if ok(&w) {
                    return Some(w);
                }
            }
        }
        None
    })
}

/// Solves the wedge map for `d >= 3` with tolerance `eps` on `|f_j| / W_j`.
///
/// A grid over `S^{d-2} x [0, 1]` (angles for `d = 3`, seeded random
/// directions otherwise) ranks starting points, and Levenberg-Marquardt runs
/// from the best few in the chart `t = sin^2(phi)`.
pub fn wedge_solve(map: &WedgeTestMap, eps: f64, seed: u64) -> Result<WedgeSolution> {
    use rand::SeedableRng;
    let d = map.d;
    if d < 3 {
        return Err(Error::Dimension("use planar_wedge_solve for d = 2".into()));
    }
    let totals = map.totals();
    let n = d - 1;
    let chart = SphereIntervalChart { n };
    let horizontal = |v: &Vector| -> Result<WedgeFrame> { WedgeFrame::from_horizontal(v.as_slice()) };
    let residual = |p: &SpherePhase| -> Option<Vec<f64>> {
        let frame = horizontal(&p.v).ok()?;
        let t = p.t().clamp(0.0, 1.0);
        let vals = map.eval(&frame, t).ok()?;
        Some(vals.iter().zip(&totals).map(|(v, w)| v / w).collect())
    };
    let n_t = 17;
    let dirs: Vec<Vector> = if d == 3 {
        (0..48).map(|i| {
            let a = std::f64::consts::TAU * i as f64 / 48.0;
            Vector::from_column_slice(&[a.cos(), a.sin()])
        }).collect()
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..64 * (d - 2)).map(|_| crate::solvers::sample_frame(n - 1, 0, &mut rng).w).collect()
    };
    let mut cells: Vec<(f64, SpherePhase)> = dirs
        .par_iter()
        .flat_map_iter(|v| {
            (0..n_t).map(move |j| SpherePhase { v: v.clone(), phi: std::f64::consts::FRAC_PI_2 * j as f64 / (n_t - 1) as f64 })
        })
        .filter_map(|p| residual(&p).map(|r| (r.iter().fold(0.0, |a: f64, x| a.max(x.abs())), p)))
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let acc = Acceptance::uniform(n, eps);
    let opts = LmOptions { max_iter: 400, fd_step: 1e-7, max_step: 0.3, ..LmOptions::default() };
    let mut best: Option<(f64, SpherePhase)> = None;
    for chunk in cells.chunks(8).take(8) {
        let outs: Vec<_> = chunk
            .par_iter()
            .filter_map(|(_, p)| levenberg_marquardt(&chart, &residual, p.clone(), &acc, &opts))
            .collect();
        for o in outs {
            if best.as_ref().is_none_or(|(r, _)| o.ratio < *r) {
                best = Some((o.ratio, o.point));
            }
        }
        if best.as_ref().is_some_and(|(r, _)| *r <= 1.0) {
            break;
        }
    }
    let (_, p) = best.ok_or(Error::NoSignChange)?;
    let frame = horizontal(&p.v)?;
    let t = p.t().clamp(0.0, 1.0);
    let ev = map.evaluate(&frame, t)?;
    Ok(WedgeSolution {
        ratio: max_ratio(&ev.values, &totals),
        closed_ok: ev.clouds.iter().all(|c| closed_bisects(c, &ev.wedge)),
        frame,
        t,
        wedge: ev.wedge,
        h: map.smoothing.h,
    })
}
