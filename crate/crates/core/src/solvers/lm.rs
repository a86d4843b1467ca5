//! Damped Gauss-Newton in local charts, with a compass-search fallback.

use nalgebra::{DMatrix, DVector};

use super::chart::Chart;

/// Residual function in normalized units; `None` marks an invalid point.
pub trait Residual<P>: Sync {
    fn residual(&self, p: &P) -> Option<Vec<f64>>;
}

impl<P, F: Fn(&P) -> Option<Vec<f64>> + Sync> Residual<P> for F {
    fn residual(&self, p: &P) -> Option<Vec<f64>> {
        self(p)
    }
}

/// Per-coordinate acceptance thresholds on the normalized residual.
#[derive(Clone, Debug)]
pub struct Acceptance {
    pub tol: Vec<f64>,
}

impl Acceptance {
    pub fn uniform(n: usize, tol: f64) -> Self {
        Acceptance { tol: vec![tol; n] }
    }

    /// `max_k |r_k| / tol_k`; at most 1 means accepted.
    pub fn ratio(&self, r: &[f64]) -> f64 {
        r.iter().zip(&self.tol).fold(0.0, |acc, (x, t)| acc.max(x.abs() / t))
    }

    pub fn accepts(&self, r: &[f64]) -> bool {
        self.ratio(r) <= 1.0
    }
}

#[derive(Clone, Debug)]
pub struct LmOptions {
    pub max_iter: usize,
    pub fd_step: f64,
    /// Largest chart step per iteration.
    pub max_step: f64,
    /// Extra iterations spent after acceptance to gain margin.
    pub polish: usize,
    /// Compass-search evaluations allowed after a stall.
    pub compass_evals: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iter: 5000, fd_step: 1e-7, max_step: 0.5, polish: 2, compass_evals: 400 }
    }
}

#[derive(Clone, Debug)]
pub struct LmOutcome<P> {
    pub point: P,
    pub residual: Vec<f64>,
    pub ratio: f64,
    pub accepted: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

fn sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Forward-difference Jacobian of `r` at `p` in the chart centred at `p`.
pub fn fd_jacobian<C: Chart, R: Residual<C::Point>>(
    chart: &C,
    res: &R,
    p: &C::Point,
    basis: &C::Basis,
    r0: &[f64],
    step: f64,
) -> Option<DMatrix<f64>> {
    let n = chart.dim();
    let mut j = DMatrix::zeros(r0.len(), n);
    let mut u = vec![0.0; n];
    for c in 0..n {
        u[c] = step;
        let rc = res.residual(&chart.retract(p, basis, &u))?;
        u[c] = 0.0;
        for (row, (a, b)) in rc.iter().zip(r0).enumerate() {
            j[(row, c)] = (a - b) / step;
        }
    }
    Some(j)
}

/// Minimizes `|r|^2` from `start` until `acc` accepts the residual.
pub fn levenberg_marquardt<C: Chart, R: Residual<C::Point>>(
    chart: &C,
    res: &R,
    start: C::Point,
    acc: &Acceptance,
    opts: &LmOptions,
) -> Option<LmOutcome<C::Point>> {
    let n = chart.dim();
    let mut p = start;
    let mut r = res.residual(&p)?;
    let mut evals = 1;
    let mut cost = sq(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut polish_left = opts.polish;
    let mut stalled = false;
    while iterations < opts.max_iter {
        if acc.accepts(&r) {
            if polish_left == 0 {
                break;
            }
            polish_left -= 1;
        }
        iterations += 1;
        let basis = chart.basis(&p);
        let Some(j) = fd_jacobian(chart, res, &p, &basis, &r, opts.fd_step) else {
            stalled = true;
            break;
        };
        evals += n;
        let jt = j.transpose();
        let a = &jt * &j;
        let g = &jt * DVector::from_column_slice(&r);
        let mut improved = false;
        while lambda < 1e14 {
            let mut m = a.clone();
            for i in 0..n {
                m[(i, i)] += lambda * a[(i, i)].max(1e-12);
            }
            let step = match m.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => match m.lu().solve(&(-&g)) {
                    Some(s) => s,
                    None => {
                        lambda *= 4.0;
                        continue;
                    }
                },
            };
            let norm = step.norm();
            let step = if norm > opts.max_step { step * (opts.max_step / norm) } else { step };
            let q = chart.retract(&p, &basis, step.as_slice());
            evals += 1;
            if let Some(rq) = res.residual(&q) {
                let cq = sq(&rq);
                if cq < cost {
                    p = q;
                    r = rq;
                    cost = cq;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !improved {
            stalled = true;
            break;
        }
    }
    if stalled && !acc.accepts(&r) && opts.compass_evals > 0 {
        let (q, rq, e) = compass(chart, res, p, r, acc, opts.compass_evals);
        p = q;
        r = rq;
        evals += e;
    }
    let ratio = acc.ratio(&r);
    Some(LmOutcome { point: p, accepted: ratio <= 1.0, ratio, residual: r, iterations, evaluations: evals })
}

/// Coordinate search on `max_k |r_k| / tol_k` with step halving.
pub fn compass<C: Chart, R: Residual<C::Point>>(
    chart: &C,
    res: &R,
    start: C::Point,
    r0: Vec<f64>,
    acc: &Acceptance,
    budget: usize,
) -> (C::Point, Vec<f64>, usize) {
    let n = chart.dim();
    let mut p = start;
    let mut r = r0;
    let mut best = acc.ratio(&r);
    let mut step = 1e-2;
    let mut evals = 0;
    while evals < budget && step > 1e-12 && best > 1.0 {
        let basis = chart.basis(&p);
        let mut moved = false;
        'dirs: for c in 0..n {
            for sign in [1.0, -1.0] {
                let mut u = vec![0.0; n];
                u[c] = sign * step;
                let q = chart.retract(&p, &basis, &u);
                evals += 1;
                if let Some(rq) = res.residual(&q) {
                    let v = acc.ratio(&rq);
                    if v < best {
                        best = v;
                        p = q;
                        r = rq;
                        moved = true;
                        break 'dirs;
                    }
                }
                if evals >= budget {
                    break 'dirs;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (p, r, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FramePoint, Vector};
    use crate::solvers::chart::{FrameChart, SphereIntervalChart, SpherePhase};

    #[test]
    fn finds_a_point_on_the_sphere() {
        // zero of w -> (w_1 - w_2, w_3 - 0.5) on S^2
        let chart = FrameChart { d: 2, m: 0 };
        let res = |p: &FramePoint| Some(vec![p.w[0] - p.w[1], p.w[2] - 0.5]);
        let start = FramePoint::new(Vector::from_column_slice(&[1.0, 0.0, 0.0]), vec![]).unwrap();
        let out = levenberg_marquardt(&chart, &res, start, &Acceptance::uniform(2, 1e-12), &LmOptions::default()).unwrap();
        assert!(out.accepted);
        assert!((out.point.w[2] - 0.5).abs() < 1e-12);
        assert!((out.point.w[0] - out.point.w[1]).abs() < 1e-12);
    }

    #[test]
    fn compass_reduces_sup_norm() {
        let chart = SphereIntervalChart { n: 2 };
        let res = |p: &SpherePhase| Some(vec![p.v[0] - 0.6, p.t() - 0.25]);
        let start = SpherePhase { v: Vector::from_column_slice(&[0.0, 1.0]), phi: 0.1 };
        let r0 = res(&start).unwrap();
        let acc = Acceptance::uniform(2, 1e-6);
        let (p, r, _) = compass(&chart, &res, start, r0.clone(), &acc, 5000);
        assert!(acc.ratio(&r) < acc.ratio(&r0));
        assert!((p.v[0] - 0.6).abs() < 1e-4);
    }
}
