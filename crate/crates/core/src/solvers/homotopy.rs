//! Pseudo-arclength continuation of `Ht = t F + (1 - t) g`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::chart::{Chart, FrameChart, FrameTangent};
use super::lm::levenberg_marquardt;
use super::{PathNode, PathSummary, Problem, SolveReport, SolverConfig};
use crate::geometry::FramePoint;
use crate::testmaps::{canonical_g, canonical_zero, EquivariantMap};

struct Tracker<'p, 'a, F: EquivariantMap + ?Sized> {
    problem: &'p Problem<'a, F>,
    chart: FrameChart,
    fd: f64,
    evals: usize,
}

impl<F: EquivariantMap + ?Sized> Tracker<'_, '_, F> {
    fn h(&mut self, p: &FramePoint, t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        self.evals += 1;
        let f = self.problem.normalized(p)?;
        let g = canonical_g(p).flatten();
        let ht = f.iter().zip(&g).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let dt = f.iter().zip(&g).map(|(a, b)| a - b).collect();
        Some((ht, dt))
    }

    /// `[dHt/du | dHt/dt]` at chart coordinates `u` around `p`.
    fn jacobian(&mut self, p: &FramePoint, b: &FrameTangent, u: &[f64], t: f64) -> Option<DMatrix<f64>> {
        let n = self.chart.dim();
        let (h0, dt) = self.h(&self.chart.retract(p, b, u), t)?;
        let mut j = DMatrix::zeros(n, n + 1);
        let mut uu = u.to_vec();
        for c in 0..n {
            uu[c] = u[c] + self.fd;
            let (hc, _) = self.h(&self.chart.retract(p, b, &uu), t)?;
            uu[c] = u[c];
            for r in 0..n {
                j[(r, c)] = (hc[r] - h0[r]) / self.fd;
            }
        }
        for r in 0..n {
            j[(r, n)] = dt[r];
        }
        Some(j)
    }

    fn ambient_tangent(&self, p: &FramePoint, b: &FrameTangent, tau: &DVector<f64>) -> Vec<f64> {
        let n = self.chart.dim();
        let eps = 1e-6;
        let u: Vec<f64> = tau.iter().take(n).map(|x| x * eps).collect();
        let q = self.chart.retract(p, b, &u);
        let mut out: Vec<f64> = q.ambient().iter().zip(p.ambient()).map(|(a, c)| (a - c) / eps).collect();
        out.push(tau[n]);
        out
    }
}

/// Unit null vector of the `n x (n+1)` matrix `j`.
fn null_vector(j: &DMatrix<f64>) -> DVector<f64> {
    let n = j.nrows();
    let mut sq = DMatrix::zeros(n + 1, n + 1);
    sq.view_mut((0, 0), (n, n + 1)).copy_from(j);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let (k, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    vt.row(k).transpose().normalize()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn lost(reason: &str, steps: usize, arc: f64, t: f64, nodes: Vec<PathNode>) -> PathSummary {
    PathSummary { steps, arc_length: arc, final_t: t, lost: true, reason: Some(reason.into()), nodes }
}

/// Tracks the path of `Ht = t F + (1 - t) g` from the canonical zero at `t = 0`.
///
/// `F` is used in normalized units. The path is followed by an Euler
/// predictor along the kernel of `[dHt/dp | dHt/dt]` and a chord-Newton
/// corrector on the hyperplane orthogonal to the tangent. The last step lands
/// exactly on `t = 1` and is polished by Levenberg-Marquardt on `F`. When the
/// corrector fails at the minimal step, the arc budget runs out, or the path
/// returns to `t = 0`, the report has `converged = false` and `path.lost = true`.
pub fn homotopy_track<F: EquivariantMap + ?Sized>(map: &F, cfg: &SolverConfig) -> SolveReport {
    let clock = Instant::now();
    let problem = Problem::new(map, cfg);
    let chart = problem.chart();
    let (d, m) = (chart.d, chart.m);
    let n = chart.dim();
    let hc = &cfg.homotopy;
    let mut tr = Tracker { problem: &problem, chart, fd: hc.fd_step, evals: 0 };
    let mut p = canonical_zero(d, m);
    let mut t = 0.0;
    let mut nodes = vec![PathNode { t, residual: 0.0 }];
    let mut arc = 0.0;
    let mut steps = 0;
    let mut ds = hc.ds0;
    let mut prev: Option<Vec<f64>> = None;

    let report = |p: FramePoint, path: PathSummary, converged: bool, ratio: f64, iterations: usize, evals: usize| SolveReport {
        residual: problem.raw_residual(&p),
        point: p,
        ratio,
        converged,
        strategy: "homotopy".into(),
        iterations,
        evaluations: evals,
        wall_time: clock.elapsed().as_secs_f64(),
        starts: Vec::new(),
        path: Some(path),
    };

    if problem.scale.len() != n {
        let path = lost("range and domain dimensions differ", 0, 0.0, 0.0, nodes);
        return report(p, path, false, f64::INFINITY, 0, 0);
    }

    let path = 'track: loop {
        if steps >= hc.max_steps || arc >= hc.max_arc {
            break 'track lost("arc budget exhausted", steps, arc, t, nodes);
        }
        let b = chart.basis(&p);
        let zero = vec![0.0; n];
        let Some(j0) = tr.jacobian(&p, &b, &zero, t) else {
            break 'track lost("map evaluation failed", steps, arc, t, nodes);
        };
        let mut tau = null_vector(&j0);
        let amb = tr.ambient_tangent(&p, &b, &tau);
        let flip = match &prev {
            None => tau[n] < 0.0,
            Some(a) => amb.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() < 0.0,
        };
        if flip {
            tau = -tau;
        }
        let amb: Vec<f64> = if flip { amb.iter().map(|x| -x).collect() } else { amb };

        loop {
            // land exactly on t = 1 when the predictor would cross it
            let landing = tau[n] > 0.0 && t + ds * tau[n] >= 1.0;
            let step = if landing { (1.0 - t) / tau[n] } else { ds };
            let pred: DVector<f64> = &tau * step;
            let mut y = pred.clone();
            if landing {
                y[n] = 1.0 - t;
            }
            let mut jac = j0.clone();
            let mut ok = false;
            let mut fast = true;
            let mut last = f64::INFINITY;
            let mut hval = Vec::new();
            for it in 0..hc.corrector_iter {
                let q = chart.retract(&p, &b, &y.as_slice()[..n]);
                let Some((hv, _)) = tr.h(&q, t + y[n]) else { break };
                let r = sup(&hv);
                hval = hv;
                if r <= hc.corrector_tol {
                    ok = true;
                    fast = it <= 3;
                    break;
                }
                if r > 0.5 * last {
                    // chord iteration slowing down: refresh the Jacobian
                    match tr.jacobian(&p, &b, &y.as_slice()[..n], t + y[n]) {
                        Some(jn) => jac = jn,
                        None => break,
                    }
                }
                if r > 4.0 * last && it > 1 {
                    break;
                }
                last = r;
                let mut a = DMatrix::zeros(n + 1, n + 1);
                a.view_mut((0, 0), (n, n + 1)).copy_from(&jac);
                let mut rhs = DVector::zeros(n + 1);
                for i in 0..n {
                    rhs[i] = -hval[i];
                }
                if landing {
                    a[(n, n)] = 1.0;
                } else {
                    for c in 0..=n {
                        a[(n, c)] = tau[c];
                    }
                    rhs[n] = -(&y - &pred).dot(&tau);
                }
                let Some(delta) = a.lu().solve(&rhs) else { break };
                if delta.norm() > 2.0 * step.max(1e-3) + 0.5 {
                    break;
                }
                y += delta;
            }
            if ok {
                p = chart.retract(&p, &b, &y.as_slice()[..n]);
                t += y[n];
                arc += step;
                steps += 1;
                nodes.push(PathNode { t, residual: sup(&hval) });
                prev = Some(amb.clone());
                if fast {
                    ds = (ds * 1.5).min(hc.ds_max);
                }
                if landing {
                    let lm = levenberg_marquardt(&chart, &|q: &FramePoint| problem.normalized(q), p.clone(), &problem.acceptance, &cfg.lm_options());
                    let (q, ratio, accepted, its, ev) = match lm {
                        Some(o) => (o.point, o.ratio, o.accepted, o.iterations, o.evaluations),
                        None => (p.clone(), f64::INFINITY, false, 0, 0),
                    };
                    tr.evals += ev;
                    let path = PathSummary { steps, arc_length: arc, final_t: t, lost: !accepted, reason: (!accepted).then(|| "final polish did not converge".to_string()), nodes };
                    let evals = tr.evals;
                    return report(q.canonicalize_signs(), path, accepted, ratio, steps + its, evals);
                }
                if t < -0.05 {
                    break 'track lost("path returned to t = 0", steps, arc, t, nodes);
                }
                continue 'track;
            }
            ds *= 0.5;
            if ds < hc.ds_min {
                break 'track lost("corrector failed at minimal step", steps, arc, t, nodes);
            }
        }
    };
    let ratio = problem.normalized(&p).map(|r| problem.acceptance.ratio(&r)).unwrap_or(f64::INFINITY);
    let evals = tr.evals;
    report(p.canonicalize_signs(), path, false, ratio, steps, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testmaps::CanonicalMap;

    #[test]
    fn constant_path_for_the_canonical_map() {
        for (d, m) in [(2, 1), (3, 2), (4, 0)] {
            let rep = homotopy_track(&CanonicalMap { d, m }, &SolverConfig::default());
            assert!(rep.converged, "{d} {m}: {:?}", rep.path);
            let z = canonical_zero(d, m);
            assert!((rep.point.w.clone() - z.w).norm() < 1e-9);
            let path = rep.path.unwrap();
            assert_eq!(path.final_t, 1.0);
            assert!(path.nodes.iter().all(|n| n.residual <= 1e-9));
        }
    }

    #[test]
    fn mismatched_shapes_are_reported() {
        use crate::measures::{AssignmentSpec, SmoothingSpec, WeightedCloud};
        use crate::testmaps::SphereTestMap;
        let cl = WeightedCloud::uniform(2, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let map = SphereTestMap::new(2, 2, vec![AssignmentSpec::Projection(cl); 4], vec![], SmoothingSpec::new(0.1).unwrap()).unwrap();
        let rep = homotopy_track(&map, &SolverConfig::default());
        assert!(!rep.converged);
        assert!(rep.path.unwrap().lost);
    }
}
