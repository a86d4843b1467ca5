//! Local coordinates and retractions.

use crate::geometry::{orthonormal_complement, FramePoint, Vector};
use crate::testmaps::domain_dim;

/// A manifold with a local chart around every point.
///
/// `retract(p, basis(p), 0) == p` and the map `u -> retract(p, basis(p), u)`
/// is a local diffeomorphism onto a neighbourhood of `p`.
pub trait Chart: Sync {
    type Point: Clone + Send + Sync;
    type Basis: Sync;
    fn dim(&self) -> usize;
    fn basis(&self, p: &Self::Point) -> Self::Basis;
    fn retract(&self, p: &Self::Point, basis: &Self::Basis, u: &[f64]) -> Self::Point;
    /// Flattened ambient coordinates, used to compare tangent directions across charts.
    fn ambient(&self, p: &Self::Point) -> Vec<f64>;
}

/// `S^d x V_m(R^d)` with the projection retraction.
#[derive(Clone, Copy, Debug)]
pub struct FrameChart {
    pub d: usize,
    pub m: usize,
}

/// Orthonormal basis of `w^perp` and of `span(v)^perp`.
#[derive(Clone, Debug)]
pub struct FrameTangent {
    pub w_perp: Vec<Vector>,
    pub v_perp: Vec<Vector>,
}

/// Modified Gram-Schmidt, two sweeps.
pub fn gram_schmidt(vs: &mut [Vector]) {
    for i in 0..vs.len() {
        for _ in 0..2 {
            for j in 0..i {
                let (head, tail) = vs.split_at_mut(i);
                let c = head[j].dot(&tail[0]);
                tail[0].axpy(-c, &head[j], 1.0);
            }
        }
        let n = vs[i].norm();
        vs[i] /= n;
    }
}

impl Chart for FrameChart {
    type Point = FramePoint;
    type Basis = FrameTangent;

    fn dim(&self) -> usize {
        domain_dim(self.d, self.m)
    }

    fn basis(&self, p: &FramePoint) -> FrameTangent {
        FrameTangent {
            w_perp: orthonormal_complement(std::slice::from_ref(&p.w), self.d + 1),
            v_perp: orthonormal_complement(&p.v, self.d),
        }
    }

    fn retract(&self, p: &FramePoint, basis: &FrameTangent, u: &[f64]) -> FramePoint {
        let (d, m) = (self.d, self.m);
        debug_assert_eq!(u.len(), self.dim());
        let mut w = p.w.clone();
        for (ul, tl) in u[..d].iter().zip(&basis.w_perp) {
            w.axpy(*ul, tl, 1.0);
        }
        let w = w.normalize();
        let mut v = p.v.clone();
        let mut idx = d;
        for i in 0..m {
            for j in i + 1..m {
                let a = u[idx];
                idx += 1;
                v[i].axpy(a, &p.v[j], 1.0);
                v[j].axpy(-a, &p.v[i], 1.0);
            }
        }
        for vi in v.iter_mut() {
            for nl in &basis.v_perp {
                vi.axpy(u[idx], nl, 1.0);
                idx += 1;
            }
        }
        gram_schmidt(&mut v);
        FramePoint::new_unchecked(w, v)
    }

    fn ambient(&self, p: &FramePoint) -> Vec<f64> {
        p.ambient()
    }
}

/// `S^{n-1} x [0, 1]`, with `t = sin^2(phi)` so the chart has no boundary.
#[derive(Clone, Copy, Debug)]
pub struct SphereIntervalChart {
    pub n: usize,
}

/// A point `(v, phi)` of [`SphereIntervalChart`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePhase {
    pub v: Vector,
    pub phi: f64,
}

impl SpherePhase {
    pub fn t(&self) -> f64 {
        self.phi.sin().powi(2)
    }
}

impl Chart for SphereIntervalChart {
    type Point = SpherePhase;
    type Basis = Vec<Vector>;

    fn dim(&self) -> usize {
        self.n
    }

    fn basis(&self, p: &SpherePhase) -> Vec<Vector> {
        orthonormal_complement(std::slice::from_ref(&p.v), self.n)
    }

    fn retract(&self, p: &SpherePhase, basis: &Vec<Vector>, u: &[f64]) -> SpherePhase {
        let mut v = p.v.clone();
        for (ul, bl) in u.iter().zip(basis) {
            v.axpy(*ul, bl, 1.0);
        }
        SpherePhase { v: v.normalize(), phi: p.phi + u[self.n - 1] }
    }

    fn ambient(&self, p: &SpherePhase) -> Vec<f64> {
        let mut out: Vec<f64> = p.v.iter().copied().collect();
        out.push(p.phi);
        out
    }
}

/// Plain `R^n`.
#[derive(Clone, Copy, Debug)]
pub struct EuclideanChart {
    pub n: usize,
}

impl Chart for EuclideanChart {
    type Point = Vec<f64>;
    type Basis = ();

    fn dim(&self) -> usize {
        self.n
    }

    fn basis(&self, _p: &Vec<f64>) {}

    fn retract(&self, p: &Vec<f64>, _basis: &(), u: &[f64]) -> Vec<f64> {
        p.iter().zip(u).map(|(a, b)| a + b).collect()
    }

    fn ambient(&self, p: &Vec<f64>) -> Vec<f64> {
        p.clone()
    }
}
