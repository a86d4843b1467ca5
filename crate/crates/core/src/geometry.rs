//! Frames, subspaces and the two liftings into `R^{d+1}`.
//!
//! A candidate partition is parametrised by a [`FramePoint`] `(w; v_1..v_m)`
//! with `w` on the unit sphere of `R^{d+1}` and `v` an orthonormal frame of
//! `R^d`. Sphere problems lift a subspace `L` onto the sphere
//! `S = sigma(i(R^d))` of radius 1/2 centred at `(0,..,0,1/2)`; slab problems
//! wrap `L` onto a parabola along its last frame direction. A hyperplane of
//! `R^{d+1}` then pulls back to a sphere (or slab) inside `L`.

use nalgebra::DVector;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

/// Inversion is undefined inside this radius.
pub const EPS_INV: f64 = 1e-12;
/// Geometric resubstitution tolerance.
pub const EPS_GEO: f64 = 1e-9;
/// Orthonormality tolerance for frames and bases.
pub const EPS_ORTHO: f64 = 1e-10;

/// A point `(w; v_1, .., v_m)` of `S^d x V_m(R^d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePoint {
    pub w: Vector,
    pub v: Vec<Vector>,
}

impl FramePoint {
    /// Builds a frame point, checking unit `w` and orthonormal `v`.
    pub fn new(w: Vector, v: Vec<Vector>) -> Result<Self> {
        let p = FramePoint { w, v };
        p.validate(EPS_ORTHO)?;
        Ok(p)
    }

    /// Builds without validation. Used by solvers that retract onto the manifold themselves.
    pub fn new_unchecked(w: Vector, v: Vec<Vector>) -> Self {
        FramePoint { w, v }
    }

    /// Ambient dimension `d` (so `w` lives in `R^{d+1}`).
    pub fn d(&self) -> usize {
        self.w.len() - 1
    }

    /// Frame length `m`.
    pub fn m(&self) -> usize {
        self.v.len()
    }

    /// Largest violation of `|w| = 1` and `<v_i, v_j> = delta_ij`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = (self.w.norm() - 1.0).abs();
        for (i, vi) in self.v.iter().enumerate() {
            for (j, vj) in self.v.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((vi.dot(vj) - target).abs());
            }
        }
        worst
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.d();
        if self.v.iter().any(|vi| vi.len() != d) {
            return Err(Error::Dimension(format!(
                "frame vectors must live in R^{d} (w has length {})",
                d + 1
            )));
        }
        if self.m() > d {
            return Err(Error::Dimension(format!("frame of length {} in R^{d}", self.m())));
        }
        let defect = self.orthonormality_defect();
        if defect > tol || !defect.is_finite() {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(())
    }

    /// Flattened ambient coordinates `(w, v_1, .., v_m)`.
    pub fn ambient(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.w.iter().copied().collect();
        for vi in &self.v {
            out.extend(vi.iter().copied());
        }
        out
    }

    /// Makes the first non-negligible coordinate of `w` and of every `v_i` positive.
    ///
    /// The result lies in the same `(Z_2)^{m+1}` orbit, so any equivariant map
    /// has the same norm there.
    pub fn canonicalize_signs(&self) -> FramePoint {
        FramePoint {
            w: canonical_sign(&self.w),
            v: self.v.iter().map(canonical_sign).collect(),
        }
    }
}

fn canonical_sign(x: &Vector) -> Vector {
    match x.iter().find(|c| c.abs() > 1e-12) {
        Some(&c) if c < 0.0 => -x.clone(),
        _ => x.clone(),
    }
}

/// Orthonormal basis `b_1..b_k` of a k-dimensional subspace `L` of `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    pub d: usize,
    pub b: Vec<Vector>,
}

impl SubspaceBasis {
    pub fn new(d: usize, b: Vec<Vector>) -> Result<Self> {
        if b.iter().any(|x| x.len() != d) {
            return Err(Error::Dimension(format!("basis vectors must live in R^{d}")));
        }
        for (i, bi) in b.iter().enumerate() {
            for (j, bj) in b.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                let dev = (bi.dot(bj) - target).abs();
                if dev > EPS_ORTHO {
                    return Err(Error::NotOrthonormal(dev));
                }
            }
        }
        Ok(SubspaceBasis { d, b })
    }

    /// The standard basis of `R^d`.
    pub fn identity(d: usize) -> Self {
        SubspaceBasis {
            d,
            b: (0..d).map(|j| axis(d, j)).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.b.len()
    }

    /// Coordinates `(<x, b_j>)_j` of the orthogonal projection of `x` onto `L`.
    pub fn coords(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.k(), self.b.iter().map(|bj| bj.dot(x)))
    }

    /// The point `sum_j a_j b_j` of `R^d`.
    pub fn point(&self, a: &Vector) -> Vector {
        let mut x = Vector::zeros(self.d);
        for (aj, bj) in a.iter().zip(&self.b) {
            x.axpy(*aj, bj, 1.0);
        }
        x
    }
}

/// The j-th canonical unit vector of `R^n`.
pub fn axis(n: usize, j: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[j] = 1.0;
    e
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)` in `R^n`.
///
/// Canonical axes `e_1, e_2, ..` are projected onto the complement and
/// orthonormalised in order; projections shorter than `0.5/sqrt(n)` are
/// skipped. A single pass always yields the full complement: at every stage
/// some axis keeps at least `1/sqrt(n)` of its length in what remains.
pub fn orthonormal_complement(vectors: &[Vector], n: usize) -> Vec<Vector> {
    let want = n.saturating_sub(vectors.len());
    let threshold = 0.5 / (n as f64).sqrt();
    let mut out: Vec<Vector> = Vec::with_capacity(want);
    for j in 0..n {
        if out.len() == want {
            break;
        }
        let mut x = axis(n, j);
        // two sweeps of modified Gram-Schmidt
        for _ in 0..2 {
            for q in vectors.iter().chain(out.iter()) {
                let c = q.dot(&x);
                x.axpy(-c, q, 1.0);
            }
        }
        let len = x.norm();
        if len > threshold {
            out.push(x / len);
        }
    }
    out
}

/// Orthonormal basis of `L = span(v_1..v_m)^perp` for a frame of length `m = d - k`.
pub fn complement_basis(frame: &FramePoint) -> Result<SubspaceBasis> {
    let d = frame.d();
    if frame.m() > d {
        return Err(Error::Dimension(format!("frame of length {} in R^{d}", frame.m())));
    }
    for (i, vi) in frame.v.iter().enumerate() {
        if vi.len() != d {
            return Err(Error::Dimension(format!("frame vector {i} is not in R^{d}")));
        }
        for (j, vj) in frame.v.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (vi.dot(vj) - target).abs();
            if dev > EPS_ORTHO {
                return Err(Error::NotOrthonormal(dev));
            }
        }
    }
    Ok(SubspaceBasis {
        d,
        b: orthonormal_complement(&frame.v, d),
    })
}

/// `sigma(x) = x / |x|^2`, the inversion in the unit sphere.
pub fn inversion(x: &Vector) -> Result<Vector> {
    let n2 = x.norm_squared();
    if n2.sqrt() <= EPS_INV {
        return Err(Error::InversionDomain(n2.sqrt()));
    }
    Ok(x / n2)
}

/// `i(x) = (x, 1)`.
pub fn embed_affine(x: &Vector) -> Vector {
    let mut y = Vector::zeros(x.len() + 1);
    y.rows_mut(0, x.len()).copy_from(x);
    y[x.len()] = 1.0;
    y
}

/// `sigma(i(x))` for a point `x` of `R^d`; always defined since `|i(x)| >= 1`.
pub fn lift_to_sphere(x: &Vector) -> Vector {
    let n2 = 1.0 + x.norm_squared();
    let mut y = Vector::zeros(x.len() + 1);
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi = xi / n2;
    }
    y[x.len()] = 1.0 / n2;
    y
}

/// `sigma(i(sum_j a_j b_j))`: the point of `L'` over the L-coordinates `a`.
pub fn sphere_lift(a: &Vector, basis: &SubspaceBasis) -> Vector {
    lift_to_sphere(&basis.point(a))
}

/// Parabolic lift `sum_j a_j (v_j, 0) + a_d^2 e_{d+1}` of `L = span(v_{d-k+1}..v_d)`.
///
/// `a` holds the `k` coordinates along `v_{d-k+1}, .., v_d`; its last entry
/// multiplies `v_d`.
pub fn parabolic_lift(a: &Vector, frame: &FramePoint) -> Vector {
    let d = frame.d();
    let k = a.len();
    let mut y = Vector::zeros(d + 1);
    for (j, aj) in a.iter().enumerate() {
        let vj = &frame.v[d - k + j];
        for r in 0..d {
            y[r] += aj * vj[r];
        }
    }
    let last = if k == 0 { 0.0 } else { a[k - 1] };
    y[d] = last * last;
    y
}

/// Distance from the unit vector `w` to `U = span{(v_i, 0) : i < m_u}`.
pub fn dist_to_u(w: &Vector, v: &[Vector], m_u: usize) -> f64 {
    let proj: f64 = v
        .iter()
        .take(m_u)
        .map(|vi| {
            let c: f64 = vi.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            c * c
        })
        .sum();
    (1.0 - proj).max(0.0).sqrt()
}

/// Affine hyperplane `{y : <y, w> = c}` of `R^{d+1}` with closed sides `H+` and `H-`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperplaneD1 {
    pub w: Vector,
    pub c: f64,
}

impl HyperplaneD1 {
    pub fn signed(&self, y: &Vector) -> f64 {
        self.w.dot(y) - self.c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SphereKind {
    /// Closed ball `{a : |a - center| <= radius}` in L-coordinates.
    Sphere { center: Vector, radius: f64 },
    /// Closed half-space `{a : <a, normal> >= offset}`: a sphere of infinite radius.
    Halfspace { normal: Vector, offset: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpherePartition {
    pub basis: SubspaceBasis,
    pub kind: SphereKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SlabKind {
    /// Closed slab `{r1 <= a_d <= r2}`.
    Slab { r1: f64, r2: f64 },
    /// Closed half-space `{a_d <= offset}`.
    Halfspace { offset: f64 },
}

/// A slab in `L`, measured along the last basis direction `v_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlabPartition {
    pub basis: SubspaceBasis,
    pub kind: SlabKind,
}

/// Pulls `H cap L'` back to `L`: `K = i^{-1}(sigma(H cap L'))`.
///
/// Writing `x = sum a_j b_j`, the boundary satisfies
/// `c|a|^2 - <a, w_L> + (c - w_{d+1}) = 0` with `w_L = (<w, (b_j,0)>)_j`.
/// The returned ball (or half-space) is the pullback of `H+`'s intersection
/// when `c > 0`; for `c < 0` the ball is the pullback of `H-`.
pub fn sphere_from_hyperplane(h: &HyperplaneD1, basis: &SubspaceBasis) -> Result<SpherePartition> {
    let d = basis.d;
    if h.w.len() != d + 1 {
        return Err(Error::Dimension(format!("hyperplane normal must live in R^{}", d + 1)));
    }
    let wl = Vector::from_iterator(
        basis.k(),
        basis.b.iter().map(|bj| bj.iter().zip(h.w.iter()).map(|(a, b)| a * b).sum()),
    );
    let wl_norm = wl.norm();
    let top = h.w[d];
    let c = h.c;
    if c.abs() <= EPS_GEO * wl_norm.max(f64::MIN_POSITIVE) {
        if wl_norm <= EPS_GEO {
            return Err(Error::HyperplaneMissesSphere(f64::NAN));
        }
        return Ok(SpherePartition {
            basis: basis.clone(),
            kind: SphereKind::Halfspace {
                normal: &wl / wl_norm,
                offset: -top / wl_norm,
            },
        });
    }
    let center = &wl / (2.0 * c);
    let r2 = wl_norm * wl_norm / (4.0 * c * c) - (c - top) / c;
    let scale = 1.0 + center.norm_squared();
    if r2 < -EPS_GEO * scale {
        return Err(Error::HyperplaneMissesSphere(r2));
    }
    Ok(SpherePartition {
        basis: basis.clone(),
        kind: SphereKind::Sphere {
            center,
            radius: r2.max(0.0).sqrt(),
        },
    })
}

/// Pulls a hyperplane back through the parabolic lift to a slab orthogonal to `v_d`.
///
/// Requires `<w, (v_i, 0)> ~ 0` for `i < d`, so that `H cap i(L)` only sees
/// `w_{d+1} a_d^2 + <w, (v_d, 0)> a_d = c`.
pub fn slab_from_hyperplane(h: &HyperplaneD1, frame: &FramePoint, k: usize) -> Result<SlabPartition> {
    let d = frame.d();
    if frame.m() != d || k == 0 || k > d {
        return Err(Error::Dimension(format!(
            "slab recovery needs a full frame in R^{d} and 1 <= k <= d (got m={}, k={k})",
            frame.m()
        )));
    }
    let dot = |v: &Vector| -> f64 { v.iter().zip(h.w.iter()).map(|(a, b)| a * b).sum() };
    for (i, vi) in frame.v.iter().take(d - 1).enumerate() {
        let s = dot(vi);
        if s.abs() > 1e-6 {
            return Err(Error::Invalid(format!(
                "slab recovery needs <w,(v_{},0)> = 0, got {s:.3e}",
                i + 1
            )));
        }
    }
    let basis = SubspaceBasis {
        d,
        b: frame.v[d - k..].to_vec(),
    };
    let quad = h.w[d];
    let lin = dot(&frame.v[d - 1]);
    let c = h.c;
    if quad.abs() <= 1e-12 * lin.abs() {
        if lin == 0.0 {
            return Err(Error::HyperplaneMissesParabola);
        }
        return Ok(SlabPartition {
            basis,
            kind: SlabKind::Halfspace { offset: c / lin },
        });
    }
    // quad a^2 + lin a - c = 0
    let disc = lin * lin + 4.0 * quad * c;
    if disc < -EPS_GEO * (lin * lin + quad.abs()) {
        return Err(Error::HyperplaneMissesParabola);
    }
    let sq = disc.max(0.0).sqrt();
    let q = -0.5 * (lin + lin.signum() * sq);
    let (a, b) = if q == 0.0 {
        let r = -lin / (2.0 * quad);
        (r, r)
    } else {
        (q / quad, -c / q)
    };
    let (r1, r2) = if a <= b { (a, b) } else { (b, a) };
    Ok(SlabPartition {
        basis,
        kind: SlabKind::Slab { r1, r2 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn random_frame(rng: &mut ChaCha8Rng, d: usize, m: usize) -> FramePoint {
        let w: Vector = Vector::from_fn(d + 1, |_, _| rng.sample(StandardNormal));
        let w = w.normalize();
        let mut vs: Vec<Vector> = Vec::new();
        while vs.len() < m {
            let mut x: Vector = Vector::from_fn(d, |_, _| rng.sample(StandardNormal));
            for q in &vs {
                let c = q.dot(&x);
                x.axpy(-c, q, 1.0);
            }
            if x.norm() > 1e-3 {
                vs.push(x.normalize());
            }
        }
        FramePoint::new(w, vs).unwrap()
    }

    #[test]
    fn complement_of_axis() {
        let f = FramePoint::new(v(&[0.0, 0.0, 0.0, 1.0]), vec![v(&[0.0, 0.0, 1.0])]).unwrap();
        let b = complement_basis(&f).unwrap();
        assert_eq!(b.b, vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]);

        let f = FramePoint::new(v(&[0.0, 0.0, 1.0]), vec![]).unwrap();
        let b = complement_basis(&f).unwrap();
        assert_eq!(b.b, vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]);
    }

    #[test]
    fn complement_of_random_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=6 {
            for m in 0..=d {
                let f = random_frame(&mut rng, d, m);
                let b = complement_basis(&f).unwrap();
                assert_eq!(b.k(), d - m);
                for bi in &b.b {
                    for vi in &f.v {
                        assert!(bi.dot(vi).abs() <= 1e-10);
                    }
                }
                assert!(SubspaceBasis::new(d, b.b.clone()).is_ok());
                assert_eq!(complement_basis(&f).unwrap(), b);
            }
        }
    }

    #[test]
    fn complement_rejects_bad_frame() {
        let f = FramePoint::new_unchecked(v(&[0.0, 0.0, 1.0]), vec![v(&[1.0, 0.1])]);
        assert!(matches!(complement_basis(&f), Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(inversion(&v(&[2.0, 0.0])).unwrap(), v(&[0.5, 0.0]));
        assert_eq!(inversion(&v(&[1.0, 0.0, 0.0])).unwrap(), v(&[1.0, 0.0, 0.0]));
        let x = v(&[0.3, 0.4]);
        let y = inversion(&x).unwrap();
        assert!((y.clone() - v(&[1.2, 1.6])).norm() < 1e-15);
        assert!((inversion(&y).unwrap() - x).norm() < 1e-15);
        assert!(matches!(inversion(&v(&[0.0, 0.0])), Err(Error::InversionDomain(_))));
    }

    #[test]
    fn inversion_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let n = rng.random_range(1..6);
            let dir: Vector = Vector::from_fn(n, |_, _| rng.sample(StandardNormal)).normalize();
            let r = 10f64.powf(rng.random_range(-11.5..11.5));
            let x = dir * r;
            let back = inversion(&inversion(&x).unwrap()).unwrap();
            assert!((back - &x).norm() <= 1e-12 * x.norm());
        }
    }

    #[test]
    fn affine_embedding() {
        assert_eq!(embed_affine(&v(&[0.0])), v(&[0.0, 1.0]));
        assert_eq!(embed_affine(&v(&[1.0, 2.0])), v(&[1.0, 2.0, 1.0]));
    }

    #[test]
    fn sphere_lift_lands_on_s() {
        let basis = SubspaceBasis::identity(3);
        assert_eq!(sphere_lift(&v(&[0.0, 0.0, 0.0]), &basis), v(&[0.0, 0.0, 0.0, 1.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let center = v(&[0.0, 0.0, 0.0, 0.5]);
        for _ in 0..200 {
            let a: Vector = Vector::from_fn(3, |_, _| 5.0 * rng.sample::<f64, _>(StandardNormal));
            let y = sphere_lift(&a, &basis);
            assert!(((y - &center).norm() - 0.5).abs() <= 1e-12);
        }
        let far = sphere_lift(&v(&[1e9, 0.0, 0.0]), &basis);
        assert!(far.norm() < 1e-8);
    }

    #[test]
    fn sphere_lift_matches_inversion_of_embedding() {
        let basis = SubspaceBasis::identity(2);
        let a = v(&[0.7, -1.3]);
        let direct = inversion(&embed_affine(&a)).unwrap();
        assert!((sphere_lift(&a, &basis) - direct).norm() < 1e-15);
    }

    #[test]
    fn parabolic_lift_examples() {
        let f = FramePoint::new(v(&[0.0, 0.0, 1.0]), vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        assert_eq!(parabolic_lift(&v(&[3.0, 2.0]), &f), v(&[3.0, 2.0, 4.0]));
        assert_eq!(parabolic_lift(&v(&[3.0, 0.0]), &f), v(&[3.0, 0.0, 0.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_frame(&mut rng, 4, 4);
        for _ in 0..20 {
            let a: Vector = Vector::from_fn(2, |_, _| rng.sample(StandardNormal));
            let y = parabolic_lift(&a, &f);
            assert!((y[4] - a[1] * a[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn distance_to_u() {
        let vs = vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])];
        assert_eq!(dist_to_u(&v(&[0.0, 0.0, 0.0, 1.0]), &vs, 2), 1.0);
        assert_eq!(dist_to_u(&v(&[1.0, 0.0, 0.0, 0.0]), &vs, 2), 0.0);
        let s = 0.5f64.sqrt();
        let d = dist_to_u(&v(&[s, 0.0, 0.0, s]), &vs, 2);
        assert!((d - s).abs() < 1e-15);
    }

    #[test]
    fn sphere_from_hyperplane_examples() {
        let basis = SubspaceBasis::identity(2);
        let h = HyperplaneD1 { w: v(&[0.0, 0.0, 1.0]), c: 0.5 };
        match sphere_from_hyperplane(&h, &basis).unwrap().kind {
            SphereKind::Sphere { center, radius } => {
                assert!(center.norm() < 1e-15);
                assert!((radius - 1.0).abs() < 1e-15);
            }
            other => panic!("expected a sphere, got {other:?}"),
        }
        let h = HyperplaneD1 { w: v(&[1.0, 0.0, 0.0]), c: 0.0 };
        match sphere_from_hyperplane(&h, &basis).unwrap().kind {
            SphereKind::Halfspace { normal, offset } => {
                assert_eq!(normal, v(&[1.0, 0.0]));
                assert_eq!(offset, 0.0);
            }
            other => panic!("expected a half-space, got {other:?}"),
        }
        let h = HyperplaneD1 { w: v(&[0.0, 0.0, 1.0]), c: 2.0 };
        assert!(matches!(
            sphere_from_hyperplane(&h, &basis),
            Err(Error::HyperplaneMissesSphere(_))
        ));
    }

    #[test]
    fn sphere_boundary_resubstitutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..100 {
            let d = 2 + trial % 3;
            let k = 1 + trial % d;
            let f = random_frame(&mut rng, d, d - k);
            let basis = complement_basis(&f).unwrap();
            // a hyperplane through the lift of a random point, normal inside span(L', e_{d+1})
            let mut w = Vector::zeros(d + 1);
            for bj in &basis.b {
                let s: f64 = rng.sample(StandardNormal);
                for r in 0..d {
                    w[r] += s * bj[r];
                }
            }
            w[d] = rng.sample(StandardNormal);
            let w = w.normalize();
            let a0: Vector = Vector::from_fn(k, |_, _| rng.sample(StandardNormal));
            let c = w.dot(&sphere_lift(&a0, &basis));
            let h = HyperplaneD1 { w, c };
            let sp = sphere_from_hyperplane(&h, &basis).unwrap();
            for _ in 0..10 {
                let dir: Vector = Vector::from_fn(k, |_, _| rng.sample(StandardNormal)).normalize();
                let a = match &sp.kind {
                    SphereKind::Sphere { center, radius } => center + dir * *radius,
                    SphereKind::Halfspace { normal, offset } => {
                        let mut t = dir.clone() - normal * normal.dot(&dir);
                        if t.norm() > 0.0 {
                            t /= t.norm();
                        }
                        normal * *offset + t
                    }
                };
                let y = sphere_lift(&a, &basis);
                assert!(h.signed(&y).abs() <= 1e-9, "trial {trial}: {}", h.signed(&y));
            }
        }
    }

    #[test]
    fn slab_examples() {
        let f = FramePoint::new(v(&[0.0, 0.0, 1.0]), vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let h = HyperplaneD1 { w: v(&[0.0, 0.0, 1.0]), c: 0.25 };
        assert_eq!(
            slab_from_hyperplane(&h, &f, 2).unwrap().kind,
            SlabKind::Slab { r1: -0.5, r2: 0.5 }
        );
        let h = HyperplaneD1 { w: v(&[0.0, 1.0, 0.0]), c: 0.3 };
        assert_eq!(
            slab_from_hyperplane(&h, &f, 2).unwrap().kind,
            SlabKind::Halfspace { offset: 0.3 }
        );
        let h = HyperplaneD1 { w: v(&[0.0, 0.0, 1.0]), c: -1.0 };
        assert!(matches!(
            slab_from_hyperplane(&h, &f, 2),
            Err(Error::HyperplaneMissesParabola)
        ));
        let h = HyperplaneD1 { w: v(&[1.0, 0.0, 0.0]), c: 0.0 };
        assert!(matches!(slab_from_hyperplane(&h, &f, 2), Err(Error::Invalid(_))));
    }

    #[test]
    fn slab_roots_resubstitute() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..100 {
            let d = 2 + trial % 2;
            let k = 1 + trial % d;
            let f = random_frame(&mut rng, d, d);
            let vd = &f.v[d - 1];
            let (alpha, beta): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            let mut w = Vector::zeros(d + 1);
            for r in 0..d {
                w[r] = beta * vd[r];
            }
            w[d] = alpha;
            let w = w.normalize();
            let mut a0 = Vector::zeros(k);
            a0[k - 1] = rng.sample(StandardNormal);
            let c = w.dot(&parabolic_lift(&a0, &f));
            let h = HyperplaneD1 { w, c };
            let slab = slab_from_hyperplane(&h, &f, k).unwrap();
            let roots = match slab.kind {
                SlabKind::Slab { r1, r2 } => {
                    assert!(r1 <= r2);
                    vec![r1, r2]
                }
                SlabKind::Halfspace { offset } => vec![offset],
            };
            for r in roots {
                let mut a = Vector::zeros(k);
                a[k - 1] = r;
                let y = parabolic_lift(&a, &f);
                assert!(h.signed(&y).abs() <= 1e-9 * (1.0 + r * r));
            }
        }
    }

    #[test]
    fn canonical_signs_stay_in_orbit() {
        let f = FramePoint::new(v(&[0.0, -1.0, 0.0]), vec![v(&[-0.6, 0.8])]).unwrap();
        let c = f.canonicalize_signs();
        assert_eq!(c.w, v(&[0.0, 1.0, 0.0]));
        assert_eq!(c.v[0], v(&[0.6, -0.8]));
    }
}
