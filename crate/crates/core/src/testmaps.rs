//! Equivariant test maps `S^d x V_m(R^d) -> R = R^d x R^{d-1} x .. x R^{d-m}`.
//!
//! The group `(Z_2)^{m+1}` acts on the domain by flipping `w` and the frame
//! vectors. On the range, flipping `v_i` negates the block `x_i`, and flipping
//! `w` negates `x_0` together with the first coordinate of every other block.
//! Each map here commutes with that action exactly (bit for bit), which the
//! property tests rely on.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, complement_basis, FramePoint, HyperplaneD1, SlabPartition, SpherePartition, SubspaceBasis, Vector};
use crate::measures::{self, assign, AssignmentSpec, SmoothingSpec, WeightedCloud};

/// Element `(lambda_0; lambda_1..lambda_m)` of `(Z_2)^{m+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub signs: Vec<i8>,
}

impl GroupElement {
    pub fn identity(m: usize) -> Self {
        GroupElement { signs: vec![1; m + 1] }
    }

    /// The generator `m_i` flipping only slot `i` (slot 0 is `w`).
    pub fn generator(m: usize, i: usize) -> Self {
        let mut g = Self::identity(m);
        g.signs[i] = -1;
        g
    }

    /// All `2^{m+1}` elements, indexed by the bits of a counter.
    pub fn all(m: usize) -> Vec<Self> {
        (0..1usize << (m + 1))
            .map(|bits| GroupElement {
                signs: (0..=m).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect(),
            })
            .collect()
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        GroupElement {
            signs: (0..=m).map(|_| if rng.random::<bool>() { -1 } else { 1 }).collect(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        GroupElement {
            signs: self.signs.iter().zip(&other.signs).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.signs.len() - 1
    }
}

/// Block vector `(x_0, x_1, .., x_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestMapValue {
    pub blocks: Vec<Vec<f64>>,
}

impl TestMapValue {
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sup_norm(&self) -> f64 {
        self.blocks.iter().flatten().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn block_lengths(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Largest coordinate difference; `inf` when the shapes differ.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        if self.block_lengths() != other.block_lengths() {
            return f64::INFINITY;
        }
        self.flatten()
            .iter()
            .zip(other.flatten())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Flips `w` by `lambda_0` and each `v_i` by `lambda_i`.
pub fn act_domain(g: &GroupElement, p: &FramePoint) -> FramePoint {
    debug_assert_eq!(g.m(), p.m());
    let flip = |s: i8, x: &Vector| if s < 0 { -x } else { x.clone() };
    FramePoint::new_unchecked(
        flip(g.signs[0], &p.w),
        p.v.iter().zip(&g.signs[1..]).map(|(vi, s)| flip(*s, vi)).collect(),
    )
}

/// The range action: `lambda_i` negates `x_i`; `lambda_0` negates `x_0` and every leading entry.
pub fn act_range(g: &GroupElement, val: &TestMapValue) -> TestMapValue {
    let mut out = val.clone();
    if g.signs[0] < 0 {
        out.blocks[0].iter_mut().for_each(|x| *x = -*x);
        for block in out.blocks.iter_mut().skip(1) {
            if let Some(first) = block.first_mut() {
                *first = -*first;
            }
        }
    }
    for (block, s) in out.blocks.iter_mut().skip(1).zip(&g.signs[1..]) {
        if *s < 0 {
            block.iter_mut().for_each(|x| *x = -*x);
        }
    }
    out
}

/// The canonical equivariant map with a single zero orbit.
///
/// `x_0 = (w_1..w_d)` and `x_i = (w_{d+1} v_{i,1}, v_{i,2}, .., v_{i,d-i})`.
/// Its zeros are `w = +-e_{d+1}`, `v_i = +-e_{d+1-i}`.
pub fn canonical_g(p: &FramePoint) -> TestMapValue {
    let d = p.d();
    let mut blocks = Vec::with_capacity(p.m() + 1);
    blocks.push(p.w.iter().take(d).copied().collect());
    for (i, vi) in p.v.iter().enumerate() {
        let len = d - (i + 1);
        let mut block: Vec<f64> = vi.iter().take(len).copied().collect();
        if let Some(first) = block.first_mut() {
            *first *= p.w[d];
        }
        blocks.push(block);
    }
    TestMapValue { blocks }
}

/// Distance from `p` to the orbit of `q` in ambient coordinates.
pub fn orbit_distance(p: &FramePoint, q: &FramePoint) -> f64 {
    let a = p.ambient();
    GroupElement::all(q.m())
        .iter()
        .map(|g| act_domain(g, q).ambient().iter().zip(&a).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// `|F(g p) - g F(p)|_inf`.
pub fn equivariance_defect<F: EquivariantMap + ?Sized>(map: &F, g: &GroupElement, p: &FramePoint) -> Result<f64> {
    let lhs = map.eval(&act_domain(g, p))?;
    let rhs = act_range(g, &map.eval(p)?);
    Ok(lhs.sup_distance(&rhs))
}

/// The zero of [`canonical_g`] with all signs positive.
pub fn canonical_zero(d: usize, m: usize) -> FramePoint {
    FramePoint::new_unchecked(
        geometry::axis(d + 1, d),
        (1..=m).map(|i| geometry::axis(d, d - i)).collect(),
    )
}

/// Scale of one output coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoordUnit {
    /// A mass difference; the value is the total weight of that assignment.
    Mass(f64),
    /// A dot product or coordinate, already dimensionless.
    Geometric,
}

impl CoordUnit {
    pub fn scale(&self) -> f64 {
        match self {
            CoordUnit::Mass(w) => *w,
            CoordUnit::Geometric => 1.0,
        }
    }
}

/// An equivariant map from `S^d x V_m(R^d)`.
pub trait EquivariantMap: Sync {
    /// `d`.
    fn dim(&self) -> usize;
    /// `m`.
    fn frame_len(&self) -> usize;
    fn eval(&self, p: &FramePoint) -> Result<TestMapValue>;
    /// One entry per flattened output coordinate.
    fn units(&self) -> Vec<CoordUnit>;
}

/// [`canonical_g`] as an [`EquivariantMap`].
#[derive(Clone, Debug)]
pub struct CanonicalMap {
    pub d: usize,
    pub m: usize,
}

impl EquivariantMap for CanonicalMap {
    fn dim(&self) -> usize {
        self.d
    }
    fn frame_len(&self) -> usize {
        self.m
    }
    fn eval(&self, p: &FramePoint) -> Result<TestMapValue> {
        Ok(canonical_g(p))
    }
    fn units(&self) -> Vec<CoordUnit> {
        vec![CoordUnit::Geometric; range_dim(self.d, self.m, self.d)]
    }
}

/// `len(x_0) + sum_{i=1}^m (d - i)`.
pub fn range_dim(d: usize, m: usize, x0_len: usize) -> usize {
    x0_len + (1..=m).map(|i| d - i).sum::<usize>()
}

/// `dim(S^d x V_m(R^d))`; equals [`range_dim`] when `x_0` has length `d`.
pub fn domain_dim(d: usize, m: usize) -> usize {
    range_dim(d, m, d)
}

fn check_assignments(assignments: &[AssignmentSpec], d: usize) -> Result<()> {
    if assignments.is_empty() {
        return Err(Error::Invalid("at least one mass assignment is required".into()));
    }
    for (j, a) in assignments.iter().enumerate() {
        if a.ambient_dim() != d {
            return Err(Error::Dimension(format!(
                "assignment {j} lives in R^{} but d = {d}",
                a.ambient_dim()
            )));
        }
        if let AssignmentSpec::LineFamily(lines) = a {
            if lines.is_empty() {
                return Err(Error::Invalid(format!("assignment {j} has no lines")));
            }
        }
    }
    Ok(())
}

fn check_prescribed(prescribed: &[Vector], d: usize, k: usize) -> Result<()> {
    if prescribed.len() + 1 > k.max(1) {
        return Err(Error::Invalid(format!(
            "at most k - 1 = {} prescribed directions fit, got {}",
            k.saturating_sub(1),
            prescribed.len()
        )));
    }
    if prescribed.iter().any(|e| e.len() != d) {
        return Err(Error::Dimension(format!("prescribed directions must live in R^{d}")));
    }
    Ok(())
}

/// `e_1, .., e_{k-1}`.
pub fn default_prescribed(d: usize, k: usize) -> Vec<Vector> {
    (0..k.saturating_sub(1)).map(|j| geometry::axis(d, j)).collect()
}

fn dot_w(w: &Vector, v: &Vector) -> f64 {
    v.iter().zip(w.iter()).map(|(a, b)| a * b).sum()
}

/// `(<w,(v_i,0)>, <e_1,v_i>, .., <e_{k-1},v_i>, 0, .., 0)` in `R^{len}`.
fn frame_block(w: &Vector, vi: &Vector, prescribed: &[Vector], len: usize) -> Vec<f64> {
    let mut block = vec![0.0; len];
    block[0] = dot_w(w, vi);
    for (slot, e) in block.iter_mut().skip(1).zip(prescribed) {
        *slot = e.dot(vi);
    }
    block
}

fn mass_block(
    w: &Vector,
    frame: &[Vector],
    m_u: usize,
    lifted: &[(Vec<f64>, &[f64])],
    smoothing: SmoothingSpec,
) -> (Vec<f64>, f64) {
    let (z0, w0) = &lifted[0];
    let c = measures::bisecting_offset_1d(z0, w0, smoothing);
    let dist = geometry::dist_to_u(w, frame, m_u);
    let x0 = lifted[1..]
        .iter()
        .map(|(z, wt)| dist * measures::mass_difference(z, wt, c, smoothing))
        .collect();
    (x0, c)
}

/// The sphere test map: zeros give a subspace `L` and a sphere in `L` bisecting every assignment.
///
/// `L` is the orthogonal complement of `v_1..v_{d-k}`; every assigned cloud is
/// lifted onto the sphere `S` by `sigma o i`, `H` is the translate of
/// `w^perp` bisecting the first lifted cloud, and
/// `x_0 = dist(w, U) (nu_j(H+) - nu_j(H-))_{j>=1}`.
#[derive(Clone, Debug)]
pub struct SphereTestMap {
    pub d: usize,
    pub k: usize,
    pub assignments: Vec<AssignmentSpec>,
    pub prescribed: Vec<Vector>,
    pub smoothing: SmoothingSpec,
}

impl SphereTestMap {
    pub fn new(
        d: usize,
        k: usize,
        assignments: Vec<AssignmentSpec>,
        prescribed: Vec<Vector>,
        smoothing: SmoothingSpec,
    ) -> Result<Self> {
        if k == 0 || k > d {
            return Err(Error::Invalid(format!("need 1 <= k <= d, got k = {k}, d = {d}")));
        }
        check_assignments(&assignments, d)?;
        check_prescribed(&prescribed, d, k)?;
        Ok(SphereTestMap { d, k, assignments, prescribed, smoothing })
    }

    /// Lifted projections `<sigma(i(x)), w>` of every assigned cloud.
    fn lifted_projections<'a>(&self, clouds: &'a [WeightedCloud], w: &Vector) -> Vec<(Vec<f64>, &'a [f64])> {
        let basis_w: Vec<f64> = w.iter().copied().collect();
        clouds
            .iter()
            .map(|cl| (lifted_sphere_values(cl, &basis_w), cl.weights()))
            .collect()
    }

    fn assigned(&self, basis: &SubspaceBasis) -> Result<Vec<WeightedCloud>> {
        self.assignments.iter().map(|a| assign(a, basis)).collect()
    }

    /// The bisecting hyperplane `H` of the first lifted assignment at `p`.
    pub fn hyperplane(&self, p: &FramePoint) -> Result<(SubspaceBasis, HyperplaneD1)> {
        let basis = complement_basis(p)?;
        let clouds = self.assigned(&basis)?;
        let wl = l_components(&basis, &p.w);
        let (z0, w0) = (lifted_sphere_values(&clouds[0], &wl), clouds[0].weights());
        let c = measures::bisecting_offset_1d(&z0, w0, self.smoothing);
        Ok((basis, HyperplaneD1 { w: p.w.clone(), c }))
    }

    /// Sphere in `L` encoded by `p`.
    pub fn partition(&self, p: &FramePoint) -> Result<SpherePartition> {
        let (basis, h) = self.hyperplane(p)?;
        geometry::sphere_from_hyperplane(&h, &basis)
    }

    /// Assigned clouds on `L` (in L-coordinates).
    pub fn clouds_on(&self, basis: &SubspaceBasis) -> Result<Vec<WeightedCloud>> {
        self.assigned(basis)
    }
}

/// `(<w, (b_j, 0)>)_j` followed by `w_{d+1}`.
fn l_components(basis: &SubspaceBasis, w: &Vector) -> Vec<f64> {
    let d = basis.d;
    let mut out: Vec<f64> = basis.b.iter().map(|bj| dot_w(w, bj)).collect();
    out.push(w[d]);
    out
}

/// `<sigma(i(x)), w> = (<a, w_L> + w_{d+1}) / (1 + |a|^2)` for L-coordinates `a`.
fn lifted_sphere_values(cloud: &WeightedCloud, wl: &[f64]) -> Vec<f64> {
    let k = cloud.dim();
    let top = wl[k];
    cloud
        .points()
        .map(|a| {
            let mut dot = top;
            let mut n2 = 1.0;
            for j in 0..k {
                dot += a[j] * wl[j];
                n2 += a[j] * a[j];
            }
            dot / n2
        })
        .collect()
}

impl EquivariantMap for SphereTestMap {
    fn dim(&self) -> usize {
        self.d
    }

    fn frame_len(&self) -> usize {
        self.d - self.k
    }

    fn eval(&self, p: &FramePoint) -> Result<TestMapValue> {
        let d = self.d;
        let m = self.d - self.k;
        if p.d() != d || p.m() != m {
            return Err(Error::Dimension(format!(
                "sphere map expects a point of S^{d} x V_{m}(R^{d}), got d={}, m={}",
                p.d(),
                p.m()
            )));
        }
        let basis = complement_basis(p)?;
        let clouds = self.assigned(&basis)?;
        let wl = l_components(&basis, &p.w);
        let lifted = self.lifted_projections(&clouds, &Vector::from_vec(wl));
        let (x0, _) = mass_block(&p.w, &p.v, m, &lifted, self.smoothing);
        let mut blocks = Vec::with_capacity(m + 1);
        blocks.push(x0);
        for (i, vi) in p.v.iter().enumerate() {
            blocks.push(frame_block(&p.w, vi, &self.prescribed, d - (i + 1)));
        }
        Ok(TestMapValue { blocks })
    }

    fn units(&self) -> Vec<CoordUnit> {
        let mut u: Vec<CoordUnit> = self.assignments[1..].iter().map(|a| CoordUnit::Mass(a.total())).collect();
        let m = self.d - self.k;
        u.extend(std::iter::repeat_n(CoordUnit::Geometric, range_dim(self.d, m, 0)));
        u
    }
}

/// The slab test map on `S^d x V_d(R^d)`.
///
/// `L = span(v_{d-k+1}..v_d)` is wrapped onto a parabola along `v_d`; a zero
/// yields two hyperplanes of `L` orthogonal to `v_d` whose slab holds half of
/// every assignment. `x_0` uses `U = span{(v_i, 0) : i < d}`.
#[derive(Clone, Debug)]
pub struct SlabTestMap {
    pub d: usize,
    pub k: usize,
    pub assignments: Vec<AssignmentSpec>,
    pub prescribed: Vec<Vector>,
    pub smoothing: SmoothingSpec,
}

impl SlabTestMap {
    pub fn new(
        d: usize,
        k: usize,
        assignments: Vec<AssignmentSpec>,
        prescribed: Vec<Vector>,
        smoothing: SmoothingSpec,
    ) -> Result<Self> {
        if k == 0 || k > d {
            return Err(Error::Invalid(format!("need 1 <= k <= d, got k = {k}, d = {d}")));
        }
        check_assignments(&assignments, d)?;
        check_prescribed(&prescribed, d, k)?;
        Ok(SlabTestMap { d, k, assignments, prescribed, smoothing })
    }

    /// `span(v_{d-k+1}..v_d)` with `v_d` last.
    pub fn basis(&self, p: &FramePoint) -> SubspaceBasis {
        SubspaceBasis { d: self.d, b: p.v[self.d - self.k..].to_vec() }
    }

    fn lifted_values(&self, clouds: &[WeightedCloud], p: &FramePoint) -> Vec<Vec<f64>> {
        let d = self.d;
        let k = self.k;
        let coef: Vec<f64> = p.v[d - k..].iter().map(|vj| dot_w(&p.w, vj)).collect();
        let top = p.w[d];
        clouds
            .iter()
            .map(|cl| {
                cl.points()
                    .map(|a| {
                        let mut s = 0.0;
                        for j in 0..k {
                            s += a[j] * coef[j];
                        }
                        s + a[k - 1] * a[k - 1] * top
                    })
                    .collect()
            })
            .collect()
    }

    pub fn hyperplane(&self, p: &FramePoint) -> Result<HyperplaneD1> {
        let basis = self.basis(p);
        let clouds: Vec<WeightedCloud> = self.assignments.iter().map(|a| assign(a, &basis)).collect::<Result<_>>()?;
        let z = self.lifted_values(&clouds[..1], p);
        let c = measures::bisecting_offset_1d(&z[0], clouds[0].weights(), self.smoothing);
        Ok(HyperplaneD1 { w: p.w.clone(), c })
    }

    pub fn partition(&self, p: &FramePoint) -> Result<SlabPartition> {
        let h = self.hyperplane(p)?;
        geometry::slab_from_hyperplane(&h, p, self.k)
    }

    pub fn clouds_on(&self, basis: &SubspaceBasis) -> Result<Vec<WeightedCloud>> {
        self.assignments.iter().map(|a| assign(a, basis)).collect()
    }
}

impl EquivariantMap for SlabTestMap {
    fn dim(&self) -> usize {
        self.d
    }

    fn frame_len(&self) -> usize {
        self.d
    }

    fn eval(&self, p: &FramePoint) -> Result<TestMapValue> {
        let d = self.d;
        let k = self.k;
        if p.d() != d || p.m() != d {
            return Err(Error::Dimension(format!(
                "slab map expects a point of S^{d} x V_{d}(R^{d}), got d={}, m={}",
                p.d(),
                p.m()
            )));
        }
        let basis = self.basis(p);
        let clouds: Vec<WeightedCloud> = self.assignments.iter().map(|a| assign(a, &basis)).collect::<Result<_>>()?;
        let z = self.lifted_values(&clouds, p);
        let lifted: Vec<(Vec<f64>, &[f64])> = z.into_iter().zip(clouds.iter().map(|c| c.weights())).collect();
        let (x0, _) = mass_block(&p.w, &p.v, d - 1, &lifted, self.smoothing);
        let mut blocks = Vec::with_capacity(d + 1);
        blocks.push(x0);
        for (idx, vi) in p.v.iter().enumerate() {
            let i = idx + 1;
            let len = d - i;
            if i == d {
                blocks.push(Vec::new());
            } else if i <= d - k {
                blocks.push(frame_block(&p.w, vi, &self.prescribed, len));
            } else {
                blocks.push(frame_block(&p.w, vi, &[], len));
            }
        }
        Ok(TestMapValue { blocks })
    }

    fn units(&self) -> Vec<CoordUnit> {
        let mut u: Vec<CoordUnit> = self.assignments[1..].iter().map(|a| CoordUnit::Mass(a.total())).collect();
        u.extend(std::iter::repeat_n(CoordUnit::Geometric, range_dim(self.d, self.d, 0)));
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::axis;
    use crate::measures::{lift_cloud, Lifter};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn random_point(rng: &mut ChaCha8Rng, d: usize, m: usize) -> FramePoint {
        let w = Vector::from_fn(d + 1, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
        let mut vs: Vec<Vector> = Vec::new();
        while vs.len() < m {
            let mut x = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            for _ in 0..2 {
                for q in &vs {
                    let c = q.dot(&x);
                    x.axpy(-c, q, 1.0);
                }
            }
            if x.norm() > 1e-3 {
                vs.push(x.normalize());
            }
        }
        FramePoint::new(w, vs).unwrap()
    }

    fn random_cloud(rng: &mut ChaCha8Rng, d: usize, n: usize, shift: f64) -> WeightedCloud {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        WeightedCloud::uniform(d, &pts).unwrap()
    }

    #[test]
    fn group_law() {
        let val = TestMapValue { blocks: vec![vec![1.0, 2.0], vec![3.0]] };
        let m0 = GroupElement::generator(1, 0);
        let m1 = GroupElement::generator(1, 1);
        assert_eq!(act_range(&m0, &val).blocks, vec![vec![-1.0, -2.0], vec![-3.0]]);
        assert_eq!(act_range(&m1, &val).blocks, vec![vec![1.0, 2.0], vec![-3.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let val = TestMapValue { blocks: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0], vec![6.0]] };
        for _ in 0..20 {
            let a = GroupElement::random(2, &mut rng);
            let b = GroupElement::random(2, &mut rng);
            assert_eq!(act_range(&a.compose(&b), &val), act_range(&a, &act_range(&b, &val)));
        }
    }

    #[test]
    fn domain_action() {
        let p = random_point(&mut ChaCha8Rng::seed_from_u64(2), 3, 2);
        assert_eq!(act_domain(&GroupElement::identity(2), &p), p);
        let flipped = act_domain(&GroupElement::generator(2, 0), &p);
        assert_eq!(flipped.w, -p.w.clone());
        assert_eq!(flipped.v, p.v);
        for g in GroupElement::all(2) {
            assert_eq!(act_domain(&g, &act_domain(&g, &p)), p);
        }
    }

    #[test]
    fn canonical_map_examples() {
        let p = FramePoint::new(v(&[0.0, 0.0, 1.0]), vec![v(&[0.0, 1.0])]).unwrap();
        assert_eq!(canonical_g(&p).sup_norm(), 0.0);
        let p = FramePoint::new(v(&[0.0, 0.0, 1.0]), vec![v(&[1.0, 0.0])]).unwrap();
        assert_eq!(canonical_g(&p).blocks, vec![vec![0.0, 0.0], vec![1.0]]);
        for d in 1..=5 {
            for m in 0..=d {
                let z = canonical_zero(d, m);
                assert!(z.validate(1e-15).is_ok());
                assert_eq!(canonical_g(&z).sup_norm(), 0.0);
                assert_eq!(canonical_g(&z).len(), domain_dim(d, m));
            }
        }
    }

    #[test]
    fn canonical_map_is_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let d = rng.random_range(1..6);
            let m = rng.random_range(0..=d);
            let p = random_point(&mut rng, d, m);
            let g = GroupElement::random(m, &mut rng);
            let lhs = canonical_g(&act_domain(&g, &p));
            let rhs = act_range(&g, &canonical_g(&p));
            assert!(lhs.sup_distance(&rhs) <= 1e-12);
        }
    }

    #[test]
    fn identical_assignments_kill_x0() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cl = random_cloud(&mut rng, 3, 60, 0.3);
        let assignments = vec![AssignmentSpec::Projection(cl); 4];
        let s = SmoothingSpec::new(0.05).unwrap();
        let sphere = SphereTestMap::new(3, 2, assignments.clone(), default_prescribed(3, 2), s).unwrap();
        let slab = SlabTestMap::new(3, 2, assignments, default_prescribed(3, 2), s).unwrap();
        for _ in 0..10 {
            let p = random_point(&mut rng, 3, 1);
            let val = sphere.eval(&p).unwrap();
            assert!(val.blocks[0].iter().all(|x| x.abs() < 1e-9));
            assert_eq!(val.block_lengths(), vec![3, 2]);
            let q = random_point(&mut rng, 3, 3);
            let val = slab.eval(&q).unwrap();
            assert!(val.blocks[0].iter().all(|x| x.abs() < 1e-9));
            assert_eq!(val.block_lengths(), vec![3, 2, 1, 0]);
        }
    }

    #[test]
    fn sphere_values_match_explicit_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cl = random_cloud(&mut rng, 3, 25, 0.0);
        let p = random_point(&mut rng, 3, 1);
        let basis = complement_basis(&p).unwrap();
        let assigned = assign(&AssignmentSpec::Projection(cl), &basis).unwrap();
        let lifted = lift_cloud(&assigned, &Lifter::Sphere(&basis)).unwrap();
        let explicit = lifted.project(p.w.as_slice());
        let wl = l_components(&basis, &p.w);
        let fast = lifted_sphere_values(&assigned, &wl);
        for (a, b) in explicit.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn slab_values_match_explicit_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let cl = random_cloud(&mut rng, 3, 25, 0.0);
        let p = random_point(&mut rng, 3, 3);
        let map = SlabTestMap::new(3, 2, vec![AssignmentSpec::Projection(cl)], vec![], SmoothingSpec::discrete()).unwrap();
        let basis = map.basis(&p);
        let assigned = map.clouds_on(&basis).unwrap();
        let lifted = lift_cloud(&assigned[0], &Lifter::Parabolic(&p)).unwrap();
        let explicit = lifted.project(p.w.as_slice());
        let fast = map.lifted_values(&assigned, &p);
        for (a, b) in explicit.iter().zip(&fast[0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn prescribed_coordinates_vanish_when_l_contains_them() {
        // v_1 orthogonal to e_1 => L contains e_1
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cl = random_cloud(&mut rng, 3, 20, 0.0);
        let map = SphereTestMap::new(
            3,
            2,
            vec![AssignmentSpec::Projection(cl); 4],
            default_prescribed(3, 2),
            SmoothingSpec::new(0.1).unwrap(),
        )
        .unwrap();
        let p = FramePoint::new(random_point(&mut rng, 3, 0).w, vec![v(&[0.0, 0.6, 0.8])]).unwrap();
        let val = map.eval(&p).unwrap();
        assert_eq!(val.blocks[1][1], 0.0);
        let basis = complement_basis(&p).unwrap();
        let e1 = axis(3, 0);
        let proj = basis.point(&basis.coords(&e1));
        assert!((proj - e1).norm() < 1e-12);
    }

    #[test]
    fn x0_vanishes_as_w_enters_u() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let assignments: Vec<AssignmentSpec> =
            (0..4).map(|j| AssignmentSpec::Projection(random_cloud(&mut rng, 3, 40, j as f64 * 0.3))).collect();
        let map = SphereTestMap::new(3, 2, assignments, vec![], SmoothingSpec::new(0.05).unwrap()).unwrap();
        let v1 = v(&[0.0, 0.6, 0.8]);
        let mut prev = f64::INFINITY;
        for step in 1..=6 {
            let eps = 10f64.powi(-step);
            let w = v(&[eps, 0.6, 0.8, eps]).normalize();
            let p = FramePoint::new(w, vec![v1.clone()]).unwrap();
            let x0 = map.eval(&p).unwrap().blocks[0].iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(x0 <= 4.0 * 40.0 * eps * 2.0);
            assert!(x0 <= prev * 1.01 + 1e-12);
            prev = x0;
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let cl = WeightedCloud::uniform(2, &[vec![0.0, 0.0]]).unwrap();
        let a = vec![AssignmentSpec::Projection(cl); 3];
        assert!(SphereTestMap::new(2, 0, a.clone(), vec![], SmoothingSpec::discrete()).is_err());
        assert!(SphereTestMap::new(3, 2, a.clone(), vec![], SmoothingSpec::discrete()).is_err());
        assert!(SphereTestMap::new(2, 1, a.clone(), vec![axis(2, 0)], SmoothingSpec::discrete()).is_err());
        let map = SphereTestMap::new(2, 2, a, vec![], SmoothingSpec::discrete()).unwrap();
        let p = FramePoint::new(v(&[0.0, 0.0, 1.0]), vec![v(&[1.0, 0.0])]).unwrap();
        assert!(map.eval(&p).is_err());
    }
}
