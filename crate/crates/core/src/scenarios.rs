//! Instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{axis, orthonormal_complement, Vector};
use crate::measures::{AssignmentSpec, Line, WeightedCloud};

/// `d + 2` ball clouds: one at the barycenter of a regular simplex, one at each vertex.
#[derive(Clone, Debug)]
pub struct CounterexampleInstance {
    pub d: usize,
    pub k: usize,
    /// `p_0` (the barycenter, the origin) followed by the simplex vertices.
    pub centers: Vec<Vec<f64>>,
    pub radius: f64,
    pub n: usize,
    pub seed: u64,
    pub clouds: Vec<WeightedCloud>,
}

impl CounterexampleInstance {
    pub fn assignments(&self) -> Vec<AssignmentSpec> {
        self.clouds.iter().cloned().map(AssignmentSpec::Projection).collect()
    }

    /// Distance from `p_0` to the affine hull of each facet.
    pub fn facet_distances(&self) -> Vec<f64> {
        let verts: Vec<Vector> = self.centers[1..].iter().map(|c| Vector::from_column_slice(c)).collect();
        let p0 = Vector::from_column_slice(&self.centers[0]);
        (0..verts.len())
            .map(|skip| {
                let facet: Vec<&Vector> = verts.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| v).collect();
                let base = facet[0];
                let dirs: Vec<Vector> = facet[1..].iter().map(|v| *v - base).collect();
                let mut q: Vec<Vector> = Vec::new();
                for mut x in dirs {
                    for _ in 0..2 {
                        for b in &q {
                            let c = b.dot(&x);
                            x.axpy(-c, b, 1.0);
                        }
                    }
                    if x.norm() > 1e-12 {
                        q.push(x.normalize());
                    }
                }
                let mut r = &p0 - base;
                for b in &q {
                    let c = b.dot(&r);
                    r.axpy(-c, b, 1.0);
                }
                r.norm()
            })
            .collect()
    }
}

/// Vertices of a regular simplex in `R^d` with unit circumradius, centered at 0.
pub fn regular_simplex(d: usize) -> Vec<Vec<f64>> {
    let ones = Vector::from_element(d + 1, 1.0 / ((d + 1) as f64).sqrt());
    let q = orthonormal_complement(std::slice::from_ref(&ones), d + 1);
    let centroid = Vector::from_element(d + 1, 1.0 / (d + 1) as f64);
    (0..=d)
        .map(|i| {
            let e = axis(d + 1, i) - &centroid;
            let coords = Vector::from_iterator(d, q.iter().map(|qj| qj.dot(&e)));
            coords.normalize().iter().copied().collect()
        })
        .collect()
}

/// `n` uniform samples in the ball `B_r(center)` by rejection from the cube.
pub fn sample_ball<R: Rng + ?Sized>(center: &[f64], r: f64, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let d = center.len();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if x.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
            out.push(x.iter().zip(center).map(|(a, c)| c + r * a).collect());
        }
    }
    out
}

/// The instance showing that `d + 1` assignments cannot be raised to `d + 2`.
///
/// Regular simplex with unit circumradius centered at the origin, `p_0 = 0`,
/// `r` half the distance from `p_0` to a facet (`1 / (2d)`), `n` uniform
/// samples in each ball `B_r(p_i)`.
pub fn gen_counterexample(d: usize, k: usize, n: usize, seed: u64) -> CounterexampleInstance {
    assert!(d >= 1 && (1..=d).contains(&k), "need 1 <= k <= d");
    let mut centers = vec![vec![0.0; d]];
    centers.extend(regular_simplex(d));
    let radius = 0.5 / d as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clouds = centers
        .iter()
        .map(|c| WeightedCloud::uniform(d, &sample_ball(c, radius, n, &mut rng)).expect("non-empty ball sample"))
        .collect();
    CounterexampleInstance { d, k, centers, radius, n, seed, clouds }
}

/// Four families of lines in `R^3`.
#[derive(Clone, Debug)]
pub struct LineFamilyInstance {
    pub families: Vec<Vec<Line>>,
    pub seed: u64,
}

impl LineFamilyInstance {
    pub fn assignments(&self) -> Vec<AssignmentSpec> {
        self.families.iter().cloned().map(AssignmentSpec::LineFamily).collect()
    }

    pub fn directions(&self) -> impl Iterator<Item = &Vector> {
        self.families.iter().flatten().map(|l| &l.direction)
    }
}

/// Angular tolerance for vertical and parallel directions.
pub const LINE_ANGLE_EPS: f64 = 1e-3;

fn angle_between_lines(a: &Vector, b: &Vector) -> f64 {
    a.dot(b).abs().min(1.0).acos()
}

/// Four families of `n` random lines, none vertical and no two parallel.
///
/// Directions are `(cos a, sin a, s)` normalized with `s ~ N(0, 1/2)`, so
/// every line crosses most vertical planes at moderate distance. Rejection of
/// near-vertical or near-parallel directions restarts from a fresh stream
/// after too many consecutive draws.
pub fn gen_line_families(n: usize, seed: u64) -> LineFamilyInstance {
    assert!(n >= 1);
    let mut attempt = 0u64;
    'restart: loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0xA24B_AED4_963E_E407)));
        let mut dirs: Vec<Vector> = Vec::new();
        let mut families = Vec::with_capacity(4);
        for f in 0..4 {
            let shift = [(f % 2) as f64 - 0.5, (f / 2) as f64 - 0.5, 0.0];
            let mut lines = Vec::with_capacity(n);
            while lines.len() < n {
                let mut tries = 0;
                let u = loop {
                    tries += 1;
                    if tries > 10_000 {
                        attempt += 1;
                        continue 'restart;
                    }
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    let s = 0.5 * rng.sample::<f64, _>(StandardNormal);
                    let u = Vector::from_column_slice(&[a.cos(), a.sin(), s]).normalize();
                    let vertical = angle_between_lines(&u, &axis(3, 2)) < LINE_ANGLE_EPS;
                    let parallel = dirs.iter().any(|q| angle_between_lines(&u, q) < LINE_ANGLE_EPS);
                    if !vertical && !parallel {
                        break u;
                    }
                };
                let base = Vector::from_fn(3, |i, _| shift[i] + rng.sample::<f64, _>(StandardNormal));
                dirs.push(u.clone());
                lines.push(Line::new(base, u).expect("unit direction"));
            }
            families.push(lines);
        }
        return LineFamilyInstance { families, seed };
    }
}

/// Parameters of an equal-weight isotropic Gaussian mixture.
#[derive(Clone, Debug)]
pub struct MixtureParams {
    pub means: Vec<Vec<f64>>,
    pub sigma: f64,
}

impl MixtureParams {
    pub fn mean(&self) -> Vec<f64> {
        let d = self.means[0].len();
        let c = self.means.len() as f64;
        (0..d).map(|j| self.means.iter().map(|m| m[j]).sum::<f64>() / c).collect()
    }

    /// Per-coordinate standard deviation of the mixture.
    pub fn std(&self) -> Vec<f64> {
        let d = self.means[0].len();
        let mu = self.mean();
        let c = self.means.len() as f64;
        (0..d)
            .map(|j| {
                let between = self.means.iter().map(|m| (m[j] - mu[j]).powi(2)).sum::<f64>() / c;
                (self.sigma * self.sigma + between).sqrt()
            })
            .collect()
    }
}

/// Mixture with component means drawn from `N(0, 4 I)` and unit spread, plus its samples.
pub fn gen_gaussian_mixture_with_params(d: usize, n_components: usize, n_points: usize, seed: u64) -> (WeightedCloud, MixtureParams) {
    assert!(d >= 1 && n_components >= 1 && n_points >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> =
        (0..n_components).map(|_| (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect()).collect();
    let params = MixtureParams { means, sigma: 1.0 };
    let pts: Vec<Vec<f64>> = (0..n_points)
        .map(|_| {
            let c = &params.means[rng.random_range(0..n_components)];
            c.iter().map(|m| m + params.sigma * rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    (WeightedCloud::uniform(d, &pts).expect("non-empty mixture sample"), params)
}

pub fn gen_gaussian_mixture(d: usize, n_components: usize, n_points: usize, seed: u64) -> WeightedCloud {
    gen_gaussian_mixture_with_params(d, n_components, n_points, seed).0
}

/// Largest per-coordinate standard deviation over a set of clouds.
pub fn spread(clouds: &[WeightedCloud]) -> f64 {
    clouds
        .iter()
        .flat_map(|c| {
            let mu = c.mean();
            let w = c.total();
            (0..c.dim())
                .map(|j| {
                    let var = c.points().zip(c.weights()).map(|(p, wi)| wi * (p[j] - mu[j]).powi(2)).sum::<f64>() / w;
                    var.sqrt()
                })
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{complement_basis, FramePoint};
    use crate::measures::assign;

    #[test]
    fn simplex_in_the_plane() {
        let v = regular_simplex(2);
        assert_eq!(v.len(), 3);
        for p in &v {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-12);
        }
        for i in 0..3 {
            for j in i + 1..3 {
                let dist = ((v[i][0] - v[j][0]).powi(2) + (v[i][1] - v[j][1]).powi(2)).sqrt();
                assert!((dist - 3f64.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn counterexample_ball_is_inside_the_simplex() {
        for d in 1..=5 {
            let inst = gen_counterexample(d, d, 50, 1);
            let facet = inst.facet_distances();
            for f in &facet {
                assert!((f - 1.0 / d as f64).abs() < 1e-12, "{d}: {f}");
                assert!(inst.radius <= *f);
            }
            assert_eq!(inst.clouds.len(), d + 2);
            let c0 = &inst.centers[0];
            assert!(c0.iter().all(|x| *x == 0.0));
            for (cl, c) in inst.clouds.iter().zip(&inst.centers) {
                for p in cl.points() {
                    let r: f64 = p.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    assert!(r <= inst.radius + 1e-15);
                }
            }
        }
    }

    #[test]
    fn line_families_respect_the_hypotheses() {
        let inst = gen_line_families(10, 5);
        assert_eq!(inst.families.len(), 4);
        let dirs: Vec<&Vector> = inst.directions().collect();
        assert_eq!(dirs.len(), 40);
        for (i, u) in dirs.iter().enumerate() {
            assert!((u.norm() - 1.0).abs() < 1e-12);
            assert!(u[2].abs() < 1.0 - 1e-9);
            for w in &dirs[i + 1..] {
                assert!(u.cross(w).norm() > 1e-6);
            }
        }
        let again = gen_line_families(10, 5);
        assert_eq!(again.families, inst.families);
        let frame = FramePoint::new(Vector::from_column_slice(&[0.0, 0.0, 0.0, 1.0]), vec![Vector::from_column_slice(&[0.6, -0.8, 0.0])]).unwrap();
        let basis = complement_basis(&frame).unwrap();
        for a in inst.assignments() {
            assert_eq!(assign(&a, &basis).unwrap().len(), 10);
        }
    }

    #[test]
    fn mixture_is_seeded_and_centred() {
        let (cl, params) = gen_gaussian_mixture_with_params(3, 4, 4000, 21);
        assert_eq!(cl.total(), 4000.0);
        let again = gen_gaussian_mixture(3, 4, 4000, 21);
        assert_eq!(again, cl);
        let mean = cl.mean();
        let mu = params.mean();
        let sd = params.std();
        for j in 0..3 {
            assert!((mean[j] - mu[j]).abs() <= 5.0 * sd[j] / (4000f64).sqrt(), "{j}");
        }
    }
}
