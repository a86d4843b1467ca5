//! Quick internal checks run by `equipart selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::measures::{mass_difference, AssignmentSpec, SmoothingSpec, WeightedCloud};
use crate::solvers::{homotopy_track, minimize_norm, sample_frame, SolverConfig};
use crate::testmaps::{
    canonical_zero, default_prescribed, equivariance_defect, orbit_distance, CanonicalMap, EquivariantMap, GroupElement,
    SlabTestMap, SphereTestMap,
};
use crate::wedges::{quadrant_measure, Orientation, WedgeFrame, WedgeTestMap};

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn cloud(rng: &mut ChaCha8Rng, d: usize, n: usize, shift: f64) -> WeightedCloud {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect()).collect();
    WeightedCloud::uniform(d, &pts).expect("finite sample")
}

fn worst_defect<F: EquivariantMap>(map: &F, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let (d, m) = (map.dim(), map.frame_len());
    (0..samples)
        .map(|_| {
            let p = sample_frame(d, m, rng);
            let g = GroupElement::random(m, rng);
            equivariance_defect(map, &g, &p).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

fn equivariance(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let mut out = Vec::new();
    for (d, k) in [(2, 1), (2, 2), (3, 2), (4, 2), (4, 3)] {
        let assignments: Vec<AssignmentSpec> = (0..=d).map(|j| AssignmentSpec::Projection(cloud(rng, d, 40, 0.3 * j as f64))).collect();
        let s = SmoothingSpec::new(0.1).expect("positive bandwidth");
        let sphere = SphereTestMap::new(d, k, assignments.clone(), default_prescribed(d, k), s).expect("valid sphere map");
        let slab = SlabTestMap::new(d, k, assignments, default_prescribed(d, k), s).expect("valid slab map");
        let g = worst_defect(&CanonicalMap { d, m: d - k }, 10, rng);
        let a = worst_defect(&sphere, 10, rng);
        let b = worst_defect(&slab, 10, rng);
        out.push(Check {
            name: format!("equivariance d={d} k={k}"),
            pass: g <= 1e-12 && a <= 1e-9 && b <= 1e-9,
            detail: format!("g {g:.1e}, sphere {a:.1e}, slab {b:.1e}"),
        });
    }
    out
}

fn canonical_orbit() -> Vec<Check> {
    let mut out = Vec::new();
    for d in 1..=3 {
        for m in 0..=d.min(2) {
            let map = CanonicalMap { d, m };
            let zero = canonical_zero(d, m);
            let cfg = SolverConfig { n_starts: Some(8), ..SolverConfig::with_seed(d as u64 * 10 + m as u64) };
            let a = minimize_norm(&map, &cfg);
            let b = homotopy_track(&map, &cfg);
            let da = orbit_distance(&a.point, &zero);
            let db = orbit_distance(&b.point, &zero);
            out.push(Check {
                name: format!("canonical orbit d={d} m={m}"),
                pass: a.converged && b.converged && da <= 1e-6 && db <= 1e-6,
                detail: format!("multistart {da:.1e}, homotopy {db:.1e}"),
            });
        }
    }
    out
}

fn invariants(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let mut out = Vec::new();

    let assignments: Vec<AssignmentSpec> = (0..3).map(|j| AssignmentSpec::Projection(cloud(rng, 3, 60, 0.2 * j as f64))).collect();
    let map = WedgeTestMap::new(3, assignments, SmoothingSpec::new(0.1).expect("positive bandwidth")).expect("valid wedge map");
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let f = WedgeFrame::from_angle(rng.random_range(0.0..std::f64::consts::TAU));
        let (a1, b1) = (map.eval(&f, 1.0), map.eval(&f.opposite(), 1.0));
        let (a0, b0) = (map.eval(&f, 0.0), map.eval(&f.opposite(), 0.0));
        match (a1, b1, a0, b0) {
            (Ok(a1), Ok(b1), Ok(a0), Ok(b0)) => {
                for i in 0..a1.len() {
                    worst = worst.max((a1[i] + b1[i]).abs()).max((a0[i] - b0[i]).abs());
                }
            }
            _ => worst = f64::INFINITY,
        }
    }
    out.push(Check { name: "wedge symmetry".into(), pass: worst <= 1e-9, detail: format!("{worst:.1e}") });

    let c = cloud(rng, 2, 200, 0.0);
    let s = SmoothingSpec::new(0.05).expect("positive bandwidth");
    let mut monotone = true;
    for _ in 0..50 {
        let t = rng.random_range(-2.0..2.0);
        let y = rng.random_range(-2.0..2.0);
        let y2 = y + rng.random_range(1e-3..1.0);
        monotone &= quadrant_measure(&c, t, y, Orientation::Left, s) < quadrant_measure(&c, t, y2, Orientation::Left, s);
    }
    out.push(Check { name: "quadrant monotone in y".into(), pass: monotone, detail: String::new() });

    let z: Vec<f64> = (0..50).map(|_| rng.sample(StandardNormal)).collect();
    let neg: Vec<f64> = z.iter().map(|x| -x).collect();
    let w = vec![1.0; z.len()];
    let mut odd: f64 = 0.0;
    for _ in 0..20 {
        let c0 = rng.random_range(-1.0..1.0);
        odd = odd.max((mass_difference(&z, &w, c0, s) + mass_difference(&neg, &w, -c0, s)).abs());
    }
    out.push(Check { name: "mass difference is odd".into(), pass: odd <= 1e-12, detail: format!("{odd:.1e}") });
    out
}

pub fn run_all(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = equivariance(&mut rng);
    out.extend(canonical_orbit());
    out.extend(invariants(&mut rng));
    out
}
