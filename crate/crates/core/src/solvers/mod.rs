//! Zero finding on `S^d x V_m(R^d)`.
//!
//! [`minimize_norm`] runs seeded multistart Levenberg-Marquardt in local
//! charts; [`homotopy_track`] follows the straight-line homotopy from the
//! canonical map to the target map. [`solve`] dispatches on [`Strategy`].

pub mod chart;
pub mod homotopy;
pub mod lines;
pub mod lm;
pub mod multistart;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{FramePoint, Vector};
use crate::testmaps::{CoordUnit, EquivariantMap};

pub use chart::{Chart, FrameChart};
pub use homotopy::homotopy_track;
pub use lm::{Acceptance, LmOptions};
pub use multistart::minimize_norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Multistart,
    Homotopy,
    #[default]
    Auto,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "multistart" => Ok(Strategy::Multistart),
            "homotopy" => Ok(Strategy::Homotopy),
            "auto" => Ok(Strategy::Auto),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Multistart => "multistart",
            Strategy::Homotopy => "homotopy",
            Strategy::Auto => "auto",
        })
    }
}

/// Objective used to rank starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Sup,
    Two,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomotopyConfig {
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub corrector_tol: f64,
    pub corrector_iter: usize,
    pub max_arc: f64,
    pub max_steps: usize,
    pub fd_step: f64,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        HomotopyConfig {
            ds0: 0.05,
            ds_min: 1e-7,
            ds_max: 0.4,
            corrector_tol: 1e-9,
            corrector_iter: 8,
            max_arc: 60.0,
            max_steps: 4000,
            fd_step: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub strategy: Strategy,
    /// Set from the scenario seed, not stored with the solver block.
    #[serde(skip)]
    pub seed: u64,
    /// `None` means `64 * 2^m`.
    pub n_starts: Option<usize>,
    /// Acceptance for mass coordinates, relative to the assignment's total weight.
    pub eps_mass: f64,
    /// Acceptance for geometric coordinates.
    pub eps_geo: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    /// Starts run concurrently per round; the search stops after the first round with a zero.
    pub batch: usize,
    pub norm: Norm,
    pub homotopy: HomotopyConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            strategy: Strategy::Auto,
            seed: 0,
            n_starts: None,
            eps_mass: 1e-6,
            eps_geo: 1e-8,
            max_iter: 5000,
            fd_step: 1e-7,
            batch: 8,
            norm: Norm::Sup,
            homotopy: HomotopyConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig { seed, ..Self::default() }
    }

    pub fn starts_for(&self, m: usize) -> usize {
        self.n_starts.unwrap_or(64usize << m.min(16)).max(1)
    }

    pub fn lm_options(&self) -> LmOptions {
        LmOptions { max_iter: self.max_iter, fd_step: self.fd_step, ..LmOptions::default() }
    }
}

/// Summary of one multistart run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub index: usize,
    pub ratio: f64,
    pub iterations: usize,
    pub accepted: bool,
}

/// One stored homotopy node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathNode {
    pub t: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub steps: usize,
    pub arc_length: f64,
    pub final_t: f64,
    pub lost: bool,
    pub reason: Option<String>,
    pub nodes: Vec<PathNode>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub point: FramePoint,
    /// Sup-norm of the raw map value at `point`.
    pub residual: f64,
    /// `max_k |x_k| / tol_k`; at most 1 means converged.
    pub ratio: f64,
    pub converged: bool,
    pub strategy: String,
    pub iterations: usize,
    pub evaluations: usize,
    pub wall_time: f64,
    pub starts: Vec<StartSummary>,
    pub path: Option<PathSummary>,
}

/// A map together with its normalization and acceptance thresholds.
pub struct Problem<'a, F: EquivariantMap + ?Sized> {
    pub map: &'a F,
    pub scale: Vec<f64>,
    pub acceptance: Acceptance,
}

impl<'a, F: EquivariantMap + ?Sized> Problem<'a, F> {
    pub fn new(map: &'a F, cfg: &SolverConfig) -> Self {
        let units = map.units();
        let scale = units.iter().map(CoordUnit::scale).collect();
        let tol = units
            .iter()
            .map(|u| match u {
                CoordUnit::Mass(_) => cfg.eps_mass,
                CoordUnit::Geometric => cfg.eps_geo,
            })
            .collect();
        Problem { map, scale, acceptance: Acceptance { tol } }
    }

    pub fn chart(&self) -> FrameChart {
        FrameChart { d: self.map.dim(), m: self.map.frame_len() }
    }

    /// Value divided coordinatewise by its unit.
    pub fn normalized(&self, p: &FramePoint) -> Option<Vec<f64>> {
        let val = self.map.eval(p).ok()?;
        let flat = val.flatten();
        if flat.len() != self.scale.len() || flat.iter().any(|x| !x.is_finite()) {
            return None;
        }
        Some(flat.iter().zip(&self.scale).map(|(x, s)| x / s).collect())
    }

    pub fn raw_residual(&self, p: &FramePoint) -> f64 {
        self.map.eval(p).map(|v| v.sup_norm()).unwrap_or(f64::INFINITY)
    }
}

/// Uniform `w` on `S^d` and a Gaussian frame orthonormalized; redraws degenerate vectors.
pub fn sample_frame<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> FramePoint {
    assert!(m <= d, "frame length exceeds dimension");
    let w = loop {
        let g = Vector::from_fn(d + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        if g.norm() > 1e-6 {
            break g.normalize();
        }
    };
    let mut v: Vec<Vector> = Vec::with_capacity(m);
    while v.len() < m {
        let mut x = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n0 = x.norm();
        for _ in 0..2 {
            for q in &v {
                let c = q.dot(&x);
                x.axpy(-c, q, 1.0);
            }
        }
        if x.norm() > 1e-3 * n0 && x.norm() > 1e-12 {
            v.push(x.normalize());
        }
    }
    FramePoint::new_unchecked(w, v)
}

/// Runs `f` on a pool capped by `EQUIPART_THREADS` when that variable is set.
pub fn with_thread_cap<T: Send, F: FnOnce() -> T + Send>(f: F) -> T {
    let cap = std::env::var("EQUIPART_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok());
    match cap {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Homotopy first when requested or in `auto`; multistart when the path is lost.
pub fn solve<F: EquivariantMap + ?Sized>(map: &F, cfg: &SolverConfig) -> SolveReport {
    with_thread_cap(|| match cfg.strategy {
        Strategy::Multistart => minimize_norm(map, cfg),
        Strategy::Homotopy | Strategy::Auto => {
            let h = homotopy_track(map, cfg);
            if h.converged {
                return h;
            }
            let mut ms = minimize_norm(map, cfg);
            ms.strategy = format!("{}+multistart", h.strategy);
            ms.wall_time += h.wall_time;
            ms.evaluations += h.evaluations;
            ms.path = h.path;
            ms
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_frames_are_valid_and_reproducible() {
        for d in 1..=6 {
            for m in 0..=d {
                let a = sample_frame(d, m, &mut ChaCha8Rng::seed_from_u64(11));
                let b = sample_frame(d, m, &mut ChaCha8Rng::seed_from_u64(11));
                assert_eq!(a, b);
                assert!(a.validate(1e-12).is_ok());
                assert_eq!(a.m(), m);
            }
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in [Strategy::Multistart, Strategy::Homotopy, Strategy::Auto] {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("newton".parse::<Strategy>().is_err());
    }
}
