//! Vertical circles halving four families of lines.

use serde::{Deserialize, Serialize};

use super::{solve, SolveReport, SolverConfig};
use crate::error::Result;
use crate::geometry::{axis, SpherePartition};
use crate::measures::{AssignmentSpec, Line, SmoothingSpec};
use crate::testmaps::SphereTestMap;
use crate::verify::count_lines_through_disc;

/// Counts `(through, not_through)` per family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineCounts {
    pub counts: Vec<(usize, usize)>,
    pub sizes: Vec<usize>,
}

impl LineCounts {
    /// At least half of every family on each closed side.
    pub fn halves(&self) -> bool {
        self.counts.iter().zip(&self.sizes).all(|(&(a, b), &n)| 2 * a >= n && 2 * b >= n)
    }
}

pub fn count_families(families: &[Vec<Line>], circle: &SpherePartition) -> Result<LineCounts> {
    let counts = families.iter().map(|f| count_lines_through_disc(f, circle)).collect::<Result<_>>()?;
    Ok(LineCounts { counts, sizes: families.iter().map(Vec::len).collect() })
}

#[derive(Clone, Debug)]
pub struct VerticalCircle {
    pub circle: SpherePartition,
    pub counts: LineCounts,
    pub h: f64,
    pub report: SolveReport,
}

/// Solves the sphere map for `d = 3`, `k = 2` with `L` vertical, halving `h`
/// from `h0` until the closed disc halves every family by counting.
///
/// Returns the last solution found when no bandwidth succeeds.
pub fn vertical_circle(families: &[Vec<Line>], cfg: &SolverConfig, h0: f64, max_halvings: usize) -> Result<Option<VerticalCircle>> {
    let mut h = h0;
    let mut last = None;
    for _ in 0..=max_halvings {
        let map = SphereTestMap::new(3, 2, families.iter().cloned().map(AssignmentSpec::LineFamily).collect(), vec![axis(3, 2)], SmoothingSpec::new(h)?)?;
        let report = solve(&map, cfg);
        if report.converged {
            if let Ok(circle) = map.partition(&report.point) {
                if let Ok(counts) = count_families(families, &circle) {
                    let ok = counts.halves();
                    last = Some(VerticalCircle { circle, counts, h, report });
                    if ok {
                        break;
                    }
                }
            }
        }
        h *= 0.5;
    }
    Ok(last)
}
