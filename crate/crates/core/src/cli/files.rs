//! Scenario and result documents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SlabKind, SlabPartition, SphereKind, SpherePartition, SubspaceBasis, Vector};
use crate::measures::{AssignmentSpec, Line, SmoothingSpec, WeightedCloud};
use crate::solvers::lines::LineCounts;
use crate::solvers::SolverConfig;
use crate::verify::ScanReport;
use crate::wedges::{DownWedge, WedgeFrame};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub d: usize,
    pub k: usize,
    /// Bandwidth; `0` asks for closed counting, reached by halving a positive bandwidth.
    pub smoothing_h: f64,
    pub assignments: Vec<AssignmentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prescribed: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AssignmentDoc {
    Projection {
        points: Vec<Vec<f64>>,
        /// Unit weights when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    LineFamily { lines: Vec<LineDoc> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDoc {
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
}

impl AssignmentDoc {
    pub fn from_spec(spec: &AssignmentSpec) -> Self {
        match spec {
            AssignmentSpec::Projection(c) => {
                let weights = c.weights();
                AssignmentDoc::Projection {
                    points: c.points().map(<[f64]>::to_vec).collect(),
                    weights: (!weights.iter().all(|w| *w == 1.0)).then(|| weights.to_vec()),
                }
            }
            AssignmentSpec::LineFamily(lines) => AssignmentDoc::LineFamily {
                lines: lines
                    .iter()
                    .map(|l| LineDoc { base: l.base.iter().copied().collect(), direction: l.direction.iter().copied().collect() })
                    .collect(),
            },
        }
    }

    pub fn to_spec(&self, d: usize) -> Result<AssignmentSpec> {
        match self {
            AssignmentDoc::Projection { points, weights } => {
                let w = weights.clone().unwrap_or_else(|| vec![1.0; points.len()]);
                Ok(AssignmentSpec::Projection(WeightedCloud::new(d, points, w)?))
            }
            AssignmentDoc::LineFamily { lines } => lines
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    if l.base.len() != d || l.direction.len() != d {
                        return Err(Error::Dimension(format!("line {i} is not in R^{d}")));
                    }
                    Line::new(Vector::from_column_slice(&l.base), Vector::from_column_slice(&l.direction))
                })
                .collect::<Result<Vec<_>>>()
                .map(AssignmentSpec::LineFamily),
        }
    }
}

impl Scenario {
    pub fn new(d: usize, k: usize, smoothing_h: f64, assignments: &[AssignmentSpec], seed: u64) -> Self {
        Scenario {
            version: FORMAT_VERSION,
            d,
            k,
            smoothing_h,
            assignments: assignments.iter().map(AssignmentDoc::from_spec).collect(),
            prescribed: None,
            solver: SolverConfig::default(),
            seed,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.check()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("scenario serializes");
        out.push('\n');
        out
    }

    pub fn check(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Invalid(format!("unsupported scenario version {}", self.version)));
        }
        if self.d == 0 || self.k == 0 || self.k > self.d {
            return Err(Error::Invalid(format!("need 1 <= k <= d, got d = {}, k = {}", self.d, self.k)));
        }
        if !(self.smoothing_h.is_finite() && self.smoothing_h >= 0.0) {
            return Err(Error::Invalid(format!("smoothing_h = {} must be finite and >= 0", self.smoothing_h)));
        }
        if self.assignments.is_empty() {
            return Err(Error::Invalid("scenario has no assignments".into()));
        }
        Ok(())
    }

    pub fn specs(&self) -> Result<Vec<AssignmentSpec>> {
        self.assignments.iter().map(|a| a.to_spec(self.d)).collect()
    }

    pub fn smoothing(&self) -> Result<SmoothingSpec> {
        SmoothingSpec::new(self.smoothing_h)
    }

    pub fn prescribed_vectors(&self) -> Option<Vec<Vector>> {
        self.prescribed.as_ref().map(|p| p.iter().map(|v| Vector::from_column_slice(v)).collect())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig { seed: self.seed, ..self.solver.clone() }
    }

    pub fn projection_clouds(&self) -> Option<Vec<WeightedCloud>> {
        let specs = self.specs().ok()?;
        specs
            .into_iter()
            .map(|s| match s {
                AssignmentSpec::Projection(c) => Some(c),
                AssignmentSpec::LineFamily(_) => None,
            })
            .collect()
    }

    pub fn line_families(&self) -> Option<Vec<Vec<Line>>> {
        let specs = self.specs().ok()?;
        specs
            .into_iter()
            .map(|s| match s {
                AssignmentSpec::LineFamily(l) => Some(l),
                AssignmentSpec::Projection(_) => None,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Ball,
    SphereHalfspace,
    Slab,
    SlabHalfspace,
    Wedge,
}

/// A partition in `L = span(basis)`, with parameters in L-coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    #[serde(rename = "type")]
    pub kind: SolutionKind,
    pub basis: Vec<Vec<f64>>,
    pub parameters: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct BallParams {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct HalfspaceParams {
    normal: Vec<f64>,
    offset: f64,
}

#[derive(Serialize, Deserialize)]
struct SlabParams {
    r1: f64,
    r2: f64,
}

#[derive(Serialize, Deserialize)]
struct OffsetParams {
    offset: f64,
}

/// The geometric object a [`Solution`] describes.
#[derive(Clone, Debug, PartialEq)]
pub enum Partition {
    Sphere(SpherePartition),
    Slab(SlabPartition),
    Wedge { frame: WedgeFrame, wedge: DownWedge },
}

fn basis_rows(b: &SubspaceBasis) -> Vec<Vec<f64>> {
    b.b.iter().map(|v| v.iter().copied().collect()).collect()
}

fn to_value<T: Serialize>(t: T) -> serde_json::Value {
    serde_json::to_value(t).expect("parameters serialize")
}

impl Solution {
    pub fn from_partition(p: &Partition) -> Self {
        match p {
            Partition::Sphere(s) => {
                let (kind, parameters) = match &s.kind {
                    SphereKind::Sphere { center, radius } => {
                        (SolutionKind::Ball, to_value(BallParams { center: center.iter().copied().collect(), radius: *radius }))
                    }
                    SphereKind::Halfspace { normal, offset } => (
                        SolutionKind::SphereHalfspace,
                        to_value(HalfspaceParams { normal: normal.iter().copied().collect(), offset: *offset }),
                    ),
                };
                Solution { kind, basis: basis_rows(&s.basis), parameters }
            }
            Partition::Slab(s) => {
                let (kind, parameters) = match s.kind {
                    SlabKind::Slab { r1, r2 } => (SolutionKind::Slab, to_value(SlabParams { r1, r2 })),
                    SlabKind::Halfspace { offset } => (SolutionKind::SlabHalfspace, to_value(OffsetParams { offset })),
                };
                Solution { kind, basis: basis_rows(&s.basis), parameters }
            }
            Partition::Wedge { frame, wedge } => {
                Solution { kind: SolutionKind::Wedge, basis: basis_rows(&frame.basis()), parameters: to_value(wedge) }
            }
        }
    }

    pub fn partition(&self) -> Result<Partition> {
        let d = self.basis.first().map_or(0, Vec::len);
        let vectors: Vec<Vector> = self.basis.iter().map(|v| Vector::from_column_slice(v)).collect();
        let params = self.parameters.clone();
        Ok(match self.kind {
            SolutionKind::Wedge => {
                let v = vectors.first().cloned().ok_or_else(|| Error::Invalid("wedge solution has no basis".into()))?;
                Partition::Wedge { frame: WedgeFrame::new(v)?, wedge: serde_json::from_value(params)? }
            }
            SolutionKind::Ball | SolutionKind::SphereHalfspace => {
                let basis = SubspaceBasis::new(d, vectors)?;
                let kind = if self.kind == SolutionKind::Ball {
                    let p: BallParams = serde_json::from_value(params)?;
                    SphereKind::Sphere { center: Vector::from_vec(p.center), radius: p.radius }
                } else {
                    let p: HalfspaceParams = serde_json::from_value(params)?;
                    SphereKind::Halfspace { normal: Vector::from_vec(p.normal), offset: p.offset }
                };
                Partition::Sphere(SpherePartition { basis, kind })
            }
            SolutionKind::Slab | SolutionKind::SlabHalfspace => {
                let basis = SubspaceBasis::new(d, vectors)?;
                let kind = if self.kind == SolutionKind::Slab {
                    let p: SlabParams = serde_json::from_value(params)?;
                    SlabKind::Slab { r1: p.r1, r2: p.r2 }
                } else {
                    let p: OffsetParams = serde_json::from_value(params)?;
                    SlabKind::Halfspace { offset: p.offset }
                };
                Partition::Slab(SlabPartition { basis, kind })
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: String,
    pub converged: bool,
    /// Largest normalized coordinate over its acceptance threshold.
    pub ratio: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub walltime: f64,
    /// Bandwidth at which the returned solution was found.
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_lost: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub version: u32,
    pub command: String,
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Solution>,
    /// Absolute residual per assignment at `verify_h`.
    pub residuals: Vec<f64>,
    pub totals: Vec<f64>,
    /// Relative tolerance.
    pub tol: f64,
    /// Bandwidth used by the oracle; `0` means closed counting.
    pub verify_h: f64,
    pub pass: bool,
    pub report: RunReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimality: Option<ScanReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_counts: Option<LineCounts>,
}

impl ResultFile {
    pub fn parse(text: &str) -> Result<Self> {
        let r: ResultFile = serde_json::from_str(text)?;
        if r.version != FORMAT_VERSION {
            return Err(Error::Invalid(format!("unsupported result version {}", r.version)));
        }
        r.scenario.check()?;
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("result serializes");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{gen_gaussian_mixture, gen_line_families};

    #[test]
    fn scenario_round_trip_is_byte_identical() {
        let clouds: Vec<AssignmentSpec> = (0..3).map(|j| AssignmentSpec::Projection(gen_gaussian_mixture(2, 3, 50, j))).collect();
        let s = Scenario::new(2, 2, 0.123456789, &clouds, 7);
        let text = s.to_json();
        let back = Scenario::parse(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), text);
        assert_eq!(back.specs().unwrap(), clouds);
    }

    #[test]
    fn line_families_round_trip() {
        let inst = gen_line_families(4, 2);
        let mut s = Scenario::new(3, 2, 0.0, &inst.assignments(), 2);
        s.prescribed = Some(vec![vec![0.0, 0.0, 1.0]]);
        let text = s.to_json();
        assert_eq!(Scenario::parse(&text).unwrap().to_json(), text);
        assert_eq!(s.line_families().unwrap().len(), 4);
        assert!(s.projection_clouds().is_none());
    }

    #[test]
    fn weights_are_kept_only_when_not_unit() {
        let c = WeightedCloud::new(1, &[vec![0.0], vec![1.0]], vec![2.0, 1.0]).unwrap();
        match AssignmentDoc::from_spec(&AssignmentSpec::Projection(c)) {
            AssignmentDoc::Projection { weights, .. } => assert_eq!(weights, Some(vec![2.0, 1.0])),
            _ => unreachable!(),
        }
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        assert!(Scenario::parse(r#"{"version":1,"d":2,"k":2,"smoothing_h":0.1,"assignments":[],"seed":0}"#).is_err());
        assert!(Scenario::parse(r#"{"version":1,"d":2,"k":3,"smoothing_h":0.1,"assignments":[{"kind":"projection","points":[[0,0]]}],"seed":0}"#).is_err());
        assert!(Scenario::parse(r#"{"version":1,"d":2,"k":2,"smoothing_h":0.1,"bogus":1,"assignments":[{"kind":"projection","points":[[0,0]]}],"seed":0}"#).is_err());
        assert!(Scenario::parse(r#"{"version":1,"d":2,"k":2,"smoothing_h":-1,"assignments":[{"kind":"projection","points":[[0,0]]}],"seed":0}"#).is_err());
    }

    #[test]
    fn solutions_round_trip() {
        let basis = SubspaceBasis::identity(2);
        let parts = vec![
            Partition::Sphere(SpherePartition { basis: basis.clone(), kind: SphereKind::Sphere { center: Vector::from_vec(vec![0.5, -1.0]), radius: 2.0 } }),
            Partition::Sphere(SpherePartition { basis: basis.clone(), kind: SphereKind::Halfspace { normal: Vector::from_vec(vec![0.6, 0.8]), offset: 0.1 } }),
            Partition::Slab(SlabPartition { basis: basis.clone(), kind: SlabKind::Slab { r1: -1.0, r2: 3.0 } }),
            Partition::Slab(SlabPartition { basis, kind: SlabKind::Halfspace { offset: 0.25 } }),
            Partition::Wedge { frame: WedgeFrame::from_angle(0.3), wedge: DownWedge::VerticalLine { t: 0.5 } },
        ];
        for p in parts {
            let s = Solution::from_partition(&p);
            let text = serde_json::to_string(&s).unwrap();
            let back: Solution = serde_json::from_str(&text).unwrap();
            assert_eq!(back.partition().unwrap(), p);
        }
    }
}
