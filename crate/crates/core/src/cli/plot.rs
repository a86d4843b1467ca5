//! CSV and SVG of a planar partition in L-coordinates.

use std::fmt::Write as _;

use super::files::Partition;
use crate::error::{Error, Result};
use crate::geometry::{SlabKind, SphereKind};
use crate::measures::{assign, AssignmentSpec, WeightedCloud};
use crate::verify::{slab_signed, sphere_signed};
use crate::wedges::{DownWedge, Orientation};

const SIZE: f64 = 640.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Points of every assignment on the plane of `partition`, tagged inside or outside.
pub struct PlotData {
    pub clouds: Vec<WeightedCloud>,
    pub inside: Vec<Vec<bool>>,
}

pub fn plot_data(assignments: &[AssignmentSpec], partition: &Partition) -> Result<PlotData> {
    let basis = match partition {
        Partition::Sphere(s) => s.basis.clone(),
        Partition::Slab(s) => s.basis.clone(),
        Partition::Wedge { frame, .. } => frame.basis(),
    };
    if basis.k() != 2 {
        return Err(Error::Dimension(format!("plots need a plane, got k = {}", basis.k())));
    }
    let clouds: Vec<WeightedCloud> = assignments.iter().map(|a| assign(a, &basis)).collect::<Result<_>>()?;
    let inside = clouds
        .iter()
        .map(|c| {
            c.points()
                .map(|a| match partition {
                    Partition::Sphere(s) => sphere_signed(&s.kind, a) >= 0.0,
                    Partition::Slab(s) => slab_signed(&s.kind, a[1]) >= 0.0,
                    Partition::Wedge { wedge, .. } => wedge.in_a(a[0], a[1]),
                })
                .collect()
        })
        .collect();
    Ok(PlotData { clouds, inside })
}

pub fn csv(data: &PlotData) -> String {
    let mut out = String::from("assignment,x,y,weight,inside\n");
    for (j, (c, ins)) in data.clouds.iter().zip(&data.inside).enumerate() {
        for ((p, w), i) in c.points().zip(c.weights()).zip(ins) {
            let _ = writeln!(out, "{j},{},{},{},{}", p[0], p[1], w, u8::from(*i));
        }
    }
    out
}

struct View {
    lo: [f64; 2],
    scale: f64,
}

impl View {
    fn x(&self, x: f64) -> f64 {
        (x - self.lo[0]) * self.scale
    }
    fn y(&self, y: f64) -> f64 {
        SIZE - (y - self.lo[1]) * self.scale
    }
    fn hi(&self) -> [f64; 2] {
        [self.lo[0] + SIZE / self.scale, self.lo[1] + SIZE / self.scale]
    }
}

fn segment(out: &mut String, v: &View, a: [f64; 2], b: [f64; 2]) {
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
        v.x(a[0]),
        v.y(a[1]),
        v.x(b[0]),
        v.y(b[1])
    );
}

pub fn svg(data: &PlotData, partition: &Partition) -> String {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in &data.clouds {
        for p in c.points() {
            for j in 0..2 {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
    }
    if !lo[0].is_finite() {
        (lo, hi) = ([-1.0; 2], [1.0; 2]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9) * 1.1;
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let view = View { lo: [mid[0] - 0.5 * span, mid[1] - 0.5 * span], scale: SIZE / span };
    let far = 4.0 * span;

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (j, (c, ins)) in data.clouds.iter().zip(&data.inside).enumerate() {
        let col = COLORS[j % COLORS.len()];
        for (p, i) in c.points().zip(ins) {
            let fill = if *i { col } else { "none" };
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{fill}" stroke="{col}" stroke-width="0.8"/>"#,
                view.x(p[0]),
                view.y(p[1])
            );
        }
    }
    let (l, h) = (view.lo, view.hi());
    match partition {
        Partition::Sphere(s) => match &s.kind {
            SphereKind::Sphere { center, radius } => {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#,
                    view.x(center[0]),
                    view.y(center[1]),
                    radius * view.scale
                );
            }
            SphereKind::Halfspace { normal, offset } => {
                let p0 = [normal[0] * offset, normal[1] * offset];
                let t = [-normal[1], normal[0]];
                segment(&mut out, &view, [p0[0] - far * t[0], p0[1] - far * t[1]], [p0[0] + far * t[0], p0[1] + far * t[1]]);
            }
        },
        Partition::Slab(s) => {
            let levels = match s.kind {
                SlabKind::Slab { r1, r2 } => vec![r1, r2],
                SlabKind::Halfspace { offset } => vec![offset],
            };
            for y in levels {
                segment(&mut out, &view, [l[0] - far, y], [h[0] + far, y]);
            }
        }
        Partition::Wedge { wedge, .. } => match *wedge {
            DownWedge::Wedge { t, y, orientation } => {
                segment(&mut out, &view, [t, y], [t, l[1] - far]);
                let end = if orientation == Orientation::Left { l[0] - far } else { h[0] + far };
                segment(&mut out, &view, [t, y], [end, y]);
            }
            DownWedge::VerticalLine { t } => segment(&mut out, &view, [t, l[1] - far], [t, h[1] + far]),
            DownWedge::HorizontalLine { y } => segment(&mut out, &view, [l[0] - far, y], [h[0] + far, y]),
        },
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SpherePartition, SubspaceBasis, Vector};

    #[test]
    fn unit_disc_tags_points() {
        let c = WeightedCloud::uniform(2, &[vec![0.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let part = Partition::Sphere(SpherePartition {
            basis: SubspaceBasis::identity(2),
            kind: SphereKind::Sphere { center: Vector::from_vec(vec![0.0, 0.0]), radius: 1.0 },
        });
        let data = plot_data(&[AssignmentSpec::Projection(c)], &part).unwrap();
        assert_eq!(data.inside, vec![vec![true, false]]);
        let text = csv(&data);
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("0,3,0,1,0"));
        let pic = svg(&data, &part);
        assert!(pic.starts_with("<svg") && pic.trim_end().ends_with("</svg>"));
        assert_eq!(pic.matches("<circle").count(), 3);
    }

    #[test]
    fn three_dimensional_slabs_are_not_plotted() {
        use crate::geometry::SlabPartition;
        let c = WeightedCloud::uniform(3, &[vec![0.0, 0.0, 0.0]]).unwrap();
        let part = Partition::Slab(SlabPartition { basis: SubspaceBasis::identity(3), kind: SlabKind::Halfspace { offset: 0.0 } });
        assert!(plot_data(&[AssignmentSpec::Projection(c)], &part).is_err());
    }
}
