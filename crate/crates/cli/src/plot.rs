//! Boundary curves of a solved set projected on two coordinates, in primal
//! and polar space, with CSV and SVG writers.

use std::f64::consts::PI;
use std::fmt::Write as _;

use hybrid_cis::model::BoxSet;
use hybrid_cis::verify::SupportFunctionModel;
use nalgebra::DVector;

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub id: String,
    /// Each segment is drawn as one polyline; breaks separate segments.
    pub segments: Vec<Vec<CurvePoint>>,
    pub closed: bool,
}

impl Curve {
    pub fn points(&self) -> impl Iterator<Item = &CurvePoint> {
        self.segments.iter().flatten()
    }

    fn polygon(id: &str, pts: &[(f64, f64)]) -> Curve {
        Curve {
            id: id.into(),
            segments: vec![pts
                .iter()
                .map(|&(x, y)| CurvePoint { theta: y.atan2(x), x, y })
                .collect()],
            closed: true,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PlotData {
    pub curves: Vec<Curve>,
    pub warnings: Vec<String>,
}

fn lift(n: usize, coords: &[usize], theta: f64) -> DVector<f64> {
    let mut y = DVector::zeros(n);
    y[coords[0]] = theta.cos();
    y[coords[1]] = theta.sin();
    y
}

/// Angles in the plot plane where `y = lift(theta)` crosses a cone facet.
fn boundary_angles(model: &SupportFunctionModel, coords: &[usize]) -> Vec<f64> {
    let SupportFunctionModel::Piecewise { partition, .. } = model else {
        return Vec::new();
    };
    let n = model.dim();
    let mut out = Vec::new();
    for cone in &partition.cones {
        for row in cone.halfspaces.row_iter() {
            let (a, b) = (row[coords[0]], row[coords[1]]);
            if a.hypot(b) < 1e-12 {
                continue;
            }
            let base = (-a).atan2(b);
            for theta in [base, base + PI] {
                let theta = theta.rem_euclid(2.0 * PI) + 0.0;
                if partition.containing(&lift(n, coords, theta), 1e-9).len() >= 2 {
                    out.push(theta);
                }
            }
        }
    }
    out
}

/// Direction grid of `count` uniform angles in `[0, 2pi)`, merged with exact
/// cone-boundary angles for piecewise models.
pub fn direction_grid(model: &SupportFunctionModel, coords: &[usize], count: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..count).map(|k| 2.0 * PI * k as f64 / count as f64).collect();
    grid.extend(boundary_angles(model, coords));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    grid
}

/// Primal boundary (exposed points) and polar boundary (`y / h(y)`).
pub fn boundary_curves(model: &SupportFunctionModel, coords: &[usize], count: usize) -> PlotData {
    let n = model.dim();
    let mut data = PlotData::default();
    let mut primal = vec![Vec::new()];
    let mut polar = vec![Vec::new()];
    let mut broken = 0;
    for theta in direction_grid(model, coords, count) {
        let y = lift(n, coords, theta);
        let h = model.support_value(&y).ok().filter(|h| *h > 1e-12);
        let face = h.and_then(|_| model.exposed_face_gradients(&y).ok());
        let (Some(h), Some(mut face)) = (h, face) else {
            broken += 1;
            if !primal.last().is_some_and(Vec::is_empty) {
                primal.push(Vec::new());
                polar.push(Vec::new());
            }
            continue;
        };
        // Walk a face counterclockwise: sort its points along the tangent.
        let (tx, ty) = (-theta.sin(), theta.cos());
        face.sort_by(|a, b| {
            let ka = a[coords[0]] * tx + a[coords[1]] * ty;
            let kb = b[coords[0]] * tx + b[coords[1]] * ty;
            ka.total_cmp(&kb)
        });
        for g in face {
            primal.last_mut().unwrap().push(CurvePoint { theta, x: g[coords[0]], y: g[coords[1]] });
        }
        polar.last_mut().unwrap().push(CurvePoint { theta, x: theta.cos() / h, y: theta.sin() / h });
    }
    if broken > 0 {
        data.warnings.push(format!(
            "support function vanishes or is undefined along {broken} sampled directions; curves are broken there"
        ));
    }
    let closed = broken == 0;
    primal.retain(|s| !s.is_empty());
    polar.retain(|s| !s.is_empty());
    data.curves.push(Curve { id: "primal".into(), segments: primal, closed });
    data.curves.push(Curve { id: "polar".into(), segments: polar, closed });
    data
}

pub fn box_overlay(safe: &BoxSet, coords: &[usize]) -> Curve {
    let (i, j) = (coords[0], coords[1]);
    let (l, u) = (&safe.lower, &safe.upper);
    Curve::polygon("safe-box", &[(u[i], l[j]), (u[i], u[j]), (l[i], u[j]), (l[i], l[j])])
}

pub fn polygon_overlay(id: &str, vertices: &[Vec<f64>], scale: f64) -> Curve {
    let pts: Vec<(f64, f64)> = vertices.iter().map(|v| (scale * v[0], scale * v[1])).collect();
    Curve::polygon(id, &pts)
}

pub fn to_csv(data: &PlotData) -> String {
    let mut s = String::from("curve_id,theta,x,y\n");
    for c in &data.curves {
        for p in c.points() {
            let _ = writeln!(s, "{},{},{},{}", c.id, p.theta, p.x, p.y);
        }
    }
    s
}

fn style(id: &str) -> (&'static str, &'static str) {
    match id {
        "primal" | "polar" => ("#1f4e9c", "#9db8e8"),
        "safe-box" => ("#2e7d32", "none"),
        "gamma-d" => ("#c62828", "none"),
        "reference" => ("#c9a200", "none"),
        _ => ("#555555", "none"),
    }
}

/// Two panels: the primal curve with overlays on the left, the polar curve
/// on the right.
pub fn to_svg(data: &PlotData, title: &str) -> String {
    const PANEL: f64 = 360.0;
    const MARGIN: f64 = 30.0;
    let panels: [(&str, Vec<&Curve>); 2] = [
        ("primal", data.curves.iter().filter(|c| c.id != "polar").collect()),
        ("polar", data.curves.iter().filter(|c| c.id == "polar").collect()),
    ];
    let mut s = String::new();
    let width = 2.0 * PANEL + 3.0 * MARGIN;
    let height = PANEL + 2.0 * MARGIN;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="18" font-family="sans-serif" font-size="13">{title}</text>"#);
    for (k, (name, curves)) in panels.iter().enumerate() {
        let extent = curves
            .iter()
            .flat_map(|c| c.points())
            .map(|p| p.x.abs().max(p.y.abs()))
            .fold(1e-9, f64::max)
            * 1.1;
        let x0 = MARGIN + k as f64 * (PANEL + MARGIN);
        let map = |x: f64, y: f64| {
            (x0 + (x / extent + 1.0) * PANEL / 2.0, MARGIN + (1.0 - y / extent) * PANEL / 2.0)
        };
        let _ = writeln!(
            s,
            r##"<g><rect x="{x0}" y="{MARGIN}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#cccccc"/><text x="{}" y="{}" font-family="sans-serif" font-size="11">{name}</text>"##,
            x0 + 4.0,
            MARGIN + 14.0
        );
        let (ax, ay) = map(0.0, 0.0);
        let _ = writeln!(
            s,
            r##"<path d="M{x0:.2},{ay:.2}H{:.2}M{ax:.2},{MARGIN:.2}V{:.2}" stroke="#eeeeee"/>"##,
            x0 + PANEL,
            MARGIN + PANEL
        );
        for c in curves {
            let (stroke, fill) = style(&c.id);
            let mut d = String::new();
            for seg in &c.segments {
                for (i, p) in seg.iter().enumerate() {
                    let (px, py) = map(p.x, p.y);
                    let _ = write!(d, "{}{px:.2},{py:.2}", if i == 0 { "M" } else { "L" });
                }
                if c.closed {
                    d.push('Z');
                }
            }
            let opacity = if fill == "none" { 1.0 } else { 0.5 };
            let _ = writeln!(
                s,
                r#"<path id="{}-{name}" d="{d}" stroke="{stroke}" fill="{fill}" fill-opacity="{opacity}" stroke-width="1.5"/>"#,
                c.id
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
