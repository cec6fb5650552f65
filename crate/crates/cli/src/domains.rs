//! Domain catalog: every shape is scaled to the requested measure.

use std::path::Path;

use talenti_core::mesh::{polygon_signed_area, Point};
use talenti_core::{ball_mesh, ellipse_mesh, mesh_from_polygon, Mesh64};

use crate::scenario::Domain;
use crate::CliError;

/// Reads a vertex list with one `x y` or `x,y` pair per line; blank lines and
/// `#` comments are skipped.
pub fn read_polygon(path: &Path) -> Result<Vec<Point<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|x| !x.is_empty())
            .map(|x| x.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("{}:{}: expected two numbers", path.display(), i + 1)))?;
        match nums.as_slice() {
            [x, y] => out.push([*x, *y]),
            _ => return Err(CliError::Config(format!("{}:{}: expected two numbers", path.display(), i + 1))),
        }
    }
    Ok(out)
}

/// Scales `poly` about its area centroid to measure `area`, centring it at the origin.
pub fn normalize_polygon(poly: &[Point<f64>], area: f64) -> Result<Vec<Point<f64>>, CliError> {
    let signed = polygon_signed_area(poly);
    if !(signed.abs() > 0.0) || poly.len() < 3 {
        return Err(CliError::Config("polygon is degenerate".into()));
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let cross = a[0] * b[1] - b[0] * a[1];
        cx += (a[0] + b[0]) * cross;
        cy += (a[1] + b[1]) * cross;
    }
    cx /= 6.0 * signed;
    cy /= 6.0 * signed;
    let s = (area / signed.abs()).sqrt();
    Ok(poly.iter().map(|p| [s * (p[0] - cx), s * (p[1] - cy)]).collect())
}

fn rectangle(a: f64, b: f64) -> Vec<Point<f64>> {
    vec![[0.0, 0.0], [a, 0.0], [a, b], [0.0, b]]
}

/// Mesh of `domain` with measure `area` and target edge length `h`.
pub fn build_mesh(domain: &Domain, area: f64, h: f64) -> Result<Mesh64, CliError> {
    let polygon = |poly: Vec<Point<f64>>| -> Result<Mesh64, CliError> { Ok(mesh_from_polygon(&normalize_polygon(&poly, area)?, h)?) };
    match domain {
        Domain::Disk => Ok(ball_mesh(area, h)?),
        Domain::Ellipse { a, b } => {
            let s = (area / (std::f64::consts::PI * a * b)).sqrt();
            Ok(ellipse_mesh(s * a, s * b, h)?)
        }
        Domain::Square => polygon(rectangle(1.0, 1.0)),
        Domain::Rectangle { a, b } => polygon(rectangle(*a, *b)),
        Domain::Lshape => polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]),
        Domain::Polygon { path } => polygon(read_polygon(path)?),
    }
}
