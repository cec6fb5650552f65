//! Right-hand sides: the constant one, radial profiles and stored mesh fields.

use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use talenti_core::fem::Sidecar;
use talenti_core::mesh::Point;
use talenti_core::{Mesh64, MeshField64, RadialProfile64};

use crate::scenario::Datum;
use crate::CliError;

/// A datum loaded once and evaluated on any scenario mesh.
#[derive(Clone, Debug)]
pub enum DatumSource {
    One,
    Radial(RadialProfile64),
    Field(MeshField64),
}

fn open(path: &Path) -> Result<BufReader<std::fs::File>, CliError> {
    std::fs::File::open(path).map(BufReader::new).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Reads vertex values from a `vertex,x,y,value` table.
fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("vertex") {
            continue;
        }
        let value = line.rsplit(',').next().and_then(|v| v.trim().parse::<f64>().ok());
        out.push(value.ok_or_else(|| CliError::Config(format!("{}:{}: bad value row", path.display(), i + 1)))?);
    }
    Ok(out)
}

impl DatumSource {
    pub fn load(datum: &Datum) -> Result<Self, CliError> {
        match datum {
            Datum::One => Ok(DatumSource::One),
            Datum::RadialDecreasing { path } => Ok(DatumSource::Radial(RadialProfile64::read_csv(open(path)?, 2)?)),
            Datum::MeshField { path } => {
                let sidecar: Sidecar = serde_json::from_reader(open(path)?).map_err(talenti_core::Error::from)?;
                let dir = path.parent().unwrap_or(Path::new("."));
                let mesh = Mesh64::read_from(open(&dir.join(&sidecar.mesh))?)?;
                let values = read_values(&dir.join(&sidecar.values))?;
                Ok(DatumSource::Field(MeshField64::new(Arc::new(mesh), values)?))
            }
        }
    }

    /// The datum on `mesh`, checked to be positive.
    pub fn on(&self, mesh: &Arc<Mesh64>) -> Result<MeshField64, CliError> {
        let f = match self {
            DatumSource::One => MeshField64::constant(mesh.clone(), 1.0)?,
            DatumSource::Radial(profile) => {
                let r_max = profile.radius();
                MeshField64::from_fn(mesh.clone(), |x| profile.eval(x[0].hypot(x[1]).min(r_max)))?
            }
            DatumSource::Field(src) => {
                let locator = Locator::new(src.mesh());
                MeshField64::from_fn(mesh.clone(), |x| locator.interpolate(src, x))?
            }
        };
        if !(f.min() > 0.0) {
            return Err(CliError::Config(format!("the datum must be positive (min {})", f.min())));
        }
        Ok(f)
    }
}

/// Uniform bucket grid over the triangles of a mesh.
struct Locator<'a> {
    mesh: &'a Mesh64,
    origin: Point<f64>,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> Locator<'a> {
    fn new(mesh: &'a Mesh64) -> Self {
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for v in &mesh.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let side = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let per_side = ((mesh.num_triangles() as f64).sqrt().ceil() as usize).max(1);
        let cell = side / per_side as f64;
        let nx = ((hi[0] - lo[0]) / cell).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let pts = tri.map(|i| mesh.vertices[i]);
            let ix = |x: f64| (((x - lo[0]) / cell).floor() as usize).min(nx - 1);
            let iy = |y: f64| (((y - lo[1]) / cell).floor() as usize).min(ny - 1);
            let (x0, x1) = (ix(pts.iter().map(|p| p[0]).fold(f64::MAX, f64::min)), ix(pts.iter().map(|p| p[0]).fold(f64::MIN, f64::max)));
            let (y0, y1) = (iy(pts.iter().map(|p| p[1]).fold(f64::MAX, f64::min)), iy(pts.iter().map(|p| p[1]).fold(f64::MIN, f64::max)));
            for j in y0..=y1 {
                for i in x0..=x1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self { mesh, origin: lo, cell, nx, ny, buckets }
    }

    fn barycentric(&self, t: usize, x: Point<f64>) -> [f64; 3] {
        let [a, b, c] = self.mesh.triangles[t].map(|i| self.mesh.vertices[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// P1 value at `x`; outside the mesh, the value at the nearest
    /// barycentric projection onto the closest triangle of the bucket.
    fn interpolate(&self, field: &MeshField64, x: Point<f64>) -> f64 {
        let clamp = |v: f64, n: usize| (v.max(0.0).floor() as usize).min(n - 1);
        let i = clamp((x[0] - self.origin[0]) / self.cell, self.nx);
        let j = clamp((x[1] - self.origin[1]) / self.cell, self.ny);
        let mut best = (f64::MAX, 0.0);
        let mut radius = 0usize;
        while best.0 > 0.0 && radius <= self.nx.max(self.ny) {
            for jj in j.saturating_sub(radius)..=(j + radius).min(self.ny - 1) {
                for ii in i.saturating_sub(radius)..=(i + radius).min(self.nx - 1) {
                    for &t in &self.buckets[jj * self.nx + ii] {
                        let l = self.barycentric(t, x);
                        let outside = l.iter().map(|&v| (-v).max(0.0)).sum::<f64>();
                        if outside < best.0 {
                            let c = l.map(|v| v.max(0.0));
                            let s = c[0] + c[1] + c[2];
                            best = (outside, field.eval_barycentric(t, c.map(|v| v / s)));
                        }
                    }
                }
            }
            if best.0 < f64::MAX {
                break;
            }
            radius += 1;
        }
        best.1
    }
}
