//! Planar triangulations: construction from polygons, invariants and the
//! line-oriented `TALENTI-MESH 1` file format.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{domain, geometry, Error, Result};
use crate::real::{compensated_sum, CompensatedSum};
use crate::Real;

pub type Point<T> = [T; 2];

/// Conforming planar triangulation with its exterior boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh<T> {
    pub vertices: Vec<Point<T>>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary edges oriented with the domain on their left.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Sum of triangle areas.
    pub area: T,
    /// Sum of boundary edge lengths.
    pub perimeter: T,
    /// Continuum measure of the shape the mesh approximates (disks, ellipses).
    pub nominal_area: Option<T>,
    /// Continuum radius for ball meshes, from `area = pi R^2`.
    pub ball_radius: Option<T>,
    triangle_areas: Vec<T>,
    on_boundary: Vec<bool>,
}

#[inline]
fn cross<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

#[inline]
pub(crate) fn dist<T: Real>(a: Point<T>, b: Point<T>) -> T {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl<T: Real> Mesh<T> {
    /// Builds a mesh from raw parts, orienting triangles counterclockwise and
    /// deriving the boundary. When `boundary` is given it must coincide (as a
    /// set of undirected edges) with the edges used by exactly one triangle.
    pub fn from_parts(vertices: Vec<Point<T>>, mut triangles: Vec<[usize; 3]>, boundary: Option<Vec<[usize; 2]>>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(geometry("mesh has no triangles"));
        }
        let nv = vertices.len();
        let mut triangle_areas = Vec::with_capacity(triangles.len());
        for (ti, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(geometry(format!("triangle {ti} references a missing vertex")));
            }
            if vertices[tri[0]].iter().chain(&vertices[tri[1]]).chain(&vertices[tri[2]]).any(|x| !x.is_finite()) {
                return Err(geometry(format!("triangle {ti} has a non-finite vertex")));
            }
            let mut twice = cross(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if twice < T::zero() {
                tri.swap(1, 2);
                twice = -twice;
            }
            if !(twice > T::zero()) {
                return Err(geometry(format!("triangle {ti} is degenerate")));
            }
            triangle_areas.push(twice / T::of(2.0));
        }

        let mut edge_use: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                edge_use.entry(key).or_insert((0, [a, b])).0 += 1;
            }
        }
        if let Some((_, _)) = edge_use.iter().find(|(_, (c, _))| *c > 2) {
            return Err(geometry("an edge is shared by more than two triangles"));
        }
        let mut derived: Vec<[usize; 2]> = edge_use.values().filter(|(c, _)| *c == 1).map(|(_, e)| *e).collect();
        derived.sort_unstable();

        let boundary_edges = match boundary {
            None => derived,
            Some(given) => {
                let mut lhs: Vec<(usize, usize)> = given.iter().map(|e| (e[0].min(e[1]), e[0].max(e[1]))).collect();
                let mut rhs: Vec<(usize, usize)> = derived.iter().map(|e| (e[0].min(e[1]), e[0].max(e[1]))).collect();
                lhs.sort_unstable();
                rhs.sort_unstable();
                if lhs != rhs {
                    return Err(geometry("boundary edges do not match the edges used by exactly one triangle"));
                }
                // keep the caller's order, fix orientation to the triangle's
                given
                    .iter()
                    .map(|e| {
                        let key = (e[0].min(e[1]), e[0].max(e[1]));
                        edge_use[&key].1
                    })
                    .collect()
            }
        };

        let mut degree = vec![0i64; nv];
        let mut on_boundary = vec![false; nv];
        for e in &boundary_edges {
            degree[e[0]] += 1;
            degree[e[1]] -= 1;
            on_boundary[e[0]] = true;
            on_boundary[e[1]] = true;
        }
        if degree.iter().any(|&d| d != 0) {
            return Err(geometry("boundary edges do not form closed loops"));
        }

        let area = compensated_sum(triangle_areas.iter().copied());
        let perimeter = compensated_sum(boundary_edges.iter().map(|e| dist(vertices[e[0]], vertices[e[1]])));
        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            area,
            perimeter,
            nominal_area: None,
            ball_radius: None,
            triangle_areas,
            on_boundary,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn triangle_area(&self, t: usize) -> T {
        self.triangle_areas[t]
    }

    #[inline]
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    /// Measure used when matching the mesh with its symmetrized ball: the
    /// continuum measure for curved shapes, the polygon area otherwise.
    pub fn measure(&self) -> T {
        self.nominal_area.unwrap_or(self.area)
    }

    pub fn edge_length(&self, e: [usize; 2]) -> T {
        dist(self.vertices[e[0]], self.vertices[e[1]])
    }

    pub fn max_edge_length(&self) -> T {
        let mut m = T::zero();
        for tri in &self.triangles {
            for k in 0..3 {
                m = m.max(self.edge_length([tri[k], tri[(k + 1) % 3]]));
            }
        }
        m
    }

    /// `P^2 / (4 pi |Omega|) - 1`, non-negative for every planar set.
    pub fn isoperimetric_defect(&self) -> T {
        self.perimeter * self.perimeter / (T::of(4.0) * T::PI() * self.area) - T::one()
    }

    /// Serializes in the `TALENTI-MESH 1` format with 17 significant digits.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "TALENTI-MESH 1")?;
        writeln!(w, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{:.16e} {:.16e}", v[0].as_f64(), v[1].as_f64())?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "boundary {}", self.boundary_edges.len())?;
        for e in &self.boundary_edges {
            writeln!(w, "{} {}", e[0], e[1])?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("mesh text is ASCII")
    }

    /// Parses the `TALENTI-MESH 1` format.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(s))) => Ok((i, s)),
                Some((_, Err(e))) => Err(Error::Io(e)),
                None => Err(Error::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") }),
            }
        };
        let (line, header) = next("header")?;
        if header.trim() != "TALENTI-MESH 1" {
            return Err(Error::Parse { line, msg: format!("bad header {header:?}") });
        }
        fn count(line: usize, s: &str, key: &str) -> Result<usize> {
            let mut it = s.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(k), Some(n), None) if k == key => n.parse().map_err(|_| Error::Parse { line, msg: format!("bad {key} count") }),
                _ => Err(Error::Parse { line, msg: format!("expected `{key} <count>`") }),
            }
        }
        fn fields<F: std::str::FromStr>(line: usize, s: &str, n: usize) -> Result<Vec<F>> {
            let v: Vec<F> = s
                .split_whitespace()
                .map(|x| x.parse::<F>().map_err(|_| Error::Parse { line, msg: format!("bad field {x:?}") }))
                .collect::<Result<_>>()?;
            if v.len() != n {
                return Err(Error::Parse { line, msg: format!("expected {n} fields, got {}", v.len()) });
            }
            Ok(v)
        }
        let (line, s) = next("vertices")?;
        let nv = count(line, &s, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, s) = next("vertex")?;
            let xy: Vec<f64> = fields(line, &s, 2)?;
            vertices.push([T::of(xy[0]), T::of(xy[1])]);
        }
        let (line, s) = next("triangles")?;
        let nt = count(line, &s, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (line, s) = next("triangle")?;
            let ijk: Vec<usize> = fields(line, &s, 3)?;
            triangles.push([ijk[0], ijk[1], ijk[2]]);
        }
        let (line, s) = next("boundary")?;
        let nb = count(line, &s, "boundary")?;
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (line, s) = next("boundary edge")?;
            let ij: Vec<usize> = fields(line, &s, 2)?;
            boundary.push([ij[0], ij[1]]);
        }
        Mesh::from_parts(vertices, triangles, Some(boundary))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

/// Signed area of a polygon (positive when counterclockwise).
pub fn polygon_signed_area<T: Real>(poly: &[Point<T>]) -> T {
    let n = poly.len();
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc.add(a[0] * b[1] - a[1] * b[0]);
    }
    acc.value() / T::of(2.0)
}

fn segments_intersect(a: Point<f64>, b: Point<f64>, c: Point<f64>, d: Point<f64>) -> bool {
    let o1 = cross(a, b, c);
    let o2 = cross(a, b, d);
    let o3 = cross(c, d, a);
    let o4 = cross(c, d, b);
    let on = |p: Point<f64>, q: Point<f64>, r: Point<f64>| {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on(a, b, c)) || (o2 == 0.0 && on(a, b, d)) || (o3 == 0.0 && on(c, d, a)) || (o4 == 0.0 && on(c, d, b))
}

fn point_in_polygon(p: Point<f64>, poly: &[Point<f64>]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn point_segment_distance(p: Point<f64>, a: Point<f64>, b: Point<f64>) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p[0] - a[0] - s * dx).hypot(p[1] - a[1] - s * dy)
}

/// Checks simplicity and non-degeneracy, returning the polygon in
/// counterclockwise order.
fn validate_polygon(poly: &[Point<f64>]) -> Result<Vec<Point<f64>>> {
    if poly.len() < 3 {
        return Err(geometry("polygon needs at least three vertices"));
    }
    if poly.iter().flatten().any(|x| !x.is_finite()) {
        return Err(geometry("polygon has non-finite coordinates"));
    }
    let n = poly.len();
    for i in 0..n {
        if poly[i] == poly[(i + 1) % n] {
            return Err(geometry(format!("polygon repeats vertex {i}")));
        }
    }
    let area = polygon_signed_area(poly);
    let scale = poly.iter().map(|p| p[0].abs().max(p[1].abs())).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if area.abs() <= 1e-12 * scale * scale {
        return Err(geometry("polygon is degenerate (zero area)"));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return Err(geometry(format!("polygon edges {i} and {j} intersect")));
            }
        }
    }
    // adjacent edges folding back onto each other
    for i in 0..n {
        let (a, b, c) = (poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
        if cross(a, b, c) == 0.0 && (b[0] - a[0]) * (c[0] - b[0]) + (b[1] - a[1]) * (c[1] - b[1]) < 0.0 {
            return Err(geometry(format!("polygon folds back at vertex {i}")));
        }
    }
    let mut out = poly.to_vec();
    if area < 0.0 {
        out.reverse();
    }
    Ok(out)
}

/// Triangulates a simple polygon with edges of length about `h`.
///
/// Boundary edges are split uniformly to length at most `h`, the interior is
/// seeded with a hexagonal lattice of spacing `h`, and a constrained Delaunay
/// triangulation is refined by midpoint insertion until every edge is at most
/// `1.5 h`. Orientation of the input is normalized to counterclockwise.
pub fn mesh_from_polygon<T: Real>(polygon: &[Point<T>], h: T) -> Result<Mesh<T>> {
    let h = h.as_f64();
    if !(h > 0.0) || !h.is_finite() {
        return Err(domain("target edge length must be positive"));
    }
    let poly64: Vec<Point<f64>> = polygon.iter().map(|p| [p[0].as_f64(), p[1].as_f64()]).collect();
    let poly = validate_polygon(&poly64)?;

    let n = poly.len();
    let mut boundary: Vec<Point<f64>> = Vec::new();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let pieces = (dist(a, b) / h).ceil().max(1.0) as usize;
        for k in 0..pieces {
            let s = k as f64 / pieces as f64;
            boundary.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    let boundary_segments: Vec<(Point<f64>, Point<f64>)> =
        (0..boundary.len()).map(|i| (boundary[i], boundary[(i + 1) % boundary.len()])).collect();

    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &poly {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let clearance = 0.5 * h;
    let rows = ((ymax - ymin) / dy).ceil() as i64 + 1;
    let cols = ((xmax - xmin) / h).ceil() as i64 + 2;
    let cx = 0.5 * (xmin + xmax);
    let cy = 0.5 * (ymin + ymax);
    let mut interior: Vec<Point<f64>> = Vec::new();
    for r in -rows..=rows {
        let y = cy + r as f64 * dy;
        if y <= ymin || y >= ymax {
            continue;
        }
        let shift = if r.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for c in -cols..=cols {
            let x = cx + c as f64 * h + shift;
            if x <= xmin || x >= xmax {
                continue;
            }
            let p = [x, y];
            if !point_in_polygon(p, &poly) {
                continue;
            }
            if boundary_segments.iter().any(|(a, b)| point_segment_distance(p, *a, *b) < clearance) {
                continue;
            }
            interior.push(p);
        }
    }

    // The boundary chain is kept in order so that split boundary edges stay
    // constraints and inside tests use the discrete boundary itself.
    let limit = 1.5 * h;
    for _round in 0..64 {
        let nb = boundary.len();
        let points: Vec<Point2<f64>> = boundary.iter().chain(&interior).map(|p| Point2::new(p[0], p[1])).collect();
        let constraint_edges: Vec<[usize; 2]> = (0..nb).map(|i| [i, (i + 1) % nb]).collect();
        let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(points.clone(), constraint_edges)
            .map_err(|e| geometry(format!("triangulation failed: {e:?}")))?;
        if cdt.num_vertices() != points.len() {
            return Err(geometry("duplicate points produced during meshing"));
        }
        let mut triangles = Vec::new();
        for face in cdt.inner_faces() {
            let vs = face.vertices();
            let idx = [vs[0].fix().index(), vs[1].fix().index(), vs[2].fix().index()];
            let c = [
                (points[idx[0]].x + points[idx[1]].x + points[idx[2]].x) / 3.0,
                (points[idx[0]].y + points[idx[1]].y + points[idx[2]].y) / 3.0,
            ];
            let [p0, p1, p2] = idx.map(|i| [points[i].x, points[i].y]);
            // nearly collinear boundary points can leave flat hull faces
            if cross(p0, p1, p2).abs() <= 1e-10 * h * h {
                continue;
            }
            if point_in_polygon(c, &boundary) {
                triangles.push(idx);
            }
        }
        let mut long_edges: Vec<(usize, usize)> = Vec::new();
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]));
                let pa = [points[a].x, points[a].y];
                let pb = [points[b].x, points[b].y];
                if dist(pa, pb) > limit {
                    long_edges.push((a, b));
                }
            }
        }
        long_edges.sort_unstable();
        long_edges.dedup();
        let existing: HashSet<[u64; 2]> = points.iter().map(|p| [p.x.to_bits(), p.y.to_bits()]).collect();
        let mut split_after = vec![false; nb];
        let mut added = false;
        for (a, b) in long_edges {
            let mid = [0.5 * (points[a].x + points[b].x), 0.5 * (points[a].y + points[b].y)];
            if existing.contains(&[mid[0].to_bits(), mid[1].to_bits()]) {
                continue;
            }
            added = true;
            if b < nb && (b == a + 1 || (a == 0 && b == nb - 1)) {
                split_after[if b == a + 1 { a } else { b }] = true;
            } else {
                interior.push(mid);
            }
        }
        if !added {
            return assemble_mesh(&points, triangles);
        }
        let mut chain = Vec::with_capacity(2 * nb);
        for i in 0..nb {
            chain.push(boundary[i]);
            if split_after[i] {
                let (a, b) = (boundary[i], boundary[(i + 1) % nb]);
                chain.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
        }
        boundary = chain;
    }
    Err(geometry("edge-length refinement did not terminate"))
}

fn assemble_mesh<T: Real>(points: &[Point2<f64>], triangles: Vec<[usize; 3]>) -> Result<Mesh<T>> {
    let mut remap = vec![usize::MAX; points.len()];
    let mut vertices = Vec::new();
    let mut tris = Vec::with_capacity(triangles.len());
    for t in triangles {
        let mut out = [0; 3];
        for k in 0..3 {
            if remap[t[k]] == usize::MAX {
                remap[t[k]] = vertices.len();
                vertices.push([T::of(points[t[k]].x), T::of(points[t[k]].y)]);
            }
            out[k] = remap[t[k]];
        }
        tris.push(out);
    }
    Mesh::from_parts(vertices, tris, None)
}

/// Regular polygon inscribed in the circle of radius `r` about the origin.
pub fn regular_polygon<T: Real>(sides: usize, r: T) -> Vec<Point<T>> {
    (0..sides)
        .map(|k| {
            let th = T::of(2.0) * T::PI() * T::of_usize(k) / T::of_usize(sides);
            [r * th.cos(), r * th.sin()]
        })
        .collect()
}

/// Polygonal approximation of the disk of measure `area` about the origin.
/// The stored `ball_radius` is the continuum radius `sqrt(area / pi)`.
pub fn ball_mesh<T: Real>(area: T, h: T) -> Result<Mesh<T>> {
    if !(area > T::zero()) || !area.is_finite() {
        return Err(domain(format!("ball area must be positive (got {area})")));
    }
    if !(h > T::zero()) {
        return Err(domain("target edge length must be positive"));
    }
    let radius = (area / T::PI()).sqrt();
    let sides = (T::of(2.0) * T::PI() * radius / h).ceil().to_usize().unwrap_or(8).max(8);
    let mut mesh = mesh_from_polygon(&regular_polygon(sides, radius), h)?;
    mesh.nominal_area = Some(area);
    mesh.ball_radius = Some(radius);
    Ok(mesh)
}

/// Ellipse with semi-axes `a`, `b`, boundary vertices equally spaced in arc length.
pub fn ellipse_polygon<T: Real>(a: T, b: T, h: T) -> Vec<Point<T>> {
    let (a64, b64, h64) = (a.as_f64(), b.as_f64(), h.as_f64());
    let samples = 4096;
    let mut arc = vec![0.0; samples + 1];
    for k in 0..samples {
        let t0 = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let t1 = 2.0 * std::f64::consts::PI * (k + 1) as f64 / samples as f64;
        let tm = 0.5 * (t0 + t1);
        arc[k + 1] = arc[k] + (t1 - t0) * (a64 * tm.sin()).hypot(b64 * tm.cos());
    }
    let total = arc[samples];
    let sides = ((total / h64).ceil() as usize).max(8);
    let mut out = Vec::with_capacity(sides);
    let mut j = 0;
    for k in 0..sides {
        let target = total * k as f64 / sides as f64;
        while arc[j + 1] < target {
            j += 1;
        }
        let frac = (target - arc[j]) / (arc[j + 1] - arc[j]);
        let th = 2.0 * std::f64::consts::PI * (j as f64 + frac) / samples as f64;
        out.push([T::of(a64 * th.cos()), T::of(b64 * th.sin())]);
    }
    out
}

/// Mesh of the ellipse `x^2/a^2 + y^2/b^2 < 1`, recording `pi a b` as its nominal area.
pub fn ellipse_mesh<T: Real>(a: T, b: T, h: T) -> Result<Mesh<T>> {
    if !(a > T::zero() && b > T::zero()) {
        return Err(domain("ellipse semi-axes must be positive"));
    }
    let mut mesh = mesh_from_polygon(&ellipse_polygon(a, b, h), h)?;
    mesh.nominal_area = Some(T::PI() * a * b);
    if a == b {
        mesh.ball_radius = Some(a);
    }
    Ok(mesh)
}
