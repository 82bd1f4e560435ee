//! Closed triangulated surfaces with a background metric (edge lengths) and a
//! per-vertex conformal factor.
//!
//! Generators: icosphere of radius 1/2, flat torus grid, and seeded bumpy
//! conformal factors. Readers and writers for OFF, OBJ and the conformal
//! factor sidecar CSV.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::ProjectivePoint;

/// Triangles with area below this fraction of the mean are rejected.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct TriangulatedSurface {
    positions: Option<Vec<[f64; 3]>>,
    triangles: Vec<[usize; 3]>,
    /// Per triangle, the background length of the edge opposite local vertex `i`.
    edge_lengths: Vec<[f64; 3]>,
    conformal_factor: Vec<f64>,
    genus: usize,
    cp1_param: Option<Vec<ProjectivePoint>>,
    vertex_count: usize,
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Heron's formula, in the numerically stable ordering.
pub fn heron_area(l: [f64; 3]) -> f64 {
    let mut s = l;
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let (a, b, c) = (s[0], s[1], s[2]);
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

impl TriangulatedSurface {
    /// Embedded mesh; the genus is inferred from the Euler characteristic.
    pub fn from_positions(positions: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let edge_lengths = triangles
            .iter()
            .map(|t| {
                let p = |i: usize| &positions[t[i]];
                [dist3(p(1), p(2)), dist3(p(2), p(0)), dist3(p(0), p(1))]
            })
            .collect::<Vec<_>>();
        if let Some(t) = triangles.iter().flatten().find(|&&i| i >= positions.len()) {
            return Err(Error::InvalidMesh(format!("vertex index {t} out of range")));
        }
        let n = positions.len();
        Self::build(Some(positions), triangles, edge_lengths, n, None)
    }

    /// Abstract mesh given by per-triangle edge lengths.
    pub fn from_edge_lengths(
        vertex_count: usize,
        triangles: Vec<[usize; 3]>,
        edge_lengths: Vec<[f64; 3]>,
    ) -> Result<Self> {
        if edge_lengths.len() != triangles.len() {
            return Err(Error::InvalidMesh("one edge-length triple per triangle required".into()));
        }
        Self::build(None, triangles, edge_lengths, vertex_count, None)
    }

    fn build(
        positions: Option<Vec<[f64; 3]>>,
        triangles: Vec<[usize; 3]>,
        edge_lengths: Vec<[f64; 3]>,
        vertex_count: usize,
        genus: Option<usize>,
    ) -> Result<Self> {
        let euler = validate_topology(vertex_count, &triangles)?;
        if euler > 2 || euler % 2 != 0 {
            return Err(Error::InvalidMesh(format!("Euler characteristic {euler} is not that of a closed orientable surface")));
        }
        let inferred = ((2 - euler) / 2) as usize;
        if let Some(g) = genus {
            if g != inferred {
                return Err(Error::InvalidMesh(format!(
                    "genus {g} does not match Euler characteristic {euler}"
                )));
            }
        }
        let mesh = Self {
            positions,
            triangles,
            edge_lengths,
            conformal_factor: vec![1.0; vertex_count],
            genus: inferred,
            cp1_param: None,
            vertex_count,
        };
        mesh.check_areas()?;
        Ok(mesh)
    }

    /// Checks the genus metadata against the Euler characteristic.
    pub fn with_genus(self, genus: usize) -> Result<Self> {
        if genus != self.genus {
            return Err(Error::InvalidMesh(format!(
                "genus {genus} does not match Euler characteristic {}",
                self.euler_characteristic()
            )));
        }
        Ok(self)
    }

    fn check_areas(&self) -> Result<()> {
        let areas: Vec<f64> = self.edge_lengths.iter().map(|&l| heron_area(l)).collect();
        let mean = areas.iter().sum::<f64>() / areas.len() as f64;
        for (index, &area) in areas.iter().enumerate() {
            if !(area > DEGENERATE_AREA_RATIO * mean) || !area.is_finite() {
                return Err(Error::DegenerateTriangle { index, area });
            }
        }
        Ok(())
    }

    pub fn with_conformal_factor(mut self, factor: Vec<f64>) -> Result<Self> {
        if factor.len() != self.vertex_count {
            return Err(Error::InvalidMesh(format!(
                "{} conformal factors for {} vertices",
                factor.len(),
                self.vertex_count
            )));
        }
        if let Some(bad) = factor.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidMesh(format!("conformal factor {bad} is not positive")));
        }
        self.conformal_factor = factor;
        Ok(self)
    }

    /// Multiplies every conformal factor by `s > 0`.
    pub fn scale_conformal(mut self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::OutOfRange(format!("conformal scale must be positive, got {s}")));
        }
        for f in &mut self.conformal_factor {
            *f *= s;
        }
        Ok(self)
    }

    pub fn with_cp1_param(mut self, param: Vec<ProjectivePoint>) -> Result<Self> {
        if param.len() != self.vertex_count || param.iter().any(|p| p.dim() != 1) {
            return Err(Error::InvalidMesh("need one CP^1 point per vertex".into()));
        }
        self.cp1_param = Some(param);
        Ok(self)
    }

    /// Identifies a star-shaped genus-0 mesh with `CP^1` by radial projection
    /// about the vertex centroid followed by the inverse stereographic map.
    pub fn with_sphere_parametrization(self) -> Result<Self> {
        if self.genus != 0 {
            return Err(Error::InvalidMesh("sphere parametrization needs genus 0".into()));
        }
        let pos = self
            .positions
            .as_ref()
            .ok_or_else(|| Error::InvalidMesh("sphere parametrization needs positions".into()))?;
        let n = pos.len() as f64;
        let c = pos.iter().fold([0.0; 3], |a, p| [a[0] + p[0] / n, a[1] + p[1] / n, a[2] + p[2] / n]);
        let param = pos
            .iter()
            .map(|p| {
                let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if r == 0.0 {
                    return Err(Error::InvalidMesh("vertex at centroid".into()));
                }
                Ok(sphere_to_cp1([d[0] / r, d[1] / r, d[2] / r]))
            })
            .collect::<Result<Vec<_>>>()?;
        self.with_cp1_param(param)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edge_lengths(&self) -> &[[f64; 3]] {
        &self.edge_lengths
    }

    pub fn positions(&self) -> Option<&[[f64; 3]]> {
        self.positions.as_deref()
    }

    pub fn conformal_factor(&self) -> &[f64] {
        &self.conformal_factor
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn cp1_param(&self) -> Option<&[ProjectivePoint]> {
        self.cp1_param.as_deref()
    }

    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64
    }

    /// Background (unscaled) triangle areas.
    pub fn background_areas(&self) -> Vec<f64> {
        self.edge_lengths.iter().map(|&l| heron_area(l)).collect()
    }

    /// Triangle factor: mean of the three vertex conformal factors.
    pub fn triangle_factor(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        (self.conformal_factor[tri[0]] + self.conformal_factor[tri[1]] + self.conformal_factor[tri[2]]) / 3.0
    }

    /// Conformally scaled triangle areas.
    pub fn scaled_areas(&self) -> Vec<f64> {
        self.background_areas()
            .iter()
            .enumerate()
            .map(|(t, a)| a * self.triangle_factor(t))
            .collect()
    }

    /// `Vol_g`.
    pub fn area(&self) -> f64 {
        self.scaled_areas().iter().sum()
    }

    /// One third of the incident scaled triangle areas.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.vertex_count];
        for (tri, a) in self.triangles.iter().zip(self.scaled_areas()) {
            for &v in tri {
                out[v] += a / 3.0;
            }
        }
        out
    }

    /// Undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn write_off(&self, path: &Path) -> Result<()> {
        let pos = self
            .positions
            .as_ref()
            .ok_or_else(|| Error::InvalidMesh("abstract mesh has no positions".into()))?;
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(f, "OFF")?;
        writeln!(f, "{} {} 0", pos.len(), self.triangles.len())?;
        for p in pos {
            writeln!(f, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2])?;
        }
        for t in &self.triangles {
            writeln!(f, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn write_conformal_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(f, "vertex,factor")?;
        for (i, c) in self.conformal_factor.iter().enumerate() {
            writeln!(f, "{i},{c:.17e}")?;
        }
        Ok(())
    }
}

/// Manifold, orientation and connectivity checks. Returns `V - E + F`.
fn validate_topology(vertex_count: usize, triangles: &[[usize; 3]]) -> Result<i64> {
    if triangles.is_empty() {
        return Err(Error::InvalidMesh("no triangles".into()));
    }
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
    for (ti, t) in triangles.iter().enumerate() {
        if t.iter().any(|&v| v >= vertex_count) {
            return Err(Error::InvalidMesh(format!("triangle {ti} references a missing vertex")));
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(Error::InvalidMesh(format!("triangle {ti} repeats a vertex")));
        }
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            if directed.insert((a, b), ti).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a}, {b}) is used twice with the same orientation"
                )));
            }
        }
    }
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            return Err(Error::InvalidMesh(format!("edge ({a}, {b}) is a boundary edge")));
        }
    }
    let edges = directed.len() / 2;

    // Connectivity over vertices.
    let mut adj = vec![Vec::new(); vertex_count];
    for &(a, b) in directed.keys() {
        adj[a].push(b);
    }
    let mut seen = vec![false; vertex_count];
    let mut queue = VecDeque::from([triangles[0][0]]);
    seen[triangles[0][0]] = true;
    let mut reached = 1;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                reached += 1;
                queue.push_back(u);
            }
        }
    }
    if reached != vertex_count {
        return Err(Error::InvalidMesh(format!(
            "mesh is not connected or has unused vertices ({reached} of {vertex_count} reached)"
        )));
    }
    Ok(vertex_count as i64 - edges as i64 + triangles.len() as i64)
}

/// Inverse stereographic identification of the unit sphere with `CP^1`,
/// chosen so that `ZZ*/|Z|² = (I + x·σ)/2`. This is an isometry from the
/// radius-1/2 sphere onto `CP^1` with the Fubini-Study metric.
pub fn sphere_to_cp1(x: [f64; 3]) -> ProjectivePoint {
    let coords = if x[2] >= 0.0 {
        vec![Complex64::new(1.0 + x[2], 0.0), Complex64::new(x[0], x[1])]
    } else {
        vec![Complex64::new(x[0], -x[1]), Complex64::new(1.0 - x[2], 0.0)]
    };
    ProjectivePoint::new(coords).expect("nonzero by construction")
}

/// Inverse of [`sphere_to_cp1`]: the unit vector `x` with `P = (I + x·σ)/2`.
pub fn cp1_to_sphere(p: &ProjectivePoint) -> [f64; 3] {
    let u = p.unit();
    let off = u[1] * u[0].conj();
    [2.0 * off.re, 2.0 * off.im, u[0].norm_sqr() - u[1].norm_sqr()]
}

/// Icosphere with `10·4^level + 2` vertices on the sphere of radius `radius`
/// centred at the origin, outward oriented, with its `CP^1` parametrization.
pub fn icosphere(level: u32, radius: f64) -> Result<TriangulatedSurface> {
    if level > 8 {
        return Err(Error::OutOfRange(format!("icosphere level {level} too large")));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let normalize = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    for v in &mut verts {
        *v = normalize(*v);
    }
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        for t in &tris {
            let ab = midpoint(t[0], t[1], &mut verts);
            let bc = midpoint(t[1], t[2], &mut verts);
            let ca = midpoint(t[2], t[0], &mut verts);
            next.extend_from_slice(&[[t[0], ab, ca], [t[1], bc, ab], [t[2], ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let param = verts.iter().map(|&x| sphere_to_cp1(x)).collect();
    let positions = verts.iter().map(|v| [v[0] * radius, v[1] * radius, v[2] * radius]).collect();
    TriangulatedSurface::from_positions(positions, tris)?
        .with_genus(0)?
        .with_cp1_param(param)
}

/// Flat torus `R²/(lx Z × ly Z)` on an `nx × ny` grid, each cell split along
/// the same diagonal.
pub fn flat_torus(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<TriangulatedSurface> {
    if nx < 3 || ny < 3 {
        return Err(Error::OutOfRange("torus grid needs at least 3 cells per side".into()));
    }
    let (dx, dy) = (lx / nx as f64, ly / ny as f64);
    let diag = (dx * dx + dy * dy).sqrt();
    let id = |i: usize, j: usize| (i % nx) + (j % ny) * nx;
    let mut tris = Vec::with_capacity(2 * nx * ny);
    let mut lens = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            tris.push([a, b, c]);
            lens.push([dy, diag, dx]);
            tris.push([a, c, d]);
            lens.push([dx, dy, diag]);
        }
    }
    TriangulatedSurface::from_edge_lengths(nx * ny, tris, lens)?.with_genus(1)
}

/// Seeded conformal factor `e^{2u}` on a genus-0 mesh, where `u` is a random
/// polynomial of degree at most `bandwidth` in the unit-sphere coordinates
/// (so a combination of spherical harmonics of degree ≤ `bandwidth`),
/// rescaled so that `max |u| = amplitude`.
pub fn bumpy_conformal_factor(
    mesh: &TriangulatedSurface,
    seed: u64,
    bandwidth: u32,
    amplitude: f64,
) -> Result<Vec<f64>> {
    let param = mesh
        .cp1_param()
        .ok_or_else(|| Error::InvalidMesh("bumpy factor needs a CP^1 parametrization".into()))?;
    let dirs: Vec<[f64; 3]> = param.iter().map(cp1_to_sphere).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for a in 0..=bandwidth {
        for b in 0..=(bandwidth - a) {
            for c in 0..=(bandwidth - a - b) {
                if a + b + c == 0 {
                    continue;
                }
                let coef: f64 = StandardNormal.sample(&mut rng);
                terms.push((a as i32, b as i32, c as i32, coef));
            }
        }
    }
    let mut u: Vec<f64> = dirs
        .iter()
        .map(|x| {
            terms
                .iter()
                .map(|&(a, b, c, k)| k * x[0].powi(a) * x[1].powi(b) * x[2].powi(c))
                .sum()
        })
        .collect();
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    let peak = u.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    for v in &mut u {
        *v = if peak > 0.0 { amplitude * (*v - mean) / peak } else { 0.0 };
    }
    Ok(u.iter().map(|v| (2.0 * v).exp()).collect())
}

fn parse_f64(tok: &str, ctx: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse(format!("{ctx}: bad number '{tok}'")))
}

fn fan(poly: &[usize]) -> impl Iterator<Item = [usize; 3]> + '_ {
    (1..poly.len().saturating_sub(1)).map(move |i| [poly[0], poly[i], poly[i + 1]])
}

pub fn parse_off(text: &str) -> Result<TriangulatedSurface> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace());
    match tokens.next() {
        Some("OFF") => {}
        other => return Err(Error::Parse(format!("OFF: missing header, found {other:?}"))),
    }
    let mut next_usize = |what: &str| -> Result<usize> {
        let t = tokens.next().ok_or_else(|| Error::Parse(format!("OFF: missing {what}")))?;
        t.parse().map_err(|_| Error::Parse(format!("OFF: bad {what} '{t}'")))
    };
    let nv = next_usize("vertex count")?;
    let nf = next_usize("face count")?;
    let _ne = next_usize("edge count")?;
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut p = [0.0; 3];
        for c in &mut p {
            let t = tokens.next().ok_or_else(|| Error::Parse("OFF: truncated vertices".into()))?;
            *c = parse_f64(t, "OFF")?;
        }
        positions.push(p);
    }
    let mut tris = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k = tokens
            .next()
            .ok_or_else(|| Error::Parse("OFF: truncated faces".into()))?
            .parse::<usize>()
            .map_err(|_| Error::Parse("OFF: bad face size".into()))?;
        let mut poly = Vec::with_capacity(k);
        for _ in 0..k {
            let t = tokens.next().ok_or_else(|| Error::Parse("OFF: truncated face".into()))?;
            poly.push(t.parse::<usize>().map_err(|_| Error::Parse(format!("OFF: bad index '{t}'")))?);
        }
        tris.extend(fan(&poly));
    }
    TriangulatedSurface::from_positions(positions, tris)
}

pub fn parse_obj(text: &str) -> Result<TriangulatedSurface> {
    let mut positions = Vec::new();
    let mut tris = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut p = [0.0; 3];
                for c in &mut p {
                    let t = it.next().ok_or_else(|| Error::Parse(format!("OBJ line {}: short vertex", ln + 1)))?;
                    *c = parse_f64(t, "OBJ")?;
                }
                positions.push(p);
            }
            Some("f") => {
                let poly = it
                    .map(|t| {
                        let idx = t.split('/').next().unwrap_or("");
                        let i: i64 = idx
                            .parse()
                            .map_err(|_| Error::Parse(format!("OBJ line {}: bad index '{t}'", ln + 1)))?;
                        let resolved = if i > 0 { i - 1 } else { positions.len() as i64 + i };
                        if resolved < 0 {
                            return Err(Error::Parse(format!("OBJ line {}: index {i} out of range", ln + 1)));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<Vec<_>>>()?;
                tris.extend(fan(&poly));
            }
            _ => {}
        }
    }
    TriangulatedSurface::from_positions(positions, tris)
}

/// Loads OFF or OBJ by extension.
pub fn load_mesh(path: &Path) -> Result<TriangulatedSurface> {
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ref e) if e == "off" => parse_off(&text),
        Some(ref e) if e == "obj" => parse_obj(&text),
        _ => Err(Error::Parse(format!("unknown mesh format: {}", path.display()))),
    }
}

/// Sidecar CSV `vertex-index,factor`; a non-numeric first line is a header.
pub fn parse_conformal_csv(text: &str, vertex_count: usize) -> Result<Vec<f64>> {
    let mut out = vec![f64::NAN; vertex_count];
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, b) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
        let idx = match a.parse::<usize>() {
            Ok(i) => i,
            Err(_) if ln == 0 => continue,
            Err(_) => return Err(Error::Parse(format!("conformal CSV line {}: bad index '{a}'", ln + 1))),
        };
        if idx >= vertex_count {
            return Err(Error::Parse(format!("conformal CSV line {}: vertex {idx} out of range", ln + 1)));
        }
        out[idx] = parse_f64(b, "conformal CSV")?;
    }
    if let Some(i) = out.iter().position(|v| v.is_nan()) {
        return Err(Error::Parse(format!("conformal CSV: no factor for vertex {i}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_counts_and_area() {
        for level in 0..5 {
            let m = icosphere(level, 0.5).unwrap();
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(level) + 2);
            assert_eq!(m.genus(), 0);
        }
        let m = icosphere(5, 0.5).unwrap();
        assert_relative_eq!(m.area(), PI, max_relative = 2e-3);
        assert!(m.area() < PI);
    }

    #[test]
    fn icosphere_is_outward_oriented() {
        let m = icosphere(2, 0.5).unwrap();
        let p = m.positions().unwrap();
        for t in m.triangles() {
            let (a, b, c) = (p[t[0]], p[t[1]], p[t[2]]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
            assert!(n[0] * a[0] + n[1] * a[1] + n[2] * a[2] > 0.0);
        }
    }

    #[test]
    fn sphere_param_is_isometric() {
        // Chordal angle θ on the unit sphere ↔ FS distance θ/2.
        let x = [0.0, 0.0, 1.0];
        let y = [1.0, 0.0, 0.0];
        let z = [0.0, 0.6, -0.8];
        let d = |a, b| crate::geometry::fs_distance(&sphere_to_cp1(a), &sphere_to_cp1(b)).unwrap();
        assert_relative_eq!(d(x, y), PI / 4.0, epsilon = 1e-15);
        let ang = (0.0f64 * 0.0 + 0.6 * 0.0 + -0.8f64).acos();
        assert_relative_eq!(d(x, z), ang / 2.0, epsilon = 1e-14);
        let back = cp1_to_sphere(&sphere_to_cp1(z));
        for i in 0..3 {
            assert_relative_eq!(back[i], z[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn torus_topology() {
        let t = flat_torus(8, 6, 1.0, 1.0).unwrap();
        assert_eq!(t.genus(), 1);
        assert_relative_eq!(t.area(), 1.0, epsilon = 1e-12);
        assert!(t.positions().is_none());
    }

    #[test]
    fn rejects_open_and_disconnected_meshes() {
        let open = TriangulatedSurface::from_positions(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        );
        assert!(matches!(open, Err(Error::InvalidMesh(_))));

        let a = icosphere(0, 1.0).unwrap();
        let mut pos = a.positions().unwrap().to_vec();
        let mut tris = a.triangles().to_vec();
        let off = pos.len();
        pos.extend(a.positions().unwrap().iter().map(|p| [p[0] + 5.0, p[1], p[2]]));
        tris.extend(a.triangles().iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]));
        assert!(matches!(
            TriangulatedSurface::from_positions(pos, tris),
            Err(Error::InvalidMesh(_))
        ));
    }

    #[test]
    fn rejects_inconsistent_orientation() {
        let a = icosphere(0, 1.0).unwrap();
        let mut tris = a.triangles().to_vec();
        tris[0].swap(1, 2);
        let r = TriangulatedSurface::from_positions(a.positions().unwrap().to_vec(), tris);
        assert!(matches!(r, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn rejects_degenerate_triangle() {
        let a = icosphere(1, 1.0).unwrap();
        let mut pos = a.positions().unwrap().to_vec();
        // Collapse one vertex onto a neighbour.
        let t = a.triangles()[0];
        pos[t[0]] = pos[t[1]];
        assert!(matches!(
            TriangulatedSurface::from_positions(pos, a.triangles().to_vec()),
            Err(Error::DegenerateTriangle { .. })
        ));
    }

    #[test]
    fn genus_metadata_is_checked() {
        assert!(icosphere(1, 1.0).unwrap().with_genus(1).is_err());
        assert!(flat_torus(4, 4, 1.0, 1.0).unwrap().with_genus(1).is_ok());
    }

    #[test]
    fn vertex_areas_partition_total() {
        let m = icosphere(3, 0.5).unwrap();
        let f = bumpy_conformal_factor(&m, 9, 3, 0.5).unwrap();
        let m = m.with_conformal_factor(f).unwrap();
        let s: f64 = m.vertex_areas().iter().sum();
        assert_relative_eq!(s, m.area(), max_relative = 1e-12);
    }

    #[test]
    fn bumpy_factor_is_seeded_and_bounded() {
        let m = icosphere(2, 0.5).unwrap();
        let a = bumpy_conformal_factor(&m, 1, 4, 0.4).unwrap();
        let b = bumpy_conformal_factor(&m, 1, 4, 0.4).unwrap();
        let c = bumpy_conformal_factor(&m, 2, 4, 0.4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let peak = a.iter().map(|f| f.ln().abs() / 2.0).fold(0.0, f64::max);
        assert_relative_eq!(peak, 0.4, max_relative = 1e-12);
    }

    #[test]
    fn off_and_obj_roundtrip() {
        let m = icosphere(1, 0.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.off");
        m.write_off(&path).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.triangles(), m.triangles());
        assert_relative_eq!(back.area(), m.area(), max_relative = 1e-14);

        let mut obj = String::from("# quad-faced cube\n");
        for p in [[0., 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.], [0., 0., 1.], [1., 0., 1.], [1., 1., 1.], [0., 1., 1.]] {
            obj += &format!("v {} {} {}\n", p[0], p[1], p[2]);
        }
        for f in ["1 4 3 2", "5 6 7 8", "1 2 6 5", "2 3 7 6", "3 4 8 7", "4 1 5 8"] {
            obj += &format!("f {f}\n");
        }
        let cube = parse_obj(&obj).unwrap();
        assert_eq!(cube.triangles().len(), 12);
        assert_eq!(cube.genus(), 0);
        assert_relative_eq!(cube.area(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn conformal_csv() {
        let f = parse_conformal_csv("vertex,factor\n1,2.0\n0,0.5\n", 2).unwrap();
        assert_eq!(f, vec![0.5, 2.0]);
        assert!(parse_conformal_csv("0,1.0\n", 2).is_err());
        assert!(parse_conformal_csv("0,1.0\n5,1.0\n", 2).is_err());
        let m = icosphere(0, 1.0).unwrap();
        assert!(m.clone().with_conformal_factor(vec![1.0; 11]).is_err());
        assert!(m.with_conformal_factor(vec![-1.0; 12]).is_err());
    }
}
