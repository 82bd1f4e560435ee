//! P1 finite elements: cotangent stiffness and consistent or lumped mass.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{heron_area, TriangulatedSurface, DEGENERATE_AREA_RATIO};

/// Symmetric sparse matrix in compressed row storage (both triangles stored).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Sums duplicate entries; the pattern must be symmetric.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            indptr.push(indices.len());
        }
        Self { n, indptr, indices, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `uᵀ A v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        (0..self.n).map(|i| u[i] * self.row(i).map(|(j, a)| a * v[j]).sum::<f64>()).sum()
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.bilinear(v, v)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Mass matrix flavour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassKind {
    #[default]
    Consistent,
    Lumped,
}

/// Half cotangents of the angles at the three corners of a triangle.
fn half_cotangents(l: [f64; 3], area: f64) -> [f64; 3] {
    let sq = [l[0] * l[0], l[1] * l[1], l[2] * l[2]];
    [
        (sq[1] + sq[2] - sq[0]) / (8.0 * area),
        (sq[2] + sq[0] - sq[1]) / (8.0 * area),
        (sq[0] + sq[1] - sq[2]) / (8.0 * area),
    ]
}

fn check_areas(mesh: &TriangulatedSurface) -> Result<Vec<f64>> {
    let areas: Vec<f64> = mesh.edge_lengths().iter().map(|&l| heron_area(l)).collect();
    let mean = areas.iter().sum::<f64>() / areas.len() as f64;
    if let Some((index, &area)) = areas.iter().enumerate().find(|(_, a)| !(**a > DEGENERATE_AREA_RATIO * mean)) {
        return Err(Error::DegenerateTriangle { index, area });
    }
    Ok(areas)
}

/// Cotangent stiffness from the background edge lengths only.
pub fn stiffness(mesh: &TriangulatedSurface) -> Result<SparseSym> {
    let areas = check_areas(mesh)?;
    let local: Vec<[(usize, usize, f64); 9]> = mesh
        .triangles()
        .par_iter()
        .zip(mesh.edge_lengths().par_iter())
        .zip(areas.par_iter())
        .map(|((t, &l), &a)| {
            let w = half_cotangents(l, a);
            let mut out = [(0, 0, 0.0); 9];
            let mut k = 0;
            for i in 0..3 {
                let (j, m) = ((i + 1) % 3, (i + 2) % 3);
                out[k] = (t[j], t[m], -w[i]);
                out[k + 1] = (t[m], t[j], -w[i]);
                out[k + 2] = (t[i], t[i], w[(i + 1) % 3] + w[(i + 2) % 3]);
                k += 3;
            }
            out
        })
        .collect();
    let triplets: Vec<_> = local.into_iter().flatten().collect();
    Ok(SparseSym::from_triplets(mesh.vertex_count(), &triplets))
}

/// Mass form with the conformal factor averaged per triangle.
pub fn mass(mesh: &TriangulatedSurface, kind: MassKind) -> Result<SparseSym> {
    check_areas(mesh)?;
    let scaled = mesh.scaled_areas();
    let mut triplets = Vec::with_capacity(9 * scaled.len());
    for (t, a) in mesh.triangles().iter().zip(&scaled) {
        for i in 0..3 {
            match kind {
                MassKind::Consistent => {
                    for j in 0..3 {
                        let f = if i == j { 2.0 } else { 1.0 };
                        triplets.push((t[i], t[j], a * f / 12.0));
                    }
                }
                MassKind::Lumped => triplets.push((t[i], t[i], a / 3.0)),
            }
        }
    }
    Ok(SparseSym::from_triplets(mesh.vertex_count(), &triplets))
}

/// Stiffness and mass forms.
pub fn assemble(mesh: &TriangulatedSurface, kind: MassKind) -> Result<(SparseSym, SparseSym)> {
    Ok((stiffness(mesh)?, mass(mesh, kind)?))
}

/// Dirichlet form restricted to triangles touched by both supports: the part
/// of `uᵀSv` coming from triangles where `u` and `v` are both nonzero.
pub fn straddling_cross_energy(mesh: &TriangulatedSurface, u: &[f64], v: &[f64]) -> Result<f64> {
    let areas = check_areas(mesh)?;
    let mut total = 0.0;
    for ((t, &l), &a) in mesh.triangles().iter().zip(mesh.edge_lengths()).zip(&areas) {
        if t.iter().all(|&i| u[i] == 0.0) || t.iter().all(|&i| v[i] == 0.0) {
            continue;
        }
        let w = half_cotangents(l, a);
        for i in 0..3 {
            let (j, m) = (t[(i + 1) % 3], t[(i + 2) % 3]);
            total += w[i] * (u[j] - u[m]) * (v[j] - v[m]);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{flat_torus, icosphere};
    use approx::assert_relative_eq;

    #[test]
    fn constants_are_harmonic_and_mass_totals_area() {
        let m = icosphere(3, 0.5).unwrap();
        let (s, ms) = assemble(&m, MassKind::Consistent).unwrap();
        let ones = vec![1.0; m.vertex_count()];
        assert!(s.matvec(&ones).iter().all(|r| r.abs() < 1e-12));
        assert_relative_eq!(ms.quad_form(&ones), m.area(), max_relative = 1e-12);
        let ml = mass(&m, MassKind::Lumped).unwrap();
        assert_relative_eq!(ml.quad_form(&ones), m.area(), max_relative = 1e-12);
    }

    #[test]
    fn stiffness_ignores_conformal_factor() {
        let m = icosphere(2, 0.5).unwrap();
        let s1 = stiffness(&m).unwrap();
        let m2 = m.clone().scale_conformal(2.0).unwrap();
        let s2 = stiffness(&m2).unwrap();
        assert_eq!(s1, s2);
        let (a, b) = (mass(&m, MassKind::Consistent).unwrap(), mass(&m2, MassKind::Consistent).unwrap());
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_relative_eq!(2.0 * x, *y, max_relative = 1e-14);
        }
    }

    #[test]
    fn torus_grid_is_five_point_laplacian() {
        let t = flat_torus(5, 5, 1.0, 1.0).unwrap();
        let s = stiffness(&t).unwrap();
        assert_relative_eq!(s.get(0, 0), 4.0, epsilon = 1e-12);
        assert_relative_eq!(s.get(0, 1), -1.0, epsilon = 1e-12);
        assert_relative_eq!(s.get(0, 6), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_energy_of_linear_function() {
        // Coordinate functions on the sphere of radius 1/2 have quotient 2/r² = 8.
        let m = icosphere(5, 0.5).unwrap();
        let (s, ms) = assemble(&m, MassKind::Consistent).unwrap();
        let z: Vec<f64> = m.positions().unwrap().iter().map(|p| p[2]).collect();
        assert_relative_eq!(s.quad_form(&z) / ms.quad_form(&z), 8.0, max_relative = 5e-3);
    }

    #[test]
    fn cross_energy_vanishes_for_separated_supports() {
        let m = icosphere(2, 0.5).unwrap();
        let p = m.positions().unwrap();
        let u: Vec<f64> = p.iter().map(|x| (x[2] - 0.3).max(0.0)).collect();
        let v: Vec<f64> = p.iter().map(|x| (-x[2] - 0.3).max(0.0)).collect();
        assert_eq!(straddling_cross_energy(&m, &u, &v).unwrap(), 0.0);
        let s = stiffness(&m).unwrap();
        assert!(s.bilinear(&u, &v).abs() < 1e-15);
        // Overlapping supports: the straddling part is the whole cross term.
        let w: Vec<f64> = p.iter().map(|x| (x[0] + 0.1).max(0.0)).collect();
        assert_relative_eq!(straddling_cross_energy(&m, &u, &w).unwrap(), s.bilinear(&u, &w), max_relative = 1e-12);
    }
}
