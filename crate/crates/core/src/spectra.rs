//! Generalized symmetric eigenproblems `S v = λ M v` for P1 forms.
//!
//! Large problems use a shift-inverted block Lanczos iteration with full
//! `M`-reorthogonalization; Rayleigh-Ritz is carried out on the original
//! pencil. Small problems, and cross-checks, use a dense solver.

use std::fs;
use std::io::Write;
use std::path::Path;

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::SparseSym;
use crate::mesh::TriangulatedSurface;

/// Vertex count below which [`spectrum`] uses the dense solver.
pub const DENSE_THRESHOLD: usize = 2000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual tolerance: `‖Sv − λMv‖ ≤ tol·‖v‖`.
    pub tol: f64,
    pub block_size: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Use the dense path when `n` is below this.
    pub dense_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            block_size: 12,
            max_restarts: 40,
            seed: 0,
            dense_threshold: DENSE_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// One `M`-normalized vector per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `index,eigenvalue` CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(f, "index,eigenvalue")?;
        for (i, l) in self.eigenvalues.iter().enumerate() {
            writeln!(f, "{i},{l:.17e}")?;
        }
        Ok(())
    }

    /// Eigenvectors as a row-major `count × n` matrix of little-endian `f64`,
    /// with a JSON header next to it.
    pub fn write_eigenvectors(&self, bin: &Path, header: &Path) -> Result<()> {
        let n = self.eigenvectors.first().map_or(0, Vec::len);
        let mut bytes = Vec::with_capacity(8 * n * self.count());
        for v in &self.eigenvectors {
            for x in v {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        fs::write(bin, bytes)?;
        let meta = EigenvectorHeader {
            rows: self.count(),
            cols: n,
            layout: "row-major".into(),
            dtype: "f64-le".into(),
            file: bin.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        };
        fs::write(header, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn read_eigenvectors(bin: &Path, header: &Path) -> Result<Vec<Vec<f64>>> {
        let meta: EigenvectorHeader = serde_json::from_str(&fs::read_to_string(header)?)?;
        let bytes = fs::read(bin)?;
        if bytes.len() != 8 * meta.rows * meta.cols {
            return Err(Error::Parse("eigenvector file size does not match its header".into()));
        }
        let flat: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(flat.chunks(meta.cols.max(1)).map(<[f64]>::to_vec).collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenvectorHeader {
    pub rows: usize,
    pub cols: usize,
    pub layout: String,
    pub dtype: String,
    pub file: String,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `(vᵀSv)/(vᵀMv)`.
pub fn rayleigh_quotient(stiffness: &SparseSym, mass: &SparseSym, v: &[f64]) -> Result<f64> {
    let den = mass.quad_form(v);
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(stiffness.quad_form(v) / den)
}

/// Largest Rayleigh quotient on the span of `vectors`, from the small
/// generalized eigenproblem of the Gram matrices.
pub fn max_rayleigh_on_span(stiffness: &SparseSym, mass: &SparseSym, vectors: &[Vec<f64>]) -> Result<f64> {
    let p = vectors.len();
    let sv: Vec<Vec<f64>> = vectors.par_iter().map(|v| stiffness.matvec(v)).collect();
    let mv: Vec<Vec<f64>> = vectors.par_iter().map(|v| mass.matvec(v)).collect();
    let a = DMatrix::from_fn(p, p, |i, j| dot(&vectors[i], &sv[j]));
    let b = DMatrix::from_fn(p, p, |i, j| dot(&vectors[i], &mv[j]));
    let a = (&a + a.transpose()) * 0.5;
    let b = (&b + b.transpose()) * 0.5;
    let vals = dense_pencil(&a, &b)?.0;
    Ok(vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Ascending eigenpairs of the dense pencil `(a, b)` with `b` SPD; vectors are
/// `b`-orthonormal columns.
fn dense_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficient(0.0))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(Error::RankDeficient(0.0))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    let x = linv.transpose() * y;
    Ok((vals, x))
}

/// Deterministic sign: the entry of largest magnitude is positive.
fn fix_sign(v: &mut [f64]) {
    let k = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
        .map(|e| e.0)
        .unwrap_or(0);
    if v.get(k).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residual(s: &SparseSym, m: &SparseSym, lambda: f64, v: &[f64]) -> f64 {
    let sv = s.matvec(v);
    let mv = m.matvec(v);
    let r: Vec<f64> = sv.iter().zip(&mv).map(|(a, b)| a - lambda * b).collect();
    norm2(&r)
}

/// Dense generalized eigensolver, all pairs or the first `count`.
pub fn dense_spectrum(stiffness: &SparseSym, mass: &SparseSym, count: usize) -> Result<SpectralDecomposition> {
    let n = stiffness.dim();
    if count > n {
        return Err(Error::TooFewEigenvalues { needed: count, have: n });
    }
    let (vals, x) = dense_pencil(&stiffness.to_dense(), &mass.to_dense())?;
    let mut out = SpectralDecomposition {
        eigenvalues: Vec::with_capacity(count),
        eigenvectors: Vec::with_capacity(count),
        residuals: Vec::with_capacity(count),
    };
    for i in 0..count {
        let mut v: Vec<f64> = x.column(i).iter().cloned().collect();
        fix_sign(&mut v);
        out.residuals.push(residual(stiffness, mass, vals[i], &v));
        out.eigenvalues.push(vals[i]);
        out.eigenvectors.push(v);
    }
    Ok(out)
}

/// Shift-inverted operator `x ↦ (S − σM)⁻¹ M x` with `σ < 0`.
struct ShiftInvert<'a> {
    mass: &'a SparseSym,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl<'a> ShiftInvert<'a> {
    fn new(s: &SparseSym, mass: &'a SparseSym, sigma: f64) -> Result<Self> {
        let n = s.dim();
        let mut trip: Vec<Triplet<usize, usize, f64>> = s
            .triplets()
            .into_iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        trip.extend(mass.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, -sigma * v)));
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::NoConvergence(format!("sparse assembly: {e:?}")))?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::NoConvergence(format!("sparse Cholesky: {e:?}")))?;
        Ok(Self { mass, llt })
    }

    fn apply_block(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.mass.dim();
        let rhs = apply(self.mass, block);
        let mut b = Mat::<f64>::from_fn(n, rhs.ncols(), |i, j| rhs[(i, j)]);
        self.llt.solve_in_place_with_conj(faer::Conj::No, b.as_mut());
        DMatrix::from_fn(n, rhs.ncols(), |i, j| b[(i, j)])
    }
}

/// `M`-orthonormal Krylov basis with its images under `S` and `M` and the
/// projected matrix `VᵀSV`, stored in preallocated column blocks.
struct Basis {
    v: DMatrix<f64>,
    sv: DMatrix<f64>,
    mv: DMatrix<f64>,
    a: DMatrix<f64>,
    len: usize,
}

fn apply(op: &SparseSym, w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let cols: Vec<Vec<f64>> = (0..w.ncols())
        .into_par_iter()
        .map(|j| op.matvec(&w.as_slice()[j * n..(j + 1) * n]))
        .collect();
    DMatrix::from_iterator(n, cols.len(), cols.into_iter().flatten())
}

impl Basis {
    fn new(n: usize, cap: usize) -> Self {
        Self {
            v: DMatrix::zeros(n, cap),
            sv: DMatrix::zeros(n, cap),
            mv: DMatrix::zeros(n, cap),
            a: DMatrix::zeros(cap, cap),
            len: 0,
        }
    }

    fn cap(&self) -> usize {
        self.v.ncols()
    }

    /// `M`-orthonormalizes the columns of `w` against the basis and each
    /// other and appends the survivors, returning them.
    fn push_block(&mut self, s: &SparseSym, m: &SparseSym, mut w: DMatrix<f64>) -> DMatrix<f64> {
        let n = w.nrows();
        let p = self.len;
        let mw0 = apply(m, &w);
        let start: Vec<f64> = (0..w.ncols()).map(|j| w.column(j).dot(&mw0.column(j)).max(0.0).sqrt()).collect();
        if p > 0 {
            for _ in 0..2 {
                let mw = apply(m, &w);
                let vp = self.v.columns(0, p);
                let c = vp.tr_mul(&mw);
                w -= vp * c;
            }
        }
        for j in 0..w.ncols() {
            if self.len >= self.cap() {
                break;
            }
            let mut x = w.column(j).into_owned();
            for _ in 0..2 {
                let mx = DVector::from_vec(m.matvec(x.as_slice()));
                for k in p..self.len {
                    let c = self.v.column(k).dot(&mx);
                    x.axpy(-c, &self.v.column(k), 1.0);
                }
            }
            let mut mx = DVector::from_vec(m.matvec(x.as_slice()));
            let nrm = x.dot(&mx).max(0.0).sqrt();
            if !(nrm > 1e-10 * start[j]) {
                continue;
            }
            x /= nrm;
            mx /= nrm;
            let sx = DVector::from_vec(s.matvec(x.as_slice()));
            let k = self.len;
            self.v.set_column(k, &x);
            self.mv.set_column(k, &mx);
            self.sv.set_column(k, &sx);
            self.len += 1;
        }
        let q = self.len;
        if q > p {
            let block = self.v.columns(0, q).tr_mul(&self.sv.columns(p, q - p));
            for i in 0..q {
                for j in p..q {
                    let val = block[(i, j - p)];
                    self.a[(i, j)] = val;
                    self.a[(j, i)] = val;
                }
            }
        }
        debug_assert_eq!(self.v.nrows(), n);
        self.v.columns(p, q - p).into_owned()
    }

    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let p = self.len;
        let a = self.a.view((0, 0), (p, p));
        let a = (a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a);
        let mut idx: Vec<usize> = (0..p).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let y = DMatrix::from_fn(p, p, |r, c| eig.eigenvectors[(r, idx[c])]);
        (vals, y)
    }
}

/// Smallest `count` eigenpairs, ascending and `M`-orthonormal.
pub fn spectrum(stiffness: &SparseSym, mass: &SparseSym, count: usize) -> Result<SpectralDecomposition> {
    spectrum_with(stiffness, mass, count, &SolverOptions::default())
}

pub fn spectrum_with(
    stiffness: &SparseSym,
    mass: &SparseSym,
    count: usize,
    opts: &SolverOptions,
) -> Result<SpectralDecomposition> {
    let n = stiffness.dim();
    if mass.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mass.dim() });
    }
    if count == 0 || count >= n {
        return Err(Error::OutOfRange(format!("eigenpair count must lie in [1, {n}), got {count}")));
    }
    if n < opts.dense_threshold {
        return dense_spectrum(stiffness, mass, count);
    }
    lanczos(stiffness, mass, count, opts)
}

fn lanczos(s: &SparseSym, m: &SparseSym, count: usize, opts: &SolverOptions) -> Result<SpectralDecomposition> {
    let n = s.dim();
    // A tenth of the Weyl estimate of λ₁ keeps the low end well separated.
    let area: f64 = m.values().iter().sum();
    let sigma = -0.1 * 4.0 * std::f64::consts::PI / area;
    let op = ShiftInvert::new(s, m, sigma)?;
    let b = opts.block_size.max(1);
    let cap = (2 * count + 4 * b).max(count + 80).min(n);
    let check_every = (count / 2).max(2 * b);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_block = |rng: &mut ChaCha8Rng, cols: usize| {
        DMatrix::from_fn(n, cols, |_, _| StandardNormal.sample(rng))
    };

    let mut basis = Basis::new(n, cap);
    let mut block = basis.push_block(s, m, random_block(&mut rng, b));
    let mut restarts = 0;
    let mut since_check = 0;
    loop {
        let next = if block.ncols() == 0 {
            random_block(&mut rng, b)
        } else {
            op.apply_block(&block)
        };
        block = basis.push_block(s, m, next);
        since_check += block.ncols();
        let full = basis.len >= cap;
        if basis.len < count + b || (since_check < check_every && !full) {
            continue;
        }
        since_check = 0;
        let (vals, y) = basis.ritz();
        let p = basis.len;
        let want = count.min(p);
        let yc = y.columns(0, want);
        let x = basis.v.columns(0, p) * yc;
        let sx = basis.sv.columns(0, p) * yc;
        let mx = basis.mv.columns(0, p) * yc;
        let unconverged: Vec<usize> = (0..want)
            .filter(|&i| {
                let r = sx.column(i) - mx.column(i) * vals[i];
                r.norm() > opts.tol * x.column(i).norm()
            })
            .collect();
        if unconverged.is_empty() && want == count {
            let mut out = SpectralDecomposition {
                eigenvalues: vals[..count].to_vec(),
                eigenvectors: (0..count).map(|i| x.column(i).iter().cloned().collect()).collect(),
                residuals: Vec::with_capacity(count),
            };
            for (v, l) in out.eigenvectors.iter_mut().zip(&out.eigenvalues) {
                fix_sign(v);
                out.residuals.push(residual(s, m, *l, v));
            }
            return Ok(out);
        }
        if full {
            restarts += 1;
            if restarts > opts.max_restarts {
                return Err(Error::NoConvergence(format!(
                    "{} of {count} eigenpairs unconverged after {} restarts",
                    unconverged.len(),
                    opts.max_restarts
                )));
            }
            // Thick restart on the lowest Ritz vectors.
            let keep = (count + b).min(p);
            let yk = y.columns(0, keep);
            let mut fresh = Basis::new(n, cap);
            fresh.v.columns_mut(0, keep).copy_from(&(basis.v.columns(0, p) * yk));
            fresh.sv.columns_mut(0, keep).copy_from(&(basis.sv.columns(0, p) * yk));
            fresh.mv.columns_mut(0, keep).copy_from(&(basis.mv.columns(0, p) * yk));
            for i in 0..keep {
                fresh.a[(i, i)] = vals[i];
            }
            fresh.len = keep;
            basis = fresh;
            let pick: Vec<usize> = unconverged.iter().take(b).cloned().collect();
            block = DMatrix::from_fn(n, pick.len(), |r, c| basis.v[(r, pick[c])]);
        }
    }
}

/// Least-squares slope of `λ_k` against `k` over the upper half of the
/// computed range, times `Vol/(4π)`.
pub fn weyl_slope(decomposition: &SpectralDecomposition, mesh: &TriangulatedSurface) -> Result<f64> {
    weyl_slope_from(&decomposition.eigenvalues, mesh.area())
}

pub fn weyl_slope_from(eigenvalues: &[f64], area: f64) -> Result<f64> {
    let n = eigenvalues.len();
    if n < 50 {
        return Err(Error::TooFewEigenvalues { needed: 50, have: n });
    }
    let lo = n / 2;
    let pts: Vec<(f64, f64)> = (lo..n).map(|k| (k as f64, eigenvalues[k])).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx * area / (4.0 * std::f64::consts::PI))
}
