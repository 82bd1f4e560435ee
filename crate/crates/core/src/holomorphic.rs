//! Rational maps `CP^1 → CP^m` given by homogeneous polynomials.
//!
//! Coefficient `a` of a component of degree `d` multiplies `z^{d-a} w^a`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::stiffness;
use crate::geometry::{moment_map, ProjectivePoint};
use crate::mesh::TriangulatedSurface;
use crate::packing::WeightedPointCloud;

/// Relative size below which a polynomial value counts as a root.
const COMMON_ROOT_TOL: f64 = 1e-9;

/// Roots of `Σ c_a t^{n-a}` (highest power first, leading coefficient nonzero).
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut trimmed = coeffs;
    let mut roots = Vec::new();
    while trimmed.len() > 1 && trimmed[trimmed.len() - 1] == zero {
        trimmed = &trimmed[..trimmed.len() - 1];
        roots.push(zero);
    }
    let n = trimmed.len().saturating_sub(1);
    if n == 0 {
        return roots;
    }
    let lead = trimmed[0];
    let mut comp = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -trimmed[j + 1] / lead;
    }
    for i in 1..n {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let found = nalgebra::Schur::try_new(comp, f64::EPSILON, 10_000)
        .and_then(|s| s.eigenvalues())
        .map(|v| v.iter().cloned().collect::<Vec<_>>())
        .unwrap_or_else(|| durand_kerner(trimmed));
    roots.extend(found.into_iter().map(|mut r| {
        for _ in 0..3 {
            let (mut p, mut dp) = (zero, zero);
            for c in trimmed {
                dp = dp * r + p;
                p = p * r + c;
            }
            if dp.norm() > 0.0 {
                let step = p / dp;
                if step.is_finite() && step.norm() < 1e-3 * (1.0 + r.norm()) {
                    r -= step;
                }
            }
        }
        r
    }));
    roots
}

/// Simultaneous root iteration for when the companion Schur form does not converge.
fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / coeffs[0]).collect();
    let radius = 1.0 + monic[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for (j, r) in roots.iter().enumerate() {
                if j != i {
                    den *= roots[i] - r;
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let step = horner(&monic, roots[i]) / den;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    roots
}

fn horner(coeffs: &[Complex64], t: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c)
}

/// `Σ |c_a| |t|^{n-a}`, the natural scale of a polynomial value at `t`.
fn magnitude(coeffs: &[Complex64], t: Complex64) -> f64 {
    let r = t.norm();
    coeffs.iter().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Synthetic division by `(t - root)`; the remainder is dropped.
fn deflate(coeffs: &[Complex64], root: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(coeffs.len() - 1);
    let mut acc = Complex64::new(0.0, 0.0);
    for c in &coeffs[..coeffs.len() - 1] {
        acc = acc * root + c;
        out.push(acc);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct RationalCurveMap {
    components: Vec<Vec<Complex64>>,
}

impl TryFrom<Vec<Vec<[f64; 2]>>> for RationalCurveMap {
    type Error = Error;
    fn try_from(v: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        Self::new(
            v.into_iter()
                .map(|c| c.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                .collect(),
        )
    }
}

impl From<RationalCurveMap> for Vec<Vec<[f64; 2]>> {
    fn from(m: RationalCurveMap) -> Self {
        m.components
            .into_iter()
            .map(|c| c.into_iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }
}

impl RationalCurveMap {
    /// Validates the components and divides out every common factor.
    pub fn new(components: Vec<Vec<Complex64>>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidMap("need at least two components".into()));
        }
        let len = components[0].len();
        if len == 0 || components.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidMap("components must share one degree".into()));
        }
        if components.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        if components.iter().flatten().all(|z| *z == Complex64::new(0.0, 0.0)) {
            return Err(Error::InvalidMap("all components vanish identically".into()));
        }
        let mut comps = components;
        let scale = comps.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        let tiny = |z: &Complex64| z.norm() <= COMMON_ROOT_TOL * scale;
        // Common factors of w (root [1:0]) and of z (root [0:1]).
        while comps[0].len() > 1 && comps.iter().all(|c| tiny(&c[0])) {
            for c in &mut comps {
                c.remove(0);
            }
        }
        while comps[0].len() > 1 && comps.iter().all(|c| tiny(c.last().unwrap())) {
            for c in &mut comps {
                c.pop();
            }
        }
        // Finite common roots t = z/w.
        loop {
            if comps[0].len() <= 1 {
                break;
            }
            let pivot = comps
                .iter()
                .enumerate()
                .filter(|(_, c)| c[0].norm() > COMMON_ROOT_TOL * scale)
                .max_by(|a, b| a.1[0].norm().total_cmp(&b.1[0].norm()))
                .map(|(i, _)| i);
            let Some(pivot) = pivot else { break };
            let common = poly_roots(&comps[pivot]).into_iter().find(|&r| {
                comps
                    .iter()
                    .all(|c| horner(c, r).norm() <= 1e-7 * magnitude(c, r).max(f64::MIN_POSITIVE))
            });
            match common {
                Some(r) => {
                    for c in &mut comps {
                        *c = deflate(c, r);
                    }
                }
                None => break,
            }
        }
        Ok(Self { components: comps })
    }

    pub fn identity() -> Self {
        Self::monomial_power(1)
    }

    /// `[z:w] ↦ [z^d : w^d]`.
    pub fn monomial_power(d: usize) -> Self {
        let mut a = vec![Complex64::new(0.0, 0.0); d + 1];
        let mut b = a.clone();
        a[0] = Complex64::new(1.0, 0.0);
        b[d] = Complex64::new(1.0, 0.0);
        Self::new(vec![a, b]).expect("valid monomial map")
    }

    /// `[z:w] ↦ [z^d : z^{d-1}w : … : w^d]` into `CP^d`.
    pub fn veronese(d: usize) -> Self {
        let comps = (0..=d)
            .map(|a| {
                let mut c = vec![Complex64::new(0.0, 0.0); d + 1];
                c[a] = Complex64::new(1.0, 0.0);
                c
            })
            .collect();
        Self::new(comps).expect("valid Veronese map")
    }

    /// Gaussian coefficients; generically of exact degree `d`.
    pub fn random(m: usize, d: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = (0..=m)
            .map(|_| {
                (0..=d)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        Self::new(comps)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Target dimension `m`.
    pub fn target_dim(&self) -> usize {
        self.components.len() - 1
    }

    /// Common degree after removing common factors.
    pub fn degree(&self) -> usize {
        self.components[0].len() - 1
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    pub fn evaluate(&self, p: &ProjectivePoint) -> Result<ProjectivePoint> {
        if p.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: p.dim() });
        }
        let u = p.coords();
        let s = u[0].norm().max(u[1].norm());
        let (z, w) = (u[0] / s, u[1] / s);
        let d = self.degree();
        let zp: Vec<Complex64> = (0..=d).scan(Complex64::new(1.0, 0.0), |acc, _| {
            let v = *acc;
            *acc *= z;
            Some(v)
        }).collect();
        let wp: Vec<Complex64> = (0..=d).scan(Complex64::new(1.0, 0.0), |acc, _| {
            let v = *acc;
            *acc *= w;
            Some(v)
        }).collect();
        let out: Vec<Complex64> = self
            .components
            .iter()
            .map(|c| c.iter().enumerate().map(|(a, ca)| ca * zp[d - a] * wp[a]).sum())
            .collect();
        let n: f64 = out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if n < 1e-100 {
            // Renormalize before giving up.
            let k = out.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if k == 0.0 {
                return Err(Error::InvalidMap("map vanishes at a point".into()));
            }
            return ProjectivePoint::new(out.iter().map(|v| v / k).collect());
        }
        ProjectivePoint::new(out)
    }

    pub fn topological_degree(&self) -> Result<usize> {
        if self.target_dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.target_dim() });
        }
        match self.degree() {
            0 => Err(Error::ConstantMap),
            d => Ok(d),
        }
    }

    /// Values of the map at every vertex of a parametrized sphere mesh.
    pub fn sample(&self, mesh: &TriangulatedSurface) -> Result<Vec<ProjectivePoint>> {
        let param = mesh
            .cp1_param()
            .ok_or_else(|| Error::InvalidMesh("mesh has no CP^1 parametrization".into()))?;
        param.par_iter().map(|p| self.evaluate(p)).collect()
    }
}

/// Entrywise Dirichlet energy `Σ_{jl} ∫|∇(τ∘φ)_{jl}|²` of the moment map
/// composed with `φ`, from the cotangent stiffness form.
pub fn moment_energy(map: &RationalCurveMap, mesh: &TriangulatedSurface) -> Result<f64> {
    let samples = map.sample(mesh)?;
    let s = stiffness(mesh)?;
    let n = map.target_dim() + 1;
    let taus: Vec<_> = samples.iter().map(moment_map).collect();
    let energies: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|e| {
            let (j, l) = (e / n, e % n);
            let re: Vec<f64> = taus.iter().map(|t| t.0[(j, l)].re).collect();
            let im: Vec<f64> = taus.iter().map(|t| t.0[(j, l)].im).collect();
            s.quad_form(&re) + s.quad_form(&im)
        })
        .collect();
    Ok(energies.iter().sum())
}

/// `∫ φ*(ω_FS)`, computed as one quarter of [`moment_energy`].
pub fn pullback_area(map: &RationalCurveMap, mesh: &TriangulatedSurface) -> Result<f64> {
    Ok(moment_energy(map, mesh)? / 4.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeNumerator {
    /// `deg(φ)·Vol(CP^1)`, for `m = 1`.
    #[default]
    Exact,
    /// Discrete [`pullback_area`].
    Discrete,
}

/// `d([φ],[ω_g])`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolomorphicDegree {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
}

pub fn holomorphic_degree(
    map: &RationalCurveMap,
    mesh: &TriangulatedSurface,
    numerator: DegreeNumerator,
) -> Result<HolomorphicDegree> {
    let denominator = mesh.area();
    if !(denominator > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    let numerator = match numerator {
        DegreeNumerator::Exact => map.topological_degree()? as f64 * PI,
        DegreeNumerator::Discrete => pullback_area(map, mesh)?,
    };
    Ok(HolomorphicDegree {
        value: numerator / denominator,
        numerator,
        denominator,
    })
}

/// Push-forward of the vertex-area measure.
pub fn pushforward_measure(map: &RationalCurveMap, mesh: &TriangulatedSurface) -> Result<WeightedPointCloud> {
    WeightedPointCloud::new(map.sample(mesh)?, mesh.vertex_areas())
}
