//! Closed-form geometry of `CP^m` with the Fubini-Study metric normalised to
//! diameter `π/2`.
//!
//! Points are stored as homogeneous coordinate vectors. Everything here is a
//! pure function of immutable values.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance for projective equality and canonical forms (after normalisation).
pub const PROJECTIVE_TOL: f64 = 1e-10;

/// Relative inner product below which a point counts as lying on the cut locus
/// of a chart base.
pub const CUT_LOCUS_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Hermitian product `<a, b> = Σ a_j conj(b_j)`.
pub fn hermitian(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A point `[Z]` of `CP^m`.
#[derive(Clone)]
pub struct ProjectivePoint {
    coords: Vec<Complex64>,
}

impl ProjectivePoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidPoint(format!(
                "need at least 2 homogeneous coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let n = norm(&coords);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidPoint("zero vector".into()));
        }
        Ok(Self { coords })
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The basis point `[0 : … : 1 : … : 0]` with the one in slot `index`.
    pub fn basis(m: usize, index: usize) -> Self {
        let mut coords = vec![Complex64::new(0.0, 0.0); m + 1];
        coords[index] = Complex64::new(1.0, 0.0);
        Self { coords }
    }

    /// Uniformly distributed with respect to the Fubini-Study volume.
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        loop {
            let coords: Vec<Complex64> = (0..=m)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(p) = Self::new(coords) {
                return p;
            }
        }
    }

    /// Complex dimension `m` of the ambient `CP^m`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<Complex64> {
        self.coords
    }

    /// Unit-norm representative.
    pub fn unit(&self) -> Vec<Complex64> {
        let n = norm(&self.coords);
        self.coords.iter().map(|z| z / n).collect()
    }

    /// Unit norm with the first non-negligible coordinate real and positive.
    pub fn canonical(&self) -> Vec<Complex64> {
        let mut u = self.unit();
        if let Some(lead) = u.iter().find(|z| z.norm() > PROJECTIVE_TOL).copied() {
            let phase = lead.conj() / lead.norm();
            for z in &mut u {
                *z *= phase;
            }
        }
        u
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.coords.len() != other.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// Projective equality within `tol`: `|<Z,W>| ≥ (1 - tol)|Z||W|`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.coords.len() != other.coords.len() {
            return false;
        }
        let c = hermitian(&self.coords, &other.coords).norm()
            / (norm(&self.coords) * norm(&other.coords));
        c >= 1.0 - tol
    }

    /// `[CZ]` for a square matrix `C`.
    pub fn transform(&self, c: &DMatrix<Complex64>) -> Result<Self> {
        if c.ncols() != self.coords.len() || c.nrows() != self.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coords.len(),
                got: c.ncols(),
            });
        }
        let z = c * nalgebra::DVector::from_column_slice(&self.coords);
        Self::new(z.iter().copied().collect())
    }
}

impl PartialEq for ProjectivePoint {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, PROJECTIVE_TOL)
    }
}

impl fmt::Debug for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, z) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, " : ")?;
            }
            write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
        }
        write!(f, "]")
    }
}

impl Serialize for ProjectivePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coords.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProjectivePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        let coords = pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        ProjectivePoint::new(coords).map_err(serde::de::Error::custom)
    }
}

/// Fubini-Study distance, in `[0, π/2]`.
///
/// Uses `atan2(|W⊥|, |<Z,W>|)` on unit representatives, which agrees with
/// `arccos(|<Z,W>|/(|Z||W|))` but stays accurate for nearby points.
pub fn fs_distance(p: &ProjectivePoint, q: &ProjectivePoint) -> Result<f64> {
    p.check_dim(q)?;
    Ok(unit_distance(&p.unit(), &q.unit()))
}

/// Distance between two unit representatives.
pub(crate) fn unit_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    let ip = hermitian(v, u);
    let perp: f64 = u
        .iter()
        .zip(v)
        .map(|(a, b)| (b - a * ip).norm_sqr())
        .sum::<f64>()
        .sqrt();
    perp.atan2(ip.norm()).clamp(0.0, FRAC_PI_2)
}

/// The value of the moment map, `τ([Z]) = i ZZ*/Z*Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix(pub DMatrix<Complex64>);

impl MomentMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest entry of `τ* + τ`.
    pub fn anti_hermitian_defect(&self) -> f64 {
        (self.0.adjoint() + &self.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `P² - P` with `P = -iτ`.
    pub fn projector_defect(&self) -> f64 {
        let p = &self.0 * (-I);
        (&p * &p - &p).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn moment_map(p: &ProjectivePoint) -> MomentMatrix {
    let u = p.unit();
    let n = u.len();
    MomentMatrix(DMatrix::from_fn(n, n, |j, l| I * u[j] * u[l].conj()))
}

/// `φ_[W]([Z]) = |<Z,W>|²/(|Z|²|W|²)`, the model first eigenfunction plus `1/(m+1)`.
pub fn model_eigenfunction(w: &ProjectivePoint, p: &ProjectivePoint) -> Result<f64> {
    w.check_dim(p)?;
    let c = hermitian(p.coords(), w.coords()).norm_sqr()
        / (norm(p.coords()).powi(2) * norm(w.coords()).powi(2));
    Ok(c.min(1.0))
}

/// The dilation biholomorphism `θ_{t,[W]}`: fixes `W`, scales `W⊥` by `t`.
pub fn theta_flow(t: f64, w: &ProjectivePoint, p: &ProjectivePoint) -> Result<ProjectivePoint> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!("dilation factor must be positive, got {t}")));
    }
    w.check_dim(p)?;
    let wu = w.unit();
    let along = hermitian(p.coords(), &wu);
    let coords = p
        .coords()
        .iter()
        .zip(&wu)
        .map(|(z, e)| along * e + (z - along * e) * t)
        .collect();
    ProjectivePoint::new(coords)
}

/// Radius `ρ` of the image of `B_w(r)` under `θ_{t,w}`: `tan ρ = t tan r`.
pub fn ball_image_radius(t: f64, r: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!("dilation factor must be positive, got {t}")));
    }
    if !(r > 0.0 && r < FRAC_PI_2) {
        return Err(Error::OutOfRange(format!("radius must lie in (0, π/2), got {r}")));
    }
    Ok((t * r.tan()).atan())
}

/// Dilation factor taking `B_w(r)` onto `B_w(π/4)`, i.e. `1/tan r`.
pub fn dilation_to_quarter(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < FRAC_PI_2) {
        return Err(Error::OutOfRange(format!("radius must lie in (0, π/2), got {r}")));
    }
    Ok(1.0 / r.tan())
}

/// A unitary `U` with `U w/|w| = e_0`.
///
/// Complex Householder reflection followed by a phase, so the map is smooth in
/// `w` away from `w_0 = 0` and deterministic everywhere.
pub fn unitary_to_base(w: &ProjectivePoint) -> DMatrix<Complex64> {
    let x = w.unit();
    let n = x.len();
    let rho = if x[0].norm() > 0.0 {
        x[0] / x[0].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    if x[1..].iter().all(|z| z.norm() == 0.0) {
        return DMatrix::<Complex64>::identity(n, n) * rho.conj();
    }
    let mut v = x.clone();
    v[0] += rho;
    let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let mut h = DMatrix::<Complex64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] -= v[i] * v[j].conj() * (2.0 / vv);
        }
    }
    h * (-rho.conj())
}

/// Affine chart coordinates `ζ ∈ C^m` centred at a base point.
#[derive(Clone, Debug)]
pub struct ChartPoint {
    pub base: ProjectivePoint,
    pub zeta: Vec<Complex64>,
}

impl ChartPoint {
    pub fn norm(&self) -> f64 {
        norm(&self.zeta)
    }
}

/// `[U*(1, ζ)]` where `U` takes `w` to `[1:0:…:0]`.
pub fn chart_to_point(w: &ProjectivePoint, zeta: &[Complex64]) -> Result<ProjectivePoint> {
    if zeta.len() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            got: zeta.len(),
        });
    }
    let u = unitary_to_base(w);
    let mut y = Vec::with_capacity(zeta.len() + 1);
    y.push(Complex64::new(1.0, 0.0));
    y.extend_from_slice(zeta);
    let z = u.adjoint() * nalgebra::DVector::from_vec(y);
    ProjectivePoint::new(z.iter().copied().collect())
}

pub fn point_to_chart(w: &ProjectivePoint, p: &ProjectivePoint) -> Result<ChartPoint> {
    w.check_dim(p)?;
    let u = unitary_to_base(w);
    let y = u * nalgebra::DVector::from_vec(p.unit());
    if y[0].norm() < CUT_LOCUS_TOL {
        return Err(Error::CutLocus(y[0].norm()));
    }
    let zeta = y.iter().skip(1).map(|z| z / y[0]).collect();
    Ok(ChartPoint {
        base: w.clone(),
        zeta,
    })
}

/// Hermitian coefficient matrix `h_{ij̄} = ∂_i ∂_j̄ log(1 + |ζ|²)` of the
/// Fubini-Study Kähler form `(i/2) Σ h_{ij̄} dζ_i ∧ dζ̄_j` in an affine chart.
pub fn chart_metric(zeta: &[Complex64]) -> DMatrix<Complex64> {
    let s = 1.0 + zeta.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let m = zeta.len();
    DMatrix::from_fn(m, m, |i, j| {
        let delta = if i == j { 1.0 / s } else { 0.0 };
        Complex64::new(delta, 0.0) - zeta[i].conj() * zeta[j] / (s * s)
    })
}

/// Riemannian inner product `g(u, v) = Re Σ h_{ij̄} u_i v̄_j` of chart vectors.
pub fn chart_inner(zeta: &[Complex64], u: &[Complex64], v: &[Complex64]) -> f64 {
    let h = chart_metric(zeta);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..u.len() {
        for j in 0..v.len() {
            acc += h[(i, j)] * u[i] * v[j].conj();
        }
    }
    acc.re
}

/// `ω_FS(u, v) = -Im Σ h_{ij̄} u_i v̄_j` on chart tangent vectors.
pub fn chart_kahler_form(zeta: &[Complex64], u: &[Complex64], v: &[Complex64]) -> f64 {
    let h = chart_metric(zeta);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..u.len() {
        for j in 0..v.len() {
            acc += h[(i, j)] * u[i] * v[j].conj();
        }
    }
    -acc.im
}

/// Riemannian gradient of `f(ζ) = (1 + |ζ|²)^{-1}` with respect to the chart
/// Fubini-Study metric, as a vector in `C^m` (real tangent vector `Re/Im` parts).
///
/// Solves `conj(h) X = 2 ∂f/∂ζ̄` rather than using any closed form for `X`.
pub fn chart_model_gradient(zeta: &[Complex64]) -> Vec<Complex64> {
    let s = 1.0 + zeta.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let h_conj = chart_metric(zeta).map(|z| z.conj());
    let rhs = nalgebra::DVector::from_iterator(zeta.len(), zeta.iter().map(|z| -2.0 * z / (s * s)));
    let x = h_conj
        .lu()
        .solve(&rhs)
        .expect("chart metric is positive definite");
    x.iter().copied().collect()
}

/// Plücker coordinates of `span(basis)`: the `r×r` minors of the `N×r`
/// matrix with the basis vectors as columns, rows taken in lexicographic
/// order of `r`-subsets.
pub fn pluecker_embed(basis: &[Vec<Complex64>]) -> Result<ProjectivePoint> {
    let r = basis.len();
    if r == 0 {
        return Err(Error::InvalidPoint("empty basis".into()));
    }
    let n = basis[0].len();
    if let Some(bad) = basis.iter().find(|b| b.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    if r > n {
        return Err(Error::RankDeficient(0.0));
    }
    let a = DMatrix::from_fn(n, r, |i, j| basis[j][i]);
    let sv = a.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin / smax < 1e-10 {
        return Err(Error::RankDeficient(if smax == 0.0 { 0.0 } else { smin / smax }));
    }
    let coords = subsets(n, r)
        .into_iter()
        .map(|rows| DMatrix::from_fn(r, r, |i, j| a[(rows[i], j)]).determinant())
        .collect();
    ProjectivePoint::new(coords)
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..r).collect();
    if r > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - r + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..r {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Haar-random special unitary matrix (QR of a complex Ginibre matrix with the
/// phases of `R` folded back, then the determinant divided out).
pub fn random_special_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    let det = q.determinant();
    let root = Complex64::from_polar(1.0, -det.arg() / n as f64);
    q * root
}
