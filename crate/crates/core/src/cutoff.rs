//! Lipschitz test functions on `CP^m` built from the model eigenfunction and
//! the dilation flow: the ball cutoff `ψ_{R,w}`, the complement cutoff
//! `ψ̄_{r,w}`, and their product `u_A` on an annulus.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fs_distance, model_eigenfunction, theta_flow, ProjectivePoint};

/// Certified lower bound of `ψ_{R,w}` on `B_w(R)`.
pub const PSI_LOWER: f64 = 3.0 / 10.0;
/// Certified lower bound of `ψ̄_{r,w}` outside `B_w(r)`.
pub const PSI_BAR_LOWER: f64 = 1.0 / 6.0;
/// Lower bound of `u_A` on `A`, used uniformly for both annulus kinds.
pub const CUTOFF_LOWER: f64 = 1.0 / 20.0;
/// Upper bound of `u_A` when the inner radius is positive.
pub const CUTOFF_UPPER: f64 = 1.0 / 6.0;

/// `{x : inner ≤ d(x, center) < outer}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus<P = ProjectivePoint> {
    pub center: P,
    pub inner: f64,
    pub outer: f64,
}

impl<P: Clone> Annulus<P> {
    pub fn new(center: P, inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && inner.is_finite() && outer > inner && !outer.is_nan()) {
            return Err(Error::MalformedAnnulus(format!(
                "need 0 ≤ inner < outer, got inner={inner}, outer={outer}"
            )));
        }
        Ok(Self { center, inner, outer })
    }

    /// `2A = {inner/2 ≤ d < 2·outer}`.
    pub fn doubled(&self) -> Self {
        Self {
            center: self.center.clone(),
            inner: self.inner / 2.0,
            outer: self.outer * 2.0,
        }
    }

    /// Membership by distance to the centre (half-open).
    pub fn contains_distance(&self, d: f64) -> bool {
        self.inner <= d && d < self.outer
    }

    pub fn is_ball(&self) -> bool {
        self.inner == 0.0
    }
}

/// `ψ_{R,w}(p)`: `φ_w(θ_{t,w} p) - 1/2` on `B_w(2R)` with `t = 1/tan(2R)`, zero outside.
pub fn psi(outer: f64, w: &ProjectivePoint, p: &ProjectivePoint) -> Result<f64> {
    if !(outer > 0.0 && outer < FRAC_PI_4) {
        return Err(Error::OutOfRange(format!("outer radius must lie in (0, π/4), got {outer}")));
    }
    let d = fs_distance(w, p)?;
    if d >= 2.0 * outer {
        return Ok(0.0);
    }
    let t = 1.0 / (2.0 * outer).tan();
    let v = model_eigenfunction(w, &theta_flow(t, w, p)?)? - 0.5;
    Ok(v.clamp(0.0, 0.5))
}

/// `ψ̄_{r,w}(p)`: zero on `B_w(r/2)`, `(φ_w(θ_{t,w} p) + 1)^{-1} - 2/3` outside,
/// with `t = 1/tan(r/2)`.
pub fn psi_bar(inner: f64, w: &ProjectivePoint, p: &ProjectivePoint) -> Result<f64> {
    if !(inner > 0.0 && inner < FRAC_PI_2) {
        return Err(Error::OutOfRange(format!("inner radius must lie in (0, π/2), got {inner}")));
    }
    let d = fs_distance(w, p)?;
    if d < 0.5 * inner {
        return Ok(0.0);
    }
    let t = 1.0 / (0.5 * inner).tan();
    let v = 1.0 / (model_eigenfunction(w, &theta_flow(t, w, p)?)? + 1.0) - 2.0 / 3.0;
    Ok(v.clamp(0.0, 1.0 / 3.0))
}

/// `u_A = ψ_{R,w} ψ̄_{r,w}`, or `ψ_{R,w}` alone when the inner radius is zero.
pub fn annulus_cutoff(a: &Annulus, p: &ProjectivePoint) -> Result<f64> {
    if !(a.inner >= 0.0 && a.outer > a.inner) {
        return Err(Error::MalformedAnnulus(format!("inner={}, outer={}", a.inner, a.outer)));
    }
    if a.outer >= FRAC_PI_4 {
        return Err(Error::MalformedAnnulus(format!(
            "outer radius {} must be below π/4 for the cutoff",
            a.outer
        )));
    }
    let outer = psi(a.outer, &a.center, p)?;
    if a.is_ball() || outer == 0.0 {
        return Ok(outer);
    }
    Ok(outer * psi_bar(a.inner, &a.center, p)?)
}

/// Value of `φ_w∘θ` on `∂B_w(R)` for the `ψ` dilation: `(1 + tan²R/tan²2R)^{-1}`.
pub fn psi_boundary_profile(outer: f64) -> f64 {
    1.0 / (1.0 + (outer.tan() / (2.0 * outer).tan()).powi(2))
}

/// Value of `φ_w∘θ` on `∂B_w(r)` for the `ψ̄` dilation: `(1 + tan²r/tan²(r/2))^{-1}`.
pub fn psi_bar_boundary_profile(inner: f64) -> f64 {
    1.0 / (1.0 + (inner.tan() / (0.5 * inner).tan()).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chart_to_point;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_8};

    /// A point at distance `d` from `w` in a random direction of the chart.
    fn at_distance<R: Rng>(w: &ProjectivePoint, d: f64, rng: &mut R) -> ProjectivePoint {
        let m = w.dim();
        let dir: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let n = crate::geometry::norm(&dir);
        let zeta: Vec<Complex64> = dir.iter().map(|z| z * (d.tan() / n)).collect();
        chart_to_point(w, &zeta).unwrap()
    }

    #[test]
    fn psi_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = ProjectivePoint::random(2, &mut rng);
        assert_abs_diff_eq!(psi(0.3, &w, &w).unwrap(), 0.5, epsilon = 1e-14);
        let edge = at_distance(&w, 0.6, &mut rng);
        assert_abs_diff_eq!(psi(0.3, &w, &edge).unwrap(), 0.0, epsilon = 1e-9);
        let p = at_distance(&w, FRAC_PI_8, &mut rng);
        let expected = FRAC_PI_8.cos().powi(2) - 0.5;
        assert_abs_diff_eq!(expected, 0.35355339059327373, epsilon = 1e-15);
        assert_abs_diff_eq!(psi(FRAC_PI_8, &w, &p).unwrap(), expected, epsilon = 1e-12);
        assert!(psi(FRAC_PI_4, &w, &p).is_err());
        assert!(psi(0.0, &w, &p).is_err());
    }

    #[test]
    fn psi_bar_examples() {
        let w = ProjectivePoint::from_real(&[1.0, 0.0, 0.0]).unwrap();
        let cut = ProjectivePoint::from_real(&[0.0, 0.6, 0.8]).unwrap();
        assert_abs_diff_eq!(psi_bar(0.9, &w, &cut).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let half = at_distance(&w, 0.45, &mut rng);
        assert_abs_diff_eq!(psi_bar(0.9, &w, &half).unwrap(), 0.0, epsilon = 1e-9);
        let p = at_distance(&w, FRAC_PI_3, &mut rng);
        assert_abs_diff_eq!(psi_bar(FRAC_PI_3, &w, &p).unwrap(), 8.0 / 33.0, epsilon = 1e-12);
        assert!(psi_bar(FRAC_PI_2, &w, &p).is_err());
    }

    #[test]
    fn composition_matches_closed_form() {
        // φ∘θ_t at distance d equals (1 + t² tan² d)^{-1}.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let w = ProjectivePoint::random(rng.random_range(1..4), &mut rng);
            let outer = rng.random_range(0.01..FRAC_PI_4 - 0.01);
            let d = rng.random_range(0.0..2.0 * outer);
            let p = at_distance(&w, d, &mut rng);
            let t = 1.0 / (2.0 * outer).tan();
            let closed = 1.0 / (1.0 + (t * d.tan()).powi(2)) - 0.5;
            assert_abs_diff_eq!(psi(outer, &w, &p).unwrap(), closed.max(0.0), epsilon = 1e-9);
        }
    }

    #[test]
    fn annulus_cutoff_support_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = ProjectivePoint::random(1, &mut rng);
        let a = Annulus::new(w.clone(), 0.2, 0.5).unwrap();
        let outside = at_distance(&w, 1.05, &mut rng);
        assert_eq!(annulus_cutoff(&a, &outside).unwrap(), 0.0);
        let inside_hole = at_distance(&w, 0.05, &mut rng);
        assert_eq!(annulus_cutoff(&a, &inside_hole).unwrap(), 0.0);
        for _ in 0..500 {
            let d = rng.random_range(0.0..FRAC_PI_2);
            let p = at_distance(&w, d, &mut rng);
            let u = annulus_cutoff(&a, &p).unwrap();
            assert!((0.0..=CUTOFF_UPPER).contains(&u));
            if a.contains_distance(d) {
                assert!(u >= CUTOFF_LOWER, "u={u} at d={d}");
            }
            if !a.doubled().contains_distance(d) {
                assert_eq!(u, 0.0);
            }
        }
        let bad = Annulus { center: w.clone(), inner: 0.1, outer: 0.9 };
        assert!(annulus_cutoff(&bad, &w).is_err());
        assert!(Annulus::new(w, 0.5, 0.5).is_err());
    }

    #[test]
    fn ball_cutoff_is_bare_psi() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = ProjectivePoint::random(2, &mut rng);
        let a = Annulus::new(w.clone(), 0.0, 0.4).unwrap();
        let p = at_distance(&w, 0.3, &mut rng);
        assert_eq!(annulus_cutoff(&a, &p).unwrap(), psi(0.4, &w, &p).unwrap());
        assert_abs_diff_eq!(annulus_cutoff(&a, &w).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn doubled_annulus() {
        let a = Annulus::new(0usize, 0.2, 0.3).unwrap();
        let d = a.doubled();
        assert_eq!((d.inner, d.outer), (0.1, 0.6));
        assert!(a.contains_distance(0.2) && !a.contains_distance(0.3));
    }

    #[test]
    fn boundary_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let w = ProjectivePoint::random(2, &mut rng);
            let outer = rng.random_range(0.01..FRAC_PI_4 - 1e-3);
            let p = at_distance(&w, outer, &mut rng);
            assert_abs_diff_eq!(
                psi(outer, &w, &p).unwrap(),
                psi_boundary_profile(outer) - 0.5,
                epsilon = 1e-9
            );
            let inner = rng.random_range(0.01..FRAC_PI_2 - 1e-3);
            let q = at_distance(&w, inner, &mut rng);
            assert_abs_diff_eq!(
                psi_bar(inner, &w, &q).unwrap(),
                1.0 / (psi_bar_boundary_profile(inner) + 1.0) - 2.0 / 3.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn boundary_profile_limits() {
        // Monotone approach to 4/5 and 1/5 as the radius shrinks.
        let radii = [0.5, 0.2, 0.1, 0.03, 0.01, 1e-3];
        let psi_vals: Vec<f64> = radii.iter().map(|&r| psi_boundary_profile(r)).collect();
        let bar_vals: Vec<f64> = radii.iter().map(|&r| psi_bar_boundary_profile(r)).collect();
        assert!(psi_vals.windows(2).all(|w| w[1] <= w[0]));
        assert!(bar_vals.windows(2).all(|w| w[1] >= w[0]));
        assert_abs_diff_eq!(psi_vals[5] - 0.5, PSI_LOWER, epsilon = 1e-4);
        assert_abs_diff_eq!(bar_vals[5], 0.2, epsilon = 1e-4);
        assert!(psi_vals.iter().all(|v| v - 0.5 >= PSI_LOWER));
        assert!(bar_vals.iter().all(|v| 1.0 / (v + 1.0) - 2.0 / 3.0 >= PSI_BAR_LOWER));
    }

    #[test]
    fn radial_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let w = ProjectivePoint::random(2, &mut rng);
            let dir: Vec<Complex64> = (0..2)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let n = crate::geometry::norm(&dir);
            let (outer, inner) = (rng.random_range(0.05..0.75), rng.random_range(0.05..1.5));
            let mut prev = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..200 {
                let d = FRAC_PI_2 * 0.999 * k as f64 / 199.0;
                let zeta: Vec<Complex64> = dir.iter().map(|z| z * (d.tan() / n)).collect();
                let p = chart_to_point(&w, &zeta).unwrap();
                let (a, b) = (psi(outer, &w, &p).unwrap(), psi_bar(inner, &w, &p).unwrap());
                assert!(a <= prev.0 + 1e-12 && b >= prev.1 - 1e-12);
                prev = (a, b);
            }
        }
    }
}
