//! Sampled property suites for the projective geometry and the cutoffs.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use super::config::SuiteConfig;
use super::report::{Check, CertificateReport};
use crate::cutoff::{annulus_cutoff, psi, psi_bar, Annulus, CUTOFF_LOWER, CUTOFF_UPPER, PSI_BAR_LOWER};
use crate::error::Result;
use crate::geometry::{
    ball_image_radius, chart_kahler_form, chart_model_gradient, chart_to_point, fs_distance, moment_map,
    pluecker_embed, point_to_chart, random_special_unitary, theta_flow, ProjectivePoint,
};

/// Worst sample of a property, tracked as the largest `defect`.
struct Worst {
    defect: f64,
    sample: serde_json::Value,
}

impl Worst {
    fn new() -> Self {
        Self {
            defect: f64::NEG_INFINITY,
            sample: serde_json::Value::Null,
        }
    }

    fn update(&mut self, defect: f64, sample: impl FnOnce() -> serde_json::Value) {
        if defect > self.defect || defect.is_nan() {
            self.defect = if defect.is_nan() { f64::INFINITY } else { defect };
            self.sample = sample();
        }
    }

    /// Passes when the worst defect is at most `tol`.
    fn check(self, name: &str, tol: f64, samples: usize) -> Check {
        let c = Check::le(name, self.defect, tol);
        let detail = if c.pass {
            format!("{samples} samples")
        } else {
            format!("{samples} samples; worst {}", self.sample)
        };
        c.with_detail(detail)
    }
}

fn unit_direction(m: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// A point at distance `d < π/2` from `w`.
fn point_at(w: &ProjectivePoint, d: f64, rng: &mut ChaCha8Rng) -> Result<ProjectivePoint> {
    let dir = unit_direction(w.dim(), rng);
    let zeta: Vec<Complex64> = dir.iter().map(|z| z * d.tan()).collect();
    chart_to_point(w, &zeta)
}

fn coords(p: &ProjectivePoint) -> Vec<[f64; 2]> {
    p.coords().iter().map(|z| [z.re, z.im]).collect()
}

fn moment_defect(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Metric axioms, unitary invariance and Plücker basis independence.
fn metric_checks(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) -> Result<()> {
    let n = cfg.samples;
    let (mut sym, mut tri, mut diam, mut ident, mut equi) = (Worst::new(), Worst::new(), Worst::new(), Worst::new(), Worst::new());
    let mut pl = Worst::new();
    for &m in &cfg.m_values {
        let c = random_special_unitary(m + 1, rng);
        for _ in 0..n {
            let (p, q, r) = (
                ProjectivePoint::random(m, rng),
                ProjectivePoint::random(m, rng),
                ProjectivePoint::random(m, rng),
            );
            let (pq, qp, qr, pr) = (fs_distance(&p, &q)?, fs_distance(&q, &p)?, fs_distance(&q, &r)?, fs_distance(&p, &r)?);
            let s = || json!({"m": m, "p": coords(&p), "q": coords(&q), "r": coords(&r)});
            sym.update((pq - qp).abs(), s);
            tri.update(pr - pq - qr, s);
            diam.update(pq - FRAC_PI_2, s);
            ident.update(fs_distance(&p, &p)?, s);
            let moved = fs_distance(&p.transform(&c)?, &q.transform(&c)?)?;
            equi.update((moved - pq).abs(), s);
        }
        // Plücker coordinates of a 2-plane in C^{m+2} do not depend on the basis.
        for _ in 0..n / 10 {
            let dim = m + 2;
            let b: Vec<Vec<Complex64>> = (0..2).map(|_| unit_direction(dim, rng)).collect();
            let g: [Complex64; 4] = std::array::from_fn(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            if (g[0] * g[3] - g[1] * g[2]).norm() < 0.1 {
                continue;
            }
            let b2: Vec<Vec<Complex64>> = vec![
                (0..dim).map(|i| g[0] * b[0][i] + g[1] * b[1][i]).collect(),
                (0..dim).map(|i| g[2] * b[0][i] + g[3] * b[1][i]).collect(),
            ];
            let d = fs_distance(&pluecker_embed(&b)?, &pluecker_embed(&b2)?)?;
            pl.update(d, || json!({"m": m}));
        }
    }
    let total = n * cfg.m_values.len();
    out.push(sym.check("metric.symmetry", 1e-12, total));
    out.push(tri.check("metric.triangle_inequality", 1e-12, total));
    out.push(diam.check("metric.diameter", 1e-12, total));
    out.push(ident.check("metric.identity", 1e-7, total));
    out.push(equi.check("metric.unitary_invariance", 1e-10, total));
    out.push(pl.check("pluecker.basis_independence", 1e-7, total / 10));
    Ok(())
}

/// Moment map invariants, equivariance and the Kähler form identity.
fn moment_checks(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) -> Result<()> {
    let n = cfg.samples;
    let (mut trace, mut skew, mut proj, mut equi, mut form) = (Worst::new(), Worst::new(), Worst::new(), Worst::new(), Worst::new());
    let h = 1e-5;
    for &m in &cfg.m_values {
        for _ in 0..n {
            let p = ProjectivePoint::random(m, rng);
            let tau = moment_map(&p);
            let s = || json!({"m": m, "p": coords(&p)});
            trace.update((tau.trace() - Complex64::i()).norm(), s);
            skew.update(tau.anti_hermitian_defect(), s);
            proj.update(tau.projector_defect(), s);
            let c = random_special_unitary(m + 1, rng);
            let lhs = moment_map(&p.transform(&c)?).0;
            let rhs = &c * &tau.0 * c.adjoint();
            equi.update(moment_defect(&lhs, &rhs), s);
        }
        for _ in 0..n / 10 {
            let w = ProjectivePoint::random(m, rng);
            let r: f64 = rng.random_range(0.0..1.2);
            let zeta: Vec<Complex64> = unit_direction(m, rng).iter().map(|z| z * r.tan()).collect();
            let (u, v) = (unit_direction(m, rng), unit_direction(m, rng));
            let tau_at = |z: &[Complex64]| -> Result<DMatrix<Complex64>> { Ok(moment_map(&chart_to_point(&w, z)?).0) };
            let deriv = |dir: &[Complex64]| -> Result<DMatrix<Complex64>> {
                let plus: Vec<Complex64> = zeta.iter().zip(dir).map(|(z, d)| z + d * h).collect();
                let minus: Vec<Complex64> = zeta.iter().zip(dir).map(|(z, d)| z - d * h).collect();
                Ok((tau_at(&plus)? - tau_at(&minus)?) / Complex64::new(2.0 * h, 0.0))
            };
            let iu: Vec<Complex64> = u.iter().map(|z| z * Complex64::i()).collect();
            let iv: Vec<Complex64> = v.iter().map(|z| z * Complex64::i()).collect();
            let (du, diu, dv, div) = (deriv(&u)?, deriv(&iu)?, deriv(&v)?, deriv(&iv)?);
            let i = Complex64::i();
            let half = Complex64::new(0.5, 0.0);
            let holo = |d: &DMatrix<Complex64>, di: &DMatrix<Complex64>| (d - di * i) * half;
            let anti = |d: &DMatrix<Complex64>, di: &DMatrix<Complex64>| (d + di * i) * half;
            let (hu, au, hv, av) = (holo(&du, &diu), anti(&du, &diu), holo(&dv, &div), anti(&dv, &div));
            let dim = m + 1;
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                for l in 0..dim {
                    acc += hu[(j, l)] * av[(l, j)] - hv[(j, l)] * au[(l, j)];
                }
            }
            let lhs = -0.5 * i * acc;
            let rhs = chart_kahler_form(&zeta, &u, &v);
            form.update((lhs.re - rhs).abs().max(lhs.im.abs()), || {
                json!({"m": m, "w": coords(&w), "lhs": [lhs.re, lhs.im], "rhs": rhs})
            });
        }
    }
    let total = n * cfg.m_values.len();
    out.push(trace.check("moment.trace_is_i", 1e-12, total));
    out.push(skew.check("moment.anti_hermitian", 1e-12, total));
    out.push(proj.check("moment.projector", 1e-12, total));
    out.push(equi.check("moment.equivariance", 1e-10, total));
    out.push(form.check("moment.kahler_form", 1e-5, total / 10));
    Ok(())
}

/// Ball images under the dilation flow and the gradient-flow identity.
fn flow_checks(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) -> Result<()> {
    let (mut radius, mut tangent, mut fixed) = (Worst::new(), Worst::new(), Worst::new());
    for s in 0..cfg.flow_samples {
        let m = cfg.m_values[s % cfg.m_values.len()];
        let w = ProjectivePoint::random(m, rng);
        let r: f64 = rng.random_range(1e-3..FRAC_PI_2 - 1e-3);
        let t = 10f64.powf(rng.random_range(-2.0..2.0));
        let p = point_at(&w, r, rng)?;
        let rho = fs_distance(&w, &theta_flow(t, &w, &p)?)?;
        let sample = || json!({"m": m, "w": coords(&w), "t": t, "r": r, "rho": rho});
        radius.update((rho - ball_image_radius(t, r)?).abs(), sample);
        tangent.update((rho.tan() - t * r.tan()).abs() / (t * r.tan()), sample);
        fixed.update(fs_distance(&w, &theta_flow(t, &w, &w)?)?, sample);
    }
    out.push(radius.check("flow.ball_image_radius", 1e-9, cfg.flow_samples));
    out.push(tangent.check("flow.tan_rho_equals_t_tan_r", 1e-9, cfg.flow_samples));
    out.push(fixed.check("flow.fixes_base", 1e-9, cfg.flow_samples));

    // d/dτ θ_{e^{-2τ}} at τ = 0 equals the gradient of φ_w, read in the chart at w.
    let h: f64 = 1e-5;
    let mut grad = Worst::new();
    for s in 0..cfg.gradient_samples {
        let m = cfg.m_values[s % cfg.m_values.len()];
        let w = ProjectivePoint::random(m, rng);
        let r: f64 = rng.random_range(0.0..1.2);
        let zeta: Vec<Complex64> = unit_direction(m, rng).iter().map(|z| z * r.tan()).collect();
        let p = chart_to_point(&w, &zeta)?;
        let plus = point_to_chart(&w, &theta_flow((-2.0 * h).exp(), &w, &p)?)?.zeta;
        let minus = point_to_chart(&w, &theta_flow((2.0 * h).exp(), &w, &p)?)?.zeta;
        let g = chart_model_gradient(&zeta);
        let err = (0..m)
            .map(|i| ((plus[i] - minus[i]) / (2.0 * h) - g[i]).norm())
            .fold(0.0, f64::max);
        grad.update(err, || json!({"m": m, "w": coords(&w), "r": r}));
    }
    out.push(grad.check("flow.gradient_finite_difference", 1e-6, cfg.gradient_samples));
    Ok(())
}

/// Lower and upper bounds of `ψ`, `ψ̄` and `u_A`.
fn cutoff_checks(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) -> Result<()> {
    let n = cfg.cutoff_samples;
    let slack = 1e-12;
    let (mut lo_psi, mut lo_bar, mut lo_u, mut hi_u) = (Worst::new(), Worst::new(), Worst::new(), Worst::new());
    let (mut min_psi, mut min_bar, mut min_u, mut max_u) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, 0.0f64);
    for s in 0..n {
        let m = cfg.m_values[s % cfg.m_values.len()];
        let w = ProjectivePoint::random(m, rng);

        let outer: f64 = rng.random_range(1e-3..FRAC_PI_4 - 1e-3);
        let d = if s % 10 == 0 { outer } else { outer * rng.random::<f64>() };
        let p = point_at(&w, d, rng)?;
        let v = psi(outer, &w, &p)?;
        min_psi = min_psi.min(v);
        lo_psi.update(cfg.psi_lower - v, || json!({"m": m, "w": coords(&w), "R": outer, "d": d, "psi": v}));

        let inner: f64 = rng.random_range(1e-3..FRAC_PI_2 - 1e-3);
        let d = if s % 10 == 0 { inner } else { rng.random_range(inner..FRAC_PI_2 - 1e-6) };
        let p = point_at(&w, d, rng)?;
        let v = psi_bar(inner, &w, &p)?;
        min_bar = min_bar.min(v);
        lo_bar.update(PSI_BAR_LOWER - v, || json!({"m": m, "w": coords(&w), "r": inner, "d": d, "psi_bar": v}));

        let outer: f64 = rng.random_range(1e-3..FRAC_PI_4 - 1e-3);
        let inner = if s % 4 == 0 { 0.0 } else { outer * rng.random::<f64>() };
        let a = Annulus::new(w.clone(), inner, outer)?;
        let d = rng.random_range(inner..=outer);
        let p = point_at(&w, d, rng)?;
        let v = annulus_cutoff(&a, &p)?;
        min_u = min_u.min(v);
        lo_u.update(CUTOFF_LOWER - v, || json!({"m": m, "w": coords(&w), "r": inner, "R": outer, "d": d, "u": v}));

        let inner = outer * rng.random_range(1e-3..1.0);
        let a = Annulus::new(w.clone(), inner, outer)?;
        let d = rng.random_range(0.0..FRAC_PI_2 - 1e-6);
        let p = point_at(&w, d, rng)?;
        let v = annulus_cutoff(&a, &p)?;
        max_u = max_u.max(v);
        hi_u.update(v - CUTOFF_UPPER, || json!({"m": m, "w": coords(&w), "r": inner, "R": outer, "d": d, "u": v}));
    }
    let tagged = |c: Check, extreme: f64| {
        let detail = format!("{}; sampled extreme {extreme:.17e}", c.detail.clone().unwrap_or_default());
        c.with_detail(detail)
    };
    out.push(tagged(lo_psi.check("cutoff.psi_lower_bound", slack, n), min_psi));
    out.push(tagged(lo_bar.check("cutoff.psi_bar_lower_bound", slack, n), min_bar));
    out.push(tagged(lo_u.check("cutoff.annulus_lower_bound", slack, n), min_u));
    out.push(tagged(hi_u.check("cutoff.annulus_upper_bound", slack, n), max_u));
    Ok(())
}

/// Runs every property suite; `all_pass` is false on any violation.
pub fn geometry_suite(cfg: &SuiteConfig, seed: u64) -> Result<CertificateReport> {
    let mut report = CertificateReport::new("geometry-suite", seed, false);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    metric_checks(cfg, &mut rng, &mut report.checks)?;
    moment_checks(cfg, &mut rng, &mut report.checks)?;
    flow_checks(cfg, &mut rng, &mut report.checks)?;
    cutoff_checks(cfg, &mut rng, &mut report.checks)?;
    let total = 4 * cfg.cutoff_samples;
    report.push_metric("cutoff_samples_total", total as f64);
    report.push_metric("psi_lower_asserted", cfg.psi_lower);
    Ok(report.finalize())
}
