//! Acceptance checks, one line each: `PASS name: detail` or `FAIL name: detail`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use eigenbound::fem::{assemble, MassKind};
use eigenbound::holomorphic::{moment_energy, pullback_area, RationalCurveMap};
use eigenbound::mesh::{flat_torus, icosphere};
use eigenbound::packing::{pack_annuli, uniform_projective_cloud, verify_packing};
use eigenbound::spectra::{spectrum, weyl_slope};
use eigenbound::verify::{self, CertificateReport, ExperimentConfig};
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Named = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn failures(r: &CertificateReport) -> String {
    r.failures()
        .iter()
        .take(5)
        .map(|c| format!("{}: {:.6e} vs {:.6e}", c.name, c.lhs, c.rhs))
        .collect::<Vec<_>>()
        .join("; ")
}

fn sphere_spectrum() -> Outcome {
    let start = Instant::now();
    let mesh = icosphere(5, 0.5).unwrap();
    let (s, m) = assemble(&mesh, MassKind::Consistent).unwrap();
    let eig = spectrum(&s, &m, 11).unwrap().eigenvalues;
    let expected: Vec<f64> = [(1, 3), (2, 5), (3, 7)]
        .iter()
        .flat_map(|&(l, mult)| std::iter::repeat_n(4.0 * (l * (l + 1)) as f64, mult))
        .take(10)
        .collect();
    let worst = eig[1..]
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst <= 0.02 && secs < 60.0,
        format!("max relative error {worst:.3e} over the first ten nonzero eigenvalues in {secs:.1} s"),
    )
}

fn bly_equality() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.mesh.level = 6;
    cfg.bly.bumpy_cases = 0;
    let r = verify::bly_check(&cfg).unwrap();
    let c = r.records[0].checks.iter().find(|c| c.name == "bly.round_equality").unwrap();
    ensure(c.pass && r.recheck(), format!("round ratio λ₁/bound = {:.6}", c.lhs))
}

fn bly_inequality() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.bly.bumpy_cases = 20;
    cfg.conformal.bumpy = true;
    let r = verify::bly_check(&cfg).unwrap();
    let worst = r.metric("max_ratio").unwrap();
    ensure(
        r.all_pass && r.records.len() == 21,
        format!("{} bumpy metrics, max ratio {worst:.6}", r.records.len()),
    )
}

fn moment_energy_identity() -> Outcome {
    let mesh = icosphere(6, 0.5).unwrap();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (deg, map) in [
        (1, RationalCurveMap::identity()),
        (2, RationalCurveMap::monomial_power(2)),
        (3, RationalCurveMap::random(1, 3, 7).unwrap()),
    ] {
        let exact = PI * deg as f64;
        let area = pullback_area(&map, &mesh).unwrap();
        let raw = moment_energy(&map, &mesh).unwrap();
        let err = ((area - exact) / exact).abs().max(((raw - 4.0 * exact) / (4.0 * exact)).abs());
        worst = worst.max(err);
        ok &= err <= 0.01;
    }
    ensure(ok, format!("degrees 1-3, max relative error {worst:.3e}"))
}

fn suite_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.suite.gradient_samples = 1000;
    cfg.suite.flow_samples = 10_000;
    cfg.suite.cutoff_samples = 50_000;
    cfg.suite.m_values = vec![1, 2, 3];
    cfg
}

fn flow_suite() -> Outcome {
    let cfg = suite_config();
    let r = verify::geometry_suite(&cfg.suite, cfg.seed).unwrap();
    let grad = r.check("flow.gradient_finite_difference").unwrap();
    let tan = r.check("flow.tan_rho_equals_t_tan_r").unwrap();
    let radius = r.check("flow.ball_image_radius").unwrap();
    ensure(
        grad.pass && tan.pass && radius.pass,
        format!(
            "gradient FD error {:.3e} (1000 points), tan ρ relative error {:.3e} and radius error {:.3e} (10000 samples)",
            grad.lhs, tan.lhs, radius.lhs
        ),
    )
}

fn cutoff_bounds() -> Outcome {
    let cfg = suite_config();
    let r = verify::geometry_suite(&cfg.suite, cfg.seed).unwrap();
    let names = [
        "cutoff.psi_lower_bound",
        "cutoff.psi_bar_lower_bound",
        "cutoff.annulus_lower_bound",
        "cutoff.annulus_upper_bound",
    ];
    let checks: Vec<_> = names.iter().map(|n| r.check(n).unwrap()).collect();
    let total = r.metric("cutoff_samples_total").unwrap();
    ensure(
        checks.iter().all(|c| c.pass) && total >= 2e5,
        format!(
            "{total} samples over m = 1, 2, 3; violations: {}",
            checks.iter().filter(|c| !c.pass).count()
        ),
    )
}

fn packing() -> Outcome {
    let sizes = [4000, 7000, 10_000];
    let results: Vec<(f64, Option<String>)> = [1usize, 2]
        .into_iter()
        .flat_map(|m| (0..20).map(move |i| (m, i)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|(m, cloud_index)| {
            let n = sizes[cloud_index % sizes.len()];
            let seed = 1000 * m as u64 + cloud_index as u64;
            let cloud = uniform_projective_cloud(m, n, seed).unwrap();
            [1, 2, 4, 8, 16].into_iter().map(move |k| {
                let r = pack_annuli(&cloud, k, 0.01).unwrap();
                let v = verify_packing(&cloud, &r, 0.01);
                let ok = r.satisfied && v.ok() && r.annuli.len() == k;
                (v.min_fraction, (!ok).then(|| format!("m={m} seed={seed} k={k}")))
            })
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let bad: Vec<&String> = results.iter().filter_map(|r| r.1.as_ref()).collect();
    ensure(
        bad.is_empty(),
        format!("{} packings verified, min μ(A_i)·k/μ(X) = {worst:.4}; failures: {bad:?}", results.len()),
    )
}

fn certify_chain() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.mesh.level = 6;
    cfg.certify.cases = 50;
    let r = verify::certify(&cfg).unwrap();
    let chain_ok = r.records.iter().all(|rec| {
        ["a.", "b.", "c.", "d."]
            .iter()
            .all(|p| rec.checks.iter().filter(|c| c.name.starts_with(p)).all(|c| c.pass))
            && rec.checks.iter().any(|c| c.name == "d.min_max")
    });
    let energy = r
        .records
        .iter()
        .flat_map(|rec| rec.checks.iter().filter(|c| c.name == "a.energy_fraction"))
        .map(|c| c.lhs)
        .fold(0.0, f64::max);
    let slack = r.metric("max_slack_fraction").unwrap();
    ensure(
        chain_ok && r.all_pass && r.records.len() == 50 && r.recheck(),
        format!(
            "{} cases, max energy fraction {energy:.4}, max slack fraction {slack:.4}; {}",
            r.records.len(),
            failures(&r)
        ),
    )
}

fn korevaar() -> Outcome {
    let cfg = ExperimentConfig::default();
    let r = verify::korevaar_sweep(&cfg).unwrap();
    let round = r.check("korevaar.round_identity_k1").unwrap();
    let cases = r.records.iter().map(|rec| rec.case).max().unwrap() + 1;
    ensure(
        r.all_pass && cases == 50,
        format!(
            "{cases} cases, empirical max {:.4} against certified {:.4e}; round identity k=1 gives {:.6} (8π = {:.6})",
            r.metric("empirical_c_star").unwrap(),
            r.metric("certified_constant").unwrap(),
            round.lhs,
            8.0 * PI
        ),
    )
}

fn weyl() -> Outcome {
    let sphere = icosphere(5, 0.5).unwrap();
    let torus = flat_torus(100, 100, 1.0, 1.0).unwrap();
    let mut slopes = Vec::new();
    for mesh in [&sphere, &torus] {
        let (s, m) = assemble(mesh, MassKind::Consistent).unwrap();
        let d = spectrum(&s, &m, 200).unwrap();
        slopes.push(weyl_slope(&d, mesh).unwrap());
    }
    ensure(
        slopes.iter().all(|s| (0.9..=1.1).contains(s)),
        format!("sphere slope {:.4}, torus slope {:.4}", slopes[0], slopes[1]),
    )
}

fn main() {
    let checks: [Named; 10] = [
        ("sphere spectrum", sphere_spectrum),
        ("first eigenvalue equality at the round metric", bly_equality),
        ("first eigenvalue bound on bumpy metrics", bly_inequality),
        ("moment map energy equals π·deg", moment_energy_identity),
        ("dilation flow and gradient flow", flow_suite),
        ("cutoff bounds", cutoff_bounds),
        ("annuli packing", packing),
        ("constructive chain", certify_chain),
        ("normalized eigenvalue sweep", korevaar),
        ("Weyl slope", weyl),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in checks {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
