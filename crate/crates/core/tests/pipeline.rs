use std::f64::consts::PI;

use eigenbound::fem::{assemble, MassKind};
use eigenbound::holomorphic::{pushforward_measure, RationalCurveMap};
use eigenbound::mesh::{bumpy_conformal_factor, icosphere, load_mesh};
use eigenbound::packing::{pack_annuli, verify_packing};
use eigenbound::spectra::{spectrum, SpectralDecomposition};
use eigenbound::verify::{self, CertificateReport, ExperimentConfig};

#[test]
fn file_mesh_and_conformal_factor_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = icosphere(3, 0.5).unwrap();
    let factor = bumpy_conformal_factor(&mesh, 3, 2, 0.3).unwrap();
    let bumpy = mesh.clone().with_conformal_factor(factor).unwrap();
    let off = dir.path().join("sphere.off");
    let csv = dir.path().join("factor.csv");
    bumpy.write_off(&off).unwrap();
    bumpy.write_conformal_csv(&csv).unwrap();
    let reloaded = load_mesh(&off).unwrap();
    assert_eq!(reloaded.vertex_count(), mesh.vertex_count());

    let text = format!(
        "[mesh]\ngenerator = \"file\"\npath = \"{}\"\nconformal_csv = \"{}\"\n[bly]\nbumpy_cases = 0\n",
        off.display(),
        csv.display()
    );
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let built = cfg.build_mesh().unwrap();
    assert!((built.area() - bumpy.area()).abs() < 1e-9 * bumpy.area());
    let r = verify::bly_check(&cfg).unwrap();
    assert!(r.all_pass, "{:?}", r.failures());
    assert!(r.records[0].checks.iter().all(|c| c.name != "bly.round_equality"));
}

#[test]
fn pushforward_packing_on_a_cubic() {
    let mesh = icosphere(5, 0.5).unwrap();
    let map = RationalCurveMap::random(1, 3, 11).unwrap();
    let cloud = pushforward_measure(&map, &mesh).unwrap();
    assert!((cloud.total() - mesh.area()).abs() < 1e-9);
    for k in [1, 4, 8] {
        let r = pack_annuli(&cloud, k, 0.01).unwrap();
        assert!(r.satisfied && verify_packing(&cloud, &r, 0.01).ok(), "k = {k}");
    }
}

#[test]
fn eigenvectors_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = icosphere(3, 0.5).unwrap();
    let (s, m) = assemble(&mesh, MassKind::Consistent).unwrap();
    let d: SpectralDecomposition = spectrum(&s, &m, 5).unwrap();
    let (bin, header) = (dir.path().join("v.bin"), dir.path().join("v.json"));
    d.write_eigenvectors(&bin, &header).unwrap();
    assert_eq!(SpectralDecomposition::read_eigenvectors(&bin, &header).unwrap(), d.eigenvectors);
}

#[test]
fn stored_certificate_is_recomputable() {
    let mut cfg = ExperimentConfig::default();
    cfg.mesh.level = 4;
    cfg.k_values = vec![2, 5];
    let r = verify::certify(&cfg).unwrap();
    let back = CertificateReport::from_json(&r.to_json().unwrap()).unwrap();
    assert!(back.recheck());
    assert_eq!(back.all_pass, r.all_pass);
    for (a, b) in r.all_checks().zip(back.all_checks()) {
        assert_eq!(a.pass, b.pass);
        assert_eq!(a.lhs.to_bits(), b.lhs.to_bits());
    }
}

#[test]
fn certificate_margins_are_stable_under_refinement() {
    let margins = |level: u32| {
        let mut cfg = ExperimentConfig::default();
        cfg.mesh.level = level;
        cfg.k_values = vec![4];
        let r = verify::certify(&cfg).unwrap();
        assert!(r.all_pass, "level {level}: {:?}", r.failures());
        r.records[0]
            .checks
            .iter()
            .map(|c| (c.name.clone(), c.margin))
            .collect::<Vec<_>>()
    };
    let (coarse, fine) = (margins(5), margins(6));
    for ((name, a), (_, b)) in coarse.iter().zip(&fine) {
        if *a == 0.0 && *b == 0.0 {
            continue;
        }
        let ratio = a / b;
        assert!((0.5..=2.0).contains(&ratio), "{name}: {a} vs {b}");
    }
}

#[test]
fn eigenvalues_and_degree_scale_together() {
    let mut ratios = Vec::new();
    for scale in [0.25, 1.0, 4.0] {
        let mut cfg = ExperimentConfig::default();
        cfg.mesh.level = 4;
        cfg.conformal.bumpy = true;
        cfg.conformal.scale = scale;
        cfg.sweep.cases = 2;
        cfg.sweep.max_k = 4;
        cfg.sweep.round_tol = 5e-3;
        let r = verify::korevaar_sweep(&cfg).unwrap();
        let rec = r.records.iter().find(|rec| rec.case == 1 && rec.k == 3).unwrap();
        ratios.push((rec.lambda_k * scale, rec.degree_d * scale, rec.metric("ratio").unwrap()));
        assert!((rec.degree_d * rec.volume / PI - rec.deg.unwrap() as f64).abs() < 1e-9);
    }
    for w in ratios.windows(2) {
        assert!((w[0].0 / w[1].0 - 1.0).abs() < 1e-8);
        assert!((w[0].1 / w[1].1 - 1.0).abs() < 1e-12);
        assert!((w[0].2 / w[1].2 - 1.0).abs() < 1e-8);
    }
}
