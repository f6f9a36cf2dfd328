mod common;

use common::{load_map, q};
use invdens::certify::{l1_error, linf_error, CertifyError, L1Inputs, LinfInputs};
use invdens::matrix::NormKind;
use invdens::report::report;
use invdens::{run_pipeline, Certificate, PipelineConfig};

fn l1(k: usize, eps_num: f64) -> L1Inputs {
    L1Inputs { b: 40.0, k, n_true: 14, n_eps: 13, nnz: 5, eps: 1e-10, eps_num, float_ledger: 1e-11 }
}

#[test]
fn eps_rig_is_the_upward_sum_of_its_components() {
    let map = load_map("linear_17_5");
    let r = run_pipeline(&map, &PipelineConfig::new(NormKind::L1, 256, "linear_17_5")).unwrap();
    let c = &r.certificate;
    let e = &c.err_components;
    // smallest float not below the exact sum
    let exact = &(&q(e.discretization) + &q(e.matrix)) + &q(e.numeric);
    assert!(q(c.eps_rig) >= exact);
    let below = f64::from_bits(c.eps_rig.to_bits() - 1);
    assert!(q(below) < exact, "{} is not the upward rounded sum", c.eps_rig);
    assert!(e.numeric >= c.eps_num + e.float_ledger);
}

#[test]
fn error_grows_with_eps_num_and_shrinks_with_k() {
    let mut last = 0.0;
    for e in [0.0, 1e-6, 1e-5, 1e-4, 1e-3] {
        let t = l1_error(&l1(1 << 16, e)).total();
        assert!(t >= last);
        last = t;
    }
    let a = l1_error(&l1(1 << 12, 1e-4)).discretization;
    let b = l1_error(&l1(1 << 13, 1e-4)).discretization;
    assert!(b <= a / 2.0 * (1.0 + 1e-15));
}

#[test]
fn linf_formula_by_hand() {
    let x = LinfInputs { k: 100, n_true: 1, m: 1.0, d: 0.0, b_one: 0.0, alpha: 0.5, b: 0.0, eps: 0.0, sup_density: 1.0, eps_num: 0.0, float_ledger: 0.0 };
    let e = linf_error(&x).unwrap();
    assert!((e.total() - 0.08).abs() < 1e-15);
    assert_eq!(linf_error(&LinfInputs { alpha: 1.0, ..x }), Err(CertifyError::AlphaTooLarge(1.0)));
}

#[test]
fn lyapunov_contains_exact_exponents() {
    for (name, exact) in [("tripling", 3f64.ln()), ("linear_17_5", (17.0f64 / 5.0).ln())] {
        let map = load_map(name);
        for k in [32, 64, 256] {
            let r = run_pipeline(&map, &PipelineConfig::new(NormKind::L1, k, name)).unwrap();
            let l = r.lyapunov.unwrap();
            assert!(l.lo() <= exact && exact <= l.hi(), "{name} k = {k}: [{}, {}]", l.lo(), l.hi());
            assert_eq!(l.iterate, 1);
        }
    }
}

#[test]
fn uniform_density_of_tripling() {
    let r = run_pipeline(&load_map("tripling"), &PipelineConfig::new(NormKind::L1, 243, "tripling")).unwrap();
    assert!(r.density.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(r.certificate.eps_rig.is_finite());
}

#[test]
fn certificate_json_round_trips() {
    let r = run_pipeline(&load_map("quadratic_lorenz"), &PipelineConfig::new(NormKind::L1, 128, "quadratic_lorenz")).unwrap();
    let json = serde_json::to_string(&r.certificate).unwrap();
    let back: Certificate = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r.certificate);
    let keys = ["mode", "map_id", "k", "nu", "eps", "eps_num", "nnz_max", "l", "n_eps", "n_true", "lambda", "b_prime", "b", "err_components", "eps_rig", "lyap"];
    let mut at = 0;
    for key in keys {
        let pos = json[at..].find(&format!("\"{key}\":")).unwrap_or_else(|| panic!("{key} missing or out of order"));
        at += pos + 1;
    }
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v.as_object().unwrap().len(), keys.len());
    let rep = report(&r.certificate, r.lyapunov.as_ref(), &r.density, &r.ly);
    let back: invdens::report::CertificateReport = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn table_rows_follow_the_run() {
    let map = load_map("quadratic_lorenz");
    let mut cfg = PipelineConfig::new(NormKind::L1, 64, "quadratic_lorenz");
    let r = run_pipeline(&map, &cfg).unwrap();
    let table = report(&r.certificate, r.lyapunov.as_ref(), &r.density, &r.ly).render_table();
    for key in ["lambda", "B'", "eps_num", "N_eps", "eps_rig", "L_exp"] {
        assert!(table.contains(key), "{key} missing:\n{table}");
    }
    cfg.lyapunov = false;
    let r = run_pipeline(&map, &cfg).unwrap();
    assert!(r.certificate.lyap.is_none());
    let table = report(&r.certificate, None, &r.density, &r.ly).render_table();
    assert!(!table.contains("L_exp"));
}

#[test]
fn linf_run_reports_its_extras() {
    let map = load_map("sine_perturbation");
    let r = run_pipeline(&map, &PipelineConfig::new(NormKind::Linf, 256, "sine_perturbation")).unwrap();
    assert!(r.certificate.nu.is_none() && r.certificate.b_prime.is_none());
    let table = report(&r.certificate, r.lyapunov.as_ref(), &r.density, &r.ly).render_table();
    for key in ["B1", "M", "alpha", "lin_err"] {
        assert!(table.contains(key), "{key} missing:\n{table}");
    }
}
