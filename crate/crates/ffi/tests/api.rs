use std::ffi::{c_char, CString};
use std::ptr;

use gzk_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { gzk_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn grid(n: usize, l: f64) -> *mut GzkGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { gzk_grid_new(n, l, &mut g) }, GzkStatus::Ok);
    g
}

fn samples(f: *const GzkField, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    assert_eq!(unsafe { gzk_field_samples(f, out.as_mut_ptr(), len) }, GzkStatus::Ok);
    out
}

#[test]
fn invalid_grid_reports_status_and_message() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { gzk_grid_new(15, 10.0, &mut g) }, GzkStatus::InvalidGrid);
    assert!(g.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { gzk_grid_new(16, 10.0, ptr::null_mut()) }, GzkStatus::NullPointer);
}

#[test]
fn samples_round_trip_and_size_checks() {
    let g = grid(8, 10.0);
    let mut len = 0;
    assert_eq!(unsafe { gzk_grid_len(g, &mut len) }, GzkStatus::Ok);
    assert_eq!(len, 512);
    let data: Vec<f64> = (0..len).map(|i| (i as f64).sin()).collect();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { gzk_field_from_samples(g, data.as_ptr(), len, &mut f) }, GzkStatus::Ok);
    assert_eq!(samples(f, len), data);
    let mut short = vec![0.0; 10];
    assert_eq!(unsafe { gzk_field_samples(f, short.as_mut_ptr(), 10) }, GzkStatus::SizeMismatch);
    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { gzk_field_from_samples(g, data.as_ptr(), 100, &mut bad) }, GzkStatus::SizeMismatch);
    unsafe {
        gzk_field_free(f);
        gzk_grid_free(g);
        gzk_field_free(ptr::null_mut());
    }
}

#[test]
fn propagation_preserves_l2_and_inverts() {
    let g = grid(16, 20.0);
    let mut phi = ptr::null_mut();
    assert_eq!(unsafe { gzk_profile(g, 2.0, &mut phi) }, GzkStatus::Ok);
    let (mut fwd, mut back) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(gzk_propagate(phi, 0.7, &mut fwd), GzkStatus::Ok);
        assert_eq!(gzk_propagate(fwd, -0.7, &mut back), GzkStatus::Ok);
        let (mut a, mut b) = (0.0, 0.0);
        gzk_lebesgue_norm(phi, 2.0, &mut a);
        gzk_lebesgue_norm(fwd, 2.0, &mut b);
        assert!((a - b).abs() < 1e-12 * a);
        let s0 = samples(phi, 4096);
        let s1 = samples(back, 4096);
        assert!(s0.iter().zip(&s1).all(|(x, y)| (x - y).abs() < 1e-12));
        let mut h1 = 0.0;
        assert_eq!(gzk_sobolev_norm(phi, 1.0, &mut h1), GzkStatus::Ok);
        assert!(h1 > a);
        assert_eq!(gzk_lebesgue_norm(phi, 0.5, &mut a), GzkStatus::InvalidArgument);
        for p in [phi, fwd, back] {
            gzk_field_free(p);
        }
        gzk_grid_free(g);
    }
}

#[test]
fn integrate_conserves_mean() {
    let g = grid(16, 10.0);
    let n = 16usize;
    let h = 10.0 / n as f64;
    let mut data = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let [x, y, z] = [i, j, k].map(|v| -5.0 + v as f64 * h);
                data.push(0.1 * (-(x * x + y * y + z * z) / 2.0).exp());
            }
        }
    }
    let mut u0 = ptr::null_mut();
    let mut u1 = ptr::null_mut();
    let cfg = GzkSolverConfig {
        k: 1,
        dt: 0.05,
        t_end: 0.5,
        dealias_fraction: 2.0 / 3.0,
        cfl_constant: 1.0,
        nonlinear: 1,
    };
    unsafe {
        gzk_field_from_samples(g, data.as_ptr(), data.len(), &mut u0);
        assert_eq!(gzk_integrate(u0, &cfg, &mut u1), GzkStatus::Ok);
        let (mut a, mut b) = (GzkInvariants::default(), GzkInvariants::default());
        gzk_invariants(u0, 1, &mut a);
        gzk_invariants(u1, 1, &mut b);
        // The nonlinearity is a derivative, so the zero mode is exact.
        assert!((a.mean - b.mean).abs() < 1e-12 * a.mean.abs());
        assert!((a.mass - b.mass).abs() < 1e-6 * a.mass);
        let bad = GzkSolverConfig { dt: -1.0, ..cfg };
        let mut none = ptr::null_mut();
        assert_ne!(gzk_integrate(u0, &bad, &mut none), GzkStatus::Ok);
        assert!(none.is_null());
        gzk_field_free(u0);
        gzk_field_free(u1);
        gzk_grid_free(g);
    }
}

#[test]
fn oscillation_and_datum() {
    let g = grid(32, 20.0);
    let mut u0 = ptr::null_mut();
    unsafe {
        assert_eq!(gzk_blowup_datum(g, 3, 2, 2.0, &mut u0), GzkStatus::Ok);
        let mut score = -1.0;
        assert_eq!(gzk_gradient_oscillation(u0, 2.5, &mut score), GzkStatus::Ok);
        assert!(score >= 0.0);
        assert_eq!(gzk_gradient_oscillation(u0, 0.1, &mut score), GzkStatus::InvalidArgument);
        assert!(last_error().contains("delta"));
        gzk_field_free(u0);
        gzk_grid_free(g);
    }
}

#[test]
fn experiment_runs_through_c_strings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("zero.toml");
    std::fs::write(
        &cfg_path,
        "schema_version = 1\nexperiment = \"simulate\"\noutput_dir = \"zero\"\n[grid]\nn_axis = 8\nbox_len = 10.0\n\
         [solver]\nt_end = 0.1\ndt = 0.05\n[data]\nkind = \"zero\"\n",
    )
    .unwrap();
    let path = CString::new(cfg_path.to_str().unwrap()).unwrap();
    let root = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut outcome = GzkOutcome::Fail;
    assert_eq!(unsafe { gzk_run_experiment(path.as_ptr(), root.as_ptr(), &mut outcome) }, GzkStatus::Ok);
    assert_eq!(outcome, GzkOutcome::Pass);
    assert!(dir.path().join("zero/manifest.json").exists());
    let missing = CString::new("/nonexistent/cfg.toml").unwrap();
    assert_eq!(unsafe { gzk_run_experiment(missing.as_ptr(), ptr::null(), &mut outcome) }, GzkStatus::Io);
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gzk.h")).unwrap();
    for name in [
        "gzk_last_error_message",
        "gzk_grid_new",
        "gzk_grid_free",
        "gzk_grid_len",
        "gzk_field_from_samples",
        "gzk_field_samples",
        "gzk_field_free",
        "gzk_profile",
        "gzk_blowup_datum",
        "gzk_propagate",
        "gzk_lebesgue_norm",
        "gzk_sobolev_norm",
        "gzk_gradient_oscillation",
        "gzk_invariants",
        "gzk_integrate",
        "gzk_run_experiment",
        "typedef struct GzkGrid GzkGrid",
        "GZK_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
