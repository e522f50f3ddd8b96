use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use gauss_rdp_ffi::*;

fn last_error() -> Option<String> {
    let p = grdp_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn query(rate: f64, common: f64, perception: f64, measure: GrdpMeasure) -> *mut GrdpQuery {
    let mut q = ptr::null_mut();
    let st = unsafe { grdp_query_new(0.0, 1.0, rate, common, perception, measure as i32, &mut q) };
    assert_eq!(st, GrdpStatus::Ok);
    assert!(!q.is_null());
    q
}

fn zero_bound() -> GrdpBound {
    GrdpBound {
        value: 0.0,
        minimizer_sigma: 0.0,
        maximizer_alpha: 0.0,
    }
}

#[test]
fn bounds_match_the_library() {
    let q = query(0.1, 0.1, 0.3, GrdpMeasure::W2);
    let rq = gauss_rdp::RdpQuery::from_f64(
        gauss_rdp::GaussianSource::standard(),
        0.1,
        0.1,
        0.3,
        gauss_rdp::Measure::W2Sq,
    )
    .unwrap();
    let mut b = zero_bound();
    unsafe {
        assert_eq!(grdp_lower(q, &mut b), GrdpStatus::Ok);
        assert_eq!(b.value, gauss_rdp::bounds::lower(&rq).unwrap().value);
        assert!(b.maximizer_alpha.is_nan());
        assert_eq!(grdp_improved_lower(q, &mut b), GrdpStatus::Ok);
        let imp = gauss_rdp::bounds::improved_lower_w2(&rq).unwrap();
        assert_eq!(b.value, imp.value);
        assert_eq!(b.maximizer_alpha, imp.maximizer_alpha.unwrap());
        assert_eq!(grdp_upper(q, &mut b), GrdpStatus::Ok);
        assert_eq!(b.value, gauss_rdp::bounds::upper(&rq).unwrap().value);
        grdp_query_free(q);
    }
    assert_eq!(last_error(), None);
}

#[test]
fn errors_map_to_codes() {
    let mut q = ptr::null_mut();
    unsafe {
        assert_eq!(grdp_query_new(0.0, -1.0, 0.1, 0.0, 0.0, 1, &mut q), GrdpStatus::Domain);
        assert!(q.is_null());
        assert!(last_error().unwrap().contains("domain"));
        assert_eq!(grdp_query_new(0.0, 1.0, 0.1, 0.0, 0.0, 7, &mut q), GrdpStatus::Usage);
        assert_eq!(
            grdp_query_new(0.0, 1.0, f64::NAN, 0.0, 0.0, 0, &mut q),
            GrdpStatus::Domain
        );
        assert_eq!(
            grdp_query_new(0.0, 1.0, 0.1, 0.0, 0.0, 0, ptr::null_mut()),
            GrdpStatus::NullPointer
        );

        let q = query(0.1, 0.0, 0.1, GrdpMeasure::Kl);
        let mut b = zero_bound();
        assert_eq!(grdp_improved_lower(q, &mut b), GrdpStatus::Usage);
        assert_eq!(grdp_lower(ptr::null(), &mut b), GrdpStatus::NullPointer);
        assert_eq!(grdp_lower(q, ptr::null_mut()), GrdpStatus::NullPointer);
        assert_eq!(grdp_query_set_perception(q, -0.5), GrdpStatus::Domain);
        assert_eq!(grdp_query_set_perception(q, f64::INFINITY), GrdpStatus::Ok);
        assert_eq!(grdp_lower(q, &mut b), GrdpStatus::Ok);
        assert!((b.value - (-0.2f64).exp()).abs() < 1e-15);
        assert_eq!(last_error(), None);
        grdp_query_free(q);
        grdp_query_free(ptr::null_mut());
    }
}

#[test]
fn thresholds() {
    let (mut p, mut r) = (0.0, 0.0);
    unsafe {
        assert_eq!(grdp_threshold_perception(0.0, 1.0, 0.1, 0.1, &mut p), GrdpStatus::Ok);
        assert_eq!(grdp_threshold_rate(0.0, 1.0, 0.1, 0.1, &mut r), GrdpStatus::Ok);
        assert!((p - 0.692).abs() < 1e-3);
        assert!((r - 1.052).abs() < 1e-3);
        assert_eq!(grdp_threshold_rate(0.0, 1.0, 0.1, 2.0, &mut r), GrdpStatus::Ok);
        assert_eq!(r, 0.0);
    }
}

#[test]
fn binary_construction() {
    let (mut r, mut d) = (0.0, 0.0);
    unsafe {
        assert_eq!(grdp_binary_point(0.0, 1.0, 0.0, &mut r, &mut d), GrdpStatus::Ok);
        assert_eq!(r, std::f64::consts::LN_2);
        assert!((d - (std::f64::consts::PI - 2.0) / std::f64::consts::PI).abs() < 1e-12);
        let mut at = 0.0;
        assert_eq!(grdp_binary_at_rate(0.0, 1.0, 0.3, &mut at), GrdpStatus::Ok);
        assert!(at > (-0.6f64).exp() && at < 1.0);
        assert_eq!(grdp_binary_at_rate(0.0, 1.0, 1.0, &mut at), GrdpStatus::Domain);
    }
}

#[test]
fn mixture_and_transport_check() {
    let w = [0.5, 0.5];
    let m = [-0.5, 0.5];
    let s = [0.5, 0.5];
    let mut mix = ptr::null_mut();
    unsafe {
        assert_eq!(
            grdp_mixture_new(w.as_ptr(), m.as_ptr(), s.as_ptr(), 2, &mut mix),
            GrdpStatus::Ok
        );
        let (mut mean, mut var) = (1.0, 0.0);
        assert_eq!(grdp_mixture_moments(mix, &mut mean, &mut var), GrdpStatus::Ok);
        assert!(mean.abs() < 1e-15 && (var - 0.5).abs() < 1e-15);
        let mut rep = std::mem::zeroed::<GrdpTalagrandReport>();
        assert_eq!(grdp_talagrand_check(mix, 0.0, 1.0, &mut rep), GrdpStatus::Ok);
        assert!(rep.holds_refined && rep.holds_original);
        assert!(rep.rhs_refined <= rep.rhs_original);
        // mean mismatch violates the hypothesis
        assert_eq!(grdp_talagrand_check(mix, 1.0, 1.0, &mut rep), GrdpStatus::Precondition);
        grdp_mixture_free(mix);

        let bad = [0.0];
        let mut mix = ptr::null_mut();
        assert_eq!(
            grdp_mixture_new(bad.as_ptr(), bad.as_ptr(), bad.as_ptr(), 1, &mut mix),
            GrdpStatus::Domain
        );
        assert_eq!(
            grdp_mixture_new(ptr::null(), bad.as_ptr(), bad.as_ptr(), 1, &mut mix),
            GrdpStatus::NullPointer
        );
    }
}

#[test]
fn quantizer_handle() {
    let mut z = ptr::null_mut();
    unsafe {
        assert_eq!(grdp_ecsq_design(0.0, 1.0, 0.05, 6, 0, &mut z), GrdpStatus::Ok);
        let n = grdp_quantizer_len(z);
        assert!(n >= 2);
        let mut len = 0;
        assert_eq!(
            grdp_quantizer_levels(z, ptr::null_mut(), 0, &mut len),
            GrdpStatus::BufferTooSmall
        );
        assert_eq!(len, n);
        let mut levels = vec![0.0; n];
        let mut bounds = vec![0.0; n - 1];
        let mut probs = vec![0.0; n];
        assert_eq!(
            grdp_quantizer_levels(z, levels.as_mut_ptr(), n, &mut len),
            GrdpStatus::Ok
        );
        assert_eq!(
            grdp_quantizer_boundaries(z, bounds.as_mut_ptr(), n - 1, &mut len),
            GrdpStatus::Ok
        );
        assert_eq!(len, n - 1);
        assert_eq!(
            grdp_quantizer_probabilities(z, probs.as_mut_ptr(), n, &mut len),
            GrdpStatus::Ok
        );
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(levels.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(grdp_quantizer_apply(z, bounds[0] - 1.0), levels[0]);
        let mut m = std::mem::zeroed::<GrdpQuantizerMetrics>();
        assert_eq!(grdp_quantizer_metrics(z, 0.0, 1.0, 0.05, &mut m), GrdpStatus::Ok);
        assert!(m.distortion < 1.0 && m.distortion > (-2.0 * m.entropy).exp());
        assert!((m.lagrangian_cost - (m.distortion + 0.05 * m.entropy)).abs() < 1e-12);
        grdp_quantizer_free(z);
        assert_eq!(grdp_quantizer_len(ptr::null()), 0);
        assert!(grdp_quantizer_apply(ptr::null(), 0.0).is_nan());
        assert_eq!(grdp_ecsq_design(0.0, 1.0, -1.0, 6, 0, &mut z), GrdpStatus::Domain);
    }
}

#[test]
fn errors_are_per_thread() {
    let mut q = ptr::null_mut();
    unsafe { grdp_query_new(0.0, -1.0, 0.0, 0.0, 0.0, 0, &mut q) };
    assert!(last_error().is_some());
    std::thread::spawn(|| assert_eq!(last_error(), None)).join().unwrap();
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(grdp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(crate_dir().join("include/gauss_rdp.h")).unwrap();
    let src = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    let mut n = 0;
    for line in src.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap();
            assert!(header.contains(&format!("{name}(")), "{name} missing from header");
            n += 1;
        }
    }
    assert!(n > 20);
    for t in [
        "typedef struct GrdpQuery GrdpQuery;",
        "GRDP_STATUS_OK = 0",
        "GRDP_MEASURE_W2 = 1",
    ] {
        assert!(header.contains(t), "{t}");
    }
}

fn find_compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    Command::new(&cc)
        .arg("--version")
        .output()
        .ok()?
        .status
        .success()
        .then_some(cc)
}

fn lib_dir() -> PathBuf {
    // target/<profile>/deps/abi-xxxx -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = find_compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let libs = lib_dir();
    if !libs.join("libgauss_rdp_ffi.so").exists() {
        eprintln!("shared library not found in {}, skipping", libs.display());
        return;
    }
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(&cc)
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg("-L")
        .arg(&libs)
        .arg("-lgauss_rdp_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe).env("LD_LIBRARY_PATH", &libs).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
