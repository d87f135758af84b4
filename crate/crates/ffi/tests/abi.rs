use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use xbandit_ffi::*;

fn new_config(objective: XbObjective, players: u64, budget: u64) -> *mut XbConfig {
    let mut cfg = ptr::null_mut();
    assert_eq!(
        unsafe { xb_config_new(objective, players, budget, &mut cfg) },
        XbStatus::Ok
    );
    assert!(!cfg.is_null());
    cfg
}

fn run(cfg: *const XbConfig, runner: XbRunner) -> *mut XbResult {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { xb_run(cfg, runner, &mut out) }, XbStatus::Ok);
    out
}

fn last_error() -> String {
    let p = xb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn serial_and_distributed_agree_through_the_abi() {
    let cfg = new_config(XbObjective::Garland, 4, 2500);
    unsafe {
        assert_eq!(xb_config_set_seed(cfg, 7), XbStatus::Ok);
        assert_eq!(xb_config_set_noise_gaussian(cfg, 0.2, true), XbStatus::Ok);
        let (s, d) = (run(cfg, XbRunner::Serial), run(cfg, XbRunner::Distributed));
        assert!(xb_result_completed(s));
        assert_eq!(xb_result_x(s).to_bits(), xb_result_x(d).to_bits());
        assert_eq!(xb_result_loss(s).to_bits(), xb_result_loss(d).to_bits());
        assert_eq!(xb_result_h_max(s), xb_result_h_max(d));
        assert_eq!(xb_result_rounds(s), xb_result_level_count(s));
        assert_eq!(xb_result_total_pulls(s), 4 * xb_result_evals_per_player(s));
        let mut messages = 0;
        for k in 0..xb_result_level_count(s) {
            let mut level = std::mem::zeroed();
            assert_eq!(xb_result_level(s, k, &mut level), XbStatus::Ok);
            assert_eq!(level.depth as u64, k);
            messages += level.set_size;
        }
        assert_eq!(messages, xb_result_messages(d));
        xb_result_free(s);
        xb_result_free(d);
        xb_config_free(cfg);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut cfg = ptr::null_mut();
    assert_eq!(
        unsafe { xb_config_new(XbObjective::DoubleSine, 0, 100, &mut cfg) },
        XbStatus::InvalidParams
    );
    assert!(cfg.is_null());
    assert!(last_error().contains("invalid parameter"));

    assert_eq!(
        unsafe { xb_config_new(XbObjective::DoubleSine, 1, 100, ptr::null_mut()) },
        XbStatus::NullPointer
    );
    let cfg = new_config(XbObjective::DoubleSine, 1, 100);
    unsafe {
        assert_eq!(
            xb_config_set_smoothness(cfg, 1.0, 1.5, 0.5),
            XbStatus::InvalidParams
        );
        assert_eq!(
            xb_config_set_noise_uniform(cfg, -1.0),
            XbStatus::InvalidParams
        );
        assert_eq!(
            xb_run(cfg, XbRunner::Serial, ptr::null_mut()),
            XbStatus::NullPointer
        );
        assert!(xb_result_loss(ptr::null()).is_nan());
        assert_eq!(xb_result_h_max(ptr::null()), -1);
        xb_config_free(cfg);
        xb_config_free(ptr::null_mut());
        xb_result_free(ptr::null_mut());
    }
    let s = unsafe { CStr::from_ptr(xb_status_str(XbStatus::OutOfRange)) };
    assert_eq!(s.to_str().unwrap(), "index out of range");
}

#[test]
fn tiny_budget_is_not_an_error() {
    let cfg = new_config(XbObjective::DoubleSine, 1, 2);
    unsafe {
        let r = run(cfg, XbRunner::Distributed);
        assert!(!xb_result_completed(r));
        assert_eq!(xb_result_h_max(r), -1);
        assert_eq!(xb_result_level_count(r), 0);
        let mut level = std::mem::zeroed();
        assert_eq!(xb_result_level(r, 0, &mut level), XbStatus::OutOfRange);
        xb_result_free(r);
        xb_config_free(cfg);
    }
}

#[test]
fn calculators_match_reference_values() {
    let p = XbBoundParams {
        d: 0.0,
        c: 1.0,
        nu1: 1.0,
        rho: 0.5,
        players: 1,
        budget: 1600,
        delta: 0.05,
    };
    let mut v = 0.0;
    unsafe {
        assert_eq!(xb_c1_constant(&p, &mut v), XbStatus::Ok);
        assert!((v - 2.309_401_076_758_503).abs() < 1e-12);
        assert_eq!(xb_loss_upper_bound(&p, &mut v), XbStatus::Ok);
        assert!((v - 1.777_183_945_952_752).abs() < 1e-12);
        assert_eq!(xb_hmax_lower_bound(&p, &mut v), XbStatus::Ok);
        assert!((v - 1.755_369_486_670_551).abs() < 1e-12);
        assert_eq!(xb_messages_upper_bound(&p, 6, &mut v), XbStatus::Ok);
        assert_eq!(v, 13.0);
        let tiny = XbBoundParams { budget: 1, ..p };
        assert_eq!(
            xb_rounds_upper_bound(&tiny, &mut v),
            XbStatus::InvalidParams
        );
        let bad = XbBoundParams { rho: 1.0, ..p };
        assert_eq!(xb_c1_constant(&bad, &mut v), XbStatus::InvalidParams);

        let mut t = 0;
        assert_eq!(xb_compute_t(0, 1, 1, 0.05, 1.0, 0.5, &mut t), XbStatus::Ok);
        assert_eq!(t, 3);
        assert_eq!(xb_compute_t(2, 4, 1, 0.05, 1.0, 0.5, &mut t), XbStatus::Ok);
        assert_eq!(t, 63);
        assert_eq!(xb_confidence_radius(0, 1, 3, 1, 0.05, &mut v), XbStatus::Ok);
        assert!((v - 0.835_322_268_806_544_9).abs() < 1e-12);
        assert_eq!(
            xb_confidence_radius(0, 0, 3, 1, 0.05, &mut v),
            XbStatus::InvalidParams
        );
    }
}

/// `target/<profile>` holding the static library built alongside this test.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = artifact_dir().join("libxbandit_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!(
            "skipping: no C compiler or static library at {}",
            lib.display()
        );
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
