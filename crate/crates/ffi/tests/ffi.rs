use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gradsync_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = gs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    gs_string_free(p);
    s
}

#[test]
fn run_and_query() {
    unsafe {
        let mut run = ptr::null_mut();
        let cfg = cstr(r#"{"preset": "wait_chain", "size": 8}"#);
        assert_eq!(gs_run_from_json(cfg.as_ptr(), &mut run), GsStatus::Ok);
        assert!(gs_last_error().is_null());

        let mut g = 0.0;
        let mut nb = 0.0;
        let mut hold = -1;
        assert_eq!(gs_run_global_skew(run, &mut g), GsStatus::Ok);
        assert_eq!(gs_run_neighbor_skew(run, &mut nb), GsStatus::Ok);
        assert_eq!(gs_run_bounds_hold(run, &mut hold), GsStatus::Ok);
        let direct =
            gradsync::cli::execute(&gradsync::engine::preset("wait_chain", Some(8)).unwrap())
                .unwrap()
                .summary;
        assert_eq!(g, direct.report.max_global_skew.value);
        assert_eq!(nb, direct.report.neighbor_skew());
        assert_eq!(hold, 1);

        let mut s = ptr::null_mut();
        assert_eq!(gs_run_summary_json(run, &mut s), GsStatus::Ok);
        let summary: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(summary["config"]["d_known"], 8);

        let mut csv = ptr::null_mut();
        assert_eq!(gs_run_trace_csv(run, &mut csv), GsStatus::Ok);
        assert!(take(csv).starts_with("time,node,logical,rate,alpha,event_kind\n"));
        gs_run_free(run);
    }
}

#[test]
fn summary_feeds_back_in() {
    unsafe {
        let mut run = ptr::null_mut();
        let cfg = cstr(r#"{"preset": "random_geometric", "size": 12, "seed": 3}"#);
        assert_eq!(gs_run_from_json(cfg.as_ptr(), &mut run), GsStatus::Ok);
        let mut s = ptr::null_mut();
        gs_run_summary_json(run, &mut s);
        let first = take(s);
        gs_run_free(run);

        let again = cstr(&first);
        let mut run = ptr::null_mut();
        assert_eq!(gs_run_from_json(again.as_ptr(), &mut run), GsStatus::Ok);
        let mut s = ptr::null_mut();
        gs_run_summary_json(run, &mut s);
        assert_eq!(take(s), first);
        gs_run_free(run);
    }
}

#[test]
fn errors_carry_messages() {
    unsafe {
        let mut run = ptr::null_mut();
        let bad = cstr(r#"{"preset": "wait_chain", "c": 5}"#);
        assert_eq!(
            gs_run_from_json(bad.as_ptr(), &mut run),
            GsStatus::InvalidConfig
        );
        assert!(run.is_null());
        assert!(
            last_error().contains("c exceeds (1+rho_hat)*d"),
            "{}",
            last_error()
        );

        let junk = cstr("{not json");
        assert_eq!(gs_validate_json(junk.as_ptr()), GsStatus::InvalidConfig);
        assert_eq!(
            gs_run_from_json(ptr::null(), &mut run),
            GsStatus::NullArgument
        );
        let cfg = cstr(r#"{"preset": "wait_chain"}"#);
        assert_eq!(
            gs_run_from_json(cfg.as_ptr(), ptr::null_mut()),
            GsStatus::NullArgument
        );
        let mut x = 0.0;
        assert_eq!(
            gs_run_global_skew(ptr::null(), &mut x),
            GsStatus::NullArgument
        );
        assert_eq!(last_error(), "null run handle");

        let invalid_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            gs_validate_json(invalid_utf8.as_ptr().cast()),
            GsStatus::InvalidUtf8
        );

        assert_eq!(gs_validate_json(cfg.as_ptr()), GsStatus::Ok);
        assert!(gs_last_error().is_null());
        gs_run_free(ptr::null_mut());
        gs_string_free(ptr::null_mut());
    }
}

#[test]
fn presets_and_chain_length() {
    unsafe {
        let mut out = ptr::null_mut();
        let name = cstr("startup_chain");
        assert_eq!(gs_preset_json(name.as_ptr(), 5, &mut out), GsStatus::Ok);
        let cfg: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(cfg["topology"]["n"], 6);
        let nope = cstr("nope");
        assert_eq!(
            gs_preset_json(nope.as_ptr(), 0, &mut out),
            GsStatus::InvalidConfig
        );
        assert!(last_error().contains("unknown preset"));
    }
    assert_eq!(gs_wait_chain_length(12, 0.1, 1.0, 1.1), 12.0);
    assert!((gs_wait_chain_length(10, 0.0, 1.0, 4.0) - 2.5).abs() < 1e-12);
}

#[test]
fn errors_are_per_thread() {
    let bad = cstr("{}");
    assert_eq!(
        unsafe { gs_validate_json(bad.as_ptr()) },
        GsStatus::InvalidConfig
    );
    std::thread::spawn(|| assert!(gs_last_error().is_null()))
        .join()
        .unwrap();
    assert!(!gs_last_error().is_null());
}

/// Builds a C program against the generated header and the static library.
#[test]
fn c_program_links_against_header() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe_dir = std::env::current_exe().unwrap();
    let target = exe_dir.parent().unwrap().parent().unwrap();
    let lib = target.join("libgradsync_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let build = Command::new(cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(
        build.status.success(),
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let run = Command::new(&bin).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let out = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<&str> = out.trim().splitn(6, ' ').collect();
    assert_eq!(&fields[2..5], &["1", "1", "3"], "{out}");
    assert!(fields[5].contains("c exceeds"), "{out}");
}
