use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use cmc_ffi::*;

const MODEL: &str = r#"{"d":2,"k":2,"kernel":[[[0.7,0.3],[0.4,0.6]],[[0.3,0.7],[0.6,0.4]]]}"#;
const POLICY: &str = r#"{"kind":"stationary_markov","table":[[0.5,0.5],[0.5,0.5]]}"#;
const TARGET: &str = r#"{"pi":[[1.0,0.0],[0.0,1.0]]}"#;
const REWARDS: &str = r#"{"gTilde":[[1.0,0.0],[0.0,1.0]],"discount":0.5}"#;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = cmc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { cmc_string_free(p) };
    s
}

struct Handles {
    model: *mut CmcModel,
    policy: *mut CmcPolicy,
}

impl Handles {
    fn new() -> Self {
        let (mut model, mut policy) = (ptr::null_mut(), ptr::null_mut());
        unsafe {
            assert_eq!(cmc_model_from_json(cstr(MODEL).as_ptr(), &mut model), CMC_OK);
            assert_eq!(cmc_policy_from_json(cstr(POLICY).as_ptr(), &mut policy), CMC_OK);
        }
        Handles { model, policy }
    }
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            cmc_model_free(self.model);
            cmc_policy_free(self.policy);
        }
    }
}

#[test]
fn model_round_trip_and_dims() {
    let h = Handles::new();
    let (mut d, mut k) = (0usize, 0usize);
    assert_eq!(unsafe { cmc_model_dims(h.model, &mut d, &mut k) }, CMC_OK);
    assert_eq!((d, k), (2, 2));
    assert!(cmc_last_error_message().is_null());
}

#[test]
fn simulation_is_seeded_and_copies_one_based() {
    let h = Handles::new();
    let copy = |seed| unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(cmc_simulate(h.model, h.policy, 200, seed, &mut t), CMC_OK);
        let len = cmc_trajectory_len(t);
        assert_eq!(len, 201);
        let (mut s, mut a) = (vec![0u32; len], vec![0u32; len]);
        assert_eq!(cmc_trajectory_copy(t, s.as_mut_ptr(), a.as_mut_ptr(), len), CMC_OK);
        let mut short = vec![0u32; len - 1];
        assert_eq!(cmc_trajectory_copy(t, short.as_mut_ptr(), short.as_mut_ptr(), len - 1), CMC_INVALID_INPUT);
        cmc_trajectory_free(t);
        (s, a)
    };
    let (s1, a1) = copy(11);
    let (s2, a2) = copy(11);
    assert_eq!((&s1, &a1), (&s2, &a2));
    assert!(s1.iter().chain(&a1).all(|&x| x == 1 || x == 2));
    assert_ne!(copy(12).0, s1);
}

#[test]
fn estimate_from_arrays() {
    let states = [1u32, 2, 1, 1, 2];
    let actions = [1u32, 1, 2, 1, 2];
    let mut t = ptr::null_mut();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(cmc_trajectory_from_arrays(states.as_ptr(), actions.as_ptr(), states.len(), &mut t), CMC_OK);
        assert_eq!(cmc_estimate_json(t, 2, 2, &mut out), CMC_OK);
        cmc_trajectory_free(t);
    }
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(v["horizon"], 4);
}

#[test]
fn zero_index_is_a_range_error() {
    let states = [0u32, 1];
    let actions = [1u32, 1];
    let mut t = ptr::null_mut();
    let code = unsafe { cmc_trajectory_from_arrays(states.as_ptr(), actions.as_ptr(), 2, &mut t) };
    assert_eq!(code, CMC_INVALID_INPUT);
    assert!(t.is_null());
    assert!(last_error().contains("1-based"));
}

#[test]
fn gof_and_eval_json() {
    let h = Handles::new();
    let mut t = ptr::null_mut();
    let (mut gof, mut eval) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(cmc_simulate(h.model, h.policy, 5000, 3, &mut t), CMC_OK);
        assert_eq!(cmc_gof_json(t, h.model, 0.05, &mut gof), CMC_OK);
        assert_eq!(cmc_eval_json(t, cstr(TARGET).as_ptr(), cstr(REWARDS).as_ptr(), 0.05, &mut eval), CMC_OK);
        assert_eq!(cmc_eval_json(t, cstr(TARGET).as_ptr(), cstr(REWARDS).as_ptr(), 1.5, &mut eval), CMC_INVALID_INPUT);
        cmc_trajectory_free(t);
    }
    assert!(take_string(gof).contains("pooled"));
    assert!(take_string(eval).contains("intervals"));
}

#[test]
fn special_functions() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(cmc_normal_quantile(0.975, &mut x), CMC_OK);
        assert!((x - 1.959963984540054).abs() < 1e-9);
        assert_eq!(cmc_chi_square_survival(0.0, 3.0, &mut x), CMC_OK);
        assert_eq!(x, 1.0);
        assert_eq!(cmc_normal_quantile(1.5, &mut x), CMC_INVALID_INPUT);
    }
}

#[test]
fn null_pointers_and_bad_json() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(cmc_model_from_json(ptr::null(), &mut m), CMC_NULL_POINTER);
        assert!(last_error().contains("null"));
        assert_eq!(cmc_model_from_json(cstr("{\"d\":2}").as_ptr(), &mut m), CMC_INVALID_INPUT);
        assert!(m.is_null());
        assert_eq!(cmc_model_dims(ptr::null(), ptr::null_mut(), ptr::null_mut()), CMC_NULL_POINTER);
        assert_eq!(cmc_trajectory_len(ptr::null()), 0);
        cmc_model_free(ptr::null_mut());
        cmc_string_free(ptr::null_mut());
    }
}

fn ffi_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_symbol() {
    let header = std::fs::read_to_string(ffi_dir().join("include/cmc.h")).unwrap();
    for sym in [
        "CMC_OK",
        "CMC_INVALID_INPUT",
        "CMC_CAPACITY_EXCEEDED",
        "CMC_INFERENCE_IMPOSSIBLE",
        "CMC_NULL_POINTER",
        "CMC_PANIC",
        "typedef struct CmcModel CmcModel",
        "typedef struct CmcPolicy CmcPolicy",
        "typedef struct CmcTrajectory CmcTrajectory",
        "cmc_model_from_json",
        "cmc_model_dims",
        "cmc_model_free",
        "cmc_policy_from_json",
        "cmc_policy_free",
        "cmc_simulate",
        "cmc_trajectory_from_arrays",
        "cmc_trajectory_len",
        "cmc_trajectory_copy",
        "cmc_trajectory_free",
        "cmc_estimate_json",
        "cmc_gof_json",
        "cmc_eval_json",
        "cmc_chi_square_survival",
        "cmc_normal_quantile",
        "cmc_last_error_message",
        "cmc_string_free",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
}

/// Compiles the C smoke test against the static library when a C compiler
/// and the archive are available.
#[test]
fn c_smoke_test() {
    let exe = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| exe.join("../../target"));
    let profile_dir = std::env::current_exe().unwrap().parent().and_then(|p| p.parent()).map(PathBuf::from);
    let archive = profile_dir
        .iter()
        .map(|p| p.join("libcmc_ffi.a"))
        .chain([target.join("debug/libcmc_ffi.a"), target.join("release/libcmc_ffi.a")])
        .find(|p| p.exists());
    let Some(archive) = archive else {
        eprintln!("skipping: libcmc_ffi.a not built");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(ffi_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(ffi_dir().join("include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke test failed to compile");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C smoke test exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
