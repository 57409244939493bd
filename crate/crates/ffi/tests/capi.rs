use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use levelreg_ffi::*;

fn chain(p: usize) -> *mut LrSetFunction {
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { lr_setfn_chain_tv(p, &mut f) }, LrStatus::Ok);
    assert!(!f.is_null());
    f
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(lr_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn evaluates_chain_cut() {
    let f = chain(4);
    let mut v = 0.0;
    let mask = [1u8, 0, 1, 0];
    assert_eq!(
        unsafe { lr_setfn_eval(f, mask.as_ptr(), 4, &mut v) },
        LrStatus::Ok
    );
    assert_eq!(v, 3.0);
    let mut p = 0;
    assert_eq!(unsafe { lr_setfn_size(f, &mut p) }, LrStatus::Ok);
    assert_eq!(p, 4);
    unsafe { lr_setfn_free(f) };
}

#[test]
fn greedy_point_attains_extension() {
    let f = chain(5);
    let w = [0.3, -1.0, 2.0, 2.0, 0.5];
    let mut s = [0.0; 5];
    let mut lov = 0.0;
    unsafe {
        assert_eq!(lr_greedy(f, w.as_ptr(), 5, s.as_mut_ptr()), LrStatus::Ok);
        assert_eq!(
            lr_lovasz_extension(f, w.as_ptr(), 5, &mut lov),
            LrStatus::Ok
        );
        lr_setfn_free(f);
    }
    let dot: f64 = s.iter().zip(&w).map(|(a, b)| a * b).sum();
    assert!((dot - lov).abs() < 1e-12);
    assert!(s.iter().sum::<f64>().abs() < 1e-12);
}

#[test]
fn prox_engines_agree() {
    let f = chain(6);
    let z = [1.0, 3.0, -0.5, 0.2, 0.1, 2.0];
    let mut a = [0.0; 6];
    let mut b = [0.0; 6];
    unsafe {
        assert_eq!(
            lr_prox(f, z.as_ptr(), 6, 0.4, LrProxEngine::Auto, a.as_mut_ptr()),
            LrStatus::Ok
        );
        assert_eq!(
            lr_prox(f, z.as_ptr(), 6, 0.4, LrProxEngine::MinNorm, b.as_mut_ptr()),
            LrStatus::Ok
        );
        lr_setfn_free(f);
    }
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-6, "{a:?} vs {b:?}");
    }
}

#[test]
fn sfm_on_cut_graph() {
    let from = [0usize, 1];
    let to = [1usize, 2];
    let wts = [1.0, 1.0];
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { lr_setfn_cut(3, 2, from.as_ptr(), to.as_ptr(), wts.as_ptr(), &mut f) },
        LrStatus::Ok
    );
    let z = [5.0, 5.0, -5.0];
    let mut mask = [0u8; 3];
    let mut val = 0.0;
    assert_eq!(
        unsafe { lr_sfm(f, z.as_ptr(), 3, 1.0, mask.as_mut_ptr(), &mut val) },
        LrStatus::Ok
    );
    assert_eq!(mask, [1, 1, 0]);
    assert_eq!(val, -9.0);
    unsafe { lr_setfn_free(f) };
}

#[test]
fn other_constructors() {
    let mut f = ptr::null_mut();
    let h = [0.0, 1.0, 0.0];
    assert_eq!(
        unsafe { lr_setfn_cardinality(h.as_ptr(), 3, &mut f) },
        LrStatus::Ok
    );
    unsafe { lr_setfn_free(f) };
    let table = [0.0, 1.0, 1.0, 0.0];
    assert_eq!(
        unsafe { lr_setfn_table(2, table.as_ptr(), 4, &mut f) },
        LrStatus::Ok
    );
    unsafe { lr_setfn_free(f) };
    assert_eq!(unsafe { lr_setfn_grid_tv(2, 3, &mut f) }, LrStatus::Ok);
    unsafe { lr_setfn_free(f) };
    let (a, b, w) = ([0usize], [1usize], [1.0]);
    assert_eq!(
        unsafe { lr_setfn_noisy_cut(2, 1, a.as_ptr(), b.as_ptr(), w.as_ptr(), 1.0, &mut f) },
        LrStatus::Ok
    );
    unsafe { lr_setfn_free(f) };
}

#[test]
fn errors_are_reported() {
    let mut f = ptr::null_mut();
    let bad = [1.0, 0.0];
    assert_eq!(
        unsafe { lr_setfn_cardinality(bad.as_ptr(), 2, &mut f) },
        LrStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert!(f.is_null());

    let mut v = 0.0;
    assert_eq!(
        unsafe { lr_setfn_eval(ptr::null(), [0u8].as_ptr(), 1, &mut v) },
        LrStatus::NullPointer
    );
    assert!(last_error().contains("null"));

    let g = chain(3);
    let mask = [0u8; 2];
    assert_eq!(
        unsafe { lr_setfn_eval(g, mask.as_ptr(), 2, &mut v) },
        LrStatus::DimensionMismatch
    );
    let z = [f64::NAN, 0.0, 0.0];
    let mut w = [0.0; 3];
    assert_ne!(
        unsafe { lr_prox(g, z.as_ptr(), 3, 1.0, LrProxEngine::Auto, w.as_mut_ptr()) },
        LrStatus::Ok
    );
    assert_eq!(
        unsafe { lr_setfn_chain_tv(3, ptr::null_mut()) },
        LrStatus::NullPointer
    );
    unsafe {
        lr_setfn_free(g);
        lr_setfn_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(lr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(crate_dir().join("include/levelreg.h")).unwrap();
    for name in [
        "typedef struct LrSetFunction LrSetFunction",
        "LR_STATUS_OK = 0",
        "LR_STATUS_PANIC",
        "LR_PROX_ENGINE_MIN_NORM",
        "lr_setfn_chain_tv(size_t p",
        "lr_setfn_free",
        "lr_prox(",
        "lr_sfm(",
        "lr_last_error_message(void)",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

fn static_lib() -> Option<PathBuf> {
    // Test binaries live in target/<profile>/deps; the library sits one level up.
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("liblevelreg_ffi.a");
    lib.exists().then_some(lib)
}

fn has_cc() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

#[test]
fn c_program_links_and_runs() {
    let Some(lib) = static_lib() else {
        eprintln!("static library not found; skipping C link test");
        return;
    };
    if !has_cc() {
        eprintln!("no C compiler; skipping C link test");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(Path::new(&exe)).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("ok 0.1.0"), "{stdout}");
}
