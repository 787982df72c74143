use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use colorbound_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cb_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn ok(status: CbStatus) {
    assert_eq!(status, CbStatus::Ok, "{}", last_error());
}

fn empty_result() -> CbEvalResult {
    CbEvalResult {
        value: f64::NAN,
        error_radius: f64::NAN,
        provenance: CbProvenance::Exact,
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(cb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn miss_probability_small_cases() {
    let mut r = empty_result();
    // Two plain draws from two colours miss one iff they coincide.
    ok(unsafe { cb_miss_probability(2, [0.0, 0.0].as_ptr(), 2, &mut r) });
    assert!((r.value - 0.5).abs() < 1e-15);
    assert_eq!(r.provenance, CbProvenance::Exact);
    // Fewer draws than colours always miss one.
    ok(unsafe { cb_miss_probability(3, [0.2, 0.7].as_ptr(), 2, &mut r) });
    assert!((r.value - 1.0).abs() < 1e-15);
}

#[test]
fn moment_bounds_follow_closed_forms() {
    for q in 3..=20u32 {
        let qf = q as f64;
        let fm = (2.0 * qf.ln() / -(1.0 - 1.0 / qf).ln()).floor() as u32 + 1;
        let mut d = 0;
        ok(unsafe { cb_first_moment_bound(q, &mut d) });
        assert_eq!(d, fm, "q = {q}");

        let smm = (2.0 * (qf - 1.0) * (qf - 1.0).ln()).ceil() as i64 - 1;
        let mut exists = false;
        ok(unsafe { cb_second_moment_bound(q, &mut d, &mut exists) });
        assert_eq!(exists, smm >= 3, "q = {q}");
        if exists {
            assert_eq!(d as i64, smm, "q = {q}");
        }
    }
}

#[test]
fn find_dq_and_minimum_agree() {
    let mut dq = 0;
    ok(unsafe { cb_find_dq(5, 100, &mut dq) });
    assert_eq!(dq, 15);
    let (mut a, mut s) = (0.0, 0.0);
    ok(unsafe { cb_minimize_sigma(dq, 5, &mut a, &mut s) });
    assert!(s < 0.0);
    ok(unsafe { cb_minimize_sigma(dq - 1, 5, &mut a, &mut s) });
    assert!(s >= 0.0);
    let mut r = empty_result();
    ok(unsafe { cb_sigma_regular(dq - 1, 5, a, &mut r) });
    assert!((r.value - s).abs() < 1e-12);
}

#[test]
fn errors_map_to_status_codes() {
    let mut r = empty_result();
    assert_eq!(
        unsafe { cb_sigma_regular(10, 3, 1.5, &mut r) },
        CbStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { cb_sigma_regular(10, 3, 0.5, ptr::null_mut()) },
        CbStatus::NullPointer
    );
    let mut dq = 0;
    assert_eq!(unsafe { cb_find_dq(20, 10, &mut dq) }, CbStatus::NotFound);
    ok(unsafe { cb_sigma_regular(10, 3, 0.5, &mut r) });
    assert_eq!(last_error(), "");
}

#[test]
fn distribution_handle_round_trip() {
    let locs = [0.5, 0.0, 0.5];
    let ws = [0.25, 0.5, 0.25];
    let mut dist = ptr::null_mut();
    ok(unsafe { cb_distribution_new(locs.as_ptr(), ws.as_ptr(), 3, &mut dist) });
    let mut len = 0;
    ok(unsafe { cb_distribution_len(dist, &mut len) });
    assert_eq!(len, 2);
    let (mut l, mut w) = (0.0, 0.0);
    ok(unsafe { cb_distribution_atom(dist, 1, &mut l, &mut w) });
    assert_eq!((l, w), (0.5, 0.5));
    assert_eq!(
        unsafe { cb_distribution_atom(dist, 2, &mut l, &mut w) },
        CbStatus::InvalidArgument
    );
    unsafe { cb_distribution_free(dist) };

    let mut bad = ptr::null_mut();
    let st = unsafe { cb_distribution_new([0.5].as_ptr(), [0.3].as_ptr(), 1, &mut bad) };
    assert_eq!(st, CbStatus::InvalidArgument);
    assert!(bad.is_null());
}

#[test]
fn sigma_star_enumeration_matches_atom_and_monte_carlo() {
    let mut dist = ptr::null_mut();
    ok(unsafe { cb_distribution_new([0.3].as_ptr(), [1.0].as_ptr(), 1, &mut dist) });
    let (mut atom, mut en, mut mc) = (empty_result(), empty_result(), empty_result());
    ok(unsafe { cb_sigma_star_atom(4.7, 3, 0.3, &mut atom) });
    ok(unsafe { cb_sigma_star(4.7, 3, dist, CbMode::Enumerate, 0, 0, &mut en) });
    ok(unsafe { cb_sigma_star(4.7, 3, dist, CbMode::MonteCarlo, 200_000, 7, &mut mc) });
    unsafe { cb_distribution_free(dist) };
    assert_eq!(atom.provenance, CbProvenance::Truncated);
    assert!((atom.value - en.value).abs() <= atom.error_radius + en.error_radius + 1e-12);
    assert_eq!(mc.provenance, CbProvenance::MonteCarlo);
    assert!((mc.value - en.value).abs() <= mc.error_radius + en.error_radius);
}

fn triangle() -> *mut CbMultigraph {
    let mut g = ptr::null_mut();
    ok(unsafe {
        cb_multigraph_new(
            3,
            [0, 1, 0].as_ptr(),
            [1, 2, 2].as_ptr(),
            ptr::null(),
            3,
            &mut g,
        )
    });
    g
}

#[test]
fn potts_on_small_graphs() {
    let g = triangle();
    let mut n = 0u64;
    ok(unsafe { cb_count_colorings(g, 3, &mut n) });
    assert_eq!(n, 6);
    let mut chi = 0;
    ok(unsafe { cb_chromatic_number(g, &mut chi) });
    assert_eq!(chi, 3);
    // Triangle: q(q-1)(q-2) + 3q(q-1) e^{-b} + q e^{-3b}.
    let (q, b) = (4.0f64, 0.7f64);
    let want = q * (q - 1.0) * (q - 2.0) + 3.0 * q * (q - 1.0) * (-b).exp() + q * (-3.0 * b).exp();
    let mut z = 0.0;
    ok(unsafe { cb_potts_partition(g, 4, b, &mut z) });
    assert!((z - want).abs() < 1e-12 * want);
    unsafe { cb_multigraph_free(g) };
}

#[test]
fn multigraph_text_round_trip() {
    let g = triangle();
    let mut text = ptr::null_mut();
    ok(unsafe { cb_multigraph_to_text(g, &mut text) });
    let s = unsafe { CStr::from_ptr(text) }.to_owned();
    unsafe { cb_string_free(text) };
    let mut h = ptr::null_mut();
    ok(unsafe { cb_multigraph_parse(s.as_ptr(), &mut h) });
    let mut again = ptr::null_mut();
    ok(unsafe { cb_multigraph_to_text(h, &mut again) });
    assert_eq!(unsafe { CStr::from_ptr(again) }, s.as_c_str());
    unsafe {
        cb_string_free(again);
        cb_multigraph_free(h);
        cb_multigraph_free(g);
    }

    let junk = CString::new("3 1\n1 x 1\n").unwrap();
    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { cb_multigraph_parse(junk.as_ptr(), &mut bad) },
        CbStatus::Parse
    );
    assert!(bad.is_null());
}

#[test]
fn loops_are_rejected_by_chromatic_number() {
    let mut g = ptr::null_mut();
    ok(unsafe { cb_multigraph_new(2, [0].as_ptr(), [0].as_ptr(), [2].as_ptr(), 1, &mut g) });
    let mut chi = 0;
    assert_eq!(
        unsafe { cb_chromatic_number(g, &mut chi) },
        CbStatus::InvalidArgument
    );
    unsafe { cb_multigraph_free(g) };
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/colorbound.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).expect("header generated by build script");
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs"))
        .unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(
            h.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    for ty in [
        "CbStatus",
        "CbEvalResult",
        "CbDistribution",
        "CbMultigraph",
        "CB_STATUS_BUDGET_EXCEEDED",
    ] {
        assert!(h.contains(ty), "{ty} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let c_src = r#"
#include "colorbound.h"
#include <stdio.h>
int main(void) {
    CbEvalResult r;
    CbMultigraph *g = NULL;
    CbStatus s = cb_sigma_regular(10, 3, 0.5, &r);
    (void)s; (void)g;
    printf("%s\n", cb_version());
    return 0;
}
"#;
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("smoke.c");
    std::fs::write(&file, c_src).unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let status = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&file)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler available; skipping");
            return;
        }
    };
    assert!(status.success());
}

#[test]
fn c_program_links_against_static_library() {
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = lib_dir.join("libcolorbound_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built; skipping");
        return;
    }
    let c_src = r#"
#include "colorbound.h"
#include <stdio.h>
int main(void) {
    uint32_t d = 0;
    CbMultigraph *g = NULL;
    uint64_t n = 0;
    uint32_t us[] = {0, 1, 0}, vs[] = {1, 2, 2};
    if (cb_find_dq(3, 6, &d) != CB_STATUS_OK || d != 6) return 1;
    if (cb_multigraph_new(3, us, vs, NULL, 3, &g) != CB_STATUS_OK) return 2;
    if (cb_count_colorings(g, 3, &n) != CB_STATUS_OK || n != 6) return 3;
    cb_multigraph_free(g);
    if (cb_find_dq(20, 10, &d) != CB_STATUS_NOT_FOUND) return 4;
    if (cb_last_error_message()[0] == '\0') return 5;
    printf("ok\n");
    return 0;
}
"#;
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("link.c");
    let bin = dir.path().join("link");
    std::fs::write(&file, c_src).unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&file)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
    else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
