use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sikwave_ffi::*;

fn last_error() -> String {
    let p = sik_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn bumps(n: usize, l: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * l];
    for i in 0..n {
        let at = (i * 7) % (l - 10);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..10 {
            out[i * l + at + j] = sign * (std::f64::consts::PI * j as f64 / 9.0).sin();
        }
        out[i * l + (i * 13) % l] += 0.01;
    }
    out
}

#[test]
fn scalar_functions() {
    let mut out = f64::NAN;
    let y = [1.0, 0.0];
    let z = [0.0, 2.0];
    unsafe {
        assert_eq!(sik_cosine_distance(y.as_ptr(), z.as_ptr(), 2, &mut out), SikStatus::Ok);
        assert!((out - 1.0).abs() < 1e-12);
        assert_eq!(sik_cosine_distance(y.as_ptr(), y.as_ptr(), 2, &mut out), SikStatus::Ok);
        assert!(out.abs() < 1e-12);
        assert_eq!(sik_mcc(5, 0, 5, 0, &mut out), SikStatus::Ok);
        assert!((out - 1.0).abs() < 1e-12);
    }
}

#[test]
fn chi2_matches_direct_formula() {
    let (o0, o1, m0, m1) = (30u64, 10u64, 50u64, 50u64);
    let (a, b, c, d) = (o0 as f64, o1 as f64, (m0 - o0) as f64, (m1 - o1) as f64);
    let n = a + b + c + d;
    let expected = n * (a * d - b * c).powi(2) / ((a + b) * (c + d) * (a + c) * (b + d));
    let mut out = 0.0;
    assert_eq!(unsafe { sik_chi2_statistic(o0, o1, m0, m1, &mut out) }, SikStatus::Ok);
    assert!((out - expected).abs() < 1e-12 * expected);
}

#[test]
fn errors_set_status_and_message() {
    let mut out = 0.0;
    let zero = [0.0, 0.0];
    let one = [1.0, 0.0];
    unsafe {
        assert_eq!(sik_cosine_distance(zero.as_ptr(), one.as_ptr(), 2, &mut out), SikStatus::Ok);
        assert_eq!(out, 1.0);
        assert_eq!(sik_mcc(0, 0, 0, 0, &mut out), SikStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(sik_cosine_distance(ptr::null(), one.as_ptr(), 2, &mut out), SikStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(sik_chi2_statistic(5, 0, 3, 3, &mut out), SikStatus::InvalidArgument);
        assert_eq!(sik_mcc(1, 1, 1, 1, ptr::null_mut()), SikStatus::NullPointer);
    }
}

#[test]
fn codebook_round_trip() {
    let centroids = [3.0, 4.0, 0.0, 0.0, 0.0, 2.0];
    let mut cb = ptr::null_mut();
    unsafe {
        assert_eq!(sik_codebook_from_centroids(centroids.as_ptr(), 2, 3, 1, &mut cb), SikStatus::Ok);
        assert_eq!((sik_codebook_k(cb), sik_codebook_p(cb)), (2, 3));
        let mut rows = [0.0; 6];
        assert_eq!(sik_codebook_copy_centroids(cb, rows.as_mut_ptr(), 6), SikStatus::Ok);
        assert_eq!(rows, [0.6, 0.8, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(sik_codebook_copy_centroids(cb, rows.as_mut_ptr(), 5), SikStatus::InvalidArgument);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("cb.json").to_str().unwrap()).unwrap();
        assert_eq!(sik_codebook_save(cb, path.as_ptr()), SikStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(sik_codebook_load(path.as_ptr(), &mut back), SikStatus::Ok);
        let mut again = [0.0; 6];
        assert_eq!(sik_codebook_copy_centroids(back, again.as_mut_ptr(), 6), SikStatus::Ok);
        assert_eq!(rows, again);

        let x = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let (mut c, mut s, mut d) = (usize::MAX, usize::MAX, f64::NAN);
        for backend in [SikBackend::Naive, SikBackend::Fft] {
            assert_eq!(sik_codebook_assign(back, x.as_ptr(), 7, backend, &mut c, &mut s, &mut d), SikStatus::Ok);
            assert_eq!(c, 1);
            assert_eq!(s, 3);
            assert!(d.abs() < 1e-12);
        }
        sik_codebook_free(cb);
        sik_codebook_free(back);
        sik_codebook_free(ptr::null_mut());

        let missing = CString::new(dir.path().join("absent.json").to_str().unwrap()).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(sik_codebook_load(missing.as_ptr(), &mut none), SikStatus::Format);
        assert!(none.is_null());
    }
}

#[test]
fn invalid_class_tag_and_null_handle() {
    let centroids = [1.0, 0.0];
    let mut cb = ptr::null_mut();
    unsafe {
        assert_eq!(sik_codebook_from_centroids(centroids.as_ptr(), 1, 2, 7, &mut cb), SikStatus::InvalidArgument);
        assert_eq!(sik_codebook_k(ptr::null()), 0);
        let mut buf = [0.0; 2];
        assert_eq!(sik_codebook_copy_centroids(ptr::null(), buf.as_mut_ptr(), 2), SikStatus::NullPointer);
    }
}

#[test]
fn fit_is_deterministic_and_validates() {
    let (n, l) = (24, 64);
    let x = bumps(n, l);
    let fit = |seed| {
        let mut cb = ptr::null_mut();
        let status = unsafe { sik_codebook_fit(x.as_ptr(), n, l, 2, 10, 20, 2, seed, SikBackend::Fft, 0, &mut cb) };
        assert_eq!(status, SikStatus::Ok, "{}", last_error());
        let mut rows = vec![0.0; 20];
        unsafe {
            assert_eq!(sik_codebook_copy_centroids(cb, rows.as_mut_ptr(), 20), SikStatus::Ok);
            sik_codebook_free(cb);
        }
        rows
    };
    assert_eq!(fit(5), fit(5));
    let mut cb = ptr::null_mut();
    let status = unsafe { sik_codebook_fit(x.as_ptr(), n, l, 2, l + 1, 20, 1, 0, SikBackend::Naive, 0, &mut cb) };
    assert_eq!(status, SikStatus::InvalidArgument);
    assert!(cb.is_null());
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(sik_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib_dir = target_dir();
    let staticlib = lib_dir.join("libsikwave_ffi.a");
    if !staticlib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(
        &src,
        r#"#include <math.h>
#include <stdio.h>
#include "sikwave.h"
int main(void) {
    double c[4] = {1.0, 0.0, 0.0, 1.0};
    double x[5] = {0.0, 0.0, 0.0, 2.0, 0.0};
    SikCodebook *cb = NULL;
    size_t k = 0, s = 0;
    double d = -1.0;
    if (sik_codebook_from_centroids(c, 2, 2, 0, &cb) != SIK_STATUS_OK) return 1;
    if (sik_codebook_k(cb) != 2 || sik_codebook_p(cb) != 2) return 2;
    if (sik_codebook_assign(cb, x, 5, SIK_BACKEND_FFT, &k, &s, &d) != SIK_STATUS_OK) return 3;
    if (fabs(d) > 1e-12) return 4;
    sik_codebook_free(cb);
    if (sik_cosine_distance(NULL, x, 2, &d) != SIK_STATUS_NULL_POINTER) return 5;
    if (sik_last_error_message() == NULL) return 6;
    printf("%s\n", sik_version());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("check");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
