use std::ffi::CStr;
use std::ptr;

use wjl_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { wjl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn matrix(d: usize, k: usize, seed: u64) -> *mut WjlMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { wjl_matrix_new(d, k, seed, &mut m) }, WjlStatus::Ok);
    m
}

fn reduce(m: *const WjlMatrix, x: &[f64]) -> *mut WjlReduced {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { wjl_reduce(m, x.as_ptr(), x.len(), &mut g) }, WjlStatus::Ok);
    g
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(wjl_version()) };
    assert_eq!(v.to_str().unwrap(), wjl::VERSION);
}

#[test]
fn d1_projection_is_exact() {
    let m = matrix(1, 16, 3);
    let gx = reduce(m, &[3.0]);
    let gw = reduce(m, &[2.0]);
    let mut out = 0.0;
    assert_eq!(unsafe { wjl_rho(gx, gw, &mut out) }, WjlStatus::Ok);
    assert_eq!(out, 36.0);
    let mut k = 0;
    assert_eq!(unsafe { wjl_reduced_dim(gx, &mut k) }, WjlStatus::Ok);
    assert_eq!(k, 16);
    unsafe {
        wjl_reduced_free(gx);
        wjl_reduced_free(gw);
        wjl_matrix_free(m);
    }
}

#[test]
fn matches_library_results() {
    let x = [0.5, -1.0, 0.0, 2.0, 0.25];
    let y = [1.0, 0.0, 0.5, -1.0, 0.0];
    let w = [1.0, 0.0, 2.0, 1.0, 3.0];
    let m = matrix(5, 32, 11);
    let (gx, gy, gw) = (reduce(m, &x), reduce(m, &y), reduce(m, &w));
    let a = wjl::ProjectionMatrix::sample(5, 32, 11).unwrap();
    let (rx, ry, rw) = (a.reduce(&x).unwrap(), a.reduce(&y).unwrap(), a.reduce(&w).unwrap());

    let mut out = 0.0;
    assert_eq!(unsafe { wjl_rho(gx, gw, &mut out) }, WjlStatus::Ok);
    assert_eq!(out, wjl::rho(&rx, &rw).unwrap());
    assert_eq!(unsafe { wjl_rho_pairwise(gx, gy, gw, &mut out) }, WjlStatus::Ok);
    assert_eq!(out, wjl::rho_pairwise(&rx, &ry, &rw).unwrap());

    let idx = [0usize, 1, 3, 4];
    let vals = [0.5, -1.0, 2.0, 0.25];
    let mut gs = ptr::null_mut();
    assert_eq!(unsafe { wjl_reduce_sparse(m, idx.as_ptr(), vals.as_ptr(), 4, &mut gs) }, WjlStatus::Ok);
    assert_eq!(unsafe { wjl_rho(gs, gw, &mut out) }, WjlStatus::Ok);
    assert_eq!(out, wjl::rho(&rx, &rw).unwrap());

    unsafe {
        for g in [gx, gy, gw, gs] {
            wjl_reduced_free(g);
        }
        wjl_matrix_free(m);
    }
}

#[test]
fn provenance_mismatch_is_reported() {
    let (m1, m2) = (matrix(3, 8, 1), matrix(3, 8, 2));
    let gx = reduce(m1, &[1.0, 2.0, 3.0]);
    let gw = reduce(m2, &[1.0, 1.0, 1.0]);
    let mut out = -7.0;
    assert_eq!(unsafe { wjl_rho(gx, gw, &mut out) }, WjlStatus::ProvenanceMismatch);
    assert_eq!(out, -7.0);
    assert!(!last_error().is_empty());
    unsafe {
        wjl_reduced_free(gx);
        wjl_reduced_free(gw);
        wjl_matrix_free(m1);
        wjl_matrix_free(m2);
    }
}

#[test]
fn argument_errors() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { wjl_matrix_new(0, 4, 0, &mut m) }, WjlStatus::InvalidArgument);
    assert!(m.is_null());
    assert_eq!(unsafe { wjl_matrix_new(4, 4, 0, ptr::null_mut()) }, WjlStatus::NullPointer);
    let m = matrix(4, 4, 0);
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { wjl_reduce(m, [1.0, 2.0].as_ptr(), 2, &mut g) }, WjlStatus::DimensionMismatch);
    assert_eq!(unsafe { wjl_reduce(ptr::null(), [1.0].as_ptr(), 1, &mut g) }, WjlStatus::NullPointer);
    assert!(last_error().contains("matrix"));
    let mut out = 0.0;
    assert_eq!(unsafe { wjl_rho(ptr::null(), ptr::null(), &mut out) }, WjlStatus::NullPointer);
    unsafe {
        wjl_matrix_free(m);
        wjl_matrix_free(ptr::null_mut());
    }
}

#[test]
fn reduced_serialization_round_trip() {
    let m = matrix(4, 6, 9);
    let g = reduce(m, &[1.0, -2.0, 0.5, 4.0]);
    let mut needed = 0;
    assert_eq!(unsafe { wjl_reduced_serialize(g, ptr::null_mut(), 0, &mut needed) }, WjlStatus::BufferTooSmall);
    assert_eq!(needed, wjl::ReducedVector::encoded_len(6));
    let mut buf = vec![0u8; needed];
    let mut written = 0;
    assert_eq!(unsafe { wjl_reduced_serialize(g, buf.as_mut_ptr(), buf.len(), &mut written) }, WjlStatus::Ok);
    assert_eq!(written, needed);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { wjl_reduced_deserialize(buf.as_ptr(), buf.len(), &mut back) }, WjlStatus::Ok);
    let mut a = 0.0;
    let mut b = 0.0;
    unsafe {
        assert_eq!(wjl_rho(g, g, &mut a), WjlStatus::Ok);
        assert_eq!(wjl_rho(back, back, &mut b), WjlStatus::Ok);
    }
    assert_eq!(a, b);
    assert_eq!(unsafe { wjl_reduced_deserialize(buf.as_ptr(), 3, &mut back) }, WjlStatus::FormatError);
    unsafe {
        wjl_reduced_free(g);
        wjl_reduced_free(back);
        wjl_matrix_free(m);
    }
}

#[test]
fn planners() {
    let mut k = 0;
    assert_eq!(unsafe { wjl_required_k(0.5, 0.1, 1.0, &mut k) }, WjlStatus::Ok);
    let params = wjl::PlanParams::new(0.5, 0.1, 1.0).unwrap();
    assert_eq!(k, wjl::required_k(&params));
    let (mut r, mut m) = (0, 0);
    assert_eq!(unsafe { wjl_plan_sketch(1.0, 0.5, 1.0, &mut r, &mut m) }, WjlStatus::Ok);
    assert_eq!((r, m), (9, 137));
    assert_eq!(unsafe { wjl_plan_sketch(0.0, 0.5, 1.0, &mut r, &mut m) }, WjlStatus::InvalidArgument);
}

#[test]
fn sketch_lifecycle() {
    let mut sx = ptr::null_mut();
    assert_eq!(unsafe { wjl_sketch_new(5, 64, 42, WjlStreamMode::Turnstile, &mut sx) }, WjlStatus::Ok);
    let mut sw = ptr::null_mut();
    let mut part = ptr::null_mut();
    unsafe {
        assert_eq!(wjl_sketch_empty_like(sx, &mut sw), WjlStatus::Ok);
        assert_eq!(wjl_sketch_empty_like(sx, &mut part), WjlStatus::Ok);
        assert_eq!(wjl_sketch_update(sx, 3, 2.0), WjlStatus::Ok);
        assert_eq!(wjl_sketch_update(part, 7, -1.0), WjlStatus::Ok);
        assert_eq!(wjl_sketch_update(sw, 3, 1.5), WjlStatus::Ok);
    }
    let mut merged = ptr::null_mut();
    assert_eq!(unsafe { wjl_sketch_merge(sx, part, &mut merged) }, WjlStatus::Ok);

    let mut reference = wjl::StreamSketch::new(wjl::SketchConfig::new(5, 64, 42, wjl::StreamMode::Turnstile).unwrap());
    let mut ref_w = reference.empty_like();
    reference.update(3, 2.0).unwrap();
    reference.update(7, -1.0).unwrap();
    ref_w.update(3, 1.5).unwrap();
    let expected = wjl::StreamSketch::estimate(&reference, &ref_w).unwrap().value;

    let mut est = 0.0;
    assert_eq!(unsafe { wjl_sketch_estimate(merged, sw, &mut est) }, WjlStatus::Ok);
    assert_eq!(est, expected);

    let mut needed = 0;
    assert_eq!(unsafe { wjl_sketch_serialize(merged, ptr::null_mut(), 0, &mut needed) }, WjlStatus::BufferTooSmall);
    assert_eq!(needed, wjl::StreamSketch::encoded_len(5, 64));
    let mut buf = vec![0u8; needed];
    let mut written = 0;
    assert_eq!(unsafe { wjl_sketch_serialize(merged, buf.as_mut_ptr(), needed, &mut written) }, WjlStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { wjl_sketch_deserialize(buf.as_ptr(), written, &mut back) }, WjlStatus::Ok);
    let mut est2 = 0.0;
    assert_eq!(unsafe { wjl_sketch_estimate(back, sw, &mut est2) }, WjlStatus::Ok);
    assert_eq!(est2, est);

    let mut other = ptr::null_mut();
    assert_eq!(unsafe { wjl_sketch_new(5, 64, 43, WjlStreamMode::Turnstile, &mut other) }, WjlStatus::Ok);
    assert_eq!(unsafe { wjl_sketch_estimate(sx, other, &mut est) }, WjlStatus::ConfigMismatch);
    unsafe {
        for s in [sx, sw, part, merged, back, other] {
            wjl_sketch_free(s);
        }
    }
}

#[test]
fn oracle_functions() {
    let x = [1.0, 2.0, 0.0];
    let w = [3.0, 0.5, 7.0];
    let mut out = 0.0;
    assert_eq!(unsafe { wjl_weighted_sq_norm(x.as_ptr(), w.as_ptr(), 3, &mut out) }, WjlStatus::Ok);
    assert_eq!(out, 10.0);
    assert_eq!(unsafe { wjl_distortion(x.as_ptr(), w.as_ptr(), 3, &mut out) }, WjlStatus::Ok);
    let expected = (5.0f64).sqrt() * (58.25f64).sqrt() / 10.0f64.sqrt();
    assert!((out - expected).abs() < 1e-12);
    let negative = [-1.0, 0.0, 0.0];
    assert_eq!(unsafe { wjl_weighted_sq_norm(x.as_ptr(), negative.as_ptr(), 3, &mut out) }, WjlStatus::InvalidArgument);
    let zeros = [0.0; 3];
    assert_eq!(unsafe { wjl_distortion(x.as_ptr(), zeros.as_ptr(), 3, &mut out) }, WjlStatus::InvalidArgument);
}

#[test]
fn header_is_valid_c() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let header = std::fs::read_to_string(format!("{include}/wjl.h")).unwrap();
    for name in ["wjl_matrix_new", "wjl_rho_pairwise", "wjl_sketch_merge", "wjl_last_error_message"] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"wjl.h\"\nint main(void) {\n  WjlMatrix *m = 0;\n  WjlStatus s = wjl_matrix_new(4, 2, 1, &m);\n  wjl_matrix_free(m);\n  return s == WJL_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status()
        .expect("C compiler available");
    assert!(status.success());
}
