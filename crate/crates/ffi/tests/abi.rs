use std::ffi::{CStr, CString};
use std::ptr;

use sgspline_ffi::*;

fn last_error() -> String {
    let p = sg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn space_partition_of_unity() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(sg_space_new(3, 2, &mut s), SgStatus::Ok);
        assert_eq!(sg_space_dim(s), 7);
        let mut v = vec![0.0; 7];
        assert_eq!(sg_space_eval_basis(s, 0.3, 0, v.as_mut_ptr(), v.len()), SgStatus::Ok);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(sg_space_eval_basis(s, 0.3, 0, v.as_mut_ptr(), 3), SgStatus::BufferTooSmall);
        assert_eq!(sg_space_eval_basis(s, 1.5, 0, v.as_mut_ptr(), 7), SgStatus::OutOfDomain);
        assert!(!last_error().is_empty());
        sg_space_free(s);
        sg_space_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_report_messages() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(sg_space_new(2, 0, &mut s), SgStatus::InvalidArgument);
        assert!(s.is_null());
        assert!(last_error().contains("level"));
        assert_eq!(sg_space_new(2, 3, ptr::null_mut()), SgStatus::NullPointer);
        assert_eq!(sg_space_dim(ptr::null()), 0);
        let mut out = 0.0;
        assert_eq!(sg_sparse_eval(ptr::null(), ptr::null(), 0, &mut out), SgStatus::NullPointer);
    }
}

#[test]
fn dimensions() {
    let (mut sp, mut full) = (0u64, 0u64);
    unsafe {
        assert_eq!(sg_sparse_dimension(2, 3, 1, &mut sp, &mut full), SgStatus::Ok);
    }
    assert_eq!((sp, full), (49, 81));
}

#[test]
fn sparse_projection_round_trip() {
    let target = CString::new("sin").unwrap();
    unsafe {
        let mut u = ptr::null_mut();
        assert_eq!(sg_sparse_project(2, 5, 2, 0, target.as_ptr(), 1.0, 0, &mut u), SgStatus::Ok);
        let x = [0.3, 0.7];
        let mut v = 0.0;
        assert_eq!(sg_sparse_eval(u, x.as_ptr(), 2, &mut v), SgStatus::Ok);
        let exact = (std::f64::consts::PI * 0.3).sin() * (std::f64::consts::PI * 0.7).sin();
        assert!((v - exact).abs() < 1e-3, "{v} vs {exact}");
        assert_eq!(sg_sparse_eval(u, x.as_ptr(), 3, &mut v), SgStatus::InvalidArgument);
        let mut e = 0.0;
        assert_eq!(sg_sparse_l2_error(u, target.as_ptr(), 1.0, 0, &mut e), SgStatus::Ok);
        assert!(e > 0.0 && e < 1e-3);
        sg_sparse_free(u);

        let bad = CString::new("nope").unwrap();
        let mut u = ptr::null_mut();
        assert_eq!(sg_sparse_project(2, 5, 2, 0, bad.as_ptr(), 1.0, 0, &mut u), SgStatus::InvalidArgument);
        assert!(last_error().contains("nope"));
    }
}

#[test]
fn geometry_round_trip() {
    let name = CString::new("distorted-square").unwrap();
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(sg_geometry_builtin(name.as_ptr(), &mut g), SgStatus::Ok);
        assert_eq!(sg_geometry_dims(g), 2);
        let xi = [0.25, 0.6];
        let mut x = [0.0; 2];
        let mut back = [0.0; 2];
        assert_eq!(sg_geometry_eval(g, xi.as_ptr(), x.as_mut_ptr(), 2), SgStatus::Ok);
        assert_eq!(sg_geometry_inverse(g, x.as_ptr(), back.as_mut_ptr(), 2), SgStatus::Ok);
        assert!((back[0] - xi[0]).abs() < 1e-10 && (back[1] - xi[1]).abs() < 1e-10);
        sg_geometry_free(g);

        let text = CString::new("degree = 1\ndims = 1\ncontrol_points\n0\n2\nend\n").unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(sg_geometry_parse(text.as_ptr(), &mut g), SgStatus::Ok);
        let mut y = 0.0;
        assert_eq!(sg_geometry_eval(g, [0.25].as_ptr(), &mut y, 1), SgStatus::Ok);
        assert!((y - 0.5).abs() < 1e-14);
        sg_geometry_free(g);

        let bad = CString::new("degree = 1\ndims = 1\ncontrol_points\n0\n-1\n").unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(sg_geometry_parse(bad.as_ptr(), &mut g), SgStatus::InvalidGeometry);
        assert!(g.is_null());
    }
}
