use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use f2m_ffi::*;

fn last_error() -> String {
    let p = f2m_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn square() -> *mut F2mInstance {
    let xy = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let mut inst = ptr::null_mut();
    let status = unsafe { f2m_instance_from_points(xy.as_ptr(), 4, F2M_DISTANCE_EXACT, &mut inst) };
    assert_eq!(status, F2mStatus::Ok);
    inst
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(f2m_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn square_round_trip() {
    let inst = square();
    let mut cfg = f2m_config_default();
    cfg.k = 3;
    cfg.threads = 1;
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { f2m_solve(inst, &cfg, &mut res) }, F2mStatus::Ok);
    assert!(f2m_last_error().is_null());

    unsafe {
        assert!((f2m_result_objective(res) - 4.0).abs() < 1e-12);
        assert!(f2m_result_gap(res).abs() < 1e-9);
        assert_eq!(f2m_result_node_count(res), 4);
        assert_eq!(f2m_result_edge_count(res), 6);
        assert_eq!(f2m_result_restarts(res), 0);

        let mut total = 0.0;
        for i in 0..6 {
            let (mut u, mut v, mut c, mut x) = (0usize, 0usize, 0.0, 0.0);
            assert_eq!(f2m_result_edge(res, i, &mut u, &mut v, &mut c, &mut x), F2mStatus::Ok);
            assert!(u < v);
            total += c * x;
        }
        assert!((total - 4.0).abs() < 1e-12);
        assert_eq!(
            f2m_result_edge(res, 6, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()),
            F2mStatus::IndexOutOfRange
        );
        assert!(last_error().contains("out of range"));

        let dir = tempfile::tempdir().unwrap();
        let sol = CString::new(dir.path().join("sq.sol").to_str().unwrap()).unwrap();
        let lp = CString::new(dir.path().join("sq.lp").to_str().unwrap()).unwrap();
        assert_eq!(f2m_result_write_solution(res, sol.as_ptr()), F2mStatus::Ok);
        assert_eq!(f2m_result_write_lp(res, lp.as_ptr()), F2mStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("sq.sol")).unwrap();
        assert_eq!(text.lines().count(), 5);
        let lp_text = std::fs::read_to_string(dir.path().join("sq.lp")).unwrap();
        assert!(lp_text.contains("Subject To"));

        f2m_result_free(res);
        f2m_instance_free(inst);
    }
}

#[test]
fn parse_and_generate() {
    let text = CString::new(
        "NAME: t\nTYPE: TSP\nDIMENSION: 4\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 0\n3 3 4\n4 0 4\nEOF\n",
    )
    .unwrap();
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(f2m_instance_parse(text.as_ptr(), &mut inst), F2mStatus::Ok);
        assert_eq!(f2m_instance_len(inst), 4);
        f2m_instance_free(inst);

        assert_eq!(f2m_instance_generate(200, 3, 1000.0, &mut inst), F2mStatus::Ok);
        assert_eq!(f2m_instance_len(inst), 200);
        let mut cfg = f2m_config_default();
        cfg.mode = F2M_MODE_GAUSS_SEIDEL;
        cfg.k = 8;
        let mut res = ptr::null_mut();
        assert_eq!(f2m_solve(inst, &cfg, &mut res), F2mStatus::Ok);
        assert!(f2m_result_gap(res) <= 1e-6 * f2m_result_objective(res));
        assert!(f2m_result_sweeps(res) > 0);
        f2m_result_free(res);
        f2m_instance_free(inst);
    }
}

#[test]
fn error_codes() {
    let mut inst = ptr::null_mut();
    let mut res = ptr::null_mut();
    unsafe {
        let bad = CString::new("DIMENSION: 2\nNODE_COORD_SECTION\n1 0 0\n").unwrap();
        assert_eq!(f2m_instance_parse(bad.as_ptr(), &mut inst), F2mStatus::ParseError);
        assert!(!last_error().is_empty());

        assert_eq!(f2m_instance_parse(ptr::null(), &mut inst), F2mStatus::NullPointer);
        let missing = CString::new("/nonexistent/x.tsp").unwrap();
        assert_eq!(f2m_instance_read(missing.as_ptr(), &mut inst), F2mStatus::IoError);
        assert_eq!(f2m_solve(ptr::null(), ptr::null(), &mut res), F2mStatus::NullPointer);

        let sq = square();
        let mut cfg = f2m_config_default();
        cfg.k = 3;
        cfg.mode = 9;
        assert_eq!(f2m_solve(sq, &cfg, &mut res), F2mStatus::InvalidArgument);
        cfg.mode = F2M_MODE_JACOBI;
        cfg.eta = 0.0;
        assert_eq!(f2m_solve(sq, &cfg, &mut res), F2mStatus::InvalidArgument);
        assert!(res.is_null());
        f2m_instance_free(sq);

        // Null handles are accepted by the free functions and getters.
        f2m_instance_free(ptr::null_mut());
        f2m_result_free(ptr::null_mut());
        assert!(f2m_result_objective(ptr::null()).is_nan());
        assert_eq!(f2m_instance_len(ptr::null()), 0);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/f2m.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["f2m_solve", "f2m_result_edge", "F2M_STATUS_SOLVE_FAILED", "typedef struct F2mInstance F2mInstance"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).output()
    else {
        eprintln!("no C compiler, syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
