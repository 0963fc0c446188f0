use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use carleman_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = carleman_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

const NILPOTENT: &str = r#"{"domain": {"kind": "disk", "center": [0.0, 0.0], "a": 1.0, "radial_points": 6, "angular_points": 12},
    "field": {"kind": "constant_nilpotent", "value": [0.5, 0.0]}}"#;

#[test]
fn constant_nilpotent_gamma_matches_the_indicator_transform() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(carleman_scenario_new(cstr(NILPOTENT).as_ptr(), &mut s), CarlemanStatus::Ok);
        assert_eq!(carleman_scenario_node_count(s), 72);
        let mut hash = [0 as std::ffi::c_char; 65];
        assert_eq!(carleman_scenario_hash(s, hash.as_mut_ptr(), hash.len()), CarlemanStatus::Ok);
        assert_eq!(CStr::from_ptr(hash.as_ptr()).to_bytes().len(), 64);

        let mut g = ptr::null_mut();
        assert_eq!(carleman_solve(s, ptr::null(), 0, &mut g), CarlemanStatus::Ok);
        assert_eq!(carleman_gamma_dim(g), 2);
        // Γ = I + 0.5 C[χ] E₁₂ with C[χ](z) = 1/z outside the unit disk
        let mut m = [CarlemanComplex::default(); 4];
        let z = CarlemanComplex { re: 2.0, im: 1.0 };
        assert_eq!(carleman_gamma_evaluate(g, z, m.as_mut_ptr()), CarlemanStatus::Ok);
        let expect = num_complex::Complex64::new(0.5, 0.0) / num_complex::Complex64::new(2.0, 1.0);
        assert!((m[1].re - expect.re).abs() < 1e-13 && (m[1].im - expect.im).abs() < 1e-13);
        assert_eq!((m[0].re, m[3].re, m[2].re), (1.0, 1.0, 0.0));
        assert_eq!(carleman_gamma_residue(g, m.as_mut_ptr()), CarlemanStatus::Ok);
        assert!((m[1].re - 0.5).abs() < 1e-13);
        assert!(carleman_gamma_unimodularity(g) < 1e-14);

        let mut ld = CarlemanComplex::default();
        let t = [CarlemanComplex { re: 0.1, im: 0.0 }];
        assert_eq!(carleman_log_det2(s, t.as_ptr(), 1, &mut ld), CarlemanStatus::Ok);
        assert!(ld.re.abs() < 1e-12 && ld.im.abs() < 1e-12, "nilpotent kernel has det₂ = 1");

        carleman_gamma_free(g);
        carleman_scenario_free(s);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut s = ptr::null_mut();
        let st = carleman_scenario_new(cstr(r#"{"domain": {"kind": "square"}}"#).as_ptr(), &mut s);
        assert_eq!(st, CarlemanStatus::Config);
        assert!(s.is_null());
        assert!(last_error().contains("square"));
        carleman_clear_error();
        assert!(carleman_last_error().is_null());

        assert_eq!(carleman_scenario_new(ptr::null(), &mut s), CarlemanStatus::InvalidPointer);
        assert_eq!(carleman_scenario_new(cstr("").as_ptr(), ptr::null_mut()), CarlemanStatus::InvalidPointer);

        assert_eq!(carleman_scenario_new(cstr(NILPOTENT).as_ptr(), &mut s), CarlemanStatus::Ok);
        let mut g = ptr::null_mut();
        let huge = [CarlemanComplex { re: 5000.0, im: 0.0 }];
        assert_eq!(carleman_solve(s, huge.as_ptr(), 1, &mut g), CarlemanStatus::Solver);
        assert!(g.is_null());
        assert!(last_error().contains("overflow"));
        let mut psi = CarlemanComplex::default();
        assert_eq!(carleman_nls_psi(s, 0.0, 0.0, 0.0, &mut psi), CarlemanStatus::Config);
        let mut small = [0 as std::ffi::c_char; 8];
        assert_eq!(carleman_scenario_hash(s, small.as_mut_ptr(), small.len()), CarlemanStatus::Config);
        carleman_scenario_free(s);

        assert_eq!(carleman_gamma_dim(ptr::null()), 0);
        assert!(carleman_gamma_unimodularity(ptr::null()).is_nan());
        carleman_scenario_free(ptr::null_mut());
        carleman_gamma_free(ptr::null_mut());
        assert_eq!(carleman_run(cstr("no-such").as_ptr(), cstr("").as_ptr()), CarlemanStatus::Config);
    }
}

#[test]
fn nls_psi_and_run() {
    let dir = std::env::temp_dir().join(format!("carleman-ffi-{}", std::process::id()));
    let json = format!(
        r#"{{"domain": {{"kind": "disk", "center": [0.0, 1.0], "a": 0.5, "radial_points": 12, "angular_points": 24}},
            "field": {{"kind": "nls_beta", "beta": {{"kind": "constant", "value": [1.0, 0.0]}}}},
            "output_dir": {}}}"#,
        serde_json_string(&dir.display().to_string())
    );
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(carleman_scenario_new(cstr(&json).as_ptr(), &mut s), CarlemanStatus::Ok);
        let mut psi = CarlemanComplex::default();
        assert_eq!(carleman_nls_psi(s, 0.1, 0.0, 0.0, &mut psi), CarlemanStatus::Ok);
        assert!(psi.re.is_finite() && (psi.re != 0.0 || psi.im != 0.0));
        carleman_scenario_free(s);
        assert_eq!(carleman_run(cstr("nls-solve").as_ptr(), cstr(&json).as_ptr()), CarlemanStatus::Ok);
    }
    assert!(dir.join("nls_solve.json").exists());
    assert!(dir.join("nls_solve_psi.csv").exists());
    let _ = std::fs::remove_dir_all(dir);
}

fn serde_json_string(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(carleman_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/carleman.h");
    let text = std::fs::read_to_string(&header).expect("generated header");
    for name in [
        "carleman_last_error",
        "carleman_clear_error",
        "carleman_version",
        "carleman_scenario_new",
        "carleman_scenario_free",
        "carleman_scenario_node_count",
        "carleman_scenario_hash",
        "carleman_solve",
        "carleman_gamma_free",
        "carleman_gamma_dim",
        "carleman_gamma_evaluate",
        "carleman_gamma_residue",
        "carleman_gamma_unimodularity",
        "carleman_log_det2",
        "carleman_nls_psi",
        "carleman_run",
        "CARLEMAN_STATUS_OK",
        "typedef struct CarlemanScenario CarlemanScenario",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let src = std::env::temp_dir().join(format!("carleman-header-{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"carleman.h\"\nint main(void) { CarlemanScenario *s = 0; \
         CarlemanStatus st = carleman_scenario_new(\"\", &s); carleman_scenario_free(s); return (int)st; }\n",
    )
    .unwrap();
    let Ok(out) = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    let _ = std::fs::remove_file(&src);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
