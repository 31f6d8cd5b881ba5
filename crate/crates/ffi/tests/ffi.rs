use foliation_lab_ffi::*;
use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

fn c(re: f64, im: f64) -> FlComplex {
    FlComplex { re, im }
}

fn last_error() -> String {
    let p = fl_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(fl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn linear_map_through_the_abi() {
    let (mut v, mut d) = (c(0.0, 0.0), c(0.0, 0.0));
    let st = unsafe {
        fl_poincare(
            c(0.0, 0.0),
            c(0.2, 0.0),
            c(0.05, 0.0),
            1,
            ptr::null(),
            &mut v,
            &mut d,
        )
    };
    assert_eq!(st, FlStatus::Ok);
    let expected = (0.4 * std::f64::consts::PI).exp();
    assert!((v.re - 0.05 * expected).abs() < 1e-9 && v.im.abs() < 1e-12);
    assert!((d.re - expected).abs() < 1e-8);
    assert!(fl_last_error_message().is_null());
}

#[test]
fn errors_map_to_codes_with_messages() {
    let (mut v, mut d) = (c(0.0, 0.0), c(0.0, 0.0));
    let st = unsafe {
        fl_poincare(
            c(0.0, 0.0),
            c(0.2, 0.0),
            c(1.5, 0.0),
            1,
            ptr::null(),
            &mut v,
            &mut d,
        )
    };
    assert_eq!(st, FlStatus::OutsideChart);
    assert!(last_error().contains("outside"));

    let st = unsafe {
        fl_poincare(
            c(0.0, 0.0),
            c(0.2, 0.0),
            c(0.1, 0.0),
            1,
            ptr::null(),
            ptr::null_mut(),
            &mut d,
        )
    };
    assert_eq!(st, FlStatus::NullPointer);

    let st = unsafe {
        fl_poincare(
            c(f64::NAN, 0.0),
            c(0.2, 0.0),
            c(0.1, 0.0),
            1,
            ptr::null(),
            &mut v,
            &mut d,
        )
    };
    assert_eq!(st, FlStatus::InvalidArgument);

    let mut q = c(0.0, 0.0);
    let st = unsafe { fl_melnikov(2, c(0.1, 0.0), 16, &mut q, &mut v) };
    assert_eq!(st, FlStatus::InvalidArgument);
}

#[test]
fn options_validate_their_inputs() {
    let opts = fl_options_new();
    unsafe {
        assert_eq!(
            fl_options_set_tolerances(opts, -1.0, 1e-12, 10),
            FlStatus::InvalidArgument
        );
        assert_eq!(
            fl_options_set_guard(opts, 2.0, 3.0),
            FlStatus::InvalidArgument
        );
        assert_eq!(
            fl_options_set_tolerances(opts, 1e-9, 1e-11, 50_000),
            FlStatus::Ok
        );
        assert_eq!(fl_options_set_guard(opts, 0.1, 10.0), FlStatus::Ok);
        assert_eq!(
            fl_options_set_guard(ptr::null_mut(), 0.1, 10.0),
            FlStatus::NullPointer
        );
        fl_options_free(opts);
        fl_options_free(ptr::null_mut());
    }
}

#[test]
fn melnikov_and_pontryagin() {
    let (mut q, mut cf) = (c(0.0, 0.0), c(0.0, 0.0));
    assert_eq!(
        unsafe { fl_melnikov(2, c(0.1, 0.0), 512, &mut q, &mut cf) },
        FlStatus::Ok
    );
    assert!(((q.re - cf.re).powi(2) + (q.im - cf.im).powi(2)).sqrt() < 1e-12);

    let mut k = c(0.0, 0.0);
    assert_eq!(
        unsafe { fl_map_resonant_coefficient(2, &mut k) },
        FlStatus::Ok
    );
    assert_eq!(k.re, 0.0);
    assert!((k.im - std::f64::consts::PI * 0.375 / 2.0).abs() < 1e-15);
    assert_eq!(
        unsafe { fl_map_resonant_coefficient(0, &mut k) },
        FlStatus::InvalidArgument
    );

    let mut p = c(0.0, 0.0);
    assert_eq!(
        unsafe { fl_pontryagin(c(0.05, 0.0), 2.0, 256, &mut p) },
        FlStatus::Ok
    );
    assert!((p.re + 4.0 * std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn orbits_winding_and_continuation() {
    let (a, eps) = (c(0.05, 0.0), c(0.001, 0.5));
    let mut count = 0i64;
    let st = unsafe { fl_winding_count(a, eps, 2, c(0.0, 0.0), 0.9, 128, ptr::null(), &mut count) };
    assert_eq!(st, FlStatus::Ok);
    assert_eq!(count, 2);

    let mut set: *mut FlOrbitSet = ptr::null_mut();
    assert_eq!(
        unsafe { fl_find_orbits(a, eps, 2, ptr::null(), &mut set) },
        FlStatus::Ok
    );
    assert_eq!(unsafe { fl_orbit_set_len(set) }, 1);

    let mut pts = [c(0.0, 0.0); 2];
    let mut n = 0usize;
    assert_eq!(
        unsafe { fl_orbit_set_points(set, 0, pts.as_mut_ptr(), 1, &mut n) },
        FlStatus::InvalidArgument
    );
    assert_eq!(n, 2);
    assert_eq!(
        unsafe { fl_orbit_set_points(set, 0, pts.as_mut_ptr(), 2, &mut n) },
        FlStatus::Ok
    );
    let sum = (pts[0].re + pts[1].re, pts[0].im + pts[1].im);
    assert!(
        sum.0.abs() < 0.02 && sum.1.abs() < 0.02,
        "points of a 2-cycle are nearly opposite"
    );

    let (mut res, mut mult, mut sep) = (0.0, c(0.0, 0.0), 0.0);
    assert_eq!(
        unsafe { fl_orbit_set_diagnostics(set, 0, &mut res, &mut mult, &mut sep) },
        FlStatus::Ok
    );
    assert!(res < 1e-10 && sep > 1e-6);
    assert_eq!(
        unsafe { fl_orbit_set_diagnostics(set, 3, &mut res, &mut mult, &mut sep) },
        FlStatus::IndexOutOfRange
    );

    let path = [eps, c(0.0, 0.0)];
    let mut trace: *mut FlTrace = ptr::null_mut();
    let st = unsafe { fl_continue(set, 0, path.as_ptr(), 2, 0.2, 5.0, ptr::null(), &mut trace) };
    assert_eq!(st, FlStatus::Ok);
    let len = unsafe { fl_trace_len(trace) };
    assert!(len >= 2);
    let (mut e, mut u1, mut inside) = (c(0.0, 0.0), c(0.0, 0.0), false);
    assert_eq!(
        unsafe { fl_trace_sample(trace, 0, &mut e, &mut u1, &mut inside) },
        FlStatus::Ok
    );
    assert_eq!(e, eps);
    assert!(inside);
    assert_eq!(
        unsafe { fl_trace_terminal(trace) },
        FlTerminal::EscapeConfirmed
    );
    let mut star = c(0.0, 0.0);
    assert_eq!(
        unsafe { fl_trace_escape_eps(trace, &mut star) },
        FlStatus::Ok
    );
    let r = (star.re * star.re + star.im * star.im).sqrt();
    assert!(r > 0.0 && r < 0.5 + 1e-3);

    unsafe {
        fl_trace_free(trace);
        fl_orbit_set_free(set);
    }
}

#[test]
fn empty_result_leaves_null_handle() {
    let mut set: *mut FlOrbitSet = ptr::NonNull::dangling().as_ptr();
    let st = unsafe { fl_find_orbits(c(0.0, 0.0), c(0.001, 0.5), 2, ptr::null(), &mut set) };
    assert_eq!(st, FlStatus::EmptyResult);
    assert!(set.is_null());
    assert_eq!(unsafe { fl_orbit_set_len(set) }, 0);
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/<test-binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_abi() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/foliation_lab.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "FOLIATION_LAB_H",
        "typedef struct FlOptions FlOptions;",
        "typedef struct FlOrbitSet FlOrbitSet;",
        "typedef struct FlTrace FlTrace;",
        "FL_STATUS_OK = 0",
        "FL_STATUS_EMPTY_RESULT",
        "fl_find_orbits(",
        "fl_continue(",
        "fl_trace_escape_eps(",
        "fl_last_error_message(",
    ] {
        assert!(text.contains(name), "header is missing {name}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("libfoliation_lab_ffi.a");
    let cc = Command::new("cc").arg("--version").output();
    if !lib.exists() || cc.is_err() {
        eprintln!(
            "skipping: no C compiler or static library at {}",
            lib.display()
        );
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke program failed to compile");
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "smoke program exited with {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    let printed = String::from_utf8(run.stdout).unwrap();
    let parts: Vec<f64> = printed
        .split_whitespace()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(parts.len(), 2);
    assert!((parts[0].hypot(parts[1]) - 0.6458).abs() < 0.01);
}
