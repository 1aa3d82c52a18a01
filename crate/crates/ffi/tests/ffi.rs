use std::ffi::{CStr, CString};
use std::ptr;

use hyperreg_ffi::*;

fn last_error() -> String {
    let p = hr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn transport_design_through_handles() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(hr_system_transport(&mut sys), HrStatus::Ok);
        let (mut n, mut ell, mut m) = (0, 0, 0);
        assert_eq!(hr_system_dims(sys, &mut n, &mut ell, &mut m), HrStatus::Ok);
        assert_eq!((n, ell, m), (1, 1, 1));

        let mut cert = ptr::null_mut();
        assert_eq!(hr_design(sys, 1.0, &mut cert), HrStatus::Ok);
        let mut s = HrScalars::default();
        assert_eq!(hr_certificate_scalars(cert, &mut s), HrStatus::Ok);
        assert!((s.ki_star - (-0.5f64).exp()).abs() < 1e-9);
        assert!(s.ki < s.ki_star && s.p < s.p_max && s.mu_e > 0.0);

        let mut ki = [0.0; 1];
        assert_eq!(hr_certificate_ki_matrix(cert, ki.as_mut_ptr(), 1), HrStatus::Ok);
        assert!((ki[0] + 1.0).abs() < 1e-9);
        assert_eq!(hr_certificate_ki_matrix(cert, ki.as_mut_ptr(), 4), HrStatus::InvalidInput);

        let mut json = ptr::null_mut();
        assert_eq!(hr_certificate_to_json(cert, &mut json), HrStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("ki_star"));
        hr_string_free(json);

        let y_ref = [1.0];
        let mut traj = ptr::null_mut();
        assert_eq!(hr_simulate(sys, cert, y_ref.as_ptr(), 1, 40.0, 200, 0.9, &mut traj), HrStatus::Ok);
        let len = hr_trajectory_len(traj);
        assert!(len > 2);
        let (mut t, mut ve, mut y) = (0.0, 0.0, [0.0]);
        assert_eq!(hr_trajectory_frame(traj, len - 1, &mut t, &mut ve, y.as_mut_ptr(), 1), HrStatus::Ok);
        assert!((t - 40.0).abs() < 1e-9);
        assert!((y[0] - 1.0).abs() < 1e-2);
        assert_eq!(hr_trajectory_frame(traj, len, &mut t, &mut ve, y.as_mut_ptr(), 1), HrStatus::InvalidInput);

        hr_trajectory_free(traj);
        hr_certificate_free(cert);
        hr_system_free(sys);
    }
}

#[test]
fn null_handles_are_reported() {
    unsafe {
        let mut cert = ptr::null_mut();
        assert_eq!(hr_design(ptr::null(), 0.0, &mut cert), HrStatus::NullPointer);
        assert!(last_error().contains("system"));
        assert_eq!(hr_trajectory_len(ptr::null()), 0);
        hr_system_free(ptr::null_mut());
        hr_certificate_free(ptr::null_mut());
        hr_trajectory_free(ptr::null_mut());
        hr_string_free(ptr::null_mut());
    }
}

#[test]
fn infeasible_channel_maps_to_assumption_status() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(hr_system_saint_venant(1.0, 1.0, 1.5, 1.5, 1.0, 1.0, &mut sys), HrStatus::Ok);
        let mut cert = ptr::null_mut();
        assert_eq!(hr_design(sys, 0.0, &mut cert), HrStatus::Assumption);
        assert!(cert.is_null());
        assert!(last_error().contains("ISS"));
        hr_system_free(sys);
    }
}

#[test]
fn malformed_json_is_invalid_input() {
    let text = CString::new("{\"n\": 1").unwrap();
    let mut sys = ptr::null_mut();
    unsafe {
        assert_eq!(hr_system_from_json(text.as_ptr(), &mut sys), HrStatus::InvalidInput);
    }
    assert!(sys.is_null());
}

#[test]
fn heat_gain_values() {
    let mut g = HrHeatGain::default();
    unsafe {
        assert_eq!(hr_heat_gain(2000, &mut g), HrStatus::Ok);
        assert_eq!(hr_heat_gain(30, &mut g), HrStatus::InvalidInput);
    }
    assert!((g.ki_norm - 4.2433).abs() < 1e-3);
    assert!((g.cainvb[0] + 1.4).abs() < 1e-9);
    assert!(g.ki_star > 2.0e-3 && g.ki_star < 2.3e-3);
}

#[test]
fn forwarding_check_on_a_scalar_plant() {
    let (a, b, c) = ([-1.0], [1.0], [1.0]);
    let mut r = HrForwardingCheck::default();
    unsafe {
        assert_eq!(hr_forwarding_check(a.as_ptr(), b.as_ptr(), c.as_ptr(), 1, 1, 0.5, &mut r), HrStatus::Ok);
    }
    assert!(r.pass);
    assert!((r.ki_star - 1.0).abs() < 1e-12);
    let unstable = [1.0];
    unsafe {
        assert_eq!(
            hr_forwarding_check(unstable.as_ptr(), b.as_ptr(), c.as_ptr(), 1, 1, 0.5, &mut r),
            HrStatus::Assumption
        );
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hyperreg.h")).unwrap();
    for name in ["hr_design", "hr_simulate", "hr_last_error", "HR_STATUS_NULL_POINTER", "typedef struct HrSystem HrSystem"] {
        assert!(header.contains(name), "{name}");
    }
    // the header must compile as C when a compiler is available
    if let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99", "-"])
        .stdin(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut child| {
            use std::io::Write;
            let src = format!("{header}\nint main(void) {{ return hr_trajectory_len(0); }}\n");
            child.stdin.take().unwrap().write_all(src.as_bytes())?;
            child.wait()
        })
    {
        assert!(status.success());
    }
}
