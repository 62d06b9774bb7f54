use std::ffi::{CStr, CString};
use std::ptr;

use ofdm_precode_ffi::*;

const SMALL: &str = r#"
schema_version = 1
name = "ffi"
seed = 3

[carrier]
fft_size = 128
cp_len = 9
n_allocated = 48

[mask]
frequencies_khz = [-480.0, 480.0]
levels_dbm_per_100khz = [-40.0, -40.0]

[algorithm]
kind = "ssp"
n_iter = 20

[calibration]
n_symbols = 64
"#;

fn last_error() -> String {
    let p = opc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario(text: &str) -> *mut OpcScenario {
    let text = CString::new(text).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { opc_scenario_parse(text.as_ptr(), &mut s) }, OpcStatus::Ok);
    s
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(opc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn precode_round_trip() {
    let s = scenario(SMALL);
    let mut n = 0;
    assert_eq!(unsafe { opc_scenario_n_allocated(s, &mut n) }, OpcStatus::Ok);
    assert_eq!(n, 48);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { opc_precoder_new(s, &mut p) }, OpcStatus::Ok);
    unsafe { opc_scenario_free(s) };
    let mut m = 0;
    assert_eq!(unsafe { opc_precoder_n_constraints(p, &mut m) }, OpcStatus::Ok);
    assert_eq!(m, 2);

    let mut d = vec![0.0; 2 * n];
    assert_eq!(unsafe { opc_precoder_symbol(p, 0, d.as_mut_ptr(), n) }, OpcStatus::Ok);
    assert!(d.iter().any(|v| *v != 0.0));
    let mut out = vec![0.0; 2 * n];
    let mut stats = OpcSymbolStats::default();
    assert_eq!(
        unsafe { opc_precoder_apply(p, d.as_ptr(), n, out.as_mut_ptr(), &mut stats) },
        OpcStatus::Ok
    );
    assert!(stats.evm_pct > 0.0);
    assert!(stats.max_violation_db <= 0.01);
    assert!(stats.iterations >= 1);

    // In-place use gives the same answer.
    let mut inplace = d.clone();
    let ptr_ = inplace.as_mut_ptr();
    assert_eq!(unsafe { opc_precoder_apply(p, ptr_, n, ptr_, ptr::null_mut()) }, OpcStatus::Ok);
    assert_eq!(inplace, out);
    unsafe { opc_precoder_free(p) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let bad = CString::new("schema_version = 1\nbogus = 2\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { opc_scenario_parse(bad.as_ptr(), &mut s) }, OpcStatus::InvalidConfig);
    assert!(s.is_null());
    assert!(last_error().contains("bogus"));

    let name = CString::new("no_such_preset").unwrap();
    assert_eq!(unsafe { opc_scenario_preset(name.as_ptr(), &mut s) }, OpcStatus::InvalidConfig);

    assert_eq!(unsafe { opc_scenario_parse(ptr::null(), &mut s) }, OpcStatus::NullPointer);
    let mut n = 0;
    assert_eq!(unsafe { opc_scenario_n_allocated(ptr::null(), &mut n) }, OpcStatus::NullPointer);

    let mut re = 0.0;
    let mut im = 0.0;
    assert_eq!(unsafe { opc_leakage_kernel(0, 0, 1.0, &mut re, &mut im) }, OpcStatus::InvalidArgument);
    // A successful call clears the message.
    assert_eq!(unsafe { opc_leakage_kernel(64, 4, 0.0, &mut re, &mut im) }, OpcStatus::Ok);
    assert!(opc_last_error_message().is_null());
    assert!((re - 68.0 / 8.0).abs() < 1e-12 && im.abs() < 1e-12);
}

#[test]
fn length_mismatch_is_rejected() {
    let s = scenario(SMALL);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { opc_precoder_new(s, &mut p) }, OpcStatus::Ok);
    let d = vec![0.5; 2 * 47];
    let mut out = vec![0.0; 2 * 47];
    let st = unsafe { opc_precoder_apply(p, d.as_ptr(), 47, out.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(st, OpcStatus::DimensionMismatch);
    assert!(last_error().contains("48"));
    unsafe {
        opc_precoder_free(p);
        opc_scenario_free(s);
        opc_precoder_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_exports() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ofdm_precode.h")).unwrap();
    for f in [
        "opc_version",
        "opc_last_error_message",
        "opc_scenario_parse",
        "opc_scenario_preset",
        "opc_scenario_free",
        "opc_precoder_new",
        "opc_precoder_apply",
        "opc_precoder_free",
        "opc_leakage_kernel",
        "OPC_STATUS_DIMENSION_MISMATCH",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
