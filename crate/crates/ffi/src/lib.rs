//! C ABI over `ofdm-precode`.
//!
//! Complex vectors cross the boundary as interleaved `re, im` doubles, so a
//! symbol of `n` subcarriers occupies `2n` doubles. Every function returns
//! an [`OpcStatus`]; on failure a message is available from
//! [`opc_last_error_message`] on the same thread. Handles are created by
//! `*_new`/`*_parse`/`*_preset` and must be released with the matching
//! `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use ofdm_precode::leakage::dirichlet_leakage;
use ofdm_precode::runner::{precode_symbol, prepare, Prepared};
use ofdm_precode::scenario::{load_scenario, parse_scenario};
use ofdm_precode::signal::gen_ofdm_symbol_indexed;
use ofdm_precode::{Error, Scenario};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpcStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad argument at the ABI level (length, encoding).
    InvalidArgument = 2,
    /// Scenario text, preset name or parameter rejected.
    InvalidConfig = 3,
    DimensionMismatch = 4,
    /// Rank-deficient leakage matrix or a vanishing update.
    Numerical = 5,
    Io = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Per-symbol result of [`opc_precoder_apply`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OpcSymbolStats {
    pub evm_pct: f64,
    /// NaN for NSP, which has no thresholds.
    pub max_violation_db: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A parsed scenario.
pub struct OpcScenario {
    inner: Scenario,
}

/// A scenario with its calibration and constraint set, ready to precode.
pub struct OpcPrecoder {
    scenario: Scenario,
    prepared: Prepared,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> OpcStatus {
    match e {
        Error::InvalidConfig { .. }
        | Error::ConfigParse(_)
        | Error::MaskParse { .. }
        | Error::UnknownPreset(_)
        | Error::SubcarrierOutOfRange { .. } => OpcStatus::InvalidConfig,
        Error::DimensionMismatch { .. } => OpcStatus::DimensionMismatch,
        Error::RankDeficient { .. } | Error::SingularUpdate { .. } | Error::ZeroNorm | Error::InsufficientSpan(_) => {
            OpcStatus::Numerical
        }
        Error::Symbol { source, .. } => status_of(source),
        Error::Io(_) | Error::Json(_) => OpcStatus::Io,
    }
}

struct Fail(OpcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OpcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OpcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error (panic caught at the C boundary)");
            OpcStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(OpcStatus::NullPointer, format!("`{what}` is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    non_null(s, what)?;
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(OpcStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

fn check_len(p: &OpcPrecoder, n: usize) -> Result<(), Fail> {
    let want = p.scenario.carrier.n_allocated();
    if n != want {
        return Err(Fail(
            OpcStatus::DimensionMismatch,
            format!("expected {want} subcarriers, got {n}"),
        ));
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn opc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a TOML scenario. Relative mask file paths resolve against the
/// current directory.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opc_scenario_parse(toml: *const c_char, out: *mut *mut OpcScenario) -> OpcStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = read_str(toml, "toml")?;
        let inner = parse_scenario(text)?;
        *out = Box::into_raw(Box::new(OpcScenario { inner }));
        Ok(())
    })
}

/// Loads a built-in scenario by name, or a scenario file by path.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opc_scenario_preset(name: *const c_char, out: *mut *mut OpcScenario) -> OpcStatus {
    guard(|| {
        non_null(out, "out")?;
        let name = read_str(name, "name")?;
        let inner = load_scenario(name)?;
        *out = Box::into_raw(Box::new(OpcScenario { inner }));
        Ok(())
    })
}

/// Number of allocated subcarriers of the scenario.
///
/// # Safety
/// `s` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opc_scenario_n_allocated(s: *const OpcScenario, out: *mut usize) -> OpcStatus {
    guard(|| {
        non_null(s, "scenario")?;
        non_null(out, "out")?;
        *out = (*s).inner.carrier.n_allocated();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opc_scenario_free(s: *mut OpcScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Measures the power calibration and builds the constraint set. This runs
/// the scenario's calibration batch and may take a moment.
///
/// # Safety
/// `s` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opc_precoder_new(s: *const OpcScenario, out: *mut *mut OpcPrecoder) -> OpcStatus {
    guard(|| {
        non_null(s, "scenario")?;
        non_null(out, "out")?;
        let scenario = (*s).inner.clone();
        let prepared = prepare(&scenario)?;
        *out = Box::into_raw(Box::new(OpcPrecoder { scenario, prepared }));
        Ok(())
    })
}

/// Number of mask constraints.
///
/// # Safety
/// `p` must be a live precoder handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opc_precoder_n_constraints(p: *const OpcPrecoder, out: *mut usize) -> OpcStatus {
    guard(|| {
        non_null(p, "precoder")?;
        non_null(out, "out")?;
        *out = (*p).prepared.constraints.len();
        Ok(())
    })
}

/// Writes data symbol `index` of the scenario's batch (its seed and
/// constellation) into `out`, which holds `2·n` doubles.
///
/// # Safety
/// `p` must be a live precoder handle and `out` valid for `2·n` doubles.
#[no_mangle]
pub unsafe extern "C" fn opc_precoder_symbol(p: *const OpcPrecoder, index: u64, out: *mut f64, n: usize) -> OpcStatus {
    guard(|| {
        non_null(p, "precoder")?;
        non_null(out, "out")?;
        let p = &*p;
        check_len(p, n)?;
        let s = &p.scenario;
        let d = gen_ofdm_symbol_indexed(&s.carrier, s.constellation, s.seed, index);
        let dst = std::slice::from_raw_parts_mut(out, 2 * n);
        for (pair, v) in dst.chunks_exact_mut(2).zip(d.as_slice()) {
            pair[0] = v.re;
            pair[1] = v.im;
        }
        Ok(())
    })
}

/// Precodes one symbol with the scenario's algorithm. `d` and `out` hold
/// `2·n` doubles each and may alias. `stats` may be null.
///
/// # Safety
/// `p` must be a live precoder handle; `d` and `out` valid for `2·n`
/// doubles; `stats` null or valid.
#[no_mangle]
pub unsafe extern "C" fn opc_precoder_apply(
    p: *const OpcPrecoder,
    d: *const f64,
    n: usize,
    out: *mut f64,
    stats: *mut OpcSymbolStats,
) -> OpcStatus {
    guard(|| {
        non_null(p, "precoder")?;
        non_null(d, "d")?;
        non_null(out, "out")?;
        let p = &*p;
        check_len(p, n)?;
        let src = std::slice::from_raw_parts(d, 2 * n);
        let data: Vec<Complex64> = src.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Fail(OpcStatus::InvalidArgument, "`d` contains non-finite values".into()));
        }
        let r = precode_symbol(&p.scenario.algorithm, &p.prepared, &data, &mut |_, _| {})?;
        let dst = std::slice::from_raw_parts_mut(out, 2 * n);
        for (pair, v) in dst.chunks_exact_mut(2).zip(&r.d_bar) {
            pair[0] = v.re;
            pair[1] = v.im;
        }
        if !stats.is_null() {
            *stats = OpcSymbolStats {
                evm_pct: r.evm_pct,
                max_violation_db: r.max_violation_db.unwrap_or(f64::NAN),
                iterations: r.iterations,
                converged: r.converged,
            };
        }
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opc_precoder_free(p: *mut OpcPrecoder) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Leakage kernel of an `n`-point symbol with `n_cp` prefix samples at
/// frequency offset `offset` (in subcarriers).
///
/// # Safety
/// `re` and `im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn opc_leakage_kernel(n: usize, n_cp: usize, offset: f64, re: *mut f64, im: *mut f64) -> OpcStatus {
    guard(|| {
        non_null(re, "re")?;
        non_null(im, "im")?;
        if n == 0 || !offset.is_finite() {
            return Err(Fail(
                OpcStatus::InvalidArgument,
                "`n` must be positive and `offset` finite".into(),
            ));
        }
        let v = dirichlet_leakage(n, n_cp, offset);
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}
