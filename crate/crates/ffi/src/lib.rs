//! C ABI over `mcp-core`.
//!
//! Every function returns an [`McpStatus`]; results go through out
//! pointers. On failure the message is kept per thread and can be copied
//! out with [`mcp_last_error_message`]. Handles are opaque and must be
//! released with their `_free` function.
//!
//! # Safety
//!
//! Pointer arguments may be null, which is reported as
//! `MCP_STATUS_NULL_POINTER`. Non-null pointers must be aligned and valid
//! for the stated length, strings must be NUL terminated, and handles must
//! be live values returned by this library.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mcp_core::codebook::{Codebook, ComplexityBudget, Generator};
use mcp_core::concentration::{event_bounds, EventParams};
use mcp_core::harness::{theorem1_rhs, theorem2_bound, BoundInputs};
use mcp_core::quantize::{truncate, Resolution};
use mcp_core::sensing::SensingEnsemble;
use mcp_core::solver::{solve_noiseless, solve_noisy, CandidateSet, FeasibilityTolerance, RecoveryResult};
use mcp_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McpStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    DimensionMismatch = 3,
    NoFeasibleCandidate = 4,
    NonConvergence = 5,
    SizeOverflow = 6,
    Config = 7,
    Io = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

impl From<&Error> for McpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain { .. } | Error::CoordinateDomain { .. } | Error::Degenerate(_) => McpStatus::Domain,
            Error::DimensionMismatch { .. } => McpStatus::DimensionMismatch,
            Error::NoFeasibleCandidate { .. } | Error::EmptyCodebook => McpStatus::NoFeasibleCandidate,
            Error::NonConvergence { .. } => McpStatus::NonConvergence,
            Error::SizeOverflow { .. } | Error::DifferenceSetTooLarge { .. } | Error::BudgetTooLarge { .. } => {
                McpStatus::SizeOverflow
            }
            Error::Config(_) | Error::MalformedPayload { .. } => McpStatus::Config,
            Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } => McpStatus::Io,
            #[allow(unreachable_patterns)]
            _ => McpStatus::Internal,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: McpStatus, message: impl Into<String>) -> McpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
    status
}

/// Runs `body`, mapping errors and panics to a status.
fn guard(body: impl FnOnce() -> Result<(), McpStatus>) -> McpStatus {
    LAST_ERROR.with(|e| e.borrow_mut().clear());
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => McpStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(McpStatus::Internal, "panic inside mcp-ffi"),
    }
}

fn core<T>(r: mcp_core::Result<T>) -> Result<T, McpStatus> {
    r.map_err(|e| fail(McpStatus::from(&e), e.to_string()))
}

fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, McpStatus> {
    // SAFETY: callers pass either null or a valid, aligned, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| fail(McpStatus::NullPointer, format!("{what} is null")))
}

fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], McpStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(McpStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: non-null and, per the contract, valid for `len` reads.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], McpStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(McpStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: non-null and, per the contract, valid for `len` writes.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

/// Copies the calling thread's last error message, NUL terminated, into
/// `buf`. Returns the message length in bytes without the terminator; the
/// copy is truncated when `len` is too small. `buf` may be null to query
/// the length.
#[no_mangle]
pub unsafe extern "C" fn mcp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `buf` is valid for `len` bytes and `n < len`.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// `m`-bit truncation of `x` in `[0, 1]`.
#[no_mangle]
pub unsafe extern "C" fn mcp_truncate(x: f64, m: u32, result: *mut f64) -> McpStatus {
    guard(|| {
        let r = out(result, "result")?;
        *r = core(Resolution::new(m).and_then(|m| truncate(x, m)))?;
        Ok(())
    })
}

/// Noiseless error threshold and the probability bound for exceeding it.
#[no_mangle]
pub unsafe extern "C" fn mcp_theorem1(
    kappa_bits: f64,
    m: u32,
    n: usize,
    d: usize,
    tau: f64,
    t: f64,
    threshold: *mut f64,
    probability_bound: *mut f64,
) -> McpStatus {
    guard(|| {
        let (th, pb) = (
            out(threshold, "threshold")?,
            out(probability_bound, "probability_bound")?,
        );
        let inputs = BoundInputs {
            kappa_bits,
            m,
            n,
            d,
            sigma: 0.0,
            r: 4.0,
            tau,
            t,
        };
        let r = core(theorem1_rhs(&inputs))?;
        *th = r.threshold;
        *pb = r.probability_bound;
        Ok(())
    })
}

/// Squared-error level of the noisy recovery guarantee.
#[no_mangle]
pub unsafe extern "C" fn mcp_theorem2(kappa_bits: f64, sigma: f64, d: usize, r: f64, result: *mut f64) -> McpStatus {
    guard(|| {
        let res = out(result, "result")?;
        *res = core(theorem2_bound(kappa_bits, sigma, d, r))?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct McpEventBounds {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub union_bound: f64,
}

/// Event complement bounds at the standard parameters for `r`.
#[no_mangle]
pub unsafe extern "C" fn mcp_event_bounds(
    r: f64,
    sigma: f64,
    d: usize,
    n: usize,
    kappa_bits: f64,
    result: *mut McpEventBounds,
) -> McpStatus {
    guard(|| {
        let res = out(result, "result")?;
        let params = core(EventParams::standard(r, sigma, d, kappa_bits))?;
        let b = core(event_bounds(&params, d, n, kappa_bits, sigma))?;
        *res = McpEventBounds {
            e1: b.e1,
            e2: b.e2,
            e3: b.e3,
            e4: b.e4,
            e5: b.e5,
            union_bound: b.union(),
        };
        Ok(())
    })
}

/// A seeded Gaussian sensing matrix.
pub struct McpEnsemble(SensingEnsemble);

#[no_mangle]
pub unsafe extern "C" fn mcp_ensemble_new(d: usize, n: usize, seed: u64, handle: *mut *mut McpEnsemble) -> McpStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = ptr::null_mut();
        let a = core(SensingEnsemble::draw(d, n, seed))?;
        *h = Box::into_raw(Box::new(McpEnsemble(a)));
        Ok(())
    })
}

/// Releases an ensemble. Null is ignored.
///
/// # Safety
/// `handle` must come from [`mcp_ensemble_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcp_ensemble_free(handle: *mut McpEnsemble) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

fn ensemble<'a>(h: *const McpEnsemble) -> Result<&'a SensingEnsemble, McpStatus> {
    // SAFETY: non-null handles come from `mcp_ensemble_new`.
    unsafe { h.as_ref() }
        .map(|e| &e.0)
        .ok_or_else(|| fail(McpStatus::NullPointer, "ensemble is null"))
}

#[no_mangle]
pub unsafe extern "C" fn mcp_ensemble_sigma_max(handle: *const McpEnsemble, result: *mut f64) -> McpStatus {
    guard(|| {
        let res = out(result, "result")?;
        *res = core(ensemble(handle)?.sigma_max())?;
        Ok(())
    })
}

/// `y = A x` with `x_len == n` and `y_len == d`.
#[no_mangle]
pub unsafe extern "C" fn mcp_ensemble_measure(
    handle: *const McpEnsemble,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> McpStatus {
    guard(|| {
        let a = ensemble(handle)?;
        let x = slice(x, x_len, "x")?;
        let y = slice_mut(y, y_len, "y")?;
        if y.len() != a.d() {
            return Err(fail(
                McpStatus::DimensionMismatch,
                format!("y has {} slots, need {}", y.len(), a.d()),
            ));
        }
        y.copy_from_slice(&core(a.measure(x))?);
        Ok(())
    })
}

/// Decoded codebook entries within a budget, in canonical order.
pub struct McpCandidates(CandidateSet);

/// `generators` is a comma-separated list such as `CONSTANT,K_SPARSE:1`.
/// `m = 0` selects the default resolution for `n`.
#[no_mangle]
pub unsafe extern "C" fn mcp_candidates_new(
    generators: *const c_char,
    n: usize,
    m: u32,
    budget_bits: u32,
    handle: *mut *mut McpCandidates,
) -> McpStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = ptr::null_mut();
        if generators.is_null() {
            return Err(fail(McpStatus::NullPointer, "generators is null"));
        }
        // SAFETY: non-null and NUL terminated per the contract.
        let spec = unsafe { CStr::from_ptr(generators) }
            .to_str()
            .map_err(|_| fail(McpStatus::Config, "generators is not UTF-8"))?;
        let gens = core(spec.split(',').map(|g| g.trim().parse::<Generator>()).collect())?;
        let m = if m == 0 {
            Resolution::for_length(n)
        } else {
            core(Resolution::new(m))?
        };
        let codebook = core(Codebook::new(gens, n, m))?;
        let set = core(ComplexityBudget::new(budget_bits).and_then(|b| CandidateSet::build(&codebook, b)))?;
        *h = Box::into_raw(Box::new(McpCandidates(set)));
        Ok(())
    })
}

/// Releases a candidate set. Null is ignored.
///
/// # Safety
/// `handle` must come from [`mcp_candidates_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcp_candidates_free(handle: *mut McpCandidates) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

fn candidates<'a>(h: *const McpCandidates) -> Result<&'a CandidateSet, McpStatus> {
    // SAFETY: non-null handles come from `mcp_candidates_new`.
    unsafe { h.as_ref() }
        .map(|c| &c.0)
        .ok_or_else(|| fail(McpStatus::NullPointer, "candidates is null"))
}

#[no_mangle]
pub unsafe extern "C" fn mcp_candidates_len(handle: *const McpCandidates, result: *mut usize) -> McpStatus {
    guard(|| {
        let res = out(result, "result")?;
        *res = candidates(handle)?.len();
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct McpRecovery {
    /// Position of the winner in canonical order.
    pub index: usize,
    pub complexity_bits: u32,
    pub residual: f64,
}

fn finish(r: RecoveryResult, result: *mut McpRecovery, codes: *mut u64, codes_len: usize) -> Result<(), McpStatus> {
    let res = out(result, "result")?;
    let codes = slice_mut(codes, codes_len, "codes")?;
    let decoded = r.x_hat.codes();
    if codes.len() != decoded.len() {
        return Err(fail(
            McpStatus::BufferTooSmall,
            format!("codes has {} slots, need {}", codes.len(), decoded.len()),
        ));
    }
    codes.copy_from_slice(&decoded);
    *res = McpRecovery {
        index: r.index,
        complexity_bits: r.complexity_bits,
        residual: r.residual,
    };
    Ok(())
}

/// Simplest candidate with `||y - A x|| <= delta`; `delta <= 0` selects
/// `1e-9 max(1, ||y||)`. Writes the winner's `n` grid codes to `codes`.
#[no_mangle]
pub unsafe extern "C" fn mcp_solve_noiseless(
    ensemble_handle: *const McpEnsemble,
    candidates_handle: *const McpCandidates,
    y: *const f64,
    y_len: usize,
    delta: f64,
    result: *mut McpRecovery,
    codes: *mut u64,
    codes_len: usize,
) -> McpStatus {
    guard(|| {
        let a = ensemble(ensemble_handle)?;
        let set = candidates(candidates_handle)?;
        let y = slice(y, y_len, "y")?;
        let tol = if delta > 0.0 {
            core(FeasibilityTolerance::new(delta))?
        } else {
            FeasibilityTolerance::relative_to(y)
        };
        let r = core(solve_noiseless(a, y, set.candidates(), tol))?;
        finish(r, result, codes, codes_len)
    })
}

/// Candidate with the smallest residual, earliest on ties.
#[no_mangle]
pub unsafe extern "C" fn mcp_solve_noisy(
    ensemble_handle: *const McpEnsemble,
    candidates_handle: *const McpCandidates,
    y: *const f64,
    y_len: usize,
    result: *mut McpRecovery,
    codes: *mut u64,
    codes_len: usize,
) -> McpStatus {
    guard(|| {
        let a = ensemble(ensemble_handle)?;
        let set = candidates(candidates_handle)?;
        let y = slice(y, y_len, "y")?;
        let r = core(solve_noisy(a, y, set.candidates()))?;
        finish(r, result, codes, codes_len)
    })
}
