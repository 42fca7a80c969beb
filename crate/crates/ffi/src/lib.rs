//! C ABI over `wtcpir-core`.
//!
//! Every function returns a [`WtcStatus`]. On failure a message is kept per
//! thread and can be read with [`wtc_last_error`]. Strings handed out by the
//! library must be released with [`wtc_string_free`], plans with
//! [`wtc_plan_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wtcpir_core::bounds;
use wtcpir_core::cli;
use wtcpir_core::planner::{self, BuildOptions, QueryPlan};
use wtcpir_core::ratio;
use wtcpir_core::rates::{self, EavesdropProfile, GroupSequence};
use wtcpir_core::simulator::{self, MessageStore};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    PlanError = 4,
    SimulationError = 5,
    Panic = 6,
}

/// Opaque query plan.
pub struct WtcPlan {
    inner: QueryPlan,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl std::fmt::Display) {
    let c = CString::new(msg.to_string().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(WtcStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: WtcStatus, msg: impl std::fmt::Display) -> FfiResult<T> {
    Err(Failure(status, msg.to_string()))
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> WtcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WtcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WtcStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(WtcStatus::NullPointer, "null string argument");
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(WtcStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> FfiResult<()> {
    if out.is_null() {
        return fail(WtcStatus::NullPointer, "null output pointer");
    }
    out.write(v);
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("json has no nul").into_raw()
}

/// `mu` is a comma-separated list such as `"1/4,1/2"`; null or empty means all zero.
unsafe fn read_mu(mu: *const c_char, databases: usize) -> FfiResult<EavesdropProfile> {
    if mu.is_null() {
        return Ok(EavesdropProfile::zeros(databases));
    }
    let s = read_str(mu)?;
    if s.trim().is_empty() {
        return Ok(EavesdropProfile::zeros(databases));
    }
    let values = s
        .split(',')
        .map(ratio::parse_rational)
        .collect::<Result<Vec<_>, _>>()
        .or_else(|e| fail(WtcStatus::InvalidArgument, e))?;
    if values.len() != databases {
        return fail(
            WtcStatus::InvalidArgument,
            format!("mu has {} entries but N = {databases}", values.len()),
        );
    }
    EavesdropProfile::new(values).or_else(|e| fail(WtcStatus::InvalidArgument, e))
}

unsafe fn plan_ref<'a>(plan: *const WtcPlan) -> FfiResult<&'a QueryPlan> {
    if plan.is_null() {
        return fail(WtcStatus::NullPointer, "null plan handle");
    }
    Ok(&(*plan).inner)
}

/// Last error message on this thread, or null. Valid until the next call
/// into the library from the same thread.
#[no_mangle]
pub extern "C" fn wtc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wtc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Upper bound and best achievable rate as doubles.
///
/// # Safety
/// `mu` must be null or a valid C string; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn wtc_capacity(
    messages: usize,
    databases: usize,
    mu: *const c_char,
    upper: *mut f64,
    lower: *mut f64,
) -> WtcStatus {
    guard(|| {
        let mu = read_mu(mu, databases)?;
        let r = bounds::capacity(messages, databases, &mu).or_else(|e| fail(WtcStatus::InvalidArgument, e))?;
        write_out(upper, ratio::to_f64(&r.upper.value))?;
        write_out(lower, ratio::to_f64(&r.lower))
    })
}

/// Full capacity report as JSON with exact rationals.
///
/// # Safety
/// `mu` must be null or a valid C string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wtc_capacity_json(
    messages: usize,
    databases: usize,
    mu: *const c_char,
    out_json: *mut *mut c_char,
) -> WtcStatus {
    guard(|| {
        let mu = read_mu(mu, databases)?;
        let r = bounds::capacity(messages, databases, &mu).or_else(|e| fail(WtcStatus::InvalidArgument, e))?;
        let json = serde_json::to_string(&cli::capacity_output(&r, &mu)).expect("report serialises");
        write_out(out_json, into_c_string(json))
    })
}

/// Builds a plan. `seq` may be null to use the best scheme; `desired` is 0-based.
/// `field_q` of 0 picks the default field.
///
/// # Safety
/// `seq` must point to `seq_len` values when non-null; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wtc_plan_build(
    messages: usize,
    databases: usize,
    mu: *const c_char,
    seq: *const usize,
    seq_len: usize,
    desired: usize,
    seed: u64,
    field_q: u64,
    out: *mut *mut WtcPlan,
) -> WtcStatus {
    guard(|| {
        let mu = read_mu(mu, databases)?;
        let g = if seq.is_null() {
            rates::best_scheme(messages, databases, &mu)
                .or_else(|e| fail(WtcStatus::InvalidArgument, e))?
                .0
        } else {
            let s = std::slice::from_raw_parts(seq, seq_len).to_vec();
            GroupSequence::new(messages, databases, s).or_else(|e| fail(WtcStatus::InvalidArgument, e))?
        };
        let opts = BuildOptions {
            field_q: (field_q != 0).then_some(field_q),
            ..Default::default()
        };
        let plan = planner::build_plan_with(&g, &mu, desired, seed, opts).or_else(|e| fail(WtcStatus::PlanError, e))?;
        write_out(out, Box::into_raw(Box::new(WtcPlan { inner: plan })))
    })
}

/// Parses a plan from its JSON form.
///
/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wtc_plan_from_json(json: *const c_char, out: *mut *mut WtcPlan) -> WtcStatus {
    guard(|| {
        let plan = QueryPlan::from_json(read_str(json)?).or_else(|e| fail(WtcStatus::PlanError, e))?;
        write_out(out, Box::into_raw(Box::new(WtcPlan { inner: plan })))
    })
}

/// # Safety
/// `plan` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wtc_plan_to_json(plan: *const WtcPlan, out_json: *mut *mut c_char) -> WtcStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        write_out(out_json, into_c_string(p.to_json()))
    })
}

/// Markdown rendering of the plan.
///
/// # Safety
/// `plan` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wtc_plan_table(plan: *const WtcPlan, out: *mut *mut c_char) -> WtcStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        write_out(out, into_c_string(planner::plan_to_table(p).to_string()))
    })
}

/// Message length `L` and total download `Σ t_n`.
///
/// # Safety
/// `plan` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn wtc_plan_dimensions(
    plan: *const WtcPlan,
    message_len: *mut u64,
    total_download: *mut u64,
) -> WtcStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        write_out(message_len, p.meta.message_len)?;
        write_out(total_download, p.meta.t.iter().sum())
    })
}

/// # Safety
/// `plan` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn wtc_plan_free(plan: *mut WtcPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Runs the privacy, security and decodability audits. `passed` receives
/// the overall verdict; `out_json` may be null.
///
/// # Safety
/// `plan` must be a live handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wtc_plan_audit(
    plan: *const WtcPlan,
    budget: u64,
    trials: usize,
    seed: u64,
    passed: *mut bool,
    out_json: *mut *mut c_char,
) -> WtcStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        let report = cli::audit_plan(p, budget as u128, trials, seed);
        write_out(passed, report.verdict.passed())?;
        if !out_json.is_null() {
            let json = serde_json::to_string(&report).expect("report serialises");
            out_json.write(into_c_string(json));
        }
        Ok(())
    })
}

/// One retrieval over random messages drawn from `store_seed` and keys from
/// `key_seed`. `correct` reports whether the decoded message matches.
///
/// # Safety
/// `plan` must be a live handle; `correct` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wtc_simulate(
    plan: *const WtcPlan,
    store_seed: u64,
    key_seed: u64,
    correct: *mut bool,
) -> WtcStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        let store = MessageStore::for_plan(p, store_seed).or_else(|e| fail(WtcStatus::SimulationError, e))?;
        let tr = simulator::run_retrieval(p, &store, key_seed).or_else(|e| fail(WtcStatus::SimulationError, e))?;
        write_out(correct, tr.correct)
    })
}
