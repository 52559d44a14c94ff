//! C interface to the on-line forecasting engine.
//!
//! An engine is created with [`tc_engine_new`], fed one frame at a time with
//! [`tc_engine_push`] and released with [`tc_engine_free`]. Every fallible
//! call returns a [`TcStatus`]; the message of the last failure on the
//! calling thread is available from [`tc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tempcast::experiment::ModelKind;
use tempcast::{AnnTopology, Error, LearnSchedule, OnlineEngine, TimedSample};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    InvalidInput = 3,
    /// The frame is older than the previous one and was dropped.
    LateFrame = 4,
    /// The output buffer cannot hold one forecast.
    BufferTooSmall = 5,
    /// A weight became non-finite; the engine should be discarded.
    ModelDiverged = 6,
    Internal = 7,
}

/// Engine parameters. `hidden == 0` selects the single-layer perceptron.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcEngineConfig {
    pub inputs: u32,
    pub hidden: u32,
    pub outputs: u32,
    pub quarter_secs: f64,
    pub max_gap: u32,
    pub eta0: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub seed: u64,
}

/// Opaque engine handle.
pub struct TcEngine {
    inner: OnlineEngine<f32>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TcStatus {
    match err {
        Error::InvalidConfig(_) | Error::DimensionMismatch { .. } => TcStatus::InvalidConfig,
        Error::InvalidInput(_) => TcStatus::InvalidInput,
        Error::NonMonotonicTime { .. } => TcStatus::LateFrame,
        Error::ModelDiverged { .. } => TcStatus::ModelDiverged,
        _ => TcStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), TcStatus>) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TcStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside tempcast");
            TcStatus::Internal
        }
    }
}

fn fail(err: Error) -> TcStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Default configuration: 8 inputs, 8 hidden units, 8 outputs, 900 s
/// quarters, resets after gaps of more than 4 quarters, shipped MLP schedule.
#[no_mangle]
pub extern "C" fn tc_engine_config_default() -> TcEngineConfig {
    let s = ModelKind::Mlp.default_schedule();
    TcEngineConfig {
        inputs: 8,
        hidden: 8,
        outputs: 8,
        quarter_secs: 900.0,
        max_gap: 4,
        eta0: s.eta0,
        gamma: s.gamma,
        epsilon: s.epsilon,
        seed: 1,
    }
}

/// Creates an engine. On success `*out` owns it; free it with
/// [`tc_engine_free`].
///
/// # Safety
/// `config` must point to a valid config and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn tc_engine_new(config: *const TcEngineConfig, out: *mut *mut TcEngine) -> TcStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            set_error("null pointer passed to tc_engine_new");
            return Err(TcStatus::NullPointer);
        }
        *out = ptr::null_mut();
        let c = *config;
        let topo = AnnTopology::new(c.inputs as usize, c.hidden as usize, c.outputs as usize).map_err(fail)?;
        let schedule = LearnSchedule::new(c.eta0, c.gamma, c.epsilon).map_err(fail)?;
        let model = tempcast::AnnModel::seeded(topo, c.seed);
        let inner = OnlineEngine::with_model(model, schedule, c.quarter_secs, c.max_gap).map_err(fail)?;
        *out = Box::into_raw(Box::new(TcEngine { inner }));
        Ok(())
    })
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must come from [`tc_engine_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_engine_free(engine: *mut TcEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Feeds one frame (`t` in seconds, `v` in degrees).
///
/// If a forecast was produced, its `outputs` values are written to `out`,
/// `*written` is set to their count and `*origin` to the index of the
/// quarter it was made from; otherwise `*written` is 0. `cap` must be at
/// least `outputs`. `origin` may be null. A frame that closes several
/// quarters at once reports only the newest forecast.
///
/// # Safety
/// `engine` must be a live handle, `out` must hold `cap` doubles and
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_engine_push(
    engine: *mut TcEngine,
    t: f64,
    v: f64,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
    origin: *mut i64,
) -> TcStatus {
    guard(|| {
        if engine.is_null() || out.is_null() || written.is_null() {
            set_error("null pointer passed to tc_engine_push");
            return Err(TcStatus::NullPointer);
        }
        *written = 0;
        let engine = &mut (*engine).inner;
        let q = engine.model().topology().outputs();
        if cap < q {
            set_error(format!("output buffer holds {cap} values, {q} needed"));
            return Err(TcStatus::BufferTooSmall);
        }
        let Some(forecast) = engine.process_sample(TimedSample::new(t, v)).map_err(fail)? else {
            return Ok(());
        };
        std::slice::from_raw_parts_mut(out, q).copy_from_slice(&forecast.values);
        *written = q;
        if !origin.is_null() {
            *origin = forecast.origin;
        }
        Ok(())
    })
}

/// Persistent model and ring-buffer bytes, or 0 for null.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_engine_memory_bytes(engine: *const TcEngine) -> usize {
    engine.as_ref().map_or(0, |e| e.inner.memory_bytes())
}

/// Weight updates performed so far, or 0 for null.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_engine_updates(engine: *const TcEngine) -> u64 {
    engine.as_ref().map_or(0, |e| e.inner.model().updates())
}

/// Resets caused by long gaps, or 0 for null.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_engine_resets(engine: *const TcEngine) -> u64 {
    engine.as_ref().map_or(0, |e| e.inner.aggregator().resets())
}

/// Late frames dropped so far, or 0 for null.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_engine_dropped(engine: *const TcEngine) -> u64 {
    engine.as_ref().map_or(0, |e| e.inner.aggregator().dropped())
}

/// Mean absolute error of `n` forecast values against `n` realized values.
///
/// # Safety
/// `forecast` and `actual` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_mae(forecast: *const f64, actual: *const f64, n: usize, out: *mut f64) -> TcStatus {
    guard(|| {
        if forecast.is_null() || actual.is_null() || out.is_null() {
            set_error("null pointer passed to tc_mae");
            return Err(TcStatus::NullPointer);
        }
        let a = std::slice::from_raw_parts(forecast, n);
        let b = std::slice::from_raw_parts(actual, n);
        *out = tempcast::mae(a, b).map_err(|e| {
            set_error(e.to_string());
            TcStatus::InvalidInput
        })?;
        Ok(())
    })
}

/// Message of the last failed call on this thread ("" if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn tc_status_str(status: TcStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        TcStatus::Ok => b"ok\0",
        TcStatus::NullPointer => b"null pointer\0",
        TcStatus::InvalidConfig => b"invalid configuration\0",
        TcStatus::InvalidInput => b"invalid input\0",
        TcStatus::LateFrame => b"late frame dropped\0",
        TcStatus::BufferTooSmall => b"output buffer too small\0",
        TcStatus::ModelDiverged => b"model diverged\0",
        TcStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}
