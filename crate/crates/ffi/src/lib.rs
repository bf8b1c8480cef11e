//! C ABI over the tabletalk engine.
//!
//! Handles are opaque pointers created and destroyed by this library. Strings
//! cross the boundary as NUL-terminated UTF-8; strings returned through `out`
//! parameters are owned by the caller and released with [`tt_string_free`].
//! Every fallible call returns a [`TtStatus`]; on failure
//! [`tt_last_error_message`] describes the most recent error on the calling
//! thread.
//!
//! An engine may be shared between threads. A session must not be used from
//! two threads at the same time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tabletalk::page_model::{parse_page, PageSnapshot};
use tabletalk::protocol::ClientMessage;
use tabletalk::session::{EngineConfig, Session};
use tabletalk::vocabulary::{score_match, SharedDictionary};

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    InvalidInput = 4,
    Io = 5,
    Panic = 6,
}

/// Shared settings and vocabulary for any number of sessions.
pub struct TtEngine {
    config: EngineConfig,
}

/// One conversation about one page.
pub struct TtSession {
    session: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

struct Failure(TtStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TtStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TtStatus::Panic
        }
    }
}

unsafe fn arg_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(TtStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TtStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn opt_str<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        arg_str(p, name).map(Some)
    }
}

fn out_check<T>(out: *mut T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(TtStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', "\u{FFFD}")).expect("no interior NUL").into_raw()
}

/// Creates an engine.
///
/// `dict_path` may be null for an in-memory vocabulary. `deixis_window_ms`
/// of zero or less selects the default window. `wake_word` may be null for
/// the default.
///
/// # Safety
/// Pointer arguments must be null or valid NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tt_engine_new(
    dict_path: *const c_char,
    deixis_window_ms: i64,
    wake_word: *const c_char,
    out: *mut *mut TtEngine,
) -> TtStatus {
    guard(|| {
        out_check(out, "out")?;
        *out = ptr::null_mut();
        let dictionary = match opt_str(dict_path, "dict_path")? {
            Some(path) => {
                SharedDictionary::with_file(path)
                    .map_err(|e| Failure(TtStatus::Io, e.to_string()))?
                    .0
            }
            None => SharedDictionary::default(),
        };
        let mut config = EngineConfig::new(dictionary);
        if deixis_window_ms > 0 {
            config.deixis_window_ms = deixis_window_ms;
        }
        if let Some(w) = opt_str(wake_word, "wake_word")? {
            config.wake_word = w.to_string();
        }
        *out = Box::into_raw(Box::new(TtEngine { config }));
        Ok(())
    })
}

/// Destroys an engine. Sessions created from it stay valid.
///
/// # Safety
/// `engine` must be null or a pointer from [`tt_engine_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tt_engine_free(engine: *mut TtEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Opens a session. A non-zero `id_seed` makes element identifiers reproducible.
///
/// # Safety
/// `engine` must be a live engine, `session_id` a valid string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tt_session_new(
    engine: *const TtEngine,
    session_id: *const c_char,
    id_seed: u64,
    out: *mut *mut TtSession,
) -> TtStatus {
    guard(|| {
        out_check(out, "out")?;
        *out = ptr::null_mut();
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure(TtStatus::NullArgument, "engine is null".into()))?;
        let id = arg_str(session_id, "session_id")?;
        let mut config = engine.config.clone();
        config.id_seed = (id_seed != 0).then_some(id_seed);
        *out = Box::into_raw(Box::new(TtSession {
            session: Session::new(id, config),
        }));
        Ok(())
    })
}

/// # Safety
/// `session` must be null or a pointer from [`tt_session_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tt_session_free(session: *mut TtSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Feeds one client protocol message and returns the replies as a JSON array.
///
/// # Safety
/// `session` must be live, `message_json` a valid string, `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn tt_session_handle(
    session: *mut TtSession,
    message_json: *const c_char,
    now_ms: i64,
    out_json: *mut *mut c_char,
) -> TtStatus {
    guard(|| {
        out_check(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        let session = session
            .as_mut()
            .ok_or_else(|| Failure(TtStatus::NullArgument, "session is null".into()))?;
        let text = arg_str(message_json, "message_json")?;
        let message: ClientMessage =
            serde_json::from_str(text).map_err(|e| Failure(TtStatus::InvalidJson, e.to_string()))?;
        let replies = session.session.handle(message, now_ms);
        let json = serde_json::to_string(&replies).map_err(|e| Failure(TtStatus::Panic, e.to_string()))?;
        *out_json = into_c_string(json);
        Ok(())
    })
}

/// Parses a page and returns its model as JSON.
///
/// # Safety
/// `url` and `html` must be valid strings; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn tt_parse_page(url: *const c_char, html: *const c_char, out_json: *mut *mut c_char) -> TtStatus {
    guard(|| {
        out_check(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        let url = arg_str(url, "url")?;
        let html = arg_str(html, "html")?;
        let snapshot =
            PageSnapshot::new("ffi", url, html, 0).map_err(|e| Failure(TtStatus::InvalidInput, e.to_string()))?;
        let json = serde_json::to_string(&parse_page(&snapshot)).map_err(|e| Failure(TtStatus::Panic, e.to_string()))?;
        *out_json = into_c_string(json);
        Ok(())
    })
}

/// Scores how well `label` abbreviates `candidate`, in `[0, 1]`.
///
/// # Safety
/// Both strings must be valid; `out_score` writable.
#[no_mangle]
pub unsafe extern "C" fn tt_score_match(label: *const c_char, candidate: *const c_char, out_score: *mut f64) -> TtStatus {
    guard(|| {
        out_check(out_score, "out_score")?;
        let label = arg_str(label, "label")?;
        let candidate = arg_str(candidate, "candidate")?;
        *out_score = score_match(label, candidate);
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the most recent failure on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
