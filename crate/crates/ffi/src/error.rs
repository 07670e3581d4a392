use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use isac_core::IsacError;

/// Result code of every fallible call. On anything but `ISAC_OK` the
/// message is available from `isac_last_error_message` on the same thread.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Io = 4,
    Numerical = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

pub(crate) struct Failure {
    pub status: IsacStatus,
    pub message: String,
}

impl Failure {
    pub fn new(status: IsacStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    pub fn null(name: &str) -> Self {
        Self::new(IsacStatus::NullPointer, format!("`{name}` is null"))
    }
}

impl From<IsacError> for Failure {
    fn from(e: IsacError) -> Self {
        let status = match e {
            IsacError::InvalidConfig(_) | IsacError::ConfigParse(_) => IsacStatus::InvalidConfig,
            IsacError::Io { .. } | IsacError::Csv { .. } => IsacStatus::Io,
            IsacError::SlotOutOfRange { .. } | IsacError::NonPositiveDistance(_) | IsacError::DimensionMismatch(_) => {
                IsacStatus::InvalidArgument
            }
            IsacError::TrackingDivergence(_)
            | IsacError::DegenerateUpdate
            | IsacError::ZeroMatrix
            | IsacError::MalformedProblem(_) => IsacStatus::Numerical,
        };
        Self::new(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|m| *m.borrow_mut() = message);
}

/// Runs `f`, records its error message and turns panics into `Panic`.
pub(crate) fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> IsacStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let text = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure::new(IsacStatus::Panic, format!("panic: {text}")))
    });
    match outcome {
        Ok(()) => {
            set_last_error(String::new());
            IsacStatus::Ok
        }
        Err(f) => {
            set_last_error(f.message);
            f.status
        }
    }
}

/// Copies the last error message of the calling thread into `buf` as a
/// NUL-terminated string, truncated to `len - 1` bytes, and returns the full
/// message length. Pass a null `buf` to query the length only.
///
/// # Safety
///
/// `buf` must be null or valid for writes of `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn isac_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|m| {
        let m = m.borrow();
        if !buf.is_null() && len > 0 {
            let n = m.len().min(len - 1);
            std::ptr::copy_nonoverlapping(m.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        m.len()
    })
}
