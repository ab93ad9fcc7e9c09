use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use betascale::Error;

/// Result code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Refused = 4,
    GenerationFailure = 5,
    InsufficientSamples = 6,
    Consistency = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for BsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) | Error::UndefinedDiagnostic(_) => BsStatus::Domain,
            Error::Refused(_) => BsStatus::Refused,
            Error::GenerationFailure(_) => BsStatus::GenerationFailure,
            Error::InsufficientSamples { .. } => BsStatus::InsufficientSamples,
            Error::Consistency(_) => BsStatus::Consistency,
            Error::Io { .. } | Error::Csv(_) => BsStatus::Io,
            _ => BsStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

pub(crate) fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

pub(crate) fn fail(status: BsStatus, msg: impl Into<String>) -> BsStatus {
    set_last_error(msg);
    status
}

/// Runs `f`, translating library errors and panics into status codes.
pub(crate) fn guard<F>(f: F) -> BsStatus
where
    F: FnOnce() -> Result<(), BsFailure>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BsStatus::Ok,
        Ok(Err(BsFailure::Status(status, msg))) => fail(status, msg),
        Ok(Err(BsFailure::Lib(e))) => fail(BsStatus::from(&e), e.to_string()),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(BsStatus::Panic, msg)
        }
    }
}

pub(crate) enum BsFailure {
    Status(BsStatus, String),
    Lib(Error),
}

impl From<Error> for BsFailure {
    fn from(e: Error) -> Self {
        BsFailure::Lib(e)
    }
}

pub(crate) fn null(what: &str) -> BsFailure {
    BsFailure::Status(BsStatus::NullPointer, format!("{what} is null"))
}

pub(crate) fn invalid(msg: impl Into<String>) -> BsFailure {
    BsFailure::Status(BsStatus::InvalidArgument, msg.into())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len - 1` bytes) and returns the full message
/// length, or 0 when there is no pending error.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}
