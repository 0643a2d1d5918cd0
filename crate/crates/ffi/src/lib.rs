//! C interface.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. A handle must not be used from two threads at
//! once. Every function returns an [`ImexRrkStatus`]; on failure the message
//! is available from [`imex_rrk_last_error`] on the same thread.
//!
//! Field data is passed as `components * nx * ny` doubles, component-major,
//! each component row-major with `x` varying fastest.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use imex_rrk::error::Error;
use imex_rrk::tableau::builtin_tableau;
use imex_rrk::{Field, ModelSpec, Operator, PeriodicGrid, Potential, SavState, Stepper, SteppingMode};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImexRrkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownTableau = 3,
    InvalidTableau = 4,
    InvalidModel = 5,
    SingularSolve = 6,
    SavDegenerate = 7,
    NonPositiveRelaxation = 8,
    EnergyIncrease = 9,
    Panic = 10,
    Internal = 11,
}

/// `0` Allen-Cahn, `1` Cahn-Hilliard.
pub const IMEX_RRK_ALLEN_CAHN: u32 = 0;
pub const IMEX_RRK_CAHN_HILLIARD: u32 = 1;
/// `0` double-well, `1` three-phase multi-well.
pub const IMEX_RRK_DOUBLE_WELL: u32 = 0;
pub const IMEX_RRK_MULTI_WELL: u32 = 1;
/// `0` standard, `1` IDT, `2` RT.
pub const IMEX_RRK_MODE_STANDARD: u32 = 0;
pub const IMEX_RRK_MODE_IDT: u32 = 1;
pub const IMEX_RRK_MODE_RT: u32 = 2;

/// Model, grid and tableau with solver workspace.
pub struct ImexRrkStepper {
    inner: Stepper,
}

/// Solution `(u, r, t)`.
pub struct ImexRrkState {
    inner: SavState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> ImexRrkStatus {
    match err {
        Error::UnknownTableau { .. } => ImexRrkStatus::UnknownTableau,
        Error::InvalidTableau { .. } | Error::Structural(_) => ImexRrkStatus::InvalidTableau,
        Error::InvalidModel(_) | Error::UnsupportedGrid(_) | Error::InvalidPotential(_) => ImexRrkStatus::InvalidModel,
        Error::InvalidArgument(_) | Error::InvalidField(_) | Error::GridMismatch(_) => ImexRrkStatus::InvalidArgument,
        Error::SingularSolve { .. } => ImexRrkStatus::SingularSolve,
        Error::SavDegenerate { .. } => ImexRrkStatus::SavDegenerate,
        Error::NonPositiveRelaxation { .. } => ImexRrkStatus::NonPositiveRelaxation,
        Error::EnergyIncrease { .. } => ImexRrkStatus::EnergyIncrease,
        Error::Step { source, .. } => status_of(source),
        _ => ImexRrkStatus::Internal,
    }
}

struct Failure(ImexRrkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ImexRrkStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(ImexRrkStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ImexRrkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ImexRrkStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ImexRrkStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn mode_of(code: u32) -> Result<SteppingMode, Failure> {
    match code {
        IMEX_RRK_MODE_STANDARD => Ok(SteppingMode::Standard),
        IMEX_RRK_MODE_IDT => Ok(SteppingMode::Idt),
        IMEX_RRK_MODE_RT => Ok(SteppingMode::Rt),
        _ => Err(invalid(format!("unknown mode code {code}"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn imex_rrk_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Message of the last failure on this thread. Valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn imex_rrk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a stepper for an operator/potential on an `nx` x `ny` periodic
/// box `[0, lx) x [0, ly)` with a builtin tableau.
///
/// # Safety
/// `tableau` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_stepper_new(
    operator: u32,
    potential: u32,
    components: usize,
    epsilon: f64,
    c0: f64,
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    tableau: *const c_char,
    out: *mut *mut ImexRrkStepper,
) -> ImexRrkStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        *out = ptr::null_mut();
        if tableau.is_null() {
            return Err(null("tableau"));
        }
        let name = CStr::from_ptr(tableau).to_str().map_err(|_| invalid("tableau name is not UTF-8"))?;
        let operator = match operator {
            IMEX_RRK_ALLEN_CAHN => Operator::AllenCahn,
            IMEX_RRK_CAHN_HILLIARD => Operator::CahnHilliard,
            c => return Err(invalid(format!("unknown operator code {c}"))),
        };
        let potential = match potential {
            IMEX_RRK_DOUBLE_WELL => Potential::double_well(),
            IMEX_RRK_MULTI_WELL => Potential::multi_well(),
            c => return Err(invalid(format!("unknown potential code {c}"))),
        };
        let grid = PeriodicGrid::new(nx, ny, lx, ly)?;
        let spec = ModelSpec::new(operator, epsilon, c0, potential, components, grid)?;
        let stepper = Stepper::new(spec, builtin_tableau(name)?)?;
        *out = Box::into_raw(Box::new(ImexRrkStepper { inner: stepper }));
        Ok(())
    })
}

/// # Safety
/// `stepper` must come from [`imex_rrk_stepper_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_stepper_free(stepper: *mut ImexRrkStepper) {
    if !stepper.is_null() {
        drop(Box::from_raw(stepper));
    }
}

/// Number of doubles in a field buffer for this stepper.
///
/// # Safety
/// `stepper` must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_stepper_field_len(stepper: *const ImexRrkStepper, out: *mut usize) -> ImexRrkStatus {
    guard(|| {
        let s = borrow(stepper, "stepper")?;
        let spec = s.inner.spec();
        *borrow_mut(out, "out")? = spec.components() * spec.grid().len();
        Ok(())
    })
}

/// Creates a state at `t = 0` with `r` consistent with `values`.
///
/// # Safety
/// `values` must point to `len` doubles; `stepper` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_state_new(
    stepper: *const ImexRrkStepper,
    values: *const f64,
    len: usize,
    out: *mut *mut ImexRrkState,
) -> ImexRrkStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        *out = ptr::null_mut();
        let spec = borrow(stepper, "stepper")?.inner.spec();
        if values.is_null() {
            return Err(null("values"));
        }
        let n = spec.grid().len();
        if len != spec.components() * n {
            return Err(invalid(format!("expected {} values, got {len}", spec.components() * n)));
        }
        let data = std::slice::from_raw_parts(values, len);
        let fields = data
            .chunks(n)
            .map(|c| Field::from_values(*spec.grid(), c.to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        let state = SavState::consistent(spec, fields)?;
        *out = Box::into_raw(Box::new(ImexRrkState { inner: state }));
        Ok(())
    })
}

/// # Safety
/// `state` must come from [`imex_rrk_state_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_state_free(state: *mut ImexRrkState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Copies `u` into `values` (same layout as [`imex_rrk_state_new`]).
///
/// # Safety
/// `values` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_state_values(state: *const ImexRrkState, values: *mut f64, len: usize) -> ImexRrkStatus {
    guard(|| {
        let st = &borrow(state, "state")?.inner;
        if values.is_null() {
            return Err(null("values"));
        }
        let total: usize = st.u().iter().map(|f| f.values().len()).sum();
        if len != total {
            return Err(invalid(format!("expected {total} values, got {len}")));
        }
        let dst = std::slice::from_raw_parts_mut(values, len);
        for (chunk, f) in dst.chunks_mut(total / st.u().len()).zip(st.u()) {
            chunk.copy_from_slice(f.values());
        }
        Ok(())
    })
}

/// Reads `t` and `r`. Either output may be null.
///
/// # Safety
/// `state` must be valid; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_state_scalars(state: *const ImexRrkState, t: *mut f64, r: *mut f64) -> ImexRrkStatus {
    guard(|| {
        let st = &borrow(state, "state")?.inner;
        if let Some(t) = t.as_mut() {
            *t = st.t_hat();
        }
        if let Some(r) = r.as_mut() {
            *r = st.r();
        }
        Ok(())
    })
}

/// Modified energy `(eps^2/2)|grad u|^2 + r^2 - C0` of a state.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_modified_energy(
    stepper: *mut ImexRrkStepper,
    state: *const ImexRrkState,
    out: *mut f64,
) -> ImexRrkStatus {
    guard(|| {
        let s = borrow_mut(stepper, "stepper")?;
        let st = &borrow(state, "state")?.inner;
        *borrow_mut(out, "out")? = s.inner.model_mut().modified_energy(st)?;
        Ok(())
    })
}

/// Advances `state` in place by one step. `gamma` may be null. On failure
/// the state is unchanged.
///
/// # Safety
/// All non-null pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_step(
    stepper: *mut ImexRrkStepper,
    state: *mut ImexRrkState,
    tau: f64,
    mode: u32,
    gamma: *mut f64,
) -> ImexRrkStatus {
    guard(|| {
        let s = borrow_mut(stepper, "stepper")?;
        let st = borrow_mut(state, "state")?;
        let mode = mode_of(mode)?;
        let (next, rec) = s.inner.step(&st.inner, tau, mode)?;
        st.inner = next;
        if let Some(g) = gamma.as_mut() {
            *g = rec.gamma;
        }
        Ok(())
    })
}

/// Integrates `state` in place to `t_final` with nominal step `tau`.
/// `steps` (may be null) receives the number of steps taken.
///
/// # Safety
/// All non-null pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn imex_rrk_integrate(
    stepper: *mut ImexRrkStepper,
    state: *mut ImexRrkState,
    t_final: f64,
    tau: f64,
    mode: u32,
    steps: *mut usize,
) -> ImexRrkStatus {
    guard(|| {
        let s = borrow_mut(stepper, "stepper")?;
        let st = borrow_mut(state, "state")?;
        let mode = mode_of(mode)?;
        let mut count = 0;
        let next = s.inner.integrate_with(&st.inner, t_final, tau, mode, |rec, _| {
            count = rec.step;
            Ok(())
        })?;
        st.inner = next;
        if let Some(n) = steps.as_mut() {
            *n = count;
        }
        Ok(())
    })
}
