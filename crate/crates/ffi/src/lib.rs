//! C ABI over `rydwire`.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns an
//! [`RwStatus`]; on failure [`rw_last_error_message`] describes the error
//! on the calling thread. Strings handed out by the library are
//! NUL-terminated UTF-8 and must be released with [`rw_string_free`].
//! Panics never unwind into the caller: they are reported as
//! `RW_STATUS_PANIC`.

use rydwire::embed::{
    build_wire, embed, extract_logical, Coupling, EmbedOptions, EmbeddedInstance, LogicalProblem, RoutingSpec,
};
use rydwire::graph::{blockade_radius, Configuration, InteractionModel, RydbergParams};
use rydwire::io::{parse_json, parse_problem, EmbeddingFile};
use rydwire::robustness::{wire_success_probability, PerturbationSpec};
use rydwire::solver::{solve_embedded, SolutionSet};
use rydwire::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Outcome of a library call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RwStatus {
    Ok = 0,
    /// Malformed or out-of-domain input, including parse errors.
    InvalidInput = 1,
    /// The problem lies outside the encodable class.
    Unsupported = 2,
    /// An exact search or simulation would exceed its size cap.
    SizeCap = 3,
    /// No valid embedding could be produced.
    Embedding = 4,
    Numerical = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

impl From<&Error> for RwStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Input(_) | Error::Domain(_) | Error::Parse { .. } => RwStatus::InvalidInput,
            Error::Unsupported(_) => RwStatus::Unsupported,
            Error::SizeCap { .. } => RwStatus::SizeCap,
            Error::Embedding { .. } => RwStatus::Embedding,
            Error::Numerical(_) => RwStatus::Numerical,
            Error::Io { .. } => RwStatus::Io,
        }
    }
}

/// A logical MWIS or QUBO problem together with its layout hints.
pub struct RwProblem {
    problem: LogicalProblem,
    hints: RoutingSpec,
}

/// A unit-disk embedding of a logical problem.
pub struct RwEmbedding(EmbeddedInstance);

/// Exact optima of a problem or embedding.
pub struct RwSolution(SolutionSet);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RwStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            RwStatus::from(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed as {what}"));
            RwStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RwStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::Lib(Error::Input(format!("{what} is not UTF-8: {e}"))))
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Lib(Error::Input("string contains an interior NUL".into())))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn rw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn rw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn rw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a problem file (MWIS or QUBO, optional layout hints).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_problem_from_json(json: *const c_char, out_problem: *mut *mut RwProblem) -> RwStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        *slot = ptr::null_mut();
        let (problem, hints) = parse_problem(text(json, "json")?, "json")?;
        *slot = boxed(RwProblem { problem, hints });
        Ok(())
    })
}

/// Loads one of the bundled fixtures (`fig4`, `fig5c`, …, `fig6`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_fixture_problem(name: *const c_char, out_problem: *mut *mut RwProblem) -> RwStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        *slot = ptr::null_mut();
        let (problem, hints) = rydwire::fixtures::fixture(text(name, "name")?)?.logical()?;
        *slot = boxed(RwProblem { problem, hints });
        Ok(())
    })
}

/// Number of logical variables.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_problem_size(problem: *const RwProblem, out_size: *mut usize) -> RwStatus {
    guard(|| {
        *out(out_size, "out_size")? = borrow(problem, "problem")?.problem.len();
        Ok(())
    })
}

/// Exact optima of the logical problem.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_problem_solve(problem: *const RwProblem, out_solution: *mut *mut RwSolution) -> RwStatus {
    guard(|| {
        let slot = out(out_solution, "out_solution")?;
        *slot = ptr::null_mut();
        *slot = boxed(RwSolution(borrow(problem, "problem")?.problem.solve()?));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rw_problem_free(problem: *mut RwProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Embeds a problem using its layout hints. `margin` is the relative
/// ancilla-weight margin; pass a negative value for the library default.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_embed(
    problem: *const RwProblem,
    margin: f64,
    out_embedding: *mut *mut RwEmbedding,
) -> RwStatus {
    guard(|| {
        let slot = out(out_embedding, "out_embedding")?;
        *slot = ptr::null_mut();
        let p = borrow(problem, "problem")?;
        let mut opts = EmbedOptions::default();
        if margin >= 0.0 {
            opts.margin = margin;
        }
        *slot = boxed(RwEmbedding(embed(&p.problem, &p.hints, &opts)?));
        Ok(())
    })
}

/// Parses an embedding file as written by [`rw_embedding_to_json`] or the
/// `rydwire embed` command.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_embedding_from_json(json: *const c_char, out_embedding: *mut *mut RwEmbedding) -> RwStatus {
    guard(|| {
        let slot = out(out_embedding, "out_embedding")?;
        *slot = ptr::null_mut();
        let file: EmbeddingFile = parse_json(text(json, "json")?, "json")?;
        *slot = boxed(RwEmbedding(file.into_instance("json")?));
        Ok(())
    })
}

/// Serialises an embedding; free the result with [`rw_string_free`].
///
/// # Safety
/// `embedding` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_embedding_to_json(embedding: *const RwEmbedding, out_json: *mut *mut c_char) -> RwStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        let file = EmbeddingFile::from_instance(&borrow(embedding, "embedding")?.0, None);
        let json = serde_json::to_string_pretty(&file).map_err(|e| Error::Input(e.to_string()))?;
        *slot = c_string(json)?;
        Ok(())
    })
}

/// # Safety
/// `embedding` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_embedding_atom_count(embedding: *const RwEmbedding, out_count: *mut usize) -> RwStatus {
    guard(|| {
        *out(out_count, "out_count")? = borrow(embedding, "embedding")?.0.len();
        Ok(())
    })
}

/// Constant added to the embedded energy to recover the logical energy.
///
/// # Safety
/// `embedding` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_embedding_energy_offset(embedding: *const RwEmbedding, out_offset: *mut f64) -> RwStatus {
    guard(|| {
        *out(out_offset, "out_offset")? = borrow(embedding, "embedding")?.0.energy_offset();
        Ok(())
    })
}

/// Ground states of the embedded instance at `Ω = 0`: the unit-disk MWIS
/// when `vdw` is 0, the full van der Waals energy (default parameters)
/// otherwise.
///
/// # Safety
/// `embedding` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_embedding_solve(
    embedding: *const RwEmbedding,
    vdw: i32,
    out_solution: *mut *mut RwSolution,
) -> RwStatus {
    guard(|| {
        let slot = out(out_solution, "out_solution")?;
        *slot = ptr::null_mut();
        let model = if vdw != 0 {
            InteractionModel::Vdw
        } else {
            InteractionModel::Ideal
        };
        let s = solve_embedded(&borrow(embedding, "embedding")?.0, model, &RydbergParams::default())?;
        *slot = boxed(RwSolution(s));
        Ok(())
    })
}

/// Projects an atom bitstring (`'0'`/`'1'` per atom) onto the logical
/// variables; free the result with [`rw_string_free`].
///
/// # Safety
/// `embedding` must be a live handle, `bits` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rw_embedding_extract_logical(
    embedding: *const RwEmbedding,
    bits: *const c_char,
    out_bits: *mut *mut c_char,
) -> RwStatus {
    guard(|| {
        let slot = out(out_bits, "out_bits")?;
        *slot = ptr::null_mut();
        let config: Configuration = text(bits, "bits")?.parse()?;
        let logical = extract_logical(&borrow(embedding, "embedding")?.0, &config)?;
        *slot = c_string(logical.to_string())?;
        Ok(())
    })
}

/// # Safety
/// `embedding` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rw_embedding_free(embedding: *mut RwEmbedding) {
    if !embedding.is_null() {
        drop(Box::from_raw(embedding));
    }
}

/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_solution_energy(solution: *const RwSolution, out_energy: *mut f64) -> RwStatus {
    guard(|| {
        *out(out_energy, "out_energy")? = borrow(solution, "solution")?.0.optimal_energy;
        Ok(())
    })
}

/// Number of optimal configurations.
///
/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_solution_degeneracy(solution: *const RwSolution, out_count: *mut usize) -> RwStatus {
    guard(|| {
        *out(out_count, "out_count")? = borrow(solution, "solution")?.0.degeneracy();
        Ok(())
    })
}

/// The `index`-th optimal configuration (sorted) as a bitstring; free the
/// result with [`rw_string_free`].
///
/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_solution_configuration(
    solution: *const RwSolution,
    index: usize,
    out_bits: *mut *mut c_char,
) -> RwStatus {
    guard(|| {
        let slot = out(out_bits, "out_bits")?;
        *slot = ptr::null_mut();
        let s = &borrow(solution, "solution")?.0;
        let c = s
            .configurations
            .get(index)
            .ok_or_else(|| Error::Input(format!("index {index} out of range for {} optima", s.degeneracy())))?;
        *slot = c_string(c.to_string())?;
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rw_solution_free(solution: *mut RwSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Monte Carlo probability that an MWIS wire with `length` ancillas keeps
/// the intended ground-state sector under multiplicative Gaussian weight
/// noise of relative width `sigma`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_wire_success_probability(
    alpha: f64,
    beta: f64,
    length: usize,
    margin: f64,
    sigma: f64,
    samples: usize,
    seed: u64,
    out_probability: *mut f64,
) -> RwStatus {
    guard(|| {
        let slot = out(out_probability, "out_probability")?;
        let gadget = build_wire(alpha, beta, length, Coupling::Mwis { margin })?;
        let spec = PerturbationSpec {
            relative_sigma: sigma,
            seed,
            samples,
        };
        *slot = wire_success_probability(&gadget, &spec)?.success_probability;
        Ok(())
    })
}

/// Blockade radius in µm for `c6` (GHz·µm⁶), Rabi frequency `omega` and
/// detuning `detuning` (both cyclic MHz).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_blockade_radius(c6: f64, omega: f64, detuning: f64, out_radius: *mut f64) -> RwStatus {
    guard(|| {
        let params = RydbergParams {
            c6,
            omega,
            delta_max: None,
        };
        *out(out_radius, "out_radius")? = blockade_radius(&params, detuning)?;
        Ok(())
    })
}
