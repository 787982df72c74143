//! C ABI over `colorbound`.
//!
//! Every function returns a `CbStatus`; results go through out-pointers.
//! On failure a message is kept per thread and can be read with
//! `cb_last_error_message`. Vertices are 0-based. Handles returned by
//! `*_new`/`*_parse` must be released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use colorbound::binomial::{eval_sigma_star, eval_sigma_star_atom, EvalMode, SigmaStarConfig};
use colorbound::potts::{chromatic_number, count_colorings, potts_partition, Multigraph};
use colorbound::regular::{
    eval_sigma_regular, find_dq, first_moment_bound, minimize_sigma, miss_probability,
    second_moment_bound,
};
use colorbound::{validate_distribution, AtomDistribution, Error, EvalResult, Provenance};

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    /// Arguments violate a precondition.
    InvalidArgument = 1,
    /// A search found nothing in its range.
    NotFound = 2,
    /// A computation would exceed its work or state-space budget.
    BudgetExceeded = 3,
    /// A logarithm of a vanishing quantity was requested.
    Numerical = 4,
    /// Text input could not be parsed.
    Parse = 5,
    /// A required pointer was null.
    NullPointer = 6,
    /// The library panicked; this is a bug.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbProvenance {
    Exact = 0,
    Truncated = 1,
    MonteCarlo = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbMode {
    Enumerate = 0,
    MonteCarlo = 1,
}

/// A value with its error radius and how it was obtained.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbEvalResult {
    pub value: f64,
    pub error_radius: f64,
    pub provenance: CbProvenance,
}

impl From<&EvalResult> for CbEvalResult {
    fn from(r: &EvalResult) -> Self {
        let provenance = match r.provenance {
            Provenance::Exact => CbProvenance::Exact,
            Provenance::Truncated => CbProvenance::Truncated,
            Provenance::MonteCarlo => CbProvenance::MonteCarlo,
        };
        Self {
            value: r.value,
            error_radius: r.error_radius,
            provenance,
        }
    }
}

/// Opaque finite-support distribution on [0, 1].
pub struct CbDistribution(AtomDistribution);

/// Opaque multigraph.
pub struct CbMultigraph(Multigraph);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CbStatus {
    match e {
        Error::NotFoundBelowCap(_) | Error::NotFoundInRange(..) | Error::NotNegative { .. } => {
            CbStatus::NotFound
        }
        Error::BudgetExceeded { .. }
        | Error::StateSpaceTooLarge(_)
        | Error::RejectionBudgetExceeded(_)
        | Error::MaxPointsExceeded(_)
        | Error::TooLarge(_) => CbStatus::BudgetExceeded,
        Error::DegenerateLog(..) => CbStatus::Numerical,
        Error::Parse(_) => CbStatus::Parse,
        _ => CbStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic for `cb_last_error_message`.
fn guard<F: FnOnce() -> Result<(), CbStatusError>>(f: F) -> CbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CbStatus::Ok
        }
        Ok(Err(CbStatusError(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            CbStatus::Panic
        }
    }
}

struct CbStatusError(CbStatus, String);

impl From<Error> for CbStatusError {
    fn from(e: Error) -> Self {
        CbStatusError(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> CbStatusError {
    CbStatusError(CbStatus::NullPointer, format!("{name} is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, CbStatusError> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn slice_ref<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], CbStatusError> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(name))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

/// Message for the last failed call on this thread ("" after success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a canonical distribution from `len` (location, weight) pairs.
///
/// # Safety
/// `locations` and `weights` must point to `len` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cb_distribution_new(
    locations: *const f64,
    weights: *const f64,
    len: usize,
    out: *mut *mut CbDistribution,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let locs = slice_ref(locations, len, "locations")?;
        let ws = slice_ref(weights, len, "weights")?;
        let pairs: Vec<(f64, f64)> = locs.iter().copied().zip(ws.iter().copied()).collect();
        let d = validate_distribution(&pairs)?;
        *out = Box::into_raw(Box::new(CbDistribution(d)));
        Ok(())
    })
}

/// # Safety
/// `dist` must come from `cb_distribution_new` (or be null) and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cb_distribution_free(dist: *mut CbDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Number of atoms after canonicalisation.
///
/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_distribution_len(
    dist: *const CbDistribution,
    out: *mut usize,
) -> CbStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        *out_ref(out, "out")? = d.0.len();
        Ok(())
    })
}

/// Location and weight of atom `index` (atoms sorted by location).
///
/// # Safety
/// `dist` must be a live handle; `location` and `weight` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_distribution_atom(
    dist: *const CbDistribution,
    index: usize,
    location: *mut f64,
    weight: *mut f64,
) -> CbStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        let atom = d.0.atoms().get(index).ok_or_else(|| {
            CbStatusError(
                CbStatus::InvalidArgument,
                format!("atom index {index} out of range"),
            )
        })?;
        *out_ref(location, "location")? = atom.location;
        *out_ref(weight, "weight")? = atom.weight;
        Ok(())
    })
}

/// Probability that some colour is hit by none of `len` independent draws,
/// draw `h` being a wildcard with probability `alphas[h]`.
///
/// # Safety
/// `alphas` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_miss_probability(
    q: u32,
    alphas: *const f64,
    len: usize,
    out: *mut CbEvalResult,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let r = miss_probability(q, slice_ref(alphas, len, "alphas")?)?;
        *out = (&r).into();
        Ok(())
    })
}

/// `Sigma_{d,q}(alpha)` for the `d`-regular model.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_sigma_regular(
    d: u32,
    q: u32,
    alpha: f64,
    out: *mut CbEvalResult,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = (&eval_sigma_regular(d, q, alpha)?).into();
        Ok(())
    })
}

/// Global minimum of `Sigma_{d,q}` over `[0, 1]`.
///
/// # Safety
/// `alpha_star` and `sigma_min` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_minimize_sigma(
    d: u32,
    q: u32,
    alpha_star: *mut f64,
    sigma_min: *mut f64,
) -> CbStatus {
    guard(|| {
        let a = out_ref(alpha_star, "alpha_star")?;
        let s = out_ref(sigma_min, "sigma_min")?;
        let m = minimize_sigma(d, q)?;
        *a = m.alpha_star;
        *s = m.sigma_min;
        Ok(())
    })
}

/// Smallest `d` in `[3, d_max]` with `min Sigma_{d,q} < 0`.
///
/// # Safety
/// `d_q` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_find_dq(q: u32, d_max: u32, d_q: *mut u32) -> CbStatus {
    guard(|| {
        let out = out_ref(d_q, "d_q")?;
        *out = find_dq(q, d_max)?.d_q;
        Ok(())
    })
}

/// Smallest degree ruled out by the first-moment bound.
///
/// # Safety
/// `degree` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_first_moment_bound(q: u32, degree: *mut u32) -> CbStatus {
    guard(|| {
        let out = out_ref(degree, "degree")?;
        *out = first_moment_bound(q)?.degree;
        Ok(())
    })
}

/// Largest degree below the second-moment colourability threshold;
/// `*exists` is false when that degree would be below 3.
///
/// # Safety
/// `degree` and `exists` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_second_moment_bound(
    q: u32,
    degree: *mut u32,
    exists: *mut bool,
) -> CbStatus {
    guard(|| {
        let deg = out_ref(degree, "degree")?;
        let ex = out_ref(exists, "exists")?;
        let b = second_moment_bound(q)?;
        *ex = b.is_some();
        *deg = b.map_or(0, |b| b.degree);
        Ok(())
    })
}

/// `Sigma*_{d,q}(delta_alpha)` for the binomial model.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_sigma_star_atom(
    d: f64,
    q: u32,
    alpha: f64,
    out: *mut CbEvalResult,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = (&eval_sigma_star_atom(d, q, alpha)?).into();
        Ok(())
    })
}

/// `Sigma*_{d,q}(p)` by exact enumeration or Monte Carlo (`samples`,
/// `seed` are ignored when enumerating).
///
/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_sigma_star(
    d: f64,
    q: u32,
    dist: *const CbDistribution,
    mode: CbMode,
    samples: u64,
    seed: u64,
    out: *mut CbEvalResult,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let p = dist.as_ref().ok_or_else(|| null("dist"))?;
        let cfg = match mode {
            CbMode::Enumerate => SigmaStarConfig {
                mode: EvalMode::Enumerate,
                ..SigmaStarConfig::default()
            },
            CbMode::MonteCarlo => SigmaStarConfig::monte_carlo(samples, seed),
        };
        *out = (&eval_sigma_star(d, q, &p.0, &cfg)?).into();
        Ok(())
    })
}

/// Multigraph on `n` vertices with `len` edges `(us[i], vs[i])` of
/// multiplicity `mults[i]` (or 1 each when `mults` is null).
///
/// # Safety
/// `us`, `vs` (and `mults` unless null) must point to `len` elements;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_multigraph_new(
    n: usize,
    us: *const u32,
    vs: *const u32,
    mults: *const u64,
    len: usize,
    out: *mut *mut CbMultigraph,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let us = slice_ref(us, len, "us")?;
        let vs = slice_ref(vs, len, "vs")?;
        let mults: Vec<u64> = if mults.is_null() {
            vec![1; len]
        } else {
            slice_ref(mults, len, "mults")?.to_vec()
        };
        let edges = (0..len).map(|i| (us[i] as usize, vs[i] as usize, mults[i]));
        *out = Box::into_raw(Box::new(CbMultigraph(Multigraph::new(n, edges)?)));
        Ok(())
    })
}

/// Parses the text format ("n m" then "u v mult" lines, 1-based).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_multigraph_parse(
    text: *const c_char,
    out: *mut *mut CbMultigraph,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| CbStatusError(CbStatus::Parse, "text is not UTF-8".into()))?;
        *out = Box::into_raw(Box::new(CbMultigraph(Multigraph::parse(s)?)));
        Ok(())
    })
}

/// Text form of `graph`; release the string with `cb_string_free`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_multigraph_to_text(
    graph: *const CbMultigraph,
    out: *mut *mut c_char,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        *out = CString::new(g.0.to_text())
            .expect("no NUL in text form")
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `graph` must come from this library (or be null) and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn cb_multigraph_free(graph: *mut CbMultigraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Potts partition function `Z_beta(G)` with `q` colours.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_potts_partition(
    graph: *const CbMultigraph,
    q: u32,
    beta: f64,
    out: *mut f64,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        *out = potts_partition(&g.0, q, beta)?;
        Ok(())
    })
}

/// Number of proper `q`-colourings.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_count_colorings(
    graph: *const CbMultigraph,
    q: u32,
    out: *mut u64,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        *out = count_colorings(&g.0, q)?;
        Ok(())
    })
}

/// Exact chromatic number (graphs without loops, at most 60 vertices).
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_chromatic_number(
    graph: *const CbMultigraph,
    out: *mut u32,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        *out = chromatic_number(&g.0)?;
        Ok(())
    })
}
