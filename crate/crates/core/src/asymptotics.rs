//! Large-`q` expansions at `alpha = 1/(2q)`, `d = (2q - 1) log q - c`, where
//! both functionals behave like `(c - 1)/(2q)`.

use serde::{Deserialize, Serialize};

use crate::binomial::eval_sigma_star_atom;
use crate::error::{Error, Result};
use crate::model::EvalResult;
use crate::numerics::{ln_binomial, CompensatedSum};

/// Smallest `q` accepted by the scaled-gap functions.
pub const MIN_EXPANSION_Q: u32 = 50;
/// Calibrated tolerance on `|2q Sigma - (c - 1)|`, regular model.
pub const REGULAR_TOLERANCE: f64 = 0.1;
/// Calibrated tolerance on `|2q Sigma* - (c - 1)|`, binomial model.
pub const BINOMIAL_TOLERANCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPoint {
    pub q: u32,
    pub c: f64,
    pub alpha: f64,
    pub d: f64,
}

impl ExpansionPoint {
    fn centre(q: u32) -> f64 {
        (2.0 * q as f64 - 1.0) * (q as f64).ln()
    }

    pub fn new(q: u32, c: f64) -> Result<Self> {
        Self::from_degree(q, Self::centre(q) - c)
    }

    /// The point with a given (e.g. integral) degree; `c` is derived.
    pub fn from_degree(q: u32, d: f64) -> Result<Self> {
        if q < 3 {
            return Err(Error::InvalidParams(format!("q must be >= 3, got {q}")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "expansion degree must be positive, got {d}"
            )));
        }
        Ok(Self {
            q,
            c: Self::centre(q) - d,
            alpha: 0.5 / q as f64,
            d,
        })
    }
}

/// `Sigma_{d,q}(alpha) = S - T` with real `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitST {
    pub s: f64,
    pub t: f64,
    pub sigma: EvalResult,
}

/// Signed inclusion-exclusion terms `(-1)^{k-1} C(q,k) (1 - k(1-alpha)/q)^d`
/// as `(sign, ln|term|)`, `k = 1..=q`.
fn ie_terms(pt: &ExpansionPoint) -> Vec<(f64, f64)> {
    let q = pt.q as f64;
    (1..=pt.q as u64)
        .map(|k| {
            let base = -(k as f64) * (1.0 - pt.alpha) / q;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            (sign, ln_binomial(pt.q as u64, k) + pt.d * base.ln_1p())
        })
        .collect()
}

/// `S = log sum_i (-1)^i C(q, i+1) (1 - (i+1)(1-alpha)/q)^d`,
/// `T = (d/2) log(1 - (1-alpha)^2/q)`. Powers are `exp(d log1p(.))`.
pub fn split_s_t_regular(pt: &ExpansionPoint) -> SplitST {
    let terms = ie_terms(pt);
    let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let sum: CompensatedSum = terms
        .iter()
        .map(|&(sign, l)| sign * (l - top).exp())
        .collect();
    let s = top + sum.value().ln();
    let t = 0.5 * pt.d * (-(1.0 - pt.alpha).powi(2) / pt.q as f64).ln_1p();
    SplitST {
        s,
        t,
        sigma: EvalResult::exact(s - t),
    }
}

/// `|term_k| / |sum|` for `k = 1..=q`: how much each inclusion-exclusion
/// term contributes.
pub fn term_magnitudes(pt: &ExpansionPoint) -> Vec<f64> {
    let terms = ie_terms(pt);
    let s = split_s_t_regular(pt).s;
    terms.iter().map(|&(_, l)| (l - s).exp()).collect()
}

fn check_expansion_q(q: u32) -> Result<()> {
    if q < MIN_EXPANSION_Q {
        return Err(Error::InvalidParams(format!(
            "expansion regime needs q >= {MIN_EXPANSION_Q}, got {q}"
        )));
    }
    Ok(())
}

/// `2q Sigma_{d,q}(1/(2q))` at `d = (2q-1) log q - c`; tends to `c - 1`.
pub fn scaled_gap_regular(q: u32, c: f64) -> Result<f64> {
    check_expansion_q(q)?;
    let pt = ExpansionPoint::new(q, c)?;
    Ok(2.0 * q as f64 * split_s_t_regular(&pt).sigma.value)
}

/// `2q Sigma*_{d,q}(delta_{1/(2q)})` at `d = (2q-1) log q - c`.
pub fn scaled_gap_binomial(q: u32, c: f64) -> Result<EvalResult> {
    check_expansion_q(q)?;
    let pt = ExpansionPoint::new(q, c)?;
    let v = eval_sigma_star_atom(pt.d, q, pt.alpha)?;
    let scale = 2.0 * q as f64;
    let detail = v.detail.clone();
    Ok(EvalResult::truncated(
        scale * v.value,
        scale * v.error_radius,
        detail,
    ))
}
