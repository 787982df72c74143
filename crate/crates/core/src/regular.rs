//! The random regular graph: the complexity functional `Sigma_{d,q}(alpha)`,
//! its minimisation over `alpha`, the threshold degree `d_q`, and the first
//! and second moment baselines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AtomDistribution, Certificate, EvalResult, ModelParams};
use crate::numerics::{ln_binomial, CompensatedSum};

/// Condition number (sum of |terms| over |sum|) above which the alternating
/// inclusion-exclusion sum is replaced by the occupancy recursion.
const MAX_CONDITION: f64 = 16.0;
/// Work limit (draws times colours) for the occupancy recursion.
const OCCUPANCY_BUDGET: f64 = 1e8;
/// `ln(0.99)`: above this the complement is recomputed to relative precision.
const NEAR_ONE_LN: f64 = -0.010_050_335_853_501_44;

/// Log of the probability that a sequence of independent draws leaves at
/// least one of `q` colours unused. Each class `(alpha, count)` stands for
/// `count` draws that are a wildcard with probability `alpha` and otherwise
/// uniform on the colours. Counts may be real; the exponent is then applied
/// formally (`exp(count * log1p(..))`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LnMiss {
    pub ln: f64,
    /// The raw sum was non-positive and has been clamped to the smallest
    /// positive double.
    pub clamped: bool,
}

pub(crate) fn ln_miss(q: u32, classes: &[(f64, f64)]) -> LnMiss {
    let integral = classes.iter().all(|&(_, c)| c.fract() == 0.0);
    let active: f64 = classes
        .iter()
        .filter(|&&(a, _)| a < 1.0)
        .map(|&(_, c)| c)
        .sum();
    // Fewer than q colour-bearing draws always miss a colour.
    if integral && active < q as f64 {
        return LnMiss {
            ln: 0.0,
            clamped: false,
        };
    }

    let qf = q as f64;
    let mut logs = Vec::with_capacity(q as usize);
    for k in 1..=q {
        let kf = k as f64;
        let mut lt = ln_binomial(q as u64, k as u64);
        let mut vanishes = false;
        for &(alpha, count) in classes {
            if count == 0.0 {
                continue;
            }
            let step = -kf * (1.0 - alpha) / qf;
            if step <= -1.0 {
                vanishes = true;
                break;
            }
            lt += count * step.ln_1p();
        }
        if !vanishes {
            logs.push((k, lt));
        }
    }
    let m = logs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = CompensatedSum::new();
    let mut magnitude = CompensatedSum::new();
    for &(k, lt) in &logs {
        let t = (lt - m).exp();
        magnitude.add(t);
        sum.add(if k % 2 == 1 { t } else { -t });
    }
    let (s, mag) = (sum.value(), magnitude.value());

    let ill_conditioned = !(s > 0.0 && mag / s <= MAX_CONDITION);
    // Near one the alternating sum only fixes `miss` to absolute precision,
    // which swamps `Sigma` close to `alpha = 1`; the recursion resolves the
    // complement `P(all colours used)` to relative precision.
    let near_one = s > 0.0 && m + s.ln() > NEAR_ONE_LN;
    if integral && (ill_conditioned || near_one) && active * qf <= OCCUPANCY_BUDGET {
        let (all_used, missed) = occupancy(q, classes);
        assert!(
            (-1e-12..=1.0 + 1e-12).contains(&missed),
            "miss probability {missed} out of range"
        );
        if missed > 0.5 {
            return LnMiss {
                ln: (-all_used).ln_1p().min(0.0),
                clamped: false,
            };
        }
        if missed > 0.0 {
            return LnMiss {
                ln: missed.ln(),
                clamped: false,
            };
        }
        return LnMiss {
            ln: f64::MIN_POSITIVE.ln(),
            clamped: true,
        };
    }

    if s > 0.0 {
        let ln = m + s.ln();
        assert!(
            ln <= (1e-12f64).ln_1p(),
            "miss probability exp({ln}) exceeds 1"
        );
        LnMiss {
            ln: ln.min(0.0),
            clamped: false,
        }
    } else {
        let raw = s * m.exp();
        assert!(raw >= -1e-12, "miss probability {raw} is negative");
        LnMiss {
            ln: f64::MIN_POSITIVE.ln(),
            clamped: true,
        }
    }
}

/// All-positive recursion on the number of distinct colours seen so far.
/// Returns `(P(all colours used), P(some colour unused))`.
fn occupancy(q: u32, classes: &[(f64, f64)]) -> (f64, f64) {
    let qf = q as f64;
    let q = q as usize;
    let mut state = vec![0.0f64; q + 1];
    state[0] = 1.0;
    let mut reached = 0usize;
    for &(alpha, count) in classes {
        for _ in 0..count as u64 {
            if alpha >= 1.0 {
                break;
            }
            let upper = (reached + 1).min(q);
            for s in (0..=reached.min(q)).rev() {
                let p = state[s];
                if p == 0.0 {
                    continue;
                }
                let fresh = (1.0 - alpha) * (qf - s as f64) / qf;
                state[s] = p * (1.0 - fresh);
                if s < q {
                    state[s + 1] += p * fresh;
                }
            }
            reached = upper;
        }
    }
    let mut sum = CompensatedSum::new();
    state[..q].iter().for_each(|&p| sum.add(p));
    (state[q], sum.value())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

fn check_q(q: u32) -> Result<()> {
    if q < 3 {
        return Err(Error::InvalidParams(format!("q must be >= 3, got {q}")));
    }
    Ok(())
}

/// Probability that draws with wildcard probabilities `alphas` leave at least
/// one of `q` colours unused, via inclusion-exclusion.
pub fn miss_probability(q: u32, alphas: &[f64]) -> Result<EvalResult> {
    if q < 2 {
        return Err(Error::ColorCountTooSmall(q));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    let mut sorted = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut classes: Vec<(f64, f64)> = Vec::new();
    for a in sorted {
        match classes.last_mut() {
            Some(last) if last.0 == a => last.1 += 1.0,
            _ => classes.push((a, 1.0)),
        }
    }
    let lm = ln_miss(q, &classes);
    let value = if lm.clamped {
        f64::MIN_POSITIVE
    } else {
        lm.ln.exp()
    };
    Ok(EvalResult::exact(value.min(1.0)))
}

/// `log(1 - (1-alpha)^2 / q)`, the per-edge penalty.
pub(crate) fn ln_edge_factor(q: u32, a1: f64, a2: f64) -> f64 {
    (-(1.0 - a1) * (1.0 - a2) / q as f64).ln_1p()
}

/// `Sigma_{d,q}(alpha)`.
pub fn eval_sigma_regular(d: u32, q: u32, alpha: f64) -> Result<EvalResult> {
    check_q(q)?;
    check_alpha(alpha)?;
    if d == 0 {
        return Err(Error::InvalidParams("d must be >= 1".into()));
    }
    Ok(EvalResult::exact(sigma_unchecked(d, q, alpha)))
}

fn sigma_unchecked(d: u32, q: u32, alpha: f64) -> f64 {
    let df = d as f64;
    ln_miss(q, &[(alpha, df)]).ln - 0.5 * df * ln_edge_factor(q, alpha, alpha)
}

/// Left-hand side of the stationarity equation for the minimiser. It equals
/// `Sigma'(alpha)` times the positive factor `f(alpha) (1 - (1-alpha)^2/q) / d`
/// where `f` is the inclusion-exclusion sum.
pub fn stationarity_residual(d: u32, q: u32, alpha: f64) -> Result<f64> {
    check_q(q)?;
    check_alpha(alpha)?;
    if d < 2 {
        return Err(Error::InvalidParams("d must be >= 2".into()));
    }
    Ok(residual_unchecked(d, q, alpha))
}

fn residual_unchecked(d: u32, q: u32, alpha: f64) -> f64 {
    let qf = q as f64;
    let mut sum = CompensatedSum::new();
    for i in 0..q {
        let k = (i + 1) as f64;
        // C(q-1,i) - ((1-alpha)/q) C(q,i+1) = C(q-1,i) (1 - (1-alpha)/(i+1))
        let coef = 1.0 - (1.0 - alpha) / k;
        let step = -k * (1.0 - alpha) / qf;
        if step <= -1.0 || coef == 0.0 {
            continue;
        }
        let t =
            coef * (ln_binomial((q - 1) as u64, i as u64) + (d - 1) as f64 * step.ln_1p()).exp();
        sum.add(if i % 2 == 0 { t } else { -t });
    }
    sum.value()
}

/// Minimum of `Sigma_{d,q}` over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaMinimum {
    pub alpha_star: f64,
    pub sigma_min: f64,
    pub stationarity_residual: f64,
    /// Minimiser sits at `alpha = 0` or `alpha = 1`.
    pub boundary: bool,
    /// Every local minimum within `TIE_TOLERANCE` of the global value, as
    /// `(alpha, sigma)`, sorted by `alpha`.
    pub near_ties: Vec<(f64, f64)>,
}

pub const STATIONARITY_TOLERANCE: f64 = 1e-8;
const TIE_TOLERANCE: f64 = 1e-10;
const GRID_POINTS: usize = 2001;

pub(crate) fn golden_section<F: Fn(f64) -> f64>(
    f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of `g` on `[lo, hi]` given `g(lo) < 0 < g(hi)`.
fn bisect<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Global minimum of `alpha -> Sigma_{d,q}(alpha)`: a 2001-point scan, golden
/// section around every discrete local minimum, then bisection on the
/// stationarity residual. Near-tied minima resolve to the smallest `alpha`.
pub fn minimize_sigma(d: u32, q: u32) -> Result<SigmaMinimum> {
    check_q(q)?;
    if d < 3 {
        return Err(Error::InvalidParams(format!("d must be >= 3, got {d}")));
    }
    let f = |a: f64| sigma_unchecked(d, q, a);
    let g = |a: f64| residual_unchecked(d, q, a);
    let n = GRID_POINTS - 1;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&a| f(a)).collect();

    let mut minima: Vec<(f64, f64)> = Vec::new();
    for i in 0..=n {
        let left_ok = i == 0 || vals[i] <= vals[i - 1];
        let right_ok = i == n || vals[i] <= vals[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(n)];
        let mut best = (grid[i], vals[i]);
        let (x, fx) = golden_section(f, lo, hi, 1e-13);
        if fx < best.1 {
            best = (x, fx);
        }
        if g(lo) < 0.0 && g(hi) > 0.0 {
            let r = bisect(g, lo, hi);
            let fr = f(r);
            if fr <= best.1 + 1e-14 {
                best = (r, fr);
            }
        }
        for endpoint in [lo, hi] {
            if endpoint == 0.0 || endpoint == 1.0 {
                let fe = f(endpoint);
                if fe < best.1 {
                    best = (endpoint, fe);
                }
            }
        }
        if !minima.iter().any(|m| (m.0 - best.0).abs() < 1e-9) {
            minima.push(best);
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    let global = minima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let near_ties: Vec<(f64, f64)> = minima
        .iter()
        .copied()
        .filter(|m| m.1 <= global + TIE_TOLERANCE)
        .collect();
    let (alpha_star, sigma_min) = near_ties[0];
    Ok(SigmaMinimum {
        alpha_star,
        sigma_min,
        stationarity_residual: g(alpha_star),
        boundary: alpha_star == 0.0 || alpha_star == 1.0,
        near_ties,
    })
}

/// A classical baseline degree together with the real threshold it rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineBound {
    pub degree: u32,
    pub threshold: f64,
}

impl BaselineBound {
    /// The threshold is within `1e-12` (relative) of an integer, so the
    /// strict inequality is numerically fragile.
    pub fn near_boundary(&self) -> bool {
        (self.threshold - self.threshold.round()).abs() <= 1e-12 * self.threshold.abs().max(1.0)
    }
}

/// Smallest `d` with `log q + (d/2) log(1 - 1/q) < 0`.
pub fn first_moment_bound(q: u32) -> Result<BaselineBound> {
    if q < 2 {
        return Err(Error::ColorCountTooSmall(q));
    }
    let qf = q as f64;
    let threshold = -2.0 * qf.ln() / (-1.0 / qf).ln_1p();
    Ok(BaselineBound {
        degree: threshold.floor() as u32 + 1,
        threshold,
    })
}

/// Largest integer strictly below `2 (q-1) log(q-1)`, or `None` below 3.
pub fn second_moment_bound(q: u32) -> Result<Option<BaselineBound>> {
    check_q(q)?;
    let qm = (q - 1) as f64;
    let threshold = 2.0 * qm * qm.ln();
    let degree = threshold.ceil() as i64 - 1;
    Ok((degree >= 3).then_some(BaselineBound {
        degree: degree as u32,
        threshold,
    }))
}

/// Outcome of scanning `d = 3..=d_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqScan {
    pub q: u32,
    pub d_q: u32,
    /// One certificate per certified degree, ascending in `d`.
    pub certificates: Vec<Certificate>,
    pub minima: Vec<(u32, SigmaMinimum)>,
}

impl DqScan {
    pub fn minimum_at(&self, d: u32) -> Option<&SigmaMinimum> {
        self.minima.iter().find(|(dd, _)| *dd == d).map(|(_, m)| m)
    }
}

/// `d_q = min{d >= 3 : Sigma_{d,q} < 0}`, scanning every degree up to
/// `d_max` independently.
pub fn find_dq(q: u32, d_max: u32) -> Result<DqScan> {
    check_q(q)?;
    if d_max < 3 {
        return Err(Error::InvalidParams(format!(
            "d_max must be >= 3, got {d_max}"
        )));
    }
    let minima: Vec<(u32, SigmaMinimum)> = (3..=d_max)
        .into_par_iter()
        .map(|d| minimize_sigma(d, q).map(|m| (d, m)))
        .collect::<Result<_>>()?;
    let mut certificates = Vec::new();
    for (d, m) in &minima {
        if m.sigma_min < 0.0 {
            let sigma = EvalResult::exact(m.sigma_min).with_detail(format!(
                "alpha_star={:.17e}; residual={:.3e}",
                m.alpha_star, m.stationarity_residual
            ));
            let witness = AtomDistribution::dirac(m.alpha_star)?;
            certificates.push(Certificate::new(
                ModelParams::regular(q, *d)?,
                witness,
                sigma,
            )?);
        }
    }
    let d_q = certificates
        .first()
        .map(|c| c.params().d as u32)
        .ok_or(Error::NotFoundBelowCap(d_max))?;
    Ok(DqScan {
        q,
        d_q,
        certificates,
        minima,
    })
}
