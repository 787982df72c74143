//! The binomial random graph `G(n, d/n)`: the variational functional
//! `Sigma*_{d,q}(p)` for finite-support `p`, evaluated exactly over a
//! truncated Poisson window or by Monte Carlo, plus certificate search.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AtomDistribution, Certificate, EvalResult, ModelParams};
use crate::numerics::{chunked_monte_carlo, ln_factorial, ln_poisson_pmf, CompensatedSum};
use crate::regular::{ln_edge_factor, ln_miss};

/// Two-sided Poisson tail mass left outside every evaluation window.
pub const POISSON_TAIL_TARGET: f64 = 1e-12;
/// Default cap on inclusion-exclusion terms evaluated in `Enumerate` mode.
pub const ENUMERATION_BUDGET: f64 = 1e8;
/// Relative allowance for floating-point error in window sums.
const ROUNDING_SLACK: f64 = 1e-13;

/// `[lo, hi]` window of `Po(mean)` with its discarded mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonTruncation {
    pub mean: f64,
    pub lo: u64,
    pub hi: u64,
    /// `P(D < lo) + P(D > hi)`.
    pub tail_mass: f64,
    /// `E[D; D outside the window]`. Any functional with `|f(D)| <= c D`
    /// loses at most `c` times this much to the truncation.
    pub tail_bound_contribution: f64,
    pmf: Vec<f64>,
}

impl PoissonTruncation {
    pub fn pmf(&self, k: u64) -> f64 {
        if k < self.lo || k > self.hi {
            0.0
        } else {
            self.pmf[(k - self.lo) as usize]
        }
    }

    /// `(D, Po(D))` over the window.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        (self.lo..=self.hi).zip(self.pmf.iter().copied())
    }

    pub fn width(&self) -> u64 {
        self.hi - self.lo + 1
    }
}

/// Narrowest window around the mode of `Po(mean)` whose two-sided tail mass
/// is at most `tail_target`. Tails are summed from the outside in, so the
/// reported mass is accurate far below `1e-12`.
pub fn poisson_window(mean: f64, tail_target: f64) -> Result<PoissonTruncation> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::InvalidParams(format!(
            "Poisson mean must be positive, got {mean}"
        )));
    }
    if !(tail_target > 0.0 && tail_target <= 1e-9) {
        return Err(Error::InvalidParams(format!(
            "tail target must lie in (0, 1e-9], got {tail_target}"
        )));
    }
    let mode = mean.floor() as u64;
    let span = (12.0 * mean.sqrt() + 30.0).ceil() as u64;
    let a = mode.saturating_sub(span);
    let b = mode + span;
    let len = (b - a + 1) as usize;

    let mut p = vec![0.0f64; len];
    let m = (mode - a) as usize;
    p[m] = ln_poisson_pmf(mode, mean).exp();
    for i in m + 1..len {
        p[i] = p[i - 1] * mean / (a + i as u64) as f64;
    }
    for i in (0..m).rev() {
        p[i] = p[i + 1] * (a + i as u64 + 1) as f64 / mean;
    }
    // Geometric bounds for mass beyond the tabulated range.
    let upper_rem = {
        let r = mean / (b + 1) as f64;
        p[len - 1] * r / (1.0 - r)
    };
    let lower_rem = if a == 0 {
        0.0
    } else {
        let below = p[0] * a as f64 / mean;
        below / (1.0 - (a - 1) as f64 / mean)
    };
    // below[i] = sum of p over tabulated indices < i; above[i] = over > i.
    let mut below = vec![0.0f64; len + 1];
    for i in 0..len {
        below[i + 1] = below[i] + p[i];
    }
    let mut above = vec![0.0f64; len];
    for i in (0..len - 1).rev() {
        above[i] = above[i + 1] + p[i + 1];
    }
    let tail = |lo: usize, hi: usize| below[lo] + lower_rem + above[hi] + upper_rem;

    let need_hi = (mean.ceil() as u64).saturating_sub(a) as usize;
    let (mut lo, mut hi) = (m, m.max(need_hi));
    while tail(lo, hi) > tail_target {
        let left = if lo > 0 { p[lo - 1] } else { -1.0 };
        let right = if hi + 1 < len { p[hi + 1] } else { -1.0 };
        if left < 0.0 && right < 0.0 {
            break;
        }
        if left > right {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    let tail_mass = tail(lo, hi);
    let lower_out = below[lo] + lower_rem;
    let upper_out = above[hi] + upper_rem;
    // sum_{k>hi} k p_k = mean P(D >= hi); sum_{k<lo} k p_k = mean P(D <= lo-2).
    let below_lo_minus_one = if lo > 0 { lower_out - p[lo - 1] } else { 0.0 };
    let tail_bound_contribution = mean * (upper_out + p[hi] + below_lo_minus_one.max(0.0));
    Ok(PoissonTruncation {
        mean,
        lo: a + lo as u64,
        hi: a + hi as u64,
        tail_mass,
        tail_bound_contribution,
        pmf: p[lo..=hi].to_vec(),
    })
}

fn check_args(d: f64, q: u32) -> Result<()> {
    if q < 3 {
        return Err(Error::InvalidParams(format!("q must be >= 3, got {q}")));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidParams(format!("d must be positive, got {d}")));
    }
    Ok(())
}

/// `log(q/(q-1))`: since `miss >= (1 - 1/q)^D`, `|log miss| <= D` times this.
fn per_degree_log_bound(q: u32) -> f64 {
    -(-1.0 / q as f64).ln_1p()
}

/// `Sigma*_{d,q}(delta_alpha)` over the Poisson window.
pub fn eval_sigma_star_atom(d: f64, q: u32, alpha: f64) -> Result<EvalResult> {
    check_args(d, q)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let win = poisson_window(d, POISSON_TAIL_TARGET)?;
    let terms: Vec<(f64, f64)> = win
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, pk)| {
            let lm = ln_miss(q, &[(alpha, k as f64)]);
            if lm.clamped {
                Err(Error::DegenerateLog(0.0, k))
            } else {
                Ok((pk * lm.ln, pk * lm.ln.abs()))
            }
        })
        .collect::<Result<_>>()?;
    let first: f64 = terms
        .iter()
        .map(|t| t.0)
        .collect::<CompensatedSum>()
        .value();
    let magnitude: f64 = terms.iter().map(|t| t.1).sum();
    let penalty = 0.5 * d * ln_edge_factor(q, alpha, alpha);
    let radius = per_degree_log_bound(q) * win.tail_bound_contribution
        + ROUNDING_SLACK * (magnitude + penalty.abs());
    Ok(EvalResult::truncated(
        first - penalty,
        radius,
        format!(
            "window=[{},{}]; tail_mass={:.3e}",
            win.lo, win.hi, win.tail_mass
        ),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Enumerate,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaStarConfig {
    pub mode: EvalMode,
    pub samples: u64,
    pub seed: u64,
    pub budget: f64,
}

impl Default for SigmaStarConfig {
    fn default() -> Self {
        Self {
            mode: EvalMode::Enumerate,
            samples: 100_000,
            seed: 0,
            budget: ENUMERATION_BUDGET,
        }
    }
}

impl SigmaStarConfig {
    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Self {
            mode: EvalMode::MonteCarlo,
            samples,
            seed,
            ..Self::default()
        }
    }
}

/// Calls `f` with every vector of `parts` non-negative integers summing to
/// `total`.
pub(crate) fn for_each_composition<F: FnMut(&[u64])>(total: u64, parts: usize, mut f: F) {
    if parts == 0 {
        if total == 0 {
            f(&[]);
        }
        return;
    }
    let mut c = vec![0u64; parts];
    c[parts - 1] = total;
    loop {
        f(&c);
        // Advance: find the rightmost non-final position that can take one
        // unit from the tail.
        let tail = c[parts - 1];
        if parts == 1 {
            return;
        }
        if tail > 0 {
            c[parts - 2] += 1;
            c[parts - 1] = tail - 1;
            continue;
        }
        let mut i = parts - 2;
        loop {
            if c[i] > 0 {
                break;
            }
            if i == 0 {
                return;
            }
            i -= 1;
        }
        if i == 0 {
            return;
        }
        let moved = c[i];
        c[i] = 0;
        c[i - 1] += 1;
        c[parts - 1] = moved - 1;
    }
}

/// `C(n + k - 1, k - 1)` as a float.
fn compositions_count(n: u64, k: usize) -> f64 {
    if k == 0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    crate::numerics::ln_binomial(n + k as u64 - 1, k as u64 - 1).exp()
}

/// `Sigma*_{d,q}(p)`.
///
/// `Enumerate` sums exactly over the Poisson window and, for each degree,
/// over the multinomial count vectors of atoms (the product over draws
/// depends only on those counts). `MonteCarlo` samples `(D, A_1..A_D)` and an
/// independent pair `(A', A'')` per draw and reports three standard errors.
pub fn eval_sigma_star(
    d: f64,
    q: u32,
    p: &AtomDistribution,
    cfg: &SigmaStarConfig,
) -> Result<EvalResult> {
    check_args(d, q)?;
    match cfg.mode {
        EvalMode::Enumerate => enumerate_sigma_star(d, q, p, cfg.budget),
        EvalMode::MonteCarlo => monte_carlo_sigma_star(d, q, p, cfg.samples, cfg.seed),
    }
}

fn penalty_exact(d: f64, q: u32, p: &AtomDistribution) -> f64 {
    let mut s = CompensatedSum::new();
    for a in p.atoms() {
        for b in p.atoms() {
            s.add(a.weight * b.weight * ln_edge_factor(q, a.location, b.location));
        }
    }
    0.5 * d * s.value()
}

fn enumerate_sigma_star(d: f64, q: u32, p: &AtomDistribution, budget: f64) -> Result<EvalResult> {
    let win = poisson_window(d, POISSON_TAIL_TARGET)?;
    let s = p.len();
    let needed: f64 = win
        .iter()
        .map(|(k, _)| compositions_count(k, s))
        .sum::<f64>()
        * q as f64;
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let ln_w: Vec<f64> = p.atoms().iter().map(|a| a.weight.ln()).collect();
    let alphas: Vec<f64> = p.atoms().iter().map(|a| a.location).collect();
    let per_degree: Vec<(f64, f64)> = win
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, pk)| {
            let ln_kf = ln_factorial(k);
            let mut acc = CompensatedSum::new();
            let mut mag = 0.0;
            let mut degenerate = false;
            let mut classes: Vec<(f64, f64)> = alphas.iter().map(|&a| (a, 0.0)).collect();
            for_each_composition(k, s, |counts| {
                let mut ln_mult = ln_kf;
                for (j, &c) in counts.iter().enumerate() {
                    ln_mult += c as f64 * ln_w[j] - ln_factorial(c);
                    classes[j].1 = c as f64;
                }
                let weight = ln_mult.exp();
                let lm = ln_miss(q, &classes);
                degenerate |= lm.clamped;
                acc.add(weight * lm.ln);
                mag += weight * lm.ln.abs();
            });
            if degenerate {
                Err(Error::DegenerateLog(0.0, k))
            } else {
                Ok((pk * acc.value(), pk * mag))
            }
        })
        .collect::<Result<_>>()?;
    let first = per_degree
        .iter()
        .map(|t| t.0)
        .collect::<CompensatedSum>()
        .value();
    let magnitude: f64 = per_degree.iter().map(|t| t.1).sum();
    let penalty = penalty_exact(d, q, p);
    let radius = per_degree_log_bound(q) * win.tail_bound_contribution
        + ROUNDING_SLACK * (magnitude + penalty.abs());
    Ok(EvalResult::truncated(
        first - penalty,
        radius,
        format!(
            "window=[{},{}]; tail_mass={:.3e}; atoms={}",
            win.lo, win.hi, win.tail_mass, s
        ),
    ))
}

fn monte_carlo_sigma_star(
    d: f64,
    q: u32,
    p: &AtomDistribution,
    samples: u64,
    seed: u64,
) -> Result<EvalResult> {
    if samples < 2 {
        return Err(Error::InvalidParams(
            "Monte Carlo needs at least 2 samples".into(),
        ));
    }
    let poisson = Poisson::new(d).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let atoms = p.atoms();
    let mut cdf = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for a in atoms {
        acc += a.weight;
        cdf.push(acc);
    }
    let pick = |u: f64| cdf.partition_point(|&c| c <= u * acc).min(atoms.len() - 1);
    let [stats] = chunked_monte_carlo::<1, _>(samples, seed, |rng| {
        let k = poisson.sample(rng) as u64;
        let mut counts = vec![0.0f64; atoms.len()];
        for _ in 0..k {
            counts[pick(rng.random::<f64>())] += 1.0;
        }
        let classes: Vec<(f64, f64)> = atoms
            .iter()
            .zip(&counts)
            .map(|(a, &c)| (a.location, c))
            .collect();
        let lm = ln_miss(q, &classes);
        if lm.clamped {
            return [f64::NAN];
        }
        let a1 = atoms[pick(rng.random::<f64>())].location;
        let a2 = atoms[pick(rng.random::<f64>())].location;
        [lm.ln - 0.5 * d * ln_edge_factor(q, a1, a2)]
    });
    if stats.mean.is_nan() {
        return Err(Error::DegenerateLog(0.0, 0));
    }
    let se = stats.std_error();
    Ok(EvalResult::monte_carlo(
        stats.mean,
        3.0 * se,
        format!("samples={samples}; seed={seed}; stderr={se:.3e}"),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub sigma: EvalResult,
}

/// `alpha -> Sigma*_{d,q}(delta_alpha)` on a grid.
pub fn sigma_star_curve(d: f64, q: u32, alpha_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    alpha_grid
        .par_iter()
        .map(|&alpha| eval_sigma_star_atom(d, q, alpha).map(|sigma| CurvePoint { alpha, sigma }))
        .collect()
}

fn eval_member(d: f64, q: u32, p: &AtomDistribution) -> Result<EvalResult> {
    match p.as_dirac() {
        Some(alpha) => eval_sigma_star_atom(d, q, alpha),
        None => eval_sigma_star(d, q, p, &SigmaStarConfig::default()),
    }
}

/// First member of `family` whose functional is negative beyond its error
/// radius. Members too large to enumerate are skipped.
pub fn certify_binomial(
    d: f64,
    q: u32,
    family: &[AtomDistribution],
) -> Result<Option<Certificate>> {
    check_args(d, q)?;
    let params = ModelParams::binomial(q, d)?;
    for p in family {
        let sigma = match eval_member(d, q, p) {
            Ok(s) => s,
            Err(Error::BudgetExceeded { .. }) => continue,
            Err(e) => return Err(e),
        };
        if sigma.upper() < 0.0 {
            return Certificate::new(params, p.clone(), sigma).map(Some);
        }
    }
    Ok(None)
}

/// Smallest certified degree on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DStarBound {
    pub d: f64,
    pub certificate: Certificate,
}

/// Smallest `d` on the grid `d_lo, d_lo + resolution, ..., <= d_hi` that
/// `certify_binomial` accepts. Every grid point is evaluated.
pub fn find_dstar_upper(
    q: u32,
    family: &[AtomDistribution],
    d_lo: f64,
    d_hi: f64,
    resolution: f64,
) -> Result<DStarBound> {
    if !(d_lo > 0.0 && d_lo < d_hi && resolution > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need 0 < d_lo < d_hi and resolution > 0, got [{d_lo}, {d_hi}] step {resolution}"
        )));
    }
    let steps = ((d_hi - d_lo) / resolution + 1e-9).floor() as u64;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| ((d_lo + k as f64 * resolution) * 1e12).round() / 1e12)
        .collect();
    let found: Vec<Option<Certificate>> = grid
        .par_iter()
        .map(|&d| certify_binomial(d, q, family))
        .collect::<Result<_>>()?;
    grid.iter()
        .zip(found)
        .find_map(|(&d, c)| c.map(|certificate| DStarBound { d, certificate }))
        .ok_or(Error::NotFoundInRange(d_lo, d_hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_tail(mean: f64, lo: u64, hi: u64) -> f64 {
        // Oracle: sum ln-pmf over a wide range outside the window.
        let top = hi + 2000;
        let mut s = 0.0;
        for k in 0..lo {
            s += ln_poisson_pmf(k, mean).exp();
        }
        for k in hi + 1..=top {
            s += ln_poisson_pmf(k, mean).exp();
        }
        s
    }

    #[test]
    fn window_examples() {
        let w = poisson_window(4.697, 1e-12).unwrap();
        let inside: f64 = (w.lo..=w.hi).map(|k| ln_poisson_pmf(k, 4.697).exp()).sum();
        assert!(inside >= 1.0 - 1e-12);
        assert!(direct_tail(4.697, w.lo, w.hi) <= 1e-12);
        assert!((w.tail_mass - direct_tail(4.697, w.lo, w.hi)).abs() < 1e-15);

        let w = poisson_window(0.001, 1e-12).unwrap();
        assert_eq!(w.lo, 0);
        assert!(w.hi >= 1);

        let w = poisson_window(13800.0, 1e-12).unwrap();
        assert!(w.lo as f64 <= 13800.0 && 13800.0 <= w.hi as f64);
        assert!(((w.hi - w.lo) as f64) <= 20.0 * 13800f64.sqrt());
    }

    #[test]
    fn window_is_minimal() {
        for mean in [0.3, 4.697, 37.0, 250.5] {
            let w = poisson_window(mean, 1e-12).unwrap();
            // Dropping either end must break the target.
            let lo_drop = direct_tail(mean, w.lo + 1, w.hi);
            let hi_drop = direct_tail(mean, w.lo, w.hi - 1);
            assert!(lo_drop > 1e-12 || w.lo + 1 > w.hi || (w.lo as f64) >= mean.floor());
            assert!(hi_drop > 1e-12, "mean {mean}");
        }
    }

    #[test]
    fn atom_examples() {
        let v = eval_sigma_star_atom(4.697, 3, 0.25).unwrap();
        assert!(v.upper() < 0.0, "{v:?}");
        for (d, q) in [(4.697, 3), (10.0, 5), (2.5, 4)] {
            assert_eq!(eval_sigma_star_atom(d, q, 1.0).unwrap().value, 0.0);
        }
    }

    #[test]
    fn atom_agrees_with_monte_carlo() {
        let exact = eval_sigma_star_atom(5.0, 3, 0.3).unwrap();
        let p = AtomDistribution::dirac(0.3).unwrap();
        let mc = eval_sigma_star(5.0, 3, &p, &SigmaStarConfig::monte_carlo(200_000, 7)).unwrap();
        assert!(
            (exact.value - mc.value).abs() <= mc.error_radius,
            "{exact:?} {mc:?}"
        );
    }

    #[test]
    fn single_atom_enumeration_matches_atom_evaluator() {
        for (d, q, a) in [
            (4.7, 3, 0.2),
            (8.0, 4, 0.05),
            (3.3, 5, 0.6),
            (4.697, 3, 0.25),
        ] {
            let p = AtomDistribution::dirac(a).unwrap();
            let e = eval_sigma_star(d, q, &p, &SigmaStarConfig::default()).unwrap();
            let atom = eval_sigma_star_atom(d, q, a).unwrap();
            assert!((e.value - atom.value).abs() < 1e-10);
        }
    }

    #[test]
    fn two_atom_enumeration_matches_monte_carlo() {
        let p = crate::model::validate_distribution(&[(0.2, 0.5), (0.3, 0.5)]).unwrap();
        let e = eval_sigma_star(4.7, 3, &p, &SigmaStarConfig::default()).unwrap();
        let mc = eval_sigma_star(4.7, 3, &p, &SigmaStarConfig::monte_carlo(200_000, 11)).unwrap();
        assert!(
            (e.value - mc.value).abs() <= mc.error_radius + e.error_radius,
            "{e:?} {mc:?}"
        );
    }

    #[test]
    fn dirac_one_vanishes_in_both_modes() {
        let p = AtomDistribution::dirac(1.0).unwrap();
        assert_eq!(
            eval_sigma_star(4.0, 3, &p, &SigmaStarConfig::default())
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(
            eval_sigma_star(4.0, 3, &p, &SigmaStarConfig::monte_carlo(1000, 1))
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn budget_is_enforced() {
        let p = crate::model::validate_distribution(&[
            (0.1, 0.25),
            (0.3, 0.25),
            (0.5, 0.25),
            (0.7, 0.25),
        ])
        .unwrap();
        let cfg = SigmaStarConfig {
            budget: 1e3,
            ..SigmaStarConfig::default()
        };
        assert!(matches!(
            eval_sigma_star(10.0, 3, &p, &cfg),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn compositions_enumerate_all() {
        let mut seen = Vec::new();
        for_each_composition(3, 3, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 10);
        assert!(seen.iter().all(|c| c.iter().sum::<u64>() == 3));
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 10);
        let mut n = 0;
        for_each_composition(0, 2, |_| n += 1);
        assert_eq!(n, 1);
        let mut n = 0;
        for_each_composition(7, 1, |_| n += 1);
        assert_eq!(n, 1);
    }

    #[test]
    fn certify_examples() {
        let fam = vec![AtomDistribution::dirac(0.25).unwrap()];
        let c = certify_binomial(4.697, 3, &fam).unwrap().unwrap();
        assert!(c.sigma().upper() < 0.0);
        let grid: Vec<_> = (0..=20)
            .map(|i| AtomDistribution::dirac(i as f64 / 20.0).unwrap())
            .collect();
        assert!(certify_binomial(4.0, 3, &grid).unwrap().is_none());
        assert!(certify_binomial(4.0, 3, &[]).unwrap().is_none());
    }

    #[test]
    fn dstar_with_trivial_family_is_not_found() {
        let fam = vec![AtomDistribution::dirac(1.0).unwrap()];
        assert!(matches!(
            find_dstar_upper(3, &fam, 4.0, 5.0, 0.01),
            Err(Error::NotFoundInRange(..))
        ));
    }
}
