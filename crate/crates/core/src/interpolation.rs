//! Numerical checks of the two analytic devices behind the bound: the
//! Poisson-Dirichlet averaging identity and the Potts functional
//! `phi_{beta,y}(r_alpha)` with its zero-temperature limit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::binomial::{for_each_composition, EvalMode};
use crate::error::{Error, Result};
use crate::model::EvalResult;
use crate::numerics::{chunked_monte_carlo, ln_binomial, ln_factorial, log_sum_exp, stream_rng};
use crate::regular::eval_sigma_regular;

pub const DEFAULT_EPS_T: f64 = 1e-4;
pub const DEFAULT_MAX_POINTS: u64 = 1_000_000;
/// Cap on the number of inner terms enumerated by `eval_phi_regular`.
pub const PHI_ENUMERATION_BUDGET: f64 = 1e7;

/// Normalised points of the Poisson process with intensity `x^{-1-y} dx`
/// restricted to `(eps_t, inf)`, in decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PDWeights {
    pub weights: Vec<f64>,
    pub y: f64,
    pub eps_t: f64,
    /// Sum of the retained raw points before normalisation.
    pub raw_mass: f64,
    /// Expected raw mass of the discarded points below `eps_t`:
    /// `eps_t^{1-y} / (1-y)`.
    pub discarded_mass: f64,
}

/// Expected number of points above `eps_t`: `eps_t^{-y} / y`.
pub fn expected_point_count(y: f64, eps_t: f64) -> f64 {
    eps_t.powf(-y) / y
}

pub fn expected_discarded_mass(y: f64, eps_t: f64) -> f64 {
    eps_t.powf(1.0 - y) / (1.0 - y)
}

fn check_pd_args(y: f64, eps_t: f64) -> Result<()> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::InvalidParams(format!(
            "y must lie in (0, 1), got {y}"
        )));
    }
    if !(eps_t > 0.0 && eps_t.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "eps_t must be positive, got {eps_t}"
        )));
    }
    Ok(())
}

/// Raw (unnormalised, unsorted) points above `eps_t`, by inverse CDF.
fn draw_points<R: Rng + ?Sized>(
    rng: &mut R,
    count_law: &Poisson<f64>,
    y: f64,
    eps_t: f64,
    max_points: u64,
) -> Result<Vec<f64>> {
    let count = count_law.sample(rng) as u64;
    if count > max_points {
        return Err(Error::MaxPointsExceeded(max_points));
    }
    Ok((0..count)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            eps_t * u.powf(-1.0 / y)
        })
        .collect())
}

pub fn sample_pd_weights_with<R: Rng + ?Sized>(
    rng: &mut R,
    y: f64,
    eps_t: f64,
    max_points: u64,
) -> Result<PDWeights> {
    check_pd_args(y, eps_t)?;
    let count_law = Poisson::new(expected_point_count(y, eps_t))
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    // An empty draw has no normalisation; redraw (probability e^{-mean}).
    let mut points = loop {
        let p = draw_points(rng, &count_law, y, eps_t, max_points)?;
        if !p.is_empty() {
            break p;
        }
    };
    points.sort_by(|a, b| b.total_cmp(a));
    let raw_mass: f64 = points.iter().rev().sum();
    let weights = points.iter().map(|x| x / raw_mass).collect();
    Ok(PDWeights {
        weights,
        y,
        eps_t,
        raw_mass,
        discarded_mass: expected_discarded_mass(y, eps_t),
    })
}

/// Samples the truncated point process and normalises it.
pub fn sample_pd_weights(y: f64, eps_t: f64, seed: u64, max_points: u64) -> Result<PDWeights> {
    sample_pd_weights_with(&mut stream_rng(seed, 0), y, eps_t, max_points)
}

/// Law of the i.i.d. positive variables `X_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum XLaw {
    Constant {
        c: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `X = a` with probability `p`, else `b`.
    TwoPoint {
        a: f64,
        b: f64,
        p: f64,
    },
}

impl XLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            XLaw::Constant { c } => c > 0.0 && c.is_finite(),
            XLaw::Uniform { lo, hi } => lo > 0.0 && hi > lo && hi.is_finite(),
            XLaw::TwoPoint { a, b, p } => {
                a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && (0.0..=1.0).contains(&p)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "X law must be positive and bounded: {self:?}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            XLaw::Constant { c } => c,
            XLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            XLaw::TwoPoint { a, b, p } => p * a + (1.0 - p) * b,
        }
    }

    /// `E[X^y]` in closed form.
    pub fn moment(&self, y: f64) -> f64 {
        match *self {
            XLaw::Constant { c } => c.powf(y),
            XLaw::Uniform { lo, hi } => {
                (hi.powf(y + 1.0) - lo.powf(y + 1.0)) / ((y + 1.0) * (hi - lo))
            }
            XLaw::TwoPoint { a, b, p } => p * a.powf(y) + (1.0 - p) * b.powf(y),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            XLaw::Constant { c } => c,
            XLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            XLaw::TwoPoint { a, b, p } => {
                if rng.random::<f64>() < p {
                    a
                } else {
                    b
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdIdentityCheck {
    pub lhs_estimate: f64,
    pub rhs_exact: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub samples: u64,
    pub mean_points: f64,
    /// Expected raw mass per draw lost to truncation.
    pub discarded_mass: f64,
}

/// Monte Carlo check of `E[log sum_s Gamma(s) X_s] = (1/y) log E[X^y]`.
///
/// Each draw uses fresh points and fresh `X_s`. Points below `eps_t` are
/// not simulated; their contribution is replaced by its expectation
/// (discarded mass times `E[X]`) in both the weighted sum and the
/// normaliser.
pub fn check_pd_identity(
    y: f64,
    law: XLaw,
    samples: u64,
    seed: u64,
    eps_t: f64,
    max_points: u64,
) -> Result<PdIdentityCheck> {
    check_pd_args(y, eps_t)?;
    law.validate()?;
    if samples < 2 {
        return Err(Error::InvalidParams(
            "Monte Carlo needs at least 2 samples".into(),
        ));
    }
    let count_law = Poisson::new(expected_point_count(y, eps_t))
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let dust = expected_discarded_mass(y, eps_t);
    let dust_x = dust * law.mean();
    let [lhs, points] = chunked_monte_carlo::<2, _>(samples, seed, |rng: &mut ChaCha8Rng| {
        let pts = loop {
            match draw_points(rng, &count_law, y, eps_t, max_points) {
                Ok(p) if p.is_empty() => continue,
                Ok(p) => break p,
                Err(_) => return [f64::NAN, f64::NAN],
            }
        };
        let mut num = dust_x;
        let mut den = dust;
        for &x in &pts {
            num += x * law.sample(rng);
            den += x;
        }
        [(num / den).ln(), pts.len() as f64]
    });
    if lhs.mean.is_nan() {
        return Err(Error::MaxPointsExceeded(max_points));
    }
    let rhs = law.moment(y).ln() / y;
    let stderr = lhs.std_error();
    let diff = lhs.mean - rhs;
    let scale = stderr.max(1e-14 * (1.0 + rhs.abs()));
    Ok(PdIdentityCheck {
        lhs_estimate: lhs.mean,
        rhs_exact: rhs,
        stderr,
        z_score: diff / scale,
        samples,
        mean_points: points.mean,
        discarded_mass: dust,
    })
}

/// `r_alpha`: mass `alpha` on the uniform distribution over colours and
/// `(1 - alpha)/q` on each colour atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicaMeasure {
    pub alpha: f64,
    pub q: u32,
}

impl ReplicaMeasure {
    pub fn new(alpha: f64, q: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if q < 3 {
            return Err(Error::InvalidParams(format!("q must be >= 3, got {q}")));
        }
        Ok(Self { alpha, q })
    }

    /// `None` for the centre, `Some(c)` for the atom on colour `c`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u32> {
        if rng.random::<f64>() < self.alpha {
            None
        } else {
            Some(rng.random_range(0..self.q))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiConfig {
    pub mode: EvalMode,
    pub samples: u64,
    pub seed: u64,
    pub budget: f64,
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self {
            mode: EvalMode::Enumerate,
            samples: 100_000,
            seed: 0,
            budget: PHI_ENUMERATION_BUDGET,
        }
    }
}

impl PhiConfig {
    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Self {
            mode: EvalMode::MonteCarlo,
            samples,
            seed,
            ..Self::default()
        }
    }
}

/// Per-edge factors of the functional at inverse temperature `beta`.
struct PottsFactors {
    /// `ln e^{-beta} = -beta`.
    ln_hit: f64,
    /// `ln(1 - (1 - e^{-beta})/q)`, the factor of a centre message.
    ln_centre: f64,
}

impl PottsFactors {
    fn new(q: u32, beta: f64) -> Self {
        let hit = (-beta).exp();
        // (1 - 1/q) + e^{-beta}/q keeps its precision for large beta.
        let centre = (1.0 - 1.0 / q as f64) + hit / q as f64;
        Self {
            ln_hit: -beta,
            ln_centre: centre.ln(),
        }
    }
}

/// `phi_{beta,y}(delta_{r_alpha})` for the `d`-regular graph:
/// `log E[(sum_tau prod_h (1 - (1-e^{-beta}) rho_h(tau)))^y]
///  - (d/2) log E[(1 - (1-e^{-beta}) sum_tau rho'(tau) rho''(tau))^y]`.
pub fn eval_phi_regular(
    d: u32,
    q: u32,
    beta: f64,
    y: f64,
    alpha: f64,
    cfg: &PhiConfig,
) -> Result<EvalResult> {
    let r = ReplicaMeasure::new(alpha, q)?;
    if d < 1 {
        return Err(Error::InvalidParams("d must be >= 1".into()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::InvalidParams(format!("y must be positive, got {y}")));
    }
    let f = PottsFactors::new(q, beta);
    match cfg.mode {
        EvalMode::Enumerate => phi_enumerate(d, r, &f, y, cfg.budget),
        EvalMode::MonteCarlo => phi_monte_carlo(d, r, &f, y, cfg.samples, cfg.seed),
    }
}

/// `log E[(1 - (1-e^{-beta}) <rho', rho''>)^y]` over the three outcome
/// classes: some centre (value `centre`), equal corners (`e^{-beta}`),
/// distinct corners (`1`).
fn ln_edge_term(r: ReplicaMeasure, f: &PottsFactors, y: f64) -> f64 {
    let q = r.q as f64;
    let corner2 = (1.0 - r.alpha) * (1.0 - r.alpha);
    let mut terms = Vec::with_capacity(3);
    let p_centre = 1.0 - corner2;
    if p_centre > 0.0 {
        terms.push(p_centre.ln() + y * f.ln_centre);
    }
    if corner2 > 0.0 {
        terms.push((corner2 / q).ln() + y * f.ln_hit);
        terms.push((corner2 * (1.0 - 1.0 / q)).ln());
    }
    log_sum_exp(&terms)
}

fn phi_enumerate(
    d: u32,
    r: ReplicaMeasure,
    f: &PottsFactors,
    y: f64,
    budget: f64,
) -> Result<EvalResult> {
    let q = r.q as usize;
    let needed: f64 = (0..=d as u64)
        .map(|k| ln_binomial(d as u64 - k + q as u64 - 1, q as u64 - 1).exp())
        .sum();
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let ln_beta_hit = f.ln_hit;
    let ln_q = (r.q as f64).ln();
    let mut terms = Vec::new();
    for k in 0..=d as u64 {
        let corners = d as u64 - k;
        if (k > 0 && r.alpha == 0.0) || (corners > 0 && r.alpha == 1.0) {
            continue;
        }
        let ln_pk = ln_binomial(d as u64, k)
            + if k > 0 { k as f64 * r.alpha.ln() } else { 0.0 }
            + if corners > 0 {
                corners as f64 * (1.0 - r.alpha).ln()
            } else {
                0.0
            };
        let ln_cf = ln_factorial(corners) - corners as f64 * ln_q;
        let mut exps = vec![0.0f64; q];
        for_each_composition(corners, q, |counts| {
            let ln_mult = ln_cf - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>();
            for (e, &c) in exps.iter_mut().zip(counts) {
                *e = c as f64 * ln_beta_hit;
            }
            let ln_x = k as f64 * f.ln_centre + log_sum_exp(&exps);
            terms.push(ln_pk + ln_mult + y * ln_x);
        });
    }
    let first = log_sum_exp(&terms);
    let second = ln_edge_term(r, f, y);
    let value = first - 0.5 * d as f64 * second;
    Ok(EvalResult::exact(value).with_detail(format!("terms={}", terms.len())))
}

fn phi_monte_carlo(
    d: u32,
    r: ReplicaMeasure,
    f: &PottsFactors,
    y: f64,
    samples: u64,
    seed: u64,
) -> Result<EvalResult> {
    if samples < 2 {
        return Err(Error::InvalidParams(
            "Monte Carlo needs at least 2 samples".into(),
        ));
    }
    let q = r.q as usize;
    let ln_hit = f.ln_hit;
    let [s1, s2] = chunked_monte_carlo::<2, _>(samples, seed, |rng| {
        let mut centre = 0u32;
        let mut counts = vec![0u32; q];
        for _ in 0..d {
            match r.sample(rng) {
                None => centre += 1,
                Some(c) => counts[c as usize] += 1,
            }
        }
        let exps: Vec<f64> = counts.iter().map(|&c| c as f64 * ln_hit).collect();
        let ln_x = centre as f64 * f.ln_centre + log_sum_exp(&exps);
        let ln_edge = match (r.sample(rng), r.sample(rng)) {
            (Some(a), Some(b)) if a == b => ln_hit,
            (Some(_), Some(_)) => 0.0,
            _ => f.ln_centre,
        };
        [(y * ln_x).exp(), (y * ln_edge).exp()]
    });
    let half_d = 0.5 * d as f64;
    let value = s1.mean.ln() - half_d * s2.mean.ln();
    // Delta method for the two independent log-means.
    let se =
        ((s1.std_error() / s1.mean).powi(2) + (half_d * s2.std_error() / s2.mean).powi(2)).sqrt();
    Ok(EvalResult::monte_carlo(
        value,
        3.0 * se,
        format!("samples={samples}; seed={seed}; stderr={se:.3e}"),
    ))
}

/// `y [log q + (d/2) log(1 - (1 - e^{-beta})/q)]`, the value at `alpha = 1`.
pub fn phi_at_one(d: u32, q: u32, beta: f64, y: f64) -> f64 {
    let f = PottsFactors::new(q, beta);
    y * ((q as f64).ln() + 0.5 * d as f64 * f.ln_centre)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub beta: f64,
    pub y: f64,
    pub phi: f64,
    pub sigma: f64,
    /// `|phi - Sigma_{d,q}(alpha)|`.
    pub gap: f64,
}

/// Distance of `phi_{beta,y}(r_alpha)` from its zero-temperature limit
/// `Sigma_{d,q}(alpha)` on the `beta x y` grid (row-major in `betas`).
///
/// The limit is taken with `beta -> inf` first: for fixed `y` the
/// non-colouring events keep weight `e^{-beta y}`, so the gap closes once
/// `beta y` is large and `y` is small.
pub fn zero_temp_gap(
    d: u32,
    q: u32,
    alpha: f64,
    betas: &[f64],
    ys: &[f64],
) -> Result<Vec<GapEntry>> {
    let sigma = eval_sigma_regular(d, q, alpha)?.value;
    let mut out = Vec::with_capacity(betas.len() * ys.len());
    for &beta in betas {
        for &y in ys {
            let phi = eval_phi_regular(d, q, beta, y, alpha, &PhiConfig::default())?.value;
            out.push(GapEntry {
                beta,
                y,
                phi,
                sigma,
                gap: (phi - sigma).abs(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pd_weights_shape() {
        let w = sample_pd_weights(0.5, 0.01, 3, DEFAULT_MAX_POINTS).unwrap();
        assert!(w.weights.iter().all(|&x| x > 0.0));
        assert!(w.weights.windows(2).all(|p| p[0] >= p[1]));
        assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(
            w,
            sample_pd_weights(0.5, 0.01, 3, DEFAULT_MAX_POINTS).unwrap()
        );
        assert!((expected_point_count(0.5, 0.01) - 20.0).abs() < 1e-12);
        assert_eq!(
            sample_pd_weights(0.8, 1e-6, 1, 10),
            Err(Error::MaxPointsExceeded(10))
        );
    }

    #[test]
    fn pd_constant_law_is_exact() {
        let r = check_pd_identity(
            0.5,
            XLaw::Constant { c: 2.5 },
            1000,
            1,
            1e-3,
            DEFAULT_MAX_POINTS,
        )
        .unwrap();
        assert!((r.lhs_estimate - 2.5f64.ln()).abs() < 1e-12);
        assert!(r.z_score.abs() <= 4.0);
    }

    #[test]
    fn pd_uniform_rhs_closed_form() {
        let law = XLaw::Uniform { lo: 1.0, hi: 2.0 };
        let want = 2.0 * ((2.0 / 3.0) * (2.0 * 2f64.sqrt() - 1.0)).ln();
        assert!((law.moment(0.5).ln() / 0.5 - want).abs() < 1e-14);
        assert!((want - 0.39598).abs() < 1e-5);
    }

    #[test]
    fn phi_at_alpha_one_is_closed_form() {
        for (d, q, beta, y) in [(6, 3, 25.0, 0.01), (3, 4, 2.0, 0.5), (10, 5, 40.0, 0.2)] {
            let v = eval_phi_regular(d, q, beta, y, 1.0, &PhiConfig::default())
                .unwrap()
                .value;
            assert!((v - phi_at_one(d, q, beta, y)).abs() < 1e-13, "{v}");
        }
    }

    #[test]
    fn phi_high_temperature_limit() {
        for alpha in [0.0, 0.3, 1.0] {
            let v = eval_phi_regular(6, 3, 1e-6, 0.4, alpha, &PhiConfig::default())
                .unwrap()
                .value;
            assert!((v - 0.4 * 3f64.ln()).abs() < 1e-4);
        }
    }

    #[test]
    fn phi_enumeration_matches_monte_carlo() {
        for (beta, y, alpha) in [(2.0, 0.5, 0.3), (10.0, 0.1, 0.6), (25.0, 0.9, 0.0)] {
            let e = eval_phi_regular(3, 3, beta, y, alpha, &PhiConfig::default()).unwrap();
            let mc = eval_phi_regular(3, 3, beta, y, alpha, &PhiConfig::monte_carlo(200_000, 5))
                .unwrap();
            assert!(
                (e.value - mc.value).abs() <= mc.error_radius,
                "{e:?} {mc:?}"
            );
        }
    }

    #[test]
    fn gap_shrinks_under_refinement() {
        let t = zero_temp_gap(6, 3, 0.3, &[5.0, 25.0], &[0.1, 0.01]).unwrap();
        let at = |b: f64, y: f64| t.iter().find(|e| e.beta == b && e.y == y).unwrap().gap;
        assert!(at(25.0, 0.01) < at(5.0, 0.1));
        assert!(t.iter().all(|e| e.gap.is_finite() && e.gap >= 0.0));
    }
}
