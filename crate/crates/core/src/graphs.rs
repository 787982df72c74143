//! Samplers for the random graph models (binomial multigraph with a
//! conditioned-Poisson edge count, configuration-model clone pairing, and
//! simple-graph conditioning) plus a small colourability experiment.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::numerics::{ln_poisson_pmf, log_sum_exp, stream_rng, wilson_interval};
use crate::potts::{is_colorable, Multigraph, MAX_SOLVER_VERTICES};

/// Default number of draws `sample_simple` makes before giving up.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n: usize,
    pub d: f64,
    /// Edge-count deficit: `m ~ Po_{<= dn/2}((1 - eps) dn/2)`. In the
    /// configuration model `eps = 0` draws a perfect matching.
    pub eps: f64,
    pub seed: u64,
    pub require_simple: bool,
}

impl SamplerConfig {
    pub fn new(n: usize, d: f64, eps: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            eps,
            seed,
            require_simple: false,
        }
    }

    fn validate(&self, kind: ModelKind) -> Result<()> {
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "d must be finite and >= 0, got {}",
                self.d
            )));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::InvalidParams(format!(
                "eps must lie in [0, 1], got {}",
                self.eps
            )));
        }
        match kind {
            ModelKind::Binomial if self.n < 2 => Err(Error::InvalidParams(format!(
                "binomial model needs n >= 2, got {}",
                self.n
            ))),
            ModelKind::Regular if self.d.fract() != 0.0 => Err(Error::InvalidParams(format!(
                "regular model needs integer d, got {}",
                self.d
            ))),
            ModelKind::Regular
                if self.eps == 0.0 && !(self.n * self.d as usize).is_multiple_of(2) =>
            {
                Err(Error::InvalidParams(format!(
                    "perfect matching needs d*n even, got d={} n={}",
                    self.d, self.n
                )))
            }
            _ => Ok(()),
        }
    }

    fn edge_cap(&self) -> u64 {
        (self.d * self.n as f64 / 2.0).floor() as u64
    }

    fn edge_mean(&self) -> f64 {
        (1.0 - self.eps) * self.d * self.n as f64 / 2.0
    }

    pub fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.seed, 0)
    }
}

/// `Po(mean)` conditioned on not exceeding `cap`, by rejection.
pub fn sample_conditioned_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64, cap: u64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let po = Poisson::new(mean).expect("positive finite mean");
    loop {
        let m = po.sample(rng) as u64;
        if m <= cap {
            return m;
        }
    }
}

fn uniform_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (usize, usize) {
    let u = rng.random_range(0..n);
    let mut v = rng.random_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    (u, v)
}

pub fn sample_binomial_multigraph_with<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SamplerConfig,
) -> Result<Multigraph> {
    cfg.validate(ModelKind::Binomial)?;
    let m = sample_conditioned_poisson(rng, cfg.edge_mean(), cfg.edge_cap());
    Multigraph::new(
        cfg.n,
        (0..m).map(|_| {
            let (u, v) = uniform_pair(rng, cfg.n);
            (u, v, 1)
        }),
    )
}

/// `m ~ Po_{<= dn/2}((1 - eps) dn/2)` i.i.d. uniform edges over distinct
/// unordered pairs.
pub fn sample_binomial_multigraph(cfg: &SamplerConfig) -> Result<Multigraph> {
    sample_binomial_multigraph_with(&mut cfg.rng(), cfg)
}

/// A uniformly random matching of size `m` on clones `0..clones`: shuffle
/// the first `2m` positions (partial Fisher-Yates) and pair neighbours.
pub(crate) fn pair_clones<R: Rng + ?Sized>(
    rng: &mut R,
    clones: usize,
    m: usize,
) -> Vec<(usize, usize)> {
    let mut c: Vec<usize> = (0..clones).collect();
    for i in 0..2 * m {
        let j = rng.random_range(i..clones);
        c.swap(i, j);
    }
    (0..m).map(|k| (c[2 * k], c[2 * k + 1])).collect()
}

pub fn sample_configuration_regular_with<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SamplerConfig,
) -> Result<Multigraph> {
    cfg.validate(ModelKind::Regular)?;
    let d = cfg.d as usize;
    let clones = cfg.n * d;
    let m = if cfg.eps == 0.0 {
        clones / 2
    } else {
        sample_conditioned_poisson(rng, cfg.edge_mean(), cfg.edge_cap()) as usize
    };
    let pairs = pair_clones(rng, clones, m);
    Multigraph::new(cfg.n, pairs.into_iter().map(|(a, b)| (a / d, b / d, 1)))
}

/// Clone pairing on `V_n x [d]`; loops and multi-edges possible.
pub fn sample_configuration_regular(cfg: &SamplerConfig) -> Result<Multigraph> {
    sample_configuration_regular_with(&mut cfg.rng(), cfg)
}

/// Dispatches on the model, honouring `require_simple`.
pub fn sample(cfg: &SamplerConfig, kind: ModelKind) -> Result<Multigraph> {
    if cfg.require_simple {
        return sample_simple(cfg, kind, DEFAULT_MAX_ATTEMPTS).map(|s| s.graph);
    }
    match kind {
        ModelKind::Binomial => sample_binomial_multigraph(cfg),
        ModelKind::Regular => sample_configuration_regular(cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleSample {
    pub graph: Multigraph,
    pub attempts: u64,
}

/// Law of the binomial edge count given that all `m` i.i.d. edges are
/// distinct: `P(m | simple) ∝ Po_{<=cap}(m) prod_{i<m} (1 - i/N)`.
fn simple_edge_count_log_weights(cfg: &SamplerConfig) -> Vec<f64> {
    let pairs = (cfg.n * (cfg.n - 1) / 2) as u64;
    let cap = cfg.edge_cap().min(pairs);
    let mean = cfg.edge_mean();
    if mean <= 0.0 {
        return vec![0.0];
    }
    let mut w = Vec::with_capacity(cap as usize + 1);
    let mut ln_distinct = 0.0;
    for m in 0..=cap {
        w.push(ln_poisson_pmf(m, mean) + ln_distinct);
        ln_distinct += (-(m as f64) / pairs as f64).ln_1p();
    }
    w
}

pub fn sample_simple_with<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SamplerConfig,
    kind: ModelKind,
    max_attempts: u64,
) -> Result<SimpleSample> {
    match kind {
        ModelKind::Binomial => {
            cfg.validate(kind)?;
            // Given the edge count, conditioning i.i.d. uniform edges on being
            // distinct yields a uniform m-subset of pairs; the edge count
            // itself is drawn from its conditional law. This is the law of
            // rejection sampling without the exponentially many retries.
            let lw = simple_edge_count_log_weights(cfg);
            let norm = log_sum_exp(&lw);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut m = lw.len() - 1;
            for (k, &l) in lw.iter().enumerate() {
                acc += (l - norm).exp();
                if u < acc {
                    m = k;
                    break;
                }
            }
            let n = cfg.n;
            let pairs = n * (n - 1) / 2;
            let picked = index::sample(rng, pairs, m);
            let edges = picked.into_iter().map(|idx| {
                let (u, v) = unrank_pair(idx, n);
                (u, v, 1)
            });
            Ok(SimpleSample {
                graph: Multigraph::new(n, edges)?,
                attempts: 1,
            })
        }
        ModelKind::Regular => {
            for attempt in 1..=max_attempts {
                let g = sample_configuration_regular_with(rng, cfg)?;
                if g.is_simple() {
                    return Ok(SimpleSample {
                        graph: g,
                        attempts: attempt,
                    });
                }
            }
            Err(Error::RejectionBudgetExceeded(max_attempts))
        }
    }
}

/// A sample conditioned on having no loops or repeated edges. The regular
/// model uses rejection (at most `max_attempts` draws).
pub fn sample_simple(
    cfg: &SamplerConfig,
    kind: ModelKind,
    max_attempts: u64,
) -> Result<SimpleSample> {
    sample_simple_with(&mut cfg.rng(), cfg, kind, max_attempts)
}

/// Inverse of the row-major ranking of pairs `u < v` of `0..n`.
fn unrank_pair(mut idx: usize, n: usize) -> (usize, usize) {
    let mut u = 0;
    loop {
        let row = n - 1 - u;
        if idx < row {
            return (u, u + 1 + idx);
        }
        idx -= row;
        u += 1;
    }
}

pub const EXPERIMENT_CSV_HEADER: &str = "model,n,d,q,samples,frac,ci_lo,ci_hi,seed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub model: ModelKind,
    pub n: usize,
    pub d: f64,
    pub q: u32,
    pub samples: u64,
    pub non_colorable: u64,
    pub fraction_non_colorable: f64,
    pub wilson_ci: (f64, f64),
    pub seed: u64,
}

impl ExperimentResult {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.16e},{:.16e},{:.16e},{}",
            self.model.as_str(),
            self.n,
            self.d,
            self.q,
            self.samples,
            self.fraction_non_colorable,
            self.wilson_ci.0,
            self.wilson_ci.1,
            self.seed
        )
    }
}

/// Fraction of sampled simple graphs that are not `q`-colourable, with a
/// 95% Wilson interval. Sample `i` uses stream `i` of `seed`.
pub fn experiment_colorability(
    n: usize,
    d: f64,
    q: u32,
    samples: u64,
    seed: u64,
    model: ModelKind,
) -> Result<ExperimentResult> {
    if n > MAX_SOLVER_VERTICES {
        return Err(Error::TooLarge(n));
    }
    if samples == 0 {
        return Err(Error::InvalidParams("samples must be >= 1".into()));
    }
    let cfg = SamplerConfig {
        n,
        d,
        eps: 0.0,
        seed,
        require_simple: true,
    };
    let non_colorable = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let s = sample_simple_with(&mut rng, &cfg, model, DEFAULT_MAX_ATTEMPTS)?;
            Ok(u64::from(!is_colorable(&s.graph, q)?))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(ExperimentResult {
        model,
        n,
        d,
        q,
        samples,
        non_colorable,
        fraction_non_colorable: non_colorable as f64 / samples as f64,
        wilson_ci: wilson_interval(non_colorable, samples),
        seed,
    })
}
