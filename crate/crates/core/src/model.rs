//! Domain types shared by every evaluator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Regular,
    Binomial,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Regular => "regular",
            Self::Binomial => "binomial",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(Self::Regular),
            "binomial" => Ok(Self::Binomial),
            _ => Err(Error::Parse(format!(
                "unknown model {s:?}; expected regular or binomial"
            ))),
        }
    }
}

/// Colour count, degree and graph model of a threshold computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub q: u32,
    pub d: f64,
    pub kind: ModelKind,
}

impl ModelParams {
    pub fn regular(q: u32, d: u32) -> Result<Self> {
        Self::new(q, d as f64, ModelKind::Regular)
    }

    pub fn binomial(q: u32, d: f64) -> Result<Self> {
        Self::new(q, d, ModelKind::Binomial)
    }

    pub fn new(q: u32, d: f64, kind: ModelKind) -> Result<Self> {
        if q < 3 {
            return Err(Error::InvalidParams(format!("q must be >= 3, got {q}")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParams(format!("d must be positive, got {d}")));
        }
        if kind == ModelKind::Regular && (d.fract() != 0.0 || d < 3.0) {
            return Err(Error::InvalidParams(format!(
                "regular model needs an integer degree >= 3, got {d}"
            )));
        }
        Ok(Self { q, d, kind })
    }

    /// Integer degree for the regular model.
    pub fn degree(&self) -> Option<u32> {
        (self.kind == ModelKind::Regular).then_some(self.d as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Finite-support probability distribution on `[0, 1]` in canonical form:
/// strictly increasing locations, positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDistribution {
    atoms: Vec<Atom>,
}

const SUM_TOLERANCE: f64 = 1e-9;
const CANONICAL_TOLERANCE: f64 = 1e-12;

/// Canonicalises a raw `(location, weight)` list: zero weights dropped,
/// duplicates merged, sorted, and renormalised when the weights are off by
/// at most `1e-9`.
pub fn validate_distribution(raw: &[(f64, f64)]) -> Result<AtomDistribution> {
    let mut pts = Vec::with_capacity(raw.len());
    for &(location, weight) in raw {
        if !location.is_finite() || !(0.0..=1.0).contains(&location) {
            return Err(Error::LocationOutOfRange(location));
        }
        if weight.is_nan() || weight < 0.0 {
            return Err(Error::NegativeWeight { location, weight });
        }
        if weight > 0.0 {
            pts.push((location, weight));
        }
    }
    if pts.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    // Sorting on (location, weight) makes the merged sums independent of the
    // input order.
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut atoms: Vec<Atom> = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let loc = pts[i].0;
        let mut j = i;
        while j < pts.len() && pts[j].0 == loc {
            j += 1;
        }
        let weight = compensated_sum(pts[i..j].iter().map(|p| p.1));
        atoms.push(Atom {
            location: loc,
            weight,
        });
        i = j;
    }
    let total = compensated_sum(atoms.iter().map(|a| a.weight));
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::WeightSumMismatch(total));
    }
    if (total - 1.0).abs() > CANONICAL_TOLERANCE {
        for a in &mut atoms {
            a.weight /= total;
        }
    }
    Ok(AtomDistribution { atoms })
}

impl AtomDistribution {
    /// Point mass at `alpha`.
    pub fn dirac(alpha: f64) -> Result<Self> {
        validate_distribution(&[(alpha, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The location if this is a single atom.
    pub fn as_dirac(&self) -> Option<f64> {
        match self.atoms.as_slice() {
            [a] => Some(a.location),
            _ => None,
        }
    }

    pub fn to_pairs(&self) -> Vec<(f64, f64)> {
        self.atoms.iter().map(|a| (a.location, a.weight)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Truncated,
    MonteCarlo,
}

/// A numeric value together with an error radius and where it came from.
///
/// Non-exact results always carry a strictly positive radius; a computed
/// radius of zero is raised to `f64::MIN_POSITIVE`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    pub error_radius: f64,
    pub provenance: Provenance,
    #[serde(default)]
    pub detail: String,
}

impl EvalResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_radius: 0.0,
            provenance: Provenance::Exact,
            detail: String::new(),
        }
    }

    pub fn truncated(value: f64, error_radius: f64, detail: impl Into<String>) -> Self {
        Self::inexact(value, error_radius, Provenance::Truncated, detail.into())
    }

    pub fn monte_carlo(value: f64, error_radius: f64, detail: impl Into<String>) -> Self {
        Self::inexact(value, error_radius, Provenance::MonteCarlo, detail.into())
    }

    fn inexact(value: f64, error_radius: f64, provenance: Provenance, detail: String) -> Self {
        let error_radius = if error_radius.is_nan() {
            f64::INFINITY
        } else {
            error_radius.max(f64::MIN_POSITIVE)
        };
        Self {
            value,
            error_radius,
            provenance,
            detail,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Upper end of the error interval.
    pub fn upper(&self) -> f64 {
        self.value + self.error_radius
    }

    pub fn lower(&self) -> f64 {
        self.value - self.error_radius
    }
}

/// Witness that `chi(G) > q` w.h.p.: a distribution whose functional value is
/// negative beyond its error radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    params: ModelParams,
    witness: AtomDistribution,
    sigma: EvalResult,
}

impl Certificate {
    pub fn new(params: ModelParams, witness: AtomDistribution, sigma: EvalResult) -> Result<Self> {
        if !(sigma.upper() < 0.0) {
            return Err(Error::NotNegative {
                value: sigma.value,
                radius: sigma.error_radius,
            });
        }
        Ok(Self {
            params,
            witness,
            sigma,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn witness(&self) -> &AtomDistribution {
        &self.witness
    }

    pub fn sigma(&self) -> &EvalResult {
        &self.sigma
    }

    /// Re-validates after deserialisation.
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Certificate = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let pairs = c.witness.to_pairs();
        let witness = validate_distribution(&pairs)?;
        let params = ModelParams::new(c.params.q, c.params.d, c.params.kind)?;
        Certificate::new(params, witness, c.sigma)
    }
}
