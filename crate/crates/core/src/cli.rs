//! Command-line front end: argument parsing, CSV/JSON writers and the
//! matching readers, and the exit-code contract (0 ok, 2 invalid input,
//! 3 search or budget failure, 1 I/O or other failure).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    scaled_gap_binomial, scaled_gap_regular, BINOMIAL_TOLERANCE, REGULAR_TOLERANCE,
};
use crate::binomial::{certify_binomial, find_dstar_upper, sigma_star_curve};
use crate::error::Error;
use crate::graphs::{
    experiment_colorability, sample, ExperimentResult, SamplerConfig, EXPERIMENT_CSV_HEADER,
};
use crate::interpolation::{
    check_pd_identity, zero_temp_gap, GapEntry, XLaw, DEFAULT_EPS_T, DEFAULT_MAX_POINTS,
};
use crate::model::{validate_distribution, AtomDistribution, Certificate, ModelKind, ModelParams};
use crate::potts::{chromatic_number, monochromatic_histogram, Multigraph};
use crate::regular::{
    eval_sigma_regular, find_dq, first_moment_bound, minimize_sigma, second_moment_bound,
};

pub const TABLE_CSV_HEADER: &str = "q,d_smm,d_fm,d_q,alpha_star,sigma_min";
pub const CURVE_CSV_HEADER: &str = "alpha,sigma";
pub const ASYMPTOTICS_CSV_HEADER: &str = "q,c,scaled_gap,tolerance";
pub const ZERO_TEMP_CSV_HEADER: &str = "beta,y,phi,sigma,gap";

#[derive(Debug, Parser)]
#[command(
    name = "colorbound",
    version,
    about = "Lower bounds on the chromatic number of random graphs"
)]
pub struct Cli {
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Emit results and errors as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// d_q with the moment baselines for a range of q.
    TableRegular {
        #[arg(long, default_value = "3:20")]
        q: String,
        /// Largest degree scanned (default: the first-moment bound of q).
        #[arg(long)]
        d_max: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// alpha -> Sigma*_{d,q}(delta_alpha) on a grid.
    CurveBinomial {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value = "0:1:0.001")]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certificate JSON for one (model, q, d) and witness distribution.
    Certify {
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        d: f64,
        /// Witness atom location; repeat for several atoms. Regular model
        /// defaults to the minimiser of Sigma_{d,q}.
        #[arg(long)]
        atom: Vec<f64>,
        /// Weights matching --atom (default: uniform).
        #[arg(long)]
        weight: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// d_q for one q.
    FindDq {
        #[arg(long)]
        q: u32,
        /// Largest degree scanned (default: the first-moment bound of q).
        #[arg(long)]
        d_max: Option<u32>,
    },
    /// Smallest certified binomial degree on a grid, over a family of atoms.
    FindDstar {
        #[arg(long)]
        q: u32,
        /// Degree grid lo:hi:step.
        #[arg(long, default_value = "4:5:0.001")]
        d: String,
        /// Atom locations forming the family.
        #[arg(long, default_value = "0:1:0.05")]
        atoms: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partition function, colouring count and chromatic number of a graph.
    Potts {
        /// Multigraph text file ("n m" then "u v mult" lines).
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        beta: f64,
    },
    /// Draw a random multigraph in the text format.
    Sample {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fraction of sampled simple graphs that are not q-colourable.
    Experiment {
        #[arg(long, value_parser = parse_model, default_value = "binomial")]
        model: ModelKind,
        #[arg(long)]
        n: usize,
        /// One degree, a comma list, or lo:hi:step.
        #[arg(long)]
        d: String,
        #[arg(long)]
        q: u32,
        #[arg(long, default_value_t = 200)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo check of the Poisson-Dirichlet averaging identity.
    VerifyPd {
        #[arg(long)]
        y: f64,
        /// constant:c, uniform:lo:hi or two-point:a:b:p.
        #[arg(long, value_parser = parse_law, default_value = "uniform:1:2")]
        law: XLaw,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_EPS_T)]
        eps_t: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
        max_points: u64,
    },
    /// |phi_{beta,y}(r_alpha) - Sigma_{d,q}(alpha)| on a beta x y grid.
    VerifyZeroTemp {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "5,10,25")]
        beta: String,
        #[arg(long, default_value = "0.1,0.01")]
        y: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// 2q Sigma at the large-q expansion point d = (2q-1) log q - c.
    Asymptotics {
        #[arg(long, value_parser = parse_model, default_value = "regular")]
        model: ModelKind,
        #[arg(long, default_value = "200,500,1000,2000")]
        q: String,
        #[arg(long, default_value = "0,0.5,1,2")]
        c: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SamplerArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Condition on the graph being simple.
    #[arg(long)]
    pub simple: bool,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse::<ModelKind>().map_err(|e| e.to_string())
}

fn parse_law(s: &str) -> Result<XLaw, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = |xs: &[&str]| -> Result<Vec<f64>, String> {
        xs.iter()
            .map(|x| x.parse::<f64>().map_err(|_| format!("not a number: {x:?}")))
            .collect()
    };
    match (parts[0], parts.len()) {
        ("constant", 2) => Ok(XLaw::Constant {
            c: nums(&parts[1..])?[0],
        }),
        ("uniform", 3) => {
            let v = nums(&parts[1..])?;
            Ok(XLaw::Uniform { lo: v[0], hi: v[1] })
        }
        ("two-point", 4) => {
            let v = nums(&parts[1..])?;
            Ok(XLaw::TwoPoint {
                a: v[0],
                b: v[1],
                p: v[2],
            })
        }
        _ => Err(format!(
            "unknown law {s:?}; expected constant:c, uniform:lo:hi or two-point:a:b:p"
        )),
    }
}

/// Failure of a CLI invocation.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_not_found() => 3,
            CliError::Core(e) if e.is_validation() => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io(_) => "Io",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io(m) => m.clone(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `lo:hi[:step]`, a comma list, or a single number.
pub fn parse_real_list(s: &str) -> crate::Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("not a number: {t:?}")))
    };
    if s.contains(':') {
        let parts: Vec<f64> = s.split(':').map(num).collect::<crate::Result<_>>()?;
        let (lo, hi, step) = match parts[..] {
            [lo, hi] => (lo, hi, 1.0),
            [lo, hi, step] => (lo, hi, step),
            _ => {
                return Err(Error::Parse(format!(
                    "range must be lo:hi[:step], got {s:?}"
                )))
            }
        };
        if !(step > 0.0) || hi < lo {
            return Err(Error::Parse(format!(
                "range needs lo <= hi and step > 0, got {s:?}"
            )));
        }
        let steps = ((hi - lo) / step + 1e-9).floor() as u64;
        Ok((0..=steps)
            .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        s.split(',').map(num).collect()
    }
}

/// Integer version of [`parse_real_list`].
pub fn parse_int_list(s: &str) -> crate::Result<Vec<u32>> {
    parse_real_list(s)?
        .into_iter()
        .map(|x| {
            if x.fract() == 0.0 && x >= 0.0 && x <= u32::MAX as f64 {
                Ok(x as u32)
            } else {
                Err(Error::Parse(format!(
                    "expected a non-negative integer, got {x}"
                )))
            }
        })
        .collect()
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str) -> crate::Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: {field:?}")))
}

fn parse_u64(field: &str) -> crate::Result<u64> {
    field
        .parse::<u64>()
        .map_err(|_| Error::Parse(format!("not an integer: {field:?}")))
}

/// Rows of a headed CSV; the header must match exactly.
fn csv_rows<'a>(text: &'a str, header: &str) -> crate::Result<Vec<Vec<&'a str>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == header => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header {header:?}, got {other:?}"
            )))
        }
    }
    let width = header.split(',').count();
    lines
        .map(|l| {
            let fields: Vec<&str> = l.trim().split(',').collect();
            if fields.len() == width {
                Ok(fields)
            } else {
                Err(Error::Parse(format!("expected {width} fields in {l:?}")))
            }
        })
        .collect()
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// One row of the regular-model table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub q: u32,
    pub d_smm: Option<u32>,
    pub d_fm: u32,
    pub d_q: u32,
    pub alpha_star: f64,
    pub sigma_min: f64,
}

impl TableRow {
    /// Scans `3..=d_max`, defaulting to the first-moment bound, beyond
    /// which the functional is negative.
    pub fn compute(q: u32, d_max: Option<u32>) -> crate::Result<Self> {
        let d_fm = first_moment_bound(q)?.degree;
        let scan = find_dq(q, d_max.unwrap_or(d_fm))?;
        let min = scan.minimum_at(scan.d_q).expect("scan covers d_q");
        Ok(Self {
            q,
            d_smm: second_moment_bound(q)?.map(|b| b.degree),
            d_fm,
            d_q: scan.d_q,
            alpha_star: min.alpha_star,
            sigma_min: min.sigma_min,
        })
    }

    pub fn csv_row(&self) -> String {
        let smm = self
            .d_smm
            .map_or_else(|| "-".to_string(), |d| d.to_string());
        format!(
            "{},{},{},{},{},{}",
            self.q,
            smm,
            self.d_fm,
            self.d_q,
            real(self.alpha_star),
            real(self.sigma_min)
        )
    }
}

pub fn table_csv(rows: &[TableRow]) -> String {
    csv(TABLE_CSV_HEADER, rows.iter().map(TableRow::csv_row))
}

pub fn parse_table_csv(text: &str) -> crate::Result<Vec<TableRow>> {
    csv_rows(text, TABLE_CSV_HEADER)?
        .into_iter()
        .map(|f| {
            Ok(TableRow {
                q: parse_u64(f[0])? as u32,
                d_smm: if f[1] == "-" {
                    None
                } else {
                    Some(parse_u64(f[1])? as u32)
                },
                d_fm: parse_u64(f[2])? as u32,
                d_q: parse_u64(f[3])? as u32,
                alpha_star: parse_f64(f[4])?,
                sigma_min: parse_f64(f[5])?,
            })
        })
        .collect()
}

pub fn curve_csv(points: &[(f64, f64)]) -> String {
    csv(
        CURVE_CSV_HEADER,
        points
            .iter()
            .map(|&(a, s)| format!("{},{}", real(a), real(s))),
    )
}

pub fn parse_curve_csv(text: &str) -> crate::Result<Vec<(f64, f64)>> {
    csv_rows(text, CURVE_CSV_HEADER)?
        .into_iter()
        .map(|f| Ok((parse_f64(f[0])?, parse_f64(f[1])?)))
        .collect()
}

pub fn experiment_csv(rows: &[ExperimentResult]) -> String {
    csv(
        EXPERIMENT_CSV_HEADER,
        rows.iter().map(ExperimentResult::csv_row),
    )
}

pub fn parse_experiment_csv(text: &str) -> crate::Result<Vec<ExperimentResult>> {
    csv_rows(text, EXPERIMENT_CSV_HEADER)?
        .into_iter()
        .map(|f| {
            let samples = parse_u64(f[4])?;
            let frac = parse_f64(f[5])?;
            Ok(ExperimentResult {
                model: f[0].parse()?,
                n: parse_u64(f[1])? as usize,
                d: parse_f64(f[2])?,
                q: parse_u64(f[3])? as u32,
                samples,
                non_colorable: (frac * samples as f64).round() as u64,
                fraction_non_colorable: frac,
                wilson_ci: (parse_f64(f[6])?, parse_f64(f[7])?),
                seed: parse_u64(f[8])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsRow {
    pub q: u32,
    pub c: f64,
    pub scaled_gap: f64,
    pub tolerance: f64,
}

pub fn asymptotics_csv(rows: &[AsymptoticsRow]) -> String {
    csv(
        ASYMPTOTICS_CSV_HEADER,
        rows.iter().map(|r| {
            format!(
                "{},{},{},{}",
                r.q,
                real(r.c),
                real(r.scaled_gap),
                real(r.tolerance)
            )
        }),
    )
}

pub fn parse_asymptotics_csv(text: &str) -> crate::Result<Vec<AsymptoticsRow>> {
    csv_rows(text, ASYMPTOTICS_CSV_HEADER)?
        .into_iter()
        .map(|f| {
            Ok(AsymptoticsRow {
                q: parse_u64(f[0])? as u32,
                c: parse_f64(f[1])?,
                scaled_gap: parse_f64(f[2])?,
                tolerance: parse_f64(f[3])?,
            })
        })
        .collect()
}

pub fn zero_temp_csv(rows: &[GapEntry]) -> String {
    csv(
        ZERO_TEMP_CSV_HEADER,
        rows.iter().map(|e| {
            format!(
                "{},{},{},{},{}",
                real(e.beta),
                real(e.y),
                real(e.phi),
                real(e.sigma),
                real(e.gap)
            )
        }),
    )
}

pub fn parse_zero_temp_csv(text: &str) -> crate::Result<Vec<GapEntry>> {
    csv_rows(text, ZERO_TEMP_CSV_HEADER)?
        .into_iter()
        .map(|f| {
            Ok(GapEntry {
                beta: parse_f64(f[0])?,
                y: parse_f64(f[1])?,
                phi: parse_f64(f[2])?,
                sigma: parse_f64(f[3])?,
                gap: parse_f64(f[4])?,
            })
        })
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn emit(out: &Option<PathBuf>, content: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn certify(
    model: ModelKind,
    q: u32,
    d: f64,
    atoms: &[f64],
    weights: &[f64],
) -> CliResult<Certificate> {
    let params = ModelParams::new(q, d, model)?;
    let witness = if atoms.is_empty() {
        match model {
            ModelKind::Regular => AtomDistribution::dirac(minimize_sigma(d as u32, q)?.alpha_star)?,
            ModelKind::Binomial => {
                return Err(Error::InvalidParams(
                    "binomial certification needs at least one --atom".into(),
                )
                .into())
            }
        }
    } else {
        let w: Vec<f64> = if weights.is_empty() {
            vec![1.0 / atoms.len() as f64; atoms.len()]
        } else if weights.len() == atoms.len() {
            weights.to_vec()
        } else {
            return Err(
                Error::InvalidParams("--weight must be given once per --atom".into()).into(),
            );
        };
        let pairs: Vec<(f64, f64)> = atoms.iter().copied().zip(w).collect();
        validate_distribution(&pairs)?
    };
    match model {
        ModelKind::Regular => {
            let alpha = witness.as_dirac().ok_or_else(|| {
                Error::InvalidParams("regular certificates use a single atom".into())
            })?;
            let sigma = eval_sigma_regular(d as u32, q, alpha)?;
            Ok(Certificate::new(params, witness, sigma)?)
        }
        ModelKind::Binomial => certify_binomial(d, q, std::slice::from_ref(&witness))?
            .ok_or_else(|| Error::NotFoundInRange(d, d).into()),
    }
}

#[derive(Serialize)]
struct PottsReport {
    n: usize,
    edges: u64,
    q: u32,
    beta: f64,
    partition: f64,
    colorings: u64,
    chromatic_number: Option<u32>,
}

fn key_values(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::TableRegular { q, d_max, out } => {
            let rows: Vec<TableRow> = parse_int_list(q)?
                .into_iter()
                .map(|q| TableRow::compute(q, *d_max))
                .collect::<crate::Result<_>>()?;
            let text = if cli.json {
                to_json(&rows)
            } else {
                table_csv(&rows)
            };
            emit(out, &text, stdout)
        }
        Command::CurveBinomial { q, d, grid, out } => {
            let grid = parse_real_list(grid)?;
            let curve = sigma_star_curve(*d, *q, &grid)?;
            let text = if cli.json {
                to_json(&curve)
            } else {
                curve_csv(
                    &curve
                        .iter()
                        .map(|p| (p.alpha, p.sigma.value))
                        .collect::<Vec<_>>(),
                )
            };
            emit(out, &text, stdout)
        }
        Command::Certify {
            model,
            q,
            d,
            atom,
            weight,
            out,
        } => {
            let cert = certify(*model, *q, *d, atom, weight)?;
            emit(out, &to_json(&cert), stdout)
        }
        Command::FindDq { q, d_max } => {
            let row = TableRow::compute(*q, *d_max)?;
            let text = if cli.json {
                to_json(&row)
            } else {
                key_values(&[
                    ("q", row.q.to_string()),
                    ("d_q", row.d_q.to_string()),
                    ("alpha_star", real(row.alpha_star)),
                    ("sigma_min", real(row.sigma_min)),
                ])
            };
            emit(&None, &text, stdout)
        }
        Command::FindDstar { q, d, atoms, out } => {
            let parts = parse_real_list(d)?;
            let (lo, hi) = (parts[0], *parts.last().expect("non-empty range"));
            let step = if parts.len() > 1 {
                parts[1] - parts[0]
            } else {
                1.0
            };
            let family: Vec<AtomDistribution> = parse_real_list(atoms)?
                .into_iter()
                .map(AtomDistribution::dirac)
                .collect::<crate::Result<_>>()?;
            let found = find_dstar_upper(*q, &family, lo, hi.max(lo + step), step)?;
            emit(out, &to_json(&found), stdout)
        }
        Command::Potts { graph, q, beta } => {
            let text = std::fs::read_to_string(graph)
                .map_err(|e| CliError::Io(format!("{}: {e}", graph.display())))?;
            let g = Multigraph::parse(&text)?;
            if !(beta.is_finite() && *beta >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "beta must be finite and >= 0, got {beta}"
                ))
                .into());
            }
            let hist = monochromatic_histogram(&g, *q)?;
            let report = PottsReport {
                n: g.n(),
                edges: g.edge_count(),
                q: *q,
                beta: *beta,
                partition: hist.partition(*beta),
                colorings: hist.proper(),
                chromatic_number: chromatic_number(&g).ok(),
            };
            let text = if cli.json {
                to_json(&report)
            } else {
                key_values(&[
                    ("n", report.n.to_string()),
                    ("edges", report.edges.to_string()),
                    ("partition", real(report.partition)),
                    ("colorings", report.colorings.to_string()),
                    (
                        "chromatic_number",
                        report
                            .chromatic_number
                            .map_or("-".into(), |c| c.to_string()),
                    ),
                ])
            };
            emit(&None, &text, stdout)
        }
        Command::Sample { sampler, out } => {
            let cfg = SamplerConfig {
                n: sampler.n,
                d: sampler.d,
                eps: sampler.eps,
                seed: sampler.seed,
                require_simple: sampler.simple,
            };
            let g = sample(&cfg, sampler.model)?;
            let text = if cli.json { to_json(&g) } else { g.to_text() };
            emit(out, &text, stdout)
        }
        Command::Experiment {
            model,
            n,
            d,
            q,
            samples,
            seed,
            out,
        } => {
            let rows: Vec<ExperimentResult> = parse_real_list(d)?
                .into_iter()
                .map(|d| experiment_colorability(*n, d, *q, *samples, *seed, *model))
                .collect::<crate::Result<_>>()?;
            let text = if cli.json {
                to_json(&rows)
            } else {
                experiment_csv(&rows)
            };
            emit(out, &text, stdout)
        }
        Command::VerifyPd {
            y,
            law,
            samples,
            seed,
            eps_t,
            max_points,
        } => {
            let r = check_pd_identity(*y, *law, *samples, *seed, *eps_t, *max_points)?;
            let text = if cli.json {
                to_json(&r)
            } else {
                key_values(&[
                    ("lhs_estimate", real(r.lhs_estimate)),
                    ("rhs_exact", real(r.rhs_exact)),
                    ("stderr", real(r.stderr)),
                    ("z_score", real(r.z_score)),
                    ("mean_points", real(r.mean_points)),
                ])
            };
            emit(&None, &text, stdout)
        }
        Command::VerifyZeroTemp {
            d,
            q,
            alpha,
            beta,
            y,
            out,
        } => {
            let rows = zero_temp_gap(
                *d,
                *q,
                *alpha,
                &parse_real_list(beta)?,
                &parse_real_list(y)?,
            )?;
            let text = if cli.json {
                to_json(&rows)
            } else {
                zero_temp_csv(&rows)
            };
            emit(out, &text, stdout)
        }
        Command::Asymptotics { model, q, c, out } => {
            let cs = parse_real_list(c)?;
            let mut rows = Vec::new();
            for q in parse_int_list(q)? {
                for &c in &cs {
                    let (scaled_gap, tolerance) = match model {
                        ModelKind::Regular => (scaled_gap_regular(q, c)?, REGULAR_TOLERANCE),
                        ModelKind::Binomial => {
                            (scaled_gap_binomial(q, c)?.value, BINOMIAL_TOLERANCE)
                        }
                    };
                    rows.push(AsymptoticsRow {
                        q,
                        c,
                        scaled_gap,
                        tolerance,
                    });
                }
            }
            let text = if cli.json {
                to_json(&rows)
            } else {
                asymptotics_csv(&rows)
            };
            emit(out, &text, stdout)
        }
    }
}

fn report_error(json: bool, kind: &str, message: &str, code: i32, stderr: &mut dyn Write) {
    let _ = if json {
        writeln!(
            stderr,
            "{}",
            serde_json::json!({ "error": kind, "message": message, "exit_code": code })
        )
    } else {
        writeln!(stderr, "error: {message}")
    };
}

/// Runs the CLI on `argv` (including the program name), writing results to
/// `stdout` and diagnostics to `stderr`; returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let json = argv.iter().any(|a| a == "--json");
            let msg = e.render().to_string();
            if json {
                report_error(true, "Usage", msg.trim(), 2, stderr);
            } else {
                let _ = write!(stderr, "{msg}");
            }
            return 2;
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            report_error(
                cli.json,
                "InvalidParams",
                "--threads must be >= 1",
                2,
                stderr,
            );
            return 2;
        }
        // Fails only if a pool already exists (e.g. repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            report_error(cli.json, e.kind(), &e.message(), code, stderr);
            code
        }
    }
}

/// Entry point for the binary.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}
