//! Exact small-instance computations on multigraphs: the Potts
//! antiferromagnet partition function, proper colouring counts, chromatic
//! number and q-colourability.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// Largest `q^n` that the exact enumerators will visit.
pub const MAX_STATES: f64 = 1e8;
/// Largest vertex count accepted by the colourability solvers.
pub const MAX_SOLVER_VERTICES: usize = 60;

/// Vertex count plus a multiset of unordered pairs (loops allowed).
///
/// Vertices are `0..n` in the API; the text format is 1-based. Edges are
/// kept as `(u, v, multiplicity)` with `u <= v`, sorted and merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multigraph {
    n: usize,
    edges: Vec<(usize, usize, u64)>,
}

impl Multigraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, u64)>) -> Result<Self> {
        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (u, v, m) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParams(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if m == 0 {
                return Err(Error::InvalidParams(format!(
                    "edge ({u}, {v}) has multiplicity 0"
                )));
            }
            *merged.entry((u.min(v), u.max(v))).or_insert(0) += m;
        }
        Ok(Self {
            n,
            edges: merged.into_iter().map(|((u, v), m)| (u, v, m)).collect(),
        })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
        }
    }

    /// Simple graph from a pair list, each pair with multiplicity one.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(u, v)| (u, v, 1)))
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v, 1)))
            .collect();
        Self { n, edges }
    }

    pub fn path(n: usize) -> Self {
        Self {
            n,
            edges: (1..n).map(|v| (v - 1, v, 1)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Distinct `(u, v, multiplicity)` entries, `u <= v`, sorted.
    pub fn edges(&self) -> &[(usize, usize, u64)] {
        &self.edges
    }

    /// Number of edges counted with multiplicity.
    pub fn edge_count(&self) -> u64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn has_loop(&self) -> bool {
        self.edges.iter().any(|e| e.0 == e.1)
    }

    pub fn is_simple(&self) -> bool {
        self.edges.iter().all(|e| e.0 != e.1 && e.2 == 1)
    }

    /// Degree of every vertex; a loop adds two.
    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n];
        for &(u, v, m) in &self.edges {
            deg[u] += m;
            deg[v] += m;
        }
        deg
    }

    /// Copy with one more copy of `{u, v}`.
    pub fn with_edge(&self, u: usize, v: usize) -> Result<Self> {
        Self::new(self.n, self.edges.iter().copied().chain([(u, v, 1)]))
    }

    /// Text form: `"n m"` then one `"u v mult"` line per distinct pair, 1-based.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for &(u, v, m) in &self.edges {
            let _ = writeln!(s, "{} {} {}", u + 1, v + 1, m);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing \"n m\" header".into()))?;
        let nums = parse_ints(header)?;
        let [n, m] = nums[..] else {
            return Err(Error::Parse(format!(
                "header must be \"n m\", got {header:?}"
            )));
        };
        let mut edges = Vec::with_capacity(m as usize);
        for _ in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {m} edge lines")))?;
            let nums = parse_ints(line)?;
            let (u, v, mult) = match nums[..] {
                [u, v] => (u, v, 1),
                [u, v, mult] => (u, v, mult),
                _ => {
                    return Err(Error::Parse(format!(
                        "edge line must be \"u v mult\", got {line:?}"
                    )))
                }
            };
            if u == 0 || v == 0 || u > n || v > n {
                return Err(Error::Parse(format!(
                    "vertex out of range 1..={n} in {line:?}"
                )));
            }
            if mult == 0 {
                return Err(Error::Parse(format!(
                    "multiplicity must be >= 1 in {line:?}"
                )));
            }
            edges.push((u as usize - 1, v as usize - 1, mult));
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("unexpected trailing line {extra:?}")));
        }
        Self::new(n as usize, edges)
    }

    /// Neighbour bitsets (loops ignored); requires `n <= 64`.
    fn adjacency_bits(&self) -> Vec<u64> {
        let mut adj = vec![0u64; self.n];
        for &(u, v, _) in &self.edges {
            if u != v {
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
            }
        }
        adj
    }
}

fn parse_ints(line: &str) -> Result<Vec<u64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<u64>()
                .map_err(|_| Error::Parse(format!("not a non-negative integer: {t:?}")))
        })
        .collect()
}

/// Number of colourings with each count of monochromatic edges (with
/// multiplicity): `histogram[m]` assignments in `[q]^V` have exactly `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonochromaticHistogram {
    pub q: u32,
    pub n: usize,
    pub counts: Vec<u64>,
}

impl MonochromaticHistogram {
    /// `Z_beta = sum_m counts[m] e^{-beta m}`.
    pub fn partition(&self, beta: f64) -> f64 {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(m, &c)| c as f64 * (-beta * m as f64).exp())
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn proper(&self) -> u64 {
        self.counts.first().copied().unwrap_or(0)
    }
}

fn state_space(g: &Multigraph, q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::ColorCountTooSmall(q));
    }
    let states = (q as f64).powi(g.n as i32);
    if states > MAX_STATES {
        return Err(Error::StateSpaceTooLarge(states));
    }
    Ok(states)
}

/// Enumerates `[q]^V` colexicographically and tallies monochromatic edge
/// counts, updating the count incrementally for each changed coordinate.
/// The top `k` coordinates are fixed per parallel chunk.
pub fn monochromatic_histogram(g: &Multigraph, q: u32) -> Result<MonochromaticHistogram> {
    state_space(g, q)?;
    let n = g.n;
    let loops: u64 = g.edges.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum();
    let max_m = g.edge_count() as usize;
    let mut nbrs: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for &(u, v, m) in &g.edges {
        if u != v {
            nbrs[u].push((v, m));
            nbrs[v].push((u, m));
        }
    }
    let qq = q as usize;
    let threads = rayon::current_num_threads().max(1) * 4;
    let mut fixed = 0usize;
    while fixed < n && qq.pow(fixed as u32) < threads {
        fixed += 1;
    }
    let free = n - fixed;
    let chunks = qq.pow(fixed as u32);

    let counts = (0..chunks)
        .into_par_iter()
        .fold(
            || vec![0u64; max_m + 1],
            |mut hist, chunk| {
                let mut colour = vec![0usize; n];
                let mut c = chunk;
                for slot in colour.iter_mut().skip(free) {
                    *slot = c % qq;
                    c /= qq;
                }
                let mono_at = |colour: &[usize], v: usize, x: usize| -> u64 {
                    nbrs[v]
                        .iter()
                        .filter(|&&(w, _)| colour[w] == x)
                        .map(|&(_, m)| m)
                        .sum()
                };
                let mut mono: u64 = loops
                    + g.edges
                        .iter()
                        .filter(|e| e.0 != e.1 && colour[e.0] == colour[e.1])
                        .map(|e| e.2)
                        .sum::<u64>();
                loop {
                    hist[mono as usize] += 1;
                    let mut i = 0;
                    loop {
                        if i == free {
                            return hist;
                        }
                        let old = colour[i];
                        let new = if old + 1 == qq { 0 } else { old + 1 };
                        mono -= mono_at(&colour, i, old);
                        colour[i] = new;
                        mono += mono_at(&colour, i, new);
                        if new != 0 {
                            break;
                        }
                        i += 1;
                    }
                }
            },
        )
        .reduce(
            || vec![0u64; max_m + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(MonochromaticHistogram { q, n, counts })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    Ok(())
}

/// `Z_beta(G) = sum_sigma prod_{vw in E} (1 - (1 - e^{-beta}) 1{sigma(v) = sigma(w)})`.
pub fn potts_partition(g: &Multigraph, q: u32, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(monochromatic_histogram(g, q)?.partition(beta))
}

/// Number of proper `q`-colourings (zero if `g` has a loop).
pub fn count_colorings(g: &Multigraph, q: u32) -> Result<u64> {
    Ok(monochromatic_histogram(g, q)?.proper())
}

/// `log Z` before and after adding one copy of `edge`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCheck {
    pub log_z_before: f64,
    pub log_z_after: f64,
    pub delta: f64,
}

impl LipschitzCheck {
    /// `-beta <= delta <= 0`, with a little slack for rounding.
    pub fn holds(&self, beta: f64) -> bool {
        let slack = 1e-12 * (1.0 + self.log_z_before.abs());
        self.delta <= slack && self.delta >= -beta - slack
    }
}

pub fn lipschitz_check(
    g: &Multigraph,
    q: u32,
    beta: f64,
    edge: (usize, usize),
) -> Result<LipschitzCheck> {
    check_beta(beta)?;
    let after = g.with_edge(edge.0, edge.1)?;
    let before = monochromatic_histogram(g, q)?.partition(beta).ln();
    let after = monochromatic_histogram(&after, q)?.partition(beta).ln();
    Ok(LipschitzCheck {
        log_z_before: before,
        log_z_after: after,
        delta: after - before,
    })
}

fn check_solver_input(g: &Multigraph) -> Result<()> {
    if g.n > MAX_SOLVER_VERTICES {
        return Err(Error::TooLarge(g.n));
    }
    if let Some(e) = g.edges.iter().find(|e| e.0 == e.1) {
        return Err(Error::HasLoop(e.0));
    }
    Ok(())
}

/// Greedy maximal clique, tried from every start vertex; vertices returned
/// in insertion order.
fn greedy_clique(adj: &[u64]) -> Vec<usize> {
    let n = adj.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(adj[v].count_ones()));
    let mut best = Vec::new();
    for &start in &order {
        let mut clique = vec![start];
        let mut common = adj[start];
        for &v in &order {
            if common & (1 << v) != 0 {
                clique.push(v);
                common &= adj[v];
            }
        }
        if clique.len() > best.len() {
            best = clique;
        }
    }
    best
}

/// Colours used by greedy colouring in largest-degree-first order.
fn greedy_colours(adj: &[u64]) -> u32 {
    let n = adj.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(adj[v].count_ones()));
    let mut colour = vec![u32::MAX; n];
    let mut used = 0;
    for &v in &order {
        let mut taken = 0u64;
        for (w, &cw) in colour.iter().enumerate() {
            if adj[v] & (1 << w) != 0 && cw != u32::MAX {
                taken |= 1 << cw;
            }
        }
        let c = (!taken).trailing_zeros();
        colour[v] = c;
        used = used.max(c + 1);
    }
    used
}

/// Backtracking search: smallest-domain vertex first (ties by degree),
/// forward checking, and at most one fresh colour per branch.
struct Colourer<'a> {
    adj: &'a [u64],
    q: u32,
}

impl Colourer<'_> {
    fn solve(&self, domains: &mut [u64], uncoloured: u64, used: u32) -> bool {
        if uncoloured == 0 {
            return true;
        }
        let mut best = usize::MAX;
        let mut best_key = (u32::MAX, 0u32);
        let mut rest = uncoloured;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let size = domains[v].count_ones();
            if size == 0 {
                return false;
            }
            let key = (size, (self.adj[v] & uncoloured).count_ones());
            if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 > best_key.1) {
                best = v;
                best_key = key;
            }
        }
        let v = best;
        let fresh_limit = if used < self.q {
            (1u64 << (used + 1)) - 1
        } else {
            u64::MAX
        };
        let mut choices = domains[v] & fresh_limit;
        let remaining = uncoloured & !(1 << v);
        while choices != 0 {
            let c = choices.trailing_zeros();
            choices &= choices - 1;
            let mut next = domains.to_vec();
            let mut nb = self.adj[v] & remaining;
            let mut dead = false;
            while nb != 0 {
                let w = nb.trailing_zeros() as usize;
                nb &= nb - 1;
                next[w] &= !(1 << c);
                dead |= next[w] == 0;
            }
            if !dead && self.solve(&mut next, remaining, used.max(c + 1)) {
                return true;
            }
        }
        false
    }
}

fn colourable_bits(adj: &[u64], q: u32) -> bool {
    let n = adj.len();
    if n == 0 {
        return true;
    }
    let q = q.min(n as u32);
    if q == 0 {
        return false;
    }
    let clique = greedy_clique(adj);
    if clique.len() as u32 > q {
        return false;
    }
    let full = if q >= 64 { u64::MAX } else { (1u64 << q) - 1 };
    let mut domains = vec![full; n];
    let mut uncoloured = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    for (c, &v) in clique.iter().enumerate() {
        domains[v] = 1 << c;
        uncoloured &= !(1 << v);
        let mut nb = adj[v];
        while nb != 0 {
            let w = nb.trailing_zeros() as usize;
            nb &= nb - 1;
            domains[w] &= !(1 << c);
        }
    }
    if (0..n).any(|v| uncoloured & (1 << v) != 0 && domains[v] == 0) {
        return false;
    }
    Colourer { adj, q }.solve(&mut domains, uncoloured, clique.len() as u32)
}

/// Whether `g` admits a proper `q`-colouring. Graphs with loops never do.
pub fn is_colorable(g: &Multigraph, q: u32) -> Result<bool> {
    if g.n > MAX_SOLVER_VERTICES {
        return Err(Error::TooLarge(g.n));
    }
    if g.has_loop() {
        return Ok(false);
    }
    Ok(colourable_bits(&g.adjacency_bits(), q))
}

/// Exact chromatic number, searching between the greedy clique size and
/// the greedy colouring size.
pub fn chromatic_number(g: &Multigraph) -> Result<u32> {
    check_solver_input(g)?;
    let adj = g.adjacency_bits();
    if g.n == 0 {
        return Ok(0);
    }
    let lower = greedy_clique(&adj).len() as u32;
    let upper = greedy_colours(&adj);
    for k in lower..upper {
        if colourable_bits(&adj, k) {
            return Ok(k);
        }
    }
    Ok(upper)
}
