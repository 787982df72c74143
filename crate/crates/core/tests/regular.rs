use colorbound::regular::{
    eval_sigma_regular, find_dq, first_moment_bound, minimize_sigma, miss_probability,
};
use colorbound::Provenance;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};

/// Exact rational `(num, den)` arithmetic over big integers.
#[derive(Clone)]
struct Rational(BigInt, BigInt);

impl Rational {
    fn int(n: i64) -> Self {
        Rational(BigInt::from(n), BigInt::one())
    }
    fn frac(n: i64, d: i64) -> Self {
        Rational(BigInt::from(n), BigInt::from(d))
    }
    fn mul(&self, o: &Self) -> Self {
        Rational(&self.0 * &o.0, &self.1 * &o.1)
    }
    fn add(&self, o: &Self) -> Self {
        Rational(&self.0 * &o.1 + &o.0 * &self.1, &self.1 * &o.1)
    }
    fn neg(&self) -> Self {
        Rational(-&self.0, self.1.clone())
    }
    fn to_f64(&self) -> f64 {
        // Scale so both parts fit comfortably before dividing.
        let shift = (self.1.bits() as i64 - 900).max(0) as u64;
        let n = (&self.0 >> shift).to_f64().unwrap();
        let d = (&self.1 >> shift).to_f64().unwrap();
        n / d
    }
}

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(n - i) / BigInt::from(i + 1)
    })
}

/// `P(some colour unused)` by exact inclusion-exclusion over rationals:
/// `1 - sum_j (-1)^j C(q,j) prod_h (1 - (1-alpha_h) j/q)`.
fn exact_miss(q: u32, alphas: &[(i64, i64)]) -> f64 {
    let mut covered = Rational::int(0);
    for j in 0..=q {
        let mut term = Rational(binomial(q, j), BigInt::one());
        for &(a, den) in alphas {
            // 1 - (den - a) j / (den q)
            let f = Rational::frac(den * q as i64 - (den - a) * j as i64, den * q as i64);
            term = term.mul(&f);
        }
        if j % 2 == 1 {
            term = term.neg();
        }
        covered = covered.add(&term);
    }
    Rational::int(1).add(&covered.neg()).to_f64()
}

/// Brute force over every assignment of the draws to {wildcard} or a colour.
fn enumerated_miss(q: u32, alphas: &[f64]) -> f64 {
    let q = q as usize;
    let k = alphas.len();
    let mut total = 0.0;
    let mut state = vec![0usize; k];
    loop {
        let mut p = 1.0;
        let mut seen = vec![false; q];
        for (h, &s) in state.iter().enumerate() {
            if s == q {
                p *= alphas[h];
            } else {
                p *= (1.0 - alphas[h]) / q as f64;
                seen[s] = true;
            }
        }
        if seen.iter().any(|&b| !b) {
            total += p;
        }
        let mut i = 0;
        loop {
            if i == k {
                return total;
            }
            state[i] += 1;
            if state[i] <= q {
                break;
            }
            state[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn miss_probability_matches_enumeration() {
    let alphas = [0.0, 0.13, 0.5, 0.9, 0.37, 0.02, 0.71];
    for q in 2..=4u32 {
        for k in 0..=alphas.len() {
            if (q as usize + 1).pow(k as u32) > 400_000 {
                continue;
            }
            let a = &alphas[..k];
            let got = miss_probability(q, a).unwrap();
            assert_eq!(got.provenance, Provenance::Exact);
            let want = enumerated_miss(q, a);
            assert!(
                (got.value - want).abs() < 1e-13,
                "q={q} k={k}: {} vs {want}",
                got.value
            );
        }
    }
}

#[test]
fn miss_probability_matches_exact_rationals() {
    // Wildcard probabilities n/16 cycled over the draws.
    let pool = [0i64, 3, 8, 1, 13, 5, 0, 11];
    for q in [3u32, 5, 8, 13, 21, 34, 50] {
        for d in [1u32, 4, 8, 12, 30, 60, 120] {
            let raw: Vec<(i64, i64)> = (0..d as usize)
                .map(|h| (pool[h % pool.len()], 16))
                .collect();
            let alphas: Vec<f64> = raw.iter().map(|&(a, den)| a as f64 / den as f64).collect();
            let want = exact_miss(q, &raw);
            let got = miss_probability(q, &alphas).unwrap().value;
            if want == 0.0 || want < 1e-300 {
                assert!(
                    got <= 1e-300_f64.max(f64::MIN_POSITIVE * 2.0),
                    "q={q} d={d}"
                );
                continue;
            }
            let rel = ((got - want) / want).abs();
            assert!(rel < 1e-11, "q={q} d={d}: {got} vs {want} (rel {rel:e})");
        }
    }
}

#[test]
fn sigma_matches_exact_closed_form() {
    // Sigma = ln miss(alpha^d) - (d/2) ln(1 - (1-alpha)^2/q).
    for q in [3u32, 4, 7, 10] {
        for d in [q + 2, 2 * q, 4 * q] {
            for a16 in [0i64, 2, 5, 9] {
                let alpha = a16 as f64 / 16.0;
                let raw = vec![(a16, 16); d as usize];
                let edge = 1.0 - (1.0 - alpha).powi(2) / q as f64;
                let want = exact_miss(q, &raw).ln() - 0.5 * d as f64 * edge.ln();
                let got = eval_sigma_regular(d, q, alpha).unwrap().value;
                assert!(
                    (got - want).abs() < 1e-10 * want.abs().max(1.0),
                    "q={q} d={d} a={alpha}"
                );
            }
        }
    }
}

#[test]
fn minimum_is_global_on_a_fine_grid() {
    for (q, d) in [(3u32, 5u32), (3, 6), (5, 14), (5, 15), (8, 40)] {
        let m = minimize_sigma(d, q).unwrap();
        let grid_min = (0..=2000)
            .map(|i| eval_sigma_regular(d, q, i as f64 / 2000.0).unwrap().value)
            .fold(f64::INFINITY, f64::min);
        assert!(
            m.sigma_min <= grid_min + 1e-12,
            "q={q} d={d}: {} vs grid {grid_min}",
            m.sigma_min
        );
        let at = eval_sigma_regular(d, q, m.alpha_star).unwrap().value;
        assert!((at - m.sigma_min).abs() < 1e-12);
    }
}

#[test]
fn dq_is_the_first_sign_change() {
    for q in [3u32, 6, 9, 12] {
        let fm = first_moment_bound(q).unwrap().degree;
        let scan = find_dq(q, fm).unwrap();
        let below = minimize_sigma(scan.d_q - 1, q).unwrap().sigma_min;
        let at = minimize_sigma(scan.d_q, q).unwrap().sigma_min;
        assert!(below >= 0.0 && at < 0.0, "q={q}: {below} {at}");
    }
}
