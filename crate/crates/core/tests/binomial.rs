use colorbound::binomial::{
    certify_binomial, eval_sigma_star, eval_sigma_star_atom, find_dstar_upper, poisson_window,
    SigmaStarConfig,
};
use colorbound::interpolation::{check_pd_identity, XLaw};
use colorbound::regular::eval_sigma_regular;
use colorbound::{validate_distribution, AtomDistribution, Provenance};

fn ln_choose(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// `ln P(some colour unused)` for `k0` draws with wildcard probability `a0`
/// and `k1` with `a1`, by inclusion-exclusion over the missed colours
/// (small `q` only; the `j = 1` term dominates, so no cancellation).
fn ln_miss_two(q: u32, a0: f64, k0: u64, a1: f64, k1: u64) -> f64 {
    let qf = q as f64;
    let miss: f64 = (1..=q)
        .map(|j| {
            let s = if j % 2 == 1 { 1.0 } else { -1.0 };
            let jf = j as f64;
            s * ln_choose(q as u64, j as u64).exp()
                * (1.0 - (1.0 - a0) * jf / qf).powi(k0 as i32)
                * (1.0 - (1.0 - a1) * jf / qf).powi(k1 as i32)
        })
        .sum();
    miss.ln()
}

/// `Sigma*` of a two-atom law, summing the Poisson degree out to 120 and the
/// binomial split of the neighbours explicitly.
fn sigma_star_two_atoms(d: f64, q: u32, (a0, w0): (f64, f64), (a1, w1): (f64, f64)) -> f64 {
    let mut first = 0.0;
    for k in 1..=120u64 {
        let ln_pk = -d + k as f64 * d.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
        let mut inner = 0.0;
        for c in 0..=k {
            let ln_b = ln_choose(k, c) + c as f64 * w0.ln() + (k - c) as f64 * w1.ln();
            inner += ln_b.exp() * ln_miss_two(q, a0, c, a1, k - c);
        }
        first += ln_pk.exp() * inner;
    }
    let qf = q as f64;
    let edge = |x: f64, y: f64| (1.0 - (1.0 - x) * (1.0 - y) / qf).ln();
    let penalty =
        0.5 * d * (w0 * w0 * edge(a0, a0) + 2.0 * w0 * w1 * edge(a0, a1) + w1 * w1 * edge(a1, a1));
    first - penalty
}

#[test]
fn enumeration_matches_direct_two_atom_sum() {
    for (d, q, p0, p1) in [
        (4.7, 3u32, (0.1, 0.4), (0.6, 0.6)),
        (3.0, 3, (0.0, 0.5), (0.9, 0.5)),
        (8.0, 4, (0.2, 0.3), (0.45, 0.7)),
    ] {
        let p = validate_distribution(&[p0, p1]).unwrap();
        let got = eval_sigma_star(d, q, &p, &SigmaStarConfig::default()).unwrap();
        assert_eq!(got.provenance, Provenance::Truncated);
        let want = sigma_star_two_atoms(d, q, p0, p1);
        assert!(
            (got.value - want).abs() <= got.error_radius + 1e-12,
            "d={d} q={q}: {} vs {want} (radius {:e})",
            got.value,
            got.error_radius
        );
    }
}

#[test]
fn atom_matches_direct_sum_and_monte_carlo() {
    for (d, q, alpha) in [(4.7, 3u32, 0.3), (10.0, 4, 0.2), (2.0, 3, 0.0)] {
        let exact = eval_sigma_star_atom(d, q, alpha).unwrap();
        let want = sigma_star_two_atoms(d, q, (alpha, 0.5), (alpha, 0.5));
        assert!(
            (exact.value - want).abs() <= exact.error_radius + 1e-12,
            "d={d}: {} vs {want}",
            exact.value
        );
        let p = AtomDistribution::dirac(alpha).unwrap();
        let mc = eval_sigma_star(d, q, &p, &SigmaStarConfig::monte_carlo(100_000, 3)).unwrap();
        assert_eq!(mc.provenance, Provenance::MonteCarlo);
        assert!((mc.value - exact.value).abs() <= mc.error_radius + exact.error_radius);
    }
}

#[test]
fn poisson_window_mass_is_accounted_for() {
    for mean in [0.5, 4.7, 30.0, 200.0] {
        let w = poisson_window(mean, 1e-12).unwrap();
        let inside: f64 = w.iter().map(|(_, p)| p).sum();
        assert!((inside + w.tail_mass - 1.0).abs() < 1e-12, "mean={mean}");
        assert!(w.tail_mass <= 1e-12);
        let mean_inside: f64 = w.iter().map(|(k, p)| k as f64 * p).sum();
        assert!((mean_inside + w.tail_bound_contribution - mean).abs() < 1e-9 * mean.max(1.0));
    }
}

#[test]
fn certificates_need_a_negative_upper_end() {
    let family: Vec<AtomDistribution> = (0..=10)
        .map(|i| AtomDistribution::dirac(i as f64 * 0.05).unwrap())
        .collect();
    assert!(certify_binomial(4.0, 3, &family).unwrap().is_none());
    let cert = certify_binomial(5.0, 3, &family)
        .unwrap()
        .expect("certified at d = 5");
    assert!(cert.sigma().upper() < 0.0);
    let found = find_dstar_upper(3, &family, 4.0, 5.0, 0.01).unwrap();
    let a = found.certificate.witness().as_dirac().unwrap();
    let just_below = eval_sigma_star_atom(found.d - 0.01, 3, a).unwrap();
    assert!(just_below.upper() >= 0.0 || found.d - 0.01 < 4.0);
}

#[test]
fn regular_and_binomial_agree_at_alpha_one_limit() {
    // At alpha = 1 every draw is a wildcard: both functionals reduce to
    // 0 - (d/2) * 0 = 0.
    assert!(eval_sigma_regular(10, 3, 1.0).unwrap().value.abs() < 1e-15);
    assert!(eval_sigma_star_atom(4.5, 3, 1.0).unwrap().value.abs() < 1e-12);
}

#[test]
fn pd_identity_holds_for_several_laws() {
    let laws = [
        XLaw::Constant { c: 3.0 },
        XLaw::Uniform { lo: 1.0, hi: 2.0 },
        XLaw::TwoPoint {
            a: 0.5,
            b: 4.0,
            p: 0.3,
        },
    ];
    for (i, law) in laws.into_iter().enumerate() {
        for y in [0.3, 0.5, 0.8] {
            let r = check_pd_identity(y, law, 20_000, 100 + i as u64, 1e-4, 1_000_000).unwrap();
            let rhs = law.moment(y).ln() / y;
            assert!((r.rhs_exact - rhs).abs() < 1e-15);
            assert!(r.z_score.abs() < 4.0, "{law:?} y={y}: z = {}", r.z_score);
        }
    }
}
