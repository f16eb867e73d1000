use keyseg_core::stats::{kolmogorov_survival, ks2_statistic, ks2_test, rank_correlation, Method, RankFlavor};
use keyseg_core::synth::rng;
use proptest::prelude::*;
use rand::Rng;

/// `n m sup |F_a - F_b|` from the ECDFs evaluated at every pooled point.
fn naive_d(a: &[f64], b: &[f64]) -> u64 {
    let (n, m) = (a.len() as i64, b.len() as i64);
    a.iter()
        .chain(b)
        .map(|&x| {
            let fa = a.iter().filter(|&&v| v <= x).count() as i64;
            let fb = b.iter().filter(|&&v| v <= x).count() as i64;
            (fa * m - fb * n).unsigned_abs()
        })
        .max()
        .unwrap()
}

/// Share of the `C(n+m, n)` ways of splitting the pooled sample whose
/// statistic reaches the observed one.
fn enumerated_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (n, total) = (a.len(), pooled.len());
    let observed = naive_d(a, b);
    let (mut hit, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let (x, y): (Vec<(usize, f64)>, Vec<(usize, f64)>) =
            pooled.iter().copied().enumerate().partition(|(i, _)| mask >> i & 1 == 1);
        let x: Vec<f64> = x.into_iter().map(|p| p.1).collect();
        let y: Vec<f64> = y.into_iter().map(|p| p.1).collect();
        all += 1;
        if naive_d(&x, &y) >= observed {
            hit += 1;
        }
    }
    hit as f64 / all as f64
}

#[test]
fn ks_exact_matches_enumeration() {
    let mut r = rng(7);
    for n in 1..=8 {
        for m in 1..=8 {
            for round in 0..3 {
                // round 0 continuous, later rounds draw from a small grid to force ties
                let draw = |r: &mut rand_chacha::ChaCha8Rng| {
                    if round == 0 { r.random_range(0.0..100.0) } else { r.random_range(0..4) as f64 }
                };
                let a: Vec<f64> = (0..n).map(|_| draw(&mut r)).collect();
                let b: Vec<f64> = (0..m).map(|_| draw(&mut r)).collect();
                let t = ks2_test(&a, &b).unwrap();
                assert_eq!(t.method, Method::Exact);
                assert_eq!(t.statistic, naive_d(&a, &b) as f64 / (n * m) as f64);
                let p = enumerated_p(&a, &b);
                assert!((t.p_value - p).abs() <= 1e-12, "n={n} m={m} round={round}: {} vs {p}", t.p_value);
            }
        }
    }
}

#[test]
fn ks_closed_forms() {
    // full separation: only the two extreme splits reach D = 1
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [6.0, 7.0, 8.0, 9.0, 10.0];
    let t = ks2_test(&a, &b).unwrap();
    assert_eq!(t.statistic, 1.0);
    assert!((t.p_value - 2.0 / 252.0).abs() < 1e-15);
    let t = ks2_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert!((t.p_value - 0.1).abs() < 1e-15);
    // identical samples
    let t = ks2_test(&a, &a).unwrap();
    assert_eq!(t.statistic, 0.0);
    assert_eq!(t.p_value, 1.0);
}

#[test]
fn kolmogorov_tail_values() {
    // Q(λ) = 2 Σ (-1)^(k-1) e^(-2k²λ²), summed to convergence here
    let reference = |l: f64| (1..200).map(|k| {
        let k = k as f64;
        2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * l * l).exp()
    }).sum::<f64>();
    for l in [0.5, 0.8, 1.0, 1.2239, 1.3581, 1.6276, 2.0] {
        assert!((kolmogorov_survival(l) - reference(l)).abs() < 1e-10, "λ={l}");
    }
    assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
    assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
}

#[test]
fn ks_large_samples_use_asymptotics() {
    let mut r = rng(11);
    let a: Vec<f64> = (0..400).map(|_| r.random_range(0.0..1.0)).collect();
    let b: Vec<f64> = (0..300).map(|_| r.random_range(0.0..1.0)).collect();
    let t = ks2_test(&a, &b).unwrap();
    assert_eq!(t.method, Method::Asymptotic);
    let shifted: Vec<f64> = b.iter().map(|x| x + 0.5).collect();
    assert!(ks2_test(&a, &shifted).unwrap().p_value < 1e-10);
}

fn naive_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn naive_spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (naive_ranks(x), naive_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn naive_tau_a(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += ((x[i] - x[j]) * (y[i] - y[j])).signum();
        }
    }
    s / (n * (n - 1) / 2) as f64
}

fn distinct(v: &[f64]) -> bool {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).all(|w| w[0] != w[1])
}

#[test]
fn rank_correlation_closed_forms() {
    let x = [1.0, 2.0, 3.0, 4.0];
    for flavor in [RankFlavor::SpearmanRho, RankFlavor::KendallTau] {
        let t = rank_correlation(&x, &x, flavor).unwrap();
        assert_eq!(t.statistic, 1.0);
        assert!((t.p_value - 2.0 / 24.0).abs() < 1e-15);
        let rev = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(rank_correlation(&x, &rev, flavor).unwrap().statistic, -1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ks_is_symmetric_and_rank_based(
        a in prop::collection::vec(0.0f64..1000.0, 1..40),
        b in prop::collection::vec(0.0f64..1000.0, 1..40),
    ) {
        let ab = ks2_test(&a, &b).unwrap();
        let ba = ks2_test(&b, &a).unwrap();
        prop_assert_eq!(ab.statistic, ba.statistic);
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        // strictly increasing transform keeps the ECDF ordering
        let f = |v: &Vec<f64>| v.iter().map(|x| (x + 1.0).ln() * 3.0 + x.powi(3)).collect::<Vec<_>>();
        let fa = ks2_test(&f(&a), &f(&b)).unwrap();
        prop_assert_eq!(fa.statistic, ab.statistic);
        prop_assert!((fa.p_value - ab.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
        prop_assert_eq!(ks2_statistic(&a, &b).unwrap(), ab.statistic);
    }

    #[test]
    fn rank_correlations_match_reference(
        pairs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 3..40),
        coarse in any::<bool>(),
    ) {
        let round = |v: f64| if coarse { (v / 20.0).floor() } else { v };
        let x: Vec<f64> = pairs.iter().map(|p| round(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| round(p.1)).collect();
        prop_assume!(naive_ranks(&x).iter().any(|r| *r != naive_ranks(&x)[0]));
        prop_assume!(naive_ranks(&y).iter().any(|r| *r != naive_ranks(&y)[0]));
        let rho = rank_correlation(&x, &y, RankFlavor::SpearmanRho).unwrap();
        prop_assert!((rho.statistic - naive_spearman(&x, &y)).abs() < 1e-12);
        let tau = rank_correlation(&x, &y, RankFlavor::KendallTau).unwrap();
        if distinct(&x) && distinct(&y) {
            prop_assert!((tau.statistic - naive_tau_a(&x, &y)).abs() < 1e-12);
        }
        for t in [&rho, &tau] {
            prop_assert!((0.0..=1.0).contains(&t.p_value));
            prop_assert!((-1.0..=1.0).contains(&t.statistic));
        }
        // swapping the variables and monotone transforms change nothing
        let yx = rank_correlation(&y, &x, RankFlavor::SpearmanRho).unwrap();
        prop_assert!((yx.statistic - rho.statistic).abs() < 1e-12);
        prop_assert!((yx.p_value - rho.p_value).abs() < 1e-9);
        let ex: Vec<f64> = x.iter().map(|v| (v / 10.0).exp()).collect();
        let tx = rank_correlation(&ex, &y, RankFlavor::KendallTau).unwrap();
        prop_assert!((tx.statistic - tau.statistic).abs() < 1e-12);
        prop_assert!((tx.p_value - tau.p_value).abs() < 1e-9);
        // reversing one variable flips the sign only
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let flipped = rank_correlation(&x, &neg, RankFlavor::SpearmanRho).unwrap();
        prop_assert!((flipped.statistic + rho.statistic).abs() < 1e-12);
        prop_assert!((flipped.p_value - rho.p_value).abs() < 1e-9);
    }
}
