use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::{Method, StatsError, TestResult};

/// Series up to this length get exact permutation p-values.
pub const EXACT_PERMUTATION_MAX_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankFlavor {
    SpearmanRho,
    KendallTau,
}

impl RankFlavor {
    pub fn name(self) -> &'static str {
        match self {
            RankFlavor::SpearmanRho => "spearman_rho",
            RankFlavor::KendallTau => "kendall_tau",
        }
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewObservations { needed: 3, got: x.len() });
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(StatsError::NotANumber);
    }
    let constant = |s: &[f64]| s.iter().all(|v| *v == s[0]);
    if constant(x) || constant(y) {
        return Err(StatsError::ConstantSeries);
    }
    Ok(())
}

/// 1-based ranks, ties get the average rank.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Ranks doubled and centred so that the Spearman numerator is an exact
/// integer: `2 r - (n + 1)`.
fn centred_doubled_ranks(x: &[f64]) -> Vec<i64> {
    let n = x.len() as i64;
    ranks(x).into_iter().map(|r| (2.0 * r) as i64 - (n + 1)).collect()
}

fn spearman_numerator(rx: &[i64], ry: &[i64]) -> i64 {
    rx.iter().zip(ry).map(|(a, b)| a * b).sum()
}

fn kendall_s(x: &[f64], y: &[f64]) -> i64 {
    let mut s = 0i64;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let dx = (x[j] - x[i]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let dy = (y[j] - y[i]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            s += dx * dy;
        }
    }
    s
}

/// `Σ t(t-1)`, `Σ t(t-1)(t-2)` and `Σ t(t-1)(2t+5)` over tie groups.
fn tie_sums(x: &[f64]) -> (f64, f64, f64) {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        a += t * (t - 1.0);
        b += t * (t - 1.0) * (t - 2.0);
        c += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j + 1;
    }
    (a, b, c)
}

fn pearson_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

fn t_test_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Visits every permutation of `v` (Heap's algorithm, iterative).
fn for_each_permutation<T: Copy>(v: &mut [T], mut visit: impl FnMut(&[T])) {
    let n = v.len();
    let mut c = vec![0usize; n];
    visit(v);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                v.swap(0, i);
            } else {
                v.swap(c[i], i);
            }
            visit(v);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Rank correlation with a two-sided p-value: exact permutation distribution
/// for `n <= 10`, t approximation (Spearman) or tie-corrected normal
/// approximation (Kendall) beyond.
pub fn rank_correlation(x: &[f64], y: &[f64], flavor: RankFlavor) -> Result<TestResult, StatsError> {
    check_pair(x, y)?;
    let n = x.len();
    let (statistic, p_value, method) = match flavor {
        RankFlavor::SpearmanRho => {
            let rho = pearson_r(&ranks(x), &ranks(y));
            if n <= EXACT_PERMUTATION_MAX_N {
                let rx = centred_doubled_ranks(x);
                let mut ry = centred_doubled_ranks(y);
                let observed = spearman_numerator(&rx, &ry).abs();
                let (mut hit, mut all) = (0u64, 0u64);
                for_each_permutation(&mut ry, |perm| {
                    all += 1;
                    if spearman_numerator(&rx, perm).abs() >= observed {
                        hit += 1;
                    }
                });
                (rho, hit as f64 / all as f64, Method::Exact)
            } else {
                (rho, t_test_p(rho, n), Method::Asymptotic)
            }
        }
        RankFlavor::KendallTau => {
            let s = kendall_s(x, y);
            let nf = n as f64;
            let n0 = nf * (nf - 1.0) / 2.0;
            let (tx, tx3, tx5) = tie_sums(x);
            let (ty, ty3, ty5) = tie_sums(y);
            let tau = (s as f64 / ((n0 - tx / 2.0) * (n0 - ty / 2.0)).sqrt()).clamp(-1.0, 1.0);
            if n <= EXACT_PERMUTATION_MAX_N {
                let observed = s.abs();
                let mut perm_y = y.to_vec();
                let (mut hit, mut all) = (0u64, 0u64);
                for_each_permutation(&mut perm_y, |perm| {
                    all += 1;
                    if kendall_s(x, perm).abs() >= observed {
                        hit += 1;
                    }
                });
                (tau, hit as f64 / all as f64, Method::Exact)
            } else {
                let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tx5 - ty5) / 18.0
                    + (tx3 * ty3) / (9.0 * nf * (nf - 1.0) * (nf - 2.0))
                    + (tx * ty) / (2.0 * nf * (nf - 1.0));
                let z = s as f64 / var.sqrt();
                let normal = Normal::standard();
                ((tau), (2.0 * normal.sf(z.abs())).clamp(0.0, 1.0), Method::Asymptotic)
            }
        }
    };
    Ok(TestResult { statistic, p_value, n, m: n, method, exact_limit: Some(EXACT_PERMUTATION_MAX_N) })
}

/// Pearson's r with a two-sided t-test p-value.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    check_pair(x, y)?;
    let r = pearson_r(x, y);
    Ok(TestResult {
        statistic: r,
        p_value: t_test_p(r, x.len()),
        n: x.len(),
        m: x.len(),
        method: Method::Asymptotic,
        exact_limit: None,
    })
}
