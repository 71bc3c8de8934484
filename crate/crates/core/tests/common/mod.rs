//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the code under test: sums are compensated, math
//! goes through `std` rather than `libm`, and transport costs come from
//! combinatorial minimization instead of sorted CDFs.
#![allow(dead_code)]

use abstain_core::McSampleSet;
use rand::Rng;

/// Neumaier compensated summation.
pub fn csum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Random probability rows, with occasional exact zeros.
pub fn random_probs<R: Rng>(rng: &mut R, rows: usize, classes: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * classes);
    for _ in 0..rows {
        let mut raw: Vec<f64> = (0..classes)
            .map(|_| {
                if rng.random::<f64>() < 0.1 {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        if raw.iter().all(|&v| v == 0.0) {
            raw[0] = 1.0;
        }
        let total = csum(raw.iter().copied());
        out.extend(raw.iter().map(|v| v / total));
    }
    out
}

pub fn random_set<R: Rng>(rng: &mut R, max_t: usize, max_n: usize, max_c: usize) -> McSampleSet {
    let t = rng.random_range(1..=max_t);
    let n = rng.random_range(1..=max_n);
    let c = rng.random_range(2..=max_c);
    McSampleSet::new(t, n, c, random_probs(rng, t * n, c)).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct OracleMetrics {
    pub predicted_class: usize,
    pub sigma: f64,
    pub entropy: f64,
    pub mi: f64,
    pub feinman: f64,
    pub leibig: f64,
    pub kwon_aleatoric: f64,
    pub kwon_epistemic: f64,
}

fn oracle_entropy(p: &[f64]) -> f64 {
    -csum(p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()))
}

/// Straight-from-the-definition recomputation with naive loops.
pub fn oracle_metrics(set: &McSampleSet, item: usize) -> OracleMetrics {
    let (t, c) = (set.passes(), set.classes());
    let p = |pass: usize, class: usize| set.as_slice()[(pass * set.items() + item) * c + class];
    let tf = t as f64;
    let mean: Vec<f64> = (0..c).map(|k| csum((0..t).map(|s| p(s, k))) / tf).collect();
    let var: Vec<f64> = (0..c)
        .map(|k| csum((0..t).map(|s| (p(s, k) - mean[k]).powi(2))) / tf)
        .collect();
    let mut top = 0;
    for k in 1..c {
        if mean[k] > mean[top] {
            top = k;
        }
    }
    let entropy = oracle_entropy(&mean);
    let pass_entropy = csum((0..t).map(|s| {
        let row: Vec<f64> = (0..c).map(|k| p(s, k)).collect();
        oracle_entropy(&row)
    })) / tf;
    let aleatoric = csum(
        (0..t)
            .flat_map(|s| (0..c).map(move |k| (s, k)))
            .map(|(s, k)| p(s, k) * (1.0 - p(s, k))),
    ) / tf;
    let feinman = csum(var.iter().copied());
    OracleMetrics {
        predicted_class: top,
        sigma: csum(var.iter().map(|v| v.sqrt())) / c as f64,
        entropy,
        mi: (entropy - pass_entropy).max(0.0),
        feinman,
        leibig: var[top].sqrt(),
        kwon_aleatoric: aleatoric,
        kwon_epistemic: feinman,
    }
}

/// `|a - b| <= rel * |b| + abs`.
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * b.abs() + abs
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Minimum-cost perfect matching (Hungarian algorithm, O(n^3)).
pub fn min_assignment(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut matched = vec![0usize; n + 1];
    for row in 1..=n {
        matched[0] = row;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    csum((1..=n).map(|j| cost[matched[j] - 1][j - 1]))
}

fn min_over_permutations(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..cost.len() {
            if !used[j] {
                used[j] = true;
                go(cost, row + 1, used, acc + cost[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
    best
}

/// Exact W1 between two uniform empirical measures by minimizing over couplings.
///
/// Both samples are replicated to a common size `lcm(m, n)`; every coupling of
/// the originals then corresponds to an assignment between the copies, and the
/// optimum is attained at a permutation. Small cases enumerate every
/// permutation, larger ones use the Hungarian algorithm.
pub fn brute_force_w1(a: &[f64], b: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let size = m / gcd(m, n) * n;
    let xs: Vec<f64> = a
        .iter()
        .flat_map(|&x| std::iter::repeat_n(x, size / m))
        .collect();
    let ys: Vec<f64> = b
        .iter()
        .flat_map(|&y| std::iter::repeat_n(y, size / n))
        .collect();
    let cost: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| ys.iter().map(|y| (x - y).abs()).collect())
        .collect();
    let total = if size <= 7 {
        min_over_permutations(&cost)
    } else {
        min_assignment(&cost)
    };
    total / size as f64
}

/// Spearman by the textbook route: average ranks by pairwise counting, then Pearson.
pub fn brute_force_spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let below = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let mx = csum(rx.iter().copied()) / n;
    let my = csum(ry.iter().copied()) / n;
    let sxy = csum(rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = csum(rx.iter().map(|a| (a - mx).powi(2)));
    let syy = csum(ry.iter().map(|b| (b - my).powi(2)));
    sxy / (sxx * syy).sqrt()
}

/// W1 through the quantile functions: `∫_0^1 |F^-1(q) - G^-1(q)| dq`,
/// integrated exactly over the merged breakpoints `i/m` and `j/n`.
pub fn quantile_w1(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (m, n) = (a.len(), b.len());
    let mut cuts: Vec<(usize, usize)> = (0..=m)
        .map(|i| (i * n, m * n))
        .chain((0..=n).map(|j| (j * m, m * n)))
        .collect();
    cuts.sort();
    cuts.dedup();
    let mut parts = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0].0, w[1].0);
        if hi == lo {
            continue;
        }
        // on (lo, hi)/(m n) both quantile functions are constant
        let qa = a[lo / n];
        let qb = b[lo / m];
        parts.push((qa - qb).abs() * (hi - lo) as f64 / (m * n) as f64);
    }
    csum(parts)
}
