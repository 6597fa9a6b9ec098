//! Rank transforms and rank correlations.

use std::cmp::Ordering;

fn cmp(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

fn sorted_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| cmp(x[i], x[j]));
    idx
}

/// `#{k : x_k ≤ x_i}` for every `i` (the largest rank within a tie group).
pub fn max_counts(x: &[f64]) -> Vec<usize> {
    let order = sorted_order(x);
    let mut out = vec![0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        for &i in &order[start..end] {
            out[i] = end;
        }
        start = end;
    }
    out
}

/// Ranks `1..=n` with tied values sharing the average of their positions.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let order = sorted_order(x);
    let mut out = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = avg;
        }
        start = end;
    }
    out
}

/// Sample Pearson correlation. `NaN` when either column is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
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
    sxy / (sxx * syy).sqrt()
}

/// Spearman's rho: Pearson correlation of mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&mid_ranks(x), &mid_ranks(y))
}

/// Pair counts behind Kendall's tau.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// `n(n − 1)/2`
    pub total: u64,
    /// Pairs tied in `x`.
    pub tied_x: u64,
    /// Pairs tied in `y`.
    pub tied_y: u64,
    /// Pairs tied in both.
    pub tied_xy: u64,
    /// Concordant minus discordant pairs.
    pub score: i64,
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Counts discordant pairs by merge sort: `O(n log n)`.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps =
        merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Concordance counts by Knight's algorithm.
pub fn pair_counts(x: &[f64], y: &[f64]) -> PairCounts {
    assert_eq!(x.len(), y.len());
    let n = x.len() as u64;
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| cmp(x[i], x[j]).then(cmp(y[i], y[j])));
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();

    let tied_x = tie_pairs(&xs);
    let mut tied_xy = 0u64;
    let mut run = 1u64;
    for k in 1..xs.len() {
        if xs[k] == xs[k - 1] && ys[k] == ys[k - 1] {
            run += 1;
        } else {
            tied_xy += run * (run - 1) / 2;
            run = 1;
        }
    }
    tied_xy += run * (run - 1) / 2;

    let mut buf = vec![0.0; ys.len()];
    let discordant = merge_count(&mut ys, &mut buf);
    let tied_y = tie_pairs(&ys);
    let total = n * n.saturating_sub(1) / 2;
    let score =
        total as i64 - tied_x as i64 - tied_y as i64 + tied_xy as i64 - 2 * discordant as i64;
    PairCounts {
        total,
        tied_x,
        tied_y,
        tied_xy,
        score,
    }
}

/// Kendall's tau-a: `(concordant − discordant) / C(n, 2)`.
pub fn kendall_tau_a(x: &[f64], y: &[f64]) -> f64 {
    let c = pair_counts(x, y);
    c.score as f64 / c.total as f64
}

/// Kendall's tau-b, which rescales for ties. `NaN` when a column is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let c = pair_counts(x, y);
    let dx = (c.total - c.tied_x) as f64;
    let dy = (c.total - c.tied_y) as f64;
    c.score as f64 / (dx * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(x: &[f64], y: &[f64]) -> (i64, u64, u64) {
        let (mut s, mut tx, mut ty) = (0i64, 0u64, 0u64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let a = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
                let a = if x[i] == x[j] || y[i] == y[j] { 0.0 } else { a };
                s += a as i64;
                tx += (x[i] == x[j]) as u64;
                ty += (y[i] == y[j]) as u64;
            }
        }
        (s, tx, ty)
    }

    #[test]
    fn counts_and_ranks_with_ties() {
        let x = [3.0, 1.0, 3.0, 2.0];
        assert_eq!(max_counts(&x), vec![4, 1, 4, 2]);
        assert_eq!(mid_ranks(&x), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn perfect_orderings() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up = [2.0, 4.0, 6.0, 8.0, 10.0];
        let down = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(kendall_tau_b(&x, &up), 1.0);
        assert_eq!(kendall_tau_a(&x, &down), -1.0);
        assert!((spearman(&x, &down) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn spearman_matches_rank_difference_formula() {
        let x = [0.3, 1.7, -2.0, 5.5, 0.9, 4.1];
        let y = [2.0, 1.0, 0.5, 3.3, -1.0, 7.0];
        let rx = mid_ranks(&x);
        let ry = mid_ranks(&y);
        let n = 6.0;
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
        let classic = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
        assert!((spearman(&x, &y) - classic).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn knight_matches_pair_enumeration(
            pts in prop::collection::vec((0i32..6, 0i32..6), 2..40)
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1 as f64).collect();
            let c = pair_counts(&x, &y);
            let (s, tx, ty) = brute(&x, &y);
            prop_assert_eq!(c.score, s);
            prop_assert_eq!(c.tied_x, tx);
            prop_assert_eq!(c.tied_y, ty);
            // reordering rows does not change anything
            let mut rx = x.clone();
            let mut ry = y.clone();
            rx.reverse();
            ry.reverse();
            prop_assert_eq!(pair_counts(&rx, &ry).score, s);
        }

        #[test]
        fn rank_correlations_ignore_monotone_maps(
            pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..30)
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let ex: Vec<f64> = x.iter().map(|v| (v / 10.0).exp()).collect();
            let cy: Vec<f64> = y.iter().map(|v| v * v * v).collect();
            prop_assert!((kendall_tau_b(&x, &y) - kendall_tau_b(&ex, &cy)).abs() < 1e-12);
            prop_assert!((spearman(&x, &y) - spearman(&ex, &cy)).abs() < 1e-12);
        }
    }
}
