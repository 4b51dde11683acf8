//! Rank statistics: Kendall's tau, ordinal ranks, bivariate dominance counts.

use std::cmp::Ordering;

use crate::{Error, Result};

/// Empirical Kendall's tau, always within `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TauEstimate(f64);

impl TauEstimate {
    pub fn new(tau: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&tau) {
            return Err(Error::Domain { what: "kendall tau", value: tau });
        }
        Ok(TauEstimate(tau))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Kendall's tau-a: `(concordant - discordant) / (N (N - 1) / 2)`.
///
/// Pairs tied in either coordinate count as neither concordant nor
/// discordant. Computed in `O(N log N)` by counting merge-sort exchanges
/// (Knight's algorithm), which yields the same count as the pairwise loop.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Result<TauEstimate> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal).then(ys[a].partial_cmp(&ys[b]).unwrap_or(Ordering::Equal))
    });

    let n_pairs = (n * (n - 1) / 2) as i64;
    // ties in x, and joint ties
    let mut tied_x = 0i64;
    let mut tied_xy = 0i64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && xs[idx[j]] == xs[idx[i]] {
            j += 1;
        }
        let run = (j - i) as i64;
        tied_x += run * (run - 1) / 2;
        let mut k = i;
        while k < j {
            let mut m = k + 1;
            while m < j && ys[idx[m]] == ys[idx[k]] {
                m += 1;
            }
            let r = (m - k) as i64;
            tied_xy += r * (r - 1) / 2;
            k = m;
        }
        i = j;
    }

    let mut seq: Vec<f64> = idx.iter().map(|&k| ys[k]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut seq, &mut buf) as i64;

    let mut tied_y = 0i64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && seq[j] == seq[i] {
            j += 1;
        }
        let run = (j - i) as i64;
        tied_y += run * (run - 1) / 2;
        i = j;
    }

    let numerator = n_pairs - tied_x - tied_y + tied_xy - 2 * swaps;
    let tau = (numerator as f64 / n_pairs as f64).clamp(-1.0, 1.0);
    TauEstimate::new(tau)
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    if n <= 16 {
        let mut swaps = 0;
        for i in 1..n {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                swaps += 1;
                j -= 1;
            }
        }
        return swaps;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
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

/// Ordinal ranks `1..=N`; ties are broken by position so the result is
/// always a permutation.
pub fn ordinal_ranks(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut ranks = vec![0; xs.len()];
    for (r, &i) in idx.iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

/// For rank vectors `ru`, `rv` (both permutations of `1..=N`), returns for
/// every point `i` the number of points `j` with `ru[j] <= ru[i]` and
/// `rv[j] <= rv[i]` (including `i` itself).
pub fn dominance_counts(ru: &[usize], rv: &[usize]) -> Vec<usize> {
    let n = ru.len();
    let mut by_u = vec![0usize; n];
    for (i, &r) in ru.iter().enumerate() {
        by_u[r - 1] = i;
    }
    let mut tree = vec![0usize; n + 1];
    let mut out = vec![0usize; n];
    for &i in &by_u {
        let mut k = rv[i];
        while k <= n {
            tree[k] += 1;
            k += k & k.wrapping_neg();
        }
        let mut k = rv[i];
        let mut s = 0;
        while k > 0 {
            s += tree[k];
            k -= k & k.wrapping_neg();
        }
        out[i] = s;
    }
    out
}
