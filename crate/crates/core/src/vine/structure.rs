//! First-tree structure: C-vine roots by maximal tau weight sum and D-vine
//! paths by cheapest insertion.

use rand::seq::SliceRandom;

use crate::numerics::kendall_tau;
use crate::{seed, Result};

/// `|tau|` between every pair of columns.
pub(crate) fn abs_tau_matrix(cols: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = cols.len();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let t = kendall_tau(&cols[i], &cols[j])?.value().abs();
            w[i][j] = t;
            w[j][i] = t;
        }
    }
    Ok(w)
}

/// Index maximizing the row sum of `w` over `candidates`; ties go to the
/// earliest candidate.
pub(crate) fn heaviest_node(w: &[Vec<f64>], candidates: &[usize]) -> usize {
    let mut best = (candidates[0], f64::NEG_INFINITY);
    for &i in candidates {
        let s: f64 = candidates.iter().filter(|&&j| j != i).map(|&j| w[i][j]).sum();
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}

/// Maximum-weight Hamiltonian path by cheapest insertion on the tour with an
/// extra zero-weight node, cut at that node.
pub fn cheapest_insertion_path(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let dummy = n;
    let cost = |a: usize, b: usize| if a == dummy || b == dummy { 0.0 } else { -w[a][b] };

    let mut start = (0, 1);
    for i in 0..n {
        for j in i + 1..n {
            if w[i][j] > w[start.0][start.1] {
                start = (i, j);
            }
        }
    }
    let mut tour = vec![start.0, start.1];
    let mut remaining: Vec<usize> = (0..=n).filter(|&k| k != start.0 && k != start.1).collect();
    while !remaining.is_empty() {
        let mut best = (0, 0, f64::INFINITY);
        for (ri, &k) in remaining.iter().enumerate() {
            for p in 0..tour.len() {
                let (a, b) = (tour[p], tour[(p + 1) % tour.len()]);
                let delta = cost(a, k) + cost(k, b) - cost(a, b);
                if delta < best.2 {
                    best = (ri, p, delta);
                }
            }
        }
        let k = remaining.remove(best.0);
        tour.insert(best.1 + 1, k);
    }
    let cut = tour.iter().position(|&k| k == dummy).expect("dummy in tour");
    tour[cut + 1..].iter().chain(&tour[..cut]).copied().collect()
}

/// Uniform random permutation of `0..n`.
pub fn random_order(n: usize, rng_seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(rng_seed));
    order
}
