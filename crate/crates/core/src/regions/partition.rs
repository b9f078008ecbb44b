//! Exhaustive search over deterministic merges `f(Y)` of output symbols.

use crate::error::{Error, Result};
use crate::info::entropy_of;

/// Largest output alphabet accepted by the partition search.
pub const MAX_PARTITION_ALPHABET: usize = 8;

const MARKOV_TOL: f64 = 1e-12;

/// Calls `visit` with every set partition of `0..n` as a restricted growth
/// string (`labels[y]` is the block of `y`).
pub(crate) fn for_each_partition(n: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(i: usize, n: usize, blocks: usize, labels: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if i == n {
            visit(labels);
            return;
        }
        for b in 0..=blocks {
            labels[i] = b;
            rec(i + 1, n, blocks.max(b + 1), labels, visit);
        }
    }
    if n == 0 {
        visit(&[]);
        return;
    }
    let mut labels = vec![0; n];
    rec(0, n, 0, &mut labels, &mut visit);
}

/// Whether `X - f(Y) - Y` holds for a joint `q[x * ny + y]`.
pub(crate) fn merge_is_markov(q: &[f64], nx: usize, ny: usize, labels: &[usize]) -> bool {
    let nb = labels.iter().max().map_or(0, |m| m + 1);
    let mut qb = vec![0.0; nb];
    let mut qxb = vec![0.0; nx * nb];
    let mut qy = vec![0.0; ny];
    for x in 0..nx {
        for y in 0..ny {
            let p = q[x * ny + y];
            qb[labels[y]] += p;
            qxb[x * nb + labels[y]] += p;
            qy[y] += p;
        }
    }
    (0..nx).all(|x| {
        (0..ny).all(|y| {
            let b = labels[y];
            (q[x * ny + y] * qb[b] - qxb[x * nb + b] * qy[y]).abs() <= MARKOV_TOL
        })
    })
}

/// `H(f(Y) | X)` for the merge `labels`.
pub(crate) fn merged_conditional_entropy(q: &[f64], nx: usize, ny: usize, labels: &[usize]) -> f64 {
    let nb = labels.iter().max().map_or(0, |m| m + 1);
    let mut qxb = vec![0.0; nx * nb];
    let mut qx = vec![0.0; nx];
    for x in 0..nx {
        for y in 0..ny {
            qxb[x * nb + labels[y]] += q[x * ny + y];
            qx[x] += q[x * ny + y];
        }
    }
    entropy_of(&qxb) - entropy_of(&qx)
}

/// All Markov merges of the output alphabet.
pub(crate) fn markov_merges(q: &[f64], nx: usize, ny: usize) -> Result<Vec<Vec<usize>>> {
    if ny > MAX_PARTITION_ALPHABET {
        return Err(Error::Parameter(format!(
            "partition search supports at most {MAX_PARTITION_ALPHABET} output symbols, got {ny}"
        )));
    }
    let mut out = Vec::new();
    for_each_partition(ny, |labels| {
        if merge_is_markov(q, nx, ny, labels) {
            out.push(labels.to_vec());
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        for (n, bell) in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (6, 203)] {
            let mut count = 0;
            for_each_partition(n, |_| count += 1);
            assert_eq!(count, bell);
        }
    }

    #[test]
    fn duplicated_output_merges() {
        // Y has two symbols that always carry the same information about X
        let q = [0.25, 0.25, 0.0, 0.0, 0.0, 0.5];
        let merges = markov_merges(&q, 2, 3).unwrap();
        assert!(merges.contains(&vec![0, 0, 1]));
        assert!(merges.contains(&vec![0, 1, 2]));
        assert!(!merges.contains(&vec![0, 1, 1]));
        assert!(merged_conditional_entropy(&q, 2, 3, &[0, 0, 1]).abs() < 1e-12);
    }
}
