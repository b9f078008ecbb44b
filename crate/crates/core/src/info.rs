//! Information measures in bits.
//!
//! Conventions: `0 log 0 = 0`; information densities on zero-mass pairs are
//! `-inf` and carry zero weight in every expectation.

use crate::error::{Error, Result};
use crate::prob::{JointPmf, Pmf};

/// `-sum p log2 p` over a raw slice (need not be normalized).
pub fn entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(p.probs()).max(0.0)
}

/// `I(A;B)` for a row-major `na x nb` table.
pub fn mutual_information_of(table: &[f64], na: usize, nb: usize) -> f64 {
    let (pa, pb) = matrix_marginals(table, na, nb);
    let mut acc = 0.0;
    for a in 0..na {
        for b in 0..nb {
            let p = table[a * nb + b];
            if p > 0.0 {
                acc += p * (p / (pa[a] * pb[b])).log2();
            }
        }
    }
    acc.max(0.0)
}

pub(crate) fn matrix_marginals(table: &[f64], na: usize, nb: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            let p = table[a * nb + b];
            pa[a] += p;
            pb[b] += p;
        }
    }
    (pa, pb)
}

fn require_pair(j: &JointPmf) -> Result<(usize, usize)> {
    match j.dims()[..] {
        [na, nb] => Ok((na, nb)),
        _ => Err(Error::Shape(format!(
            "expected a 2-coordinate joint, got {} coordinates",
            j.n_coords()
        ))),
    }
}

pub fn mutual_information(j: &JointPmf) -> Result<f64> {
    let (na, nb) = require_pair(j)?;
    Ok(mutual_information_of(j.table(), na, nb))
}

/// Conditional entropy `H(B|A)` of a 2-coordinate joint.
pub fn conditional_entropy(j: &JointPmf) -> Result<f64> {
    let (na, nb) = require_pair(j)?;
    let (pa, _) = matrix_marginals(j.table(), na, nb);
    Ok((entropy_of(j.table()) - entropy_of(&pa)).max(0.0))
}

/// Half the L1 distance between two raw vectors of equal length.
pub fn tv_of(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn total_variation(p: &Pmf, q: &Pmf) -> Result<f64> {
    if !p.same_alphabet(q) {
        return Err(Error::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            p.atoms(),
            q.atoms()
        )));
    }
    Ok(tv_of(p.probs(), q.probs()).min(1.0))
}

/// Total variation between two joints over the same alphabets.
pub fn total_variation_joint(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    if p.alphabets() != q.alphabets() {
        return Err(Error::AlphabetMismatch("joint alphabets differ".into()));
    }
    Ok(tv_of(p.table(), q.table()).min(1.0))
}

/// `log2 [ j(u,v) / (j_U(u) j_V(v)) ]`; `-inf` where the joint has no mass.
pub fn information_density(j: &JointPmf, u: usize, v: usize) -> Result<f64> {
    let (nu, nv) = require_pair(j)?;
    if u >= nu || v >= nv {
        return Err(Error::OutOfRange(format!("({u}, {v}) outside {nu}x{nv}")));
    }
    let p = j.table()[u * nv + v];
    if p <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (pu, pv) = matrix_marginals(j.table(), nu, nv);
    Ok((p / (pu[u] * pv[v])).log2())
}

/// Positive-mass cells of a pair joint as `(u, v, joint, density_bits)`.
pub(crate) fn density_cells(table: &[f64], nu: usize, nv: usize) -> Vec<(usize, usize, f64, f64)> {
    let (pu, pv) = matrix_marginals(table, nu, nv);
    let mut out = Vec::new();
    for u in 0..nu {
        for v in 0..nv {
            let p = table[u * nv + v];
            if p > 0.0 {
                out.push((u, v, p, (p / (pu[u] * pv[v])).log2()));
            }
        }
    }
    out
}

/// `log2 sum_i w_i 2^{x_i}` with max-shift; terms with zero weight skipped.
pub(crate) fn log2_sum_exp2(terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let terms: Vec<(f64, f64)> = terms.filter(|(w, _)| *w > 0.0).collect();
    let m = terms
        .iter()
        .map(|&(_, x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = terms.iter().map(|&(w, x)| w * (x - m).exp2()).sum();
    m + s.log2()
}

/// `log2 E_Phi 2^{s i(U;V)}` for real `s`.
pub(crate) fn log2_density_moment(table: &[f64], nu: usize, nv: usize, s: f64) -> f64 {
    let cells = density_cells(table, nu, nv);
    log2_sum_exp2(cells.iter().map(|&(_, _, p, i)| (p, s * i)))
}

/// `2 log2 E_V sqrt( E_{U|V} 2^{s i(U;V)} )` for real `s`.
pub(crate) fn log2_bar_moment(table: &[f64], nu: usize, nv: usize, s: f64) -> f64 {
    let (_, pv) = matrix_marginals(table, nu, nv);
    let cells = density_cells(table, nu, nv);
    // per-v inner log-moments, then outer average of square roots
    let inner: Vec<(f64, f64)> = (0..nv)
        .filter(|&v| pv[v] > 0.0)
        .map(|v| {
            let lm = log2_sum_exp2(
                cells
                    .iter()
                    .filter(|c| c.1 == v)
                    .map(|&(_, _, p, i)| (p / pv[v], s * i)),
            );
            (pv[v], 0.5 * lm)
        })
        .collect();
    2.0 * log2_sum_exp2(inner.into_iter())
}

/// Rényi information of order `alpha >= 1`: the order-alpha divergence
/// between a pair joint and the product of its marginals.
pub fn renyi_information(j: &JointPmf, alpha: f64) -> Result<f64> {
    let (nu, nv) = require_pair(j)?;
    if !(alpha >= 1.0) || alpha.is_nan() {
        return Err(Error::Parameter(format!("alpha = {alpha} < 1")));
    }
    if alpha == 1.0 {
        return Ok(mutual_information_of(j.table(), nu, nv));
    }
    if alpha.is_infinite() {
        return Ok(density_cells(j.table(), nu, nv)
            .iter()
            .map(|c| c.3)
            .fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(log2_density_moment(j.table(), nu, nv, alpha - 1.0) / (alpha - 1.0))
}

/// The modified Rényi information: conditional moment inside a square root,
/// averaged over `V`. Defined for `alpha` in `(0, 2]`; never larger than
/// [`renyi_information`] of the same order on `(1, 2]`.
pub fn renyi_information_bar(j: &JointPmf, alpha: f64) -> Result<f64> {
    let (nu, nv) = require_pair(j)?;
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Parameter(format!("alpha = {alpha} outside (0, 2]")));
    }
    Ok(renyi_bar_of(j.table(), nu, nv, alpha))
}

/// Unrestricted evaluation of the modified Rényi information; the limit at
/// `alpha = 1` is the mutual information.
pub(crate) fn renyi_bar_of(table: &[f64], nu: usize, nv: usize, alpha: f64) -> f64 {
    if alpha == 1.0 {
        return mutual_information_of(table, nu, nv);
    }
    log2_bar_moment(table, nu, nv, alpha - 1.0) / (alpha - 1.0)
}

/// Lower bound on the error sum of any detector given the total variation
/// between the two hypotheses.
pub fn hypothesis_floor(tv: f64) -> f64 {
    1.0 - tv
}

/// Mixture of per-coordinate marginals of an `n`-coordinate joint, weighted by
/// a distribution over the time index.
pub fn random_time_marginal(seq: &JointPmf, t_weights: &Pmf) -> Result<Pmf> {
    let n = seq.n_coords();
    if t_weights.len() != n {
        return Err(Error::Shape(format!(
            "{} time weights for {n} coordinates",
            t_weights.len()
        )));
    }
    let alphabet = &seq.alphabets()[0];
    if seq.alphabets().iter().any(|a| a != alphabet) {
        return Err(Error::AlphabetMismatch(
            "coordinates do not share one alphabet".into(),
        ));
    }
    let mut mix = vec![0.0; alphabet.len()];
    for (t, &w) in t_weights.probs().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let m = seq.marginal(t)?;
        for (acc, &p) in mix.iter_mut().zip(m.probs()) {
            *acc += w * p;
        }
    }
    Pmf::normalized(alphabet.clone(), mix)
}
