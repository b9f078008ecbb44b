//! Lower convex envelope of witness rate pairs `(I(X;U), I(Z;U))` and
//! time-sharing between neighbouring witnesses.

use super::aux::Factors;
use super::engine::Candidate;
use crate::info::entropy_of;

const HULL_EPS: f64 = 1e-12;
const PIVOT_EPS: f64 = 1e-11;
const NOISE: f64 = 1e-9;

/// Nonincreasing convex part of the lower envelope, sorted by `a`.
#[derive(Debug, Clone)]
pub(crate) struct Frontier {
    pub hull: Vec<Candidate>,
}

fn cross(o: &Candidate, p: &Candidate, q: &Candidate) -> f64 {
    (p.a - o.a) * (q.b - o.b) - (p.b - o.b) * (q.a - o.a)
}

impl Frontier {
    pub fn new(mut cands: Vec<Candidate>) -> Option<Self> {
        cands.sort_by(|p, q| p.a.total_cmp(&q.a).then(p.b.total_cmp(&q.b)));
        let mut hull: Vec<Candidate> = Vec::new();
        for c in cands {
            if let Some(last) = hull.last() {
                if (c.a - last.a).abs() <= HULL_EPS && c.b >= last.b - HULL_EPS {
                    continue;
                }
            }
            while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &c) <= HULL_EPS {
                hull.pop();
            }
            hull.push(c);
        }
        let best = hull
            .iter()
            .enumerate()
            .min_by(|(_, p), (_, q)| p.b.total_cmp(&q.b))
            .map(|(i, _)| i)?;
        hull.truncate(best + 1);
        // vertices that only differ by optimizer noise
        let mut kept: Vec<Candidate> = Vec::with_capacity(hull.len());
        for c in hull {
            match kept.last_mut() {
                Some(last) if c.b > last.b - NOISE => {
                    if c.a - last.a <= NOISE && c.b < last.b {
                        *last = c;
                    }
                }
                _ => kept.push(c),
            }
        }
        Some(Frontier { hull: kept })
    }

    /// Smallest `I(X;U)` over the witnesses.
    pub fn min_a(&self) -> f64 {
        self.hull[0].a
    }

    /// Witness with `I(X;U) <= r` minimizing `I(Z;U)`, interpolating by
    /// time-sharing inside a hull segment. `None` below the envelope.
    pub fn at(&self, r: f64) -> Option<Candidate> {
        if r < self.min_a() - 1e-9 {
            return None;
        }
        let last = self.hull.last()?;
        if r >= last.a {
            return Some(last.clone());
        }
        let i = self.hull.windows(2).position(|s| r <= s[1].a)?;
        let (p, q) = (&self.hull[i], &self.hull[i + 1]);
        if r <= p.a {
            return Some(p.clone());
        }
        let lambda = (q.a - r) / (q.a - p.a);
        let mixed = reduce(Factors::mix(&p.fac, &q.fac, lambda), p.fac.cells() + 1);
        Some(Candidate::from_factors(mixed))
    }
}

/// Removes atoms while keeping the reconstructed joint and `I(X;U)` fixed
/// and never increasing `I(Z;U)`, until at most `limit` atoms remain.
pub(crate) fn reduce(mut fac: Factors, limit: usize) -> Factors {
    while fac.n_atoms() > limit {
        let n = fac.n_atoms();
        let cells = fac.cells();
        let mut m: Vec<Vec<f64>> = (0..cells)
            .map(|z| (0..n).map(|u| fac.atom_cell(u, z)).collect())
            .collect();
        m.push((0..n).map(|u| entropy_of(&fac.f[0][u])).collect());
        let Some(v) = null_vector(m, n) else { break };
        let gain: f64 = (0..n)
            .map(|u| v[u] * (1..fac.dims.len()).map(|c| entropy_of(&fac.f[c][u])).sum::<f64>())
            .sum();
        let dir = if gain >= 0.0 { 1.0 } else { -1.0 };
        let mut step = f64::INFINITY;
        let mut hit = 0;
        for u in 0..n {
            let d = dir * v[u];
            if d < 0.0 && fac.w[u] / -d < step {
                step = fac.w[u] / -d;
                hit = u;
            }
        }
        if !step.is_finite() {
            break;
        }
        for u in 0..n {
            fac.w[u] = (fac.w[u] + step * dir * v[u]).max(0.0);
        }
        fac.w[hit] = 0.0;
        fac.compact();
    }
    fac
}

/// A nonzero solution of `m v = 0` for an `rows x n` matrix, if one exists.
fn null_vector(mut m: Vec<Vec<f64>>, n: usize) -> Option<Vec<f64>> {
    let rows = m.len();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, m[i][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if val < PIVOT_EPS {
            continue;
        }
        m.swap(r, best);
        let p = m[r][col];
        m[r].iter_mut().for_each(|x| *x /= p);
        for i in 0..rows {
            if i != r && m[i][col] != 0.0 {
                let f = m[i][col];
                for j in 0..n {
                    m[i][j] -= f * m[r][j];
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut v = vec![0.0; n];
    v[free] = 1.0;
    for (i, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[i][free];
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn erasure(p: f64) -> Vec<f64> {
        vec![0.5 * (1.0 - p), 0.5 * p, 0.0, 0.0, 0.5 * p, 0.5 * (1.0 - p)]
    }

    #[test]
    fn hull_interpolates_between_anchors() {
        let q = erasure(0.5);
        let ux = Factors::from_labelling(&[2, 3], &q, |z| z / 3, 1e-12).unwrap();
        let uy = Factors::from_labelling(&[2, 3], &q, |z| z % 3, 1e-12).unwrap();
        let f = Frontier::new(vec![Candidate::from_factors(ux), Candidate::from_factors(uy)]).unwrap();
        assert!(f.at(0.4).is_none());
        let c = f.at(0.75).unwrap();
        assert!((c.a - 0.75).abs() < 1e-12);
        assert!((c.b - 1.25).abs() < 1e-12);
        assert!(c.fac.tv_to(&q) < 1e-12);
        assert!(c.fac.n_atoms() <= 7);
        let end = f.at(2.0).unwrap();
        assert!((end.b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduction_keeps_joint_and_rate() {
        let n = 10;
        let w: Vec<f64> = (0..n).map(|u| 1.0 + u as f64).collect();
        let s: f64 = w.iter().sum();
        let f = vec![
            (0..n).map(|u| { let t = (u as f64 * 0.37).fract(); vec![t, 1.0 - t] }).collect(),
            (0..n).map(|u| { let t = (u as f64 * 0.61 + 0.1).fract(); vec![t, 1.0 - t] }).collect(),
        ];
        let big = Factors { dims: vec![2, 2], w: w.iter().map(|x| x / s).collect(), f };
        let q = big.joint();
        let (a0, b0) = big.rates();
        let small = reduce(big, 5);
        let (a1, b1) = small.rates();
        assert!(small.n_atoms() <= 5);
        assert!((a0 - a1).abs() < 1e-10);
        assert!(b1 <= b0 + 1e-10);
        assert!(small.tv_to(&q) < 1e-10);
    }
}
