//! Auxiliary decompositions: a mixing variable `U` under which every
//! coordinate of the target is conditionally independent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{entropy_of, tv_of};
use crate::prob::{Channel, JointPmf, Pmf};

/// Atom mass below which a decomposition atom is dropped.
pub(crate) const PRUNE_MASS: f64 = 1e-14;

/// Product-form mixture `sum_u w_u prod_c f_c(.|u)` over `k` coordinates.
/// Coordinate 0 is the channel input `X`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factors {
    pub dims: Vec<usize>,
    pub w: Vec<f64>,
    /// `f[c][u]` is a pmf over the alphabet of coordinate `c`.
    pub f: Vec<Vec<Vec<f64>>>,
}

impl Factors {
    pub fn n_atoms(&self) -> usize {
        self.w.len()
    }

    pub fn cells(&self) -> usize {
        self.dims.iter().product()
    }

    /// Value of atom `u`'s product distribution at flat cell `z`.
    pub fn atom_cell(&self, u: usize, mut z: usize) -> f64 {
        let mut p = 1.0;
        for c in (0..self.dims.len()).rev() {
            p *= self.f[c][u][z % self.dims[c]];
            z /= self.dims[c];
        }
        p
    }

    /// Reconstructed joint over the flattened product alphabet.
    pub fn joint(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cells()];
        for u in 0..self.n_atoms() {
            if self.w[u] == 0.0 {
                continue;
            }
            for (z, o) in out.iter_mut().enumerate() {
                *o += self.w[u] * self.atom_cell(u, z);
            }
        }
        out
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dims[0]];
        for u in 0..self.n_atoms() {
            for (o, &p) in out.iter_mut().zip(&self.f[0][u]) {
                *o += self.w[u] * p;
            }
        }
        out
    }

    /// `(I(X;U), I(Z;U))` of the decomposition's own joint.
    pub fn rates(&self) -> (f64, f64) {
        let hx = entropy_of(&self.x_marginal());
        let hz = entropy_of(&self.joint());
        let mut hx_u = 0.0;
        let mut hz_u = 0.0;
        for u in 0..self.n_atoms() {
            let hu0 = entropy_of(&self.f[0][u]);
            hx_u += self.w[u] * hu0;
            hz_u += self.w[u] * (0..self.dims.len()).map(|c| entropy_of(&self.f[c][u])).sum::<f64>();
        }
        ((hx - hx_u).max(0.0), (hz - hz_u).max(0.0))
    }

    /// `H(Y_1..Y_m | U)`: conditional entropy of the non-input coordinates.
    pub fn output_entropy_given_u(&self) -> f64 {
        (0..self.n_atoms())
            .map(|u| self.w[u] * (1..self.dims.len()).map(|c| entropy_of(&self.f[c][u])).sum::<f64>())
            .sum()
    }

    pub fn tv_to(&self, target: &[f64]) -> f64 {
        tv_of(&self.joint(), target)
    }

    /// Drops negligible atoms and merges atoms with identical factors.
    pub fn compact(&mut self) {
        let mut keep_w: Vec<f64> = Vec::new();
        let mut keep_f: Vec<Vec<Vec<f64>>> = vec![Vec::new(); self.dims.len()];
        'atoms: for u in 0..self.n_atoms() {
            if self.w[u] < PRUNE_MASS {
                continue;
            }
            for v in 0..keep_w.len() {
                let same = (0..self.dims.len()).all(|c| {
                    keep_f[c][v]
                        .iter()
                        .zip(&self.f[c][u])
                        .all(|(a, b)| (a - b).abs() < 1e-15)
                });
                if same {
                    keep_w[v] += self.w[u];
                    continue 'atoms;
                }
            }
            keep_w.push(self.w[u]);
            for (c, kf) in keep_f.iter_mut().enumerate() {
                kf.push(self.f[c][u].clone());
            }
        }
        let s: f64 = keep_w.iter().sum();
        keep_w.iter_mut().for_each(|w| *w /= s);
        self.w = keep_w;
        self.f = keep_f;
    }

    /// Time-sharing: disjoint union of atoms with weights `lambda`, `1 - lambda`.
    pub fn mix(a: &Factors, b: &Factors, lambda: f64) -> Factors {
        let mut w: Vec<f64> = a.w.iter().map(|x| x * lambda).collect();
        w.extend(b.w.iter().map(|x| x * (1.0 - lambda)));
        let f = (0..a.dims.len())
            .map(|c| a.f[c].iter().chain(&b.f[c]).cloned().collect())
            .collect();
        let mut out = Factors {
            dims: a.dims.clone(),
            w,
            f,
        };
        out.compact();
        out
    }

    /// Builds the decomposition induced by `U = g(Z)` for a deterministic
    /// labelling `g` of target cells. Returns `None` when conditional
    /// independence given `U` fails beyond `tol` in total variation.
    pub fn from_labelling(dims: &[usize], target: &[f64], label: impl Fn(usize) -> usize, tol: f64) -> Option<Factors> {
        let n_labels = (0..target.len()).filter(|&z| target[z] > 0.0).map(&label).max()? + 1;
        let mut lifted = vec![0.0; target.len() * n_labels];
        for (z, &q) in target.iter().enumerate() {
            if q > 0.0 {
                lifted[z * n_labels + label(z)] = q;
            }
        }
        let fac = Factors::from_lifted(dims, &lifted, n_labels);
        (fac.tv_to(target) <= tol).then_some(fac)
    }

    /// Marginal factors of a lifted joint `P(z, u)` stored as `lifted[z * nu + u]`.
    pub fn from_lifted(dims: &[usize], lifted: &[f64], nu: usize) -> Factors {
        let k = dims.len();
        let cells = lifted.len() / nu;
        let mut w = vec![0.0; nu];
        let mut f: Vec<Vec<Vec<f64>>> = dims.iter().map(|&d| vec![vec![0.0; d]; nu]).collect();
        for z in 0..cells {
            let mut idx = vec![0; k];
            let mut r = z;
            for c in (0..k).rev() {
                idx[c] = r % dims[c];
                r /= dims[c];
            }
            for u in 0..nu {
                let p = lifted[z * nu + u];
                if p == 0.0 {
                    continue;
                }
                w[u] += p;
                for c in 0..k {
                    f[c][u][idx[c]] += p;
                }
            }
        }
        for u in 0..nu {
            if w[u] > 0.0 {
                for fc in f.iter_mut() {
                    fc[u].iter_mut().for_each(|p| *p /= w[u]);
                }
            } else {
                for (c, fc) in f.iter_mut().enumerate() {
                    fc[u] = vec![1.0 / dims[c] as f64; dims[c]];
                }
            }
        }
        let mut out = Factors {
            dims: dims.to_vec(),
            w,
            f,
        };
        out.compact();
        out
    }

    /// Largest per-atom total variation between the lifted conditional
    /// `P(z | u)` (built against `target`) and the product of its marginals.
    pub fn markov_residual(&self, target: &[f64]) -> f64 {
        let q = self.joint();
        let nu = self.n_atoms();
        let mut lifted = vec![0.0; q.len() * nu];
        for z in 0..q.len() {
            if q[z] <= 0.0 || target[z] <= 0.0 {
                continue;
            }
            for u in 0..nu {
                lifted[z * nu + u] = target[z] * self.w[u] * self.atom_cell(u, z) / q[z];
            }
        }
        let mut worst: f64 = 0.0;
        for u in 0..nu {
            let pu: f64 = (0..q.len()).map(|z| lifted[z * nu + u]).sum();
            if pu <= 0.0 {
                continue;
            }
            let cond: Vec<f64> = (0..q.len()).map(|z| lifted[z * nu + u] / pu).collect();
            let mut marg: Vec<Vec<f64>> = self.dims.iter().map(|&d| vec![0.0; d]).collect();
            for (z, &p) in cond.iter().enumerate() {
                let mut r = z;
                for c in (0..self.dims.len()).rev() {
                    marg[c][r % self.dims[c]] += p;
                    r /= self.dims[c];
                }
            }
            let prod: Vec<f64> = (0..q.len())
                .map(|z| {
                    let mut r = z;
                    let mut p = 1.0;
                    for c in (0..self.dims.len()).rev() {
                        p *= marg[c][r % self.dims[c]];
                        r /= self.dims[c];
                    }
                    p
                })
                .collect();
            worst = worst.max(tv_of(&cond, &prod));
        }
        worst
    }
}

/// A decomposition `(p_U, p_{X|U}, p_{Y|U})` realizing `X - U - Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxDecomposition {
    pub p_u: Pmf,
    pub p_x_given_u: Channel,
    pub p_y_given_u: Channel,
}

/// Witness for the broadcast extension: one output factor per receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadcastDecomposition {
    pub p_u: Pmf,
    pub p_x_given_u: Channel,
    pub p_ys_given_u: Vec<Channel>,
}

fn atom_labels(n: usize) -> Vec<String> {
    (0..n).map(|u| format!("u{u}")).collect()
}

fn factor_channel(rows: &[Vec<f64>], output: &[String]) -> Result<Channel> {
    Channel::normalized(atom_labels(rows.len()), output.to_vec(), rows.to_vec())
}

impl AuxDecomposition {
    pub fn new(p_u: Pmf, p_x_given_u: Channel, p_y_given_u: Channel) -> Result<Self> {
        if p_x_given_u.input() != p_u.atoms() || p_y_given_u.input() != p_u.atoms() {
            return Err(Error::AlphabetMismatch(
                "factor channels must be indexed by the auxiliary alphabet".into(),
            ));
        }
        Ok(AuxDecomposition {
            p_u,
            p_x_given_u,
            p_y_given_u,
        })
    }

    pub(crate) fn from_factors(fac: &Factors, x_atoms: &[String], y_atoms: &[String]) -> Result<Self> {
        if fac.dims.len() != 2 {
            return Err(Error::Shape("expected two coordinates".into()));
        }
        Ok(AuxDecomposition {
            p_u: Pmf::normalized(atom_labels(fac.n_atoms()), fac.w.clone())?,
            p_x_given_u: factor_channel(&fac.f[0], x_atoms)?,
            p_y_given_u: factor_channel(&fac.f[1], y_atoms)?,
        })
    }

    pub(crate) fn to_factors(&self) -> Factors {
        Factors {
            dims: vec![self.p_x_given_u.n_outputs(), self.p_y_given_u.n_outputs()],
            w: self.p_u.probs().to_vec(),
            f: vec![
                self.p_x_given_u.rows().to_vec(),
                self.p_y_given_u.rows().to_vec(),
            ],
        }
    }

    pub fn aux_size(&self) -> usize {
        self.p_u.len()
    }

    /// `sum_u p_u p_{x|u} p_{y|u}` over `(X, Y)`.
    pub fn reconstructed_joint(&self) -> Result<JointPmf> {
        JointPmf::normalized(
            vec![
                self.p_x_given_u.output().to_vec(),
                self.p_y_given_u.output().to_vec(),
            ],
            self.to_factors().joint(),
        )
    }

    /// `I(X;U)` in bits.
    pub fn rate_x(&self) -> f64 {
        self.to_factors().rates().0
    }

    /// `I(X,Y;U)` in bits.
    pub fn rate_xy(&self) -> f64 {
        self.to_factors().rates().1
    }

    /// `H(Y|U)` in bits.
    pub fn y_entropy_given_u(&self) -> f64 {
        self.to_factors().output_entropy_given_u()
    }

    /// Total variation between the reconstructed joint and `target`.
    pub fn feasibility_gap(&self, target: &JointPmf) -> Result<f64> {
        let j = self.reconstructed_joint()?;
        if j.dims() != target.dims() {
            return Err(Error::Shape("target shape differs from decomposition".into()));
        }
        Ok(tv_of(j.table(), target.table()))
    }

    /// Largest per-atom TV between the lifted `P(x,y|u)` against `target`
    /// and the product of its marginals.
    pub fn markov_residual(&self, target: &JointPmf) -> f64 {
        self.to_factors().markov_residual(target.table())
    }
}

impl BroadcastDecomposition {
    pub(crate) fn from_factors(fac: &Factors, atoms: &[Vec<String>]) -> Result<Self> {
        Ok(BroadcastDecomposition {
            p_u: Pmf::normalized(atom_labels(fac.n_atoms()), fac.w.clone())?,
            p_x_given_u: factor_channel(&fac.f[0], &atoms[0])?,
            p_ys_given_u: (1..fac.dims.len())
                .map(|c| factor_channel(&fac.f[c], &atoms[c]))
                .collect::<Result<_>>()?,
        })
    }

    pub(crate) fn to_factors(&self) -> Factors {
        let mut dims = vec![self.p_x_given_u.n_outputs()];
        dims.extend(self.p_ys_given_u.iter().map(|c| c.n_outputs()));
        let mut f = vec![self.p_x_given_u.rows().to_vec()];
        f.extend(self.p_ys_given_u.iter().map(|c| c.rows().to_vec()));
        Factors {
            dims,
            w: self.p_u.probs().to_vec(),
            f,
        }
    }

    pub fn rate_x(&self) -> f64 {
        self.to_factors().rates().0
    }

    /// `I(X,Y_1..Y_m;U)` in bits.
    pub fn rate_all(&self) -> f64 {
        self.to_factors().rates().1
    }
}
