//! Penalized descent over `p(u | z)` followed by EM polishing onto the
//! exact product form.

use rand::Rng;
use rayon::prelude::*;

use super::aux::Factors;
use super::OptimizerConfig;
use crate::info::tv_of;
use crate::rng::{stream_rng, Stream};

const LN2: f64 = std::f64::consts::LN_2;
const ADAM_LR: f64 = 0.05;
const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const RHO_START: f64 = 0.25;
const RHO_GROWTH: f64 = 3.0;
const RHO_MAX: f64 = 2000.0;
const CONVERGENCE_WINDOW: usize = 50;
const POLISH_ITERS: usize = 20_000;
const POLISH_TOL: f64 = 1e-11;
const LEAK_FRACTION: f64 = 1e-8;

/// A target joint over `k` coordinates flattened row-major, coordinate 0 first.
#[derive(Debug, Clone)]
pub(crate) struct Target {
    pub dims: Vec<usize>,
    pub table: Vec<f64>,
    cells: Vec<usize>,
    idx: Vec<Vec<usize>>,
}

impl Target {
    pub fn new(dims: Vec<usize>, table: Vec<f64>) -> Self {
        let k = dims.len();
        let cells: Vec<usize> = (0..table.len()).filter(|&z| table[z] > 0.0).collect();
        let idx = cells
            .iter()
            .map(|&z| {
                let mut v = vec![0; k];
                let mut r = z;
                for c in (0..k).rev() {
                    v[c] = r % dims[c];
                    r /= dims[c];
                }
                v
            })
            .collect();
        Target {
            dims,
            table,
            cells,
            idx,
        }
    }

    /// Cardinality bound for the auxiliary variable.
    pub fn aux_size(&self) -> usize {
        self.table.len() + 1
    }
}

/// One accepted optimizer output.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub a: f64,
    pub b: f64,
    pub fac: Factors,
}

impl Candidate {
    pub fn from_factors(fac: Factors) -> Self {
        let (a, b) = fac.rates();
        Candidate { a, b, fac }
    }
}

/// Minimizes `I(Z;U) + mu I(X;U) + rho TC(Z|U)` over softmax logits of `p(u|z)`.
fn descend(t: &Target, mu: f64, nu: usize, cfg: &OptimizerConfig, seed_index: u64) -> Vec<f64> {
    let k = t.dims.len();
    let nc = t.cells.len();
    let mut rng = stream_rng(Stream::Restart, cfg.seed, seed_index);
    let mut theta: Vec<f64> = (0..nc * nu).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut m1 = vec![0.0; nc * nu];
    let mut m2 = vec![0.0; nc * nu];
    let mut w = vec![0.0; nc * nu];
    let mut g = vec![0.0; nc * nu];
    let mut pu = vec![0.0; nu];
    let mut pc: Vec<Vec<f64>> = t.dims.iter().map(|&d| vec![0.0; d * nu]).collect();
    let stage_len = (cfg.max_iters / 12).max(CONVERGENCE_WINDOW);
    let mut history: Vec<f64> = Vec::new();
    let mut final_stage_from = usize::MAX;

    for it in 0..cfg.max_iters {
        let stage = it / stage_len;
        let rho = (RHO_START * RHO_GROWTH.powi(stage as i32)).min(RHO_MAX);
        if rho >= RHO_MAX && final_stage_from == usize::MAX {
            final_stage_from = it;
        }

        for ci in 0..nc {
            let row = &theta[ci * nu..(ci + 1) * nu];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for u in 0..nu {
                let e = (row[u] - mx).exp();
                w[ci * nu + u] = e;
                s += e;
            }
            w[ci * nu..(ci + 1) * nu].iter_mut().for_each(|x| *x /= s);
        }
        pu.iter_mut().for_each(|x| *x = 0.0);
        pc.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x = 0.0));
        for (ci, &z) in t.cells.iter().enumerate() {
            let q = t.table[z];
            for u in 0..nu {
                let p = q * w[ci * nu + u];
                pu[u] += p;
                for c in 0..k {
                    pc[c][t.idx[ci][c] * nu + u] += p;
                }
            }
        }

        let mut obj = 0.0;
        for (ci, &z) in t.cells.iter().enumerate() {
            let q = t.table[z];
            let mut wg = 0.0;
            for u in 0..nu {
                let wu = w[ci * nu + u];
                let lw = wu.max(1e-300).ln();
                let lpu = pu[u].max(1e-300).ln();
                let lpx = pc[0][t.idx[ci][0] * nu + u].max(1e-300).ln();
                let mut tc = q.ln() + lw + (k as f64 - 1.0) * lpu;
                for c in 0..k {
                    tc -= pc[c][t.idx[ci][c] * nu + u].max(1e-300).ln();
                }
                let gu = q * ((lw - lpu) + mu * (lpx - lpu) + rho * tc) / LN2;
                obj += wu * gu;
                g[ci * nu + u] = gu;
                wg += wu * gu;
            }
            for u in 0..nu {
                let i = ci * nu + u;
                g[i] = w[i] * (g[i] - wg);
            }
        }

        let bc1 = 1.0 - ADAM_B1.powi(it as i32 + 1);
        let bc2 = 1.0 - ADAM_B2.powi(it as i32 + 1);
        for i in 0..nc * nu {
            m1[i] = ADAM_B1 * m1[i] + (1.0 - ADAM_B1) * g[i];
            m2[i] = ADAM_B2 * m2[i] + (1.0 - ADAM_B2) * g[i] * g[i];
            theta[i] -= ADAM_LR * (m1[i] / bc1) / ((m2[i] / bc2).sqrt() + 1e-12);
        }

        if it >= final_stage_from {
            history.push(obj);
            let h = history.len();
            if h > CONVERGENCE_WINDOW && (history[h - 1 - CONVERGENCE_WINDOW] - obj).abs() < cfg.tol {
                break;
            }
        }
    }

    let mut lifted = vec![0.0; t.table.len() * nu];
    for (ci, &z) in t.cells.iter().enumerate() {
        for u in 0..nu {
            lifted[z * nu + u] = t.table[z] * w[ci * nu + u];
        }
    }
    lifted
}

/// EM steps on `KL(target || sum_u w_u prod_c f_c)` until the product form
/// reproduces the target.
pub(crate) fn polish(mut fac: Factors, target: &[f64]) -> Factors {
    for _ in 0..POLISH_ITERS {
        let q = fac.joint();
        if tv_of(&q, target) < POLISH_TOL {
            break;
        }
        let nu = fac.n_atoms();
        let mut lifted = vec![0.0; target.len() * nu];
        for z in 0..target.len() {
            if target[z] <= 0.0 || q[z] <= 0.0 {
                continue;
            }
            for u in 0..nu {
                lifted[z * nu + u] = target[z] * fac.w[u] * fac.atom_cell(u, z) / q[z];
            }
        }
        fac = Factors::from_lifted(&fac.dims, &lifted, nu);
    }
    fac
}

/// Drops atoms that put more than `LEAK_FRACTION` of their own mass on
/// cells outside the target support.
fn drop_leaky(fac: &mut Factors, target: &[f64]) {
    for u in 0..fac.n_atoms() {
        let leak: f64 = (0..target.len())
            .filter(|&z| target[z] <= 0.0)
            .map(|z| fac.atom_cell(u, z))
            .sum();
        if leak > LEAK_FRACTION {
            fac.w[u] = 0.0;
        }
    }
    fac.compact();
}

/// Runs every `(mu, restart)` work item and returns witnesses within
/// `feasibility` of the target whose lifted Markov residual is below the
/// same bound, in work-item order. `offset` separates seed counters of
/// successive calls.
pub(crate) fn run(t: &Target, cfg: &OptimizerConfig, mus: &[f64], restarts: usize, offset: u64, feasibility: f64) -> Vec<Candidate> {
    let nu = t.aux_size();
    let items: Vec<(usize, usize)> = (0..mus.len())
        .flat_map(|m| (0..restarts).map(move |r| (m, r)))
        .collect();
    items
        .par_iter()
        .filter_map(|&(m, r)| {
            let index = offset + (m * restarts + r) as u64;
            let lifted = descend(t, mus[m], nu, cfg, index);
            let mut fac = polish(Factors::from_lifted(&t.dims, &lifted, nu), &t.table);
            if fac.markov_residual(&t.table) >= 0.1 * feasibility {
                drop_leaky(&mut fac, &t.table);
                fac = polish(fac, &t.table);
            }
            let ok = fac.n_atoms() > 0
                && fac.tv_to(&t.table) <= feasibility
                && fac.markov_residual(&t.table) < feasibility;
            ok.then(|| Candidate::from_factors(fac))
        })
        .collect()
}

/// Deterministic witnesses `U = X` and `U = (Y_1..Y_m)` when they are valid.
pub(crate) fn anchors(t: &Target, feasibility: f64) -> Vec<Candidate> {
    let x_stride: usize = t.dims[1..].iter().product();
    let mut out = Vec::new();
    if let Some(f) = Factors::from_labelling(&t.dims, &t.table, |z| z / x_stride, feasibility) {
        out.push(Candidate::from_factors(f));
    }
    if let Some(f) = Factors::from_labelling(&t.dims, &t.table, |z| z % x_stride, feasibility) {
        out.push(Candidate::from_factors(f));
    }
    if let Some(f) = Factors::from_labelling(&t.dims, &t.table, |_| 0, feasibility) {
        out.push(Candidate::from_factors(f));
    }
    out
}
