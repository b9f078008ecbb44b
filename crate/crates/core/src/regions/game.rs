//! Cooperative play against an adversary with rate-limited coordination.
//!
//! Two players choose actions `X`, `Y`; an adversary who knows the joint
//! strategy picks `z` to minimize the expected payoff. Coordinating with
//! strategy `P` costs its common information. Each search run maximizes
//! `min_z E_P pi - nu I(X,Y;U)` jointly over `P` and a decomposition of `P`,
//! so the resulting `(I(X,Y;U), payoff)` pairs lie inside the achievable set.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aux::Factors;
use super::{wyner_common_information, OptimizerConfig};
use crate::error::{Error, Result};
use crate::prob::JointPmf;
use crate::rng::{stream_rng, Stream};

/// Largest action alphabet accepted for each of `x`, `y`, `z`.
pub const MAX_GAME_ALPHABET: usize = 4;

/// Restarts used when re-evaluating common information of hull strategies.
const REFINE_RESTARTS: usize = 8;
const NU_GRID: [f64; 11] = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 5.0];
const LR: f64 = 0.05;
const TEMP_START: f64 = 0.05;
const TEMP_END: f64 = 1e-3;

/// Payoff table `pi(x, y, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct Payoff {
    dims: [usize; 3],
    values: Vec<f64>,
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for Payoff {
    type Error = Error;
    fn try_from(v: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        Payoff::new(v)
    }
}

impl From<Payoff> for Vec<Vec<Vec<f64>>> {
    fn from(p: Payoff) -> Self {
        let [nx, ny, nz] = p.dims;
        (0..nx)
            .map(|x| (0..ny).map(|y| (0..nz).map(|z| p.get(x, y, z)).collect()).collect())
            .collect()
    }
}

impl Payoff {
    /// Builds from nested `[x][y][z]` tables.
    pub fn new(v: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let nx = v.len();
        let ny = v.first().map_or(0, |r| r.len());
        let nz = v.first().and_then(|r| r.first()).map_or(0, |r| r.len());
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::Shape("payoff table must be nonempty".into()));
        }
        let mut values = Vec::with_capacity(nx * ny * nz);
        for row in &v {
            if row.len() != ny {
                return Err(Error::Shape("ragged payoff table".into()));
            }
            for cell in row {
                if cell.len() != nz {
                    return Err(Error::Shape("ragged payoff table".into()));
                }
                if cell.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Parameter("payoff entries must be finite".into()));
                }
                values.extend_from_slice(cell);
            }
        }
        Ok(Payoff {
            dims: [nx, ny, nz],
            values,
        })
    }

    pub fn from_fn(nx: usize, ny: usize, nz: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        Payoff::new(
            (0..nx)
                .map(|x| (0..ny).map(|y| (0..nz).map(|z| f(x, y, z)).collect()).collect())
                .collect(),
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        let [_, ny, nz] = self.dims;
        self.values[(x * ny + y) * nz + z]
    }

    /// `E_P pi(X, Y, z)` for each adversary action.
    pub fn expected(&self, p: &[f64]) -> Vec<f64> {
        let [nx, ny, nz] = self.dims;
        let mut out = vec![0.0; nz];
        for x in 0..nx {
            for y in 0..ny {
                let pxy = p[x * ny + y];
                if pxy != 0.0 {
                    for (z, o) in out.iter_mut().enumerate() {
                        *o += pxy * self.get(x, y, z);
                    }
                }
            }
        }
        out
    }

    /// Payoff guaranteed by strategy `p` against the best response.
    pub fn guaranteed(&self, p: &[f64]) -> f64 {
        self.expected(p).into_iter().fold(f64::INFINITY, f64::min)
    }

    fn range(&self) -> f64 {
        let mx = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mn = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        (mx - mn).max(1e-12)
    }
}

/// Rate budget and the payoff achievable with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GamePoint {
    pub rate: f64,
    pub payoff: f64,
}

struct Strategy {
    rate: f64,
    payoff: f64,
    joint: Vec<f64>,
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn softmax_back(p: &[f64], g: &[f64]) -> Vec<f64> {
    let pg: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    p.iter().zip(g).map(|(a, b)| a * (b - pg)).collect()
}

/// Gradient ascent on `softmin_z E_P pi - nu I(X,Y;U)` over a mixture with
/// `nu_atoms` components.
fn search(pay: &Payoff, nu_atoms: usize, nu: f64, cfg: &OptimizerConfig, index: u64) -> Strategy {
    let [nx, ny, nz] = pay.dims;
    let mut rng = stream_rng(Stream::Game, cfg.seed, index);
    let n_params = nu_atoms * (1 + nx + ny);
    let mut theta: Vec<f64> = (0..n_params).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut m1 = vec![0.0; n_params];
    let mut m2 = vec![0.0; n_params];
    let lg = std::f64::consts::LN_2;
    let unpack = |theta: &[f64]| {
        let w = softmax(&theta[..nu_atoms]);
        let a: Vec<Vec<f64>> = (0..nu_atoms)
            .map(|u| softmax(&theta[nu_atoms + u * nx..nu_atoms + (u + 1) * nx]))
            .collect();
        let off = nu_atoms * (1 + nx);
        let b: Vec<Vec<f64>> = (0..nu_atoms)
            .map(|u| softmax(&theta[off + u * ny..off + (u + 1) * ny]))
            .collect();
        Factors {
            dims: vec![nx, ny],
            w,
            f: vec![a, b],
        }
    };
    for it in 0..cfg.max_iters {
        let frac = it as f64 / cfg.max_iters.max(1) as f64;
        let temp = TEMP_START * (TEMP_END / TEMP_START).powf(frac);
        let fac = unpack(&theta);
        let p = fac.joint();
        let v = pay.expected(&p);
        let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let lam = softmax(&v.iter().map(|x| -(x - vmin) / temp).collect::<Vec<_>>());
        // d objective / d P(x, y)
        let d: Vec<f64> = (0..nx * ny)
            .map(|c| {
                let g: f64 = (0..nz).map(|z| lam[z] * pay.get(c / ny, c % ny, z)).sum();
                g + nu * (p[c].max(1e-300).log2() + 1.0 / lg)
            })
            .collect();
        let mut grad = vec![0.0; n_params];
        let (a, b) = (&fac.f[0], &fac.f[1]);
        let ent_grad = |q: &[f64]| q.iter().map(|x| -(x.max(1e-300).log2()) - 1.0 / lg).collect::<Vec<f64>>();
        let ent = |q: &[f64]| crate::info::entropy_of(q);
        let mut gw = vec![0.0; nu_atoms];
        for u in 0..nu_atoms {
            let mut s = 0.0;
            let mut ga = vec![0.0; nx];
            let mut gb = vec![0.0; ny];
            for x in 0..nx {
                for y in 0..ny {
                    let dv = d[x * ny + y];
                    s += dv * a[u][x] * b[u][y];
                    ga[x] += dv * b[u][y];
                    gb[y] += dv * a[u][x];
                }
            }
            gw[u] = s + nu * (ent(&a[u]) + ent(&b[u]));
            let ea = ent_grad(&a[u]);
            let eb = ent_grad(&b[u]);
            let ga: Vec<f64> = (0..nx).map(|x| fac.w[u] * (ga[x] + nu * ea[x])).collect();
            let gb: Vec<f64> = (0..ny).map(|y| fac.w[u] * (gb[y] + nu * eb[y])).collect();
            let ta = softmax_back(&a[u], &ga);
            let tb = softmax_back(&b[u], &gb);
            grad[nu_atoms + u * nx..nu_atoms + (u + 1) * nx].copy_from_slice(&ta);
            let off = nu_atoms * (1 + nx);
            grad[off + u * ny..off + (u + 1) * ny].copy_from_slice(&tb);
        }
        let tw = softmax_back(&fac.w, &gw);
        grad[..nu_atoms].copy_from_slice(&tw);

        let bc1 = 1.0 - 0.9f64.powi(it as i32 + 1);
        let bc2 = 1.0 - 0.999f64.powi(it as i32 + 1);
        for i in 0..n_params {
            m1[i] = 0.9 * m1[i] + 0.1 * grad[i];
            m2[i] = 0.999 * m2[i] + 0.001 * grad[i] * grad[i];
            theta[i] += LR * (m1[i] / bc1) / ((m2[i] / bc2).sqrt() + 1e-12);
        }
    }
    let fac = unpack(&theta);
    let joint = fac.joint();
    let rate = if nu_atoms == 1 { 0.0 } else { fac.rates().1 };
    Strategy {
        rate,
        payoff: pay.guaranteed(&joint),
        joint,
    }
}

/// Upper concave, nondecreasing envelope of `(rate, payoff)` points.
fn upper_envelope(mut pts: Vec<(f64, f64, usize)>) -> Vec<(f64, f64, usize)> {
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(q.1.total_cmp(&p.1)));
    let mut hull: Vec<(f64, f64, usize)> = Vec::new();
    for c in pts {
        if let Some(last) = hull.last() {
            if c.1 <= last.1 {
                continue;
            }
        }
        while hull.len() >= 2 {
            let (o, p) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cr = (p.0 - o.0) * (c.1 - o.1) - (p.1 - o.1) * (c.0 - o.0);
            if cr >= -1e-15 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    hull
}

fn evaluate(hull: &[(f64, f64, usize)], r: f64) -> f64 {
    if r <= hull[0].0 {
        return hull[0].1;
    }
    for w in hull.windows(2) {
        if r <= w[1].0 {
            let t = (r - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    hull.last().map_or(f64::NAN, |p| p.1)
}

/// Upper boundary of the convexified set `{(R, Pi) : R >= C(P), Pi <=
/// min_z E_P pi}` evaluated on `rate_grid`.
pub fn game_region(payoff: &Payoff, rate_grid: &[f64], cfg: &OptimizerConfig) -> Result<Vec<GamePoint>> {
    cfg.validate()?;
    let [nx, ny, nz] = payoff.dims;
    if nx > MAX_GAME_ALPHABET || ny > MAX_GAME_ALPHABET || nz > MAX_GAME_ALPHABET {
        return Err(Error::Parameter(format!(
            "strategy sets {nx}x{ny}x{nz} exceed {MAX_GAME_ALPHABET} per axis"
        )));
    }
    if rate_grid.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::Parameter("rate grid entries must be finite and nonnegative".into()));
    }
    let scale = payoff.range();
    let full = nx * ny + 1;
    let mut items: Vec<(usize, f64)> = Vec::new();
    for &nu in &NU_GRID {
        items.extend(std::iter::repeat_n((full, nu * scale), cfg.restarts));
    }
    // product strategies need no coordination at all
    items.extend(std::iter::repeat_n((1, 0.0), cfg.restarts));
    let mut found: Vec<Strategy> = items
        .par_iter()
        .enumerate()
        .map(|(i, &(atoms, nu))| search(payoff, atoms, nu, cfg, i as u64))
        .collect();
    for x in 0..nx {
        for y in 0..ny {
            let mut joint = vec![0.0; nx * ny];
            joint[x * ny + y] = 1.0;
            found.push(Strategy {
                rate: 0.0,
                payoff: payoff.guaranteed(&joint),
                joint,
            });
        }
    }

    let pts: Vec<(f64, f64, usize)> = found.iter().enumerate().map(|(i, s)| (s.rate, s.payoff, i)).collect();
    let refine_cfg = OptimizerConfig {
        restarts: REFINE_RESTARTS,
        ..cfg.clone()
    };
    for &(_, _, i) in &upper_envelope(pts) {
        if found[i].rate > 0.0 {
            let j = JointPmf::from_table(&[nx, ny], found[i].joint.clone())?;
            let (c, _) = wyner_common_information(&j, &refine_cfg)?;
            found[i].rate = found[i].rate.min(c);
        }
    }
    let pts: Vec<(f64, f64, usize)> = found.iter().enumerate().map(|(i, s)| (s.rate, s.payoff, i)).collect();
    let hull = upper_envelope(pts);

    let mut grid = rate_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid
        .into_iter()
        .map(|r| GamePoint {
            rate: r,
            payoff: evaluate(&hull, r),
        })
        .collect())
}
