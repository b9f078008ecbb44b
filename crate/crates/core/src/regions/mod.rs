//! Achievable rate regions for channel synthesis and its extensions.
//!
//! Optimizer-backed regions search over decompositions of the target joint
//! into a mixture `sum_u p(u) p(x|u) p(y|u)`. Every reported point carries
//! the witness it was computed from.

mod aux;
mod closed_form;
mod engine;
mod extensions;
mod frontier;
mod game;
mod partition;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::csv_row;
use crate::prob::{Channel, JointPmf, Pmf};

pub use aux::{AuxDecomposition, BroadcastDecomposition};
pub use closed_form::{
    erasure_min_r0, erasure_r_star, erasure_region, reverse_erasure_min_r0, reverse_erasure_region,
    scatter_common_information, scatter_corners, scatter_min_r0, scatter_region,
};
pub use extensions::{
    broadcast_region, limited_memory_region, local_randomness_region, public_channel_region,
    LocalRandomnessRegion,
};
pub use game::{game_region, GamePoint, Payoff, MAX_GAME_ALPHABET};
pub use partition::MAX_PARTITION_ALPHABET;

use aux::Factors;
use engine::{Candidate, Target};
use frontier::Frontier;

/// Largest total variation between a witness's reconstructed joint and the target.
pub const WITNESS_TV: f64 = 1e-6;

/// Settings of the multi-restart scalarized optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub mu_grid: Vec<f64>,
    pub max_iters: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 32,
            mu_grid: vec![0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0],
            max_iters: 3000,
            seed: 0,
            tol: 1e-9,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.mu_grid.is_empty() || self.max_iters == 0 {
            return Err(Error::Parameter(
                "optimizer needs restarts, mu_grid and max_iters to be nonempty".into(),
            ));
        }
        if self.mu_grid.iter().any(|m| !m.is_finite() || *m < 0.0) || !(self.tol > 0.0) {
            return Err(Error::Parameter("mu_grid entries and tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A rate pair (or triple) in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub r: f64,
    pub r0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_l: Option<f64>,
}

impl RatePoint {
    pub fn new(r: f64, r0: f64) -> Self {
        RatePoint { r, r0, r_l: None }
    }
}

/// Decomposition certifying a reported point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Pair(AuxDecomposition),
    Broadcast(BroadcastDecomposition),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMetadata {
    pub target: String,
    pub optimizer: Option<OptimizerConfig>,
    pub restarts: usize,
    /// Witnesses that passed the feasibility check.
    pub accepted_witnesses: usize,
    /// Requested rates below the smallest achievable communication rate.
    pub unattainable: Vec<f64>,
    pub notes: Vec<String>,
}

impl RegionMetadata {
    fn closed_form(target: String) -> Self {
        RegionMetadata {
            target,
            optimizer: None,
            restarts: 0,
            accepted_witnesses: 0,
            unattainable: Vec::new(),
            notes: vec!["closed form".into()],
        }
    }

    fn optimized(target: String, cfg: &OptimizerConfig, accepted: usize) -> Self {
        RegionMetadata {
            target,
            optimizer: Some(cfg.clone()),
            restarts: cfg.restarts,
            accepted_witnesses: accepted,
            unattainable: Vec::new(),
            notes: vec![
                "frontier traced by a mu-grid scalarization with time-sharing; \
                 non-exposed points of a non-convex frontier may be missed"
                    .into(),
            ],
        }
    }
}

/// Pareto frontier of a rate region, sorted by increasing `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub points: Vec<RatePoint>,
    /// Parallel to `points`; `None` for closed-form points.
    pub witnesses: Vec<Option<Witness>>,
    pub metadata: RegionMetadata,
}

impl RegionBoundary {
    /// CSV with header `R,R0` or `R,R0,RL`.
    pub fn to_csv(&self) -> String {
        let with_rl = self.points.iter().any(|p| p.r_l.is_some());
        let mut out = String::from(if with_rl { "R,R0,RL\n" } else { "R,R0\n" });
        for p in &self.points {
            let mut row = vec![p.r, p.r0];
            if with_rl {
                row.push(p.r_l.unwrap_or(f64::NAN));
            }
            out.push_str(&csv_row(&row));
            out.push('\n');
        }
        out
    }

    /// Witness decompositions as a JSON array (closed-form points give `null`).
    pub fn witnesses_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.witnesses).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Checks sorting, monotonicity and nonnegativity.
    pub fn check_invariants(&self) -> Result<()> {
        for p in &self.points {
            if p.r < 0.0 || p.r0 < 0.0 || p.r_l.is_some_and(|x| x < 0.0) {
                return Err(Error::Invariant(format!("negative rate in {p:?}")));
            }
        }
        for w in self.points.windows(2) {
            if w[1].r < w[0].r || w[1].r0 > w[0].r0 + 1e-9 {
                return Err(Error::Invariant(format!(
                    "boundary not monotone between {:?} and {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    /// Piecewise-linear `R0` at rate `r` through the listed points; `None`
    /// left of the first point, `0` or the last value to its right.
    pub fn interpolate_r0(&self, r: f64) -> Option<f64> {
        let first = self.points.first()?;
        if r < first.r - 1e-12 {
            return None;
        }
        for w in self.points.windows(2) {
            if r <= w[1].r {
                let t = if w[1].r > w[0].r { (r - w[0].r) / (w[1].r - w[0].r) } else { 1.0 };
                return Some(w[0].r0 + t.clamp(0.0, 1.0) * (w[1].r0 - w[0].r0));
            }
        }
        self.points.last().map(|p| p.r0)
    }
}

/// Target joint with zero-mass inputs removed.
fn channel_target(q_x: &Pmf, q_ygx: &Channel) -> Result<(Target, Vec<Vec<String>>)> {
    let joint = q_x.through(q_ygx)?;
    let keep = q_x.support();
    let nx = keep.len();
    let ny = q_ygx.n_outputs();
    let mut table = Vec::with_capacity(nx * ny);
    for &x in &keep {
        table.extend_from_slice(&joint.table()[x * ny..(x + 1) * ny]);
    }
    let labels = vec![
        keep.iter().map(|&x| q_x.atoms()[x].clone()).collect(),
        q_ygx.output().to_vec(),
    ];
    Ok((Target::new(vec![nx, ny], table), labels))
}

/// Rounds of slope refinement after the initial mu-grid.
const REFINE_ROUNDS: usize = 6;
/// Hull segments shorter than this in `I(X;U)` are not refined.
const REFINE_MIN_WIDTH: f64 = 1e-3;
/// A refinement witness must undercut the segment's supporting line by this much.
const REFINE_GAIN: f64 = 1e-7;

/// Accepted witnesses for a target: deterministic anchors, output merges
/// (two coordinates only) and optimizer restarts over the mu-grid. With
/// `refine`, each hull segment's slope is then tried as a further `mu` until
/// no segment improves.
fn solve(t: &Target, cfg: &OptimizerConfig, refine: bool) -> Result<Vec<Candidate>> {
    cfg.validate()?;
    let mut cands = engine::anchors(t, WITNESS_TV);
    if t.dims.len() == 2 {
        let (nx, ny) = (t.dims[0], t.dims[1]);
        if ny <= MAX_PARTITION_ALPHABET {
            for labels in partition::markov_merges(&t.table, nx, ny)? {
                if let Some(f) = Factors::from_labelling(&t.dims, &t.table, |z| labels[z % ny], WITNESS_TV) {
                    cands.push(Candidate::from_factors(f));
                }
            }
        }
    }
    cands.extend(engine::run(t, cfg, &cfg.mu_grid, cfg.restarts, 0, WITNESS_TV));
    if !refine {
        return Ok(cands);
    }
    let restarts = (cfg.restarts / 4).max(2);
    let mut tried: Vec<f64> = cfg.mu_grid.clone();
    for round in 0..REFINE_ROUNDS {
        let Some(hull) = Frontier::new(cands.clone()) else { break };
        let mut segs: Vec<(f64, f64)> = Vec::new();
        for w in hull.hull.windows(2) {
            if w[1].a - w[0].a < REFINE_MIN_WIDTH {
                continue;
            }
            let mu = (w[0].b - w[1].b) / (w[1].a - w[0].a);
            if tried.iter().any(|&m| (m - mu).abs() <= 1e-6 * (1.0 + mu)) {
                continue;
            }
            segs.push((mu, w[0].b + mu * w[0].a));
        }
        if segs.is_empty() {
            break;
        }
        let mus: Vec<f64> = segs.iter().map(|s| s.0).collect();
        tried.extend_from_slice(&mus);
        let offset = ((round + 1) as u64) << 32;
        let found = engine::run(t, cfg, &mus, restarts, offset, WITNESS_TV);
        let improved = found
            .iter()
            .any(|c| segs.iter().any(|&(mu, line)| c.b + mu * c.a < line - REFINE_GAIN));
        cands.extend(found);
        if !improved {
            break;
        }
    }
    Ok(cands)
}

fn to_witness(fac: &Factors, labels: &[Vec<String>]) -> Result<Witness> {
    if fac.dims.len() == 2 {
        Ok(Witness::Pair(AuxDecomposition::from_factors(fac, &labels[0], &labels[1])?))
    } else {
        Ok(Witness::Broadcast(BroadcastDecomposition::from_factors(fac, labels)?))
    }
}

/// Evaluates `R0(R) = max(b_scale * I(Z;U) - R, 0)` along a sorted grid.
fn grid_boundary(
    frontier: &Frontier,
    r_grid: &[f64],
    b_scale: f64,
    labels: &[Vec<String>],
    mut meta: RegionMetadata,
) -> Result<(RegionBoundary, Vec<Candidate>)> {
    let mut grid: Vec<f64> = r_grid.to_vec();
    if grid.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::Parameter("rate grid entries must be finite and nonnegative".into()));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut points = Vec::new();
    let mut witnesses = Vec::new();
    let mut used = Vec::new();
    for r in grid {
        match frontier.at(r) {
            None => meta.unattainable.push(r),
            Some(c) => {
                points.push(RatePoint::new(r, (b_scale * c.b - r).max(0.0)));
                witnesses.push(Some(to_witness(&c.fac, labels)?));
                used.push(c);
            }
        }
    }
    let boundary = RegionBoundary {
        points,
        witnesses,
        metadata: meta,
    };
    boundary.check_invariants()?;
    Ok((boundary, used))
}

fn describe(dims: &[usize]) -> String {
    format!(
        "joint over {} alphabet",
        dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
    )
}

/// For each `R` in `r_grid`, the smallest `R0` with `R >= I(X;U)` and
/// `R0 + R >= I(X,Y;U)` over the witnesses found.
pub fn synthesis_region(q_x: &Pmf, q_ygx: &Channel, r_grid: &[f64], cfg: &OptimizerConfig) -> Result<RegionBoundary> {
    let (t, labels) = channel_target(q_x, q_ygx)?;
    let cands = solve(&t, cfg, true)?;
    let meta = RegionMetadata::optimized(describe(&t.dims), cfg, cands.len());
    let frontier = Frontier::new(cands).ok_or_else(|| Error::Infeasible("no feasible witness".into()))?;
    Ok(grid_boundary(&frontier, r_grid, 1.0, &labels, meta)?.0)
}

fn require_pair(q_xy: &JointPmf) -> Result<(usize, usize)> {
    match q_xy.dims()[..] {
        [a, b] => Ok((a, b)),
        _ => Err(Error::Shape(format!("expected a 2-coordinate joint, got {}", q_xy.n_coords()))),
    }
}

/// Smallest `I(X,Y;U)` over the witnesses found, with the minimizing witness.
pub fn wyner_common_information(q_xy: &JointPmf, cfg: &OptimizerConfig) -> Result<(f64, AuxDecomposition)> {
    let (nx, ny) = require_pair(q_xy)?;
    let t = Target::new(vec![nx, ny], q_xy.table().to_vec());
    let cfg = OptimizerConfig {
        mu_grid: vec![0.0],
        ..cfg.clone()
    };
    let best = solve(&t, &cfg, false)?
        .into_iter()
        .min_by(|p, q| p.b.total_cmp(&q.b).then(p.a.total_cmp(&q.a)))
        .ok_or_else(|| Error::Infeasible("no feasible witness".into()))?;
    let alph = q_xy.alphabets();
    let w = AuxDecomposition::from_factors(&best.fac, &alph[0], &alph[1])?;
    Ok((best.b, w))
}

/// `min H(f(Y)|X)` over merges `f` of the output alphabet with `X - f(Y) - Y`.
pub fn necessary_conditional_entropy(q_xy: &JointPmf) -> Result<f64> {
    let (nx, ny) = require_pair(q_xy)?;
    partition::markov_merges(q_xy.table(), nx, ny)?
        .iter()
        .map(|l| partition::merged_conditional_entropy(q_xy.table(), nx, ny, l))
        .min_by(f64::total_cmp)
        .map(|h| h.max(0.0))
        .ok_or_else(|| Error::Invariant("identity merge must be Markov".into()))
}
