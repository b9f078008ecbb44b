//! Variants of the synthesis region: several receivers, public
//! communication, a memory-limited observer and decoder-only randomness.

use serde::{Deserialize, Serialize};

use super::engine::Target;
use super::frontier::Frontier;
use super::{
    channel_target, describe, grid_boundary, solve, to_witness, OptimizerConfig, RatePoint,
    RegionBoundary, RegionMetadata,
};
use crate::error::{Error, Result};
use crate::info::conditional_entropy;
use crate::prob::{index_labels, Channel, Pmf};

/// Slack allowed in the identity `R0 + R_L = H(Y|X)` on tight triples.
pub const TIGHT_TRIPLE_TOL: f64 = 5e-3;

fn frontier_of(t: &Target, cfg: &OptimizerConfig) -> Result<(Frontier, usize)> {
    let cands = solve(t, cfg, true)?;
    let n = cands.len();
    let f = Frontier::new(cands).ok_or_else(|| Error::Infeasible("no feasible witness".into()))?;
    Ok((f, n))
}

/// Synthesis of a broadcast channel: the output of `q_ys_gx` is the
/// row-major flattening of `(Y_1, .., Y_m)` with `receiver_sizes[i] = |Y_i|`,
/// and every receiver output must be conditionally independent given `U`.
pub fn broadcast_region(
    q_x: &Pmf,
    q_ys_gx: &Channel,
    receiver_sizes: &[usize],
    r_grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<RegionBoundary> {
    if receiver_sizes.is_empty() || receiver_sizes.iter().product::<usize>() != q_ys_gx.n_outputs() {
        return Err(Error::Shape(format!(
            "receiver sizes {receiver_sizes:?} do not factor {} outputs",
            q_ys_gx.n_outputs()
        )));
    }
    let (pair, pair_labels) = channel_target(q_x, q_ys_gx)?;
    let mut dims = vec![pair.dims[0]];
    dims.extend_from_slice(receiver_sizes);
    let mut labels = vec![pair_labels[0].clone()];
    if receiver_sizes.len() == 1 {
        labels.push(pair_labels[1].clone());
    } else {
        labels.extend(receiver_sizes.iter().map(|&d| index_labels(d)));
    }
    let t = Target::new(dims, pair.table);
    let (frontier, accepted) = frontier_of(&t, cfg)?;
    let meta = RegionMetadata::optimized(describe(&t.dims), cfg, accepted);
    Ok(grid_boundary(&frontier, r_grid, 1.0, &labels, meta)?.0)
}

/// Vertices of the frontier of `{(I(X;U), I(X,Y;U))}` when the
/// communication is public and common randomness is used as a one-time pad.
pub fn public_channel_region(q_x: &Pmf, q_ygx: &Channel, cfg: &OptimizerConfig) -> Result<RegionBoundary> {
    let (t, labels) = channel_target(q_x, q_ygx)?;
    let (frontier, accepted) = frontier_of(&t, cfg)?;
    let mut points = Vec::new();
    let mut witnesses = Vec::new();
    for c in &frontier.hull {
        if c.b < c.a - 1e-9 {
            return Err(Error::Invariant(format!(
                "public channel point has R0 = {} < R = {}",
                c.b, c.a
            )));
        }
        points.push(RatePoint::new(c.a, c.b.max(c.a)));
        witnesses.push(Some(to_witness(&c.fac, &labels)?));
    }
    let boundary = RegionBoundary {
        points,
        witnesses,
        metadata: RegionMetadata::optimized(describe(&t.dims), cfg, accepted),
    };
    boundary.check_invariants()?;
    Ok(boundary)
}

/// Region against an observer whose memory grows as `b n`: the sum-rate
/// constraint becomes `R0 + R >= b I(X,Y;U)`.
pub fn limited_memory_region(
    q_x: &Pmf,
    q_ygx: &Channel,
    b: f64,
    r_grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<RegionBoundary> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Parameter(format!("memory fraction must lie in [0,1], got {b}")));
    }
    let (t, labels) = channel_target(q_x, q_ygx)?;
    let (frontier, accepted) = frontier_of(&t, cfg)?;
    let mut meta = RegionMetadata::optimized(describe(&t.dims), cfg, accepted);
    meta.notes.push(format!("memory fraction b = {b}"));
    Ok(grid_boundary(&frontier, r_grid, b, &labels, meta)?.0)
}

/// Triples `(R, R0, R_L)` with decoder-only randomness `R_L >= H(Y|U)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRandomnessRegion {
    pub boundary: RegionBoundary,
    /// Whether all three constraints hold with equality at the point.
    pub tight: Vec<bool>,
    /// `H(Y|X)` of the target.
    pub conditional_entropy: f64,
}

pub fn local_randomness_region(
    q_x: &Pmf,
    q_ygx: &Channel,
    r_grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<LocalRandomnessRegion> {
    let (t, labels) = channel_target(q_x, q_ygx)?;
    let hygx = conditional_entropy(&q_x.through(q_ygx)?)?;
    let (frontier, accepted) = frontier_of(&t, cfg)?;
    let meta = RegionMetadata::optimized(describe(&t.dims), cfg, accepted);
    let (mut boundary, used) = grid_boundary(&frontier, r_grid, 1.0, &labels, meta)?;
    let mut tight = Vec::with_capacity(used.len());
    for (p, c) in boundary.points.iter_mut().zip(&used) {
        let rl = c.fac.output_entropy_given_u();
        p.r_l = Some(rl);
        let is_tight = (c.a - p.r).abs() <= 1e-9 && c.b - p.r >= 0.0;
        if is_tight && (p.r0 + rl - hygx).abs() > TIGHT_TRIPLE_TOL {
            return Err(Error::Invariant(format!(
                "tight triple has R0 + R_L = {} but H(Y|X) = {hygx}",
                p.r0 + rl
            )));
        }
        tight.push(is_tight);
    }
    Ok(LocalRandomnessRegion {
        boundary,
        tight,
        conditional_entropy: hygx,
    })
}
