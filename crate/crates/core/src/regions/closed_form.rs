//! Closed-form rate regions for the erasure, reverse erasure and scatter
//! channels with symmetric inputs.

use super::{RatePoint, RegionBoundary, RegionMetadata};
use crate::error::{Error, Result};
use crate::info::binary_entropy as h;

const INTERVAL_SLACK: f64 = 1e-12;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("erasure probability must lie in (0,1), got {p}")))
    }
}

/// `min{2(1-p), 1}`.
pub fn erasure_r_star(p: f64) -> f64 {
    (2.0 * (1.0 - p)).min(1.0)
}

/// Sum-rate bound of the erasure region at parameter `r`.
fn erasure_sum(p: f64, r: f64) -> f64 {
    h(p) + r * (1.0 - h(((1.0 - p) / r).min(1.0)))
}

fn reverse_comm(p: f64, r: f64) -> f64 {
    h(p) - r * h(((1.0 - p) / r).min(1.0)) + (1.0 - p)
}

fn reverse_sum(p: f64, r: f64) -> f64 {
    h(p) - r * h(((1.0 - p) / r).min(1.0)) + r
}

fn check_interval(r: f64, lo: f64, hi: f64) -> Result<f64> {
    if r < lo - INTERVAL_SLACK || r > hi + INTERVAL_SLACK {
        return Err(Error::Parameter(format!("r = {r} outside [{lo}, {hi}]")));
    }
    Ok(r.clamp(lo, hi))
}

fn closed_boundary(mut pts: Vec<RatePoint>, target: String) -> RegionBoundary {
    pts.sort_by(|a, b| a.r.total_cmp(&b.r).then(a.r0.total_cmp(&b.r0)));
    pts.dedup_by(|b, a| (a.r - b.r).abs() < 1e-15 && (a.r0 - b.r0).abs() < 1e-15);
    let n = pts.len();
    RegionBoundary {
        points: pts,
        witnesses: vec![None; n],
        metadata: RegionMetadata::closed_form(target),
    }
}

/// Corner points `(r, h(p) + r(1 - h((1-p)/r)) - r)` for each sampled
/// `r in [1-p, r*]`, plus the zero-common-randomness intercept.
pub fn erasure_region(p: f64, r_samples: &[f64]) -> Result<RegionBoundary> {
    check_p(p)?;
    let rs = erasure_r_star(p);
    let mut pts = Vec::with_capacity(r_samples.len() + 1);
    for &r in r_samples {
        let r = check_interval(r, 1.0 - p, rs)?;
        pts.push(RatePoint::new(r, (erasure_sum(p, r) - r).max(0.0)));
    }
    pts.push(RatePoint::new(erasure_sum(p, rs).max(rs), 0.0));
    Ok(closed_boundary(pts, format!("erasure p={p}")))
}

/// Smallest `R0` at communication rate `r` for the erasure channel, `None`
/// below `I(X;Y) = 1 - p`.
pub fn erasure_min_r0(p: f64, r: f64) -> Option<f64> {
    if r < 1.0 - p - INTERVAL_SLACK {
        return None;
    }
    let t = r.clamp(1.0 - p, erasure_r_star(p));
    Some((erasure_sum(p, t) - r).max(0.0))
}

/// Corner points of the reverse erasure region for `r in [r*, 1]`, plus the
/// zero-common-randomness intercept.
pub fn reverse_erasure_region(p: f64, r_samples: &[f64]) -> Result<RegionBoundary> {
    check_p(p)?;
    let rs = erasure_r_star(p);
    let mut pts = Vec::with_capacity(r_samples.len() + 1);
    for &r in r_samples {
        let r = check_interval(r, rs, 1.0)?;
        let comm = reverse_comm(p, r);
        pts.push(RatePoint::new(comm, (reverse_sum(p, r) - comm).max(0.0)));
    }
    pts.push(RatePoint::new(reverse_sum(p, rs).max(reverse_comm(p, rs)), 0.0));
    Ok(closed_boundary(pts, format!("reverse erasure p={p}")))
}

/// Smallest `R0` at communication rate `r` for the reverse erasure channel.
pub fn reverse_erasure_min_r0(p: f64, r: f64) -> Option<f64> {
    let rs = erasure_r_star(p);
    if r < reverse_comm(p, 1.0) - INTERVAL_SLACK {
        return None;
    }
    // the communication bound decreases in the parameter; take the smallest
    // parameter whose communication bound fits under r
    let t = if r >= reverse_comm(p, rs) {
        rs
    } else {
        let (mut lo, mut hi) = (rs, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if reverse_comm(p, mid) <= r {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    Some((reverse_sum(p, t) - r).max(0.0))
}

/// Corners `(log(m/a), log((m-1)/(m-a)))` for `a in [ceil(m/2), m-1]`.
pub fn scatter_corners(m: usize) -> Result<Vec<RatePoint>> {
    if m < 3 {
        return Err(Error::Parameter(format!("scatter channel needs m >= 3, got {m}")));
    }
    let mf = m as f64;
    Ok((m.div_ceil(2)..m)
        .map(|a| {
            let af = a as f64;
            RatePoint::new((mf / af).log2(), ((mf - 1.0) / (mf - af)).log2())
        })
        .collect())
}

/// Common information of the scatter joint: `2 - log(k / (k - 1))` with `k`
/// the smallest even number at least `m`.
pub fn scatter_common_information(m: usize) -> f64 {
    let k = (m + m % 2) as f64;
    2.0 - (k / (k - 1.0)).log2()
}

/// Lower boundary of the convex hull of the scatter corners and their
/// sum-rate intercepts.
pub fn scatter_region(m: usize) -> Result<RegionBoundary> {
    let corners = scatter_corners(m)?;
    let intercept = corners
        .iter()
        .map(|c| c.r + c.r0)
        .fold(f64::INFINITY, f64::min);
    let mut cand: Vec<RatePoint> = corners.clone();
    cand.push(RatePoint::new(intercept, 0.0));
    cand.sort_by(|a, b| a.r.total_cmp(&b.r).then(a.r0.total_cmp(&b.r0)));
    let mut hull: Vec<RatePoint> = Vec::new();
    for c in cand {
        while hull.len() >= 2 {
            let (o, p) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
            let cr = (p.r - o.r) * (c.r0 - o.r0) - (p.r0 - o.r0) * (c.r - o.r);
            if cr <= 1e-15 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    Ok(closed_boundary(hull, format!("scatter m={m}")))
}

/// Smallest `R0` at communication rate `r` on the scatter boundary.
pub fn scatter_min_r0(m: usize, r: f64) -> Result<Option<f64>> {
    let b = scatter_region(m)?;
    Ok(b.interpolate_r0(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erasure_examples() {
        let b = erasure_region(0.5, &[0.5, 1.0]).unwrap();
        assert_eq!(b.points.len(), 2);
        assert_eq!((b.points[0].r, b.points[0].r0), (0.5, 1.0));
        assert_eq!((b.points[1].r, b.points[1].r0), (1.0, 0.0));

        let b = erasure_region(0.75, &[0.5]).unwrap();
        let last = b.points.last().unwrap();
        assert!((last.r - h(0.75)).abs() < 1e-12 && last.r0 == 0.0);
        assert!((b.points[0].r0 - (h(0.75) - 0.5)).abs() < 1e-12);
        assert!(erasure_region(0.5, &[0.4]).is_err());
        assert!(erasure_region(1.0, &[0.5]).is_err());
    }

    #[test]
    fn erasure_min_r0_matches_corners() {
        for p in [0.25, 0.5, 0.75] {
            assert!(erasure_min_r0(p, 1.0 - p - 0.01).is_none());
            assert!((erasure_min_r0(p, 1.0 - p).unwrap() - h(p)).abs() < 1e-12);
            assert!(erasure_min_r0(p, 1.0).unwrap() < 1e-12 || p > 0.5);
        }
        assert!(erasure_min_r0(0.75, h(0.75)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn reverse_erasure_examples() {
        let b = reverse_erasure_region(0.25, &[1.0]).unwrap();
        let p0 = &b.points[0];
        assert!((p0.r - 0.75).abs() < 1e-12 && (p0.r0 - 0.25).abs() < 1e-12);
        assert!((b.points[1].r - 1.0).abs() < 1e-12 && b.points[1].r0 == 0.0);

        let b = reverse_erasure_region(0.5, &[1.0]).unwrap();
        assert!((b.points[0].r - 0.5).abs() < 1e-12 && (b.points[0].r0 - 0.5).abs() < 1e-12);

        let p = 0.7;
        let rs = erasure_r_star(p);
        let b = reverse_erasure_region(p, &[rs, 0.8, 1.0]).unwrap();
        let last = b.points.last().unwrap();
        assert!((last.r - reverse_sum(p, rs)).abs() < 1e-12 && last.r0 == 0.0);
        assert!((reverse_sum(p, rs) - h(p)).abs() < 1e-12);
        assert!(reverse_erasure_region(p, &[0.5]).is_err());
    }

    #[test]
    fn reverse_min_r0_is_consistent() {
        let p = 0.7;
        for r in [0.8, 0.9, 1.0] {
            let comm = reverse_comm(p, r);
            let r0 = reverse_erasure_min_r0(p, comm).unwrap();
            assert!((r0 - (reverse_sum(p, r) - comm)).abs() < 1e-9);
        }
        assert!(reverse_erasure_min_r0(p, 0.29).is_none());
    }

    #[test]
    fn scatter_examples() {
        let b = scatter_region(3).unwrap();
        assert_eq!(b.points.len(), 2);
        assert!((b.points[0].r - 1.5f64.log2()).abs() < 1e-12);
        assert!((b.points[0].r0 - 1.0).abs() < 1e-12);
        assert!((b.points[1].r - 3f64.log2()).abs() < 1e-12);
        for m in [3, 4, 5, 6, 7, 8] {
            let b = scatter_region(m).unwrap();
            let last = b.points.last().unwrap();
            assert_eq!(last.r0, 0.0);
            assert!((last.r - scatter_common_information(m)).abs() < 1e-12, "m={m}");
        }
        assert!(scatter_region(2).is_err());
        let mmin = scatter_region(200).unwrap().points[0].r;
        assert!((mmin - (200.0f64 / 199.0).log2()).abs() < 1e-12);
        assert!((mmin * 200.0 - std::f64::consts::LOG2_E).abs() < 0.01);
    }
}
