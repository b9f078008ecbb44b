//! Optimal (R, R0) boundary of the erasure channel: closed form next to the
//! optimizer, for the two erasure probabilities of the usual figure.

use synthcap::builtin;
use synthcap::regions::{erasure_min_r0, erasure_r_star, synthesis_region, OptimizerConfig};

fn main() -> synthcap::error::Result<()> {
    let cfg = OptimizerConfig::default();
    for p in [0.05, 0.1] {
        let (q, w) = builtin::erasure(p)?;
        let rs: Vec<f64> = (0..=8).map(|i| 1.0 - p + (erasure_r_star(p) - (1.0 - p)) * i as f64 / 8.0).collect();
        let b = synthesis_region(&q, &w, &rs, &cfg)?;
        println!("p = {p}");
        println!("{:>8} {:>10} {:>10}", "R", "R0 opt", "R0 exact");
        for pt in &b.points {
            println!("{:>8.4} {:>10.5} {:>10.5}", pt.r, pt.r0, erasure_min_r0(p, pt.r).unwrap_or(f64::NAN));
        }
    }
    Ok(())
}
