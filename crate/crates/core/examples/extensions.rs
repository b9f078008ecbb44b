//! Region variants on the erasure channel: public messages, decoder-only
//! randomness and an observer with limited memory.

use synthcap::builtin;
use synthcap::regions::{
    limited_memory_region, local_randomness_region, public_channel_region, OptimizerConfig,
};

fn main() -> synthcap::error::Result<()> {
    let cfg = OptimizerConfig {
        restarts: 8,
        ..OptimizerConfig::default()
    };
    let (q, w) = builtin::erasure(0.3)?;
    let grid = [0.7, 0.75, 0.8, 0.85, 0.9];

    let public = public_channel_region(&q, &w, &cfg)?;
    let first = public.points[0];
    println!("public channel: first vertex (R, R0) = ({:.4}, {:.4})", first.r, first.r0);

    let lr = local_randomness_region(&q, &w, &grid, &cfg)?;
    println!("local randomness (H(Y|X) = {:.4}):", lr.conditional_entropy);
    print!("{}", lr.boundary.to_csv());

    for b in [0.0, 0.5, 1.0] {
        let r = limited_memory_region(&q, &w, b, &grid, &cfg)?;
        let r0: Vec<String> = r.points.iter().map(|p| format!("{:.4}", p.r0)).collect();
        println!("memory fraction {b}: R0 = [{}]", r0.join(", "));
    }
    Ok(())
}
