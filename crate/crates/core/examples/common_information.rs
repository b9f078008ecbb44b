//! Common information and necessary conditional entropy of the builtin
//! targets, with the decomposition that attains the former.

use synthcap::builtin;
use synthcap::regions::{necessary_conditional_entropy, wyner_common_information, OptimizerConfig};

fn main() -> synthcap::error::Result<()> {
    let cfg = OptimizerConfig::default();
    let cases: [(&str, f64); 5] = [("erasure", 0.25), ("erasure", 0.75), ("reverse-erasure", 0.3), ("scatter", 3.0), ("bsc", 0.1)];
    for (name, arg) in cases {
        let (q, w) = builtin::by_name(name, &[arg])?;
        let joint = q.through(&w)?;
        let (c, aux) = wyner_common_information(&joint, &cfg)?;
        let h = necessary_conditional_entropy(&joint)
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|e| format!("n/a ({e})"));
        println!("{name} {arg}: C = {c:.6}, H(Y|X) needed = {h}, |U| = {}", aux.aux_size());
    }
    Ok(())
}
