//! Expected soft-covering distance for a BSC(0.1) with uniform codewords,
//! next to the one-shot bound and the exponential bound.

use synthcap::prob::{Channel, Pmf};
use synthcap::softcover::{corollary1_min, expected_tv, soft_decay, Trials};

fn main() -> synthcap::error::Result<()> {
    let (p_u, w) = (Pmf::uniform(2), Channel::bsc(0.1)?);
    let j = p_u.through(&w)?;
    println!("single letter, exhaustive:");
    for m in [1, 2, 4, 8] {
        let e = expected_tv(&p_u, &w, m, 1, Trials::Exhaustive, 0)?;
        let b = corollary1_min(&j, m)?;
        println!("  M={m}: E TV {:.4}, bound {:.4} at tau {:.3}", e.mean, b.bound(), b.tau);
    }
    let t = soft_decay(&p_u, &w, 1.2, &[2, 4, 6, 8], Trials::Sampled(400), 3)?;
    print!("{}", t.to_csv());
    Ok(())
}
