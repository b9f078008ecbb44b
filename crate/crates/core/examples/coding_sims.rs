//! Soft covering beyond a single codebook: a source-indexed encoder, a
//! two-layer codebook, synthesis for a fixed side sequence and the best
//! weighted codebook under an entropy budget.

use synthcap::prob::{index_labels, Channel, Pmf};
use synthcap::softcover::{
    local_synthesis_sim, mean_resolvability_search, source_encoder_sim, superposition_sim, CodebookLaw, SimRun,
};

fn main() -> synthcap::error::Result<()> {
    let w = Channel::bsc(0.1)?;
    let law = CodebookLaw::Iid(Pmf::uniform(2));
    for rate in [0.0, 0.3, 0.8] {
        let s = source_encoder_sim(&Pmf::uniform(2), &law, &w, rate, 0.5, SimRun { n: 4, trials: 50, seed: 1 })?;
        println!("source encoder R={rate}: TV {:.4} (margin {:+.3})", s.mean, s.margin);
    }

    let p_u_w = Channel::from_rows(vec![vec![0.8, 0.2], vec![0.2, 0.8]])?;
    // output depends on u only
    let ch = Channel::from_rows(vec![vec![0.9, 0.1], vec![0.1, 0.9], vec![0.9, 0.1], vec![0.1, 0.9]])?;
    for (r1, r2) in [(0.2, 0.2), (0.6, 0.6)] {
        let s = superposition_sim(&Pmf::uniform(2), &p_u_w, &ch, r1, r2, SimRun { n: 4, trials: 40, seed: 2 })?;
        println!("superposition R1={r1} R2={r2}: TV {:.4} (margin {:+.3})", s.mean, s.margin);
    }

    let seq = [0, 1, 1, 0, 1, 0];
    for rate in [0.05, 0.8] {
        let s = local_synthesis_sim(&p_u_w, &ch, rate, &seq, 40, 3)?;
        println!("local synthesis R={rate}: TV {:.4} (margin {:+.3})", s.mean, s.margin);
    }

    let target = Pmf::new(index_labels(2), vec![0.5, 0.5])?;
    for budget in [0.0, 1.0, 2.0] {
        let r = mean_resolvability_search(&Pmf::uniform(2), &w, &target, 2, budget)?;
        println!("entropy budget {budget}: min TV {:.4} with {} codewords", r.min_tv, r.codebook.len());
    }
    Ok(())
}
