//! A detector trying to tell a synthesized channel from the real one. Its
//! two error probabilities cannot sum to less than one minus the distance.

use synthcap::builtin;
use synthcap::prob::{Channel, Pmf};
use synthcap::regions::AuxDecomposition;
use synthcap::synthesis::{detector_demo, generate_code, monte_carlo_tv, Verdict};

fn main() -> synthcap::error::Result<()> {
    let p = 0.1;
    let (q, w) = builtin::bsc(p)?;
    let aux = AuxDecomposition::new(Pmf::uniform(2), Channel::bsc(p)?, Channel::identity(2))?;
    // flags blocks whose disagreement count is far from n p
    let n = 4;
    let detector = |x: &[usize], y: &[usize]| {
        let d = x.iter().zip(y).filter(|(a, b)| a != b).count();
        if d >= 2 { Verdict::Synthetic } else { Verdict::Genuine }
    };
    for (r, r0) in [(0.3, 0.0), (1.0, 1.0)] {
        let code = generate_code(&aux, n, r, r0, 1)?;
        let rep = detector_demo(&code, &q, &w, &detector, 20000, 7)?;
        let est = monte_carlo_tv(&code, &q, &w, 20000, 8)?;
        println!(
            "R={r} R0={r0}: alpha {:.4} beta {:.4} exact TV {:?} estimate {:.4}",
            rep.alpha,
            rep.beta,
            rep.tv,
            est.value()
        );
    }
    Ok(())
}
