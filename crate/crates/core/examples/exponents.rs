//! Decay exponents of the soft-covering distance and the Rényi curves
//! behind them.

use synthcap::prob::{Channel, Pmf};
use synthcap::softcover::exponents;

fn main() -> synthcap::error::Result<()> {
    let j = Pmf::uniform(2).through(&Channel::bsc(0.1)?)?;
    for r in [0.55, 0.7, 0.9, 1.2] {
        let e = exponents(&j, r)?;
        println!(
            "R={r}: gamma {:.5} at {:?}, hat {:.5}, hathat {:.5}",
            e.gamma, e.gamma_argmax, e.gamma_hat, e.gamma_hathat
        );
    }
    print!("{}", exponents(&j, 0.9)?.curve_csv());
    Ok(())
}
