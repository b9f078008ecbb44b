//! Rate-payoff curve of a matching game: the two players score when their
//! actions agree and differ from the adversary's.

use synthcap::regions::{game_region, OptimizerConfig, Payoff};

fn main() -> synthcap::error::Result<()> {
    let pay = Payoff::from_fn(2, 2, 2, |x, y, z| f64::from(x == y && y != z))?;
    let rates: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    println!("R,payoff");
    for p in game_region(&pay, &rates, &OptimizerConfig::default())? {
        println!("{:.2},{:.5}", p.rate, p.payoff);
    }
    Ok(())
}
