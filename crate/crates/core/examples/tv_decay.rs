//! Exact synthesis TV of random likelihood-encoder codes for a BSC(0.1)
//! target, inside and outside the achievable region.

use synthcap::builtin;
use synthcap::info::{binary_entropy, mutual_information};
use synthcap::prob::{Channel, Pmf};
use synthcap::regions::{AuxDecomposition, RatePoint};
use synthcap::synthesis::tv_decay_experiment;

fn main() -> synthcap::error::Result<()> {
    let p = 0.1;
    let (q, w) = builtin::bsc(p)?;
    // U = Y: X given U is a BSC(p), Y is U itself
    let labels = vec!["0".to_string(), "1".to_string()];
    let aux = AuxDecomposition::new(
        Pmf::uniform(2),
        Channel::new(labels.clone(), labels.clone(), vec![vec![1.0 - p, p], vec![p, 1.0 - p]])?,
        Channel::identity(2),
    )?;
    let i = mutual_information(&q.through(&w)?)?;
    let seeds: Vec<u64> = (0..20).collect();
    let ns = [2, 3, 4, 5, 6];

    let inside = RatePoint::new(i + 0.15, binary_entropy(p) + 0.15);
    let t = tv_decay_experiment(&aux, &q, &w, inside, &ns, &seeds)?;
    println!("inside: R = {:.4}, R0 = {:.4}", inside.r, inside.r0);
    print!("{}", t.to_csv());
    println!("sizes {:?}, log slope {:?}", t.sizes, t.log_slope());

    let outside = RatePoint::new(0.05, 0.0);
    let t = tv_decay_experiment(&aux, &q, &w, outside, &ns, &seeds)?;
    println!("outside: R = {}, R0 = {}", outside.r, outside.r0);
    print!("{}", t.to_csv());
    Ok(())
}
