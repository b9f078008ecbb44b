//! Scatter channel regions for three alphabet sizes.

use synthcap::regions::{scatter_common_information, scatter_region};

fn main() -> synthcap::error::Result<()> {
    for m in [3, 5, 7] {
        let b = scatter_region(m)?;
        println!("m = {m}, common information {:.6}", scatter_common_information(m));
        print!("{}", b.to_csv());
    }
    Ok(())
}
