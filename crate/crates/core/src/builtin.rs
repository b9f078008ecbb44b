//! Named example channels with their canonical input distributions.

use crate::error::{Error, Result};
use crate::prob::{index_labels, Channel, Pmf};

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn check_open_unit(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{what} must lie in (0,1), got {p}")))
    }
}

/// Uniform binary input through an erasure channel with outputs `(0, e, 1)`.
pub fn erasure(p: f64) -> Result<(Pmf, Channel)> {
    check_open_unit(p, "erasure probability")?;
    let w = Channel::new(
        labels(&["0", "1"]),
        labels(&["0", "e", "1"]),
        vec![vec![1.0 - p, p, 0.0], vec![0.0, p, 1.0 - p]],
    )?;
    Ok((Pmf::new(labels(&["0", "1"]), vec![0.5, 0.5])?, w))
}

/// Symmetric input on `(0, e, 1)` with erasure mass `p`; erasures are
/// mapped to a uniform bit.
pub fn reverse_erasure(p: f64) -> Result<(Pmf, Channel)> {
    check_open_unit(p, "erasure probability")?;
    let x = labels(&["0", "e", "1"]);
    let w = Channel::new(
        x.clone(),
        labels(&["0", "1"]),
        vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]],
    )?;
    Ok((Pmf::new(x, vec![(1.0 - p) / 2.0, p, (1.0 - p) / 2.0])?, w))
}

/// Uniform input on `m` symbols; the output is uniform over the other `m - 1`.
pub fn scatter(m: usize) -> Result<(Pmf, Channel)> {
    if m < 3 {
        return Err(Error::Parameter(format!("scatter channel needs m >= 3, got {m}")));
    }
    let rows = (0..m)
        .map(|x| (0..m).map(|y| if x == y { 0.0 } else { 1.0 / (m - 1) as f64 }).collect())
        .collect();
    Ok((Pmf::uniform(m), Channel::new(index_labels(m), index_labels(m), rows)?))
}

/// Uniform binary input through a binary symmetric channel.
pub fn bsc(p: f64) -> Result<(Pmf, Channel)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("crossover must lie in [0,1], got {p}")));
    }
    Ok((Pmf::uniform(2), Channel::bsc(p)?))
}

/// Uniform input through the noiseless channel on `k` symbols.
pub fn identity(k: usize) -> Result<(Pmf, Channel)> {
    if k == 0 {
        return Err(Error::Parameter("identity channel needs k >= 1".into()));
    }
    Ok((Pmf::uniform(k), Channel::identity(k)))
}

/// Looks up a builtin by name with its numeric arguments.
pub fn by_name(name: &str, args: &[f64]) -> Result<(Pmf, Channel)> {
    let one = || {
        args.first()
            .copied()
            .ok_or_else(|| Error::Parse(format!("builtin {name} needs one argument")))
    };
    let count = || -> Result<usize> {
        let v = one()?;
        if v.fract() != 0.0 || v < 0.0 {
            return Err(Error::Parse(format!("builtin {name} needs an integer argument, got {v}")));
        }
        Ok(v as usize)
    };
    match name {
        "erasure" => erasure(one()?),
        "reverse-erasure" => reverse_erasure(one()?),
        "scatter" => scatter(count()?),
        "bsc" => bsc(one()?),
        "identity" => identity(count()?),
        _ => Err(Error::Parse(format!(
            "unknown builtin {name} (expected erasure, reverse-erasure, scatter, bsc, identity)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{conditional_entropy, mutual_information};

    #[test]
    fn builtin_information_values() {
        let (q, w) = erasure(0.25).unwrap();
        let j = q.through(&w).unwrap();
        assert!((mutual_information(&j).unwrap() - 0.75).abs() < 1e-12);

        let (q, w) = reverse_erasure(0.25).unwrap();
        let j = q.through(&w).unwrap();
        assert!((mutual_information(&j).unwrap() - 0.75).abs() < 1e-12);

        let (q, w) = scatter(4).unwrap();
        let j = q.through(&w).unwrap();
        assert!((conditional_entropy(&j).unwrap() - 3f64.log2()).abs() < 1e-12);
        assert!((mutual_information(&j).unwrap() - (4.0f64 / 3.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn lookup_errors() {
        assert!(by_name("scatter", &[2.0]).is_err());
        assert!(by_name("scatter", &[3.5]).is_err());
        assert!(by_name("nope", &[1.0]).is_err());
        assert!(by_name("bsc", &[]).is_err());
        assert!(by_name("identity", &[3.0]).is_ok());
    }
}
