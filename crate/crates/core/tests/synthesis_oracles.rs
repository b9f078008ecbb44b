//! Induced joints of synthesis codes against a direct transcription of the
//! construction, plus the rate-monotonicity and key-independence properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthcap::builtin;
use synthcap::info::tv_of;
use synthcap::prob::{index_labels, Channel, Pmf};
use synthcap::regions::AuxDecomposition;
use synthcap::synthesis::{
    exact_induced_joint, generate_code, key_independence_tv, seq_digits, synthesis_tv, SynthesisCode,
};

fn random_rows(rng: &mut ChaCha8Rng, nu: usize, k: usize, zeros: bool) -> Vec<Vec<f64>> {
    (0..nu)
        .map(|_| {
            let mut r: Vec<f64> = (0..k)
                .map(|_| if zeros && rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.05..1.0) })
                .collect();
            if r.iter().all(|&v| v == 0.0) {
                r[0] = 1.0;
            }
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

fn random_aux(seed: u64, nu: usize, nx: usize, ny: usize) -> AuxDecomposition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pu = random_rows(&mut rng, 1, nu, false).remove(0);
    let l = index_labels(nu);
    AuxDecomposition::new(
        Pmf::new(l.clone(), pu).unwrap(),
        Channel::new(l.clone(), index_labels(nx), random_rows(&mut rng, nu, nx, true)).unwrap(),
        Channel::new(l, index_labels(ny), random_rows(&mut rng, nu, ny, true)).unwrap(),
    )
    .unwrap()
}

/// Direct sum over `(x^n, y^n, k, j)` with plain products.
fn naive_joint(code: &SynthesisCode, q: &Pmf) -> Vec<f64> {
    let (n, nx, ny) = (code.n, code.nx(), code.ny());
    let xl = nx.pow(n as u32);
    let yl = ny.pow(n as u32);
    let px = code.aux.p_x_given_u.rows();
    let py = code.aux.p_y_given_u.rows();
    let mut out = vec![0.0; xl * yl];
    for xi in 0..xl {
        let x = seq_digits(xi, nx, n);
        let qx: f64 = x.iter().map(|&a| q.prob(a)).product();
        for k in 0..code.m0 {
            let lik: Vec<f64> = (0..code.m)
                .map(|j| (0..n).map(|t| px[code.codebook[j][k][t]][x[t]]).product())
                .collect();
            let tot: f64 = lik.iter().sum();
            for j in 0..code.m {
                let enc = if tot > 0.0 { lik[j] / tot } else { 1.0 / code.m as f64 };
                for yi in 0..yl {
                    let y = seq_digits(yi, ny, n);
                    let dec: f64 = (0..n).map(|t| py[code.codebook[j][k][t]][y[t]]).product();
                    out[xi * yl + yi] += qx * enc * dec / code.m0 as f64;
                }
            }
        }
    }
    out
}

#[test]
fn exact_joint_matches_direct_sum() {
    for seed in 0..12u64 {
        let (nu, nx, ny) = [(2, 2, 2), (3, 2, 3), (4, 3, 2)][seed as usize % 3];
        let aux = random_aux(seed, nu, nx, ny);
        let q = aux.reconstructed_joint().unwrap().marginal(0).unwrap();
        let n = 1 + seed as usize % 3;
        let code = generate_code(&aux, n, 0.9, 0.6, seed).unwrap();
        let got = exact_induced_joint(&code, &q).unwrap();
        let want = naive_joint(&code, &q);
        assert!(tv_of(&got.table, &want) < 1e-13, "seed {seed}");
        assert!((got.total() - 1.0).abs() < 1e-9);
    }
}

fn bsc_u_equals_y(p: f64) -> AuxDecomposition {
    AuxDecomposition::new(
        Pmf::uniform(2),
        Channel::from_rows(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap(),
        Channel::identity(2),
    )
    .unwrap()
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let m = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

#[test]
fn tv_does_not_grow_when_codebooks_double() {
    let (q, w) = builtin::bsc(0.1).unwrap();
    let aux = bsc_u_equals_y(0.1);
    let n = 3;
    let avg = |m: usize, m0: usize| {
        let r = (m as f64).log2() / n as f64;
        let r0 = (m0 as f64).log2() / n as f64;
        let v: Vec<f64> = (0..24)
            .map(|s| synthesis_tv(&generate_code(&aux, n, r, r0, 100 + s).unwrap(), &q, &w).unwrap())
            .collect();
        mean_se(&v)
    };
    for (m, m0) in [(2, 2), (4, 2), (2, 4), (4, 4), (8, 4), (4, 8)] {
        let (a, sa) = avg(m, m0);
        for (b, sb) in [avg(2 * m, m0), avg(m, 2 * m0)] {
            let pooled = (sa * sa + sb * sb).sqrt();
            assert!(b <= a + pooled, "M={m} M0={m0}: {a} -> {b} (se {pooled})");
        }
    }
}

#[test]
fn key_independence_improves_with_block_length() {
    let q = Pmf::uniform(2);
    let aux = bsc_u_equals_y(0.1);
    let avg = |n: usize| -> f64 {
        (0..20)
            .map(|s| key_independence_tv(&generate_code(&aux, n, 1.5, 0.2, s).unwrap(), &q).unwrap())
            .sum::<f64>()
            / 20.0
    };
    let (a, b) = (avg(2), avg(8));
    assert!(b < 0.5 * a, "n=2: {a}, n=8: {b}");

    // no message rate: the source is matched by a single codeword per key
    let zero = |n: usize| -> f64 {
        (0..10)
            .map(|s| key_independence_tv(&generate_code(&aux, n, 0.0, 0.5, s).unwrap(), &q).unwrap())
            .sum::<f64>()
            / 10.0
    };
    assert!(zero(2) > 0.3 && zero(5) > zero(2));
}
