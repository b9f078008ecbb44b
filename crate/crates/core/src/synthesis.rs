//! Random-codebook synthesis codes: likelihood encoder, memoryless stochastic
//! decoder, and exact or sampled evaluation of the induced joint law.
//!
//! Sequences over an alphabet of size `k` are indexed row-major with the
//! first symbol most significant; joint tables over `(x^n, y^n)` put `x^n`
//! in the major position.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget;
use crate::error::{Error, Result};
use crate::info::tv_of;
use crate::output::csv_row;
use crate::prob::{Channel, Pmf};
use crate::regions::{AuxDecomposition, RatePoint};
use crate::rng::{derive, sample_index, stream_rng, Stream};

/// Largest block length for which the Monte Carlo TV estimate is the plug-in
/// empirical distribution; beyond it only a detector lower bound is reported.
pub const PLUGIN_MAX_N: usize = 4;

/// Relative slack removed before taking `ceil(2^{nR})`, so that rates given as
/// `log2(M)/n` in floating point map back to `M`.
const CEIL_SLACK: f64 = 1e-9;

/// `ceil(2^{n rate})`, refusing sizes beyond the enumeration budget.
pub fn codebook_size(n: usize, rate: f64) -> Result<usize> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Parameter(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let x = (n as f64 * rate).exp2();
    let lim = budget::limit();
    if !x.is_finite() || x > lim as f64 {
        return Err(Error::budget(u128::MAX.min(x as u128), lim, "codebook size"));
    }
    Ok(((x - CEIL_SLACK * x).ceil() as usize).max(1))
}

/// A synthesis code: codewords `u^n(j, k)` for message `j < m` and common
/// randomness `k < m0`, together with the decomposition that generated them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisCode {
    pub n: usize,
    pub r: f64,
    pub r0: f64,
    pub m: usize,
    pub m0: usize,
    pub aux: AuxDecomposition,
    /// `codebook[j][k][t]`.
    pub codebook: Vec<Vec<Vec<usize>>>,
}

impl SynthesisCode {
    /// Wraps a hand-built codebook; `m` and `m0` are read off its shape.
    pub fn from_codebook(aux: AuxDecomposition, n: usize, r: f64, r0: f64, codebook: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let m = codebook.len();
        let m0 = codebook.first().map_or(0, Vec::len);
        let code = SynthesisCode { n, r, r0, m, m0, aux, codebook };
        code.validate()?;
        Ok(code)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.m0 == 0 {
            return Err(Error::Shape("codebook must be nonempty with n >= 1".into()));
        }
        if self.codebook.len() != self.m || self.codebook.iter().any(|row| row.len() != self.m0) {
            return Err(Error::Shape(format!("codebook is not {} x {}", self.m, self.m0)));
        }
        let nu = self.aux.aux_size();
        for row in &self.codebook {
            for w in row {
                if w.len() != self.n {
                    return Err(Error::Shape(format!("codeword of length {} != n = {}", w.len(), self.n)));
                }
                if let Some(&u) = w.iter().find(|&&u| u >= nu) {
                    return Err(Error::OutOfRange(format!("codeword symbol {u} outside auxiliary alphabet of size {nu}")));
                }
            }
        }
        Ok(())
    }

    pub fn codeword(&self, j: usize, k: usize) -> Result<&[usize]> {
        if j >= self.m || k >= self.m0 {
            return Err(Error::OutOfRange(format!("(j, k) = ({j}, {k}) outside {} x {}", self.m, self.m0)));
        }
        Ok(&self.codebook[j][k])
    }

    pub fn nx(&self) -> usize {
        self.aux.p_x_given_u.n_outputs()
    }

    pub fn ny(&self) -> usize {
        self.aux.p_y_given_u.n_outputs()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let code: SynthesisCode = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        code.validate()?;
        Ok(code)
    }

    fn exact_terms(&self) -> u128 {
        budget::terms(&[
            budget::pow(self.nx(), self.n),
            budget::pow(self.ny(), self.n),
            self.m as u128,
            self.m0 as u128,
            self.n as u128,
        ])
    }
}

/// Draws every codeword symbol i.i.d. from `p_U`.
pub fn generate_code(aux: &AuxDecomposition, n: usize, r: f64, r0: f64, seed: u64) -> Result<SynthesisCode> {
    if n == 0 {
        return Err(Error::Parameter("block length must be positive".into()));
    }
    let m = codebook_size(n, r)?;
    let m0 = codebook_size(n, r0)?;
    budget::check(budget::terms(&[m as u128, m0 as u128, n as u128]), "codebook symbols")?;
    let dist = WeightedIndex::new(aux.p_u.probs()).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut rng = stream_rng(Stream::Codebook, seed, 0);
    let codebook = (0..m)
        .map(|_| (0..m0).map(|_| (0..n).map(|_| dist.sample(&mut rng)).collect()).collect())
        .collect();
    Ok(SynthesisCode {
        n,
        r,
        r0,
        m,
        m0,
        aux: aux.clone(),
        codebook,
    })
}

fn check_seq(seq: &[usize], n: usize, k: usize, what: &str) -> Result<()> {
    if seq.len() != n {
        return Err(Error::Shape(format!("{what} sequence has length {} != {n}", seq.len())));
    }
    if let Some(&s) = seq.iter().find(|&&s| s >= k) {
        return Err(Error::OutOfRange(format!("{what} symbol {s} outside alphabet of size {k}")));
    }
    Ok(())
}

/// Normalizes log-weights by max subtraction; all `-inf` gives uniform.
fn posterior(logs: &[f64]) -> Vec<f64> {
    let mx = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return vec![1.0 / logs.len() as f64; logs.len()];
    }
    let w: Vec<f64> = logs.iter().map(|&l| (l - mx).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn word_log_likelihood(rows: &[Vec<f64>], word: &[usize], seq: &[usize]) -> f64 {
    word.iter().zip(seq).map(|(&u, &x)| rows[u][x].ln()).sum()
}

/// Encoder posterior `P(j | x^n, k)`.
pub fn encoder_posterior(code: &SynthesisCode, x_seq: &[usize], k: usize) -> Result<Vec<f64>> {
    check_seq(x_seq, code.n, code.nx(), "source")?;
    if k >= code.m0 {
        return Err(Error::OutOfRange(format!("k = {k} >= {}", code.m0)));
    }
    let rows = code.aux.p_x_given_u.rows();
    let logs: Vec<f64> = (0..code.m)
        .map(|j| word_log_likelihood(rows, &code.codebook[j][k], x_seq))
        .collect();
    Ok(posterior(&logs))
}

/// Samples `j` with probability proportional to `prod_t p(x_t | u_t(j, k))`.
pub fn likelihood_encode<R: Rng + ?Sized>(code: &SynthesisCode, x_seq: &[usize], k: usize, rng: &mut R) -> Result<usize> {
    let w = encoder_posterior(code, x_seq, k)?;
    let dist = WeightedIndex::new(&w).map_err(|e| Error::Invariant(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Passes codeword `(j, k)` through `p_{Y|U}` letter by letter.
pub fn decode_sample<R: Rng + ?Sized>(code: &SynthesisCode, j: usize, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let word = code.codeword(j, k)?;
    let rows = code.aux.p_y_given_u.rows();
    Ok(word.iter().map(|&u| sample_index(&rows[u], rng)).collect())
}

/// Draws `(x^n, y^n)` from the synthesized pipeline.
pub fn sample_synthetic<R: Rng + ?Sized>(code: &SynthesisCode, q_x: &Pmf, rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
    check_source(code, q_x)?;
    let x: Vec<usize> = (0..code.n).map(|_| sample_index(q_x.probs(), rng)).collect();
    let k = rng.random_range(0..code.m0);
    let j = likelihood_encode(code, &x, k, rng)?;
    let y = decode_sample(code, j, k, rng)?;
    Ok((x, y))
}

/// Draws `(x^n, y^n)` from the memoryless target.
pub fn sample_genuine<R: Rng + ?Sized>(q_x: &Pmf, q_ygx: &Channel, n: usize, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let x: Vec<usize> = (0..n).map(|_| sample_index(q_x.probs(), rng)).collect();
    let y = x.iter().map(|&a| sample_index(q_ygx.row(a), rng)).collect();
    (x, y)
}

pub fn seq_index(seq: &[usize], k: usize) -> usize {
    seq.iter().fold(0, |a, &s| a * k + s)
}

pub fn seq_digits(mut idx: usize, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for t in (0..n).rev() {
        out[t] = idx % k;
        idx /= k;
    }
    out
}

/// `prod_t rows[u_t][s_t]` over every sequence `s`, in log domain.
fn word_log_table(rows: &[Vec<f64>], word: &[usize], k: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    for &u in word {
        let logs: Vec<f64> = rows[u].iter().map(|p| p.ln()).collect();
        out = out.iter().flat_map(|&a| logs.iter().map(move |&l| a + l)).collect();
    }
    debug_assert_eq!(out.len(), k.pow(word.len() as u32));
    out
}

/// Nonzero entries of `prod_t rows[u_t][s_t]`.
fn word_sparse_table(rows: &[Vec<f64>], word: &[usize]) -> Vec<(usize, f64)> {
    let mut out = vec![(0usize, 1.0)];
    for &u in word {
        let k = rows[u].len();
        out = out
            .iter()
            .flat_map(|&(i, a)| {
                rows[u]
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(move |(s, &p)| (i * k + s, a * p))
            })
            .collect();
    }
    out
}

/// Where an induced joint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    Exact,
    MonteCarlo { trials: usize },
}

/// `P(x^n, y^n)` over `X^n x Y^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedJoint {
    pub n: usize,
    pub nx: usize,
    pub ny: usize,
    pub table: Vec<f64>,
    pub provenance: Provenance,
}

impl InducedJoint {
    fn y_len(&self) -> usize {
        self.ny.pow(self.n as u32)
    }

    pub fn get(&self, x_seq: &[usize], y_seq: &[usize]) -> f64 {
        self.table[seq_index(x_seq, self.nx) * self.y_len() + seq_index(y_seq, self.ny)]
    }

    /// Marginal over `X^n`.
    pub fn x_marginal(&self) -> Vec<f64> {
        self.table.chunks(self.y_len()).map(|r| r.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.table.iter().sum()
    }
}

fn check_source(code: &SynthesisCode, q_x: &Pmf) -> Result<()> {
    if q_x.len() != code.nx() {
        return Err(Error::AlphabetMismatch(format!(
            "source has {} symbols, code expects {}",
            q_x.len(),
            code.nx()
        )));
    }
    Ok(())
}

fn check_target(code: &SynthesisCode, q_x: &Pmf, q_ygx: &Channel) -> Result<()> {
    check_source(code, q_x)?;
    if q_ygx.n_inputs() != code.nx() || q_ygx.n_outputs() != code.ny() {
        return Err(Error::AlphabetMismatch(format!(
            "target channel is {} x {}, code expects {} x {}",
            q_ygx.n_inputs(),
            q_ygx.n_outputs(),
            code.nx(),
            code.ny()
        )));
    }
    Ok(())
}

struct WordTables {
    /// `log prod_t p(x_t | u_t)` per codeword `j * m0 + k`, over all `x^n`.
    enc: Vec<Vec<f64>>,
    /// Nonzero `prod_t p(y_t | u_t)` per codeword.
    dec: Vec<Vec<(usize, f64)>>,
}

fn word_tables(code: &SynthesisCode) -> WordTables {
    let words: Vec<&[usize]> = code.codebook.iter().flat_map(|row| row.iter().map(Vec::as_slice)).collect();
    let xr = code.aux.p_x_given_u.rows();
    let yr = code.aux.p_y_given_u.rows();
    let nx = code.nx();
    let enc = words.par_iter().map(|w| word_log_table(xr, w, nx)).collect();
    let dec = words.par_iter().map(|w| word_sparse_table(yr, w)).collect();
    WordTables { enc, dec }
}

/// Exact `P(x^n, y^n) = prod q_X(x_t) (1/m0) sum_k sum_j P(j|x^n,k) prod p(y_t|u_t(j,k))`.
pub fn exact_induced_joint(code: &SynthesisCode, q_x: &Pmf) -> Result<InducedJoint> {
    check_source(code, q_x)?;
    budget::check(code.exact_terms(), "exact induced joint")?;
    let (n, m, m0) = (code.n, code.m, code.m0);
    let ylen = code.ny().pow(n as u32);
    let qn = q_x.iid_power(n);
    let tabs = word_tables(code);
    let mut table = vec![0.0; qn.len() * ylen];
    table.par_chunks_mut(ylen).enumerate().for_each(|(x, row)| {
        if qn[x] == 0.0 {
            return;
        }
        let mut logs = vec![0.0; m];
        for k in 0..m0 {
            for (j, l) in logs.iter_mut().enumerate() {
                *l = tabs.enc[j * m0 + k][x];
            }
            for (j, w) in posterior(&logs).into_iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let c = qn[x] * w / m0 as f64;
                for &(y, p) in &tabs.dec[j * m0 + k] {
                    row[y] += c * p;
                }
            }
        }
    });
    Ok(InducedJoint {
        n,
        nx: code.nx(),
        ny: code.ny(),
        table,
        provenance: Provenance::Exact,
    })
}

/// Joint law of `(X^n, Y^n, J, K)`, laid out `((x * |Y|^n + y) * m + j) * m0 + k`.
/// Only for tiny instances.
pub fn exact_index_joint(code: &SynthesisCode, q_x: &Pmf) -> Result<Vec<f64>> {
    check_source(code, q_x)?;
    budget::check(code.exact_terms(), "index joint")?;
    let (n, m, m0) = (code.n, code.m, code.m0);
    let ylen = code.ny().pow(n as u32);
    let qn = q_x.iid_power(n);
    let tabs = word_tables(code);
    let mut out = vec![0.0; qn.len() * ylen * m * m0];
    for (x, &qx) in qn.iter().enumerate() {
        for k in 0..m0 {
            let logs: Vec<f64> = (0..m).map(|j| tabs.enc[j * m0 + k][x]).collect();
            for (j, w) in posterior(&logs).into_iter().enumerate() {
                for &(y, p) in &tabs.dec[j * m0 + k] {
                    out[((x * ylen + y) * m + j) * m0 + k] = qx * w * p / m0 as f64;
                }
            }
        }
    }
    Ok(out)
}

/// `prod_t q_X(x_t) q(y_t | x_t)` over `(x^n, y^n)`.
pub fn memoryless_target(q_x: &Pmf, q_ygx: &Channel, n: usize) -> Result<Vec<f64>> {
    let single = q_x.through(q_ygx)?;
    let (nx, ny) = (q_x.len(), q_ygx.n_outputs());
    let mut out = vec![1.0];
    for t in 0..n {
        out = extend_target(&out, single.table(), nx, ny, t);
    }
    Ok(out)
}

/// Appends one letter to a table over `(x^t, y^t)`.
fn extend_target(prev: &[f64], single: &[f64], nx: usize, ny: usize, t: usize) -> Vec<f64> {
    let (xl, yl) = (nx.pow(t as u32), ny.pow(t as u32));
    let mut out = vec![0.0; prev.len() * nx * ny];
    for xs in 0..xl {
        for ys in 0..yl {
            let p = prev[xs * yl + ys];
            if p == 0.0 {
                continue;
            }
            for x in 0..nx {
                for y in 0..ny {
                    out[(xs * nx + x) * (yl * ny) + ys * ny + y] = p * single[x * ny + y];
                }
            }
        }
    }
    out
}

/// `TV(P_{X^n Y^n}, prod q_X q_{Y|X})`.
pub fn synthesis_tv(code: &SynthesisCode, q_x: &Pmf, q_ygx: &Channel) -> Result<f64> {
    check_target(code, q_x, q_ygx)?;
    let p = exact_induced_joint(code, q_x)?;
    let target = memoryless_target(q_x, q_ygx, code.n)?;
    Ok(tv_of(&p.table, &target))
}

/// `TV(Y_{X^n K}, uniform(K) x prod q_X)` where `Y_{X^n K}(x, k)` is the
/// average over `j` of `prod_t p(x_t | u_t(j, k)) / m0`.
pub fn key_independence_tv(code: &SynthesisCode, q_x: &Pmf) -> Result<f64> {
    check_source(code, q_x)?;
    let (n, m, m0) = (code.n, code.m, code.m0);
    budget::check(
        budget::terms(&[budget::pow(code.nx(), n), m as u128, m0 as u128, n as u128]),
        "key independence",
    )?;
    let qn = q_x.iid_power(n);
    let xr = code.aux.p_x_given_u.rows();
    let per_k: Vec<f64> = (0..m0)
        .into_par_iter()
        .map(|k| {
            let mut avg = vec![0.0; qn.len()];
            for j in 0..m {
                for (a, l) in avg.iter_mut().zip(word_log_table(xr, &code.codebook[j][k], code.nx())) {
                    *a += l.exp() / m as f64;
                }
            }
            avg.iter().zip(&qn).map(|(a, q)| (a - q).abs()).sum::<f64>()
        })
        .collect();
    Ok(0.5 * per_k.iter().sum::<f64>() / m0 as f64)
}

/// One row of a decay table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    pub mean_tv: f64,
    pub std_tv: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    /// Codebook sizes `(m, m0)` used at each `n`.
    pub sizes: Vec<(usize, usize)>,
}

impl DecayTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,mean_tv,std_tv,trials\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.n, csv_row(&[r.mean_tv, r.std_tv]), r.trials));
        }
        s
    }

    /// Least-squares slope of `ln(mean_tv)` against `n`; `None` with fewer
    /// than two rows or a zero mean.
    pub fn log_slope(&self) -> Option<f64> {
        if self.rows.len() < 2 || self.rows.iter().any(|r| r.mean_tv <= 0.0) {
            return None;
        }
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.n as f64, r.mean_tv.ln())).collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

/// Mean and sample standard deviation.
pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

/// How the per-code TV is obtained in a decay experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TvMode {
    #[default]
    Exact,
    MonteCarlo { trials: usize },
}

/// Average [`synthesis_tv`] over fresh codebooks, one per seed and `n`.
pub fn tv_decay_experiment(
    aux: &AuxDecomposition,
    q_x: &Pmf,
    q_ygx: &Channel,
    rates: RatePoint,
    n_list: &[usize],
    seeds: &[u64],
) -> Result<DecayTable> {
    tv_decay_experiment_with(aux, q_x, q_ygx, rates, n_list, seeds, TvMode::Exact)
}

/// [`tv_decay_experiment`] with a choice of TV evaluation.
pub fn tv_decay_experiment_with(
    aux: &AuxDecomposition,
    q_x: &Pmf,
    q_ygx: &Channel,
    rates: RatePoint,
    n_list: &[usize],
    seeds: &[u64],
    mode: TvMode,
) -> Result<DecayTable> {
    if seeds.is_empty() {
        return Err(Error::Parameter("at least one seed is required".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    let mut sizes = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut tvs = Vec::with_capacity(seeds.len());
        let mut size = (0, 0);
        for &s in seeds {
            let code = generate_code(aux, n, rates.r, rates.r0, derive(s, n as u64))?;
            size = (code.m, code.m0);
            let tv = match mode {
                TvMode::Exact => synthesis_tv(&code, q_x, q_ygx)?,
                TvMode::MonteCarlo { trials } => monte_carlo_tv(&code, q_x, q_ygx, trials, s)?.value(),
            };
            tvs.push(tv);
        }
        let (mean_tv, std_tv) = mean_std(&tvs);
        rows.push(DecayRow {
            n,
            mean_tv,
            std_tv,
            trials: seeds.len(),
        });
        sizes.push(size);
    }
    Ok(DecayTable { rows, sizes })
}

/// A detector's decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Genuine,
    Synthetic,
}

/// Estimated error pair of a detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    /// `P(Synthetic | genuine data)`.
    pub alpha: f64,
    /// `P(Genuine | synthetic data)`.
    pub beta: f64,
    /// Standard error of `alpha + beta`.
    pub sigma: f64,
    /// Exact synthesis TV when within budget.
    pub tv: Option<f64>,
    pub trials: usize,
}

fn error_rates<D>(code: &SynthesisCode, q_x: &Pmf, q_ygx: &Channel, detector: &D, trials: usize, seed: u64) -> Result<(f64, f64)>
where
    D: Fn(&[usize], &[usize]) -> Verdict + Sync,
{
    let counts = (0..trials as u64)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize)> {
            let mut rg = stream_rng(Stream::Detector, seed, 2 * i);
            let (x, y) = sample_genuine(q_x, q_ygx, code.n, &mut rg);
            let a = (detector(&x, &y) == Verdict::Synthetic) as usize;
            let mut rs = stream_rng(Stream::Detector, seed, 2 * i + 1);
            let (x, y) = sample_synthetic(code, q_x, &mut rs)?;
            let b = (detector(&x, &y) == Verdict::Genuine) as usize;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let (a, b) = counts.iter().fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    Ok((a as f64 / trials as f64, b as f64 / trials as f64))
}

/// Runs `detector` on `trials` genuine and `trials` synthetic blocks and
/// checks `alpha + beta >= 1 - TV - 3 sigma` when the exact TV is affordable.
pub fn detector_demo<D>(code: &SynthesisCode, q_x: &Pmf, q_ygx: &Channel, detector: &D, trials: usize, seed: u64) -> Result<DetectorReport>
where
    D: Fn(&[usize], &[usize]) -> Verdict + Sync,
{
    check_target(code, q_x, q_ygx)?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let (alpha, beta) = error_rates(code, q_x, q_ygx, detector, trials, seed)?;
    let t = trials as f64;
    let sigma = (alpha * (1.0 - alpha) / t + beta * (1.0 - beta) / t).sqrt();
    let tv = if code.exact_terms() <= budget::limit() {
        Some(synthesis_tv(code, q_x, q_ygx)?)
    } else {
        None
    };
    if let Some(tv) = tv {
        if alpha + beta < 1.0 - tv - 3.0 * sigma - 1e-12 {
            return Err(Error::Invariant(format!(
                "alpha + beta = {} below 1 - TV = {} by more than 3 sigma = {}",
                alpha + beta,
                1.0 - tv,
                3.0 * sigma
            )));
        }
    }
    Ok(DetectorReport {
        alpha,
        beta,
        sigma,
        tv,
        trials,
    })
}

/// A sampled TV estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TvEstimate {
    /// TV between the empirical pipeline distribution and the exact target.
    /// Biased upward by sampling noise.
    PlugIn { tv: f64, trials: usize },
    /// `1 - (alpha + beta)` of a likelihood-threshold detector whose threshold
    /// was fitted on a separate calibration sample; a lower bound on TV up to
    /// sampling error.
    DetectorBound { lower: f64, alpha: f64, beta: f64, trials: usize },
}

impl TvEstimate {
    pub fn value(&self) -> f64 {
        match *self {
            TvEstimate::PlugIn { tv, .. } => tv,
            TvEstimate::DetectorBound { lower, .. } => lower,
        }
    }
}

/// Sampled TV for codes too large for [`synthesis_tv`]: plug-in for
/// `n <= PLUGIN_MAX_N`, a detector lower bound otherwise.
pub fn monte_carlo_tv(code: &SynthesisCode, q_x: &Pmf, q_ygx: &Channel, trials: usize, seed: u64) -> Result<TvEstimate> {
    check_target(code, q_x, q_ygx)?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let n = code.n;
    if n <= PLUGIN_MAX_N {
        let ylen = code.ny().pow(n as u32);
        let cells = budget::terms(&[budget::pow(code.nx(), n), ylen as u128]);
        budget::check(cells, "plug-in table")?;
        let target = memoryless_target(q_x, q_ygx, n)?;
        let samples = (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(Stream::Experiment, seed, i);
                sample_synthetic(code, q_x, &mut rng).map(|(x, y)| seq_index(&x, code.nx()) * ylen + seq_index(&y, code.ny()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut emp = vec![0.0; target.len()];
        for c in samples {
            emp[c] += 1.0 / trials as f64;
        }
        return Ok(TvEstimate::PlugIn {
            tv: tv_of(&emp, &target),
            trials,
        });
    }
    // statistic: log-likelihood of y^n given x^n under the target channel
    let stat = |x: &[usize], y: &[usize]| -> f64 { x.iter().zip(y).map(|(&a, &b)| q_ygx.prob(a, b).ln()).sum() };
    let draw = |offset: u64| -> Result<(Vec<f64>, Vec<f64>)> {
        let pairs = (0..trials as u64)
            .into_par_iter()
            .map(|i| -> Result<(f64, f64)> {
                let mut rg = stream_rng(Stream::Detector, seed, offset + 2 * i);
                let (x, y) = sample_genuine(q_x, q_ygx, n, &mut rg);
                let mut rs = stream_rng(Stream::Detector, seed, offset + 2 * i + 1);
                let (xs, ys) = sample_synthetic(code, q_x, &mut rs)?;
                Ok((stat(&x, &y), stat(&xs, &ys)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pairs.into_iter().unzip())
    };
    let (cal_g, cal_s) = draw(0)?;
    let (thr, below_is_synthetic) = best_threshold(&cal_g, &cal_s);
    let (ev_g, ev_s) = draw(2 * trials as u64)?;
    let says_synth = |s: f64| (s <= thr) == below_is_synthetic;
    let alpha = ev_g.iter().filter(|&&s| says_synth(s)).count() as f64 / trials as f64;
    let beta = ev_s.iter().filter(|&&s| !says_synth(s)).count() as f64 / trials as f64;
    Ok(TvEstimate::DetectorBound {
        lower: (1.0 - alpha - beta).max(0.0),
        alpha,
        beta,
        trials,
    })
}

/// Threshold maximizing the empirical CDF gap between two samples, and
/// whether the synthetic sample lies below it.
fn best_threshold(genuine: &[f64], synthetic: &[f64]) -> (f64, bool) {
    let mut all: Vec<f64> = genuine.iter().chain(synthetic).copied().filter(|s| s.is_finite()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let cdf = |v: &[f64], t: f64| v.iter().filter(|&&s| s <= t).count() as f64 / v.len() as f64;
    let mut best = (f64::NEG_INFINITY, true, 0.0);
    for &t in &all {
        let gap = cdf(synthetic, t) - cdf(genuine, t);
        if gap.abs() > best.2 {
            best = (t, gap > 0.0, gap.abs());
        }
    }
    (best.0, best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn aux(p_u: Vec<f64>, xr: Vec<Vec<f64>>, yr: Vec<Vec<f64>>) -> AuxDecomposition {
        let nu = p_u.len();
        let labels: Vec<String> = (0..nu).map(|u| format!("u{u}")).collect();
        let nx = xr[0].len();
        let ny = yr[0].len();
        AuxDecomposition::new(
            Pmf::new(labels.clone(), p_u).unwrap(),
            Channel::new(labels.clone(), crate::prob::index_labels(nx), xr).unwrap(),
            Channel::new(labels, crate::prob::index_labels(ny), yr).unwrap(),
        )
        .unwrap()
    }

    /// `U = Y` witness of a BSC(p) with uniform input.
    fn bsc_aux(p: f64) -> AuxDecomposition {
        aux(
            vec![0.5, 0.5],
            vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
    }

    fn rng(s: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(s)
    }

    #[test]
    fn generation_shapes_and_determinism() {
        let a = bsc_aux(0.1);
        let c = generate_code(&a, 4, 0.5, 0.25, 9).unwrap();
        assert_eq!((c.m, c.m0), (4, 2));
        assert_eq!(c.codebook.len(), 4);
        assert!(c.codebook.iter().all(|r| r.len() == 2 && r.iter().all(|w| w.len() == 4)));
        assert_eq!(c, generate_code(&a, 4, 0.5, 0.25, 9).unwrap());
        assert_ne!(c, generate_code(&a, 4, 0.5, 0.25, 10).unwrap());
        let z = generate_code(&a, 3, 0.0, 0.0, 1).unwrap();
        assert_eq!((z.m, z.m0), (1, 1));
        assert!(matches!(generate_code(&a, 64, 1.0, 1.0, 0), Err(Error::Budget { .. })));
        assert_eq!(codebook_size(3, (5f64).log2() / 3.0).unwrap(), 5);
    }

    #[test]
    fn codebook_json_round_trip() {
        let c = generate_code(&bsc_aux(0.2), 3, 0.4, 0.3, 2).unwrap();
        let back = SynthesisCode::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(c, back);
        let mut bad = c.clone();
        bad.codebook[0][0][0] = 7;
        assert!(SynthesisCode::from_json(&bad.to_json().unwrap()).is_err());
    }

    #[test]
    fn encoder_examples() {
        let a = aux(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let code = SynthesisCode::from_codebook(a.clone(), 2, 1.0, 0.0, vec![vec![vec![0, 0]], vec![vec![0, 1]]]).unwrap();
        assert_eq!(encoder_posterior(&code, &[0, 1], 0).unwrap(), vec![0.0, 1.0]);
        assert_eq!(likelihood_encode(&code, &[0, 1], 0, &mut rng(1)).unwrap(), 1);
        // no codeword explains x: uniform fallback
        assert_eq!(encoder_posterior(&code, &[1, 1], 0).unwrap(), vec![0.5, 0.5]);
        assert!(likelihood_encode(&code, &[0, 2], 0, &mut rng(1)).is_err());
        assert!(likelihood_encode(&code, &[0, 1], 1, &mut rng(1)).is_err());

        let same = SynthesisCode::from_codebook(bsc_aux(0.3), 2, 1.0, 0.0, vec![vec![vec![0, 1]]; 3]).unwrap();
        let w = encoder_posterior(&same, &[1, 1], 0).unwrap();
        assert!(w.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));

        // likelihood ratio 3:1 at n = 1 with p(x|u) = (0.75, 0.25)
        let b = aux(
            vec![0.5, 0.5],
            vec![vec![0.75, 0.25], vec![0.25, 0.75]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let code = SynthesisCode::from_codebook(b, 1, 1.0, 0.0, vec![vec![vec![0]], vec![vec![1]]]).unwrap();
        let mut r = rng(5);
        let hits = (0..10_000)
            .filter(|_| likelihood_encode(&code, &[0], 0, &mut r).unwrap() == 0)
            .count();
        assert!((hits as f64 / 1e4 - 0.75).abs() < 0.02, "{hits}");
    }

    #[test]
    fn encoder_handles_long_blocks() {
        let a = bsc_aux(0.1);
        let code = generate_code(&a, 2000, 0.001, 0.0, 3).unwrap();
        let x = vec![1; 2000];
        let w = encoder_posterior(&code, &x, 0).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn decoder_examples() {
        let a = bsc_aux(0.1);
        let code = generate_code(&a, 5, 0.4, 0.2, 4).unwrap();
        let y = decode_sample(&code, 1, 0, &mut rng(2)).unwrap();
        assert_eq!(y, code.codebook[1][0]);
        assert!(decode_sample(&code, code.m, 0, &mut rng(2)).is_err());

        let flip = aux(vec![1.0], vec![vec![0.5, 0.5]], vec![vec![0.9, 0.1]]);
        let code = SynthesisCode::from_codebook(flip, 10_000, 0.0, 0.0, vec![vec![vec![0; 10_000]]]).unwrap();
        let y = decode_sample(&code, 0, 0, &mut rng(3)).unwrap();
        let rate = y.iter().sum::<usize>() as f64 / 1e4;
        assert!((rate - 0.1).abs() < 0.01, "{rate}");
    }

    #[test]
    fn exact_joint_examples() {
        // lossless relay
        let id = aux(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let code = SynthesisCode::from_codebook(id, 1, 1.0, 0.0, vec![vec![vec![0]], vec![vec![1]]]).unwrap();
        let q = Pmf::from_probs(vec![0.3, 0.7]).unwrap();
        let p = exact_induced_joint(&code, &q).unwrap();
        assert_eq!(p.table, vec![0.3, 0.0, 0.0, 0.7]);
        assert_eq!(p.provenance, Provenance::Exact);

        // decoder ignores the codeword
        let flat = aux(
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            vec![vec![0.2, 0.8], vec![0.2, 0.8]],
        );
        let code = generate_code(&flat, 2, 0.0, 0.0, 1).unwrap();
        let p = exact_induced_joint(&code, &q).unwrap();
        let py = Pmf::from_probs(vec![0.2, 0.8]).unwrap();
        let want = memoryless_target(&q, &Channel::from_rows(vec![py.probs().to_vec(); 2]).unwrap(), 2).unwrap();
        assert!(tv_of(&p.table, &want) < 1e-15);
    }

    #[test]
    fn target_layout() {
        let (q, w) = builtin::bsc(0.2).unwrap();
        let t = memoryless_target(&q, &w, 2).unwrap();
        // (x = 01, y = 11): 0.5 * 0.2 * 0.5 * 0.8
        assert!((t[seq_index(&[0, 1], 2) * 4 + seq_index(&[1, 1], 2)] - 0.04).abs() < 1e-15);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(seq_digits(6, 2, 3), vec![1, 1, 0]);
    }

    #[test]
    fn x_marginal_is_exact_and_factorization_holds() {
        let a = aux(
            vec![0.2, 0.5, 0.3],
            vec![vec![0.6, 0.4], vec![0.0, 1.0], vec![0.5, 0.5]],
            vec![vec![0.3, 0.7], vec![0.9, 0.1], vec![0.0, 1.0]],
        );
        let q = Pmf::from_probs(vec![0.35, 0.65]).unwrap();
        for seed in 0..5 {
            let code = generate_code(&a, 2, 0.6, 0.5, seed).unwrap();
            let p = exact_induced_joint(&code, &q).unwrap();
            for (got, want) in p.x_marginal().iter().zip(q.iid_power(2)) {
                assert!((got - want).abs() < 1e-12);
            }
            // X and Y conditionally independent given (J, K)
            let full = exact_index_joint(&code, &q).unwrap();
            let (xl, yl, mk) = (4, 4, code.m * code.m0);
            for jk in 0..mk {
                let cell = |x: usize, y: usize| full[(x * yl + y) * mk + jk];
                let tot: f64 = (0..xl).flat_map(|x| (0..yl).map(move |y| (x, y))).map(|(x, y)| cell(x, y)).sum();
                if tot == 0.0 {
                    continue;
                }
                for x in 0..xl {
                    for y in 0..yl {
                        let px: f64 = (0..yl).map(|b| cell(x, b)).sum();
                        let py: f64 = (0..xl).map(|b| cell(b, y)).sum();
                        assert!((cell(x, y) * tot - px * py).abs() < 1e-14);
                    }
                }
            }
            let summed: Vec<f64> = full.chunks(mk).map(|c| c.iter().sum()).collect();
            assert!(tv_of(&summed, &p.table) < 1e-14);
        }
    }

    #[test]
    fn synthesis_tv_examples() {
        let (q, w) = builtin::bsc(0.1).unwrap();
        let a = bsc_aux(0.1);
        // a hand-built joint equal to the target
        let perfect = aux(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        );
        let code = SynthesisCode::from_codebook(perfect, 1, 1.0, 0.0, vec![vec![vec![0]], vec![vec![1]]]).unwrap();
        assert!(synthesis_tv(&code, &q, &w).unwrap() < 1e-15);

        // no rate against a dependent target: the output is a product law
        let code = generate_code(&a, 1, 0.0, 0.0, 3).unwrap();
        let tv = synthesis_tv(&code, &q, &w).unwrap();
        let joint = q.through(&w).unwrap();
        let best_product = {
            // any product with the right X marginal: X uniform, Y ~ (b, 1-b)
            (0..=1000)
                .map(|i| {
                    let b = i as f64 / 1000.0;
                    let t: Vec<f64> = vec![0.5 * b, 0.5 * (1.0 - b), 0.5 * b, 0.5 * (1.0 - b)];
                    tv_of(&t, joint.table())
                })
                .fold(f64::INFINITY, f64::min)
        };
        assert!(tv >= best_product - 1e-12, "{tv} < {best_product}");

        assert!(synthesis_tv(&code, &Pmf::uniform(3), &w).is_err());
    }

    #[test]
    fn key_independence_examples() {
        let q = Pmf::from_probs(vec![0.3, 0.7]).unwrap();
        let a = aux(vec![1.0], vec![vec![0.3, 0.7]], vec![vec![0.5, 0.5]]);
        let code = generate_code(&a, 3, 0.0, 0.0, 0).unwrap();
        assert!(key_independence_tv(&code, &q).unwrap() < 1e-15);

        let a = bsc_aux(0.05);
        let u = Pmf::uniform(2);
        let tvs: Vec<f64> = [1, 3, 5]
            .iter()
            .map(|&n| key_independence_tv(&generate_code(&a, n, 0.0, 1.0, 7).unwrap(), &u).unwrap())
            .collect();
        assert!(tvs.iter().all(|&t| t > 0.3), "{tvs:?}");
    }

    #[test]
    fn sampling_matches_exact() {
        let a = aux(
            vec![0.4, 0.6],
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            vec![vec![0.6, 0.4], vec![0.1, 0.9]],
        );
        let q = a.reconstructed_joint().unwrap().marginal(0).unwrap();
        let code = generate_code(&a, 2, 0.7, 0.4, 11).unwrap();
        let p = exact_induced_joint(&code, &q).unwrap();
        let trials = 100_000;
        let mut counts = vec![0usize; p.table.len()];
        let mut r = rng(17);
        for _ in 0..trials {
            let (x, y) = sample_synthetic(&code, &q, &mut r).unwrap();
            counts[seq_index(&x, 2) * 4 + seq_index(&y, 2)] += 1;
        }
        for (c, &pr) in counts.iter().zip(&p.table) {
            let f = *c as f64 / trials as f64;
            let sd = (pr * (1.0 - pr) / trials as f64).sqrt();
            assert!((f - pr).abs() <= 3.0 * sd + 1e-4, "{f} vs {pr}");
        }
    }

    #[test]
    fn decay_table_shape() {
        let (q, w) = builtin::bsc(0.1).unwrap();
        let t = tv_decay_experiment(&bsc_aux(0.1), &q, &w, RatePoint::new(0.7, 0.6), &[2], &[1, 2, 3]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].trials, 3);
        assert!(t.to_csv().starts_with("n,mean_tv,std_tv,trials\n2,"));
        assert!(t.log_slope().is_none());
    }

    #[test]
    fn detector_examples() {
        let (q, w) = builtin::bsc(0.1).unwrap();
        let code = generate_code(&bsc_aux(0.1), 2, 0.5, 0.5, 1).unwrap();
        let r = detector_demo(&code, &q, &w, &|_: &[usize], _: &[usize]| Verdict::Genuine, 200, 0).unwrap();
        assert_eq!((r.alpha, r.beta), (0.0, 1.0));
        let r = detector_demo(&code, &q, &w, &|_: &[usize], _: &[usize]| Verdict::Synthetic, 200, 0).unwrap();
        assert_eq!((r.alpha, r.beta), (1.0, 0.0));

        // likelihood-ratio detector: alpha + beta = 1 - TV in expectation
        let p = exact_induced_joint(&code, &q).unwrap();
        let target = memoryless_target(&q, &w, 2).unwrap();
        let lr = |x: &[usize], y: &[usize]| {
            let c = seq_index(x, 2) * 4 + seq_index(y, 2);
            if p.table[c] > target[c] {
                Verdict::Synthetic
            } else {
                Verdict::Genuine
            }
        };
        let r = detector_demo(&code, &q, &w, &lr, 20_000, 3).unwrap();
        let tv = r.tv.unwrap();
        assert!((r.alpha + r.beta - (1.0 - tv)).abs() < 3.0 * r.sigma + 1e-3, "{r:?}");
    }

    #[test]
    fn monte_carlo_modes() {
        let (q, w) = builtin::bsc(0.1).unwrap();
        let code = generate_code(&bsc_aux(0.1), 2, 0.8, 0.7, 2).unwrap();
        let exact = synthesis_tv(&code, &q, &w).unwrap();
        let TvEstimate::PlugIn { tv, .. } = monte_carlo_tv(&code, &q, &w, 50_000, 1).unwrap() else {
            panic!("expected plug-in")
        };
        assert!((tv - exact).abs() < 0.02, "{tv} vs {exact}");

        let bad = generate_code(&bsc_aux(0.1), 6, 0.05, 0.0, 2).unwrap();
        let est = monte_carlo_tv(&bad, &q, &w, 4000, 1).unwrap();
        assert!(matches!(est, TvEstimate::DetectorBound { .. }));
        assert!(est.value() > 0.05, "{est:?}");
        assert!(est.value() <= synthesis_tv(&bad, &q, &w).unwrap() + 0.05);
    }
}
