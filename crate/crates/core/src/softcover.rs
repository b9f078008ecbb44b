//! Soft covering: the output distribution induced by passing a random
//! codebook through a memoryless channel, its distance from the i.i.d.
//! target, one-shot bounds on the expected distance and the exponential
//! rate at which it vanishes.

use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget;
use crate::error::{Error, Result};
use crate::info::{
    density_cells, entropy, log2_density_moment, matrix_marginals, mutual_information_of,
    renyi_bar_of, tv_of,
};
use crate::output::csv_row;
use crate::prob::{index_labels, Channel, JointPmf, Pmf};
use crate::rng::{derive, sample_index, stream_rng, Stream};
use crate::synthesis::{codebook_size, mean_std};

/// Largest order searched for the exponents.
pub const ALPHA_CAP: f64 = 64.0;
/// Smallest second order searched for the general exponent.
pub const ALPHA_PRIME_FLOOR: f64 = -8.0;
/// Largest number of codewords in the mean-resolvability search.
pub const RESOLVABILITY_MAX_M: usize = 4;
/// Largest number of candidate codewords in the mean-resolvability search.
pub const RESOLVABILITY_MAX_WORDS: usize = 64;
/// Weight grid denominator of the mean-resolvability search.
pub const RESOLVABILITY_GRID: usize = 12;

/// A list of codewords over a channel input alphabet of size `nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftCodebook {
    pub n: usize,
    pub nu: usize,
    pub entries: Vec<Vec<usize>>,
}

impl SoftCodebook {
    pub fn new(n: usize, nu: usize, entries: Vec<Vec<usize>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Parameter("codebook has no entries".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.len() != n {
                return Err(Error::Shape(format!("entry {i} has length {}, expected {n}", e.len())));
            }
            if let Some(&u) = e.iter().find(|&&u| u >= nu) {
                return Err(Error::OutOfRange(format!("entry {i} uses symbol {u} of {nu}")));
            }
        }
        Ok(SoftCodebook { n, nu, entries })
    }

    /// `m` codewords with i.i.d. letters drawn from `dist`.
    pub fn random<R: Rng + ?Sized>(dist: &Pmf, m: usize, n: usize, rng: &mut R) -> Result<Self> {
        let entries = (0..m)
            .map(|_| (0..n).map(|_| sample_index(dist.probs(), rng)).collect())
            .collect();
        SoftCodebook::new(n, dist.len(), entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `prod_t W(v_t | word_t)` over all `v^n`, first letter most significant.
fn word_table(channel: &Channel, word: &[usize]) -> Vec<f64> {
    let nv = channel.n_outputs();
    let mut out = vec![1.0];
    for &u in word {
        let row = channel.row(u);
        let mut next = Vec::with_capacity(out.len() * nv);
        for &a in &out {
            next.extend(row.iter().map(|&p| a * p));
        }
        out = next;
    }
    out
}

fn add_scaled(acc: &mut [f64], t: &[f64], w: f64) {
    for (a, &b) in acc.iter_mut().zip(t) {
        *a += w * b;
    }
}

fn check_channel(nu: usize, channel: &Channel) -> Result<()> {
    if channel.n_inputs() != nu {
        return Err(Error::AlphabetMismatch(format!(
            "codewords use {nu} symbols, channel has {} inputs",
            channel.n_inputs()
        )));
    }
    Ok(())
}

fn output_terms(n: usize, nv: usize, m: usize) -> u128 {
    budget::terms(&[n.max(1) as u128, budget::pow(nv, n), m as u128])
}

/// Output distribution over `V^n` when codeword `i` is selected with
/// probability `weights[i]`.
pub fn induced_output(codebook: &SoftCodebook, channel: &Channel, weights: &Pmf) -> Result<Pmf> {
    check_channel(codebook.nu, channel)?;
    if weights.len() != codebook.len() {
        return Err(Error::Shape(format!(
            "{} weights for {} codewords",
            weights.len(),
            codebook.len()
        )));
    }
    let nv = channel.n_outputs();
    budget::check(output_terms(codebook.n, nv, codebook.len()), "induced output")?;
    let mut acc = vec![0.0; nv.pow(codebook.n as u32)];
    for (e, &w) in codebook.entries.iter().zip(weights.probs()) {
        if w > 0.0 {
            add_scaled(&mut acc, &word_table(channel, e), w);
        }
    }
    Pmf::normalized(index_labels(acc.len()), acc)
}

/// Distance between the uniformly-selected induced output and `target^n`.
pub fn soft_cover_tv(codebook: &SoftCodebook, channel: &Channel, target: &Pmf) -> Result<f64> {
    if target.len() != channel.n_outputs() {
        return Err(Error::AlphabetMismatch(format!(
            "target has {} atoms, channel {} outputs",
            target.len(),
            channel.n_outputs()
        )));
    }
    let p = induced_output(codebook, channel, &Pmf::uniform(codebook.len()))?;
    Ok(tv_of(p.probs(), &target.iid_power(codebook.n)))
}

/// How the expectation over random codebooks is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trials {
    Sampled(usize),
    /// Every codebook weighted by its probability.
    Exhaustive,
}

impl FromStr for Trials {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("exhaustive") {
            return Ok(Trials::Exhaustive);
        }
        s.parse::<usize>()
            .map(Trials::Sampled)
            .map_err(|_| Error::Parse(format!("trials must be a count or \"exhaustive\", got {s:?}")))
    }
}

impl std::fmt::Display for Trials {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Trials::Sampled(k) => write!(f, "{k}"),
            Trials::Exhaustive => f.write_str("exhaustive"),
        }
    }
}

/// Mean and spread of the distance over codebooks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvStats {
    pub mean: f64,
    /// Sample standard deviation, or the exact one when enumerated.
    pub std: f64,
    /// Number of codebooks drawn or enumerated.
    pub count: u128,
}

/// Expected [`soft_cover_tv`] over codebooks of `m` i.i.d. codewords drawn
/// from `codebook_dist`, against the channel output of `codebook_dist`.
pub fn expected_tv(
    codebook_dist: &Pmf,
    channel: &Channel,
    m: usize,
    n: usize,
    trials: Trials,
    seed: u64,
) -> Result<TvStats> {
    check_channel(codebook_dist.len(), channel)?;
    if m == 0 {
        return Err(Error::Parameter("codebook size must be positive".into()));
    }
    let target = codebook_dist.push(channel)?;
    match trials {
        Trials::Sampled(0) => Err(Error::Parameter("at least one trial is required".into())),
        Trials::Sampled(k) => {
            budget::check(
                budget::terms(&[k as u128, output_terms(n, channel.n_outputs(), m)]),
                "expected_tv trials",
            )?;
            let tvs: Vec<f64> = (0..k)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(Stream::SoftCodebook, seed, i as u64);
                    let cb = SoftCodebook::random(codebook_dist, m, n, &mut rng)?;
                    soft_cover_tv(&cb, channel, &target)
                })
                .collect::<Result<_>>()?;
            let (mean, std) = mean_std(&tvs);
            Ok(TvStats { mean, std, count: k as u128 })
        }
        Trials::Exhaustive => exhaustive_tv(codebook_dist, channel, &target, m, n),
    }
}

fn exhaustive_tv(dist: &Pmf, channel: &Channel, target: &Pmf, m: usize, n: usize) -> Result<TvStats> {
    let supp = dist.support();
    let s = supp.len();
    let count = budget::pow(s, m * n);
    let nv = channel.n_outputs();
    budget::check(
        budget::terms(&[count, output_terms(n, nv, m)]),
        "exhaustive codebook enumeration",
    )?;
    let count = count as u64;
    let words = s.pow(n as u32);
    let tables: Vec<(f64, Vec<f64>)> = (0..words)
        .map(|w| {
            let word: Vec<usize> = digits(w, s, n).into_iter().map(|d| supp[d]).collect();
            let p: f64 = word.iter().map(|&u| dist.prob(u)).product();
            (p, word_table(channel, &word))
        })
        .collect();
    let tgt = target.iid_power(n);
    const CHUNK: u64 = 4096;
    let chunks = count.div_ceil(CHUNK);
    let partial: Vec<[f64; 3]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [0.0; 3];
            let mut out = vec![0.0; tgt.len()];
            for code in c * CHUNK..((c + 1) * CHUNK).min(count) {
                out.iter_mut().for_each(|x| *x = 0.0);
                let mut p = 1.0;
                let mut rest = code as usize;
                for _ in 0..m {
                    let w = rest % words;
                    rest /= words;
                    p *= tables[w].0;
                    add_scaled(&mut out, &tables[w].1, 1.0 / m as f64);
                }
                let tv = tv_of(&out, &tgt);
                acc[0] += p;
                acc[1] += p * tv;
                acc[2] += p * tv * tv;
            }
            acc
        })
        .collect();
    let mut tot = [0.0; 3];
    for a in partial {
        for i in 0..3 {
            tot[i] += a[i];
        }
    }
    let mean = tot[1] / tot[0];
    let var = (tot[2] / tot[0] - mean * mean).max(0.0);
    Ok(TvStats {
        mean,
        std: var.sqrt(),
        count: count as u128,
    })
}

/// Base-`k` digits of `x`, most significant first.
fn digits(mut x: usize, k: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for slot in d.iter_mut().rev() {
        *slot = x % k;
        x /= k;
    }
    d
}

/// Terms of the one-shot bound: probability of the atypical set and the
/// penalty on the typical set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverTerms {
    pub tau: f64,
    pub p_atypical: f64,
    pub delta: f64,
    /// Closed-form upper bound on `delta` that ignores the distribution.
    pub delta_relaxed: f64,
}

impl CoverTerms {
    pub fn bound(&self) -> f64 {
        self.p_atypical + self.delta
    }

    pub fn relaxed_bound(&self) -> f64 {
        self.p_atypical + self.delta_relaxed
    }
}

/// Positive cells `(a, v, p, d)` of an `(A, V)` table and the sum
/// `sum_v P(v) sqrt( sum_a P(a|v) 2^d 1{d <= tau} )` with `P(d > tau)`.
fn cover_sums(cells: &[(usize, usize, f64, f64)], pv: &[f64], tau: f64) -> (f64, f64) {
    let mut inner = vec![0.0; pv.len()];
    let mut atyp = 0.0;
    for &(_, v, p, d) in cells {
        if d <= tau {
            inner[v] += p / pv[v] * d.exp2();
        } else {
            atyp += p;
        }
    }
    let outer = pv
        .iter()
        .zip(&inner)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &s)| p * s.sqrt())
        .sum();
    (atyp.min(1.0), outer)
}

fn pair_dims(joint: &JointPmf) -> Result<(usize, usize)> {
    match joint.dims()[..] {
        [a, b] => Ok((a, b)),
        _ => Err(Error::Shape(format!("expected a pair joint, got dims {:?}", joint.dims()))),
    }
}

/// Bound on the expected distance for a codebook indexed by `W` with
/// codewords drawn from `P(U|W)`, evaluated on the joint of `(W, U, V)`.
/// The atypical set is where `i(w,u;v) - i(w)` exceeds `tau`.
pub fn theorem2_bound(joint: &JointPmf, tau: f64) -> Result<CoverTerms> {
    let dims = joint.dims();
    let [nw, nu, nv] = dims[..] else {
        return Err(Error::Shape(format!("expected (W, U, V), got dims {dims:?}")));
    };
    let t = joint.table();
    let pw = joint.marginal(0)?;
    let (pwu, pv) = matrix_marginals(t, nw * nu, nv);
    let mut cells = Vec::new();
    for a in 0..nw * nu {
        for v in 0..nv {
            let p = t[a * nv + v];
            if p > 0.0 {
                let i = (p / (pwu[a] * pv[v])).log2();
                cells.push((a, v, p, i + pw.prob(a / nu).log2()));
            }
        }
    }
    let (p_atypical, s) = cover_sums(&cells, &pv, tau);
    Ok(CoverTerms {
        tau,
        p_atypical,
        delta: 0.5 * s,
        delta_relaxed: 0.5 * (tau / 2.0).exp2(),
    })
}

/// Bound for `m` i.i.d. codewords on the pair joint of `(U, V)`; the
/// atypical set is where `i(u;v)` exceeds `tau`.
pub fn corollary1_bound(joint: &JointPmf, m: usize, tau: f64) -> Result<CoverTerms> {
    let (nu, nv) = pair_dims(joint)?;
    if m == 0 {
        return Err(Error::Parameter("codebook size must be positive".into()));
    }
    let (_, pv) = matrix_marginals(joint.table(), nu, nv);
    let cells = density_cells(joint.table(), nu, nv);
    let (p_atypical, s) = cover_sums(&cells, &pv, tau);
    let scale = 1.0 / (2.0 * (m as f64).sqrt());
    Ok(CoverTerms {
        tau,
        p_atypical,
        delta: scale * s,
        delta_relaxed: scale * (tau / 2.0).exp2(),
    })
}

/// [`corollary1_bound`] minimized over `tau`. Both terms are step functions
/// of `tau` that jump only at information density values, so the minimum
/// is attained at one of them (or below all, where the bound is 1).
pub fn corollary1_min(joint: &JointPmf, m: usize) -> Result<CoverTerms> {
    let (nu, nv) = pair_dims(joint)?;
    let mut taus: Vec<f64> = density_cells(joint.table(), nu, nv).iter().map(|c| c.3).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let lowest = taus.first().copied().unwrap_or(0.0) - 1.0;
    let mut best = corollary1_bound(joint, m, lowest)?;
    for tau in taus {
        let c = corollary1_bound(joint, m, tau)?;
        if c.bound() < best.bound() {
            best = c;
        }
    }
    Ok(best)
}

/// One point on the Rényi information curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenyiSample {
    pub alpha: f64,
    pub i_breve: f64,
    pub i_bar: f64,
}

/// Exponential decay rates (bits per symbol) of the expected distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub rate: f64,
    pub mutual_information: f64,
    /// General exponent and its maximizing `(alpha, alpha')`.
    pub gamma: f64,
    pub gamma_argmax: (f64, f64),
    /// Exponent restricted to `alpha` in `[1, 2]`.
    pub gamma_hat: f64,
    pub gamma_hat_argmax: f64,
    /// Exponent using only the ordinary Rényi information.
    pub gamma_hathat: f64,
    pub gamma_hathat_argmax: f64,
    /// Set when the last maximizer sits at [`ALPHA_CAP`].
    pub capped: bool,
    /// Slope of the Rényi information at `alpha = 1`.
    pub delta_i: f64,
    pub curve: Vec<RenyiSample>,
}

impl ExponentReport {
    /// `alpha,I_breve,I_bar` rows of the Rényi curves.
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("alpha,I_breve,I_bar\n");
        for c in &self.curve {
            s.push_str(&csv_row(&[c.alpha, c.i_breve, c.i_bar]));
            s.push('\n');
        }
        s
    }
}

struct PairTable<'a> {
    t: &'a [f64],
    nu: usize,
    nv: usize,
    mi: f64,
}

impl PairTable<'_> {
    fn breve(&self, alpha: f64) -> f64 {
        if alpha <= 1.0 {
            return self.mi;
        }
        log2_density_moment(self.t, self.nu, self.nv, alpha - 1.0) / (alpha - 1.0)
    }

    fn bar(&self, alpha: f64) -> f64 {
        if alpha == 1.0 {
            return self.mi;
        }
        renyi_bar_of(self.t, self.nu, self.nv, alpha)
    }
}

/// Orders just above 1 on a log scale followed by the rest of `[1, hi]`.
fn alpha_grid(hi: f64, k: usize) -> Vec<f64> {
    let top = (hi - 1.0).log10();
    let mut g = vec![1.0];
    g.extend((0..k).map(|i| 1.0 + 10f64.powf(-8.0 + (top + 8.0) * i as f64 / (k - 1) as f64)));
    g
}

/// Golden-section refinement of `f` on `[a, b]`, returning the best of the
/// refined point and `start`.
fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, start: (f64, f64)) -> (f64, f64) {
    const PHI: f64 = 0.618_033_988_749_895;
    let mut c = b - PHI * (b - a);
    let mut d = a + PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + PHI * (b - a);
            fd = f(d);
        }
    }
    let (x, fx) = if fc > fd { (c, fc) } else { (d, fd) };
    if fx > start.1 {
        (x, fx)
    } else {
        start
    }
}

/// Grid search followed by golden refinement around the best grid point.
fn maximize_1d(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> (f64, f64) {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let i = (0..grid.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    golden_max(f, lo, hi, (grid[i], vals[i]))
}

/// Exponents of the expected soft-covering distance at codebook rate
/// `rate` for the pair joint of `(U, V)`.
pub fn exponents(joint: &JointPmf, rate: f64) -> Result<ExponentReport> {
    let (nu, nv) = pair_dims(joint)?;
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::Parameter(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let pt = PairTable {
        t: joint.table(),
        nu,
        nv,
        mi: mutual_information_of(joint.table(), nu, nv),
    };
    let general = |a: f64, ap: f64| -> f64 {
        let den = 2.0 * a - ap;
        if a <= 1.0 || den <= 0.0 {
            return 0.0;
        }
        let ib = pt.breve(a);
        (a - 1.0) / den * (rate - ib + (ap - 1.0) * (ib - pt.bar(ap)))
    };

    let hat = |a: f64| (a - 1.0) / a * (rate - pt.breve(a));
    let (a_hat, g_hat) = maximize_1d(&hat, &alpha_grid(2.0, 200));
    let hathat = |a: f64| general(a, 1.0);
    let (a_hh, g_hh) = maximize_1d(&hathat, &alpha_grid(ALPHA_CAP, 300));

    // two-dimensional search, then alternating golden refinement
    let ag = alpha_grid(ALPHA_CAP, 120);
    let apg: Vec<f64> = (0..=120)
        .map(|i| ALPHA_PRIME_FLOOR + (2.0 - ALPHA_PRIME_FLOOR) * i as f64 / 120.0)
        .collect();
    let breve: Vec<f64> = ag.iter().map(|&a| pt.breve(a)).collect();
    let bar: Vec<f64> = apg.iter().map(|&a| pt.bar(a)).collect();
    let mut best = ((1.0, 1.0), 0.0);
    for (i, &a) in ag.iter().enumerate() {
        for (j, &ap) in apg.iter().enumerate() {
            let den = 2.0 * a - ap;
            if a <= 1.0 || den <= 0.0 {
                continue;
            }
            let v = (a - 1.0) / den * (rate - breve[i] + (ap - 1.0) * (breve[i] - bar[j]));
            if v > best.1 {
                best = ((a, ap), v);
            }
        }
    }
    for cand in [((a_hat, a_hat), general(a_hat, a_hat)), ((a_hh, 1.0), g_hh)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    let ((mut a, mut ap), mut g) = best;
    for _ in 0..6 {
        let fa = |x: f64| general(x, ap);
        let (x, v) = golden_max(&fa, (1.0 + (a - 1.0) * 0.5).max(1.0), (a * 2.0).min(ALPHA_CAP), (a, g));
        a = x;
        g = v;
        let fap = |y: f64| general(a, y);
        let (y, v) = golden_max(&fap, (ap - 1.0).max(ALPHA_PRIME_FLOOR), (ap + 1.0).min(2.0), (ap, g));
        ap = y;
        g = v;
    }

    let h = 1e-5;
    let delta_i = (pt.breve(1.0 + h) - pt.mi) / h;
    let curve = (0..=20)
        .map(|i| {
            let alpha = 1.0 + i as f64 / 20.0;
            RenyiSample {
                alpha,
                i_breve: pt.breve(alpha),
                i_bar: pt.bar(alpha),
            }
        })
        .collect();
    Ok(ExponentReport {
        rate,
        mutual_information: pt.mi,
        gamma: g.max(0.0),
        gamma_argmax: (a, ap),
        gamma_hat: g_hat.max(0.0),
        gamma_hat_argmax: a_hat,
        gamma_hathat: g_hh.max(0.0),
        gamma_hathat_argmax: a_hh,
        capped: a_hh >= ALPHA_CAP * (1.0 - 1e-6),
        delta_i,
        curve,
    })
}

/// `(3/2) 2^{-gamma n}`: the block-length-`n` bound on the expected distance
/// implied by the general exponent.
pub fn lemma2_bound(joint: &JointPmf, rate: f64, n: usize) -> Result<f64> {
    let g = exponents(joint, rate)?.gamma;
    Ok(1.5 * (-g * n as f64).exp2())
}

/// One row of a soft-covering decay table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftDecayRow {
    pub n: usize,
    pub m: usize,
    pub mean_tv: f64,
    pub std: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftDecayTable {
    pub rate: f64,
    pub rows: Vec<SoftDecayRow>,
}

impl SoftDecayTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,mean_tv,std,bound\n");
        for r in &self.rows {
            s.push_str(&format!("{},{}\n", r.n, csv_row(&[r.mean_tv, r.std, r.bound])));
        }
        s
    }
}

/// Expected distance at `M = ceil(2^{n rate})` for each `n`, next to the
/// exponential bound.
pub fn soft_decay(
    codebook_dist: &Pmf,
    channel: &Channel,
    rate: f64,
    n_list: &[usize],
    trials: Trials,
    seed: u64,
) -> Result<SoftDecayTable> {
    let joint = codebook_dist.through(channel)?;
    let gamma = exponents(&joint, rate)?.gamma;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let m = codebook_size(n, rate)?;
        let st = expected_tv(codebook_dist, channel, m, n, trials, derive(seed, n as u64))?;
        rows.push(SoftDecayRow {
            n,
            m,
            mean_tv: st.mean,
            std: st.std,
            bound: 1.5 * (-gamma * n as f64).exp2(),
        });
    }
    Ok(SoftDecayTable { rate, rows })
}

/// Block length, number of random codebooks and seed of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimRun {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Outcome of a coding simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
    /// Smallest slack in the rate conditions; positive inside the region.
    pub margin: f64,
}

fn run_trials(run: SimRun, terms_per_trial: u128, f: impl Fn(usize) -> Result<f64> + Sync + Send) -> Result<(f64, f64)> {
    if run.trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    budget::check(budget::terms(&[run.trials as u128, terms_per_trial]), "simulation")?;
    let v: Vec<f64> = (0..run.trials).into_par_iter().map(f).collect::<Result<_>>()?;
    Ok(mean_std(&v))
}

/// Codeword law for the source-indexed encoder.
#[derive(Debug, Clone, PartialEq)]
pub enum CodebookLaw {
    /// Letters i.i.d. from a fixed distribution.
    Iid(Pmf),
    /// Letter `t` drawn from `P(U | w_t)`; needs one source letter per symbol.
    Synchronous(Channel),
}

/// Encoder whose codebook is indexed by `floor(r n)` source letters and a
/// uniform index at rate `rate`; the output is compared with the channel
/// output of the codeword marginal.
pub fn source_encoder_sim(
    source: &Pmf,
    law: &CodebookLaw,
    channel: &Channel,
    rate: f64,
    r: f64,
    run: SimRun,
) -> Result<SimSummary> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Parameter(format!("source letter ratio must be nonnegative, got {r}")));
    }
    let n = run.n;
    let k = (r * n as f64 + 1e-9).floor() as usize;
    let p_u = match law {
        CodebookLaw::Iid(p) => p.clone(),
        CodebookLaw::Synchronous(c) => {
            if k != n {
                return Err(Error::Parameter(format!(
                    "synchronous codebook needs {n} source letters, got {k}"
                )));
            }
            source.push(c)?
        }
    };
    check_channel(p_u.len(), channel)?;
    let m = codebook_size(n, rate)?;
    let nw = source.len();
    let seqs = budget::pow(nw, k);
    let target = p_u.push(channel)?.iid_power(n);
    let margin = rate + r * entropy(source) - mutual_information_of(p_u.through(channel)?.table(), p_u.len(), channel.n_outputs());
    let per = budget::terms(&[seqs, output_terms(n, channel.n_outputs(), m)]);
    let (mean, std) = run_trials(run, per, |i| {
        let mut rng = stream_rng(Stream::SoftCodebook, run.seed, i as u64);
        let mut acc = vec![0.0; target.len()];
        for s in 0..seqs as usize {
            let w = digits(s, nw, k);
            let pw: f64 = w.iter().map(|&a| source.prob(a)).product();
            for _ in 0..m {
                let word: Vec<usize> = match law {
                    CodebookLaw::Iid(p) => (0..n).map(|_| sample_index(p.probs(), &mut rng)).collect(),
                    CodebookLaw::Synchronous(c) => w.iter().map(|&a| sample_index(c.row(a), &mut rng)).collect(),
                };
                if pw > 0.0 {
                    add_scaled(&mut acc, &word_table(channel, &word), pw / m as f64);
                }
            }
        }
        Ok(tv_of(&acc, &target))
    })?;
    Ok(SimSummary { mean, std, trials: run.trials, margin })
}

/// Pairs `(w, u)` flattened as `w * nu + u`, the input convention of the
/// two-layer channels below.
fn joint_input(p_w: &Pmf, p_u_given_w: &Channel, channel: &Channel) -> Result<(usize, usize)> {
    let (nw, nu) = (p_w.len(), p_u_given_w.n_outputs());
    if p_u_given_w.n_inputs() != nw {
        return Err(Error::AlphabetMismatch(format!(
            "P(U|W) has {} inputs for {nw} outer symbols",
            p_u_given_w.n_inputs()
        )));
    }
    check_channel(nw * nu, channel)?;
    Ok((nw, nu))
}

/// Superposition codebook: `ceil(2^{n r1})` outer words drawn from `p_w`,
/// and for every distinct outer word `ceil(2^{n r2})` inner words drawn
/// letterwise from `P(U|W)`. `channel` takes the pair `(w, u)`.
pub fn superposition_sim(
    p_w: &Pmf,
    p_u_given_w: &Channel,
    channel: &Channel,
    r1: f64,
    r2: f64,
    run: SimRun,
) -> Result<SimSummary> {
    let (nw, nu) = joint_input(p_w, p_u_given_w, channel)?;
    let n = run.n;
    let (m1, m2) = (codebook_size(n, r1)?, codebook_size(n, r2)?);
    let nv = channel.n_outputs();
    let mut pwu = Vec::with_capacity(nw * nu);
    for w in 0..nw {
        pwu.extend(p_u_given_w.row(w).iter().map(|&p| p_w.prob(w) * p));
    }
    let mut t = vec![0.0; nw * nu * nv];
    let mut q_v = vec![0.0; nv];
    for (a, &p) in pwu.iter().enumerate() {
        for v in 0..nv {
            t[a * nv + v] = p * channel.prob(a, v);
            q_v[v] += t[a * nv + v];
        }
    }
    let i_wu_v = mutual_information_of(&t, nw * nu, nv);
    let mut wv = vec![0.0; nw * nv];
    for a in 0..nw * nu {
        for v in 0..nv {
            wv[(a / nu) * nv + v] += t[a * nv + v];
        }
    }
    let i_w_v = mutual_information_of(&wv, nw, nv);
    let margin = (r1 - i_w_v)
        .min(r2 - (i_wu_v - entropy(p_w)))
        .min(r1 + r2 - i_wu_v);
    let target = Pmf::normalized(index_labels(nv), q_v)?.iid_power(n);
    let per = output_terms(n, nv, m1 * m2);
    let (mean, std) = run_trials(run, per, |i| {
        let mut rng_w = stream_rng(Stream::SoftCodebook, derive(run.seed, 1), i as u64);
        let mut rng_u = stream_rng(Stream::SoftCodebook, run.seed, i as u64);
        let mut outer: Vec<(Vec<usize>, usize)> = Vec::new();
        for _ in 0..m1 {
            let w: Vec<usize> = (0..n).map(|_| sample_index(p_w.probs(), &mut rng_w)).collect();
            match outer.iter_mut().find(|(x, _)| *x == w) {
                Some(e) => e.1 += 1,
                None => outer.push((w, 1)),
            }
        }
        let mut acc = vec![0.0; target.len()];
        for (w, mult) in &outer {
            for _ in 0..m2 {
                let word: Vec<usize> = w
                    .iter()
                    .map(|&a| a * nu + sample_index(p_u_given_w.row(a), &mut rng_u))
                    .collect();
                add_scaled(&mut acc, &word_table(channel, &word), *mult as f64 / (m1 * m2) as f64);
            }
        }
        Ok(tv_of(&acc, &target))
    })?;
    Ok(SimSummary { mean, std, trials: run.trials, margin })
}

/// Synthesis of `prod_t Q(v | w_t)` for one fixed sequence `w_seq` from a
/// codebook of `ceil(2^{n rate})` words drawn letterwise from `P(U|w_t)`.
/// The margin is taken against the conditional mutual information under
/// the empirical distribution of `w_seq`.
pub fn local_synthesis_sim(
    p_u_given_w: &Channel,
    channel: &Channel,
    rate: f64,
    w_seq: &[usize],
    trials: usize,
    seed: u64,
) -> Result<SimSummary> {
    let nw = p_u_given_w.n_inputs();
    let (_, nu) = joint_input(&Pmf::uniform(nw), p_u_given_w, channel)?;
    if let Some(&w) = w_seq.iter().find(|&&w| w >= nw) {
        return Err(Error::OutOfRange(format!("source symbol {w} of {nw}")));
    }
    let n = w_seq.len();
    let nv = channel.n_outputs();
    let m = codebook_size(n, rate)?;
    let mut counts = vec![0usize; nw];
    for &w in w_seq {
        counts[w] += 1;
    }
    let mut cond_mi = 0.0;
    let mut q_v: Vec<Vec<f64>> = Vec::with_capacity(nw);
    for w in 0..nw {
        let mut t = vec![0.0; nu * nv];
        let mut q = vec![0.0; nv];
        for u in 0..nu {
            let pu = p_u_given_w.prob(w, u);
            for v in 0..nv {
                t[u * nv + v] = pu * channel.prob(w * nu + u, v);
                q[v] += t[u * nv + v];
            }
        }
        if n > 0 {
            cond_mi += counts[w] as f64 / n as f64 * mutual_information_of(&t, nu, nv);
        }
        q_v.push(q);
    }
    let mut target = vec![1.0];
    for &w in w_seq {
        target = target.iter().flat_map(|&a| q_v[w].iter().map(move |&p| a * p)).collect();
    }
    let run = SimRun { n, trials, seed };
    let (mean, std) = run_trials(run, output_terms(n, nv, m), |i| {
        let mut rng = stream_rng(Stream::SoftCodebook, seed, i as u64);
        let mut acc = vec![0.0; target.len()];
        for _ in 0..m {
            let word: Vec<usize> = w_seq
                .iter()
                .map(|&w| w * nu + sample_index(p_u_given_w.row(w), &mut rng))
                .collect();
            add_scaled(&mut acc, &word_table(channel, &word), 1.0 / m as f64);
        }
        Ok(tv_of(&acc, &target))
    })?;
    Ok(SimSummary {
        mean,
        std,
        trials,
        margin: rate - cond_mi,
    })
}

/// Best weighted codebook found by [`mean_resolvability_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvabilityResult {
    pub min_tv: f64,
    pub codebook: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    /// Entropy of the selection weights in bits.
    pub entropy: f64,
    /// `I(U;V)` under the codebook distribution: the smallest rate at which
    /// the distance can vanish.
    pub converse_rate: f64,
}

/// Compositions of `total` into `parts` positive integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Smallest distance between the output of a weighted codebook and
/// `target^n` over up to [`RESOLVABILITY_MAX_M`] distinct codewords from
/// the support of `codebook_dist`, with selection weights on a grid of
/// step `1/RESOLVABILITY_GRID` and entropy at most `entropy_budget` bits.
pub fn mean_resolvability_search(
    codebook_dist: &Pmf,
    channel: &Channel,
    target: &Pmf,
    n: usize,
    entropy_budget: f64,
) -> Result<ResolvabilityResult> {
    check_channel(codebook_dist.len(), channel)?;
    if target.len() != channel.n_outputs() {
        return Err(Error::AlphabetMismatch("target does not match channel outputs".into()));
    }
    if !(entropy_budget >= 0.0) {
        return Err(Error::Parameter(format!("entropy budget must be nonnegative, got {entropy_budget}")));
    }
    let supp = codebook_dist.support();
    let nwords = budget::pow(supp.len(), n);
    if nwords > RESOLVABILITY_MAX_WORDS as u128 {
        return Err(Error::Parameter(format!(
            "{nwords} candidate codewords exceed the search limit {RESOLVABILITY_MAX_WORDS}"
        )));
    }
    let nwords = nwords as usize;
    let nv = channel.n_outputs();
    let mut work = 0u128;
    for m in 1..=RESOLVABILITY_MAX_M.min(nwords) {
        let sets = combinations(nwords, m).len() as u128;
        let ws = compositions(RESOLVABILITY_GRID, m).len() as u128;
        work = work.saturating_add(budget::terms(&[sets, ws, output_terms(n, nv, m)]));
    }
    budget::check(work, "mean-resolvability search")?;

    let words: Vec<Vec<usize>> = (0..nwords)
        .map(|w| digits(w, supp.len(), n).into_iter().map(|d| supp[d]).collect())
        .collect();
    let tables: Vec<Vec<f64>> = words.iter().map(|w| word_table(channel, w)).collect();
    let tgt = target.iid_power(n);
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for m in 1..=RESOLVABILITY_MAX_M.min(nwords) {
        let weight_sets: Vec<Vec<f64>> = compositions(RESOLVABILITY_GRID, m)
            .into_iter()
            .map(|c| c.into_iter().map(|k| k as f64 / RESOLVABILITY_GRID as f64).collect::<Vec<f64>>())
            .filter(|w| crate::info::entropy_of(w) <= entropy_budget + 1e-12)
            .collect();
        if weight_sets.is_empty() {
            continue;
        }
        let found = combinations(nwords, m)
            .into_par_iter()
            .map(|set| {
                let mut local: Option<(f64, Vec<f64>)> = None;
                let mut acc = vec![0.0; tgt.len()];
                for w in &weight_sets {
                    acc.iter_mut().for_each(|x| *x = 0.0);
                    for (&s, &p) in set.iter().zip(w) {
                        add_scaled(&mut acc, &tables[s], p);
                    }
                    let tv = tv_of(&acc, &tgt);
                    if local.as_ref().is_none_or(|l| tv < l.0) {
                        local = Some((tv, w.clone()));
                    }
                }
                let (tv, w) = local.expect("weight set is nonempty");
                (tv, set, w)
            })
            .reduce_with(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        if let Some(f) = found {
            if best.as_ref().is_none_or(|b| f.0 < b.0) {
                best = Some(f);
            }
        }
    }
    let (min_tv, set, weights) = best.ok_or_else(|| Error::Infeasible("no codebook within the entropy budget".into()))?;
    let joint = codebook_dist.through(channel)?;
    Ok(ResolvabilityResult {
        min_tv,
        codebook: set.iter().map(|&s| words[s].clone()).collect(),
        entropy: crate::info::entropy_of(&weights),
        weights,
        converse_rate: mutual_information_of(joint.table(), codebook_dist.len(), nv),
    })
}
