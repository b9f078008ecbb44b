//! Finite probability mass functions, channels, and joint tables.
//!
//! Atoms are opaque string labels. Product alphabets are flattened row-major:
//! the last coordinate varies fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance applied to user-supplied distributions.
pub const NORMALIZATION_TOL: f64 = 1e-12;

fn check_probs(probs: &[f64], tol: f64) -> Result<()> {
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidProbability { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// Accepts either a JSON string or number as an atom label.
#[derive(Deserialize)]
#[serde(untagged)]
enum LabelRepr {
    Str(String),
    Int(i64),
    Float(f64),
}

impl From<LabelRepr> for String {
    fn from(l: LabelRepr) -> String {
        match l {
            LabelRepr::Str(s) => s,
            LabelRepr::Int(i) => i.to_string(),
            LabelRepr::Float(f) => f.to_string(),
        }
    }
}

fn labels<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    let raw = Vec::<LabelRepr>::deserialize(d)?;
    Ok(raw.into_iter().map(String::from).collect())
}

/// Numeric labels `0..k`.
pub fn index_labels(k: usize) -> Vec<String> {
    (0..k).map(|i| i.to_string()).collect()
}

/// A probability mass function over an ordered finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr")]
pub struct Pmf {
    atoms: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct PmfRepr {
    #[serde(deserialize_with = "labels")]
    atoms: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<PmfRepr> for Pmf {
    type Error = Error;
    fn try_from(r: PmfRepr) -> Result<Self> {
        Pmf::new(r.atoms, r.probs)
    }
}

impl Pmf {
    pub fn new(atoms: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if atoms.len() != probs.len() {
            return Err(Error::Shape(format!(
                "{} atoms but {} probabilities",
                atoms.len(),
                probs.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::Shape("empty alphabet".into()));
        }
        check_probs(&probs, NORMALIZATION_TOL)?;
        Ok(Pmf { atoms, probs })
    }

    /// Pmf over labels `0..probs.len()`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Pmf::new(index_labels(probs.len()), probs)
    }

    /// Divides by the total mass; used for derived distributions whose
    /// rounding error may exceed the input tolerance.
    pub fn normalized(atoms: Vec<String>, mut probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::NotNormalized { sum });
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        Pmf::new(atoms, probs)
    }

    pub fn uniform(k: usize) -> Self {
        Pmf {
            atoms: index_labels(k),
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Pmf {
            atoms: index_labels(k),
            probs,
        }
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Indices with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    pub fn same_alphabet(&self, other: &Pmf) -> bool {
        self.atoms == other.atoms
    }

    /// Expectation of `f` indexed by atom.
    pub fn expect(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| p * f(i))
            .sum()
    }

    /// Joint of this input distribution passed through `w`, over `(input, output)`.
    pub fn through(&self, w: &Channel) -> Result<JointPmf> {
        if self.atoms != w.input {
            return Err(Error::AlphabetMismatch(
                "pmf alphabet differs from channel input alphabet".into(),
            ));
        }
        let ny = w.output.len();
        let mut table = Vec::with_capacity(self.len() * ny);
        for (x, &px) in self.probs.iter().enumerate() {
            table.extend(w.rows[x].iter().map(|&q| px * q));
        }
        JointPmf::normalized(vec![self.atoms.clone(), w.output.clone()], table)
    }

    /// Output distribution of this input passed through `w`.
    pub fn push(&self, w: &Channel) -> Result<Pmf> {
        self.through(w)?.marginal(1)
    }

    /// `n`-fold i.i.d. product, flattened row-major.
    pub fn iid_power(&self, n: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * self.len());
            for &a in &out {
                next.extend(self.probs.iter().map(|&p| a * p));
            }
            out = next;
        }
        out
    }
}

/// A conditional pmf: one output distribution per input atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr")]
pub struct Channel {
    input: Vec<String>,
    output: Vec<String>,
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ChannelRepr {
    #[serde(deserialize_with = "labels")]
    input: Vec<String>,
    #[serde(deserialize_with = "labels")]
    output: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<ChannelRepr> for Channel {
    type Error = Error;
    fn try_from(r: ChannelRepr) -> Result<Self> {
        Channel::new(r.input, r.output, r.rows)
    }
}

impl Channel {
    pub fn new(input: Vec<String>, output: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != input.len() {
            return Err(Error::Shape(format!(
                "{} inputs but {} rows",
                input.len(),
                rows.len()
            )));
        }
        if input.is_empty() || output.is_empty() {
            return Err(Error::Shape("empty channel alphabet".into()));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != output.len() {
                return Err(Error::Shape(format!(
                    "row {x} has {} entries, expected {}",
                    row.len(),
                    output.len()
                )));
            }
            check_probs(row, NORMALIZATION_TOL)?;
        }
        Ok(Channel { input, output, rows })
    }

    /// Channel with numeric labels.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, |r| r.len());
        Channel::new(index_labels(nx), index_labels(ny), rows)
    }

    /// Renormalizes each row before validation.
    pub fn normalized(input: Vec<String>, output: Vec<String>, mut rows: Vec<Vec<f64>>) -> Result<Self> {
        for row in rows.iter_mut() {
            let s: f64 = row.iter().sum();
            if !(s > 0.0) {
                return Err(Error::NotNormalized { sum: s });
            }
            row.iter_mut().for_each(|p| *p /= s);
        }
        Channel::new(input, output, rows)
    }

    pub fn identity(k: usize) -> Self {
        let rows = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Channel {
            input: index_labels(k),
            output: index_labels(k),
            rows,
        }
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Channel::from_rows(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn input(&self) -> &[String] {
        &self.input
    }

    pub fn output(&self) -> &[String] {
        &self.output
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn n_inputs(&self) -> usize {
        self.input.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output.len()
    }

    /// Keeps only the listed inputs, in order.
    pub fn restrict_inputs(&self, keep: &[usize]) -> Channel {
        Channel {
            input: keep.iter().map(|&i| self.input[i].clone()).collect(),
            output: self.output.clone(),
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// A joint pmf over a product of finite alphabets, flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr")]
pub struct JointPmf {
    alphabets: Vec<Vec<String>>,
    table: Vec<f64>,
}

#[derive(Deserialize)]
struct JointRepr {
    alphabets: Vec<Vec<String>>,
    table: Vec<f64>,
}

impl TryFrom<JointRepr> for JointPmf {
    type Error = Error;
    fn try_from(r: JointRepr) -> Result<Self> {
        JointPmf::new(r.alphabets, r.table)
    }
}

impl JointPmf {
    pub fn new(alphabets: Vec<Vec<String>>, table: Vec<f64>) -> Result<Self> {
        if alphabets.is_empty() || alphabets.iter().any(|a| a.is_empty()) {
            return Err(Error::Shape("joint needs nonempty alphabets".into()));
        }
        let size: usize = alphabets.iter().map(|a| a.len()).product();
        if size != table.len() {
            return Err(Error::Shape(format!(
                "table has {} cells, alphabets imply {size}",
                table.len()
            )));
        }
        check_probs(&table, NORMALIZATION_TOL)?;
        Ok(JointPmf { alphabets, table })
    }

    pub fn normalized(alphabets: Vec<Vec<String>>, mut table: Vec<f64>) -> Result<Self> {
        let sum: f64 = table.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::NotNormalized { sum });
        }
        table.iter_mut().for_each(|p| *p /= sum);
        JointPmf::new(alphabets, table)
    }

    /// Joint with numeric labels on each axis.
    pub fn from_table(dims: &[usize], table: Vec<f64>) -> Result<Self> {
        JointPmf::new(dims.iter().map(|&d| index_labels(d)).collect(), table)
    }

    /// 2-coordinate joint from a matrix `m[a][b]`.
    pub fn from_matrix(m: &[Vec<f64>]) -> Result<Self> {
        let na = m.len();
        let nb = m.first().map_or(0, |r| r.len());
        JointPmf::from_table(&[na, nb], m.iter().flatten().copied().collect())
    }

    /// Product of independent marginals.
    pub fn product(marginals: &[&Pmf]) -> Result<Self> {
        let mut table = vec![1.0];
        for m in marginals {
            let mut next = Vec::with_capacity(table.len() * m.len());
            for &a in &table {
                next.extend(m.probs().iter().map(|&p| a * p));
            }
            table = next;
        }
        JointPmf::normalized(marginals.iter().map(|m| m.atoms().to_vec()).collect(), table)
    }

    pub fn alphabets(&self) -> &[Vec<String>] {
        &self.alphabets
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn n_coords(&self) -> usize {
        self.alphabets.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.alphabets.iter().map(|a| a.len()).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.n_coords() {
            return Err(Error::Shape("wrong number of coordinates".into()));
        }
        let mut flat = 0;
        for (c, (&i, a)) in idx.iter().zip(&self.alphabets).enumerate() {
            if i >= a.len() {
                return Err(Error::OutOfRange(format!("coordinate {c} index {i}")));
            }
            flat = flat * a.len() + i;
        }
        Ok(flat)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut idx = vec![0; dims.len()];
        for c in (0..dims.len()).rev() {
            idx[c] = flat % dims[c];
            flat /= dims[c];
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.table[self.flat_index(idx)?])
    }

    /// Marginal on a single coordinate.
    pub fn marginal(&self, coord: usize) -> Result<Pmf> {
        if coord >= self.n_coords() {
            return Err(Error::OutOfRange(format!("coordinate {coord}")));
        }
        let mut probs = vec![0.0; self.alphabets[coord].len()];
        for (flat, &p) in self.table.iter().enumerate() {
            probs[self.unflatten(flat)[coord]] += p;
        }
        Pmf::normalized(self.alphabets[coord].clone(), probs)
    }

    /// Marginal on an ordered subset of coordinates.
    pub fn marginal_over(&self, coords: &[usize]) -> Result<JointPmf> {
        if coords.iter().any(|&c| c >= self.n_coords()) || coords.is_empty() {
            return Err(Error::OutOfRange("bad coordinate list".into()));
        }
        let alphabets: Vec<Vec<String>> = coords.iter().map(|&c| self.alphabets[c].clone()).collect();
        let sub_dims: Vec<usize> = alphabets.iter().map(|a| a.len()).collect();
        let mut table = vec![0.0; sub_dims.iter().product()];
        for (flat, &p) in self.table.iter().enumerate() {
            let idx = self.unflatten(flat);
            let mut f = 0;
            for (k, &c) in coords.iter().enumerate() {
                f = f * sub_dims[k] + idx[c];
            }
            table[f] += p;
        }
        JointPmf::normalized(alphabets, table)
    }

    /// Groups coordinates `[0, split)` and `[split, n)` into a 2-coordinate joint
    /// over flattened tuple alphabets.
    pub fn group(&self, split: usize) -> Result<JointPmf> {
        if split == 0 || split >= self.n_coords() {
            return Err(Error::OutOfRange(format!("split {split}")));
        }
        let tuple_labels = |range: std::ops::Range<usize>| -> Vec<String> {
            let dims: Vec<usize> = range.clone().map(|c| self.alphabets[c].len()).collect();
            let total: usize = dims.iter().product();
            (0..total)
                .map(|mut f| {
                    let mut parts = vec![String::new(); dims.len()];
                    for k in (0..dims.len()).rev() {
                        parts[k] = self.alphabets[range.start + k][f % dims[k]].clone();
                        f /= dims[k];
                    }
                    parts.join(",")
                })
                .collect()
        };
        let a = tuple_labels(0..split);
        let b = tuple_labels(split..self.n_coords());
        JointPmf::new(vec![a, b], self.table.clone())
    }

    /// Reinterprets a 2-coordinate joint as a pmf over the input times a channel.
    pub fn as_input_channel(&self) -> Result<(Pmf, Channel)> {
        if self.n_coords() != 2 {
            return Err(Error::Shape("expected a 2-coordinate joint".into()));
        }
        let px = self.marginal(0)?;
        let ny = self.alphabets[1].len();
        let keep = px.support();
        let rows = keep
            .iter()
            .map(|&x| self.table[x * ny..(x + 1) * ny].to_vec())
            .collect();
        let input = keep.iter().map(|&x| self.alphabets[0][x].clone()).collect();
        let ch = Channel::normalized(input, self.alphabets[1].clone(), rows)?;
        let probs = keep.iter().map(|&x| px.prob(x)).collect();
        let px = Pmf::normalized(ch.input().to_vec(), probs)?;
        Ok((px, ch))
    }
}
