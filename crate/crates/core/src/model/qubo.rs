use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use super::builder::PenaltyWeights;
use super::layout::VariableLayout;
use crate::error::{Error, Result};

/// Binary quadratic form
/// `offset + Σ linear[a] x[a] + Σ_{a<b} quadratic[(a,b)] x[a] x[b]`.
///
/// The coefficient table is immutable once built. A per-variable incidence
/// list is kept alongside it so single-flip energy deltas cost `O(degree)`.
#[derive(Debug, Clone)]
pub struct QuboModel {
    linear: Vec<f64>,
    quadratic: Vec<((usize, usize), f64)>,
    offset: f64,
    neighbors: Vec<Vec<(usize, f64)>>,
    layout: Option<VariableLayout>,
    penalties: Option<PenaltyWeights>,
}

impl QuboModel {
    /// Builds a model from raw terms. Pairs are folded into upper-triangular
    /// form; `(a, a)` pairs become linear terms since `x² = x`.
    pub fn from_terms<I>(n: usize, linear: Vec<f64>, quadratic: I, offset: f64) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        if linear.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: linear.len(),
            });
        }
        let mut linear = linear;
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for ((a, b), c) in quadratic {
            if a >= n || b >= n {
                return Err(Error::Config(format!("term ({a}, {b}) outside {n} variables")));
            }
            if a == b {
                linear[a] += c;
            } else {
                *pairs.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
            }
        }
        Ok(Self::assemble(linear, pairs, offset))
    }

    pub(crate) fn assemble(
        linear: Vec<f64>,
        pairs: BTreeMap<(usize, usize), f64>,
        offset: f64,
    ) -> Self {
        let n = linear.len();
        let quadratic: Vec<_> = pairs.into_iter().filter(|&(_, c)| c != 0.0).collect();
        let mut neighbors = vec![Vec::new(); n];
        for &((a, b), c) in &quadratic {
            neighbors[a].push((b, c));
            neighbors[b].push((a, c));
        }
        Self {
            linear,
            quadratic,
            offset,
            neighbors,
            layout: None,
            penalties: None,
        }
    }

    pub(crate) fn with_structure(mut self, layout: VariableLayout, penalties: PenaltyWeights) -> Self {
        self.layout = Some(layout);
        self.penalties = Some(penalties);
        self
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// Upper-triangular pairs `(a, b)`, `a < b`, sorted.
    pub fn quadratic(&self) -> &[((usize, usize), f64)] {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn neighbors(&self, var: usize) -> &[(usize, f64)] {
        &self.neighbors[var]
    }

    pub fn layout(&self) -> Option<&VariableLayout> {
        self.layout.as_ref()
    }

    pub fn penalties(&self) -> Option<&PenaltyWeights> {
        self.penalties.as_ref()
    }

    pub fn energy(&self, x: &[bool]) -> f64 {
        debug_assert_eq!(x.len(), self.len());
        let mut e = self.offset;
        for (a, &c) in self.linear.iter().enumerate() {
            if x[a] {
                e += c;
            }
        }
        for &((a, b), c) in &self.quadratic {
            if x[a] && x[b] {
                e += c;
            }
        }
        e
    }

    pub fn checked_energy(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: x.len(),
            });
        }
        Ok(self.energy(x))
    }

    /// `linear[a] + Σ_b Q[a,b] x[b]`, the energy gained by setting `a`.
    #[inline]
    pub fn local_field(&self, x: &[bool], var: usize) -> f64 {
        self.neighbors[var]
            .iter()
            .filter(|&&(b, _)| x[b])
            .fold(self.linear[var], |acc, &(_, c)| acc + c)
    }

    /// Energy change from flipping `var`.
    #[inline]
    pub fn flip_delta(&self, x: &[bool], var: usize) -> f64 {
        let h = self.local_field(x, var);
        if x[var] {
            -h
        } else {
            h
        }
    }

    /// Largest absolute coefficient, a natural energy scale.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.linear
            .iter()
            .chain(self.quadratic.iter().map(|(_, c)| c))
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// SHA-256 over the coefficient bit patterns, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update(self.offset.to_bits().to_le_bytes());
        for c in &self.linear {
            h.update(c.to_bits().to_le_bytes());
        }
        for &((a, b), c) in &self.quadratic {
            h.update((a as u64).to_le_bytes());
            h.update((b as u64).to_le_bytes());
            h.update(c.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Writes the `a b coeff` text format. Diagonal lines carry linear terms.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::new();
        writeln!(buf, "# n {} offset {}", self.len(), self.offset).unwrap();
        let mut linear = self
            .linear
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .peekable();
        let mut quad = self.quadratic.iter().peekable();
        // Merge the two sorted streams so the file is ordered by (a, b).
        loop {
            let take_linear = match (linear.peek(), quad.peek()) {
                (None, None) => break,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (Some(&(a, _)), Some(&&((qa, _), _))) => a <= qa,
            };
            if take_linear {
                let (a, c) = linear.next().unwrap();
                writeln!(buf, "{a} {a} {c}").unwrap();
            } else {
                let &((a, b), c) = quad.next().unwrap();
                writeln!(buf, "{a} {b} {c}").unwrap();
            }
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        self.write_text(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("ascii output")
    }

    /// Reads the text format back. Repeated pairs are summed.
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut header: Option<(usize, f64)> = None;
        let mut linear = Vec::new();
        let mut pairs = BTreeMap::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = lineno + 1;
            let bad = |msg: &str| Error::QuboFormat {
                line: line_no,
                msg: msg.to_string(),
            };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if header.is_none() {
                    let tok: Vec<&str> = rest.split_whitespace().collect();
                    if tok.len() != 4 || tok[0] != "n" || tok[2] != "offset" {
                        return Err(bad("expected header `# n <n> offset <offset>`"));
                    }
                    let n: usize = tok[1].parse().map_err(|_| bad("bad variable count"))?;
                    let offset: f64 = tok[3].parse().map_err(|_| bad("bad offset"))?;
                    header = Some((n, offset));
                    linear = vec![0.0; n];
                }
                continue;
            }
            let (n, _) = header.ok_or_else(|| bad("coefficient before header"))?;
            let tok: Vec<&str> = trimmed.split_whitespace().collect();
            if tok.len() != 3 {
                return Err(bad("expected `a b coeff`"));
            }
            let a: usize = tok[0].parse().map_err(|_| bad("bad index"))?;
            let b: usize = tok[1].parse().map_err(|_| bad("bad index"))?;
            let c: f64 = tok[2].parse().map_err(|_| bad("bad coefficient"))?;
            if a > b || b >= n {
                return Err(bad("index out of range or not upper-triangular"));
            }
            if a == b {
                linear[a] += c;
            } else {
                *pairs.entry((a, b)).or_insert(0.0) += c;
            }
        }
        let (_, offset) = header.ok_or(Error::QuboFormat {
            line: 0,
            msg: "missing header".into(),
        })?;
        Ok(Self::assemble(linear, pairs, offset))
    }
}
