//! Simple integrands f = Σ_k α_k 1_{Δ_k} on [0, 1]^n, where each box Δ_k is a
//! product of half-open intervals that are pairwise disjoint within the box.

use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::fbm_kernel::{indicator_inner_product, HurstParam, Interval};

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorBox {
    intervals: Vec<Interval>,
}

impl IndicatorBox {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        for (i, j) in (0..intervals.len()).tuple_combinations() {
            if !intervals[i].is_disjoint(&intervals[j]) {
                return Err(Error::OverlappingBox { first: i, second: j });
            }
        }
        Ok(Self { intervals })
    }

    /// The unit box of arity 0.
    pub fn point() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn arity(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.iter().any(Interval::is_empty)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.intervals.iter().zip(x).all(|(i, &xi)| i.contains(xi))
    }

    fn clip(&self, t: f64) -> Self {
        Self {
            intervals: self.intervals.iter().map(|i| i.clip(t)).collect(),
        }
    }

    fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            intervals: perm.iter().map(|&p| self.intervals[p]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunction {
    arity: usize,
    terms: Vec<(f64, IndicatorBox)>,
}

impl SimpleFunction {
    pub fn new(arity: usize, terms: Vec<(f64, IndicatorBox)>) -> Result<Self> {
        for (_, b) in &terms {
            if b.arity() != arity {
                return Err(Error::Arity {
                    expected: arity,
                    found: b.arity(),
                });
            }
        }
        if let Some((c, _)) = terms.iter().find(|(c, _)| !c.is_finite()) {
            return Err(Error::domain(format!("coefficient {c} is not finite")));
        }
        Ok(Self { arity, terms })
    }

    pub fn zero(arity: usize) -> Self {
        Self {
            arity,
            terms: Vec::new(),
        }
    }

    /// A constant as an arity-0 function.
    pub fn scalar(c: f64) -> Self {
        Self {
            arity: 0,
            terms: vec![(c, IndicatorBox::point())],
        }
    }

    /// α 1_{I_1 × … × I_n}
    pub fn indicator(alpha: f64, intervals: Vec<Interval>) -> Result<Self> {
        let b = IndicatorBox::new(intervals)?;
        Self::new(b.arity(), vec![(alpha, b)])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &[(f64, IndicatorBox)] {
        &self.terms
    }

    pub fn is_tensor(&self) -> bool {
        self.terms.len() <= 1
    }

    /// Value of an arity-0 function.
    pub fn scalar_value(&self) -> Option<f64> {
        (self.arity == 0).then(|| self.terms.iter().map(|(c, _)| c).sum())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                found: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .filter(|(_, b)| b.contains(x))
            .map(|(c, _)| c)
            .sum())
    }

    /// f 1_{[0,t]}^{⊗n}; boxes that become empty are dropped.
    pub fn clip(&self, t: f64) -> Self {
        Self {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|(c, b)| (*c, b.clip(t)))
                .filter(|(_, b)| !b.is_empty())
                .collect(),
        }
    }

    /// (1/n!) Σ_σ f ∘ σ, with no consolidation of repeated boxes.
    pub fn symmetrize(&self) -> Self {
        if self.arity <= 1 {
            return self.clone();
        }
        let perms: Vec<Vec<usize>> = (0..self.arity).permutations(self.arity).collect();
        let scale = 1.0 / perms.len() as f64;
        let terms = self
            .terms
            .iter()
            .flat_map(|(c, b)| perms.iter().map(move |p| (c * scale, b.permuted(p))))
            .collect();
        Self {
            arity: self.arity,
            terms,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            arity: self.arity,
            terms: self.terms.iter().map(|(a, b)| (a * c, b.clone())).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        if other.arity != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                found: other.arity,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            arity: self.arity,
            terms,
        })
    }

    /// Parses one term per line, `alpha; a1,b1; a2,b2; …`. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut arity = None;
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line, message };
            let mut fields = body.split(';').map(str::trim);
            let alpha: f64 = fields
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|_| err(format!("bad coefficient in '{body}'")))?;
            let mut intervals = Vec::new();
            for field in fields {
                let (a, b) = field
                    .split_once(',')
                    .ok_or_else(|| err(format!("expected 'a,b', found '{field}'")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| err(format!("bad endpoint '{}'", s.trim())))
                };
                let iv = Interval::new(parse(a)?, parse(b)?).map_err(|e| err(e.to_string()))?;
                intervals.push(iv);
            }
            if intervals.is_empty() {
                return Err(err("a term needs at least one interval".into()));
            }
            let n = *arity.get_or_insert(intervals.len());
            if n != intervals.len() {
                return Err(err(format!("expected {n} intervals, found {}", intervals.len())));
            }
            let b = IndicatorBox::new(intervals).map_err(|e| err(e.to_string()))?;
            terms.push((alpha, b));
        }
        let arity = arity.ok_or_else(|| Error::Parse {
            line: 0,
            message: "no terms".into(),
        })?;
        Self::new(arity, terms)
    }
}

impl fmt::Display for SimpleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, b) in &self.terms {
            write!(f, "{c}")?;
            for i in b.intervals() {
                write!(f, "; {},{}", i.start(), i.end())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// ⟨f, g⟩ in ℋ^{⊗n}, a sum over term pairs of products of 1-D inner products.
pub fn inner_product_hn(h: HurstParam, f: &SimpleFunction, g: &SimpleFunction) -> Result<f64> {
    h.require_chaos()?;
    if f.arity != g.arity {
        return Err(Error::Arity {
            expected: f.arity,
            found: g.arity,
        });
    }
    let mut total = 0.0;
    for (a, bf) in &f.terms {
        for (b, bg) in &g.terms {
            let mut p = a * b;
            for (i, j) in bf.intervals.iter().zip(&bg.intervals) {
                p *= indicator_inner_product(h, i, j)?;
                if p == 0.0 {
                    break;
                }
            }
            total += p;
        }
    }
    Ok(total)
}

/// f ⊗_l g for pure tensors: the last l coordinates of f are paired with the
/// last l coordinates of g through the ℋ inner product.
pub fn contract_tensor(
    h: HurstParam,
    f: &SimpleFunction,
    g: &SimpleFunction,
    l: usize,
) -> Result<SimpleFunction> {
    if !f.is_tensor() || !g.is_tensor() {
        return Err(Error::domain("contraction needs single-term tensor products"));
    }
    contract(h, f, g, l)
}

/// Bilinear extension of [`contract_tensor`] to sums of boxes.
pub fn contract(
    h: HurstParam,
    f: &SimpleFunction,
    g: &SimpleFunction,
    l: usize,
) -> Result<SimpleFunction> {
    if l > f.arity.min(g.arity) {
        return Err(Error::domain(format!(
            "cannot contract {l} coordinates of arities {} and {}",
            f.arity, g.arity
        )));
    }
    if l > 0 {
        h.require_chaos()?;
    }
    let arity = f.arity + g.arity - 2 * l;
    let (kf, kg) = (f.arity - l, g.arity - l);
    let mut terms = Vec::with_capacity(f.terms.len() * g.terms.len());
    for (a, bf) in &f.terms {
        for (b, bg) in &g.terms {
            let mut c = a * b;
            for (i, j) in bf.intervals[kf..].iter().zip(&bg.intervals[kg..]) {
                c *= indicator_inner_product(h, i, j)?;
            }
            let mut intervals = bf.intervals[..kf].to_vec();
            intervals.extend_from_slice(&bg.intervals[..kg]);
            terms.push((c, IndicatorBox::new(intervals)?));
        }
    }
    if arity == 0 && terms.is_empty() {
        return Ok(SimpleFunction::scalar(0.0));
    }
    SimpleFunction::new(arity, terms)
}
