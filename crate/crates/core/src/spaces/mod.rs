//! Sequence spaces over the index set `0, 1, 2, ...` and their norms.

mod coeffs;
mod disjoint;

pub use coeffs::{Coeffs, PRUNE};
pub use disjoint::{
    abg, disjointify, disjointify_with, p_space_defect, project, support, DisjointOutcome,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C_ZERO};

/// Hölder conjugate exponent, with `1 <-> inf`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `(sum v_i^p)^(1/p)` for non-negative `v_i`, scaled against overflow.
pub fn lp_of(vals: &[f64], p: f64) -> f64 {
    let m = vals.iter().fold(0.0_f64, |m, &v| m.max(v));
    if m == 0.0 || p.is_infinite() {
        return m;
    }
    if p == 1.0 {
        return vals.iter().sum();
    }
    let s: f64 = if p == 2.0 {
        vals.iter().map(|&v| (v / m) * (v / m)).sum()
    } else {
        vals.iter().map(|&v| (v / m).powf(p)).sum()
    };
    if p == 2.0 {
        m * s.sqrt()
    } else {
        m * s.powf(1.0 / p)
    }
}

/// Finite exponents serialise as numbers, infinity as the string `"inf"`.
pub(crate) mod exponent {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Inf") => Ok(f64::INFINITY),
            Raw::Str(s) => Err(de::Error::custom(format!("bad exponent {s:?}"))),
        }
    }
}

/// The weight sequence `q_1, q_2, ...` in `(1/2, 1/sqrt 2)` used by the renormed space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QSeq {
    /// `q_n = 1/2 + 1/(4(n+1))`.
    #[default]
    Standard,
    /// Explicit leading values `q_1, ..., q_k`; later terms follow the standard rule.
    Table { values: Vec<f64> },
}

impl QSeq {
    pub fn with_q1(q1: f64) -> Self {
        QSeq::Table { values: vec![q1] }
    }

    /// `q_n` for `n >= 1`.
    pub fn q(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        if let QSeq::Table { values } = self {
            if let Some(&v) = values.get(n - 1) {
                return v;
            }
        }
        0.5 + 0.25 / (n as f64 + 1.0)
    }

    /// Checks `1/2 < q_n < 1/sqrt 2` and strict decrease for `n = 1..=upto`.
    pub fn validate(&self, upto: usize) -> Result<()> {
        let hi = std::f64::consts::FRAC_1_SQRT_2;
        let mut prev = f64::INFINITY;
        for n in 1..=upto.max(1) {
            let q = self.q(n);
            if !(q > 0.5 && q < hi) {
                return Err(Error::InvalidParameter(format!(
                    "q_{n} = {q} is outside (1/2, 1/sqrt 2)"
                )));
            }
            if q >= prev {
                return Err(Error::InvalidParameter(format!(
                    "q sequence not strictly decreasing at n = {n}"
                )));
            }
            prev = q;
        }
        Ok(())
    }
}

/// One block of a direct sum: `size` coordinates normed by `l_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub size: usize,
    #[serde(with = "exponent")]
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum SpaceSpec {
    Lp {
        #[serde(with = "exponent")]
        p: f64,
    },
    C0,
    L1,
    /// `K (+)_q l_p`: index 0 is the scalar component, indices `1..` the `l_p` part.
    #[serde(rename = "qsum")]
    QSumLp {
        #[serde(with = "exponent")]
        q: f64,
        #[serde(with = "exponent")]
        p: f64,
    },
    /// `l_p` sum of finite `l_r` blocks. Indices past the listed blocks are singleton blocks.
    #[serde(rename = "dsum")]
    DirectSumLp {
        #[serde(with = "exponent")]
        p: f64,
        blocks: Vec<BlockSpec>,
    },
    /// `l_2` renormed by the Minkowski functional of the set `B`, sectioned at `trunc` atoms.
    #[serde(rename = "renorm")]
    RenormedL2 {
        trunc: usize,
        #[serde(default)]
        qseq: QSeq,
    },
}

fn check_exponent(name: &'static str, v: f64, lo_closed: bool, allow_inf: bool) -> Result<()> {
    let ok_lo = if lo_closed { v >= 1.0 } else { v > 1.0 };
    let ok_hi = allow_inf || v.is_finite();
    if v.is_nan() || !ok_lo || !ok_hi {
        let reason = match (lo_closed, allow_inf) {
            (true, true) => "must lie in [1, inf]",
            (false, true) => "must lie in (1, inf]",
            (false, false) => "must lie in (1, inf)",
            (true, false) => "must lie in [1, inf)",
        };
        return Err(Error::InvalidExponent {
            name,
            value: v,
            reason,
        });
    }
    Ok(())
}

impl SpaceSpec {
    pub fn lp(p: f64) -> Result<Self> {
        let s = SpaceSpec::Lp { p };
        s.validate()?;
        Ok(s)
    }

    pub fn qsum(q: f64, p: f64) -> Result<Self> {
        let s = SpaceSpec::QSumLp { q, p };
        s.validate()?;
        Ok(s)
    }

    pub fn dsum(p: f64, blocks: Vec<BlockSpec>) -> Result<Self> {
        let s = SpaceSpec::DirectSumLp { p, blocks };
        s.validate()?;
        Ok(s)
    }

    pub fn renormed(trunc: usize) -> Self {
        SpaceSpec::RenormedL2 {
            trunc,
            qseq: QSeq::Standard,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::Lp { p } => check_exponent("p", *p, false, false),
            SpaceSpec::C0 | SpaceSpec::L1 => Ok(()),
            SpaceSpec::QSumLp { q, p } => {
                check_exponent("p", *p, false, false)?;
                check_exponent("q", *q, true, true)
            }
            SpaceSpec::DirectSumLp { p, blocks } => {
                check_exponent("p", *p, false, false)?;
                for b in blocks {
                    check_exponent("r", b.r, true, true)?;
                    if b.size == 0 {
                        return Err(Error::InvalidParameter("empty direct-sum block".into()));
                    }
                }
                Ok(())
            }
            SpaceSpec::RenormedL2 { trunc, qseq } => {
                if *trunc == 0 {
                    return Err(Error::InvalidParameter("trunc must be positive".into()));
                }
                qseq.validate(*trunc)
            }
        }
    }

    /// The dual space under the bilinear pairing. Not available for the renormed space.
    pub fn dual(&self) -> Result<SpaceSpec> {
        Ok(match self {
            SpaceSpec::Lp { p } => SpaceSpec::Lp { p: conjugate(*p) },
            SpaceSpec::C0 => SpaceSpec::L1,
            SpaceSpec::L1 => SpaceSpec::C0,
            SpaceSpec::QSumLp { q, p } => SpaceSpec::QSumLp {
                q: conjugate(*q),
                p: conjugate(*p),
            },
            SpaceSpec::DirectSumLp { p, blocks } => SpaceSpec::DirectSumLp {
                p: conjugate(*p),
                blocks: blocks
                    .iter()
                    .map(|b| BlockSpec {
                        size: b.size,
                        r: conjugate(b.r),
                    })
                    .collect(),
            },
            SpaceSpec::RenormedL2 { .. } => {
                return Err(Error::Unsupported("dual of the renormed space".into()))
            }
        })
    }

    pub fn is_renormed(&self) -> bool {
        matches!(self, SpaceSpec::RenormedL2 { .. })
    }

    /// Absolute-norm description used by the dense kernels.
    pub(crate) fn abs_norm(&self) -> Result<AbsNorm> {
        self.validate()?;
        Ok(match self {
            SpaceSpec::Lp { p } => AbsNorm::flat(*p),
            SpaceSpec::C0 => AbsNorm::flat(f64::INFINITY),
            SpaceSpec::L1 => AbsNorm::flat(1.0),
            SpaceSpec::QSumLp { q, p } => AbsNorm {
                outer: *q,
                blocks: vec![(0, 1, *p), (1, usize::MAX, *p)],
            },
            SpaceSpec::DirectSumLp { p, blocks } => {
                let mut out = Vec::with_capacity(blocks.len());
                let mut start = 0;
                for b in blocks {
                    out.push((start, start + b.size, b.r));
                    start += b.size;
                }
                AbsNorm {
                    outer: *p,
                    blocks: out,
                }
            }
            SpaceSpec::RenormedL2 { .. } => {
                return Err(Error::Unsupported(
                    "dense kernels do not cover the renormed space".into(),
                ))
            }
        })
    }

    /// Norm of a sparse vector. The renormed space is evaluated by the convex solver.
    pub fn norm(&self, x: &Coeffs) -> Result<f64> {
        match self {
            SpaceSpec::RenormedL2 { trunc, qseq } => {
                let r = crate::convex::minkowski_norm(
                    x,
                    *trunc,
                    &crate::convex::MinkowskiOptions {
                        qseq: qseq.clone(),
                        ..Default::default()
                    },
                )?;
                if r.converged {
                    Ok(r.value)
                } else {
                    Err(Error::Tolerance {
                        upper: r.value,
                        lower: r.lower,
                    })
                }
            }
            _ => Ok(self.abs_norm()?.norm_iter(x.iter())),
        }
    }

    pub fn norm_dense(&self, x: &[Complex64]) -> Result<f64> {
        Ok(self.abs_norm()?.norm_dense(x))
    }

    /// Norm in the dual space of a functional given by its coefficients.
    pub fn dual_norm(&self, f: &Coeffs) -> Result<f64> {
        self.dual()?.norm(f)
    }

    /// A functional `f` with `<x, f> = ||x||` and dual norm 1 (zero for `x = 0`).
    pub fn norming_functional(&self, x: &Coeffs) -> Result<Coeffs> {
        let a = self.abs_norm()?;
        let mut f = Coeffs::from_pairs(a.norming_iter(x.iter()));
        f.set_dim_hint(x.dim_hint());
        Ok(f)
    }

    /// Index of the block containing coordinate `i`; coordinates for non-block spaces.
    pub fn block_of(&self, i: usize) -> usize {
        match self {
            SpaceSpec::DirectSumLp { blocks, .. } => {
                let mut start = 0;
                for (b, blk) in blocks.iter().enumerate() {
                    if i < start + blk.size {
                        return b;
                    }
                    start += blk.size;
                }
                blocks.len() + (i - start)
            }
            _ => i,
        }
    }

    /// Coordinate range of block `b`.
    pub fn block_range(&self, b: usize) -> std::ops::Range<usize> {
        match self {
            SpaceSpec::DirectSumLp { blocks, .. } => {
                let mut start = 0;
                for (k, blk) in blocks.iter().enumerate() {
                    if k == b {
                        return start..start + blk.size;
                    }
                    start += blk.size;
                }
                let i = start + (b - blocks.len());
                i..i + 1
            }
            _ => b..b + 1,
        }
    }

    /// Exponent `p` of the outer `l_p` structure, when the space has one.
    pub fn outer_p(&self) -> Option<f64> {
        match self {
            SpaceSpec::Lp { p } | SpaceSpec::DirectSumLp { p, .. } => Some(*p),
            _ => None,
        }
    }
}

/// Two-level absolute norm: an outer `l_s` norm of inner `l_r` block norms.
///
/// `blocks` are half-open coordinate ranges in increasing order; every coordinate
/// outside them is a singleton block.
#[derive(Debug, Clone)]
pub(crate) struct AbsNorm {
    pub outer: f64,
    pub blocks: Vec<(usize, usize, f64)>,
}

impl AbsNorm {
    fn flat(p: f64) -> Self {
        AbsNorm {
            outer: p,
            blocks: vec![(0, usize::MAX, p)],
        }
    }

    pub fn dual(&self) -> AbsNorm {
        AbsNorm {
            outer: conjugate(self.outer),
            blocks: self
                .blocks
                .iter()
                .map(|&(a, b, r)| (a, b, conjugate(r)))
                .collect(),
        }
    }

    /// `(block id, inner exponent)` of coordinate `i`.
    fn key(&self, i: usize) -> (usize, f64) {
        let k = self.blocks.partition_point(|&(_, end, _)| end <= i);
        match self.blocks.get(k) {
            Some(&(start, _, r)) if start <= i => (k, r),
            _ => (self.blocks.len() + i, self.outer),
        }
    }

    /// Groups sorted entries by block.
    fn grouped<I>(&self, it: I) -> Vec<(f64, Vec<(usize, Complex64)>)>
    where
        I: Iterator<Item = (usize, Complex64)>,
    {
        let mut out: Vec<(f64, Vec<(usize, Complex64)>)> = Vec::new();
        let mut cur = usize::MAX;
        for (i, v) in it {
            let (b, r) = self.key(i);
            if b != cur || out.is_empty() {
                out.push((r, Vec::new()));
                cur = b;
            }
            out.last_mut().unwrap().1.push((i, v));
        }
        out
    }

    pub fn norm_iter<I>(&self, it: I) -> f64
    where
        I: Iterator<Item = (usize, Complex64)>,
    {
        let norms: Vec<f64> = self
            .grouped(it)
            .iter()
            .map(|(r, ents)| {
                let a: Vec<f64> = ents.iter().map(|(_, v)| v.norm()).collect();
                lp_of(&a, *r)
            })
            .collect();
        lp_of(&norms, self.outer)
    }

    pub fn norm_dense(&self, x: &[Complex64]) -> f64 {
        if self.blocks.len() == 1 && self.blocks[0].0 == 0 && self.blocks[0].1 == usize::MAX {
            let a: Vec<f64> = x.iter().map(|v| v.norm()).collect();
            return lp_of(&a, self.outer);
        }
        self.norm_iter(x.iter().copied().enumerate())
    }

    pub fn norming_iter<I>(&self, it: I) -> Vec<(usize, Complex64)>
    where
        I: Iterator<Item = (usize, Complex64)>,
    {
        let groups = self.grouped(it);
        let norms: Vec<f64> = groups
            .iter()
            .map(|(r, ents)| {
                let a: Vec<f64> = ents.iter().map(|(_, v)| v.norm()).collect();
                lp_of(&a, *r)
            })
            .collect();
        let total = lp_of(&norms, self.outer);
        let mut out = Vec::new();
        if total == 0.0 {
            return out;
        }
        let s = self.outer;
        let first_max = norms.iter().position(|&n| n == total);
        for (g, ((r, ents), &nb)) in groups.iter().zip(&norms).enumerate() {
            if nb == 0.0 {
                continue;
            }
            let w = if s.is_infinite() {
                if Some(g) == first_max {
                    1.0
                } else {
                    continue;
                }
            } else if s == 1.0 {
                1.0
            } else {
                (nb / total).powf(s - 1.0)
            };
            inner_norming(ents, *r, nb, w, &mut out);
        }
        out
    }

    pub fn norming_dense(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![C_ZERO; x.len()];
        for (i, v) in self.norming_iter(x.iter().copied().enumerate()) {
            out[i] = v;
        }
        out
    }
}

fn phase_conj(v: Complex64) -> Complex64 {
    let n = v.norm();
    if n == 0.0 {
        C_ZERO
    } else {
        v.conj() / n
    }
}

fn inner_norming(
    ents: &[(usize, Complex64)],
    r: f64,
    nb: f64,
    w: f64,
    out: &mut Vec<(usize, Complex64)>,
) {
    if r.is_infinite() {
        let k = ents.iter().position(|(_, v)| v.norm() == nb).unwrap_or(0);
        let (i, v) = ents[k];
        out.push((i, phase_conj(v) * w));
    } else if r == 1.0 {
        for &(i, v) in ents {
            if v != C_ZERO {
                out.push((i, phase_conj(v) * w));
            }
        }
    } else {
        for &(i, v) in ents {
            if v != C_ZERO {
                out.push((i, phase_conj(v) * (w * (v.norm() / nb).powf(r - 1.0))));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basic_norms() {
        let x = Coeffs::from_real([(0, 3.0), (1, -4.0)]);
        assert!((SpaceSpec::lp(2.0).unwrap().norm(&x).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(SpaceSpec::C0.norm(&x).unwrap(), 4.0);
        assert_eq!(SpaceSpec::L1.norm(&x).unwrap(), 7.0);
    }

    #[test]
    fn qsum_norm_formula() {
        // (alpha^q + (beta^p + gamma^p)^(q/p))^(1/q) with (alpha, beta, gamma) = (1, 1, 1), p = 2, q = 4.
        let x = Coeffs::from_real([(0, 1.0), (1, 1.0), (5, -1.0)]);
        let s = SpaceSpec::qsum(4.0, 2.0).unwrap();
        let want = (1.0_f64 + 2.0_f64.powf(2.0)).powf(0.25);
        assert!((s.norm(&x).unwrap() - want).abs() < 1e-14);
        let s = SpaceSpec::qsum(f64::INFINITY, 2.0).unwrap();
        assert!((s.norm(&x).unwrap() - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dsum_trailing_singletons() {
        let s = SpaceSpec::dsum(2.0, vec![BlockSpec { size: 2, r: 1.0 }]).unwrap();
        let x = Coeffs::from_real([(0, 1.0), (1, 2.0), (2, 4.0), (3, 0.0)]);
        assert!((s.norm(&x).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(s.block_of(0), 0);
        assert_eq!(s.block_of(1), 0);
        assert_eq!(s.block_of(2), 1);
        assert_eq!(s.block_range(2), 3..4);
    }

    #[test]
    fn exponent_validation() {
        assert!(matches!(
            SpaceSpec::lp(1.0),
            Err(Error::InvalidExponent { .. })
        ));
        assert!(SpaceSpec::qsum(0.5, 2.0).is_err());
        assert!(SpaceSpec::qsum(f64::INFINITY, 2.0).is_ok());
        assert!(SpaceSpec::qsum(1.0, 2.0).is_ok());
    }

    #[test]
    fn norming_functional_on_qsum() {
        let s = SpaceSpec::qsum(4.0, 2.0).unwrap();
        let x = Coeffs::from_pairs([(0, c(1.0, 1.0)), (2, c(0.0, -2.0)), (3, c(0.5, 0.0))]);
        let f = s.norming_functional(&x).unwrap();
        let nx = s.norm(&x).unwrap();
        assert!((x.pair(&f) - c(nx, 0.0)).norm() < 1e-13);
        assert!((s.dual_norm(&f).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn serde_tags() {
        let s: SpaceSpec = serde_json::from_str(r#"{"space":"qsum","q":"inf","p":2}"#).unwrap();
        assert_eq!(
            s,
            SpaceSpec::QSumLp {
                q: f64::INFINITY,
                p: 2.0
            }
        );
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(back, r#"{"space":"qsum","q":"inf","p":2.0}"#);
        let r: SpaceSpec = serde_json::from_str(r#"{"space":"renorm","trunc":4}"#).unwrap();
        assert_eq!(r, SpaceSpec::renormed(4));
    }

    #[test]
    fn qseq_rule() {
        let q = QSeq::Standard;
        assert_eq!(q.q(1), 0.625);
        assert!(q.validate(10_000).is_ok());
        assert!(QSeq::with_q1(0.8).validate(5).is_err());
    }
}
