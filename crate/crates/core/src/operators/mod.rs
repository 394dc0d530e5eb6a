//! Symbolic operators on sequence spaces and their finite sections.

mod section;

pub use section::{matrix_csv, truncate_matrix, Section};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spaces::{conjugate, exponent, Coeffs};
use crate::{Error, Result};

/// Closed-form diagonal sequences `d_i`, `i = 0, 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DiagonalRule {
    Constant {
        value: Complex64,
    },
    /// `1 - 2^{-i}`.
    OneMinusPow2,
    /// `i / (i + 1)`.
    Ratio,
    /// `1 + 1/(i + 1)`.
    OnePlusRecip,
    /// Listed entries, zero afterwards. `sup` must bound every entry.
    Explicit {
        entries: Vec<Complex64>,
        sup: f64,
    },
}

impl DiagonalRule {
    pub fn value(&self, i: usize) -> Complex64 {
        let r = |v: f64| Complex64::new(v, 0.0);
        match self {
            DiagonalRule::Constant { value } => *value,
            DiagonalRule::OneMinusPow2 => r(1.0 - pow2_neg(i)),
            DiagonalRule::Ratio => r(i as f64 / (i as f64 + 1.0)),
            DiagonalRule::OnePlusRecip => r(1.0 + 1.0 / (i as f64 + 1.0)),
            DiagonalRule::Explicit { entries, .. } => {
                entries.get(i).copied().unwrap_or(Complex64::new(0.0, 0.0))
            }
        }
    }

    /// `sup_i |d_i|`.
    pub fn sup(&self) -> f64 {
        match self {
            DiagonalRule::Constant { value } => value.norm(),
            DiagonalRule::OneMinusPow2 | DiagonalRule::Ratio => 1.0,
            DiagonalRule::OnePlusRecip => 2.0,
            DiagonalRule::Explicit { sup, .. } => *sup,
        }
    }
}

pub(crate) fn pow2_neg(n: usize) -> f64 {
    if n > 1100 {
        0.0
    } else {
        2f64.powi(-(n as i32))
    }
}

/// The named operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CatalogEntry {
    /// `(x_1, x_0, 2x_2/3, 3x_3/4, ...)` on `K (+)_q l_p`.
    SimpleS {
        #[serde(with = "exponent")]
        p: f64,
        #[serde(with = "exponent")]
        q: f64,
    },
    /// `(x_1, x_0, 3x_2/2, 4x_3/3, ...)`, the inverse of `SimpleS`.
    SimpleR {
        #[serde(with = "exponent")]
        p: f64,
        #[serde(with = "exponent")]
        q: f64,
    },
    /// `x -> (sum_{n>=1} 2^{-n} x_n) e_0` on `c_0`.
    Tc0,
    /// `x -> (sum_{n>=1} (1 - 2^{-n}) x_n) e_0` on `l_1`.
    Tl1,
    /// `u -> u + u_2 e_1` on the renormed `l_2`.
    Sex,
    /// Diagonal with entries `1 - 2^{-n}`.
    DiagD,
    /// Transpose of `Tc0`: `e_0 -> sum 2^{-n} e_n`, cut at the input's `dim_hint`.
    Tc0Dual,
    /// Transpose of `Tl1`, cut at the input's `dim_hint`.
    Tl1Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OperatorSpec {
    Identity,
    ScalarMul {
        lambda: Complex64,
    },
    Diagonal {
        rule: DiagonalRule,
    },
    /// `x -> <x, functional> vector` with the bilinear pairing.
    RankOne {
        functional: Coeffs,
        vector: Coeffs,
    },
    Sum {
        terms: Vec<OperatorSpec>,
    },
    /// Product of the factors, applied right to left.
    Compose {
        factors: Vec<OperatorSpec>,
    },
    Catalog(CatalogEntry),
}

fn check_simple(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent {
            name: "p",
            value: p,
            reason: "must lie in (1, inf)",
        });
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidExponent {
            name: "q",
            value: q,
            reason: "must lie in [1, inf]",
        });
    }
    Ok(())
}

/// Builds a catalog operator by name after validating its parameters.
pub fn catalog_build(name: &str, p: Option<f64>, q: Option<f64>) -> Result<OperatorSpec> {
    let need = |v: Option<f64>, n: &str| {
        v.ok_or_else(|| Error::InvalidParameter(format!("{name} needs parameter {n}")))
    };
    let entry = match name {
        "simple_s" => CatalogEntry::SimpleS {
            p: need(p, "p")?,
            q: need(q, "q")?,
        },
        "simple_r" => CatalogEntry::SimpleR {
            p: need(p, "p")?,
            q: need(q, "q")?,
        },
        "tc0" => CatalogEntry::Tc0,
        "tl1" => CatalogEntry::Tl1,
        "sex" => CatalogEntry::Sex,
        "diag_d" => CatalogEntry::DiagD,
        "tc0_dual" => CatalogEntry::Tc0Dual,
        "tl1_dual" => CatalogEntry::Tl1Dual,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown catalog entry {other:?}"
            )))
        }
    };
    let op = OperatorSpec::Catalog(entry);
    op.validate()?;
    Ok(op)
}

impl OperatorSpec {
    pub fn catalog(entry: CatalogEntry) -> Self {
        OperatorSpec::Catalog(entry)
    }

    pub fn scalar(lambda: Complex64) -> Self {
        OperatorSpec::ScalarMul { lambda }
    }

    pub fn diagonal(rule: DiagonalRule) -> Self {
        OperatorSpec::Diagonal { rule }
    }

    pub fn rank_one(functional: Coeffs, vector: Coeffs) -> Self {
        OperatorSpec::RankOne { functional, vector }
    }

    pub fn sum(terms: Vec<OperatorSpec>) -> Self {
        OperatorSpec::Sum { terms }
    }

    pub fn compose(factors: Vec<OperatorSpec>) -> Self {
        OperatorSpec::Compose { factors }
    }

    /// `self + lambda I`.
    pub fn shifted(&self, lambda: Complex64) -> Self {
        OperatorSpec::sum(vec![self.clone(), OperatorSpec::scalar(lambda)])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorSpec::Identity
            | OperatorSpec::ScalarMul { .. }
            | OperatorSpec::RankOne { .. } => Ok(()),
            OperatorSpec::Diagonal { rule } => match rule {
                DiagonalRule::Explicit { entries, sup } => {
                    let m = entries.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
                    if !(sup.is_finite() && m <= *sup) {
                        return Err(Error::InvalidParameter(format!(
                            "diagonal sup bound {sup} is below max entry {m}"
                        )));
                    }
                    Ok(())
                }
                _ => Ok(()),
            },
            OperatorSpec::Sum { terms } => terms.iter().try_for_each(|t| t.validate()),
            OperatorSpec::Compose { factors } => factors.iter().try_for_each(|t| t.validate()),
            OperatorSpec::Catalog(e) => match e {
                CatalogEntry::SimpleS { p, q } | CatalogEntry::SimpleR { p, q } => {
                    check_simple(*p, *q)
                }
                _ => Ok(()),
            },
        }
    }

    /// Exact image `T x`.
    pub fn apply(&self, x: &Coeffs) -> Coeffs {
        let h = x.dim_hint();
        match self {
            OperatorSpec::Identity => x.clone(),
            OperatorSpec::ScalarMul { lambda } => x.scale(*lambda),
            OperatorSpec::Diagonal { rule } => {
                let mut y = Coeffs::new(h);
                for (i, v) in x.iter() {
                    y.set(i, v * rule.value(i));
                }
                y
            }
            OperatorSpec::RankOne { functional, vector } => vector
                .scale(x.pair(functional))
                .with_dim_hint(h.max(vector.dim_hint())),
            OperatorSpec::Sum { terms } => {
                let mut y = Coeffs::new(h);
                for t in terms {
                    y = &y + &t.apply(x);
                }
                y
            }
            OperatorSpec::Compose { factors } => {
                let mut y = x.clone();
                for t in factors.iter().rev() {
                    y = t.apply(&y);
                }
                y
            }
            OperatorSpec::Catalog(e) => apply_catalog(e, x),
        }
    }

    /// Transpose under the bilinear pairing.
    pub fn dual(&self) -> OperatorSpec {
        match self {
            OperatorSpec::Identity
            | OperatorSpec::ScalarMul { .. }
            | OperatorSpec::Diagonal { .. } => self.clone(),
            OperatorSpec::RankOne { functional, vector } => OperatorSpec::RankOne {
                functional: vector.clone(),
                vector: functional.clone(),
            },
            OperatorSpec::Sum { terms } => {
                OperatorSpec::sum(terms.iter().map(|t| t.dual()).collect())
            }
            OperatorSpec::Compose { factors } => {
                OperatorSpec::compose(factors.iter().rev().map(|t| t.dual()).collect())
            }
            OperatorSpec::Catalog(e) => match e {
                CatalogEntry::SimpleS { p, q } => OperatorSpec::Catalog(CatalogEntry::SimpleS {
                    p: conjugate(*p),
                    q: conjugate(*q),
                }),
                CatalogEntry::SimpleR { p, q } => OperatorSpec::Catalog(CatalogEntry::SimpleR {
                    p: conjugate(*p),
                    q: conjugate(*q),
                }),
                CatalogEntry::Tc0 => OperatorSpec::Catalog(CatalogEntry::Tc0Dual),
                CatalogEntry::Tc0Dual => OperatorSpec::Catalog(CatalogEntry::Tc0),
                CatalogEntry::Tl1 => OperatorSpec::Catalog(CatalogEntry::Tl1Dual),
                CatalogEntry::Tl1Dual => OperatorSpec::Catalog(CatalogEntry::Tl1),
                CatalogEntry::Sex => OperatorSpec::sum(vec![
                    OperatorSpec::Identity,
                    OperatorSpec::rank_one(Coeffs::basis(1), Coeffs::basis(2)),
                ]),
                CatalogEntry::DiagD => self.clone(),
            },
        }
    }
}

/// Alias kept for callers that prefer the free-function form.
pub fn apply(t: &OperatorSpec, x: &Coeffs) -> Coeffs {
    t.apply(x)
}

pub fn dual_operator(t: &OperatorSpec) -> OperatorSpec {
    t.dual()
}

fn apply_catalog(e: &CatalogEntry, x: &Coeffs) -> Coeffs {
    let h = x.dim_hint();
    let mut y = Coeffs::new(h);
    let r = |v: f64| Complex64::new(v, 0.0);
    match e {
        CatalogEntry::SimpleS { .. } | CatalogEntry::SimpleR { .. } => {
            let inverse = matches!(e, CatalogEntry::SimpleR { .. });
            for (i, v) in x.iter() {
                match i {
                    0 => y.set(1, v),
                    1 => y.set(0, v),
                    n => {
                        let (a, b) = (n as f64, n as f64 + 1.0);
                        y.set(n, v * r(if inverse { b / a } else { a / b }));
                    }
                }
            }
        }
        CatalogEntry::Tc0 | CatalogEntry::Tl1 => {
            let coef = |n: usize| {
                if matches!(e, CatalogEntry::Tc0) {
                    pow2_neg(n)
                } else {
                    1.0 - pow2_neg(n)
                }
            };
            let s: Complex64 = x
                .iter()
                .filter(|&(i, _)| i >= 1)
                .map(|(i, v)| v * coef(i))
                .sum();
            y.set(0, s);
        }
        CatalogEntry::Tc0Dual | CatalogEntry::Tl1Dual => {
            let x0 = x.get(0);
            for n in 1..h {
                let c = if matches!(e, CatalogEntry::Tc0Dual) {
                    pow2_neg(n)
                } else {
                    1.0 - pow2_neg(n)
                };
                y.set(n, x0 * c);
            }
        }
        CatalogEntry::Sex => {
            y = x.clone();
            y.add_at(1, x.get(2));
        }
        CatalogEntry::DiagD => {
            for (i, v) in x.iter() {
                y.set(i, v * (1.0 - pow2_neg(i)));
            }
        }
    }
    y.set_dim_hint(h.max(y.dim_hint()));
    y
}

impl From<CatalogEntry> for OperatorSpec {
    fn from(e: CatalogEntry) -> Self {
        OperatorSpec::Catalog(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn catalog_examples() {
        let t = OperatorSpec::Catalog(CatalogEntry::Tc0);
        for n in 1..6 {
            let y = t.apply(&Coeffs::basis(n));
            assert_eq!(
                y,
                Coeffs::from_real([(0, 2f64.powi(-(n as i32)))]).with_dim_hint(n + 1)
            );
        }
        let s = catalog_build("simple_s", Some(2.0), Some(4.0)).unwrap();
        let x = Coeffs::from_real([(0, 1.0), (1, 1.0)]);
        assert_eq!(s.apply(&x), x);
        let sex = catalog_build("sex", None, None).unwrap();
        let y = sex.apply(&Coeffs::from_real([(2, 1.0), (3, 1.0)]));
        assert_eq!(y, Coeffs::from_real([(1, 1.0), (2, 1.0), (3, 1.0)]));
        let tl1 = catalog_build("tl1", None, None).unwrap();
        assert_eq!(tl1.apply(&Coeffs::basis(3)).get(0), c(0.875));
    }

    #[test]
    fn catalog_rejects_bad_exponents() {
        assert!(catalog_build("simple_s", Some(1.0), Some(4.0)).is_err());
        assert!(catalog_build("simple_s", Some(2.0), Some(0.5)).is_err());
        assert!(catalog_build("simple_s", Some(2.0), None).is_err());
        assert!(catalog_build("nope", None, None).is_err());
    }

    #[test]
    fn serde_shapes() {
        let op: OperatorSpec =
            serde_json::from_str(r#"{"op":"catalog","name":"simple_s","p":2,"q":4}"#).unwrap();
        assert_eq!(
            op,
            OperatorSpec::Catalog(CatalogEntry::SimpleS { p: 2.0, q: 4.0 })
        );
        let op: OperatorSpec = serde_json::from_str(r#"{"op":"catalog","name":"tc0"}"#).unwrap();
        assert_eq!(op, OperatorSpec::Catalog(CatalogEntry::Tc0));
        let op = OperatorSpec::sum(vec![
            OperatorSpec::Identity,
            OperatorSpec::diagonal(DiagonalRule::OneMinusPow2),
            OperatorSpec::scalar(Complex64::new(0.5, -1.0)),
            OperatorSpec::rank_one(Coeffs::basis(1), Coeffs::basis(0)),
        ]);
        let s = serde_json::to_string(&op).unwrap();
        let back: OperatorSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn sex_dual_is_explicit() {
        let d = OperatorSpec::Catalog(CatalogEntry::Sex).dual();
        let y = d.apply(&Coeffs::basis(1));
        assert_eq!(y, Coeffs::from_real([(1, 1.0), (2, 1.0)]));
    }
}
