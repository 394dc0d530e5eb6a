use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::C_ZERO;

/// Entries with smaller modulus are treated as structural zeros.
pub const PRUNE: f64 = 1e-300;

/// Sparse coefficient vector over the index set `0, 1, 2, ...`.
///
/// Only non-zero entries are stored. `dim_hint` records the length of the
/// finite section the vector came from; it is advisory and never restricts
/// the stored indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coeffs {
    entries: BTreeMap<usize, Complex64>,
    dim_hint: usize,
}

impl Coeffs {
    pub fn new(dim_hint: usize) -> Self {
        Self {
            entries: BTreeMap::new(),
            dim_hint,
        }
    }

    pub fn basis(i: usize) -> Self {
        let mut c = Self::new(i + 1);
        c.set(i, Complex64::new(1.0, 0.0));
        c
    }

    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (usize, Complex64)>,
    {
        let mut c = Self::new(0);
        for (i, v) in pairs {
            c.add_at(i, v);
        }
        c.dim_hint = c.max_index().map_or(0, |m| m + 1);
        c
    }

    pub fn from_real<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        Self::from_pairs(pairs.into_iter().map(|(i, v)| (i, Complex64::new(v, 0.0))))
    }

    pub fn from_dense(x: &[Complex64]) -> Self {
        let mut c = Self::new(x.len());
        for (i, &v) in x.iter().enumerate() {
            c.set(i, v);
        }
        c
    }

    /// Dense copy of the entries with index below `n`; larger indices are dropped.
    pub fn to_dense(&self, n: usize) -> Vec<Complex64> {
        let mut out = vec![C_ZERO; n];
        for (&i, &v) in self.entries.range(..n) {
            out[i] = v;
        }
        out
    }

    pub fn dim_hint(&self) -> usize {
        self.dim_hint
    }

    pub fn with_dim_hint(mut self, n: usize) -> Self {
        self.dim_hint = n;
        self
    }

    pub fn set_dim_hint(&mut self, n: usize) {
        self.dim_hint = n;
    }

    pub fn get(&self, i: usize) -> Complex64 {
        self.entries.get(&i).copied().unwrap_or(C_ZERO)
    }

    pub fn set(&mut self, i: usize, v: Complex64) {
        if v.norm() < PRUNE {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, v);
            self.dim_hint = self.dim_hint.max(i + 1);
        }
    }

    pub fn add_at(&mut self, i: usize, v: Complex64) {
        let cur = self.get(i);
        self.set(i, cur + v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.entries.iter().map(|(&i, &v)| (i, v))
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn is_real(&self) -> bool {
        self.entries.values().all(|v| v.im == 0.0)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::new(self.dim_hint);
        for (i, v) in self.iter() {
            out.set(i, v * s);
        }
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = Self::new(self.dim_hint);
        for (i, v) in self.iter() {
            out.set(i, v.conj());
        }
        out
    }

    /// Bilinear pairing `sum_i x_i f_i`.
    pub fn pair(&self, f: &Coeffs) -> Complex64 {
        let (small, large) = if self.nnz() <= f.nnz() {
            (self, f)
        } else {
            (f, self)
        };
        small.iter().map(|(i, v)| v * large.get(i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Drop entries whose modulus is at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = Self::new(self.dim_hint);
        for (i, v) in self.iter() {
            if v.norm() > tol {
                out.set(i, v);
            }
        }
        out
    }

    /// Shift every index up by `k`.
    pub fn shifted(&self, k: usize) -> Self {
        let mut out = Self::new(self.dim_hint + k);
        for (i, v) in self.iter() {
            out.set(i + k, v);
        }
        out
    }
}

impl Add for &Coeffs {
    type Output = Coeffs;
    fn add(self, rhs: &Coeffs) -> Coeffs {
        let mut out = self.clone();
        for (i, v) in rhs.iter() {
            out.add_at(i, v);
        }
        out.dim_hint = self.dim_hint.max(rhs.dim_hint);
        out
    }
}

impl Sub for &Coeffs {
    type Output = Coeffs;
    fn sub(self, rhs: &Coeffs) -> Coeffs {
        let mut out = self.clone();
        for (i, v) in rhs.iter() {
            out.add_at(i, -v);
        }
        out.dim_hint = self.dim_hint.max(rhs.dim_hint);
        out
    }
}

impl Neg for &Coeffs {
    type Output = Coeffs;
    fn neg(self) -> Coeffs {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &Coeffs {
    type Output = Coeffs;
    fn mul(self, s: Complex64) -> Coeffs {
        self.scale(s)
    }
}

impl Mul<f64> for &Coeffs {
    type Output = Coeffs;
    fn mul(self, s: f64) -> Coeffs {
        self.scale(Complex64::new(s, 0.0))
    }
}

// Wire format: an array of `[index, re, im]` triples.
impl Serialize for Coeffs {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<(usize, f64, f64)> = self.iter().map(|(i, v)| (i, v.re, v.im)).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Coeffs {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<(usize, f64, f64)> = Vec::deserialize(d)?;
        Ok(Coeffs::from_pairs(
            rows.into_iter()
                .map(|(i, re, im)| (i, Complex64::new(re, im))),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_entries_are_not_stored() {
        let mut c = Coeffs::basis(3);
        c.add_at(3, Complex64::new(-1.0, 0.0));
        assert!(c.is_zero());
        assert_eq!(c.dim_hint(), 4);
    }

    #[test]
    fn serde_round_trip() {
        let c = Coeffs::from_pairs([
            (0, Complex64::new(1.5, -2.0)),
            (7, Complex64::new(0.0, 1.0)),
        ]);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, "[[0,1.5,-2.0],[7,0.0,1.0]]");
        let back: Coeffs = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn pairing_is_bilinear() {
        let x = Coeffs::from_pairs([(1, Complex64::new(0.0, 1.0))]);
        let f = Coeffs::from_pairs([(1, Complex64::new(0.0, 1.0)), (2, Complex64::new(5.0, 0.0))]);
        assert_eq!(x.pair(&f), Complex64::new(-1.0, 0.0));
    }
}
