use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_common, grid_scan, inverse_norm, resolvent, GridSummary, PointClass, Region};
use crate::operators::OperatorSpec;
use crate::opnorm::{normalize_phase, operator_norm, witness_centroid, OpNormConfig};
use crate::spaces::{disjointify, Coeffs, SpaceSpec};
use crate::{Error, Result};

/// A rank-one `A` and a unit `y` with `(T + A) y = z y`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationCert {
    pub a: OperatorSpec,
    pub z: Complex64,
    pub y: Coeffs,
    /// `||(T + A) y - z y||`.
    pub residual: f64,
    /// `||A||` from an independent operator-norm evaluation.
    pub norm_a: f64,
    pub eps: f64,
    /// `1 / ||(T_N - zI)^{-1}||`.
    pub inv_resolvent: f64,
    pub order: usize,
    /// Centroid of the resolvent witness `x`.
    pub centroid: f64,
}

impl PerturbationCert {
    pub fn check(&self, tol: f64) -> bool {
        self.residual < tol && self.norm_a <= self.eps + tol
    }
}

/// Plants `z` as an eigenvalue of `T_N + A` with `||A|| = 1/||(T_N - zI)^{-1}||`.
///
/// With `x` a unit vector realising the resolvent norm `r` and `y = (T - zI)^{-1} x / r`,
/// `A u = -<u, f> x / r` where `f` norms `y`.
pub fn att1_perturbation(
    t: &OperatorSpec,
    space: &SpaceSpec,
    z: Complex64,
    eps: f64,
    order: usize,
    cfg: &OpNormConfig,
) -> Result<PerturbationCert> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let res = resolvent(t, space, z, order, cfg)?;
    let Some((x, img)) = res.witness else {
        return Err(Error::Precondition(format!(
            "z = {z} is an eigenvalue of the section"
        )));
    };
    let r = space.norm(&img)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Inconclusive(
            "resolvent witness has no usable image".into(),
        ));
    }
    let c = 1.0 / r;
    if c > eps + 1e-12 {
        return Err(Error::OutsidePseudospectrum {
            inv_resolvent: c,
            eps,
        });
    }
    let y = &img * c;
    let f = space.norming_functional(&y)?;
    let a = OperatorSpec::rank_one(f, &x * (-c));
    let lhs = &t.apply(&y) + &a.apply(&y);
    let residual = space.norm(&(&lhs - &y.scale(z)))?;
    let norm_a = operator_norm(&a, space, space, order, cfg)?.value;
    Ok(PerturbationCert {
        a,
        z,
        y,
        residual,
        norm_a,
        eps,
        inv_resolvent: c,
        order,
        centroid: witness_centroid(&x),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lp111Case {
    /// Minimisers settle on a fixed non-zero vector.
    Converging,
    /// Minimisers drift to infinity.
    Escaping,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lp111Outcome {
    pub case: Lp111Case,
    pub s: OperatorSpec,
    /// `inf ||T_N x||` over unit `x` at each order.
    pub cs: Vec<f64>,
    /// The value at the last order; the construction targets this.
    pub c: f64,
    pub norm_s: f64,
    /// `||(T + S) v||` for the unit vector `v` below.
    pub new_inf: f64,
    pub null_vector: Coeffs,
    pub order: usize,
    /// Distance between the minimisers at the last two orders.
    pub minimizer_distance: f64,
    pub centroid: f64,
}

impl Lp111Outcome {
    pub fn check(&self, norm_tol: f64, inf_tol: f64) -> bool {
        self.norm_s <= self.c + norm_tol && self.new_inf < inf_tol
    }
}

/// Unit minimiser of `||T_N x||` and the minimum, through the inverse section.
fn minimiser(
    t: &OperatorSpec,
    space: &SpaceSpec,
    order: usize,
    cfg: &OpNormConfig,
) -> Result<(f64, Coeffs)> {
    let res = inverse_norm(t, space, order, cfg)?;
    let Some((_, img)) = res.witness else {
        return Err(Error::Precondition(format!(
            "section of order {order} is singular, so the infimum is zero"
        )));
    };
    let r = space.norm(&img)?;
    let dim = order + 1;
    let mut d = (&img * (1.0 / r)).to_dense(dim);
    normalize_phase(&mut d);
    Ok((1.0 / r, Coeffs::from_dense(&d).with_dim_hint(dim)))
}

fn extract(xs: &[Coeffs], space: &SpaceSpec) -> Result<crate::spaces::DisjointOutcome> {
    let mut last = None;
    for k in (1..=xs.len()).rev() {
        let eps: Vec<f64> = (1..=k).map(|j| 0.5f64.powi(j as i32)).collect();
        match disjointify(xs, &eps, space) {
            Ok(o) => return Ok(o),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or(Error::Exhausted { step: 1 }))
}

/// Builds `S` with `||S|| = c` and `inf ||(T + S) x|| = 0`, where `c = inf ||T x||`.
///
/// Minimisers of the sections at `orders` are tracked. If the last two are within
/// `1e-4` the rank-one `S u = -<u, phi> T x` is used, with `phi` norming the minimiser.
/// If the last minimiser has centroid at least `N/2` the minimisers are disjointified,
/// their images disjointified again, and `S` is the block sum
/// `S u = -c sum_m <u, phi_m> w_m / ||w_m||`. Anything else is inconclusive.
pub fn lp111_perturbation(
    t: &OperatorSpec,
    space: &SpaceSpec,
    orders: &[usize],
    cfg: &OpNormConfig,
) -> Result<Lp111Outcome> {
    if orders.len() < 2 || orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "need at least two strictly increasing orders".into(),
        ));
    }
    check_common(t, space, orders[0])?;
    if space.is_renormed() {
        return Err(Error::Unsupported(
            "no norming functionals on the renormed space".into(),
        ));
    }
    let mins: Vec<(f64, Coeffs)> = orders
        .par_iter()
        .map(|&n| minimiser(t, space, n, cfg))
        .collect::<Result<_>>()?;
    let cs: Vec<f64> = mins.iter().map(|m| m.0).collect();
    let k = mins.len();
    let order = orders[k - 1];
    let c = cs[k - 1];
    let x_last = &mins[k - 1].1;
    let dist = space.norm(&(x_last - &mins[k - 2].1))?;
    let centroid = witness_centroid(x_last);

    let (case, s, new_inf, null_vector) = if dist < 1e-4 {
        let tx = t.apply(x_last);
        let phi = space.norming_functional(x_last)?;
        let s = OperatorSpec::rank_one(phi, -&tx);
        let v = &tx + &s.apply(x_last);
        (Lp111Case::Converging, s, space.norm(&v)?, x_last.clone())
    } else if centroid >= 0.5 * order as f64 {
        if !matches!(space, SpaceSpec::Lp { .. } | SpaceSpec::DirectSumLp { .. }) {
            return Err(Error::Unsupported(
                "the block construction needs an l_p sum of finite-dimensional blocks".into(),
            ));
        }
        let xs: Vec<Coeffs> = mins.iter().map(|m| m.1.clone()).collect();
        let first = extract(&xs, space)?;
        let ty: Vec<Coeffs> = first.us.iter().map(|y| t.apply(y)).collect();
        let second = extract(&ty, space)?;
        let mut terms = Vec::new();
        let mut ys = Vec::new();
        for (m, &km) in second.indices.iter().enumerate() {
            let y = &first.us[km];
            let w = &second.us[m];
            let nw = space.norm(w)?;
            if nw == 0.0 {
                continue;
            }
            let phi = space.norming_functional(y)?;
            terms.push(OperatorSpec::rank_one(&phi * (-c / nw), w.clone()));
            ys.push(y.clone());
        }
        if terms.is_empty() {
            return Err(Error::Inconclusive(
                "no usable blocks in the escaping case".into(),
            ));
        }
        let s = OperatorSpec::sum(terms);
        let ts = OperatorSpec::sum(vec![t.clone(), s.clone()]);
        let mut best: Option<(f64, Coeffs)> = None;
        for y in ys {
            let ny = space.norm(&y)?;
            let v = &y * (1.0 / ny);
            let r = space.norm(&ts.apply(&v))?;
            if best.as_ref().is_none_or(|b| r < b.0) {
                best = Some((r, v));
            }
        }
        let (r, v) = best.expect("non-empty");
        (Lp111Case::Escaping, s, r, v)
    } else {
        return Err(Error::Inconclusive(format!(
            "minimisers neither converge (distance {dist:.3e}) nor escape (centroid {centroid:.2} at order {order})"
        )));
    };

    let reach = span_of(&s).max(order).max(2);
    let norm_s = operator_norm(&s, space, space, reach, cfg)?.value;
    Ok(Lp111Outcome {
        case,
        s,
        cs,
        c,
        norm_s,
        new_inf,
        null_vector,
        order,
        minimizer_distance: dist,
        centroid,
    })
}

/// Largest index touched by a sum of rank-one terms.
fn span_of(s: &OperatorSpec) -> usize {
    match s {
        OperatorSpec::RankOne { functional, vector } => functional
            .max_index()
            .unwrap_or(0)
            .max(vector.max_index().unwrap_or(0)),
        OperatorSpec::Sum { terms } => terms.iter().map(span_of).max().unwrap_or(0),
        _ => 0,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellCert {
    pub z: Complex64,
    pub norm_a: f64,
    pub residual: f64,
    pub centroid: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sigma0Report {
    pub summary: GridSummary,
    /// Level cells with a verified rank-one certificate.
    pub certified: Vec<CellCert>,
    /// Level cells without one, with the reason.
    pub uncertified: Vec<(Complex64, String)>,
    /// The `eps` certificates were requested at, `eps / (1 - band)`.
    pub cert_eps: f64,
    /// Every certified cell lies in the non-strict set and passes re-verification.
    pub inclusion_ok: bool,
}

/// Strict cells need no certificate. Each level cell gets an attempt at a rank-one
/// perturbation of norm at most `eps / (1 - band)`, which covers the band.
#[allow(clippy::too_many_arguments)]
pub fn sigma0_vs_sigma_check(
    t: &OperatorSpec,
    space: &SpaceSpec,
    eps: f64,
    region: Region,
    resolution: (usize, usize),
    order: usize,
    band: f64,
    cfg: &OpNormConfig,
) -> Result<Sigma0Report> {
    let grid = grid_scan(t, space, region, resolution, eps, order, band, cfg)?;
    let cert_eps = eps / (1.0 - band);
    let mut certified = Vec::new();
    let mut uncertified = Vec::new();
    let mut inclusion_ok = true;
    for cell in grid.cells.iter().filter(|c| c.class == PointClass::Level) {
        match att1_perturbation(t, space, cell.z, cert_eps, order, cfg) {
            Ok(cert) if cert.check(1e-10) => {
                inclusion_ok &= cell.class.in_closed();
                certified.push(CellCert {
                    z: cell.z,
                    norm_a: cert.norm_a,
                    residual: cert.residual,
                    centroid: cert.centroid,
                });
            }
            Ok(cert) => uncertified.push((
                cell.z,
                format!("residual {:.3e}, norm {:.12}", cert.residual, cert.norm_a),
            )),
            Err(e) => uncertified.push((cell.z, e.to_string())),
        }
    }
    Ok(Sigma0Report {
        summary: grid.summary(),
        certified,
        uncertified,
        cert_eps,
        inclusion_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CatalogEntry, DiagonalRule};

    fn cfg() -> OpNormConfig {
        OpNormConfig::default()
    }

    #[test]
    fn zero_operator_plants_eigenvalue() {
        let zero = OperatorSpec::scalar(Complex64::new(0.0, 0.0));
        let s = SpaceSpec::lp(3.0).unwrap();
        let eps = 0.4;
        let z = Complex64::new(eps / 2.0, 0.0);
        let cert = att1_perturbation(&zero, &s, z, eps, 5, &cfg()).unwrap();
        assert!(cert.residual < 1e-15, "{}", cert.residual);
        assert!((cert.norm_a - eps / 2.0).abs() < 1e-15);
    }

    #[test]
    fn tc0_cert_needs_the_truncation_gap() {
        let t = OperatorSpec::Catalog(CatalogEntry::Tc0);
        let z = Complex64::new(-1.0, 0.0);
        let r = att1_perturbation(&t, &SpaceSpec::C0, z, 0.5, 20, &cfg());
        assert!(matches!(r, Err(Error::OutsidePseudospectrum { .. })));
        let cert = att1_perturbation(&t, &SpaceSpec::C0, z, 0.5 + 1e-6, 20, &cfg()).unwrap();
        assert!(cert.check(1e-10), "{cert:?}");
    }

    #[test]
    fn simple_s_minus_identity_cert() {
        let s = SpaceSpec::qsum(4.0, 2.0).unwrap();
        let t = OperatorSpec::catalog(CatalogEntry::SimpleS { p: 2.0, q: 4.0 })
            .shifted(Complex64::new(-1.0, 0.0));
        let z = Complex64::new(-1.0, 0.0);
        let inv = resolvent(&t, &s, z, 12, &cfg()).unwrap().norm;
        let cert = att1_perturbation(&t, &s, z, 1.0 / inv, 12, &cfg()).unwrap();
        assert!(cert.check(1e-10), "{cert:?}");
    }

    #[test]
    fn lp111_examples() {
        let l2 = SpaceSpec::lp(2.0).unwrap();
        let two = OperatorSpec::scalar(Complex64::new(2.0, 0.0));
        let o = lp111_perturbation(&two, &l2, &[4, 8, 16], &cfg()).unwrap();
        assert_eq!(o.case, Lp111Case::Converging);
        assert!((o.c - 2.0).abs() < 1e-15);
        assert!(o.check(1e-8, 1e-6), "{o:?}");

        let d = OperatorSpec::diagonal(DiagonalRule::OnePlusRecip);
        let o = lp111_perturbation(&d, &l2, &[8, 16, 32, 64], &cfg()).unwrap();
        assert_eq!(o.case, Lp111Case::Escaping);
        assert!(o.check(1e-8, 1e-6), "{o:?}");
        assert!((o.c - (1.0 + 1.0 / 65.0)).abs() < 1e-14);
    }

    #[test]
    fn lp111_simple_s_on_qsum() {
        let s = SpaceSpec::qsum(4.0, 2.0).unwrap();
        let t = OperatorSpec::catalog(CatalogEntry::SimpleS { p: 2.0, q: 4.0 });
        let o = lp111_perturbation(&t, &s, &[8, 16, 32], &cfg()).unwrap();
        assert_eq!(o.case, Lp111Case::Converging);
        assert!(o.check(1e-8, 1e-6), "{o:?}");
    }

    #[test]
    fn sigma0_zero_operator_level_cells_certified() {
        let zero = OperatorSpec::scalar(Complex64::new(0.0, 0.0));
        let r = sigma0_vs_sigma_check(
            &zero,
            &SpaceSpec::lp(2.0).unwrap(),
            1.0,
            Region::square(1.5),
            (31, 31),
            3,
            super::super::LEVEL_BAND,
            &cfg(),
        )
        .unwrap();
        assert!(r.summary.level >= 4);
        assert_eq!(r.certified.len(), r.summary.level);
        assert!(r.uncertified.is_empty());
        assert!(r.inclusion_ok);
    }
}
