use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{operator_norm, Attainment, NormReport, OpNormConfig};
use crate::operators::OperatorSpec;
use crate::spaces::{Coeffs, SpaceSpec};
use crate::{Error, Result};

/// `sum i |w_i|^2 / sum |w_i|^2`.
pub fn witness_centroid(w: &Coeffs) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in w.iter() {
        let m = v.norm_sqr();
        num += i as f64 * m;
        den += m;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn witness_distance(a: &Coeffs, b: &Coeffs, space: &SpaceSpec) -> Result<f64> {
    space.norm(&(a - b))
}

fn stable_support(a: &Coeffs, b: &Coeffs) -> bool {
    let cut = |w: &Coeffs| {
        let m = w.max_abs();
        w.iter()
            .filter(|(_, v)| v.norm() > 1e-8 * m)
            .map(|(i, _)| i)
            .collect::<Vec<_>>()
    };
    cut(a) == cut(b)
}

/// [`attainment_scan_between`] with `dom = cod = space`.
pub fn attainment_scan(
    t: &OperatorSpec,
    space: &SpaceSpec,
    orders: &[usize],
    cfg: &OpNormConfig,
) -> Result<NormReport> {
    attainment_scan_between(t, space, space, orders, cfg)
}

/// Runs [`operator_norm`] at each order and tags the witnesses.
///
/// `attained`: the last two witnesses are within `cfg.attain_tol` and share support.
/// `escaping`: every witness centroid is at least a quarter of its order and the
/// values increase overall. Otherwise `inconclusive`. These are heuristics.
pub fn attainment_scan_between(
    t: &OperatorSpec,
    dom: &SpaceSpec,
    cod: &SpaceSpec,
    orders: &[usize],
    cfg: &OpNormConfig,
) -> Result<NormReport> {
    if orders.is_empty() || orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "orders must be non-empty and strictly increasing".into(),
        ));
    }
    let reports: Vec<NormReport> = orders
        .par_iter()
        .map(|&n| operator_norm(t, dom, cod, n, cfg))
        .collect::<Result<_>>()?;

    let trace: Vec<_> = reports.iter().map(|r| r.trace[0]).collect();
    let k = reports.len();
    let attainment = if k < 2 {
        Attainment::Inconclusive
    } else {
        let (a, b) = (&reports[k - 2].witness, &reports[k - 1].witness);
        let d = witness_distance(a, b, dom)?;
        let rising = trace[k - 1].value > trace[0].value
            && trace
                .windows(2)
                .all(|w| w[1].value >= w[0].value * (1.0 - 1e-12));
        let spreading = trace.iter().all(|p| p.centroid >= 0.25 * p.order as f64);
        if d < cfg.attain_tol && stable_support(a, b) {
            Attainment::Attained
        } else if spreading && rising {
            Attainment::Escaping
        } else {
            Attainment::Inconclusive
        }
    };
    let converged = reports.iter().all(|r| r.converged);
    let last = reports.into_iter().last().unwrap();
    Ok(NormReport {
        trace,
        attainment,
        converged,
        ..last
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualConsistency {
    pub norm: f64,
    pub dual_norm: f64,
    pub attainment: Attainment,
    pub dual_attainment: Attainment,
}

/// `||T||` from `dom` to `cod` against `||T^*||` from `cod*` to `dom*`, on the same section.
pub fn dual_norm_consistency(
    t: &OperatorSpec,
    dom: &SpaceSpec,
    cod: &SpaceSpec,
    order: usize,
    cfg: &OpNormConfig,
) -> Result<DualConsistency> {
    let td = t.dual();
    let (dd, cd) = (cod.dual()?, dom.dual()?);
    let mut orders = vec![(order / 4).max(2), (order / 2).max(3), order.max(4)];
    orders.dedup();
    let fwd = attainment_scan_between(t, dom, cod, &orders, cfg)?;
    let bwd = attainment_scan_between(&td, &dd, &cd, &orders, cfg)?;
    Ok(DualConsistency {
        norm: fwd.value,
        dual_norm: bwd.value,
        attainment: fwd.attainment,
        dual_attainment: bwd.attainment,
    })
}
