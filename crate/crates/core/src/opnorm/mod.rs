//! Operator norms of finite sections, with norm-attainment diagnostics.

mod attain;
mod reduction;

pub use attain::{
    attainment_scan, attainment_scan_between, dual_norm_consistency, witness_centroid,
    witness_distance, DualConsistency,
};
pub use reduction::{max_f_over_k, qsum_f, MaxFReport};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::operators::{CatalogEntry, OperatorSpec, Section};
use crate::spaces::{AbsNorm, Coeffs, SpaceSpec};
use crate::{Error, Result, C_ZERO};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpNormConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Relative improvement below which an iteration run stops.
    pub tol: f64,
    pub seed: u64,
    /// Reject complex sections and iterate over real vectors only.
    pub real_only: bool,
    /// Largest section handled by a dense SVD in the `l_2 -> l_2` case.
    pub svd_limit: usize,
    /// Use exact reductions (for `SimpleS` on `K (+)_q l_p`) when they apply.
    pub reductions: bool,
    /// Successive witness distance below which a scan reports attainment.
    pub attain_tol: f64,
}

impl Default for OpNormConfig {
    fn default() -> Self {
        OpNormConfig {
            restarts: 16,
            max_iter: 5000,
            tol: 1e-14,
            seed: 0x5eed,
            real_only: false,
            svd_limit: 400,
            reductions: true,
            attain_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    ReductionF,
    Iterate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attainment {
    Attained,
    Escaping,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub order: usize,
    pub value: f64,
    /// `sum i |w_i|^2 / sum |w_i|^2` for the witness at this order.
    pub centroid: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub witness: Coeffs,
    pub method: Method,
    pub order: usize,
    pub trace: Vec<TracePoint>,
    pub attainment: Attainment,
    pub restarts: usize,
    /// False when an iteration hit `max_iter` without settling.
    pub converged: bool,
}

/// Norm of the square section of `T` on `span{e_0, ..., e_N}`, from `dom` into `cod`.
pub fn operator_norm(
    t: &OperatorSpec,
    dom: &SpaceSpec,
    cod: &SpaceSpec,
    order: usize,
    cfg: &OpNormConfig,
) -> Result<NormReport> {
    t.validate()?;
    if order == 0 {
        return Err(Error::InvalidParameter(
            "truncation order must be positive".into(),
        ));
    }
    let dom_n = dom.abs_norm()?;
    let cod_n = cod.abs_norm()?;

    if cfg.reductions {
        if let Some(r) = reduction::simple_s_section(t, dom, cod, order)? {
            return Ok(single(r, order));
        }
    }

    let sec = Section::build(t, order + 1);
    if cfg.real_only && !sec.is_real() {
        return Err(Error::RealFieldViolation);
    }
    let sn = section_norm(&sec, dom, cod, &dom_n, &cod_n, cfg);
    Ok(single(sn, order))
}

fn single(sn: SectionNorm, order: usize) -> NormReport {
    let witness = Coeffs::from_dense(&sn.witness).with_dim_hint(order + 1);
    let centroid = witness_centroid(&witness);
    NormReport {
        value: sn.value,
        witness,
        method: sn.method,
        order,
        trace: vec![TracePoint {
            order,
            value: sn.value,
            centroid,
        }],
        attainment: Attainment::Inconclusive,
        restarts: sn.restarts,
        converged: sn.converged,
    }
}

pub(crate) struct SectionNorm {
    pub value: f64,
    pub witness: Vec<Complex64>,
    pub method: Method,
    pub converged: bool,
    pub restarts: usize,
}

/// Scales the largest-modulus entry (first on ties) to be real positive.
pub(crate) fn normalize_phase(w: &mut [Complex64]) {
    let mut best = 0.0;
    let mut k = None;
    for (i, v) in w.iter().enumerate() {
        if v.norm() > best * (1.0 + 1e-12) {
            best = v.norm();
            k = Some(i);
        }
    }
    if let Some(k) = k {
        let ph = w[k].conj() / w[k].norm();
        for v in w.iter_mut() {
            *v *= ph;
        }
        w[k] = Complex64::new(w[k].re, 0.0);
    }
}

fn finish(
    sec: &Section,
    dom_n: &AbsNorm,
    cod_n: &AbsNorm,
    mut w: Vec<Complex64>,
    method: Method,
    converged: bool,
    restarts: usize,
) -> SectionNorm {
    let nw = dom_n.norm_dense(&w);
    if nw > 0.0 {
        for v in w.iter_mut() {
            *v /= nw;
        }
    } else {
        w = vec![C_ZERO; sec.dim()];
        w[0] = Complex64::new(1.0, 0.0);
    }
    normalize_phase(&mut w);
    let value = cod_n.norm_dense(&sec.mul(&w));
    SectionNorm {
        value,
        witness: w,
        method,
        converged,
        restarts,
    }
}

/// Norm of a section between two absolute norms.
pub(crate) fn section_norm(
    sec: &Section,
    dom: &SpaceSpec,
    cod: &SpaceSpec,
    dom_n: &AbsNorm,
    cod_n: &AbsNorm,
    cfg: &OpNormConfig,
) -> SectionNorm {
    let n = sec.dim();
    let basis = |j: usize| {
        let mut e = vec![C_ZERO; n];
        e[j] = Complex64::new(1.0, 0.0);
        e
    };

    // Diagonal sections of an absolute norm have norm max |d_i|.
    if dom == cod {
        if let Some(d) = sec.diagonal() {
            let mut j = 0;
            for (i, v) in d.iter().enumerate() {
                if v.norm() > d[j].norm() {
                    j = i;
                }
            }
            return finish(sec, dom_n, cod_n, basis(j), Method::ClosedForm, true, 0);
        }
    }

    if matches!(dom, SpaceSpec::L1) {
        let mut best = (-1.0, 0);
        for j in 0..n {
            let col: Vec<Complex64> = {
                let mut c = vec![C_ZERO; n];
                for &(i, v) in sec.column(j) {
                    c[i] = v;
                }
                c
            };
            let v = cod_n.norm_dense(&col);
            if v > best.0 {
                best = (v, j);
            }
        }
        return finish(
            sec,
            dom_n,
            cod_n,
            basis(best.1),
            Method::ClosedForm,
            true,
            0,
        );
    }

    if matches!(cod, SpaceSpec::C0) {
        let dual = dom_n.dual();
        let mut best = (-1.0, vec![C_ZERO; n]);
        for r in sec.rows() {
            let mut f = vec![C_ZERO; n];
            for (j, v) in r {
                f[j] = v;
            }
            let v = dual.norm_dense(&f);
            if v > best.0 {
                best = (v, f);
            }
        }
        let w = if best.0 > 0.0 {
            dual.norming_dense(&best.1)
        } else {
            basis(0)
        };
        return finish(sec, dom_n, cod_n, w, Method::ClosedForm, true, 0);
    }

    let is_l2 = |s: &SpaceSpec| matches!(s, SpaceSpec::Lp { p } if *p == 2.0);
    if is_l2(dom) && is_l2(cod) && n <= cfg.svd_limit {
        let w = if sec.is_real() {
            let m = sec.to_dense().map(|v| v.re);
            let svd = m.svd(false, true);
            let k = argmax(svd.singular_values.as_slice());
            let vt = svd.v_t.expect("requested");
            (0..n).map(|j| Complex64::new(vt[(k, j)], 0.0)).collect()
        } else {
            let m: DMatrix<Complex64> = sec.to_dense();
            let svd = m.svd(false, true);
            let k = argmax(svd.singular_values.as_slice());
            let vt = svd.v_t.expect("requested");
            (0..n).map(|j| vt[(k, j)].conj()).collect()
        };
        return finish(sec, dom_n, cod_n, w, Method::ClosedForm, true, 0);
    }

    power_iteration(sec, dom_n, cod_n, cfg)
}

fn argmax(v: &[f64]) -> usize {
    let mut k = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[k] {
            k = i;
        }
    }
    k
}

/// Generalised power iteration `x -> J_dom*(M^T J_cod(M x))` with restarts.
fn power_iteration(
    sec: &Section,
    dom_n: &AbsNorm,
    cod_n: &AbsNorm,
    cfg: &OpNormConfig,
) -> SectionNorm {
    let n = sec.dim();
    let dom_dual = dom_n.dual();
    let restarts = cfg.restarts.max(1);

    let start = |r: usize| -> Vec<Complex64> {
        match r {
            0 => {
                let mut e = vec![C_ZERO; n];
                e[0] = Complex64::new(1.0, 0.0);
                e
            }
            1 => {
                let mut best = (-1.0, 0);
                for j in 0..n {
                    let s: f64 = sec.column(j).iter().map(|(_, v)| v.norm()).sum();
                    if s > best.0 {
                        best = (s, j);
                    }
                }
                let mut e = vec![C_ZERO; n];
                e[best.1] = Complex64::new(1.0, 0.0);
                e
            }
            2 => vec![Complex64::new(1.0, 0.0); n],
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cfg.seed
                        .wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                );
                (0..n)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = if cfg.real_only {
                            0.0
                        } else {
                            rng.sample(StandardNormal)
                        };
                        Complex64::new(re, im)
                    })
                    .collect()
            }
        }
    };

    let runs: Vec<(f64, Vec<Complex64>, bool)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut x = start(r);
            let nx = dom_n.norm_dense(&x);
            if nx == 0.0 {
                return (0.0, x, true);
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let mut val = cod_n.norm_dense(&sec.mul(&x));
            let mut converged = false;
            for _ in 0..cfg.max_iter {
                let y = sec.mul(&x);
                if cod_n.norm_dense(&y) == 0.0 {
                    converged = true;
                    break;
                }
                let f = cod_n.norming_dense(&y);
                let g = sec.tmul(&f);
                if dom_dual.norm_dense(&g) == 0.0 {
                    converged = true;
                    break;
                }
                let xn = dom_dual.norming_dense(&g);
                let vn = cod_n.norm_dense(&sec.mul(&xn));
                if vn <= val * (1.0 + cfg.tol) {
                    if vn >= val {
                        x = xn;
                        val = vn;
                    }
                    converged = true;
                    break;
                }
                x = xn;
                val = vn;
            }
            (val, x, converged)
        })
        .collect();

    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.0 > runs[best].0 * (1.0 + 1e-12) {
            best = i;
        }
    }
    let all_converged = runs.iter().all(|r| r.2);
    let (_, w, _) = runs.into_iter().nth(best).unwrap();
    finish(
        sec,
        dom_n,
        cod_n,
        w,
        Method::Iterate,
        all_converged,
        restarts,
    )
}

/// `true` when `t` is the catalog operator `SimpleS`.
pub(crate) fn is_simple_s(t: &OperatorSpec) -> bool {
    matches!(t, OperatorSpec::Catalog(CatalogEntry::SimpleS { .. }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DiagonalRule;
    use std::collections::BTreeSet;

    fn cfg() -> OpNormConfig {
        OpNormConfig::default()
    }

    #[test]
    fn diag_d_is_closed_form() {
        let l2 = SpaceSpec::lp(2.0).unwrap();
        let t = OperatorSpec::Catalog(CatalogEntry::DiagD);
        for n in [2, 5, 20] {
            let r = operator_norm(&t, &l2, &l2, n, &cfg()).unwrap();
            assert_eq!(r.method, Method::ClosedForm);
            assert!((r.value - (1.0 - 2f64.powi(-(n as i32)))).abs() < 1e-15);
            assert_eq!(r.witness, Coeffs::basis(n).with_dim_hint(n + 1));
        }
    }

    #[test]
    fn projection_norms_are_one() {
        let l2 = SpaceSpec::lp(2.0).unwrap();
        let k = 3;
        let b: BTreeSet<usize> = (0..=k).collect();
        let entries: Vec<Complex64> = (0..=k).map(|_| Complex64::new(1.0, 0.0)).collect();
        let p = OperatorSpec::diagonal(DiagonalRule::Explicit { entries, sup: 1.0 });
        let r = operator_norm(&p, &l2, &l2, 8, &cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert!(b.contains(&r.witness.indices().next().unwrap()));
        let minus_p =
            OperatorSpec::compose(vec![OperatorSpec::scalar(Complex64::new(-1.0, 0.0)), p]);
        let q = OperatorSpec::sum(vec![OperatorSpec::Identity, minus_p]);
        let r = operator_norm(&q, &l2, &l2, 8, &cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tc0_plus_identity_on_c0() {
        let t = OperatorSpec::Catalog(CatalogEntry::Tc0).shifted(Complex64::new(1.0, 0.0));
        let r = operator_norm(&t, &SpaceSpec::C0, &SpaceSpec::C0, 30, &cfg()).unwrap();
        assert_eq!(r.method, Method::ClosedForm);
        assert!((r.value - (2.0 - 2f64.powi(-30))).abs() < 1e-14);
    }

    #[test]
    fn witness_invariant_on_iterate_path() {
        let s = SpaceSpec::lp(3.0).unwrap();
        let t = OperatorSpec::sum(vec![
            OperatorSpec::Identity,
            OperatorSpec::rank_one(
                Coeffs::from_real([(0, 0.3), (1, -1.0), (2, 0.5)]),
                Coeffs::from_real([(0, 1.0), (3, 2.0)]),
            ),
        ]);
        let r = operator_norm(&t, &s, &s, 6, &cfg()).unwrap();
        assert_eq!(r.method, Method::Iterate);
        assert!((s.norm(&r.witness).unwrap() - 1.0).abs() < 1e-9);
        assert!((s.norm(&t.apply(&r.witness)).unwrap() - r.value).abs() < 1e-9);
    }

    #[test]
    fn real_only_rejects_complex_sections() {
        let s = SpaceSpec::lp(3.0).unwrap();
        let t = OperatorSpec::scalar(Complex64::new(0.0, 1.0));
        let c = OpNormConfig {
            real_only: true,
            ..cfg()
        };
        assert!(matches!(
            operator_norm(&t, &s, &s, 3, &c),
            Err(Error::RealFieldViolation)
        ));
    }
}
