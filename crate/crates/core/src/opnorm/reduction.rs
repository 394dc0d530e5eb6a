use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{is_simple_s, Method, SectionNorm};
use crate::operators::OperatorSpec;
use crate::spaces::{lp_of, Coeffs, SpaceSpec};
use crate::{Error, Result};

/// `f(a, b, c) = (a^q + (b^p + c^p)^{q/p})^{1/q}`, or `max{a, (b^p + c^p)^{1/p}}` for `q = inf`.
pub fn qsum_f(p: f64, q: f64, a: f64, b: f64, c: f64) -> f64 {
    lp_of(&[a, lp_of(&[b, c], p)], q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxFReport {
    /// Maximum of `f(beta, alpha, gamma)` over `K = {f(alpha, beta, gamma) = 1}`.
    pub c: f64,
    /// Maximizer `(alpha, beta, gamma)` on `K`.
    pub argmax: [f64; 3],
    /// `2^{1/p - 1/q}`.
    pub closed_form: f64,
    /// `(2^{-1/q}, 0, 2^{-1/q})`.
    pub closed_form_argmax: [f64; 3],
}

/// `alpha = cos theta`, and `(beta, gamma)` on the `l_p` circle of radius `sin theta` with `beta^p = t sin^p theta`.
/// Using `t` rather than an angle keeps the ratio's slope non-zero at `beta = 0`.
fn point(p: f64, theta: f64, t: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    [
        ct,
        st * t.powf(1.0 / p),
        st * (1.0 - t).max(0.0).powf(1.0 / p),
    ]
}

/// Golden-section maximisation of a unimodal `g` on `[a, b]`.
fn golden_max<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..200 {
        if b - a < 1e-15 {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = g(x2);
        }
    }
    let m = 0.5 * (a + b);
    // Endpoints win when the maximum sits on the boundary.
    [a, m, b]
        .into_iter()
        .fold((f64::NEG_INFINITY, m), |acc, x| {
            let v = g(x);
            if v > acc.0 {
                (v, x)
            } else {
                acc
            }
        })
        .1
}

/// Maximises `f(beta, alpha, shrink * gamma) / f(alpha, beta, gamma)` over the positive octant.
/// Returns the maximum and the maximiser scaled onto `K`.
pub(crate) fn maximize_ratio(p: f64, q: f64, shrink: f64) -> (f64, [f64; 3]) {
    let ratio = |th: f64, t: f64| {
        let [a, b, c] = point(p, th, t);
        qsum_f(p, q, b, a, shrink * c) / qsum_f(p, q, a, b, c)
    };
    let m = 200;
    let (h_th, h_t) = (FRAC_PI_2 / m as f64, 1.0 / m as f64);
    // Strict improvement only, so ties keep the lexicographically smallest grid point.
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=m {
        for j in 0..=m {
            let (th, t) = (i as f64 * h_th, j as f64 * h_t);
            let v = ratio(th, t);
            if v > best.0 {
                best = (v, th, t);
            }
        }
    }
    let (_, mut th, mut t) = best;
    let (mut w_th, mut w_t) = (2.0 * h_th, 2.0 * h_t);
    for _ in 0..60 {
        th = golden_max(
            |x| ratio(x, t),
            (th - w_th).max(0.0),
            (th + w_th).min(FRAC_PI_2),
        );
        t = golden_max(|x| ratio(th, x), (t - w_t).max(0.0), (t + w_t).min(1.0));
        w_th *= 0.5;
        w_t *= 0.5;
        if w_th < 1e-15 {
            break;
        }
    }
    let [a, b, c] = point(p, th, t);
    let s = qsum_f(p, q, a, b, c);
    (ratio(th, t), [a / s, b / s, c / s])
}

/// Maximises `(alpha, beta, gamma) -> f(beta, alpha, gamma)` over `K` by grid search and polish.
pub fn max_f_over_k(p: f64, q: f64) -> Result<MaxFReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent {
            name: "p",
            value: p,
            reason: "must lie in (1, inf)",
        });
    }
    if !(p < q) {
        return Err(Error::InvalidParameter(format!(
            "the reduction needs p < q, got p = {p}, q = {q}"
        )));
    }
    let (c, argmax) = maximize_ratio(p, q, 1.0);
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let a = 2f64.powf(-inv_q);
    Ok(MaxFReport {
        c,
        argmax,
        closed_form: 2f64.powf(1.0 / p - inv_q),
        closed_form_argmax: [a, 0.0, a],
    })
}

/// Exact section norm of `SimpleS` on `K (+)_q l_p` with `p < q`.
///
/// On `span{e_0, ..., e_N}` the tail factor `n/(n+1)` is largest at `n = N`, so the
/// section norm is the maximum of `f(beta, alpha, c_N gamma)` over `K` with `c_N = N/(N+1)`.
pub(crate) fn simple_s_section(
    t: &OperatorSpec,
    dom: &SpaceSpec,
    cod: &SpaceSpec,
    order: usize,
) -> Result<Option<SectionNorm>> {
    if !is_simple_s(t) || dom != cod || order < 2 {
        return Ok(None);
    }
    let SpaceSpec::QSumLp { q, p } = *dom else {
        return Ok(None);
    };
    if !(p < q) {
        return Ok(None);
    }
    let c = order as f64 / (order as f64 + 1.0);
    let (_, [a, b, g]) = maximize_ratio(p, q, c);
    let mut w = Coeffs::new(order + 1);
    w.set(0, Complex64::new(a, 0.0));
    w.set(1, Complex64::new(b, 0.0));
    w.set(order, Complex64::new(g, 0.0));
    let nw = dom.norm(&w)?;
    let w = w.scale(Complex64::new(1.0 / nw, 0.0));
    let value = cod.norm(&t.apply(&w))?;
    Ok(Some(SectionNorm {
        value,
        witness: w.to_dense(order + 1),
        method: Method::ReductionF,
        converged: true,
        restarts: 0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_constant() {
        for (p, q) in [(2.0, 4.0), (2.0, f64::INFINITY), (1.5, 2.0), (3.0, 8.0)] {
            let r = max_f_over_k(p, q).unwrap();
            assert!(
                (r.c - r.closed_form).abs() < 1e-10,
                "{p} {q}: {} vs {}",
                r.c,
                r.closed_form
            );
            for k in 0..3 {
                assert!((r.argmax[k] - r.closed_form_argmax[k]).abs() < 1e-6);
            }
        }
        let r = max_f_over_k(2.0, 4.0).unwrap();
        assert!((r.closed_form - 1.189207115002721).abs() < 1e-15);
    }

    #[test]
    fn rejects_p_not_below_q() {
        assert!(max_f_over_k(2.0, 2.0).is_err());
        assert!(max_f_over_k(3.0, 2.0).is_err());
    }

    #[test]
    fn f_at_infinity_is_max() {
        assert_eq!(qsum_f(2.0, f64::INFINITY, 1.0, 0.0, 0.0), 1.0);
        assert!((qsum_f(2.0, f64::INFINITY, 0.5, 1.0, 1.0) - 2f64.sqrt()).abs() < 1e-15);
    }
}
