//! The same Minkowski-norm program in second-order-cone form, solved by an interior-point method.
//! Used as an independent cross-check of the first-order solver at small sections.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::spaces::{Coeffs, QSeq};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ConeSolution {
    pub primal: f64,
    pub dual: f64,
}

/// Solves `min sum t + s_1 + s_2` with every modulus and `l_2` term as a second-order cone.
pub fn minkowski_norm_cone(u: &Coeffs, n: usize, qseq: &QSeq) -> Result<ConeSolution> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "atom count must be positive".into(),
        ));
    }
    if let Some(m) = u.max_index() {
        if m >= n + 3 {
            return Err(Error::Precondition(format!(
                "support reaches index {m}, outside [0, {})",
                n + 3
            )));
        }
    }
    // Variable layout: alpha (re, im) pairs, beta pairs, t_alpha, t_beta, s1, s2.
    let a_re = |k: usize| 2 * k;
    let b_re = |k: usize| 2 * n + 2 * k;
    let t_a = |k: usize| 4 * n + k;
    let t_b = |k: usize| 5 * n + k;
    let s1 = 6 * n;
    let s2 = 6 * n + 1;
    let nv = 6 * n + 2;

    let (mut ri, mut ci, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    let mut rhs = Vec::new();
    let mut cones = Vec::new();
    let mut row = 0usize;
    let push = |r: usize,
                c: usize,
                v: f64,
                ri: &mut Vec<usize>,
                ci: &mut Vec<usize>,
                vals: &mut Vec<f64>| {
        ri.push(r);
        ci.push(c);
        vals.push(v);
    };

    for k in 0..n {
        for (t, base) in [(t_a(k), a_re(k)), (t_b(k), b_re(k))] {
            push(row, t, -1.0, &mut ri, &mut ci, &mut vals);
            push(row + 1, base, -1.0, &mut ri, &mut ci, &mut vals);
            push(row + 2, base + 1, -1.0, &mut ri, &mut ci, &mut vals);
            rhs.extend([0.0, 0.0, 0.0]);
            cones.push(SupportedConeT::SecondOrderConeT(3));
            row += 3;
        }
    }

    // (s1, x_0, x_3, ..., x_{N+2}) with x_{k+3} = u_{k+3} - alpha_k - q beta_k.
    push(row, s1, -1.0, &mut ri, &mut ci, &mut vals);
    rhs.push(0.0);
    let u0 = u.get(0);
    rhs.extend([u0.re, u0.im]);
    let mut r = row + 3;
    for k in 0..n {
        let q = qseq.q(k + 1);
        let uk = u.get(k + 3);
        for part in 0..2 {
            push(r + part, a_re(k) + part, 1.0, &mut ri, &mut ci, &mut vals);
            push(r + part, b_re(k) + part, q, &mut ri, &mut ci, &mut vals);
        }
        rhs.extend([uk.re, uk.im]);
        r += 2;
    }
    cones.push(SupportedConeT::SecondOrderConeT(r - row));
    row = r;

    // (s2, x_1, x_2) with x_1 = u_1 - sum q beta, x_2 = u_2 - sum (alpha + q beta).
    push(row, s2, -1.0, &mut ri, &mut ci, &mut vals);
    let (u1, u2) = (u.get(1), u.get(2));
    rhs.extend([0.0, u1.re, u1.im, u2.re, u2.im]);
    for k in 0..n {
        let q = qseq.q(k + 1);
        for part in 0..2 {
            push(
                row + 1 + part,
                b_re(k) + part,
                q,
                &mut ri,
                &mut ci,
                &mut vals,
            );
            push(
                row + 3 + part,
                a_re(k) + part,
                1.0,
                &mut ri,
                &mut ci,
                &mut vals,
            );
            push(
                row + 3 + part,
                b_re(k) + part,
                q,
                &mut ri,
                &mut ci,
                &mut vals,
            );
        }
    }
    cones.push(SupportedConeT::SecondOrderConeT(5));
    row += 5;

    let a = CscMatrix::new_from_triplets(row, nv, ri, ci, vals);
    let p = CscMatrix::new(nv, nv, vec![0; nv + 1], vec![], vec![]);
    let mut c = vec![0.0; nv];
    for v in c.iter_mut().skip(4 * n) {
        *v = 1.0;
    }
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-10)
        .tol_gap_rel(1e-10)
        .tol_feas(1e-10)
        .build()
        .map_err(|e| Error::Cone(format!("{e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &c, &a, &rhs, &cones, settings)
        .map_err(|e| Error::Cone(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;
    match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(ConeSolution {
            primal: sol.obj_val,
            dual: sol.obj_val_dual,
        }),
        s => Err(Error::Cone(format!("status {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_form_atoms() {
        let qs = QSeq::Standard;
        let r = minkowski_norm_cone(&Coeffs::from_real([(2, 1.0), (4, 1.0)]), 3, &qs).unwrap();
        assert!((r.primal - 1.0).abs() < 1e-7);
        let r = minkowski_norm_cone(&Coeffs::from_real([(1, 1.0), (2, 1.0), (3, 1.0)]), 1, &qs)
            .unwrap();
        assert!((r.primal - 1.6).abs() < 1e-7);
    }
}
