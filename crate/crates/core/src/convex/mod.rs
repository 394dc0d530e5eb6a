//! The renormed `l_2` norm as a convex program, membership in `B`, and bounds for `Su = u + u_2 e_1`.
//!
//! With atoms `a_n = e_2 + e_{n+2}` and `b_n = q_n (e_1 + e_2 + e_{n+2})`, `n = 1..=N`,
//!
//! `||u|| = min ||x'||_2 + ||(x_1, x_2)||_2 + ||alpha||_1 + ||beta||_1`
//!
//! over `u = x + sum alpha_n a_n + sum beta_n b_n`, where `x' = x - x_1 e_1 - x_2 e_2`.
//! `x` is eliminated, so every `(alpha, beta)` is feasible.

pub mod cone;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spaces::{lp_of, Coeffs, QSeq};
use crate::{Error, Result, C_ZERO};

#[derive(Debug, Clone)]
pub struct MinkowskiOptions {
    /// Relative duality gap at which the solver stops.
    pub tol: f64,
    pub max_iter: usize,
    pub check_every: usize,
    pub qseq: QSeq,
}

impl Default for MinkowskiOptions {
    fn default() -> Self {
        MinkowskiOptions {
            tol: 1e-8,
            max_iter: 400_000,
            check_every: 20,
            qseq: QSeq::Standard,
        }
    }
}

impl MinkowskiOptions {
    pub fn with_tol(tol: f64) -> Self {
        MinkowskiOptions {
            tol,
            ..Default::default()
        }
    }
}

/// `u = x + sum alpha_n a_n + sum beta_n b_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub x: Coeffs,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub objective: f64,
}

fn l2(vals: impl Iterator<Item = Complex64>) -> f64 {
    let a: Vec<f64> = vals.map(|v| v.norm()).collect();
    lp_of(&a, 2.0)
}

fn l1(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

/// `sum alpha_n a_n + sum beta_n b_n`.
fn atoms_sum(alpha: &[Complex64], beta: &[Complex64], qseq: &QSeq) -> Coeffs {
    let mut s = Coeffs::new(0);
    for (k, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
        let n = k + 1;
        let qb = b * qseq.q(n);
        s.add_at(1, qb);
        s.add_at(2, a + qb);
        s.add_at(n + 2, a + qb);
    }
    s
}

impl Decomposition {
    pub fn new(u: &Coeffs, alpha: Vec<Complex64>, beta: Vec<Complex64>, qseq: &QSeq) -> Self {
        assert_eq!(alpha.len(), beta.len());
        let x = u - &atoms_sum(&alpha, &beta, qseq);
        let objective = x_part(&x) + l1(&alpha) + l1(&beta);
        Decomposition {
            x,
            alpha,
            beta,
            objective,
        }
    }

    pub fn trivial(u: &Coeffs, n: usize, qseq: &QSeq) -> Self {
        Decomposition::new(u, vec![C_ZERO; n], vec![C_ZERO; n], qseq)
    }

    pub fn reconstruct(&self, qseq: &QSeq) -> Coeffs {
        &self.x + &atoms_sum(&self.alpha, &self.beta, qseq)
    }

    pub fn n_atoms(&self) -> usize {
        self.alpha.len()
    }
}

/// `||x'||_2 + ||(x_1, x_2)||_2`.
fn x_part(x: &Coeffs) -> f64 {
    let xp = l2(x.iter().filter(|&(i, _)| i != 1 && i != 2).map(|(_, v)| v));
    xp + l2([x.get(1), x.get(2)].into_iter())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinkowskiResult {
    /// Objective of the best decomposition found (an upper bound).
    pub value: f64,
    /// Certified lower bound from a feasible dual point.
    pub lower: f64,
    pub gap: f64,
    pub converged: bool,
    pub iterations: usize,
    pub decomposition: Decomposition,
    /// Dual certificate `g` (bilinear): dual norm at most 1 and `Re <u, g> = lower`.
    pub certificate: Coeffs,
}

struct Problem {
    n: usize,
    q: Vec<f64>,
    // c1 = (u_0, u_3, ..., u_{N+2}), c2 = (u_1, u_2)
    c1: Vec<Complex64>,
    c2: [Complex64; 2],
}

impl Problem {
    fn new(u: &Coeffs, n: usize, qseq: &QSeq) -> Self {
        let mut c1 = vec![u.get(0)];
        c1.extend((3..n + 3).map(|i| u.get(i)));
        Problem {
            n,
            q: (1..=n).map(|k| qseq.q(k)).collect(),
            c1,
            c2: [u.get(1), u.get(2)],
        }
    }

    /// `K(alpha, beta) = ((0, alpha_n + q_n beta_n), (sum q_n beta_n, sum alpha_n + q_n beta_n))`.
    fn k(&self, z: &[Complex64], w1: &mut [Complex64], w2: &mut [Complex64; 2]) {
        let (a, b) = z.split_at(self.n);
        w1[0] = C_ZERO;
        let mut s1 = C_ZERO;
        let mut s2 = C_ZERO;
        for k in 0..self.n {
            let qb = b[k] * self.q[k];
            let t = a[k] + qb;
            w1[k + 1] = t;
            s1 += qb;
            s2 += t;
        }
        *w2 = [s1, s2];
    }

    /// `K^H` applied to `(y1, y2)`; `K` has real entries.
    fn kh(&self, y1: &[Complex64], y2: &[Complex64; 2], out: &mut [Complex64]) {
        let (a, b) = out.split_at_mut(self.n);
        for k in 0..self.n {
            let t = y1[k + 1] + y2[1];
            a[k] = t;
            b[k] = (t + y2[0]) * self.q[k];
        }
    }

    fn primal(&self, z: &[Complex64], w1: &mut [Complex64], w2: &mut [Complex64; 2]) -> f64 {
        self.k(z, w1, w2);
        let r1 = l2(self.c1.iter().zip(w1.iter()).map(|(c, w)| c - w));
        let r2 = l2([self.c2[0] - w2[0], self.c2[1] - w2[1]].into_iter());
        r1 + r2 + l1(z)
    }

    fn op_norm(&self) -> f64 {
        let mut z: Vec<Complex64> = (0..2 * self.n)
            .map(|i| Complex64::new(1.0 + (i % 7) as f64 * 0.1, 0.0))
            .collect();
        let mut w1 = vec![C_ZERO; self.n + 1];
        let mut w2 = [C_ZERO; 2];
        let mut est = 0.0;
        for _ in 0..300 {
            self.k(&z, &mut w1, &mut w2);
            self.kh(&w1, &w2, &mut z);
            let nz = l2(z.iter().copied());
            if nz == 0.0 {
                return 1.0;
            }
            est = nz.sqrt();
            for v in z.iter_mut() {
                *v /= nz;
            }
        }
        // The iterate has unit norm here, so `||K z||` bounds the estimate from below.
        self.k(&z, &mut w1, &mut w2);
        let kz = l2(w1.iter().copied().chain(w2.iter().copied()));
        est.max(kz) * 1.01
    }
}

fn project_ball(v: &mut [Complex64]) {
    let n = l2(v.iter().copied());
    if n > 1.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Minkowski norm of `B` sectioned at `n` atoms, by primal-dual hybrid gradient
/// on the eliminated problem with a certified dual lower bound.
pub fn minkowski_norm(u: &Coeffs, n: usize, opts: &MinkowskiOptions) -> Result<MinkowskiResult> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "atom count must be positive".into(),
        ));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if let Some(m) = u.max_index() {
        if m >= n + 3 {
            return Err(Error::Precondition(format!(
                "support reaches index {m}, outside [0, {})",
                n + 3
            )));
        }
    }
    opts.qseq.validate(n)?;
    let pb = Problem::new(u, n, &opts.qseq);
    let dim = 2 * n;
    let l = pb.op_norm();
    let tau = 0.99 / l;
    let sigma = 0.99 / l;

    let mut z = vec![C_ZERO; dim];
    let mut zbar = z.clone();
    let mut y1 = vec![C_ZERO; n + 1];
    let mut y2 = [C_ZERO; 2];
    let mut w1 = vec![C_ZERO; n + 1];
    let mut w2 = [C_ZERO; 2];
    let mut khy = vec![C_ZERO; dim];

    let mut best_ub = pb.primal(&z, &mut w1, &mut w2);
    let mut best_z = z.clone();
    // g = e_2 (up to phase) is dual feasible, so ||u|| >= |u_2|.
    let mut best_lb = pb.c2[1].norm();
    let ph = if best_lb > 0.0 {
        pb.c2[1] / best_lb
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut best_g: (Vec<Complex64>, [Complex64; 2]) = (vec![C_ZERO; n + 1], [C_ZERO, ph]);
    let mut iters = 0;
    let mut converged = best_ub - best_lb <= opts.tol * best_ub.max(1.0);

    while !converged && iters < opts.max_iter {
        for _ in 0..opts.check_every {
            pb.k(&zbar, &mut w1, &mut w2);
            for (y, (w, c)) in y1.iter_mut().zip(w1.iter().zip(&pb.c1)) {
                *y += (w - c) * sigma;
            }
            for k in 0..2 {
                y2[k] += (w2[k] - pb.c2[k]) * sigma;
            }
            project_ball(&mut y1);
            project_ball(&mut y2);
            pb.kh(&y1, &y2, &mut khy);
            for i in 0..dim {
                let v = z[i] - khy[i] * tau;
                let m = v.norm();
                let nv = if m > tau { v * (1.0 - tau / m) } else { C_ZERO };
                zbar[i] = nv * 2.0 - z[i];
                z[i] = nv;
            }
        }
        iters += opts.check_every;

        let ub = pb.primal(&z, &mut w1, &mut w2);
        if ub < best_ub {
            best_ub = ub;
            best_z.copy_from_slice(&z);
        }
        // g = -y is dual feasible after scaling so that ||K^H g||_inf <= 1.
        let g1: Vec<Complex64> = y1.iter().map(|v| -v).collect();
        let g2 = [-y2[0], -y2[1]];
        pb.kh(&g1, &g2, &mut khy);
        let s = khy.iter().fold(1.0_f64, |m, v| m.max(v.norm()));
        let lb = (g1
            .iter()
            .zip(&pb.c1)
            .map(|(g, c)| g.conj() * c)
            .sum::<Complex64>()
            + g2[0].conj() * pb.c2[0]
            + g2[1].conj() * pb.c2[1])
            .re
            / s;
        if lb > best_lb {
            best_lb = lb;
            best_g = (g1.iter().map(|v| v / s).collect(), [g2[0] / s, g2[1] / s]);
        }
        converged = best_ub - best_lb <= opts.tol * best_ub.max(1.0);
    }

    let (alpha, beta) = best_z.split_at(n);
    let d = Decomposition::new(u, alpha.to_vec(), beta.to_vec(), &opts.qseq);
    let value = d.objective;
    let mut cert = Coeffs::new(n + 3);
    cert.set(0, best_g.0[0].conj());
    for k in 0..n {
        cert.set(k + 3, best_g.0[k + 1].conj());
    }
    cert.set(1, best_g.1[0].conj());
    cert.set(2, best_g.1[1].conj());
    Ok(MinkowskiResult {
        value,
        lower: best_lb.min(value),
        gap: (value - best_lb).max(0.0),
        converged,
        iterations: iters,
        decomposition: d,
        certificate: cert,
    })
}

/// Whether `||u|| <= 1 + tol`.
pub fn membership_b(u: &Coeffs, n: usize, opts: &MinkowskiOptions) -> Result<bool> {
    if l2(u.iter().map(|(_, v)| v)) <= 0.5 {
        return Ok(true);
    }
    let r = minkowski_norm(u, n, opts)?;
    if r.value <= 1.0 + opts.tol {
        Ok(true)
    } else if r.lower > 1.0 + opts.tol {
        Ok(false)
    } else {
        Err(Error::Tolerance {
            upper: r.value,
            lower: r.lower,
        })
    }
}

/// `u = a x + b y + c w` with `x in B_1`, `y in B_2`, `w in B_3`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomicSplit {
    pub a: f64,
    pub x: Coeffs,
    pub b: f64,
    pub y: Coeffs,
    /// `y = sum y_alpha[n-1] (e_2 + e_{n+2})` with `||y_alpha||_1 <= 1`.
    pub y_alpha: Vec<Complex64>,
    pub c: f64,
    pub w: Coeffs,
    /// `w = sum w_beta[n-1] q_n (e_1 + e_2 + e_{n+2})` with `||w_beta||_1 <= 1`.
    pub w_beta: Vec<Complex64>,
}

impl AtomicSplit {
    /// Rechecks the three set memberships by their defining inequalities, with slack `tol`.
    pub fn verify(&self, u: &Coeffs, qseq: &QSeq, tol: f64) -> bool {
        let zeros = vec![C_ZERO; self.y_alpha.len()];
        let in_b1 = x_part(&self.x) <= 1.0 + tol;
        let y_rec = atoms_sum(&self.y_alpha, &zeros, qseq);
        let in_b2 = l1(&self.y_alpha) <= 1.0 + tol && (&y_rec - &self.y).max_abs() <= tol;
        let w_rec = atoms_sum(&vec![C_ZERO; self.w_beta.len()], &self.w_beta, qseq);
        let in_b3 = l1(&self.w_beta) <= 1.0 + tol && (&w_rec - &self.w).max_abs() <= tol;
        let rec = &(&self.x.scale(self.a.into()) + &self.y.scale(self.b.into()))
            + &self.w.scale(self.c.into());
        let coef_ok = self.a.abs() + self.b.abs() + self.c.abs() <= 1.0 + tol;
        in_b1 && in_b2 && in_b3 && coef_ok && (&rec - u).max_abs() <= 1e-10
    }
}

/// Splits `u in B` along `B_0 = aco(B_1 u B_2 u B_3)`.
pub fn b_atomic_decompose(u: &Coeffs, n: usize, opts: &MinkowskiOptions) -> Result<AtomicSplit> {
    let empty = |k: usize| (Coeffs::new(0), vec![C_ZERO; k]);
    if l2(u.iter().map(|(_, v)| v)) <= 0.5 {
        let (y, ya) = empty(n);
        let (w, wb) = empty(n);
        return Ok(AtomicSplit {
            a: 1.0,
            x: u.clone(),
            b: 0.0,
            y,
            y_alpha: ya,
            c: 0.0,
            w,
            w_beta: wb,
        });
    }
    let r = minkowski_norm(u, n, opts)?;
    if r.value > 1.0 + opts.tol {
        return Err(Error::Precondition(format!(
            "vector is not in B: norm is at least {}",
            r.lower
        )));
    }
    let d = r.decomposition;
    let a = x_part(&d.x);
    let b = l1(&d.alpha);
    let c = l1(&d.beta);
    let zeros = vec![C_ZERO; n];
    let norm_by = |v: &[Complex64], s: f64| -> Vec<Complex64> {
        if s == 0.0 {
            vec![C_ZERO; v.len()]
        } else {
            v.iter().map(|z| z / s).collect()
        }
    };
    let y_alpha = norm_by(&d.alpha, b);
    let w_beta = norm_by(&d.beta, c);
    Ok(AtomicSplit {
        a,
        x: if a == 0.0 {
            Coeffs::new(0)
        } else {
            d.x.scale((1.0 / a).into())
        },
        b,
        y: atoms_sum(&y_alpha, &zeros, &opts.qseq),
        y_alpha,
        c,
        w: atoms_sum(&zeros, &w_beta, &opts.qseq),
        w_beta,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SuBound {
    /// `||x'|| + ||(x_1 + tau, x_2)|| + sum |beta_n + alpha_n / q_n|`, `tau = x_2 + sum q_n beta_n`.
    pub tight: f64,
    /// `||x'|| + (5/3) ||(x_1, x_2)|| + (7/4) ||beta||_1 + sum |alpha_n| / q_n`.
    pub relaxed: f64,
}

/// Upper bounds for `||Su||` from a decomposition of `u`.
pub fn su_upper_bound(d: &Decomposition, qseq: &QSeq) -> SuBound {
    let x = &d.x;
    let xp = l2(x.iter().filter(|&(i, _)| i != 1 && i != 2).map(|(_, v)| v));
    let tau = x.get(2)
        + d.beta
            .iter()
            .enumerate()
            .map(|(k, b)| b * qseq.q(k + 1))
            .sum::<Complex64>();
    let tight = xp
        + l2([x.get(1) + tau, x.get(2)].into_iter())
        + d.alpha
            .iter()
            .zip(&d.beta)
            .enumerate()
            .map(|(k, (a, b))| (b + a / qseq.q(k + 1)).norm())
            .sum::<f64>();
    let relaxed = xp
        + 5.0 / 3.0 * l2([x.get(1), x.get(2)].into_iter())
        + 1.75 * l1(&d.beta)
        + d.alpha
            .iter()
            .enumerate()
            .map(|(k, a)| a.norm() / qseq.q(k + 1))
            .sum::<f64>();
    SuBound { tight, relaxed }
}

/// `Su = u + u_2 e_1`.
pub fn apply_sex(u: &Coeffs) -> Coeffs {
    let mut s = u.clone();
    s.add_at(1, u.get(2));
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub n: usize,
    /// `1 / q_n`.
    pub bound: f64,
    /// `||e_1 + e_2 + e_{n+2}|| / ||e_2 + e_{n+2}||` from the solver.
    pub measured: f64,
    pub measured_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleGap {
    pub n_atoms: usize,
    pub u: Coeffs,
    pub norm_u_lower: f64,
    pub norm_su_upper: f64,
    /// `2 ||u||_lower - ||Su||_upper`.
    pub delta: f64,
    pub su_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SexReport {
    pub qseq: QSeq,
    pub lower_bounds: Vec<LowerBoundRow>,
    pub samples: Vec<SampleGap>,
    pub min_delta: f64,
    pub max_ratio: f64,
}

fn random_sample(rng: &mut ChaCha8Rng, k: usize) -> (usize, Coeffs) {
    let n: usize = rng.random_range(1..=8);
    let gauss = |rng: &mut ChaCha8Rng| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    };
    let u = match k % 3 {
        // Generic dense vectors.
        0 => Coeffs::from_pairs((0..n + 3).map(|i| (i, gauss(rng)))),
        // Near an extremal direction e_2 + e_{m+2}.
        1 => {
            let m = rng.random_range(1..=n);
            let mut u = Coeffs::from_real([(2, 1.0), (m + 2, 1.0)]);
            for i in 0..n + 3 {
                u.add_at(i, gauss(rng) * 1e-2);
            }
            u
        }
        // Sparse real vectors touching coordinate 2.
        _ => {
            let mut u = Coeffs::from_real([(2, rng.random_range(0.2..1.0))]);
            for i in 0..n + 3 {
                if rng.random_bool(0.4) {
                    u.add_at(i, Complex64::new(rng.random_range(-1.0..1.0), 0.0));
                }
            }
            if u.is_zero() {
                u.set(2, Complex64::new(1.0, 0.0));
            }
            u
        }
    };
    (n, u.with_dim_hint(n + 3))
}

/// Lower bounds `1/q_n <= ||S||` and sampled certificates `||Su|| < 2 ||u||`.
pub fn sex_norm_bounds(
    ns: &[usize],
    samples: usize,
    seed: u64,
    opts: &MinkowskiOptions,
) -> Result<SexReport> {
    let lower_bounds = ns
        .par_iter()
        .map(|&n| {
            let top = minkowski_norm(
                &Coeffs::from_real([(1, 1.0), (2, 1.0), (n + 2, 1.0)]),
                n,
                opts,
            )?;
            let base = minkowski_norm(&Coeffs::from_real([(2, 1.0), (n + 2, 1.0)]), n, opts)?;
            Ok(LowerBoundRow {
                n,
                bound: 1.0 / opts.qseq.q(n),
                measured: top.value / base.value,
                measured_gap: top.gap.max(base.gap),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let samples = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64 * 0x9E37_79B9));
            let (n, raw) = random_sample(&mut rng, k);
            let scale = minkowski_norm(&raw, n, opts)?.value;
            let u = raw.scale((1.0 / scale).into());
            let ru = minkowski_norm(&u, n, opts)?;
            let rsu = minkowski_norm(&apply_sex(&u), n, opts)?;
            let bound = su_upper_bound(&ru.decomposition, &opts.qseq).tight;
            Ok(SampleGap {
                n_atoms: n,
                u,
                norm_u_lower: ru.lower,
                norm_su_upper: rsu.value,
                delta: 2.0 * ru.lower - rsu.value,
                su_bound: bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let min_delta = samples
        .iter()
        .map(|s| s.delta)
        .fold(f64::INFINITY, f64::min);
    let max_ratio = samples
        .iter()
        .map(|s| s.norm_su_upper / s.norm_u_lower)
        .fold(0.0, f64::max);
    Ok(SexReport {
        qseq: opts.qseq.clone(),
        lower_bounds,
        samples,
        min_delta,
        max_ratio,
    })
}
