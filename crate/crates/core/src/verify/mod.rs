//! The acceptance suite: numerical checks of the library against reference values.

pub mod oracle;

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::convex::{cone::minkowski_norm_cone, minkowski_norm, sex_norm_bounds, MinkowskiOptions};
use crate::operators::{CatalogEntry, DiagonalRule, OperatorSpec};
use crate::opnorm::{
    attainment_scan, max_f_over_k, operator_norm, Attainment, Method, OpNormConfig,
};
use crate::pseudospectrum::{
    att1_perturbation, grid_scan, lp111_perturbation, resolvent_norm, Lp111Case, PointClass,
    PspecGrid, Region, LEVEL_BAND,
};
use crate::spaces::{p_space_defect, BlockSpec, Coeffs, QSeq, SpaceSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    /// Wall-clock time; excluded from serialised reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub qseq: QSeq,
    /// Check ids to run, all of them when empty.
    pub only: Vec<String>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0x5eed,
            qseq: QSeq::Standard,
            only: Vec::new(),
        }
    }
}

struct Check {
    id: &'static str,
    title: &'static str,
    budget: f64,
    run: fn(&VerifyConfig) -> Result<(bool, String)>,
}

const CHECKS: &[Check] = &[
    Check {
        id: "QSEQ",
        title: "weight sequence lies in (1/2, 1/sqrt 2) and decreases",
        budget: 1.0,
        run: qseq,
    },
    Check {
        id: "AC1",
        title: "SimpleS section norms against the test-vector values",
        budget: 10.0,
        run: ac1,
    },
    Check {
        id: "AC1-SECTION",
        title: "SimpleS section norms against the exact section maximum",
        budget: 10.0,
        run: ac1_section,
    },
    Check {
        id: "AC2",
        title: "max of f(beta, alpha, gamma) over K",
        budget: 5.0,
        run: ac2,
    },
    Check {
        id: "AC3",
        title: "rank-one resolvent law |z|^-1 + |z|^-2",
        budget: 5.0,
        run: ac3,
    },
    Check {
        id: "AC4",
        title: "pseudospectrum radii against eps + sqrt(4 eps + eps^2)",
        budget: 60.0,
        run: ac4,
    },
    Check {
        id: "AC4-ROOT",
        title: "pseudospectrum radii against the root of 1/r + 1/r^2 = 1/eps",
        budget: 60.0,
        run: ac4_root,
    },
    Check {
        id: "AC5",
        title: "atom norms in the renormed space",
        budget: 30.0,
        run: ac5,
    },
    Check {
        id: "AC6",
        title: "||S|| squeeze: lower bounds 1/q_n and sampled ||Su|| < 2||u||",
        budget: 300.0,
        run: ac6,
    },
    Check {
        id: "AC7",
        title: "rank-one eigenvalue planting certificates",
        budget: 30.0,
        run: ac7,
    },
    Check {
        id: "AC8",
        title: "operator norms against a unit-sphere grid",
        budget: 120.0,
        run: ac8,
    },
    Check {
        id: "AC9",
        title: "p-space defect of disjoint and shifted sequences",
        budget: 5.0,
        run: ac9,
    },
    Check {
        id: "AC10",
        title: "perturbations closing the lower bound",
        budget: 30.0,
        run: ac10,
    },
];

/// All check ids in suite order.
pub fn check_ids() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.id).collect()
}

/// Runs one check. Errors inside a check count as failures.
pub fn run_check(id: &str, cfg: &VerifyConfig) -> Result<CheckResult> {
    let check = CHECKS
        .iter()
        .find(|c| c.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::InvalidParameter(format!("unknown check {id:?}")))?;
    let start = Instant::now();
    let outcome = (check.run)(cfg);
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if seconds > check.budget {
        passed = false;
        detail = format!("{detail}; over budget: {seconds:.1} s > {} s", check.budget);
    }
    Ok(CheckResult {
        id: check.id.to_string(),
        title: check.title.to_string(),
        passed,
        detail,
        seconds,
    })
}

/// Runs the selected checks one after another, in suite order.
pub fn run_suite(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    for id in &cfg.only {
        if !CHECKS.iter().any(|c| c.id.eq_ignore_ascii_case(id)) {
            return Err(Error::InvalidParameter(format!("unknown check {id:?}")));
        }
    }
    CHECKS
        .iter()
        .filter(|c| cfg.only.is_empty() || cfg.only.iter().any(|o| o.eq_ignore_ascii_case(c.id)))
        .map(|c| run_check(c.id, cfg))
        .collect()
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn qseq(cfg: &VerifyConfig) -> Result<(bool, String)> {
    match cfg.qseq.validate(1000) {
        Ok(()) => {
            let q1 = cfg.qseq.q(1);
            Ok((
                true,
                format!("q_1 = {q1}, q_1000 = {:.6}", cfg.qseq.q(1000)),
            ))
        }
        Err(e) => Ok((false, e.to_string())),
    }
}

const AC1_PAIRS: [(f64, f64); 2] = [(2.0, 4.0), (2.0, f64::INFINITY)];
const AC1_ORDERS: [usize; 3] = [10, 100, 1000];

fn simple_s(p: f64, q: f64) -> Result<(OperatorSpec, SpaceSpec)> {
    Ok((
        OperatorSpec::catalog(CatalogEntry::SimpleS { p, q }),
        SpaceSpec::qsum(q, p)?,
    ))
}

fn ac1(_: &VerifyConfig) -> Result<(bool, String)> {
    let cfg = OpNormConfig::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for (p, q) in AC1_PAIRS {
        let (t, s) = simple_s(p, q)?;
        let sup = oracle::simple_s_sup(p, q);
        let scan = attainment_scan(&t, &s, &AC1_ORDERS, &cfg)?;
        for tp in &scan.trace {
            let want = oracle::simple_s_test_vector(p, q, tp.order);
            let err = (tp.value - want).abs();
            let pass = err < 1e-6 && tp.value < sup;
            ok &= pass;
            notes.push(format!(
                "({p},{q}) N={}: {:.12} vs {want:.12} err {err:.2e}",
                tp.order, tp.value
            ));
        }
        let gap = sup - scan.value;
        ok &= gap < 1e-3 && gap > 0.0 && scan.attainment == Attainment::Escaping;
        notes.push(format!(
            "({p},{q}) C - value = {gap:.2e}, {:?}",
            scan.attainment
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn ac1_section(_: &VerifyConfig) -> Result<(bool, String)> {
    let cfg = OpNormConfig::default();
    let plain = OpNormConfig {
        reductions: false,
        ..OpNormConfig::default()
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for (p, q) in AC1_PAIRS {
        let (t, s) = simple_s(p, q)?;
        for n in AC1_ORDERS {
            let r = operator_norm(&t, &s, &s, n, &cfg)?;
            let want = oracle::simple_s_section(p, q, n);
            let err = (r.value - want).abs();
            ok &= err < 1e-9 && r.value < oracle::simple_s_sup(p, q);
            notes.push(format!("({p},{q}) N={n}: err {err:.2e}"));
        }
        // The generic iteration on the full section agrees with the reduction.
        let r = operator_norm(&t, &s, &s, 10, &plain)?;
        let err = (r.value - oracle::simple_s_section(p, q, 10)).abs();
        ok &= r.method == Method::Iterate && err < 1e-8;
        notes.push(format!("({p},{q}) N=10 iterate err {err:.2e}"));
    }
    Ok((ok, notes.join("; ")))
}

fn ac2(_: &VerifyConfig) -> Result<(bool, String)> {
    let pairs = [
        (2.0, 4.0),
        (2.0, f64::INFINITY),
        (1.5, 2.0),
        (3.0, 8.0),
        (1.5, 3.0),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (p, q) in pairs {
        let r = max_f_over_k(p, q)?;
        let ec = (r.c - oracle::simple_s_sup(p, q)).abs();
        let ea = (0..3)
            .map(|k| (r.argmax[k] - r.closed_form_argmax[k]).abs())
            .fold(0.0, f64::max);
        ok &= ec < 1e-6 && ea < 1e-6;
        notes.push(format!("({p},{q}): C err {ec:.1e}, argmax err {ea:.1e}"));
    }
    Ok((ok, notes.join("; ")))
}

/// Deterministic points with `0.5 <= |z| <= 3`.
fn ac3_points() -> Vec<Complex64> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    (0..20)
        .map(|k| Complex64::from_polar(0.5 + 2.5 * k as f64 / 19.0, 2.0 * PI * golden * k as f64))
        .collect()
}

fn ac3(_: &VerifyConfig) -> Result<(bool, String)> {
    let cfg = OpNormConfig::default();
    let cases = [
        (
            OperatorSpec::catalog(CatalogEntry::Tc0),
            SpaceSpec::C0,
            "tc0",
        ),
        (
            OperatorSpec::catalog(CatalogEntry::Tl1),
            SpaceSpec::L1,
            "tl1",
        ),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (t, s, name) in cases {
        let mut worst = 0.0f64;
        for z in ac3_points() {
            let r = resolvent_norm(&t, &s, z, 30, &cfg)?;
            let want = oracle::rank_one_resolvent(z.norm());
            worst = worst.max((r - want).abs() / want);
        }
        ok &= worst < 1e-4;
        notes.push(format!("{name}: max rel err {worst:.2e}"));
    }
    Ok((ok, notes.join("; ")))
}

const AC4_EPS: [f64; 3] = [0.1, 0.5, 1.0];

fn tc0_grid(eps: f64) -> Result<PspecGrid> {
    grid_scan(
        &OperatorSpec::catalog(CatalogEntry::Tc0),
        &SpaceSpec::C0,
        Region::square(3.0),
        (121, 121),
        eps,
        30,
        LEVEL_BAND,
        &OpNormConfig::default(),
    )
}

fn ac4(_: &VerifyConfig) -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for eps in AC4_EPS {
        let s = tc0_grid(eps)?.summary();
        let want = oracle::radius_stated(eps);
        let err = (s.strict_radius - want).abs();
        ok &= err <= s.cell_width;
        if eps == 0.5 {
            ok &= (s.strict_radius - 2.0).abs() <= s.cell_width;
        }
        notes.push(format!(
            "eps={eps}: radius {:.4} vs {want:.4}",
            s.strict_radius
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn ac4_root(_: &VerifyConfig) -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for eps in AC4_EPS {
        let g = tc0_grid(eps)?;
        let s = g.summary();
        let want = oracle::radius_root(eps);
        let err = (s.strict_radius - want).abs();
        let agree = g
            .cells
            .iter()
            .filter(|c| (c.class == PointClass::Strict) == (c.z.norm() < want))
            .count() as f64
            / g.cells.len() as f64;
        ok &= err <= s.cell_width && agree >= 0.99;
        notes.push(format!(
            "eps={eps}: radius {:.4} vs {want:.4}, cell agreement {:.4}, level cells {}",
            s.strict_radius, agree, s.level
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn ac5(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let atoms = 16;
    let opts = MinkowskiOptions {
        qseq: cfg.qseq.clone(),
        ..MinkowskiOptions::default()
    };
    let mut ok = true;
    let (mut worst, mut worst_cone) = (0.0f64, 0.0f64);
    for n in 1..=10 {
        let a = Coeffs::from_real([(2, 1.0), (n + 2, 1.0)]);
        let b = Coeffs::from_real([(1, 1.0), (2, 1.0), (n + 2, 1.0)]);
        for (u, want) in [(a, 1.0), (b, 1.0 / cfg.qseq.q(n))] {
            let r = minkowski_norm(&u, atoms, &opts)?;
            let cone = minkowski_norm_cone(&u, atoms, &cfg.qseq)?;
            ok &= r.converged;
            worst = worst.max((r.value - want).abs());
            worst_cone = worst_cone.max((r.value - cone.primal).abs());
        }
    }
    ok &= worst < 1e-4 && worst_cone < 1e-4;
    Ok((
        ok,
        format!("max err {worst:.2e}, max first-order vs cone {worst_cone:.2e}"),
    ))
}

fn ac6(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let opts = MinkowskiOptions {
        qseq: cfg.qseq.clone(),
        ..MinkowskiOptions::default()
    };
    let ns = [1, 2, 5, 10, 20, 50, 100];
    let r = sex_norm_bounds(&ns, 100, cfg.seed, &opts)?;
    let bounds: Vec<f64> = r.lower_bounds.iter().map(|b| b.bound).collect();
    let increasing = bounds.windows(2).all(|w| w[1] > w[0]);
    let below_two = bounds.iter().all(|&b| b < 2.0);
    let last = *bounds.last().unwrap();
    let measured = r
        .lower_bounds
        .iter()
        .map(|b| (b.measured - b.bound).abs())
        .fold(0.0, f64::max);
    let ok = increasing
        && below_two
        && last > 1.99
        && measured < 1e-4
        && r.samples.len() == 100
        && r.min_delta > 0.0
        && r.max_ratio < 2.0;
    Ok((
        ok,
        format!(
            "1/q_100 = {last:.6}, bound vs solver {measured:.1e}, min 2||u|| - ||Su|| = {:.3e}, max ratio {:.6}",
            r.min_delta, r.max_ratio
        ),
    ))
}

fn ac7(_: &VerifyConfig) -> Result<(bool, String)> {
    let cfg = OpNormConfig::default();
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let th = |k: usize| 2.0 * PI * golden * k as f64;
    let mut jobs: Vec<(OperatorSpec, SpaceSpec, Complex64, f64, usize)> = Vec::new();
    let zero = OperatorSpec::scalar(c64(0.0, 0.0));
    for k in 0..10 {
        let z = Complex64::from_polar(0.5 * (0.3 + 0.7 * k as f64 / 9.0), th(k));
        jobs.push((zero.clone(), SpaceSpec::lp(3.0)?, z, 0.5, 8));
    }
    for k in 0..10 {
        let d = 1.0 - 0.5f64.powi(k as i32 % 6);
        let z = c64(d, 0.0) + Complex64::from_polar(0.09, th(k));
        jobs.push((
            OperatorSpec::catalog(CatalogEntry::DiagD),
            SpaceSpec::lp(2.0)?,
            z,
            0.1,
            12,
        ));
    }
    for k in 0..10 {
        let z = Complex64::from_polar(0.2 + 0.75 * k as f64 / 9.0, th(k));
        jobs.push((
            OperatorSpec::catalog(CatalogEntry::Tc0),
            SpaceSpec::C0,
            z,
            0.5,
            20,
        ));
    }
    let mut passed = 0;
    let (mut worst_res, mut worst_excess) = (0.0f64, f64::NEG_INFINITY);
    for (t, s, z, eps, n) in &jobs {
        let cert = att1_perturbation(t, s, *z, *eps, *n, &cfg)?;
        worst_res = worst_res.max(cert.residual);
        worst_excess = worst_excess.max(cert.norm_a - eps);
        if cert.check(1e-10) {
            passed += 1;
        }
    }
    Ok((
        passed == jobs.len() && jobs.len() == 30,
        format!(
            "{passed}/{} certificates, max residual {worst_res:.2e}, max ||A|| - eps {worst_excess:.2e}",
            jobs.len()
        ),
    ))
}

/// Row-major Gaussian matrices with sizes cycling through 2, 3, 4.
fn ac8_instances(seed: u64) -> Vec<(Vec<Vec<f64>>, f64)> {
    let ps = [1.5, 2.0, 3.0, f64::INFINITY];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50)
        .map(|k| {
            let n = 2 + k % 3;
            let m = (0..n)
                .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            (m, ps[(k / 3) % 4])
        })
        .collect()
}

fn matrix_operator(m: &[Vec<f64>]) -> OperatorSpec {
    OperatorSpec::sum(
        m.iter()
            .enumerate()
            .map(|(i, row)| {
                let f = Coeffs::from_real(row.iter().copied().enumerate());
                OperatorSpec::rank_one(f, Coeffs::basis(i))
            })
            .collect(),
    )
}

fn ac8(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let ocfg = OpNormConfig {
        real_only: true,
        seed: cfg.seed,
        ..OpNormConfig::default()
    };
    let mut worst = 0.0f64;
    let mut fails = 0;
    for (m, p) in ac8_instances(cfg.seed) {
        let s = if p.is_infinite() {
            SpaceSpec::C0
        } else {
            SpaceSpec::lp(p)?
        };
        let got = operator_norm(&matrix_operator(&m), &s, &s, m.len() - 1, &ocfg)?.value;
        let want = oracle::sphere_grid_norm(&m, p, 0.01);
        let err = (got - want).abs();
        worst = worst.max(err);
        if err >= 1e-3 {
            fails += 1;
        }
    }
    Ok((
        fails == 0,
        format!("50 instances, {fails} off, max |engine - grid| {worst:.2e}"),
    ))
}

fn ac9(_: &VerifyConfig) -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let s = SpaceSpec::lp(p)?;
        let x = Coeffs::from_real([(0, 1.0), (1, -0.5), (3, 0.25), (4, 2.0)]);
        let disjoint: Vec<Coeffs> = (1..=5)
            .map(|k| Coeffs::from_real([(5 + 3 * k, 1.0 / k as f64), (6 + 3 * k, -0.75)]))
            .collect();
        let zero = p_space_defect(&x, &disjoint, p, &s)?
            .iter()
            .all(|&d| d == 0.0);

        let base = Coeffs::from_real((0..80).map(|i| (i, 0.5f64.powi(i as i32))));
        let shifted: Vec<Coeffs> = (0..=40).map(|k| base.shifted(k)).collect();
        let d = p_space_defect(&base, &shifted, p, &s)?;
        let (d10, d40) = (d[10].abs(), d[40].abs());
        ok &= zero && d40 < 1e-6 && d40 <= d10;
        notes.push(format!(
            "p={p}: disjoint zero {zero}, |d_10| {d10:.2e}, |d_40| {d40:.2e}"
        ));
    }
    let blocks = vec![BlockSpec { size: 2, r: 1.5 }, BlockSpec { size: 3, r: 3.0 }];
    let s = SpaceSpec::dsum(2.0, blocks)?;
    let x = Coeffs::from_real([(0, 1.0), (1, 1.0)]);
    let us = vec![
        Coeffs::from_real([(2, 1.0), (4, -1.0)]),
        Coeffs::from_real([(6, 2.0)]),
    ];
    let zero = p_space_defect(&x, &us, 2.0, &s)?.iter().all(|&d| d == 0.0);
    ok &= zero;
    notes.push(format!("blocks: disjoint zero {zero}"));
    Ok((ok, notes.join("; ")))
}

fn ac10(_: &VerifyConfig) -> Result<(bool, String)> {
    let cfg = OpNormConfig::default();
    let l2 = SpaceSpec::lp(2.0)?;
    let cases = [
        (
            "2I on l_2",
            OperatorSpec::scalar(c64(2.0, 0.0)),
            l2.clone(),
            vec![4, 8, 16],
            Lp111Case::Converging,
        ),
        (
            "SimpleS on K (+)_4 l_2",
            OperatorSpec::catalog(CatalogEntry::SimpleS { p: 2.0, q: 4.0 }),
            SpaceSpec::qsum(4.0, 2.0)?,
            vec![8, 16, 32],
            Lp111Case::Converging,
        ),
        (
            "diag(1 + 1/(i+1)) on l_2",
            OperatorSpec::diagonal(DiagonalRule::OnePlusRecip),
            l2,
            vec![8, 16, 32, 64],
            Lp111Case::Escaping,
        ),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, t, s, orders, case) in cases {
        let o = lp111_perturbation(&t, &s, &orders, &cfg)?;
        let pass = o.check(1e-8, 1e-6) && o.case == case;
        ok &= pass;
        notes.push(format!(
            "{name}: {:?}, c {:.10}, ||S|| - c {:.1e}, new inf {:.1e}",
            o.case,
            o.c,
            o.norm_s - o.c,
            o.new_inf
        ));
    }
    Ok((ok, notes.join("; ")))
}
