use std::collections::BTreeSet;

use normlab::convex::{
    apply_sex, b_atomic_decompose, minkowski_norm, su_upper_bound, Decomposition, MinkowskiOptions,
};
use normlab::operators::truncate_matrix;
use normlab::opnorm::{attainment_scan, operator_norm, Attainment, OpNormConfig};
use normlab::spaces::{disjointify, p_space_defect, project, support, BlockSpec};
use normlab::{CatalogEntry, Coeffs, Complex64, DiagonalRule, OperatorSpec, QSeq, SpaceSpec};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn entry() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| c(a, b))
}

/// Sparse vectors on `[0, n)`.
fn vector(n: usize) -> impl Strategy<Value = Coeffs> {
    prop::collection::vec((0..n, entry()), 0..n)
        .prop_map(move |v| Coeffs::from_pairs(v).with_dim_hint(n))
}

fn nonzero(n: usize) -> impl Strategy<Value = Coeffs> {
    vector(n).prop_filter("non-zero", |v| v.max_abs() > 1e-3)
}

fn space() -> impl Strategy<Value = SpaceSpec> {
    prop_oneof![
        (1.1..6.0f64).prop_map(|p| SpaceSpec::lp(p).unwrap()),
        Just(SpaceSpec::C0),
        Just(SpaceSpec::L1),
        (1.2..5.0f64, prop_oneof![(1.0..8.0f64), Just(f64::INFINITY)])
            .prop_map(|(p, q)| SpaceSpec::qsum(q, p).unwrap()),
        (1.2..4.0f64, 1.0..5.0f64, 1.0..5.0f64).prop_map(|(p, r1, r2)| {
            let blocks = vec![BlockSpec { size: 2, r: r1 }, BlockSpec { size: 3, r: r2 }];
            SpaceSpec::dsum(p, blocks).unwrap()
        }),
    ]
}

fn leaf() -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![
        Just(OperatorSpec::Identity),
        entry().prop_map(OperatorSpec::scalar),
        Just(OperatorSpec::diagonal(DiagonalRule::Ratio)),
        Just(OperatorSpec::diagonal(DiagonalRule::OnePlusRecip)),
        Just(OperatorSpec::catalog(CatalogEntry::DiagD)),
        Just(OperatorSpec::catalog(CatalogEntry::Tc0)),
        Just(OperatorSpec::catalog(CatalogEntry::Tl1)),
        Just(OperatorSpec::catalog(CatalogEntry::Sex)),
        Just(OperatorSpec::catalog(CatalogEntry::SimpleS {
            p: 2.0,
            q: 4.0
        })),
        Just(OperatorSpec::catalog(CatalogEntry::SimpleR {
            p: 3.0,
            q: 2.0
        })),
        (vector(8), vector(8)).prop_map(|(f, v)| OperatorSpec::rank_one(f, v)),
    ]
}

fn operator() -> impl Strategy<Value = OperatorSpec> {
    leaf().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(OperatorSpec::sum),
            prop::collection::vec(inner, 1..3).prop_map(OperatorSpec::compose),
        ]
    })
}

fn close(a: &Coeffs, b: &Coeffs, tol: f64) -> bool {
    (a - b).max_abs() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn norm_axioms(s in space(), x in vector(9), y in vector(9), l in entry()) {
        let nx = s.norm(&x).unwrap();
        let ny = s.norm(&y).unwrap();
        let nl = s.norm(&x.scale(l)).unwrap();
        prop_assert!((nl - l.norm() * nx).abs() <= 1e-12 * (1.0 + nl));
        prop_assert!(s.norm(&(&x + &y)).unwrap() <= nx + ny + 1e-12 * (1.0 + nx + ny));
        prop_assert_eq!(nx == 0.0, x.max_abs() == 0.0);
    }

    #[test]
    fn norming_functional_pairs_to_the_norm(s in space(), x in nonzero(9)) {
        let f = s.norming_functional(&x).unwrap();
        let nx = s.norm(&x).unwrap();
        let v = x.pair(&f);
        prop_assert!((v.re - nx).abs() <= 1e-12 * nx && v.im.abs() <= 1e-12 * nx);
        prop_assert!((s.dual_norm(&f).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_contractive(s in space(), x in vector(9), b in prop::collection::btree_set(0..9usize, 0..9)) {
        let px = project(&b, &x);
        prop_assert_eq!(&project(&b, &px), &px);
        prop_assert!(s.norm(&px).unwrap() <= s.norm(&x).unwrap() + 1e-15);
    }

    #[test]
    fn disjoint_defect_is_exactly_zero(p in 1.1..5.0f64, x in vector(5), u in vector(6)) {
        let lp = SpaceSpec::lp(p).unwrap();
        let u = u.shifted(5);
        prop_assert_eq!(p_space_defect(&x, std::slice::from_ref(&u), p, &lp).unwrap()[0], 0.0);
        let blocks = vec![BlockSpec { size: 2, r: 1.5 }, BlockSpec { size: 3, r: 4.0 }];
        let ds = SpaceSpec::dsum(p, blocks).unwrap();
        prop_assert_eq!(p_space_defect(&x, &[u], p, &ds).unwrap()[0], 0.0);
    }

    #[test]
    fn disjointify_supports_are_disjoint(
        heads in prop::collection::vec(nonzero(4), 12),
        tail in 1e-6..1e-2f64,
    ) {
        // x_n = head_n shifted out to 4n plus a small tail on e_0.
        let xs: Vec<Coeffs> = heads
            .iter()
            .enumerate()
            .map(|(n, h)| {
                let mut x = h.shifted(4 * n + 4);
                x.add_at(0, c(tail / (n as f64 + 1.0), 0.0));
                x
            })
            .collect();
        let s = SpaceSpec::lp(2.0).unwrap();
        let eps = [0.5, 0.25, 0.125];
        let out = disjointify(&xs, &eps, &s).unwrap();
        let mut seen = BTreeSet::new();
        for (k, u) in out.us.iter().enumerate() {
            for i in support(u) {
                prop_assert!(seen.insert(i), "index {} reused", i);
            }
            let err = s.norm(&(&xs[out.indices[k]] - u)).unwrap();
            prop_assert!(err < eps[k]);
        }
    }

    #[test]
    fn transpose_pairing(t in operator(), x in vector(12), y in vector(12)) {
        let h = 40;
        let x = x.with_dim_hint(h);
        let y = y.with_dim_hint(h);
        let lhs = t.apply(&x).pair(&y);
        let rhs = x.pair(&t.dual().apply(&y));
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn nilpotent_entries(x in vector(16)) {
        for e in [CatalogEntry::Tc0, CatalogEntry::Tl1] {
            let t = OperatorSpec::catalog(e);
            prop_assert!(t.apply(&t.apply(&x)).pruned(1e-15).is_zero());
        }
        let s_minus_i = OperatorSpec::catalog(CatalogEntry::Sex).shifted(c(-1.0, 0.0));
        prop_assert!(s_minus_i.apply(&s_minus_i.apply(&x)).pruned(1e-15).is_zero());
    }

    #[test]
    fn simple_r_inverts_simple_s(x in vector(20)) {
        let s = OperatorSpec::catalog(CatalogEntry::SimpleS { p: 2.0, q: 3.0 });
        let r = OperatorSpec::catalog(CatalogEntry::SimpleR { p: 2.0, q: 3.0 });
        prop_assert!(close(&r.apply(&s.apply(&x)), &x, 1e-14));
        prop_assert!(close(&s.apply(&r.apply(&x)), &x, 1e-14));
    }

    #[test]
    fn truncate_matrix_matches_apply(t in operator(), x in vector(10)) {
        let n = 10;
        let m = truncate_matrix(&t, n);
        let xv = nalgebra::DVector::from_vec(x.to_dense(n));
        let y = &m * xv;
        let tx = t.apply(&x.clone().with_dim_hint(n)).to_dense(n);
        for i in 0..n {
            prop_assert!((y[i] - tx[i]).norm() <= 1e-12 * (1.0 + tx[i].norm()));
        }
    }

    #[test]
    fn witness_is_valid(s in space(), t in operator(), n in 2..7usize) {
        let r = operator_norm(&t, &s, &s, n, &OpNormConfig::default()).unwrap();
        let nw = s.norm(&r.witness).unwrap();
        prop_assert!((nw - 1.0).abs() <= 1e-9);
        let p_n: BTreeSet<usize> = (0..=n).collect();
        let tw = project(&p_n, &t.apply(&r.witness.clone().with_dim_hint(n + 1)));
        prop_assert!((s.norm(&tw).unwrap() - r.value).abs() <= 1e-9 * (1.0 + r.value));
    }

    #[test]
    fn trace_is_monotone_for_exact_methods(t in operator(), k in 0..3usize) {
        let s = [SpaceSpec::lp(2.0).unwrap(), SpaceSpec::C0, SpaceSpec::L1][k].clone();
        let r = attainment_scan(&t, &s, &[3, 6, 12], &OpNormConfig::default()).unwrap();
        for w in r.trace.windows(2) {
            prop_assert!(w[1].value >= w[0].value * (1.0 - 1e-12) - 1e-14);
        }
    }
}

fn opts() -> MinkowskiOptions {
    MinkowskiOptions::default()
}

/// Vectors on `[0, n + 3)` for the renormed space with `n` atoms.
fn renorm_vector() -> impl Strategy<Value = (usize, Coeffs)> {
    (1..6usize).prop_flat_map(|n| (Just(n), nonzero(n + 3)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn renormed_equivalence_bounds((n, u) in renorm_vector()) {
        let r = minkowski_norm(&u, n, &opts()).unwrap();
        let l2 = SpaceSpec::lp(2.0).unwrap().norm(&u).unwrap();
        prop_assert!(r.lower >= l2 / 2f64.sqrt() - 1e-9);
        prop_assert!(r.value <= 2.0 * l2 + 1e-9);
        prop_assert!(r.lower >= u.get(2).norm() - 1e-9);
    }

    #[test]
    fn renormed_coincides_off_coordinates_one_and_two((n, u) in renorm_vector()) {
        let mut u = u;
        u.set(1, c(0.0, 0.0));
        u.set(2, c(0.0, 0.0));
        let r = minkowski_norm(&u, n, &opts()).unwrap();
        let l2 = SpaceSpec::lp(2.0).unwrap().norm(&u).unwrap();
        prop_assert!((r.value - l2).abs() <= 1e-6 * (1.0 + l2));
    }

    #[test]
    fn renormed_norm_axioms((n, u) in renorm_vector(), v in vector(4), l in entry()) {
        let s = SpaceSpec::renormed(n);
        let nu = s.norm(&u).unwrap();
        let nv = s.norm(&v).unwrap();
        let tol = 1e-6 * (1.0 + nu + nv);
        prop_assert!((s.norm(&u.scale(l)).unwrap() - l.norm() * nu).abs() <= tol * (1.0 + l.norm()));
        prop_assert!(s.norm(&(&u + &v)).unwrap() <= nu + nv + tol);
        prop_assert!(nu > 0.0);
    }

    #[test]
    fn solver_never_beats_a_feasible_decomposition(
        (n, u) in renorm_vector(),
        seed in prop::collection::vec((entry(), entry()), 5),
    ) {
        let alpha: Vec<Complex64> = seed.iter().take(n).map(|p| p.0 * 0.5).collect();
        let beta: Vec<Complex64> = seed.iter().take(n).map(|p| p.1 * 0.5).collect();
        let d = Decomposition::new(&u, alpha, beta, &QSeq::Standard);
        prop_assert!(close(&d.reconstruct(&QSeq::Standard), &u, 1e-12));
        let r = minkowski_norm(&u, n, &opts()).unwrap();
        prop_assert!(r.lower <= d.objective + 1e-9);
        prop_assert!(r.value <= d.objective + 1e-7 * (1.0 + d.objective));
    }

    #[test]
    fn su_bound_dominates_su((n, u) in renorm_vector()) {
        let r = minkowski_norm(&u, n, &opts()).unwrap();
        let b = su_upper_bound(&r.decomposition, &QSeq::Standard);
        let su = minkowski_norm(&apply_sex(&u), n, &opts()).unwrap();
        prop_assert!(su.lower <= b.tight + 1e-9);
        prop_assert!(b.tight <= b.relaxed + 1e-9);
    }

    #[test]
    fn atomic_split_reverifies((n, u) in renorm_vector()) {
        let r = minkowski_norm(&u, n, &opts()).unwrap();
        let u = u.scale(c(0.9 / r.value, 0.0));
        let split = b_atomic_decompose(&u, n, &opts()).unwrap();
        prop_assert!(split.verify(&u, &QSeq::Standard, 1e-9));
    }
}

#[test]
fn compact_perturbation_witness_carries_the_norm() {
    // Maximisers converge to x and ||T x|| = ||T|| ||x||.
    for p in [1.5, 3.0] {
        let s = SpaceSpec::lp(p).unwrap();
        let t = OperatorSpec::sum(vec![
            OperatorSpec::Identity,
            OperatorSpec::rank_one(
                Coeffs::from_real([(0, 1.0), (1, 0.5)]),
                Coeffs::from_real([(0, 0.5), (2, 1.0)]),
            ),
        ]);
        let r = attainment_scan(&t, &s, &[4, 8, 16], &OpNormConfig::default()).unwrap();
        assert_eq!(r.attainment, Attainment::Attained);
        let x = &r.witness;
        let tx = s.norm(&t.apply(x)).unwrap();
        assert!((tx - r.value * s.norm(x).unwrap()).abs() < 1e-9);
    }
}
