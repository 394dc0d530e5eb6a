use std::collections::BTreeSet;

use super::{lp_of, Coeffs, SpaceSpec};
use crate::{Error, Result};

/// Indices of the non-zero entries.
pub fn support(x: &Coeffs) -> BTreeSet<usize> {
    x.indices().collect()
}

/// Coordinate projection `P_B x`.
pub fn project(b: &BTreeSet<usize>, x: &Coeffs) -> Coeffs {
    let mut out = Coeffs::new(x.dim_hint());
    for (i, v) in x.iter() {
        if b.contains(&i) {
            out.set(i, v);
        }
    }
    out
}

/// `(|x_0|, |x_1|, ||(x_2, x_3, ...)||_p)`.
pub fn abg(x: &Coeffs, p: f64) -> (f64, f64, f64) {
    let tail: Vec<f64> = x
        .iter()
        .filter(|&(i, _)| i >= 2)
        .map(|(_, v)| v.norm())
        .collect();
    (x.get(0).norm(), x.get(1).norm(), lp_of(&tail, p))
}

/// `||x + u_n|| - (||x||^p + ||u_n||^p)^(1/p)` for each `u_n`.
///
/// When `space` is an `l_p` sum with this `p`, `||x + u||^p` is assembled from
/// `||x||^p + ||u||^p` plus the per-block corrections on blocks where both are
/// non-zero, so disjoint supports give exactly zero.
pub fn p_space_defect(x: &Coeffs, us: &[Coeffs], p: f64, space: &SpaceSpec) -> Result<Vec<f64>> {
    let nx = space.norm(x)?;
    let blockwise = space.outer_p() == Some(p);
    us.iter()
        .map(|u| {
            let nu = space.norm(u)?;
            let base = lp_of(&[nx, nu], p);
            if !blockwise {
                return Ok(space.norm(&(x + u))? - base);
            }
            let bx = block_support(space, x);
            let mut corr = 0.0;
            for b in block_support(space, u).intersection(&bx) {
                let one = BTreeSet::from([*b]);
                let (xb, ub) = (
                    project_blocks(space, &one, x),
                    project_blocks(space, &one, u),
                );
                let sb = space.norm(&(&xb + &ub))?;
                corr += sb.powf(p) - space.norm(&xb)?.powf(p) - space.norm(&ub)?.powf(p);
            }
            if corr == 0.0 {
                return Ok(0.0);
            }
            let rel = corr / (nx.powf(p) + nu.powf(p));
            Ok(base * ((rel.max(-1.0)).ln_1p() / p).exp_m1())
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DisjointOutcome {
    /// Positions `n_1 < n_2 < ...` in the input sequence (0-based).
    pub indices: Vec<usize>,
    /// Pairwise disjointly supported approximants `u_k` of `x_{n_k}`.
    pub us: Vec<Coeffs>,
    /// `||x_{n_k} - u_k||` in the ambient norm.
    pub errors: Vec<f64>,
}

/// Gliding-hump extraction over a finite list. See [`disjointify_with`].
pub fn disjointify(xs: &[Coeffs], eps: &[f64], space: &SpaceSpec) -> Result<DisjointOutcome> {
    disjointify_with(|n| xs.get(n).cloned(), eps, space, 10 * xs.len())
}

fn block_support(space: &SpaceSpec, x: &Coeffs) -> BTreeSet<usize> {
    x.indices().map(|i| space.block_of(i)).collect()
}

fn project_blocks(space: &SpaceSpec, blocks: &BTreeSet<usize>, x: &Coeffs) -> Coeffs {
    let mut out = Coeffs::new(x.dim_hint());
    for (i, v) in x.iter() {
        if blocks.contains(&space.block_of(i)) {
            out.set(i, v);
        }
    }
    out
}

/// Selects a subsequence `x_{n_k}` and disjointly supported `u_k` with
/// `||x_{n_k} - u_k|| < eps[k]`, one per entry of `eps`.
///
/// Supports are taken at block granularity of `space`. At step `k` the scan
/// looks for the first `n > n_{k-1}` with `||P_C x_n|| < eps[k]/2`, where `C` is
/// the union of the blocks already used, and then grows `A \supset C` by the
/// heaviest remaining blocks of `x_n` until the tail is below `eps[k]/2`.
/// `next(n)` returns `None` past the end of the sequence; positions at or beyond
/// `cutoff` are never inspected. Failure reports the 1-based step reached.
pub fn disjointify_with<F>(
    mut next: F,
    eps: &[f64],
    space: &SpaceSpec,
    cutoff: usize,
) -> Result<DisjointOutcome>
where
    F: FnMut(usize) -> Option<Coeffs>,
{
    if let Some(e) = eps.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "eps entries must be positive, got {e}"
        )));
    }
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut out = DisjointOutcome {
        indices: Vec::new(),
        us: Vec::new(),
        errors: Vec::new(),
    };
    let mut n = 0usize;
    for (k, &e) in eps.iter().enumerate() {
        let x = loop {
            if n >= cutoff {
                return Err(Error::Exhausted { step: k + 1 });
            }
            let Some(x) = next(n) else {
                return Err(Error::Exhausted { step: k + 1 });
            };
            if space.norm(&project_blocks(space, &used, &x))? < e / 2.0 {
                break x;
            }
            n += 1;
        };

        let mut fresh: Vec<(usize, f64)> = block_support(space, &x)
            .into_iter()
            .filter(|b| !used.contains(b))
            .map(|b| {
                let part = project_blocks(space, &BTreeSet::from([b]), &x);
                Ok((b, space.norm(&part)?))
            })
            .collect::<Result<_>>()?;
        fresh.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut a = used.clone();
        let mut taken = BTreeSet::new();
        for (b, _) in fresh {
            let tail = &x - &project_blocks(space, &a, &x);
            if space.norm(&tail)? < e / 2.0 {
                break;
            }
            a.insert(b);
            taken.insert(b);
        }
        let u = project_blocks(space, &taken, &x);
        let err = space.norm(&(&x - &u))?;
        out.indices.push(n);
        out.us.push(u);
        out.errors.push(err);
        used = a;
        n += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::BlockSpec;

    #[test]
    fn support_and_projection() {
        assert!(support(&Coeffs::new(3)).is_empty());
        let x = Coeffs::from_real([(0, 1.0), (5, 3.0)]);
        assert_eq!(support(&x), BTreeSet::from([0, 5]));
        let y = &Coeffs::basis(2) - &Coeffs::basis(2);
        assert!(support(&y).is_empty());
        let x = Coeffs::from_real([(0, 1.0), (1, 1.0)]);
        assert_eq!(
            project(&BTreeSet::from([0]), &x),
            Coeffs::basis(0).with_dim_hint(2)
        );
        assert!(project(&BTreeSet::new(), &x).is_zero());
    }

    #[test]
    fn abg_examples() {
        let s = 2f64.powf(-0.25);
        let (a, b, g) = abg(&Coeffs::from_real([(0, s), (3, s)]), 2.0);
        assert_eq!((a, b), (s, 0.0));
        assert!((g - s).abs() < 1e-16);
        assert_eq!(abg(&Coeffs::basis(1), 2.0), (0.0, 1.0, 0.0));
        let (_, _, g) = abg(&Coeffs::from_real([(2, 1.0), (3, 1.0)]), 2.0);
        assert!((g - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn already_disjoint_sequence_is_kept() {
        let xs: Vec<Coeffs> = (1..=6).map(Coeffs::basis).collect();
        let space = SpaceSpec::lp(2.0).unwrap();
        let out = disjointify(&xs, &[0.1; 5], &space).unwrap();
        assert_eq!(out.indices, vec![0, 1, 2, 3, 4]);
        assert_eq!(out.us, xs[..5].to_vec());
    }

    #[test]
    fn leakage_is_stripped() {
        // xs[j] = e_{j+1} + 2^{-(j+1)} e_0; the hand-run gives labels 1, 4, 5, 6.
        let xs: Vec<Coeffs> = (1..=12)
            .map(|n| Coeffs::from_real([(n, 1.0), (0, 2f64.powi(-(n as i32)))]))
            .collect();
        let eps: Vec<f64> = (1..=4).map(|k| 2f64.powi(-k)).collect();
        let space = SpaceSpec::lp(2.0).unwrap();
        let out = disjointify(&xs, &eps, &space).unwrap();
        assert_eq!(out.indices, vec![0, 3, 4, 5]);
        assert_eq!(out.us[0], xs[0]);
        for k in 1..4 {
            assert_eq!(
                out.us[k],
                Coeffs::basis(out.indices[k] + 1).with_dim_hint(out.indices[k] + 2)
            );
        }
        for (k, e) in out.errors.iter().enumerate() {
            assert!(*e < eps[k]);
        }
    }

    #[test]
    fn constant_sequence_fails_at_step_two() {
        let xs = vec![Coeffs::basis(0); 8];
        let space = SpaceSpec::lp(2.0).unwrap();
        match disjointify(&xs, &[0.5; 3], &space) {
            Err(Error::Exhausted { step }) => assert_eq!(step, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn block_granularity() {
        let space = SpaceSpec::dsum(2.0, vec![BlockSpec { size: 3, r: 1.0 }; 4]).unwrap();
        // Second vector touches block 0 only through a tiny entry at index 2.
        let xs = vec![
            Coeffs::from_real([(0, 1.0)]),
            Coeffs::from_real([(2, 1e-6), (3, 1.0), (4, 1.0)]),
        ];
        let out = disjointify(&xs, &[0.1, 0.1], &space).unwrap();
        assert_eq!(
            out.us[1],
            Coeffs::from_real([(3, 1.0), (4, 1.0)]).with_dim_hint(5)
        );
    }

    #[test]
    fn overlapping_defect_matches_direct_formula() {
        let space = SpaceSpec::lp(1.5).unwrap();
        let x = Coeffs::from_real([(0, 1.0), (1, 0.5), (2, 0.25)]);
        let u = Coeffs::from_real([(2, 1.0), (3, -1.0)]);
        let d = p_space_defect(&x, std::slice::from_ref(&u), 1.5, &space).unwrap()[0];
        let direct = space.norm(&(&x + &u)).unwrap()
            - lp_of(&[space.norm(&x).unwrap(), space.norm(&u).unwrap()], 1.5);
        assert!((d - direct).abs() < 1e-14);
    }

    #[test]
    fn disjoint_defect_is_zero() {
        let space = SpaceSpec::lp(3.0).unwrap();
        let x = Coeffs::from_real([(0, 1.0), (1, -0.5)]);
        let us = vec![
            Coeffs::from_real([(4, 2.0)]),
            Coeffs::from_real([(7, 0.25), (9, 1.0)]),
        ];
        for d in p_space_defect(&x, &us, 3.0, &space).unwrap() {
            assert_eq!(d, 0.0);
        }
        let blocks = vec![BlockSpec { size: 3, r: 1.5 }, BlockSpec { size: 2, r: 4.0 }];
        let ds = SpaceSpec::dsum(2.0, blocks).unwrap();
        let us = vec![
            Coeffs::from_real([(3, 1.0), (4, 2.0)]),
            Coeffs::from_real([(6, 3.0)]),
        ];
        for d in p_space_defect(&Coeffs::from_real([(0, 1.0), (2, 2.0)]), &us, 2.0, &ds).unwrap() {
            assert_eq!(d, 0.0);
        }
        for d in p_space_defect(&Coeffs::new(0), &us, 3.0, &space).unwrap() {
            assert_eq!(d, 0.0);
        }
    }
}
