//! Reference values computed without the library's solvers.

/// `|v|^p` with fast paths for the exponents the suite uses.
fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else if p == 1.5 {
        a * a.sqrt()
    } else {
        a.powf(p)
    }
}

/// `||v||_p^p`, or `max |v_i|` for `p = inf`.
fn lp_pow(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    } else {
        v.iter().map(|&x| pow_abs(x, p)).sum()
    }
}

/// `max ||M y||_p / ||y||_p` over `y` on the faces of `[-1, 1]^n` sampled with spacing `h`.
///
/// Every ray through the origin meets the cube boundary, and `y` and `-y` give the same
/// ratio, so the faces `y_k = 1` suffice. `m` is row-major and real.
pub fn sphere_grid_norm(m: &[Vec<f64>], p: f64, h: f64) -> f64 {
    let n = m.len();
    let steps = (2.0 / h).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| -1.0 + i as f64 * 2.0 / steps as f64)
        .collect();
    let total = (steps + 1).pow((n - 1) as u32);
    let mut best = 0.0f64;
    let mut y = vec![0.0; n];
    let mut my = vec![0.0; n];
    for face in 0..n {
        for idx in 0..total {
            let mut r = idx;
            for (k, yk) in y.iter_mut().enumerate() {
                if k == face {
                    *yk = 1.0;
                } else {
                    *yk = grid[r % (steps + 1)];
                    r /= steps + 1;
                }
            }
            for (i, row) in m.iter().enumerate() {
                my[i] = row.iter().zip(&y).map(|(a, b)| a * b).sum();
            }
            let (num, den) = (lp_pow(&my, p), lp_pow(&y, p));
            let v = if p.is_infinite() {
                num / den
            } else {
                (num / den).powf(1.0 / p)
            };
            best = best.max(v);
        }
    }
    best
}

/// Section norm of `SimpleS` on `K (+)_q l_p` at order `N`, from the Lagrange conditions
/// of `max f(beta, alpha, c gamma)` on `K` with `c = N/(N+1)`.
pub fn simple_s_section(p: f64, q: f64, n: usize) -> f64 {
    let c = n as f64 / (n as f64 + 1.0);
    if q.is_infinite() {
        (1.0 + c.powf(p)).powf(1.0 / p)
    } else {
        (1.0 + c.powf(p * q / (q - p))).powf(1.0 / p - 1.0 / q)
    }
}

/// `||S x_N||` for `x_N = 2^{-1/q}(e_0 + e_N)`: `2^{-1/q} (1 + (N/(N+1))^p)^{1/p}`.
pub fn simple_s_test_vector(p: f64, q: f64, n: usize) -> f64 {
    let c = n as f64 / (n as f64 + 1.0);
    let iq = if q.is_infinite() { 0.0 } else { 1.0 / q };
    2f64.powf(-iq) * (1.0 + c.powf(p)).powf(1.0 / p)
}

/// `sup ||S x||` over the unit sphere: `2^{1/p - 1/q}`.
pub fn simple_s_sup(p: f64, q: f64) -> f64 {
    let iq = if q.is_infinite() { 0.0 } else { 1.0 / q };
    2f64.powf(1.0 / p - iq)
}

/// `|z|^{-1} + |z|^{-2}`, the resolvent norm of a nilpotent rank-one operator of norm one.
pub fn rank_one_resolvent(r: f64) -> f64 {
    1.0 / r + 1.0 / (r * r)
}

/// `eps + sqrt(4 eps + eps^2)`.
pub fn radius_stated(eps: f64) -> f64 {
    eps + (4.0 * eps + eps * eps).sqrt()
}

/// Positive root of `r^2 - eps r - eps`, where `1/r + 1/r^2 = 1/eps`.
pub fn radius_root(eps: f64) -> f64 {
    (eps + (eps * eps + 4.0 * eps).sqrt()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_section_values() {
        // Independent SLSQP/grid maximisation in double precision.
        let cases = [
            (4.0, 10, 1.138995208290001, 1.1364385380486736),
            (4.0, 100, 1.1833638828609567, 1.1833345956628514),
            (4.0, 1000, 1.188613550739055, 1.1886132538829313),
            (f64::INFINITY, 10, 1.3514607952107733, 1.3514607952107732),
            (f64::INFINITY, 100, 1.4072299205911312, 1.407229920591131),
            (f64::INFINITY, 1000, 1.4135073385041177, 1.4135073385041176),
        ];
        for (q, n, exact, test_vec) in cases {
            assert!((simple_s_section(2.0, q, n) - exact).abs() < 1e-13);
            assert!((simple_s_test_vector(2.0, q, n) - test_vec).abs() < 1e-13);
        }
    }

    #[test]
    fn radii() {
        assert!((radius_stated(0.5) - 2.0).abs() < 1e-15);
        assert!((radius_root(0.5) - 1.0).abs() < 1e-15);
        for eps in [0.1, 0.5, 1.0] {
            assert!((rank_one_resolvent(radius_root(eps)) - 1.0 / eps).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_oracle_on_known_matrices() {
        let m = vec![vec![1.0, 1.0], vec![0.0, 1.0]];
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sphere_grid_norm(&m, 2.0, 0.01) - phi).abs() < 1e-3);
        let m = vec![vec![1.0, -2.0], vec![0.5, 0.25]];
        assert_eq!(sphere_grid_norm(&m, f64::INFINITY, 0.01), 3.0);
    }
}
