//! Difference and interpolation weights from moment (Vandermonde) systems.
//!
//! Every family here solves `Σ_j c_j · d_j^p = r_p` for `p = 0..m`, where
//! `d_j` is the signed distance (in units of `Δt`) from the expansion point
//! `t^{n+β}` back to node `j`. A right-hand side `e_1·(-1)` produces weights
//! for `Δt·u_t(t^{n+β})`; `e_0` produces weights for `u(t^{n+β})`.
//!
//! All vectors are stored in ascending node order (earliest time first).

use serde::Serialize;

use crate::error::{Error, Result};

const MIN_NODE_GAP: f64 = 1e-10;
const MAX_RESIDUAL: f64 = 1e-10;

/// Solve `Σ_j c_j · nodes_j^p = rhs_p` for `p = 0..m` (the transposed
/// Vandermonde system) with the Björck–Pereyra recurrence.
pub fn vandermonde_solve(nodes: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = nodes.len();
    if rhs.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: rhs.len(),
        });
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut min_gap = f64::INFINITY;
    for i in 0..m {
        for j in i + 1..m {
            min_gap = min_gap.min((nodes[i] - nodes[j]).abs());
        }
    }
    if min_gap <= MIN_NODE_GAP {
        return Err(Error::DuplicateNodes { min_gap });
    }

    let n = m - 1;
    let mut z = rhs.to_vec();
    for k in 0..n {
        for i in (k + 1..=n).rev() {
            z[i] -= nodes[k] * z[i - 1];
        }
    }
    for k in (0..n).rev() {
        for i in k + 1..=n {
            z[i] /= nodes[i] - nodes[i - k - 1];
        }
        for i in k..n {
            z[i] -= z[i + 1];
        }
    }

    let residual = moment_residual(nodes, &z, rhs);
    if !(residual < MAX_RESIDUAL) {
        return Err(Error::IllConditioned { residual });
    }
    Ok(z)
}

/// Max over rows of `|Σ_j c_j x_j^p - r_p|`, scaled by the row's magnitude.
fn moment_residual(nodes: &[f64], c: &[f64], rhs: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut powers = vec![1.0; nodes.len()];
    for &r in rhs {
        let mut acc = 0.0;
        let mut scale = r.abs();
        for (pw, &cj) in powers.iter().zip(c) {
            acc += cj * pw;
            scale += (cj * pw).abs();
        }
        worst = worst.max((acc - r).abs() / scale.max(1.0));
        for (pw, &x) in powers.iter_mut().zip(nodes) {
            *pw *= x;
        }
    }
    worst
}

fn unit(m: usize, index: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[index] = value;
    v
}

/// Generalized BDF weights about `t^{n+β}`.
///
/// `a[q]` multiplies `u^{n+1-k+q}` (q = 0..=k) and approximates
/// `Δt·u_t(t^{n+β})`; `b[q]` multiplies `u^{n+2-k+q}` (q = 0..k) and
/// approximates `u(t^{n+β})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GbdfCoeffs {
    pub k: usize,
    pub beta: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

pub fn gbdf_coeffs(k: usize, beta: f64) -> Result<GbdfCoeffs> {
    if !(2..=8).contains(&k) {
        return Err(Error::UnsupportedK(k));
    }
    // Node j sits at distance β-1+j; it carries a_{k,k-j} and b_{k,k-1-j}.
    let a_nodes: Vec<f64> = (0..=k).map(|j| beta - 1.0 + j as f64).collect();
    let mut a = vandermonde_solve(&a_nodes, &unit(k + 1, 1, -1.0))?;
    a.reverse();
    let b_nodes: Vec<f64> = (0..k).map(|j| beta - 1.0 + j as f64).collect();
    let mut b = vandermonde_solve(&b_nodes, &unit(k, 0, 1.0))?;
    b.reverse();
    Ok(GbdfCoeffs { k, beta, a, b })
}

/// Tabulated closed forms for `k = 2, 3, 4`; `None` for other `k`.
pub fn gbdf_closed_form(k: usize, beta: f64) -> Option<GbdfCoeffs> {
    let b1 = beta;
    let b2 = beta * beta;
    let b3 = b2 * beta;
    let (a, b) = match k {
        2 => (
            vec![(2.0 * b1 - 1.0) / 2.0, -2.0 * b1, (2.0 * b1 + 1.0) / 2.0],
            vec![-(b1 - 1.0), b1],
        ),
        3 => (
            vec![
                -(3.0 * b2 - 1.0) / 6.0,
                (9.0 * b2 + 6.0 * b1 - 6.0) / 6.0,
                -(9.0 * b2 + 12.0 * b1 - 3.0) / 6.0,
                (3.0 * b2 + 6.0 * b1 + 2.0) / 6.0,
            ],
            vec![(b2 - b1) / 2.0, -(b2 - 1.0), (b2 + b1) / 2.0],
        ),
        4 => (
            vec![
                (2.0 * b3 + 3.0 * b2 - b1 - 1.0) / 12.0,
                -(8.0 * b3 + 18.0 * b2 - 4.0 * b1 - 6.0) / 12.0,
                (12.0 * b3 + 36.0 * b2 + 6.0 * b1 - 18.0) / 12.0,
                -(8.0 * b3 + 30.0 * b2 + 20.0 * b1 - 10.0) / 12.0,
                (2.0 * b3 + 9.0 * b2 + 11.0 * b1 + 3.0) / 12.0,
            ],
            vec![
                -(b3 - b1) / 6.0,
                (b3 + b2 - 2.0 * b1) / 2.0,
                -(b3 + 2.0 * b2 - b1 - 2.0) / 2.0,
                (b3 + 3.0 * b2 + 2.0 * b1) / 6.0,
            ],
        ),
        _ => return None,
    };
    Some(GbdfCoeffs { k, beta, a, b })
}

/// Weights on `(u^n, u^{n+1/2}, u^{n+1})` for the second-order one-step
/// construction: `A` gives `Δt·u_t(t^{n+β})`, `B` gives `u(t^{n+β})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneStep2Coeffs {
    pub beta: f64,
    #[serde(rename = "A")]
    pub a: [f64; 3],
    #[serde(rename = "B")]
    pub b: [f64; 3],
}

/// Distances `β - τ` from `t^{n+β}` to the layers at `τ = 0, 1/2, 1`.
pub fn onestep2_nodes(beta: f64) -> [f64; 3] {
    [beta, beta - 0.5, beta - 1.0]
}

/// Distances `β - τ` to the layers at `τ = 0, 1/3, 2/3, 1`.
pub fn onestep3_nodes(beta: f64) -> [f64; 4] {
    [beta, beta - 1.0 / 3.0, beta - 2.0 / 3.0, beta - 1.0]
}

pub fn onestep2_coeffs(beta: f64) -> OneStep2Coeffs {
    let b2 = beta * beta;
    let c = OneStep2Coeffs {
        beta,
        a: [4.0 * beta - 3.0, -8.0 * beta + 4.0, 4.0 * beta - 1.0],
        b: [2.0 * b2 - 3.0 * beta + 1.0, -4.0 * b2 + 4.0 * beta, 2.0 * b2 - beta],
    };
    debug_assert!(agrees(&c.a, &onestep2_nodes(beta), 1, -1.0));
    debug_assert!(agrees(&c.b, &onestep2_nodes(beta), 0, 1.0));
    c
}

/// Weights on `(u^n, u^{n+1/3}, u^{n+2/3}, u^{n+1})` for the third-order
/// one-step construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneStep3Coeffs {
    pub beta: f64,
    #[serde(rename = "A")]
    pub a: [f64; 4],
    #[serde(rename = "B")]
    pub b: [f64; 4],
}

pub fn onestep3_coeffs(beta: f64) -> OneStep3Coeffs {
    let b2 = beta * beta;
    let b3 = b2 * beta;
    let c = OneStep3Coeffs {
        beta,
        a: [
            -13.5 * b2 + 18.0 * beta - 5.5,
            40.5 * b2 - 45.0 * beta + 9.0,
            -40.5 * b2 + 36.0 * beta - 4.5,
            13.5 * b2 - 9.0 * beta + 1.0,
        ],
        b: [
            -4.5 * b3 + 9.0 * b2 - 5.5 * beta + 1.0,
            13.5 * b3 - 22.5 * b2 + 9.0 * beta,
            -13.5 * b3 + 18.0 * b2 - 4.5 * beta,
            4.5 * b3 - 4.5 * b2 + beta,
        ],
    };
    debug_assert!(agrees(&c.a, &onestep3_nodes(beta), 1, -1.0));
    debug_assert!(agrees(&c.b, &onestep3_nodes(beta), 0, 1.0));
    c
}

fn agrees(closed: &[f64], nodes: &[f64], row: usize, value: f64) -> bool {
    match vandermonde_solve(nodes, &unit(nodes.len(), row, value)) {
        Ok(v) => v
            .iter()
            .zip(closed)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + y.abs())),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn vandermonde_trivial_cases() {
        close(&vandermonde_solve(&[0.0], &[1.0]).unwrap(), &[1.0], 1e-15);
        // β = 1: nodes β-1, β.
        close(
            &vandermonde_solve(&[0.0, 1.0], &[0.0, -1.0]).unwrap(),
            &[1.0, -1.0],
            1e-15,
        );
        close(
            &vandermonde_solve(&[0.0, 1.0, 2.0], &[0.0, -1.0, 0.0]).unwrap(),
            &[1.5, -2.0, 0.5],
            1e-14,
        );
    }

    #[test]
    fn vandermonde_rejects_duplicates_and_bad_lengths() {
        assert!(matches!(
            vandermonde_solve(&[0.5, 0.5], &[1.0, 0.0]),
            Err(Error::DuplicateNodes { .. })
        ));
        assert!(matches!(
            vandermonde_solve(&[0.0, 1.0], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gbdf_classical_bdf2_at_beta_one() {
        let c = gbdf_coeffs(2, 1.0).unwrap();
        close(&c.a, &[0.5, -2.0, 1.5], 1e-14);
        close(&c.b, &[0.0, 1.0], 1e-14);
    }

    #[test]
    fn gbdf_k2_at_half() {
        // a_{2,2}=(2β+1)/2=1, a_{2,1}=-2β=-1, a_{2,0}=(2β-1)/2=0; b_{2,1}=β, b_{2,0}=1-β.
        let c = gbdf_coeffs(2, 0.5).unwrap();
        close(&c.a, &[0.0, -1.0, 1.0], 1e-14);
        close(&c.b, &[0.5, 0.5], 1e-14);
    }

    #[test]
    fn gbdf_consistency_rows() {
        for k in 2..=8 {
            for &beta in &[-1.3, 0.0, 0.4, 1.0, 2.5] {
                let c = gbdf_coeffs(k, beta).unwrap();
                assert_abs_diff_eq!(c.a.iter().sum::<f64>(), 0.0, epsilon = 1e-9);
                assert_abs_diff_eq!(c.b.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            }
        }
        assert_eq!(gbdf_coeffs(1, 1.0), Err(Error::UnsupportedK(1)));
        assert_eq!(gbdf_coeffs(9, 1.0), Err(Error::UnsupportedK(9)));
    }

    #[test]
    fn gbdf_closed_forms_match_solver() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let beta = rng.gen_range(-2.0..3.0);
            for k in 2..=4 {
                let solved = gbdf_coeffs(k, beta).unwrap();
                let closed = gbdf_closed_form(k, beta).unwrap();
                close(&solved.a, &closed.a, 1e-10);
                close(&solved.b, &closed.b, 1e-10);
            }
        }
        assert!(gbdf_closed_form(5, 1.0).is_none());
    }

    /// Σ_q a_q p(1-k+q) = p'(β) and Σ_q b_q p(2-k+q) = p(β) on monomials.
    #[test]
    fn gbdf_exact_on_polynomials() {
        for k in 2..=4usize {
            for &beta in &[-0.7, 0.3, 1.0, 1.8] {
                let c = gbdf_coeffs(k, beta).unwrap();
                for deg in 0..=k as i32 {
                    let p = |t: f64| t.powi(deg);
                    let dp = if deg == 0 { 0.0 } else { deg as f64 * beta.powi(deg - 1) };
                    let lhs: f64 = c
                        .a
                        .iter()
                        .enumerate()
                        .map(|(q, a)| a * p(1.0 - k as f64 + q as f64))
                        .sum();
                    assert!((lhs - dp).abs() < 1e-9, "k={k} deg={deg}");
                    if deg < k as i32 {
                        let lhs: f64 = c
                            .b
                            .iter()
                            .enumerate()
                            .map(|(q, b)| b * p(2.0 - k as f64 + q as f64))
                            .sum();
                        assert!((lhs - p(beta)).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn onestep2_examples() {
        let c = onestep2_coeffs(1.0);
        close(&c.a, &[1.0, -4.0, 3.0], 1e-15);
        close(&c.b, &[0.0, 0.0, 1.0], 1e-15);
        let c = onestep2_coeffs(0.5);
        close(&c.a, &[-1.0, 0.0, 1.0], 1e-15);
        close(&c.b, &[0.0, 1.0, 0.0], 1e-15);
    }

    #[test]
    fn onestep3_examples() {
        let c = onestep3_coeffs(0.0);
        close(&c.a, &[-5.5, 9.0, -4.5, 1.0], 1e-14);
        let c = onestep3_coeffs(1.0);
        close(&c.b, &[0.0, 0.0, 0.0, 1.0], 1e-14);
    }

    #[test]
    fn onestep_closed_forms_match_solver() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let beta = rng.gen_range(-2.0..3.0);
            let c2 = onestep2_coeffs(beta);
            let n2 = onestep2_nodes(beta);
            close(&vandermonde_solve(&n2, &unit(3, 1, -1.0)).unwrap(), &c2.a, 1e-10);
            close(&vandermonde_solve(&n2, &unit(3, 0, 1.0)).unwrap(), &c2.b, 1e-10);
            let c3 = onestep3_coeffs(beta);
            let n3 = onestep3_nodes(beta);
            close(&vandermonde_solve(&n3, &unit(4, 1, -1.0)).unwrap(), &c3.a, 1e-10);
            close(&vandermonde_solve(&n3, &unit(4, 0, 1.0)).unwrap(), &c3.b, 1e-10);
        }
    }

    /// Σ A_i p(τ_i) = p'(β), Σ B_i p(τ_i) = p(β) at layers τ.
    #[test]
    fn onestep_exact_on_polynomials() {
        for &beta in &[-1.0, 0.2, 2.0 / 3.0, 1.7] {
            let c2 = onestep2_coeffs(beta);
            let c3 = onestep3_coeffs(beta);
            let t2 = [0.0, 0.5, 1.0];
            let t3 = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
            for deg in 0..=3i32 {
                let p = |t: f64| t.powi(deg);
                let dp = if deg == 0 { 0.0 } else { deg as f64 * beta.powi(deg - 1) };
                let a3: f64 = c3.a.iter().zip(t3).map(|(a, t)| a * p(t)).sum();
                let b3: f64 = c3.b.iter().zip(t3).map(|(b, t)| b * p(t)).sum();
                assert!((a3 - dp).abs() < 1e-9);
                assert!((b3 - p(beta)).abs() < 1e-9);
                if deg <= 2 {
                    let a2: f64 = c2.a.iter().zip(t2).map(|(a, t)| a * p(t)).sum();
                    let b2: f64 = c2.b.iter().zip(t2).map(|(b, t)| b * p(t)).sum();
                    assert!((a2 - dp).abs() < 1e-9);
                    assert!((b2 - p(beta)).abs() < 1e-9);
                }
            }
        }
    }
}
