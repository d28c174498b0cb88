//! The linear operator `L` of `u_t + L u = f` and polynomials in `Δt·L`.
//!
//! Polynomials are written in `s = Δt·σ`, where `σ ≥ 0` runs over the
//! spectrum of `L`. For the test equation `u' = λu` (so `L = -λ`) the
//! stability variable is `z = λΔt = -s`.
//!
//! Caching: [`PreparedPoly`] and [`PolyInverse`] hold the per-`(c, Δt, L)`
//! evaluated symbols or LU factorization. They are plain values owned by
//! whoever builds them (normally one stepper per integration run), so there
//! is no shared cache and nothing to synchronize.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

const DENSE_RESIDUAL: f64 = 1e-9;
const SINGULAR_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Scalar(f64),
    DiagonalSpectral(Vec<f64>),
    DenseMatrix(DMatrix<f64>),
}

/// An immutable, cheaply clonable handle to a linear operator.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    backend: Arc<Backend>,
}

impl LinearOperator {
    pub fn scalar(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scalar operator must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self::from_backend(Backend::Scalar(lambda)))
    }

    pub fn diagonal(symbol: Vec<f64>) -> Result<Self> {
        if let Some(bad) = symbol.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diagonal symbol entries must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self::from_backend(Backend::DiagonalSpectral(symbol)))
    }

    /// Dense `n×n` operator from row-major entries.
    pub fn dense(n: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: row_major.len(),
            });
        }
        Ok(Self::from_backend(Backend::DenseMatrix(
            DMatrix::from_row_slice(n, n, row_major),
        )))
    }

    fn from_backend(backend: Backend) -> Self {
        Self {
            backend: Arc::new(backend),
        }
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn dim(&self) -> usize {
        match &*self.backend {
            Backend::Scalar(_) => 1,
            Backend::DiagonalSpectral(s) => s.len(),
            Backend::DenseMatrix(m) => m.nrows(),
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            })
        }
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![C64::default(); v.len()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) -> Result<()> {
        self.check_dim(v.len())?;
        self.check_dim(out.len())?;
        match &*self.backend {
            Backend::Scalar(l) => out[0] = v[0] * *l,
            Backend::DiagonalSpectral(sym) => {
                for ((o, x), s) in out.iter_mut().zip(v).zip(sym) {
                    *o = x * s;
                }
            }
            Backend::DenseMatrix(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = m.row(i).iter().zip(v).map(|(a, x)| x * *a).sum();
                }
            }
        }
        Ok(())
    }
}

/// `q(s) = c0 + c1 s + c2 s² + c3 s³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorPoly(pub [f64; 4]);

impl OperatorPoly {
    pub fn eval(&self, s: f64) -> f64 {
        let c = &self.0;
        ((c[3] * s + c[2]) * s + c[1]) * s + c[0]
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self(self.0.map(|c| c * k))
    }

    /// `q(ΔtM)` for a dense matrix by Horner.
    fn dense_matrix(&self, dt: f64, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = m.nrows();
        let sm = m * dt;
        let mut acc = DMatrix::<f64>::identity(n, n) * self.0[3];
        for &c in self.0[..3].iter().rev() {
            acc = &sm * acc + DMatrix::<f64>::identity(n, n) * c;
        }
        acc
    }
}

/// `q(Δt·L)` ready for repeated application.
#[derive(Debug, Clone)]
pub struct PreparedPoly {
    poly: OperatorPoly,
    kind: PreparedKind,
}

#[derive(Debug, Clone)]
enum PreparedKind {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl PreparedPoly {
    pub fn new(poly: OperatorPoly, dt: f64, op: &LinearOperator) -> Self {
        let kind = match op.backend() {
            Backend::Scalar(l) => PreparedKind::Diagonal(vec![poly.eval(dt * l)]),
            Backend::DiagonalSpectral(sym) => {
                PreparedKind::Diagonal(sym.iter().map(|s| poly.eval(dt * s)).collect())
            }
            Backend::DenseMatrix(m) => PreparedKind::Dense(poly.dense_matrix(dt, m)),
        };
        Self { poly, kind }
    }

    pub fn poly(&self) -> OperatorPoly {
        self.poly
    }

    fn dim(&self) -> usize {
        match &self.kind {
            PreparedKind::Diagonal(d) => d.len(),
            PreparedKind::Dense(m) => m.nrows(),
        }
    }

    /// `out += scale · q(ΔtL) v`.
    pub fn apply_add(&self, v: &[C64], scale: f64, out: &mut [C64]) -> Result<()> {
        if v.len() != self.dim() || out.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len().min(out.len()),
            });
        }
        match &self.kind {
            PreparedKind::Diagonal(d) => {
                for ((o, x), q) in out.iter_mut().zip(v).zip(d) {
                    *o += x * (q * scale);
                }
            }
            PreparedKind::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row: C64 = m.row(i).iter().zip(v).map(|(a, x)| x * *a).sum();
                    *o += row * scale;
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![C64::default(); v.len()];
        self.apply_add(v, 1.0, &mut out)?;
        Ok(out)
    }
}

/// `q(Δt·L)⁻¹` ready for repeated solves.
#[derive(Debug, Clone)]
pub struct PolyInverse {
    kind: InverseKind,
    min_modulus: f64,
}

#[derive(Debug, Clone)]
enum InverseKind {
    Diagonal(Vec<f64>),
    Dense {
        lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        matrix: DMatrix<f64>,
    },
}

impl PolyInverse {
    pub fn new(poly: OperatorPoly, dt: f64, op: &LinearOperator) -> Result<Self> {
        let threshold = SINGULAR_REL * poly.0[0].abs().max(1.0);
        let diag = |sigmas: &mut dyn Iterator<Item = f64>| -> Result<(Vec<f64>, f64)> {
            let mut min_modulus = f64::INFINITY;
            let mut recip = Vec::new();
            for sigma in sigmas {
                let q = poly.eval(dt * sigma);
                if !(q.abs() > threshold) {
                    return Err(Error::NearSingularDenominator {
                        sigma,
                        modulus: q.abs(),
                    });
                }
                min_modulus = min_modulus.min(q.abs());
                recip.push(1.0 / q);
            }
            Ok((recip, min_modulus))
        };
        match op.backend() {
            Backend::Scalar(l) => {
                let (recip, min_modulus) = diag(&mut std::iter::once(*l))?;
                Ok(Self {
                    kind: InverseKind::Diagonal(recip),
                    min_modulus,
                })
            }
            Backend::DiagonalSpectral(sym) => {
                let (recip, min_modulus) = diag(&mut sym.iter().copied())?;
                Ok(Self {
                    kind: InverseKind::Diagonal(recip),
                    min_modulus,
                })
            }
            Backend::DenseMatrix(m) => {
                let matrix = poly.dense_matrix(dt, m);
                let lu = matrix.clone().lu();
                let pivots = lu.u().diagonal();
                let min_modulus = pivots.iter().fold(f64::INFINITY, |acc, d| acc.min(d.abs()));
                let max_modulus = pivots.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
                if !lu.is_invertible() || !(min_modulus > 1e-14 * max_modulus) {
                    return Err(Error::NearSingularDenominator {
                        sigma: f64::NAN,
                        modulus: min_modulus,
                    });
                }
                Ok(Self {
                    kind: InverseKind::Dense { lu, matrix },
                    min_modulus,
                })
            }
        }
    }

    /// Smallest `|q(Δtσ)|` over the spectrum (smallest `|U_ii|` for dense).
    pub fn min_modulus(&self) -> f64 {
        self.min_modulus
    }

    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        match &self.kind {
            InverseKind::Diagonal(r) => {
                if rhs.len() != r.len() {
                    return Err(Error::DimensionMismatch {
                        expected: r.len(),
                        got: rhs.len(),
                    });
                }
                Ok(rhs.iter().zip(r).map(|(x, q)| x * q).collect())
            }
            InverseKind::Dense { lu, matrix } => {
                let n = matrix.nrows();
                if rhs.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: rhs.len(),
                    });
                }
                let re = DVector::from_iterator(n, rhs.iter().map(|c| c.re));
                let im = DVector::from_iterator(n, rhs.iter().map(|c| c.im));
                let (Some(xr), Some(xi)) = (lu.solve(&re), lu.solve(&im)) else {
                    return Err(Error::NearSingularDenominator {
                        sigma: f64::NAN,
                        modulus: self.min_modulus,
                    });
                };
                let resid = ((matrix * &xr - &re).norm_squared()
                    + (matrix * &xi - &im).norm_squared())
                .sqrt();
                let scale = (re.norm_squared() + im.norm_squared()).sqrt();
                if resid > DENSE_RESIDUAL * scale {
                    return Err(Error::ResidualTooLarge {
                        residual: resid / scale,
                    });
                }
                Ok(xr.iter().zip(xi.iter()).map(|(a, b)| C64::new(*a, *b)).collect())
            }
        }
    }
}

/// `q(ΔtL)·v`.
pub fn apply_operator_poly(
    c: [f64; 4],
    dt: f64,
    op: &LinearOperator,
    v: &[C64],
) -> Result<Vec<C64>> {
    op.check_dim(v.len())?;
    let poly = OperatorPoly(c);
    if let Backend::DenseMatrix(_) = op.backend() {
        // Horner with at most three applications of L.
        let deg = poly.degree();
        let mut acc: Vec<C64> = v.iter().map(|x| x * c[deg]).collect();
        for k in (0..deg).rev() {
            let lv = op.apply(&acc)?;
            for ((a, l), x) in acc.iter_mut().zip(lv).zip(v) {
                *a = l * dt + x * c[k];
            }
        }
        return Ok(acc);
    }
    PreparedPoly::new(poly, dt, op).apply(v)
}

/// Solve `q(ΔtL)·w = rhs`.
pub fn solve_operator_poly(
    c: [f64; 4],
    dt: f64,
    op: &LinearOperator,
    rhs: &[C64],
) -> Result<Vec<C64>> {
    op.check_dim(rhs.len())?;
    PolyInverse::new(OperatorPoly(c), dt, op)?.solve(rhs)
}
