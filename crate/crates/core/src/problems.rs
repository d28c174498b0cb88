//! Benchmark problems `u_t + L u = f`.
//!
//! Grid problems carry their state as unscaled Fourier coefficients (see
//! [`crate::spectral`]) so that `L` is diagonal; [`ProblemSpec::to_physical`]
//! maps a state back to grid values.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::LinearOperator;
use crate::schemes::{Forcing, StateForcing, TimeForcing, ZeroForcing};
use crate::spectral::{dealias, flux_divergence_spectral, laplacian_symbol, Fft2D, PeriodicGrid2D};
use crate::C64;

pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<C64> + Send + Sync>;

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub operator: LinearOperator,
    pub forcing: Arc<dyn Forcing>,
    pub initial: Vec<C64>,
    pub exact: Option<ExactSolution>,
    pub semilinear: bool,
    /// Present when the state holds Fourier coefficients on this grid.
    pub grid: Option<PeriodicGrid2D>,
    fft: Option<Fft2D>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("semilinear", &self.semilinear)
            .field("has_exact", &self.exact.is_some())
            .field("grid", &self.grid)
            .finish()
    }
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    /// Grid values of a state (the real parts, for non-grid problems).
    pub fn to_physical(&self, state: &[C64]) -> Vec<f64> {
        match &self.fft {
            Some(fft) => fft.inverse_real(state),
            None => state.iter().map(|c| c.re).collect(),
        }
    }

    /// Largest imaginary part of the grid values of a state; zero up to
    /// roundoff when the coefficients are conjugate-symmetric.
    pub fn imaginary_residue(&self, state: &[C64]) -> f64 {
        match &self.fft {
            Some(fft) => {
                let mut buf = state.to_vec();
                fft.inverse(&mut buf);
                buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs()))
            }
            None => state.iter().fold(0.0f64, |m, c| m.max(c.im.abs())),
        }
    }

    pub fn from_physical(&self, values: &[f64]) -> Vec<C64> {
        match &self.fft {
            Some(fft) => fft.forward_real(values),
            None => values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }

    /// L² norm of a state: grid quadrature for grid problems (via Parseval),
    /// Euclidean otherwise.
    pub fn norm(&self, state: &[C64]) -> f64 {
        let sum: f64 = state.iter().map(|c| c.norm_sqr()).sum();
        match &self.grid {
            Some(g) => (sum * g.cell_area() / g.len() as f64).sqrt(),
            None => sum.sqrt(),
        }
    }

    pub fn distance(&self, a: &[C64], b: &[C64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
        }
        let diff: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        Ok(self.norm(&diff))
    }

    /// Largest `‖u_t + L u - f(t, u)‖` over `times`, with `u_t` from a
    /// central difference of step `h` on the exact solution.
    pub fn consistency_residual(&self, times: &[f64], h: f64) -> Result<f64> {
        let exact = self.exact.as_ref().ok_or(Error::MissingReference)?;
        let mut worst = 0.0f64;
        for &t in times {
            let u = exact(t);
            let (up, um) = (exact(t + h), exact(t - h));
            let lu = self.operator.apply(&u)?;
            let f = self.forcing.eval(t, &u);
            let r: Vec<C64> = (0..u.len())
                .map(|k| (up[k] - um[k]) / (2.0 * h) + lu[k] - f[k])
                .collect();
            worst = worst.max(self.norm(&r));
        }
        Ok(worst)
    }
}

/// `u_t + λu = 0`, `u(0) = 1`.
pub fn problem_decay(lambda: f64) -> Result<ProblemSpec> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("decay rate must be positive, got {lambda}")));
    }
    Ok(ProblemSpec {
        name: "decay".into(),
        operator: LinearOperator::scalar(lambda)?,
        forcing: Arc::new(ZeroForcing(1)),
        initial: vec![C64::new(1.0, 0.0)],
        exact: Some(Arc::new(move |t: f64| vec![C64::new((-lambda * t).exp(), 0.0)])),
        semilinear: false,
        grid: None,
        fft: None,
    })
}

/// Drops transform roundoff from coefficients of an exactly resolved field.
fn chop(hat: &mut [C64]) {
    let scale = hat.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    for c in hat.iter_mut() {
        if c.norm() <= 1e-12 * scale {
            *c = C64::default();
        }
    }
}

/// Heat equation on `[-π, π]²` with exact solution `sin x sin y sin t`,
/// forcing `sin x sin y (cos t + 2 sin t)`.
pub fn problem_heat2d(n: usize) -> Result<ProblemSpec> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("heat2d needs a power of two >= 8, got {n}")));
    }
    let grid = PeriodicGrid2D::square_2pi(n)?;
    let fft = Fft2D::new(&grid);
    let mut shape = fft.forward_real(&grid.sample(|x, y| x.sin() * y.sin()));
    chop(&mut shape);
    let shape = Arc::new(shape);
    let (fs, es) = (shape.clone(), shape.clone());
    Ok(ProblemSpec {
        name: "heat2d".into(),
        operator: LinearOperator::diagonal(laplacian_symbol(&grid, 1.0, 1.0).values)?,
        forcing: Arc::new(TimeForcing(move |t: f64| {
            let a = t.cos() + 2.0 * t.sin();
            fs.iter().map(|c| c * a).collect::<Vec<_>>()
        })),
        initial: vec![C64::default(); grid.len()],
        exact: Some(Arc::new(move |t: f64| es.iter().map(|c| c * t.sin()).collect())),
        semilinear: false,
        grid: Some(grid),
        fft: Some(fft),
    })
}

/// Indicator of the square `[0.1, 0.3]²`.
pub fn square_wave(x: f64, y: f64) -> f64 {
    if (0.1..=0.3).contains(&x) && (0.1..=0.3).contains(&y) {
        1.0
    } else {
        0.0
    }
}

/// Convection velocity `(sin πx, sin πy)`.
pub fn convdiff_velocity(x: f64, y: f64) -> (f64, f64) {
    ((PI * x).sin(), (PI * y).sin())
}

/// Convection-diffusion of a square wave on `[0, 1]²`: diffusion `-KΔ`
/// implicit, the flux `∇·(u c)` explicit through the predictor.
pub fn problem_convdiff(n: usize, k: f64) -> Result<ProblemSpec> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("diffusion coefficient must be positive, got {k}")));
    }
    let grid = PeriodicGrid2D::unit_square(n)?;
    let fft = Fft2D::new(&grid);
    let u = grid.sample(|x, y| convdiff_velocity(x, y).0);
    let v = grid.sample(|x, y| convdiff_velocity(x, y).1);
    let initial = fft.forward_real(&grid.sample(square_wave));
    let f_fft = fft.clone();
    let forcing = StateForcing(move |_t: f64, c_hat: &[C64]| {
        let c = f_fft.inverse_real(c_hat);
        flux_divergence_spectral(&f_fft, &grid, &u, &v, &c)
            .into_iter()
            .map(|d| -d)
            .collect::<Vec<_>>()
    });
    Ok(ProblemSpec {
        name: "convdiff".into(),
        operator: LinearOperator::diagonal(laplacian_symbol(&grid, k, k).values)?,
        forcing: Arc::new(forcing),
        initial,
        exact: None,
        semilinear: true,
        grid: Some(grid),
        fft: Some(fft),
    })
}

/// Three rings of `+1` on a background of `-1`, on `[-π, π]²`.
pub fn three_rings(x: f64, y: f64) -> f64 {
    let s3 = 3f64.sqrt();
    let inner = (s3 - 0.3) * (s3 - 0.3);
    let centers = [(0.0, 1.0), (s3 / 2.0, -0.5), (-s3 / 2.0, -0.5)];
    let on_ring = centers.iter().any(|(cx, cy)| {
        let r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        (inner..=3.0).contains(&r2)
    });
    if on_ring {
        1.0
    } else {
        -1.0
    }
}

/// Allen–Cahn reaction `-(u³ - u)/ε²`.
pub fn allen_cahn_reaction(u: f64, eps: f64) -> f64 {
    -(u * u * u - u) / (eps * eps)
}

/// Allen–Cahn `u_t = -(u³-u)/ε² + Δu` on `[-π, π]²`, reaction explicit
/// through the predictor with a dealiased cubic.
pub fn problem_allen_cahn(n: usize, eps: f64) -> Result<ProblemSpec> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("interface width must be positive, got {eps}")));
    }
    let grid = PeriodicGrid2D::square_2pi(n)?;
    let fft = Fft2D::new(&grid);
    let initial = fft.forward_real(&grid.sample(three_rings));
    let f_fft = fft.clone();
    let forcing = StateForcing(move |_t: f64, u_hat: &[C64]| {
        let u = f_fft.inverse_real(u_hat);
        let r: Vec<f64> = u.iter().map(|&v| allen_cahn_reaction(v, eps)).collect();
        let mut hat = f_fft.forward_real(&r);
        dealias(&grid, &mut hat);
        hat
    });
    Ok(ProblemSpec {
        name: "allen-cahn".into(),
        operator: LinearOperator::diagonal(laplacian_symbol(&grid, 1.0, 1.0).values)?,
        forcing: Arc::new(forcing),
        initial,
        exact: None,
        semilinear: true,
        grid: Some(grid),
        fft: Some(fft),
    })
}

/// Registry names.
pub const PROBLEM_NAMES: [&str; 4] = ["decay", "heat2d", "convdiff", "allen-cahn"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub n: usize,
    pub lambda: f64,
    pub diffusion: f64,
    pub eps: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self { n: 32, lambda: 1000.0, diffusion: 2e-3, eps: 0.2 }
    }
}

pub fn problem_by_name(name: &str, p: &ProblemParams) -> Result<ProblemSpec> {
    match name {
        "decay" => problem_decay(p.lambda),
        "heat2d" => problem_heat2d(p.n),
        "convdiff" => problem_convdiff(p.n, p.diffusion),
        "allen-cahn" => problem_allen_cahn(p.n, p.eps),
        other => Err(Error::InvalidParameter(format!(
            "unknown problem '{other}' (known: {})",
            PROBLEM_NAMES.join(", ")
        ))),
    }
}
