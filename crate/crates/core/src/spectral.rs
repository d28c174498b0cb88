//! Periodic 2D Fourier pseudo-spectral discretization.
//!
//! Storage is row-major, `values[iy * nx + ix]`. The forward transform is
//! unscaled and the inverse carries the `1/(nx·ny)` factor. Mode index `i`
//! maps to the signed wavenumber `p = i` for `i < n/2` and `p = i - n`
//! otherwise; odd derivatives drop the Nyquist mode.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodicGrid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub x0: f64,
    pub y0: f64,
}

impl PeriodicGrid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, x0: f64, y0: f64) -> Result<Self> {
        for n in [nx, ny] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "grid sizes must be even and at least 4, got {nx}x{ny}"
                )));
            }
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain lengths must be positive, got {lx}, {ly}")));
        }
        Ok(Self { nx, ny, lx, ly, x0, y0 })
    }

    /// `[-π, π]²` with `n × n` points.
    pub fn square_2pi(n: usize) -> Result<Self> {
        Self::new(n, n, 2.0 * PI, 2.0 * PI, -PI, -PI)
    }

    /// `[0, 1]²` with `n × n` points.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0, 0.0, 0.0)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + self.lx * ix as f64 / self.nx as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y0 + self.ly * iy as f64 / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.lx * self.ly / self.len() as f64
    }

    /// Angular wavenumbers `2πp/lx` along x, indexed by storage column.
    pub fn wavenumbers_x(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|i| 2.0 * PI * signed_mode(i, self.nx) as f64 / self.lx)
            .collect()
    }

    pub fn wavenumbers_y(&self) -> Vec<f64> {
        (0..self.ny)
            .map(|i| 2.0 * PI * signed_mode(i, self.ny) as f64 / self.ly)
            .collect()
    }

    /// Samples `f(x, y)` on the grid.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for iy in 0..self.ny {
            let y = self.y(iy);
            for ix in 0..self.nx {
                out.push(f(self.x(ix), y));
            }
        }
        out
    }
}

/// Signed integer mode for storage index `i` of an `n`-point transform.
pub fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Space {
    Physical,
    Spectral,
}

/// Grid values in one of the two spaces. Physical fields are real; their
/// imaginary parts are kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: PeriodicGrid2D,
    pub space: Space,
    pub data: Vec<C64>,
}

impl Field2D {
    pub fn from_real(grid: PeriodicGrid2D, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self {
            grid,
            space: Space::Physical,
            data: values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        })
    }

    pub fn from_fn(grid: PeriodicGrid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.sample(f);
        Self::from_real(grid, &values).expect("sampled field has grid length")
    }

    pub fn spectral(grid: PeriodicGrid2D, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: data.len() });
        }
        Ok(Self { grid, space: Space::Spectral, data })
    }

    pub fn real_values(&self) -> Result<Vec<f64>> {
        self.require(Space::Physical)?;
        Ok(self.data.iter().map(|c| c.re).collect())
    }

    fn require(&self, space: Space) -> Result<()> {
        if self.space == space {
            Ok(())
        } else {
            Err(Error::WrongSpace)
        }
    }
}

/// Cached row and column FFT plans for one grid shape.
#[derive(Clone)]
pub struct Fft2D {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2D({}x{})", self.nx, self.ny)
    }
}

impl Fft2D {
    pub fn new(grid: &PeriodicGrid2D) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx: grid.nx,
            ny: grid.ny,
            fwd_x: planner.plan_fft_forward(grid.nx),
            fwd_y: planner.plan_fft_forward(grid.ny),
            inv_x: planner.plan_fft_inverse(grid.nx),
            inv_y: planner.plan_fft_inverse(grid.ny),
        }
    }

    fn passes(&self, data: &mut [C64], along_x: &Arc<dyn Fft<f64>>, along_y: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.nx * self.ny, "buffer does not match plan");
        along_x.process(data);
        let mut t = transpose(data, self.nx, self.ny);
        along_y.process(&mut t);
        let back = transpose(&t, self.ny, self.nx);
        data.copy_from_slice(&back);
    }

    /// Unscaled forward transform in place.
    pub fn forward(&self, data: &mut [C64]) {
        self.passes(data, &self.fwd_x, &self.fwd_y);
    }

    /// Inverse transform in place, scaled by `1/(nx·ny)`.
    pub fn inverse(&self, data: &mut [C64]) {
        self.passes(data, &self.inv_x, &self.inv_y);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Inverse transform returning the real part.
    pub fn inverse_real(&self, spectral: &[C64]) -> Vec<f64> {
        let mut buf = spectral.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

fn transpose(data: &[C64], rows_len: usize, n_rows: usize) -> Vec<C64> {
    let mut out = vec![C64::default(); data.len()];
    for r in 0..n_rows {
        for c in 0..rows_len {
            out[c * n_rows + r] = data[r * rows_len + c];
        }
    }
    out
}

pub fn dft_forward(f: &Field2D) -> Result<Field2D> {
    f.require(Space::Physical)?;
    let mut data = f.data.clone();
    Fft2D::new(&f.grid).forward(&mut data);
    Ok(Field2D { grid: f.grid, space: Space::Spectral, data })
}

pub fn dft_inverse(f: &Field2D) -> Result<Field2D> {
    f.require(Space::Spectral)?;
    let mut data = f.data.clone();
    Fft2D::new(&f.grid).inverse(&mut data);
    for v in &mut data {
        v.im = 0.0;
    }
    Ok(Field2D { grid: f.grid, space: Space::Physical, data })
}

/// Eigenvalues of `-∇·(K∇)` with `K = diag(kx_scale, ky_scale)` on Fourier
/// modes; `(1, 1)` gives `-Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSymbol {
    pub grid: PeriodicGrid2D,
    pub values: Vec<f64>,
}

pub fn laplacian_symbol(grid: &PeriodicGrid2D, kx_scale: f64, ky_scale: f64) -> SpectralSymbol {
    let kx = grid.wavenumbers_x();
    let ky = grid.wavenumbers_y();
    let mut values = Vec::with_capacity(grid.len());
    for qy in &ky {
        for px in &kx {
            values.push(kx_scale * px * px + ky_scale * qy * qy);
        }
    }
    SpectralSymbol { grid: *grid, values }
}

/// Multiplies spectral data by `i·k` along one axis (Nyquist mode zeroed).
pub fn differentiate_spectral(grid: &PeriodicGrid2D, data: &mut [C64], along_x: bool) {
    let (kx, ky) = (grid.wavenumbers_x(), grid.wavenumbers_y());
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let nyquist = if along_x { ix == grid.nx / 2 } else { iy == grid.ny / 2 };
            let k = if along_x { kx[ix] } else { ky[iy] };
            let v = &mut data[iy * grid.nx + ix];
            *v = if nyquist { C64::default() } else { *v * C64::new(0.0, k) };
        }
    }
}

/// Zeroes modes with `|p| > nx/3` or `|q| > ny/3` (2/3 rule).
pub fn dealias(grid: &PeriodicGrid2D, data: &mut [C64]) {
    for iy in 0..grid.ny {
        let q = signed_mode(iy, grid.ny).unsigned_abs() as usize;
        for ix in 0..grid.nx {
            let p = signed_mode(ix, grid.nx).unsigned_abs() as usize;
            if 3 * p > grid.nx || 3 * q > grid.ny {
                data[iy * grid.nx + ix] = C64::default();
            }
        }
    }
}

/// Physical-space `∂c/∂x` and `∂c/∂y` of real values.
pub fn gradient(fft: &Fft2D, grid: &PeriodicGrid2D, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hat = fft.forward_real(values);
    let mut dx = hat.clone();
    let mut dy = hat;
    differentiate_spectral(grid, &mut dx, true);
    differentiate_spectral(grid, &mut dy, false);
    (fft.inverse_real(&dx), fft.inverse_real(&dy))
}

fn check_same(fields: &[&Field2D]) -> Result<PeriodicGrid2D> {
    let grid = fields[0].grid;
    if fields.iter().any(|f| f.grid != grid) {
        return Err(Error::GridMismatch);
    }
    for f in fields {
        f.require(Space::Physical)?;
    }
    Ok(grid)
}

/// Advective term `u·∇c` with a dealiased product.
pub fn convection_term(velocity: (&Field2D, &Field2D), c: &Field2D) -> Result<Field2D> {
    let grid = check_same(&[velocity.0, velocity.1, c])?;
    let fft = Fft2D::new(&grid);
    let (cx, cy) = gradient(&fft, &grid, &c.real_values()?);
    let (u, v) = (velocity.0.real_values()?, velocity.1.real_values()?);
    let prod: Vec<f64> = (0..grid.len()).map(|k| u[k] * cx[k] + v[k] * cy[k]).collect();
    let mut hat = fft.forward_real(&prod);
    dealias(&grid, &mut hat);
    Field2D::from_real(grid, &fft.inverse_real(&hat))
}

/// Spectral coefficients of the conservative flux divergence `∇·(u c)`,
/// products dealiased, from physical velocity and concentration values.
pub fn flux_divergence_spectral(
    fft: &Fft2D,
    grid: &PeriodicGrid2D,
    u: &[f64],
    v: &[f64],
    c: &[f64],
) -> Vec<C64> {
    let fu: Vec<f64> = u.iter().zip(c).map(|(a, b)| a * b).collect();
    let fv: Vec<f64> = v.iter().zip(c).map(|(a, b)| a * b).collect();
    let mut hx = fft.forward_real(&fu);
    let mut hy = fft.forward_real(&fv);
    dealias(grid, &mut hx);
    dealias(grid, &mut hy);
    differentiate_spectral(grid, &mut hx, true);
    differentiate_spectral(grid, &mut hy, false);
    hx.iter().zip(&hy).map(|(a, b)| a + b).collect()
}

/// Conservative flux divergence `∇·(u c)` in physical space.
pub fn flux_divergence(velocity: (&Field2D, &Field2D), c: &Field2D) -> Result<Field2D> {
    let grid = check_same(&[velocity.0, velocity.1, c])?;
    let fft = Fft2D::new(&grid);
    let hat = flux_divergence_spectral(
        &fft,
        &grid,
        &velocity.0.real_values()?,
        &velocity.1.real_values()?,
        &c.real_values()?,
    );
    Field2D::from_real(grid, &fft.inverse_real(&hat))
}

/// Quadrature `∫ f` over the periodic cell.
pub fn integrate(grid: &PeriodicGrid2D, values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * grid.cell_area()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub t: f64,
}

/// Largest grid written as CSV.
pub const CSV_MAX_POINTS: usize = 128 * 128;

/// Writes `values` as little-endian `f64` to `bin_path` and the header as
/// JSON to `json_path`.
pub fn write_field_binary(
    bin_path: &Path,
    json_path: &Path,
    grid: &PeriodicGrid2D,
    values: &[f64],
    t: f64,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(bin_path)?);
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let header = FieldHeader { nx: grid.nx, ny: grid.ny, lx: grid.lx, ly: grid.ly, t };
    std::fs::write(json_path, serde_json::to_string_pretty(&header)?)
}

pub fn read_field_binary(bin_path: &Path) -> std::io::Result<Vec<f64>> {
    let bytes = std::fs::read(bin_path)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// `x,y,value` rows.
pub fn field_csv(grid: &PeriodicGrid2D, values: &[f64]) -> Result<String> {
    if grid.len() > CSV_MAX_POINTS {
        return Err(Error::InvalidParameter(format!(
            "CSV export is limited to {CSV_MAX_POINTS} points"
        )));
    }
    let mut s = String::from("x,y,value\n");
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", grid.x(ix), grid.y(iy), values[iy * grid.nx + ix]));
        }
    }
    Ok(s)
}

/// 8-bit binary PGM scaled linearly from min (0) to max (255); top row is
/// the largest `y`.
pub fn field_pgm(grid: &PeriodicGrid2D, values: &[f64]) -> Vec<u8> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    for iy in (0..grid.ny).rev() {
        for ix in 0..grid.nx {
            let v = (values[iy * grid.nx + ix] - lo) / span;
            out.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}
