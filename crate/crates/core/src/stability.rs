//! Linear stability analysis.
//!
//! A scheme applied to `u' = λu` multiplies the state by `R(z) = g1(z)/g2(z)`
//! per step, `z = λΔt`. Polynomials here are real, ascending in `z`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schemes::{BetaConfig2, BetaConfig3};
use crate::C64;

const POLE_TOL: f64 = 1e-14;
const CLASSIFY_TOL: f64 = 1e-12;
const REGION_TOL: f64 = 1e-12;

/// Number of imaginary-axis samples used by [`numeric_a_stability`].
pub const AXIS_SAMPLES: usize = 10_000;
/// Largest `|Im z|` sampled by [`numeric_a_stability`].
pub const AXIS_EXTENT: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StabilityKind {
    OneStep2(BetaConfig2),
    OneStep3(BetaConfig3),
    ExplicitRk { stages: u32 },
}

impl StabilityKind {
    pub fn order(&self) -> u32 {
        match self {
            StabilityKind::OneStep2(_) => 2,
            StabilityKind::OneStep3(_) => 3,
            StabilityKind::ExplicitRk { stages } => *stages,
        }
    }

    pub fn betas(&self) -> Vec<f64> {
        match self {
            StabilityKind::OneStep2(c) => c.betas().to_vec(),
            StabilityKind::OneStep3(c) => c.betas().to_vec(),
            StabilityKind::ExplicitRk { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityFunction {
    pub kind: StabilityKind,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
}

impl StabilityFunction {
    pub fn onestep2(cfg: BetaConfig2) -> Self {
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let g1 = vec![2.0, 2.0 - b1 - b2, b1 * b2 - b1 - b2 + 1.0];
        let g2 = vec![2.0, -(b1 + b2), b1 * b2];
        Self { kind: StabilityKind::OneStep2(cfg), g1, g2 }
    }

    /// `g2 = Π(1 - β_i z) - (Σβ_i) z + 5`,
    /// `g1 = Π(1 + (1 - β_i) z) - (Σβ_i - 3) z + 5`.
    pub fn onestep3(cfg: BetaConfig3) -> Self {
        let betas = cfg.betas();
        let sum: f64 = betas.iter().sum();
        let mut g2 = vec![1.0];
        let mut g1 = vec![1.0];
        for &b in &betas {
            g2 = poly_mul(&g2, &[1.0, -b]);
            g1 = poly_mul(&g1, &[1.0, 1.0 - b]);
        }
        g2[0] += 5.0;
        g2[1] -= sum;
        g1[0] += 5.0;
        g1[1] -= sum - 3.0;
        Self { kind: StabilityKind::OneStep3(cfg), g1, g2 }
    }

    /// Taylor polynomial of `e^z` truncated after `stages` terms; the
    /// stability function of every `stages`-stage explicit RK method of
    /// order `stages` for `stages ≤ 4`.
    pub fn explicit_rk(stages: u32) -> Result<Self> {
        if !(1..=4).contains(&stages) {
            return Err(Error::InvalidParameter(format!(
                "explicit RK stability needs 1..=4 stages, got {stages}"
            )));
        }
        let mut g1 = vec![1.0];
        let mut term = 1.0;
        for k in 1..=stages {
            term /= k as f64;
            g1.push(term);
        }
        Ok(Self { kind: StabilityKind::ExplicitRk { stages }, g1, g2: vec![1.0] })
    }

    pub fn eval_r(&self, z: C64) -> Result<C64> {
        let den = horner(&self.g2, z);
        let deg = degree(&self.g2) as i32;
        if !(den.norm() > POLE_TOL * (1.0 + z.norm().powi(deg))) {
            return Err(Error::PoleAt { re: z.re, im: z.im });
        }
        Ok(horner(&self.g1, z) / den)
    }

    /// `|R(z)|`, or `None` at a pole.
    pub fn abs_r(&self, z: C64) -> Option<f64> {
        self.eval_r(z).ok().map(|r| r.norm())
    }

    pub fn is_inside(&self, z: C64) -> bool {
        matches!(self.abs_r(z), Some(a) if a <= 1.0 + REGION_TOL)
    }

    /// Roots of `g2` (the poles of `R`).
    pub fn poles(&self) -> Vec<C64> {
        poly_roots(&self.g2)
    }

    /// `lim |R(z)|` as `|z| → ∞`.
    pub fn modulus_at_infinity(&self) -> f64 {
        let (d1, d2) = (degree(&self.g1), degree(&self.g2));
        if d1 > d2 {
            f64::INFINITY
        } else if d1 < d2 {
            0.0
        } else {
            (self.g1[d1] / self.g2[d2]).abs()
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn horner(c: &[f64], z: C64) -> C64 {
    c.iter().rev().fold(C64::default(), |acc, &a| acc * z + a)
}

/// Degree after dropping negligible leading coefficients.
fn degree(c: &[f64]) -> usize {
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    c.iter()
        .rposition(|x| x.abs() > 1e-14 * scale)
        .unwrap_or(0)
}

/// All complex roots by Durand–Kerner iteration.
fn poly_roots(c: &[f64]) -> Vec<C64> {
    let n = degree(c);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<f64> = c[..=n].iter().map(|x| x / lead).collect();
    let seed = C64::new(0.4, 0.9);
    let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let zi = roots[i];
            let mut den = C64::new(1.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    den *= zi - zj;
                }
            }
            let step = horner(&monic, zi) / den;
            roots[i] = zi - step;
            delta = delta.max(step.norm() / (1.0 + zi.norm()));
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StabilityClass {
    pub a_stable: bool,
    pub l_stable: bool,
    pub condition_applicable: bool,
}

/// Sufficient conditions for the two-β scheme:
/// A-stable iff `0 ≤ β1+β2-1 ≤ 2β1β2`; L-stable iff in addition one β is 1
/// and `β1+β2-1 > 0`.
pub fn classify2(beta1: f64, beta2: f64) -> StabilityClass {
    let alpha = beta1 + beta2 - 1.0;
    let a_stable = alpha >= -CLASSIFY_TOL && alpha <= 2.0 * beta1 * beta2 + CLASSIFY_TOL;
    let decays = ((beta1 - 1.0) * (beta2 - 1.0)).abs() <= CLASSIFY_TOL;
    StabilityClass {
        a_stable,
        l_stable: a_stable && decays && alpha > 0.0,
        condition_applicable: true,
    }
}

/// Sufficient condition for the three-β scheme with `β3 = 1`:
/// `2(β1+β2) ≥ 1 + 6β1β2 > 0` together with `β1β2 ≥ 0`. Without the sign
/// condition the pair inequality alone admits left-half-plane poles
/// (e.g. `β1 = -0.056, β2 = 1.315`). No L-stability claim is made.
pub fn classify3(beta1: f64, beta2: f64, beta3: f64) -> StabilityClass {
    let applicable = (beta3 - 1.0).abs() <= CLASSIFY_TOL;
    let prod = beta1 * beta2;
    let rhs = 1.0 + 6.0 * prod;
    let a_stable = applicable
        && 2.0 * (beta1 + beta2) >= rhs - CLASSIFY_TOL
        && rhs > 0.0
        && prod >= -CLASSIFY_TOL;
    StabilityClass { a_stable, l_stable: false, condition_applicable: applicable }
}

pub fn classify(kind: &StabilityKind) -> StabilityClass {
    match kind {
        StabilityKind::OneStep2(c) => classify2(c.beta1, c.beta2),
        StabilityKind::OneStep3(c) => classify3(c.beta1, c.beta2, c.beta3),
        StabilityKind::ExplicitRk { .. } => StabilityClass {
            a_stable: false,
            l_stable: false,
            condition_applicable: false,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericStability {
    pub numerically_a_stable: bool,
    #[serde(rename = "max_abs_R_on_axis")]
    pub max_abs_r_on_axis: f64,
    pub modulus_at_infinity: f64,
    pub left_half_plane_poles: usize,
}

/// Imaginary-axis sample points: symmetric, denser near the origin.
pub fn axis_samples() -> Vec<f64> {
    let half = AXIS_SAMPLES / 2;
    let mut ys = Vec::with_capacity(AXIS_SAMPLES);
    for j in 0..half {
        let t = j as f64 / (half - 1) as f64;
        let y = AXIS_EXTENT * t * t;
        ys.push(y);
        ys.push(-y);
    }
    ys
}

/// Maximum-principle check: no poles with `Re ≤ 0`, `|R| ≤ 1` on the sampled
/// imaginary axis and at infinity.
pub fn numeric_a_stability(sf: &StabilityFunction) -> NumericStability {
    let lhp_poles = sf.poles().iter().filter(|p| p.re <= 1e-10).count();
    let mut max_abs = 0.0f64;
    for y in axis_samples() {
        match sf.abs_r(C64::new(0.0, y)) {
            Some(a) => max_abs = max_abs.max(a),
            None => max_abs = f64::INFINITY,
        }
    }
    let at_inf = sf.modulus_at_infinity();
    NumericStability {
        numerically_a_stable: lhp_poles == 0
            && max_abs <= 1.0 + REGION_TOL
            && at_inf <= 1.0 + REGION_TOL,
        max_abs_r_on_axis: max_abs,
        modulus_at_infinity: at_inf,
        left_half_plane_poles: lhp_poles,
    }
}

/// Looks for a point outside the region in
/// `[re_lo, min(re_hi, 0)] × [im_lo, im_hi]`: poles of `R` in the window
/// first, then an `n × n` lattice with endpoints included.
pub fn find_left_half_plane_exterior(
    sf: &StabilityFunction,
    re_range: (f64, f64),
    im_range: (f64, f64),
    n: usize,
) -> Option<C64> {
    let n = n.max(2);
    let re_hi = re_range.1.min(0.0);
    let in_window = |z: &C64| {
        (re_range.0..=re_hi).contains(&z.re) && (im_range.0..=im_range.1).contains(&z.im)
    };
    if let Some(p) = sf.poles().into_iter().filter(in_window).find(|p| !sf.is_inside(*p)) {
        return Some(p);
    }
    let node = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
    for i in 0..n {
        let re = node(re_range.0, re_hi, i);
        for j in 0..n {
            let z = C64::new(re, node(im_range.0, im_range.1, j));
            if !sf.is_inside(z) {
                return Some(z);
            }
        }
    }
    None
}

/// Region of absolute stability sampled at cell centers. Row 0 is the top
/// (largest `Im z`); `inside` is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRaster {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub inside: Vec<bool>,
    pub kind: StabilityKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RasterMeta {
    pub re_range: [f64; 2],
    pub im_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub betas: Vec<f64>,
    pub order: u32,
}

pub fn rasterize(
    sf: &StabilityFunction,
    re_range: (f64, f64),
    im_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> Result<RegionRaster> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidParameter(format!("raster needs nx, ny >= 2, got {nx}x{ny}")));
    }
    let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
    if !ok(re_range) || !ok(im_range) {
        return Err(Error::InvalidParameter("raster ranges must be finite and increasing".into()));
    }
    let mut raster = RegionRaster {
        re_range,
        im_range,
        nx,
        ny,
        inside: vec![false; nx * ny],
        kind: sf.kind,
    };
    let centers: Vec<C64> = (0..nx * ny)
        .map(|k| raster.cell_center(k % nx, k / nx))
        .collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        raster
            .inside
            .par_iter_mut()
            .zip(centers.par_iter())
            .for_each(|(cell, z)| *cell = sf.is_inside(*z));
    }
    #[cfg(not(feature = "parallel"))]
    for (cell, z) in raster.inside.iter_mut().zip(&centers) {
        *cell = sf.is_inside(*z);
    }
    Ok(raster)
}

impl RegionRaster {
    /// Center of column `i`, row `j`.
    pub fn cell_center(&self, i: usize, j: usize) -> C64 {
        let dx = (self.re_range.1 - self.re_range.0) / self.nx as f64;
        let dy = (self.im_range.1 - self.im_range.0) / self.ny as f64;
        C64::new(
            self.re_range.0 + (i as f64 + 0.5) * dx,
            self.im_range.1 - (j as f64 + 0.5) * dy,
        )
    }

    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.inside[j * self.nx + i]
    }

    pub fn count_inside(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Binary PGM, inside = 0, outside = 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.nx, self.ny).into_bytes();
        out.extend(self.inside.iter().map(|&b| if b { 0u8 } else { 255u8 }));
        out
    }

    pub fn meta(&self) -> RasterMeta {
        RasterMeta {
            re_range: [self.re_range.0, self.re_range.1],
            im_range: [self.im_range.0, self.im_range.1],
            nx: self.nx,
            ny: self.ny,
            betas: self.kind.betas(),
            order: self.kind.order(),
        }
    }

    pub fn meta_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta()).expect("raster metadata serializes")
    }
}

/// Both sides of `g1(z)² - g2(z)² = z(α2 z - 2)(α1 z² + 2α2 z - 4)` for the
/// two-β scheme, `α1 = β1+β2-2β1β2-1`, `α2 = β1+β2-1`.
pub fn h_factorization(beta1: f64, beta2: f64, z: f64) -> (f64, f64) {
    let g1 = (beta1 * beta2 - beta1 - beta2 + 1.0) * z * z + (2.0 - beta1 - beta2) * z + 2.0;
    let g2 = beta1 * beta2 * z * z - (beta1 + beta2) * z + 2.0;
    let a1 = beta1 + beta2 - 2.0 * beta1 * beta2 - 1.0;
    let a2 = beta1 + beta2 - 1.0;
    let lhs = g1 * g1 - g2 * g2;
    let rhs = z * (a2 * z - 2.0) * (a1 * z * z + 2.0 * a2 * z - 4.0);
    (lhs, rhs)
}

/// Scalar prefactors of the leading truncation-error terms of the two-β
/// scheme: for each β, `(6β²-6β+1)/12`, `-(32β³-48β²+22β-3)/96`,
/// `(2β³-3β²+β)/12`. Order: `[p1(β1), p1(β2), p2(β1), p2(β2), p3(β1), p3(β2)]`.
pub fn leading_error_coeffs(beta1: f64, beta2: f64) -> [f64; 6] {
    let p1 = |b: f64| (6.0 * b * b - 6.0 * b + 1.0) / 12.0;
    let p2 = |b: f64| -(32.0 * b.powi(3) - 48.0 * b * b + 22.0 * b - 3.0) / 96.0;
    let p3 = |b: f64| (2.0 * b.powi(3) - 3.0 * b * b + b) / 12.0;
    [p1(beta1), p1(beta2), p2(beta1), p2(beta2), p3(beta1), p3(beta2)]
}

/// Constant term of the third-order error after combining both stages,
/// `[p1(β1)(2β2-1) - p1(β2)(2β1-1)] / (β1-β2)`, which simplifies to
/// `(3(2β1-1)(2β2-1) + 1)/12`.
pub fn third_order_error_prefactor(beta1: f64, beta2: f64) -> f64 {
    let [p1a, p1b, ..] = leading_error_coeffs(beta1, beta2);
    (p1a * (2.0 * beta2 - 1.0) - p1b * (2.0 * beta1 - 1.0)) / (beta1 - beta2)
}
