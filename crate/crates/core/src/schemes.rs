//! Time steppers.
//!
//! Both one-step schemes are evaluated in their eliminated, explicit form:
//!
//! ```text
//! u^{n+1} = D(ΔtL)⁻¹ [ N(ΔtL) u^n + Δt Σ_i W_i(ΔtL) f(t^n + β_i Δt) ]
//! ```
//!
//! with `N`, `D`, `W_i` polynomials in `s = Δt·σ`. For the two-β scheme
//!
//! ```text
//! D(s)   = β1β2 s² + (β1+β2) s + 2
//! N(s)   = (β1-1)(β2-1) s² + (β1+β2-2) s + 2
//! W_1(s) = -[(2β2-1) + β2(β2-1) s] / (β1-β2)      (W_2: swap β1, β2)
//! ```
//!
//! and for the three-β scheme
//!
//! ```text
//! D(s)   = Π(1+β_i s) + (Σβ_i) s + 5
//! N(s)   = Π(1+(β_i-1) s) + (Σβ_i - 3) s + 5
//! W_1(s) = [β2β3(β2-1)(β3-1) s² + (2β2β3-β2-β3)(β2+β3-1) s
//!           + 6β2β3 - 3β2 - 3β3 + 2] / ((β1-β2)(β1-β3))   (cyclic)
//! ```
//!
//! For semilinear problems `f(t, u)` is sampled at the explicit predictor
//! `û = u^n + βΔt (f(t^n, u^n) - L u^n)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{LinearOperator, OperatorPoly, PolyInverse, PreparedPoly};
use crate::C64;

const MIN_BETA_GAP: f64 = 1e-10;
const STEP_COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaConfig2 {
    pub beta1: f64,
    pub beta2: f64,
}

impl BetaConfig2 {
    pub fn new(beta1: f64, beta2: f64) -> Result<Self> {
        check_finite(&[beta1, beta2])?;
        if !((beta1 - beta2).abs() > MIN_BETA_GAP) {
            return Err(Error::InvalidParameter(format!(
                "beta1 and beta2 must be distinct (got {beta1}, {beta2})"
            )));
        }
        Ok(Self { beta1, beta2 })
    }

    pub fn betas(&self) -> [f64; 2] {
        [self.beta1, self.beta2]
    }

    /// Denominator `D(s)`.
    pub fn denominator(&self) -> OperatorPoly {
        let (b1, b2) = (self.beta1, self.beta2);
        OperatorPoly([2.0, b1 + b2, b1 * b2, 0.0])
    }

    /// Numerator `N(s)` acting on `u^n`.
    pub fn numerator(&self) -> OperatorPoly {
        let (b1, b2) = (self.beta1, self.beta2);
        OperatorPoly([2.0, b1 + b2 - 2.0, (b1 - 1.0) * (b2 - 1.0), 0.0])
    }

    /// Forcing weight polynomials `W_1`, `W_2` (before division by `D`).
    pub fn forcing_weights(&self) -> [OperatorPoly; 2] {
        let w = |bi: f64, bj: f64| {
            let k = -1.0 / (bi - bj);
            OperatorPoly([k * (2.0 * bj - 1.0), k * bj * (bj - 1.0), 0.0, 0.0])
        };
        [w(self.beta1, self.beta2), w(self.beta2, self.beta1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaConfig3 {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl BetaConfig3 {
    pub fn new(beta1: f64, beta2: f64, beta3: f64) -> Result<Self> {
        check_finite(&[beta1, beta2, beta3])?;
        let gaps = [beta1 - beta2, beta1 - beta3, beta2 - beta3];
        if gaps.iter().any(|g| !(g.abs() > MIN_BETA_GAP)) {
            return Err(Error::InvalidParameter(format!(
                "beta1, beta2, beta3 must be pairwise distinct (got {beta1}, {beta2}, {beta3})"
            )));
        }
        Ok(Self { beta1, beta2, beta3 })
    }

    pub fn betas(&self) -> [f64; 3] {
        [self.beta1, self.beta2, self.beta3]
    }

    pub fn denominator(&self) -> OperatorPoly {
        let [a, b, c] = self.betas();
        OperatorPoly([
            6.0,
            2.0 * (a + b + c),
            a * b + a * c + b * c,
            a * b * c,
        ])
    }

    pub fn numerator(&self) -> OperatorPoly {
        let [a, b, c] = self.betas().map(|x| x - 1.0);
        OperatorPoly([
            6.0,
            2.0 * (a + b + c),
            a * b + a * c + b * c,
            a * b * c,
        ])
    }

    pub fn forcing_weights(&self) -> [OperatorPoly; 3] {
        let w = |bi: f64, bj: f64, bk: f64| {
            let k = 1.0 / ((bi - bj) * (bi - bk));
            OperatorPoly([
                k * (6.0 * bj * bk - 3.0 * bj - 3.0 * bk + 2.0),
                k * (2.0 * bj * bk - bj - bk) * (bj + bk - 1.0),
                k * bj * bk * (bj - 1.0) * (bk - 1.0),
                0.0,
            ])
        };
        let [a, b, c] = self.betas();
        [w(a, b, c), w(b, c, a), w(c, a, b)]
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("non-finite parameter in {values:?}")))
    }
}

/// Right-hand side `f` of `u_t + L u = f`.
///
/// Linear forcings depend on `t` only and ignore `u`. Semilinear forcings
/// depend on the state as well; the one-step schemes then evaluate them at
/// the explicit predictor. Evaluation must be valid for any real `t`
/// (stage times `t^n + βΔt` may fall outside `[t^n, t^{n+1}]`).
pub trait Forcing: Send + Sync {
    fn eval(&self, t: f64, u: &[C64]) -> Vec<C64>;

    fn is_semilinear(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroForcing(pub usize);

impl Forcing for ZeroForcing {
    fn eval(&self, _t: f64, _u: &[C64]) -> Vec<C64> {
        vec![C64::default(); self.0]
    }
}

/// A forcing `f(t)`.
pub struct TimeForcing<F>(pub F);

impl<F> Forcing for TimeForcing<F>
where
    F: Fn(f64) -> Vec<C64> + Send + Sync,
{
    fn eval(&self, t: f64, _u: &[C64]) -> Vec<C64> {
        (self.0)(t)
    }
}

/// A forcing `f(t, u)`.
pub struct StateForcing<F>(pub F);

impl<F> Forcing for StateForcing<F>
where
    F: Fn(f64, &[C64]) -> Vec<C64> + Send + Sync,
{
    fn eval(&self, t: f64, u: &[C64]) -> Vec<C64> {
        (self.0)(t, u)
    }

    fn is_semilinear(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub u_next: Vec<C64>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Scheme selection, independent of `Δt` and `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum SchemeConfig {
    OneStep2(BetaConfig2),
    OneStep3(BetaConfig3),
    Rk2 { e2: f64 },
    Rk3,
}

impl SchemeConfig {
    pub fn build(&self, dt: f64, op: &LinearOperator) -> Result<Box<dyn Stepper>> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(match *self {
            SchemeConfig::OneStep2(cfg) => Box::new(OneStep2::new(cfg, dt, op)?),
            SchemeConfig::OneStep3(cfg) => Box::new(OneStep3::new(cfg, dt, op)?),
            SchemeConfig::Rk2 { e2 } => Box::new(Rk2::new(e2, dt, op)?),
            SchemeConfig::Rk3 => Box::new(Rk3::new(dt, op)),
        })
    }

    pub fn label(&self) -> String {
        match self {
            SchemeConfig::OneStep2(c) => format!("onestep2({}, {})", c.beta1, c.beta2),
            SchemeConfig::OneStep3(c) => {
                format!("onestep3({}, {}, {})", c.beta1, c.beta2, c.beta3)
            }
            SchemeConfig::Rk2 { e2 } => format!("rk2(e2={e2})"),
            SchemeConfig::Rk3 => "rk3(kutta)".to_string(),
        }
    }
}

pub trait Stepper: Send + Sync {
    fn dt(&self) -> f64;

    fn config(&self) -> SchemeConfig;

    fn step(&self, u: &[C64], t: f64, f: &dyn Forcing) -> Result<StepReport>;
}

/// Explicit Euler predictor `u^n + βΔt (f(t^n, u^n) - L u^n)`.
pub fn predict_stage(
    u_n: &[C64],
    op: &LinearOperator,
    f: &dyn Forcing,
    t_n: f64,
    beta: f64,
    dt: f64,
) -> Result<Vec<C64>> {
    let drift = drift(u_n, op, f, t_n)?;
    Ok(axpy(u_n, beta * dt, &drift))
}

/// `f(t, u) - L u`.
fn drift(u: &[C64], op: &LinearOperator, f: &dyn Forcing, t: f64) -> Result<Vec<C64>> {
    let mut d = f.eval(t, u);
    if d.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: d.len(),
        });
    }
    let lu = op.apply(u)?;
    for (di, li) in d.iter_mut().zip(lu) {
        *di -= li;
    }
    Ok(d)
}

fn axpy(x: &[C64], a: f64, y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(xi, yi)| xi + yi * a).collect()
}

/// Forcing values at `t + β_i Δt`, predicted for semilinear forcings.
fn stage_forcings(
    betas: &[f64],
    u: &[C64],
    t: f64,
    dt: f64,
    op: &LinearOperator,
    f: &dyn Forcing,
) -> Result<Vec<Vec<C64>>> {
    let out: Vec<Vec<C64>> = if f.is_semilinear() {
        let d = drift(u, op, f, t)?;
        betas
            .iter()
            .map(|&b| f.eval(t + b * dt, &axpy(u, b * dt, &d)))
            .collect()
    } else {
        betas.iter().map(|&b| f.eval(t + b * dt, u)).collect()
    };
    if let Some(bad) = out.iter().find(|v| v.len() != u.len()) {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: bad.len(),
        });
    }
    Ok(out)
}

fn finish(u_next: Vec<C64>, t: f64, extra: &[(&str, f64)]) -> Result<StepReport> {
    if u_next.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::NonFinite { t });
    }
    let max_abs = u_next.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("max_abs_u_next".to_string(), max_abs);
    for (k, v) in extra {
        diagnostics.insert(k.to_string(), *v);
    }
    Ok(StepReport { u_next, diagnostics })
}

/// Rational one-step scheme `D⁻¹ [N u + Δt Σ W_i f_i]` with prepared
/// operator polynomials.
struct Rational {
    dt: f64,
    op: LinearOperator,
    betas: Vec<f64>,
    numerator: PreparedPoly,
    weights: Vec<PreparedPoly>,
    denominator: PolyInverse,
}

impl Rational {
    fn new(
        dt: f64,
        op: &LinearOperator,
        betas: &[f64],
        numerator: OperatorPoly,
        weights: &[OperatorPoly],
        denominator: OperatorPoly,
    ) -> Result<Self> {
        Ok(Self {
            dt,
            op: op.clone(),
            betas: betas.to_vec(),
            numerator: PreparedPoly::new(numerator, dt, op),
            weights: weights.iter().map(|w| PreparedPoly::new(*w, dt, op)).collect(),
            denominator: PolyInverse::new(denominator, dt, op)?,
        })
    }

    fn step(&self, u: &[C64], t: f64, f: &dyn Forcing) -> Result<StepReport> {
        let stages = stage_forcings(&self.betas, u, t, self.dt, &self.op, f)?;
        let mut rhs = vec![C64::default(); u.len()];
        self.numerator.apply_add(u, 1.0, &mut rhs)?;
        for (w, fi) in self.weights.iter().zip(&stages) {
            w.apply_add(fi, self.dt, &mut rhs)?;
        }
        let u_next = self.denominator.solve(&rhs)?;
        finish(
            u_next,
            t + self.dt,
            &[("denominator_min_modulus", self.denominator.min_modulus())],
        )
    }
}

/// Second-order (two-β, one intermediate layer) one-step scheme.
pub struct OneStep2 {
    cfg: BetaConfig2,
    inner: Rational,
}

impl OneStep2 {
    pub fn new(cfg: BetaConfig2, dt: f64, op: &LinearOperator) -> Result<Self> {
        let inner = Rational::new(
            dt,
            op,
            &cfg.betas(),
            cfg.numerator(),
            &cfg.forcing_weights(),
            cfg.denominator(),
        )?;
        Ok(Self { cfg, inner })
    }
}

impl Stepper for OneStep2 {
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    fn config(&self) -> SchemeConfig {
        SchemeConfig::OneStep2(self.cfg)
    }

    fn step(&self, u: &[C64], t: f64, f: &dyn Forcing) -> Result<StepReport> {
        self.inner.step(u, t, f)
    }
}

/// Third-order (three-β, two intermediate layers) one-step scheme.
pub struct OneStep3 {
    cfg: BetaConfig3,
    inner: Rational,
}

impl OneStep3 {
    pub fn new(cfg: BetaConfig3, dt: f64, op: &LinearOperator) -> Result<Self> {
        let inner = Rational::new(
            dt,
            op,
            &cfg.betas(),
            cfg.numerator(),
            &cfg.forcing_weights(),
            cfg.denominator(),
        )?;
        Ok(Self { cfg, inner })
    }
}

impl Stepper for OneStep3 {
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    fn config(&self) -> SchemeConfig {
        SchemeConfig::OneStep3(self.cfg)
    }

    fn step(&self, u: &[C64], t: f64, f: &dyn Forcing) -> Result<StepReport> {
        self.inner.step(u, t, f)
    }
}

/// Two-stage explicit RK with `c21 = e2`, `d2 = 1/(2 e2)`, `d1 = 1 - d2`.
pub struct Rk2 {
    e2: f64,
    dt: f64,
    op: LinearOperator,
}

impl Rk2 {
    pub fn new(e2: f64, dt: f64, op: &LinearOperator) -> Result<Self> {
        if e2 == 0.0 || !e2.is_finite() {
            return Err(Error::InvalidParameter(format!("RK2 needs e2 != 0, got {e2}")));
        }
        Ok(Self {
            e2,
            dt,
            op: op.clone(),
        })
    }
}

impl Stepper for Rk2 {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn config(&self) -> SchemeConfig {
        SchemeConfig::Rk2 { e2: self.e2 }
    }

    fn step(&self, u: &[C64], t: f64, f: &dyn Forcing) -> Result<StepReport> {
        let (dt, e2) = (self.dt, self.e2);
        let d2 = 1.0 / (2.0 * e2);
        let d1 = 1.0 - d2;
        let k1 = drift(u, &self.op, f, t)?;
        let k2 = drift(&axpy(u, dt * e2, &k1), &self.op, f, t + e2 * dt)?;
        let u_next: Vec<C64> = u
            .iter()
            .zip(k1.iter().zip(&k2))
            .map(|(x, (a, b))| x + (a * d1 + b * d2) * dt)
            .collect();
        finish(u_next, t + dt, &[])
    }
}

/// Kutta's third-order method (`e = (0, 1/2, 1)`, `c31 = -1`, `c32 = 2`,
/// `d = (1/6, 2/3, 1/6)`).
pub struct Rk3 {
    dt: f64,
    op: LinearOperator,
}

impl Rk3 {
    pub fn new(dt: f64, op: &LinearOperator) -> Self {
        Self { dt, op: op.clone() }
    }
}

impl Stepper for Rk3 {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn config(&self) -> SchemeConfig {
        SchemeConfig::Rk3
    }

    fn step(&self, u: &[C64], t: f64, f: &dyn Forcing) -> Result<StepReport> {
        let dt = self.dt;
        let k1 = drift(u, &self.op, f, t)?;
        let k2 = drift(&axpy(u, 0.5 * dt, &k1), &self.op, f, t + 0.5 * dt)?;
        let u3: Vec<C64> = u
            .iter()
            .zip(k1.iter().zip(&k2))
            .map(|(x, (a, b))| x + (b * 2.0 - a) * dt)
            .collect();
        let k3 = drift(&u3, &self.op, f, t + dt)?;
        let u_next: Vec<C64> = u
            .iter()
            .enumerate()
            .map(|(i, x)| x + (k1[i] + k2[i] * 4.0 + k3[i]) * (dt / 6.0))
            .collect();
        finish(u_next, t + dt, &[])
    }
}

pub fn step_onestep2(
    cfg: BetaConfig2,
    dt: f64,
    op: &LinearOperator,
    u_n: &[C64],
    t_n: f64,
    f: &dyn Forcing,
) -> Result<StepReport> {
    OneStep2::new(cfg, dt, op)?.step(u_n, t_n, f)
}

pub fn step_onestep3(
    cfg: BetaConfig3,
    dt: f64,
    op: &LinearOperator,
    u_n: &[C64],
    t_n: f64,
    f: &dyn Forcing,
) -> Result<StepReport> {
    OneStep3::new(cfg, dt, op)?.step(u_n, t_n, f)
}

pub fn step_rk2(
    e2: f64,
    dt: f64,
    op: &LinearOperator,
    u_n: &[C64],
    t_n: f64,
    f: &dyn Forcing,
) -> Result<StepReport> {
    Rk2::new(e2, dt, op)?.step(u_n, t_n, f)
}

pub fn step_rk3(
    dt: f64,
    op: &LinearOperator,
    u_n: &[C64],
    t_n: f64,
    f: &dyn Forcing,
) -> Result<StepReport> {
    Rk3::new(dt, op).step(u_n, t_n, f)
}

/// Number of steps of size `dt` covering `[t0, t_end]`.
pub fn step_count(t0: f64, t_end: f64, dt: f64) -> Result<usize> {
    let ratio = (t_end - t0) / dt;
    if !ratio.is_finite() || ratio < -STEP_COUNT_TOL {
        return Err(Error::NonIntegerStepCount { ratio });
    }
    let n = ratio.round();
    if (ratio - n).abs() > STEP_COUNT_TOL * n.max(1.0) {
        return Err(Error::NonIntegerStepCount { ratio });
    }
    Ok(n as usize)
}

/// Step index of `t` on the grid `t0 + m·dt`, `m ≤ steps`.
pub fn snapshot_index(t: f64, t0: f64, dt: f64, steps: usize) -> Result<usize> {
    let m = step_count(t0, t, dt).map_err(|_| Error::SnapshotOffGrid(t))?;
    if m > steps {
        return Err(Error::SnapshotOffGrid(t));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(t, u)` at the requested snapshot times, ascending.
    pub snapshots: Vec<(f64, Vec<C64>)>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &[C64] {
        &self.snapshots.last().expect("trajectory is never empty").1
    }
}

/// Apply `stepper` from `t0` to `t_end`, keeping only the snapshots.
///
/// With no requested snapshots the start and end states are kept.
pub fn integrate(
    stepper: &dyn Stepper,
    f: &dyn Forcing,
    u0: Vec<C64>,
    t0: f64,
    t_end: f64,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    integrate_observed(stepper, f, u0, t0, t_end, snapshot_times, &mut |_, _, _| {})
}

/// As [`integrate`], calling `observer(n, t^n, u^n)` after every step.
pub fn integrate_observed(
    stepper: &dyn Stepper,
    f: &dyn Forcing,
    u0: Vec<C64>,
    t0: f64,
    t_end: f64,
    snapshot_times: &[f64],
    observer: &mut dyn FnMut(usize, f64, &[C64]),
) -> Result<Trajectory> {
    let dt = stepper.dt();
    let steps = step_count(t0, t_end, dt)?;
    let mut wanted: Vec<usize> = if snapshot_times.is_empty() {
        vec![0, steps]
    } else {
        snapshot_times
            .iter()
            .map(|&t| snapshot_index(t, t0, dt, steps))
            .collect::<Result<_>>()?
    };
    wanted.sort_unstable();
    wanted.dedup();

    let time = |n: usize| t0 + n as f64 * dt;
    let mut snapshots = Vec::with_capacity(wanted.len());
    let mut next = wanted.iter().peekable();
    let mut u = u0;
    if next.peek() == Some(&&0) {
        snapshots.push((t0, u.clone()));
        next.next();
    }
    for n in 0..steps {
        u = stepper.step(&u, time(n), f)?.u_next;
        observer(n + 1, time(n + 1), &u);
        if next.peek() == Some(&&(n + 1)) {
            snapshots.push((time(n + 1), u.clone()));
            next.next();
        }
    }
    Ok(Trajectory { snapshots, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::onestep2_coeffs;
    use crate::stability::StabilityFunction;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn scalar(l: f64) -> LinearOperator {
        LinearOperator::scalar(l).unwrap()
    }

    #[test]
    fn beta_configs_validate() {
        assert!(BetaConfig2::new(0.5, 0.5).is_err());
        assert!(BetaConfig2::new(0.5, f64::NAN).is_err());
        assert!(BetaConfig3::new(0.0, 0.5, 0.5).is_err());
        assert!(BetaConfig3::new(0.0, 0.5, 1.0).is_ok());
    }

    #[test]
    fn zero_operator_no_forcing_is_identity() {
        let z = ZeroForcing(1);
        let u = [c(1.7)];
        let cfg2 = BetaConfig2::new(0.3, 1.4).unwrap();
        let cfg3 = BetaConfig3::new(0.0, 0.5, 1.0).unwrap();
        let r2 = step_onestep2(cfg2, 0.1, &scalar(0.0), &u, 0.0, &z).unwrap();
        let r3 = step_onestep3(cfg3, 0.1, &scalar(0.0), &u, 0.0, &z).unwrap();
        assert!((r2.u_next[0] - c(1.7)).norm() <= 4.0 * f64::EPSILON);
        assert!((r3.u_next[0] - c(1.7)).norm() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn onestep2_decay_example() {
        let cfg = BetaConfig2::new(2.0 / 3.0, 1.0).unwrap();
        let r = step_onestep2(cfg, 1.0, &scalar(1.0), &[c(1.0)], 0.0, &ZeroForcing(1)).unwrap();
        assert!((r.u_next[0] - c(5.0 / 13.0)).norm() < 1e-15);
        assert!(r.diagnostics["denominator_min_modulus"] > 0.0);
    }

    #[test]
    fn onestep3_simpson_weights() {
        let cfg = BetaConfig3::new(0.0, 0.5, 1.0).unwrap();
        let w: Vec<f64> = cfg
            .forcing_weights()
            .iter()
            .map(|p| p.eval(0.0) / cfg.denominator().eval(0.0))
            .collect();
        for (a, b) in w.iter().zip([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn forcing_weights_sum_to_one_at_zero() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let (a, b, d) = (rng.gen_range(-2.0..3.0), rng.gen_range(-2.0..3.0), rng.gen_range(-2.0..3.0));
            if let Ok(cfg) = BetaConfig2::new(a, b) {
                let s: f64 = cfg.forcing_weights().iter().map(|p| p.eval(0.0)).sum();
                assert!((s / 2.0 - 1.0).abs() < 1e-9 * (1.0 + 1.0 / (a - b).abs()));
            }
            if let Ok(cfg) = BetaConfig3::new(a, b, d) {
                let s: f64 = cfg.forcing_weights().iter().map(|p| p.eval(0.0)).sum();
                let scale = 1.0 + 1.0 / ((a - b) * (a - d) * (b - d)).abs();
                assert!((s / 6.0 - 1.0).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn rk_exact_for_constant_forcing() {
        let one = TimeForcing(|_t: f64| vec![c(1.0)]);
        let z = scalar(0.0);
        let r2 = step_rk2(0.5, 1.0, &z, &[c(0.0)], 0.0, &one).unwrap();
        let r3 = step_rk3(1.0, &z, &[c(0.0)], 0.0, &one).unwrap();
        assert!((r2.u_next[0] - c(1.0)).norm() < 1e-15);
        assert!((r3.u_next[0] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn rk_amplification_factors() {
        // u' = λu with λ = -σ: z = -σΔt.
        for &z in &[-2.0, -1.0, -0.3, -0.05] {
            let op = scalar(-z);
            let r2 = step_rk2(0.7, 1.0, &op, &[c(1.0)], 0.0, &ZeroForcing(1)).unwrap();
            let r3 = step_rk3(1.0, &op, &[c(1.0)], 0.0, &ZeroForcing(1)).unwrap();
            assert!((r2.u_next[0].re - (1.0 + z + z * z / 2.0)).abs() < 1e-14);
            assert!((r3.u_next[0].re - (1.0 + z + z * z / 2.0 + z * z * z / 6.0)).abs() < 1e-14);
        }
        let op = scalar(2.0);
        let r2 = step_rk2(1.0, 1.0, &op, &[c(1.0)], 0.0, &ZeroForcing(1)).unwrap();
        assert!((r2.u_next[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rk2_rejects_zero_abscissa() {
        assert!(Rk2::new(0.0, 0.1, &scalar(1.0)).is_err());
    }

    #[test]
    fn predictor_examples() {
        let f = TimeForcing(|_t: f64| vec![c(3.0)]);
        let u = [c(1.0)];
        assert_eq!(predict_stage(&u, &scalar(5.0), &f, 0.0, 0.0, 0.1).unwrap(), u.to_vec());
        let p = predict_stage(&u, &scalar(0.0), &f, 0.0, 0.5, 0.2).unwrap();
        assert!((p[0] - c(1.3)).norm() < 1e-15);
        let p = predict_stage(&u, &scalar(2.0), &ZeroForcing(1), 0.0, 0.5, 1.0).unwrap();
        assert!(p[0].norm() < 1e-15);
    }

    #[test]
    fn scalar_reduction_matches_stability_function() {
        let cases2 = [(2.0 / 3.0, 1.0), (0.1, 1.0), (1.0, 2.0), (-1.0 / 3.0, 0.6), (0.0, 1.0)];
        let cases3 = [(0.0, 0.5, 1.0), (0.25, 0.5, 0.75), (0.3, 2.0, 1.0), (-0.25, 0.5, 1.25)];
        for &lam in &[0.0, 0.1, 1.0, 7.5, 300.0] {
            for &dt in &[0.01, 0.5] {
                let z = C64::new(-lam * dt, 0.0);
                let u = [c(1.0)];
                for &(a, b) in &cases2 {
                    let cfg = BetaConfig2::new(a, b).unwrap();
                    let got = step_onestep2(cfg, dt, &scalar(lam), &u, 0.0, &ZeroForcing(1)).unwrap();
                    let want = StabilityFunction::onestep2(cfg).eval_r(z).unwrap();
                    assert!((got.u_next[0] - want).norm() <= 1e-13 * (1.0 + want.norm()));
                }
                for &(a, b, d) in &cases3 {
                    let cfg = BetaConfig3::new(a, b, d).unwrap();
                    let got = step_onestep3(cfg, dt, &scalar(lam), &u, 0.0, &ZeroForcing(1)).unwrap();
                    let want = StabilityFunction::onestep3(cfg).eval_r(z).unwrap();
                    assert!((got.u_next[0] - want).norm() <= 1e-13 * (1.0 + want.norm()));
                }
                let got = step_rk2(0.5, dt, &scalar(lam), &u, 0.0, &ZeroForcing(1)).unwrap();
                let want = StabilityFunction::explicit_rk(2).unwrap().eval_r(z).unwrap();
                assert!((got.u_next[0] - want).norm() <= 1e-13 * (1.0 + want.norm()));
                let got = step_rk3(dt, &scalar(lam), &u, 0.0, &ZeroForcing(1)).unwrap();
                let want = StabilityFunction::explicit_rk(3).unwrap().eval_r(z).unwrap();
                assert!((got.u_next[0] - want).norm() <= 1e-13 * (1.0 + want.norm()));
            }
        }
    }

    /// The explicit form satisfies the uneliminated two-layer relation
    /// `[A_{β2}B_{β1} - A_{β1}B_{β2}] u^{n+1} = [A_{β1}C_{β2} - A_{β2}C_{β1}] u^n
    ///  + A_{β2} f(β1) - A_{β1} f(β2)`.
    #[test]
    fn implicit_form_equivalence_dense() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        let n = 4;
        for trial in 0..20 {
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let m = &b * b.transpose();
            let rows: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect();
            let op = LinearOperator::dense(n, &rows).unwrap();
            let dt = rng.gen_range(0.05..0.8);
            let (b1, b2) = (rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0));
            let Ok(cfg) = BetaConfig2::new(b1, b2) else { continue };
            let u: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0))).collect();
            let f1: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0))).collect();
            let f2: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0))).collect();
            let forcing = TimeForcing(move |t: f64| {
                if (t - b1 * dt).abs() < 1e-14 { f1.clone() } else { f2.clone() }
            });
            let next = match step_onestep2(cfg, dt, &op, &u, 0.0, &forcing) {
                Ok(r) => r.u_next,
                Err(_) => continue,
            };

            let id = DMatrix::<f64>::identity(n, n);
            let layer = |beta: f64, i: usize| {
                let k = onestep2_coeffs(beta);
                &id * (k.a[i] / dt) + &m * k.b[i]
            };
            let (a1, a2) = (layer(b1, 1), layer(b2, 1));
            let (bb1, bb2) = (layer(b1, 2), layer(b2, 2));
            let (c1, c2) = (layer(b1, 0), layer(b2, 0));
            let lhs_op = &a2 * &bb1 - &a1 * &bb2;
            // Uneliminated relation moves C u^n to the right: A u_h + B u_1 = f - C u^n.
            let rhs_op = &a1 * &c2 - &a2 * &c1;
            let re = |v: &[C64]| nalgebra::DVector::from_iterator(n, v.iter().map(|x| x.re));
            let f1v = re(&forcing.eval(b1 * dt, &u));
            let f2v = re(&forcing.eval(b2 * dt, &u));
            let rhs = &rhs_op * re(&u) + &a2 * f1v - &a1 * f2v;
            let resid = (&lhs_op * re(&next) - &rhs).norm();
            assert!(resid <= 1e-9 * rhs.norm().max(1.0), "trial {trial}: {resid:e}");
        }
    }

    #[test]
    fn rk2_degeneration_nonlinear() {
        // u' = -u³ + cos t with L = 0, semilinear.
        let f = StateForcing(|t: f64, u: &[C64]| vec![-u[0] * u[0] * u[0] + C64::new(t.cos(), 0.0)]);
        let z = scalar(0.0);
        for &b2 in &[0.5, 1.0, 2.0] {
            let cfg = BetaConfig2::new(0.0, b2).unwrap();
            let one = OneStep2::new(cfg, 0.05, &z).unwrap();
            let rk = Rk2::new(b2, 0.05, &z).unwrap();
            let mut u = vec![c(0.3)];
            for n in 0..100 {
                let t = n as f64 * 0.05;
                let a = one.step(&u, t, &f).unwrap().u_next;
                let b = rk.step(&u, t, &f).unwrap().u_next;
                assert!((a[0] - b[0]).norm() <= 1e-13, "b2={b2} n={n}");
                u = b;
            }
        }
    }

    #[test]
    fn step_count_and_snapshots() {
        assert_eq!(step_count(0.0, 1.0, 0.25).unwrap(), 4);
        assert_eq!(step_count(0.0, 0.25, 1e-3).unwrap(), 250);
        assert!(matches!(step_count(0.0, 1.0, 0.3), Err(Error::NonIntegerStepCount { .. })));
        assert_eq!(step_count(0.0, 0.0, 0.1).unwrap(), 0);
        assert!(snapshot_index(0.15, 0.0, 0.1, 10).is_err());
        assert!(snapshot_index(2.0, 0.0, 0.1, 10).is_err());
        assert_eq!(snapshot_index(0.3, 0.0, 0.1, 10).unwrap(), 3);
    }

    #[test]
    fn integrate_zero_steps_and_snapshots() {
        let op = scalar(1.0);
        let st = OneStep2::new(BetaConfig2::new(2.0 / 3.0, 1.0).unwrap(), 0.1, &op).unwrap();
        let tr = integrate(&st, &ZeroForcing(1), vec![c(1.0)], 0.0, 0.0, &[]).unwrap();
        assert_eq!(tr.snapshots, vec![(0.0, vec![c(1.0)])]);
        let tr = integrate(&st, &ZeroForcing(1), vec![c(1.0)], 0.0, 1.0, &[0.5, 0.0, 1.0]).unwrap();
        assert_eq!(tr.steps, 10);
        let times: Vec<f64> = tr.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(times.len(), 3);
        assert!((times[1] - 0.5).abs() < 1e-15);
        assert!(integrate(&st, &ZeroForcing(1), vec![c(1.0)], 0.0, 1.0, &[0.55]).is_err());
    }

    #[test]
    fn l_stable_decay_is_monotone() {
        let lam = 1000.0;
        let op = scalar(lam);
        let st = OneStep2::new(BetaConfig2::new(0.1, 1.0).unwrap(), 1.0 / 32.0, &op).unwrap();
        let mut prev = 1.0;
        integrate_observed(&st, &ZeroForcing(1), vec![c(1.0)], 0.0, 1.0, &[], &mut |_, _, u| {
            assert!(u[0].norm() <= prev);
            prev = u[0].norm();
        })
        .unwrap();
    }

    #[test]
    fn dimension_mismatch_from_forcing() {
        let op = LinearOperator::diagonal(vec![1.0, 2.0]).unwrap();
        let cfg = BetaConfig2::new(0.0, 1.0).unwrap();
        let u = [c(1.0), c(1.0)];
        assert!(matches!(
            step_onestep2(cfg, 0.1, &op, &u, 0.0, &ZeroForcing(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
