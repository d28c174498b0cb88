//! Error norms and temporal convergence studies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::ProblemSpec;
use crate::schemes::{integrate, SchemeConfig};
use crate::spectral::Field2D;
use crate::C64;

/// Euclidean norm of `a - b`.
pub fn l2_error(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
}

/// Grid-quadrature L² norm of `a - b` for physical fields.
pub fn l2_error_field(a: &Field2D, b: &Field2D) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let (va, vb) = (a.real_values()?, b.real_values()?);
    let sum: f64 = va.iter().zip(&vb).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum * a.grid.cell_area()).sqrt())
}

/// Observed orders between consecutive runs,
/// `ln(e_i / e_{i+1}) / ln(dt_i / dt_{i+1})`.
pub fn observed_orders(dts: &[f64], errors: &[f64]) -> Vec<f64> {
    dts.windows(2)
        .zip(errors.windows(2))
        .map(|(d, e)| (e[0] / e[1]).ln() / (d[0] / d[1]).ln())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub scheme: SchemeConfig,
    pub scheme_label: String,
    pub problem: String,
    pub t_end: f64,
    pub reference_dt: Option<f64>,
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    /// `dt,error,order` with 17 significant digits; order is blank on the
    /// first row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dt,error,order\n");
        for (i, (dt, err)) in self.dts.iter().zip(&self.errors).enumerate() {
            let order = match i {
                0 => String::new(),
                _ => format!("{:.16e}", self.orders[i - 1]),
            };
            s.push_str(&format!("{dt:.16e},{err:.16e},{order}\n"));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Final state after integrating `problem` from 0 to `t_end`.
pub fn final_state(
    problem: &ProblemSpec,
    config: &SchemeConfig,
    dt: f64,
    t_end: f64,
) -> Result<Vec<C64>> {
    let stepper = config.build(dt, &problem.operator)?;
    let traj = integrate(
        stepper.as_ref(),
        problem.forcing.as_ref(),
        problem.initial.clone(),
        0.0,
        t_end,
        &[t_end],
    )?;
    Ok(traj.final_state().to_vec())
}

/// Fine-step solution used in place of an exact one.
pub fn reference_solution(
    problem: &ProblemSpec,
    config: &SchemeConfig,
    dt_ref: f64,
    t_end: f64,
) -> Result<Vec<C64>> {
    final_state(problem, config, dt_ref, t_end)
}

fn map_dts<T: Send>(dts: &[f64], f: impl Fn(f64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        dts.par_iter().map(|&dt| f(dt)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        dts.iter().map(|&dt| f(dt)).collect()
    }
}

/// Errors at `t_end` against the exact solution, or against a reference
/// run with step `reference_dt` when given.
pub fn convergence_study(
    config: &SchemeConfig,
    problem: &ProblemSpec,
    dts: &[f64],
    t_end: f64,
    reference_dt: Option<f64>,
) -> Result<ConvergenceReport> {
    if dts.is_empty() {
        return Err(Error::InvalidParameter("no time steps given".into()));
    }
    if dts.iter().any(|&d| !(d > 0.0) || !d.is_finite()) || dts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("time steps must be positive and strictly decreasing".into()));
    }
    let target = match (reference_dt, &problem.exact) {
        (Some(dt_ref), _) => reference_solution(problem, config, dt_ref, t_end)?,
        (None, Some(exact)) => exact(t_end),
        (None, None) => return Err(Error::MissingReference),
    };
    let errors = map_dts(dts, |dt| {
        let u = final_state(problem, config, dt, t_end)?;
        problem.distance(&u, &target)
    })?;
    Ok(ConvergenceReport {
        scheme: *config,
        scheme_label: config.label(),
        problem: problem.name.clone(),
        t_end,
        reference_dt,
        dts: dts.to_vec(),
        orders: observed_orders(dts, &errors),
        errors,
    })
}
