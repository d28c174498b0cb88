//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::json;

use onestep::coeffs::{gbdf_coeffs, onestep2_coeffs, onestep3_coeffs};
use onestep::harness::convergence_study;
use onestep::problems::{problem_by_name, ProblemParams, ProblemSpec};
use onestep::schemes::{integrate, snapshot_index, step_count, BetaConfig2, BetaConfig3, SchemeConfig};
use onestep::spectral::{field_pgm, write_field_binary};
use onestep::stability::{classify, numeric_a_stability, rasterize, StabilityFunction};
use onestep::Error;

use crate::{
    CheckArgs, CliError, CliResult, CoeffScheme, CoeffsArgs, ConvergeArgs, ProblemArgs, RegionArgs,
    RunArgs, SchemeArgs, SchemeName,
};

/// Parameter-shaped library errors are usage errors; the rest are runtime.
fn classify_error(e: Error) -> CliError {
    match e {
        Error::InvalidParameter(_)
        | Error::UnsupportedK(_)
        | Error::DuplicateNodes { .. }
        | Error::NonIntegerStepCount { .. }
        | Error::SnapshotOffGrid(_)
        | Error::MissingReference => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.into()),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Files written by one command; removed again unless the command commits.
struct Outputs {
    files: Vec<PathBuf>,
    dir: Option<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new(), dir: None, committed: false }
    }

    fn create_dir(&mut self, dir: &Path) -> CliResult {
        if !dir.exists() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            self.dir = Some(dir.to_path_buf());
        }
        Ok(())
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult {
        self.files.push(path.to_path_buf());
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    fn track(&mut self, path: &Path) {
        self.files.push(path.to_path_buf());
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if let Some(d) = &self.dir {
            let _ = fs::remove_dir_all(d);
        }
    }
}

fn to_json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

pub fn coeffs(a: CoeffsArgs) -> CliResult {
    if a.k.is_some() && a.scheme != CoeffScheme::Gbdf {
        return Err(usage("--k is only valid with --scheme gbdf"));
    }
    let body = match a.scheme {
        CoeffScheme::Gbdf => {
            let k = a.k.ok_or_else(|| usage("--scheme gbdf requires --k"))?;
            to_json(&json!(gbdf_coeffs(k, a.beta).map_err(classify_error)?))
        }
        CoeffScheme::Onestep2 => to_json(&json!(onestep2_coeffs(a.beta))),
        CoeffScheme::Onestep3 => to_json(&json!(onestep3_coeffs(a.beta))),
    };
    match a.json {
        Some(path) => {
            let mut out = Outputs::new();
            out.write(&path, body.as_bytes())?;
            out.commit();
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn stability_function(order: u32, betas: &[Option<f64>]) -> CliResult<StabilityFunction> {
    let need = |i: usize| betas[i].ok_or_else(|| usage(format!("--beta{} is required", i + 1)));
    match order {
        2 => {
            let cfg = BetaConfig2::new(need(0)?, need(1)?).map_err(classify_error)?;
            Ok(StabilityFunction::onestep2(cfg))
        }
        3 => {
            let cfg = BetaConfig3::new(need(0)?, need(1)?, need(2)?).map_err(classify_error)?;
            Ok(StabilityFunction::onestep3(cfg))
        }
        other => Err(usage(format!("--order must be 2 or 3, got {other}"))),
    }
}

pub fn stability_region(a: RegionArgs) -> CliResult {
    let sf = if a.rk {
        StabilityFunction::explicit_rk(a.order).map_err(classify_error)?
    } else {
        stability_function(a.order, &[a.beta1, a.beta2, a.beta3])?
    };
    if a.n < 2 {
        return Err(usage(format!("--n must be at least 2, got {}", a.n)));
    }
    let raster = rasterize(&sf, (a.re.0, a.re.1), (a.im.0, a.im.1), a.n, a.n).map_err(classify_error)?;
    let mut out = Outputs::new();
    out.write(&a.out, &raster.to_pgm())?;
    let mut meta = raster.meta_json();
    meta.push('\n');
    out.write(&a.out.with_extension("json"), meta.as_bytes())?;
    out.commit();
    Ok(())
}

pub fn stability_check(a: CheckArgs) -> CliResult {
    let b = &a.betas.0;
    let expected = match a.order {
        2 => 2,
        3 => 3,
        other => return Err(usage(format!("--order must be 2 or 3, got {other}"))),
    };
    if b.len() != expected {
        return Err(usage(format!("order {} needs {expected} betas, got {}", a.order, b.len())));
    }
    let opt: Vec<Option<f64>> = b.iter().copied().map(Some).chain([None]).collect();
    let sf = stability_function(a.order, &opt)?;
    let class = classify(&sf.kind);
    let numeric = numeric_a_stability(&sf);
    let report = json!({
        "order": a.order,
        "betas": b,
        "provably_a_stable": class.a_stable,
        "l_stable": class.l_stable,
        "condition_applicable": class.condition_applicable,
        "numerically_a_stable": numeric.numerically_a_stable,
        "max_abs_R_on_axis": numeric.max_abs_r_on_axis,
        "modulus_at_infinity": numeric.modulus_at_infinity,
        "left_half_plane_poles": numeric.left_half_plane_poles,
    });
    print!("{}", to_json(&report));
    Ok(())
}

fn scheme_config(a: &SchemeArgs) -> CliResult<SchemeConfig> {
    let b = &a.betas.0;
    let count = |n: usize| {
        if b.len() == n {
            Ok(())
        } else {
            Err(usage(format!("{:?} needs {n} value(s) in --betas, got {}", a.scheme, b.len())))
        }
    };
    Ok(match a.scheme {
        SchemeName::Onestep2 => {
            count(2)?;
            SchemeConfig::OneStep2(BetaConfig2::new(b[0], b[1]).map_err(classify_error)?)
        }
        SchemeName::Onestep3 => {
            count(3)?;
            SchemeConfig::OneStep3(BetaConfig3::new(b[0], b[1], b[2]).map_err(classify_error)?)
        }
        SchemeName::Rk2 => {
            count(1)?;
            SchemeConfig::Rk2 { e2: b[0] }
        }
        SchemeName::Rk3 => SchemeConfig::Rk3,
    })
}

fn problem(a: &ProblemArgs) -> CliResult<ProblemSpec> {
    let params = ProblemParams { n: a.n, lambda: a.lambda, diffusion: a.diffusion, eps: a.eps };
    problem_by_name(&a.problem, &params).map_err(classify_error)
}

fn positive(name: &str, v: f64) -> CliResult {
    if v > 0.0 {
        Ok(())
    } else {
        Err(usage(format!("{name} must be positive, got {v}")))
    }
}

pub fn converge(a: ConvergeArgs) -> CliResult {
    let spec = problem(&a.problem)?;
    let config = scheme_config(&a.scheme)?;
    positive("--T", a.t_end)?;
    let dts = &a.dts.0;
    for &dt in dts {
        positive("--dts entries", dt)?;
        step_count(0.0, a.t_end, dt).map_err(classify_error)?;
    }
    if dts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(usage("--dts must be strictly decreasing"));
    }
    if let Some(r) = a.reference_dt {
        positive("--reference-dt", r)?;
        step_count(0.0, a.t_end, r).map_err(classify_error)?;
    }
    if spec.exact.is_none() && a.reference_dt.is_none() {
        return Err(usage(format!("problem '{}' has no exact solution; pass --reference-dt", spec.name)));
    }
    let report = convergence_study(&config, &spec, dts, a.t_end, a.reference_dt)
        .map_err(|e| CliError::Runtime(anyhow::Error::new(e).context("convergence study failed")))?;
    let json_path = a.json.clone().unwrap_or_else(|| a.csv.with_extension("json"));
    let mut out = Outputs::new();
    out.write(&a.csv, report.to_csv().as_bytes())?;
    let mut body = report.to_json();
    body.push('\n');
    out.write(&json_path, body.as_bytes())?;
    out.commit();
    Ok(())
}

pub fn run(a: RunArgs) -> CliResult {
    let spec = problem(&a.problem)?;
    let config = scheme_config(&a.scheme)?;
    positive("--dt", a.dt)?;
    positive("--T", a.t_end)?;
    let steps = step_count(0.0, a.t_end, a.dt).map_err(classify_error)?;
    let times = match &a.snapshots {
        Some(s) => s.0.clone(),
        None => vec![0.0, a.t_end],
    };
    for &t in &times {
        snapshot_index(t, 0.0, a.dt, steps).map_err(classify_error)?;
    }

    let stepper = config.build(a.dt, &spec.operator).map_err(classify_error)?;
    let mut out = Outputs::new();
    out.create_dir(&a.out)?;
    let traj = integrate(
        stepper.as_ref(),
        spec.forcing.as_ref(),
        spec.initial.clone(),
        0.0,
        a.t_end,
        &times,
    )
    .map_err(|e| CliError::Runtime(anyhow::Error::new(e).context("integration failed")))?;

    let mut records = Vec::new();
    match spec.grid {
        Some(grid) => {
            for (k, (t, state)) in traj.snapshots.iter().enumerate() {
                let values = spec.to_physical(state);
                let stem = a.out.join(format!("snapshot_{k:03}"));
                let (bin, header) = (stem.with_extension("bin"), stem.with_extension("json"));
                out.track(&bin);
                out.track(&header);
                write_field_binary(&bin, &header, &grid, &values, *t)
                    .with_context(|| format!("writing {}", bin.display()))?;
                out.write(&stem.with_extension("pgm"), &field_pgm(&grid, &values))?;
                let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                records.push(json!({
                    "t": t,
                    "stem": format!("snapshot_{k:03}"),
                    "max_abs": max_abs,
                    "mass": values.iter().sum::<f64>() * grid.cell_area(),
                    "l2_norm": spec.norm(state),
                    "imaginary_residue": spec.imaginary_residue(state),
                    "finite": values.iter().all(|v| v.is_finite()),
                }));
            }
        }
        None => {
            let mut csv = String::from("t,re,im\n");
            for (t, state) in &traj.snapshots {
                for u in state {
                    csv.push_str(&format!("{t:.16e},{:.16e},{:.16e}\n", u.re, u.im));
                }
                records.push(json!({
                    "t": t,
                    "max_abs": state.iter().fold(0.0f64, |m, u| m.max(u.norm())),
                }));
            }
            out.write(&a.out.join("trajectory.csv"), csv.as_bytes())?;
        }
    }
    let summary = json!({
        "problem": spec.name,
        "scheme": config,
        "scheme_label": config.label(),
        "dt": a.dt,
        "t_end": a.t_end,
        "steps": traj.steps,
        "grid": spec.grid,
        "snapshots": records,
    });
    out.write(&a.out.join("run.json"), to_json(&summary).as_bytes())?;
    out.commit();
    Ok(())
}
