//! Single steps and uniform-mesh integration.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::methods::MethodSpec;
use crate::problem::OdeProblem;
use crate::shape::{shape_for, ShapeDiagnostics, ShapeOverride, ShapeResult, ShapeStatus};

/// Threshold on `max|ε²|·h²` above which a run is reported as suspicious.
pub const EPS_H2_WARN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub u: Vec<f64>,
    pub h: f64,
    pub shape: ShapeResult,
    /// `K_1..K_s`.
    pub stage_values: Vec<Vec<f64>>,
    pub u_next: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Monitors {
    pub max_eps_h2: f64,
    pub fallback_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub problem: String,
    pub method: String,
    pub t0: f64,
    pub u0: Vec<f64>,
    pub h: f64,
    /// Empty when records were not kept.
    pub records: Vec<StepRecord>,
    pub final_t: f64,
    pub final_u: Vec<f64>,
    pub steps_taken: usize,
    pub monitors: Monitors,
}

/// An integration stopped early; `partial` holds the steps completed.
#[derive(Debug, thiserror::Error)]
#[error("integration aborted after {} steps: {error}", partial.steps_taken)]
pub struct Aborted {
    pub error: Error,
    pub partial: Box<Trajectory>,
}

#[derive(Debug, Clone, Default)]
pub struct IntegrateOptions {
    pub shape_override: Option<ShapeOverride>,
    /// Drop per-step records and keep only the final state.
    pub final_only: bool,
}

fn fallback_shape(spec: &MethodSpec, dim: usize) -> ShapeResult {
    ShapeResult::fallback(spec.stages, dim, ShapeDiagnostics::default())
}

/// Shape for the step starting at `(t, u)`; a domain error in the partials
/// becomes a fallback.
fn step_shape(
    spec: &MethodSpec,
    problem: &OdeProblem,
    t: f64,
    u: &[f64],
    over: Option<&ShapeOverride>,
) -> Result<ShapeResult> {
    if spec.classical {
        return Ok(ShapeResult::disabled(spec.stages, u.len()));
    }
    match problem.partials_at(t, u) {
        Ok(table) => shape_for(spec, &table, t, u, over),
        Err(Error::Domain(_)) => Ok(fallback_shape(spec, u.len())),
        Err(e) => Err(e),
    }
}

fn stage_error(step: usize, stage: usize, e: crate::error::DomainError) -> Error {
    Error::Stage {
        step,
        stage,
        source: e,
    }
}

/// One step with explicit shape parameters.
pub fn step_with_shape(
    spec: &MethodSpec,
    problem: &OdeProblem,
    t: f64,
    u: &[f64],
    h: f64,
    shape: ShapeResult,
    step_index: usize,
) -> Result<StepRecord> {
    let s = spec.stages;
    let dim = u.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(s);
    k.push(problem.rhs(t, u).map_err(|e| stage_error(step_index, 1, e))?);
    for j in 1..s {
        let mut y: Vec<f64> = (0..dim)
            .map(|i| u[i] + h * (0..j).map(|m| spec.a[j][m] * k[m][i]).sum::<f64>())
            .collect();
        if let Some(eps) = shape.stage(j + 1) {
            let ch = spec.c[j] * h;
            for (i, yi) in y.iter_mut().enumerate() {
                let e = if eps.len() == dim { eps[i] } else { eps[0] };
                if e != 0.0 {
                    *yi *= 1.0 + e * ch * ch / 2.0;
                }
            }
        }
        let kj = problem
            .rhs(t + spec.c[j] * h, &y)
            .map_err(|e| stage_error(step_index, j + 1, e))?;
        k.push(kj);
    }
    let u_next = (0..dim)
        .map(|i| u[i] + h * (0..s).map(|j| spec.w[j] * k[j][i]).sum::<f64>())
        .collect();
    Ok(StepRecord {
        t,
        u: u.to_vec(),
        h,
        shape,
        stage_values: k,
        u_next,
    })
}

/// One step from `(t, u)` with size `h`.
pub fn mq_step(spec: &MethodSpec, problem: &OdeProblem, t: f64, u: &[f64], h: f64) -> Result<StepRecord> {
    mq_step_with(spec, problem, t, u, h, None)
}

pub fn mq_step_with(
    spec: &MethodSpec,
    problem: &OdeProblem,
    t: f64,
    u: &[f64],
    h: f64,
    over: Option<&ShapeOverride>,
) -> Result<StepRecord> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    let shape = step_shape(spec, problem, t, u, over)?;
    step_with_shape(spec, problem, t, u, h, shape, 0)
}

pub fn integrate(spec: &MethodSpec, problem: &OdeProblem, n: usize) -> Result<Trajectory, Aborted> {
    integrate_with(spec, problem, n, &IntegrateOptions::default())
}

/// `n` uniform steps from `t0` to `t_end`.
pub fn integrate_with(
    spec: &MethodSpec,
    problem: &OdeProblem,
    n: usize,
    opts: &IntegrateOptions,
) -> Result<Trajectory, Aborted> {
    let h = (problem.t_end - problem.t0) / n as f64;
    let mut traj = Trajectory {
        problem: problem.name.clone(),
        method: spec.id.to_string(),
        t0: problem.t0,
        u0: problem.u0.clone(),
        h,
        records: Vec::new(),
        final_t: problem.t0,
        final_u: problem.u0.clone(),
        steps_taken: 0,
        monitors: Monitors::default(),
    };
    if n == 0 || !(h > 0.0) {
        let error = Error::InvalidArgument(format!(
            "need N >= 1 and t_end > t0 (N={n}, h={h})"
        ));
        return Err(Aborted {
            error,
            partial: Box::new(traj),
        });
    }
    if !opts.final_only {
        traj.records.reserve(n);
    }
    let mut u = problem.u0.clone();
    for i in 0..n {
        let t = problem.t0 + i as f64 * h;
        let rec = step_shape(spec, problem, t, &u, opts.shape_override.as_ref())
            .and_then(|shape| step_with_shape(spec, problem, t, &u, h, shape, i + 1));
        let rec = match rec {
            Ok(r) => r,
            Err(error) => {
                return Err(Aborted {
                    error,
                    partial: Box::new(traj),
                })
            }
        };
        let m = &mut traj.monitors;
        m.max_eps_h2 = m.max_eps_h2.max(rec.shape.max_abs() * h * h);
        if rec.shape.status == ShapeStatus::FallbackZero || !rec.shape.diag.fallback_components.is_empty() {
            m.fallback_count += 1;
        }
        u.clone_from(&rec.u_next);
        traj.steps_taken = i + 1;
        traj.final_t = if i + 1 == n { problem.t_end } else { t + h };
        traj.final_u.clone_from(&u);
        if !opts.final_only {
            traj.records.push(rec);
        }
    }
    if traj.monitors.max_eps_h2 > EPS_H2_WARN {
        log::warn!(
            "{} on {}: max |eps^2| h^2 = {:.3e} exceeds {EPS_H2_WARN}",
            spec.id,
            problem.name,
            traj.monitors.max_eps_h2
        );
    }
    Ok(traj)
}

fn status_label(s: ShapeStatus) -> &'static str {
    match s {
        ShapeStatus::Optimal => "optimal",
        ShapeStatus::FallbackZero => "fallback_zero",
        ShapeStatus::Override => "override",
        ShapeStatus::Disabled => "disabled",
    }
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    /// `(t_i, u_i)` for every node, starting with the initial state.
    pub fn nodes(&self) -> Vec<(f64, Vec<f64>)> {
        let mut out = Vec::with_capacity(self.records.len() + 1);
        out.push((self.t0, self.u0.clone()));
        for r in &self.records {
            out.push((r.t + r.h, r.u_next.clone()));
        }
        if let Some(last) = out.last_mut() {
            if self.steps_taken > 0 && !self.records.is_empty() {
                *last = (self.final_t, self.final_u.clone());
            }
        }
        out
    }

    /// CSV export; row `i` holds the state after step `i` and the shape used
    /// for that step. System components of one `ε_j²` are joined with `;`.
    pub fn write_csv<W: Write>(&self, mut w: W, stages: usize) -> io::Result<()> {
        let dim = self.dim();
        let mut header = vec!["i".to_string(), "t".to_string()];
        header.extend((1..=dim).map(|i| format!("u_{i}")));
        header.extend((2..=stages.max(2)).map(|j| format!("eps{j}_sq")));
        header.push("status".into());
        writeln!(w, "{}", header.join(","))?;
        let blanks = vec![String::new(); stages.max(2) - 1];
        let mut row = |i: usize, t: f64, u: &[f64], eps: &[String], status: &str| {
            let mut cells = vec![i.to_string(), format!("{t:e}")];
            cells.extend(u.iter().map(|x| format!("{x:e}")));
            cells.extend(eps.iter().cloned());
            cells.push(status.to_string());
            writeln!(w, "{}", cells.join(","))
        };
        row(0, self.t0, &self.u0, &blanks, "initial")?;
        for (i, r) in self.records.iter().enumerate() {
            let t = if i + 1 == self.steps_taken { self.final_t } else { r.t + r.h };
            let eps: Vec<String> = (0..stages.max(2) - 1)
                .map(|j| match r.shape.eps_sq.get(j) {
                    Some(v) => v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";"),
                    None => String::new(),
                })
                .collect();
            row(i + 1, t, &r.u_next, &eps, status_label(r.shape.status))?;
        }
        Ok(())
    }
}

/// Two-stage iterative form: `u_1 = S(u + a_21 h f)`, then
/// `u⁺ = (1 − w_1/a_21)u + (w_1/a_21)S⁻¹u_1 + w_2 h f(t + c_2 h, u_1)`.
pub fn equivalent_iterative_step(
    spec: &MethodSpec,
    problem: &OdeProblem,
    t: f64,
    u: &[f64],
    h: f64,
    shape: &ShapeResult,
) -> Result<Vec<f64>> {
    if spec.stages != 2 {
        return Err(Error::InvalidArgument("iterative form needs a two-stage method".into()));
    }
    let a21 = spec.a[1][0];
    if a21 == 0.0 {
        return Err(Error::InvalidArgument("iterative form needs a_21 != 0".into()));
    }
    let (w1, w2, c2) = (spec.w[0], spec.w[1], spec.c[1]);
    let dim = u.len();
    let eps = shape.stage(2).unwrap_or(&[]);
    let scale: Vec<f64> = (0..dim)
        .map(|i| {
            let e = match eps.len() {
                0 => 0.0,
                n if n == dim => eps[i],
                _ => eps[0],
            };
            1.0 + e * (c2 * h).powi(2) / 2.0
        })
        .collect();
    if scale.contains(&0.0) {
        return Err(Error::InvalidArgument("scaling factor vanishes".into()));
    }
    let f0 = problem.rhs(t, u)?;
    let u1: Vec<f64> = (0..dim).map(|i| scale[i] * (u[i] + a21 * h * f0[i])).collect();
    let f1 = problem.rhs(t + c2 * h, &u1)?;
    let r = w1 / a21;
    Ok((0..dim)
        .map(|i| (1.0 - r) * u[i] + r * u1[i] / scale[i] + w2 * h * f1[i])
        .collect())
}
