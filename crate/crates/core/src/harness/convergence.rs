use std::time::Instant;

use serde::Serialize;

use super::registry::{find_problem, shape_override};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::methods::{find_method, MethodSpec};
use crate::problem::{norm, sub, OdeProblem};
use crate::shape::ShapeOverride;
use crate::stepper::{integrate_with, mq_step_with, IntegrateOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub error: f64,
    /// `log2(e(N/2)/e(N))`; absent on the first row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub method: String,
    pub rows: Vec<ConvergenceRow>,
    pub wall_time_s: f64,
}

impl ConvergenceReport {
    pub fn last(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Convergence study of registry method `method` on registry problem
/// `problem`, with any registered shape override applied.
pub fn run_convergence(method: &str, problem: &str, ns: &[usize], exec: Execution) -> Result<ConvergenceReport> {
    let spec = find_method(method)?;
    let p = find_problem(problem)?;
    run_convergence_on(spec, &p, ns, shape_override(problem, method), exec)
}

pub fn run_convergence_on(
    spec: &MethodSpec,
    problem: &OdeProblem,
    ns: &[usize],
    over: Option<ShapeOverride>,
    exec: Execution,
) -> Result<ConvergenceReport> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::InvalidArgument(
            "step counts must be positive and strictly increasing".into(),
        ));
    }
    let exact = problem
        .exact(problem.t_end)
        .ok_or_else(|| Error::Unsupported(format!("{} has no reference solution", problem.name)))?;
    let opts = IntegrateOptions {
        shape_override: over,
        final_only: true,
    };
    let start = Instant::now();
    let finals = exec.map(ns, |&n| {
        integrate_with(spec, problem, n, &opts)
            .map(|tr| tr.final_u)
            .map_err(|a| Error::Run {
                method: spec.id.to_string(),
                n,
                source: Box::new(a.error),
            })
    });
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(ns.len());
    for (&n, u) in ns.iter().zip(finals) {
        let error = norm(&sub(&u?, &exact));
        let order = rows.last().map(|prev| (prev.error / error).log2());
        rows.push(ConvergenceRow { n, error, order });
    }
    Ok(ConvergenceReport {
        problem: problem.name.clone(),
        method: spec.id.to_string(),
        rows,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    /// Least-squares slope of `log|err|` against `log h`.
    pub slope: f64,
    /// `(h, |u(t+h) - Φ_h(u)|)` for every requested step.
    pub points: Vec<(f64, f64)>,
    /// Points above the roundoff floor that entered the fit.
    pub used: usize,
}

/// Errors below this multiple of `ε·max(1, |u|)` are treated as roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e3;

/// Least-squares slope through `(ln x, ln y)`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Single steps from `(t, u)` compared with the exact solution at `t + h`.
///
/// The exact solution installed on the problem must pass through `(t, u)`.
pub fn local_order_probe(method: &str, problem: &str, t: f64, u: &[f64], hs: &[f64]) -> Result<ProbeResult> {
    let spec = find_method(method)?;
    let p = find_problem(problem)?;
    local_order_probe_on(spec, &p, t, u, hs, shape_override(problem, method).as_ref())
}

pub fn local_order_probe_on(
    spec: &MethodSpec,
    problem: &OdeProblem,
    t: f64,
    u: &[f64],
    hs: &[f64],
    over: Option<&ShapeOverride>,
) -> Result<ProbeResult> {
    if !problem.has_exact() {
        return Err(Error::Unsupported(format!("{} has no exact solution", problem.name)));
    }
    let mut points = Vec::with_capacity(hs.len());
    for &h in hs {
        let rec = mq_step_with(spec, problem, t, u, h, over)?;
        let exact = problem.exact(t + h).expect("exact solution checked above");
        points.push((h, norm(&sub(&rec.u_next, &exact))));
    }
    let scale = u.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let floor = ROUNDOFF_FLOOR * f64::EPSILON * scale;
    let fit: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, e)| e > floor).collect();
    let slope = if fit.len() >= 2 { fit_slope(&fit) } else { f64::NAN };
    Ok(ProbeResult {
        slope,
        used: fit.len(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power() {
        let pts: Vec<_> = (1..6).map(|k| {
            let h = 0.5f64.powi(k);
            (h, 3.0 * h.powi(4))
        }).collect();
        assert!((fit_slope(&pts) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_ladders() {
        assert!(run_convergence("rk2", "eg1", &[40, 20], Execution::Sequential).is_err());
        assert!(run_convergence("rk2", "eg1", &[], Execution::Sequential).is_err());
        assert!(run_convergence("nosuch", "eg1", &[20], Execution::Sequential).is_err());
    }

    #[test]
    fn first_row_has_no_order() {
        let r = run_convergence("rk2", "eg1", &[20, 40], Execution::Sequential).unwrap();
        assert!(r.rows[0].order.is_none());
        let o = r.rows[1].order.unwrap();
        assert!((o - 2.0).abs() < 0.1, "{o}");
    }
}
