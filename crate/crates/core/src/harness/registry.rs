//! The built-in test problems.
//!
//! | id  | right-hand side                         | interval   |
//! |-----|-----------------------------------------|------------|
//! | eg1 | `-u²`                                   | `[0, 1]`   |
//! | eg2 | `-4t³u²`                                | `[-10, 0]` |
//! | eg3 | `(2t² - u)/(t²u - t)`                   | `[1, 2]`   |
//! | eg4 | `(eᵗ, 0) - A u`, `A = [[5,-3],[3,-1]]`  | `[0, 5]`   |
//! | eg5 | Duffing oscillator as a first-order system | `[0, 20]` |

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::elliptic::sn_cn_dn;
use crate::error::{DomainError, Error, Result};
use crate::jet::Scalar;
use crate::methods::find_method;
use crate::problem::{
    DerivativeProvider, ExactFn, ExactPartials, OdeProblem, ScalarPartialFn, ScalarRhs,
};
use crate::shape::ShapeOverride;
use crate::stepper::{integrate_with, IntegrateOptions};

pub const PROBLEM_IDS: [&str; 5] = ["eg1", "eg2", "eg3", "eg4", "eg5"];

/// Duffing stiffness `k`.
pub const DUFFING_K: f64 = 0.03;
/// Duffing frequency `ω`.
pub const DUFFING_OMEGA: f64 = 10.0;

struct NegSquare;

impl ScalarRhs for NegSquare {
    fn eval<S: Scalar>(&self, _t: S, u: S) -> Result<S, DomainError> {
        Ok(-(u * u))
    }
}

struct CubicTimeSquare;

impl ScalarRhs for CubicTimeSquare {
    fn eval<S: Scalar>(&self, t: S, u: S) -> Result<S, DomainError> {
        Ok(t * t * t * u * u * -4.0)
    }
}

struct Rational;

impl ScalarRhs for Rational {
    fn eval<S: Scalar>(&self, t: S, u: S) -> Result<S, DomainError> {
        (t * t * 2.0 - u).div_checked(t * t * u - t, "t^2 u - t")
    }
}

/// Exact partials of `coef·t^p·u^q` up to total order four.
fn monomial_partials(coef: f64, p: i32, q: i32) -> ExactPartials {
    fn falling(n: i32, k: usize) -> f64 {
        (0..k as i32).map(|i| (n - i) as f64).product()
    }
    let mut map: BTreeMap<(usize, usize), ScalarPartialFn> = BTreeMap::new();
    for &(a, b) in crate::jet::ORDERS.iter() {
        let scale = coef * falling(p, a) * falling(q, b);
        let (pa, qb) = (p - a as i32, q - b as i32);
        let f: ScalarPartialFn = if scale == 0.0 {
            Arc::new(|_, _| Ok(0.0))
        } else {
            Arc::new(move |t: f64, u: f64| Ok(scale * t.powi(pa) * u.powi(qb)))
        };
        map.insert((a, b), f);
    }
    ExactPartials::Scalar(map)
}

fn eg1() -> OdeProblem {
    OdeProblem::scalar("eg1", 0.0, 1.0, 1.0, NegSquare)
        .with_partials(DerivativeProvider::Exact(monomial_partials(-1.0, 0, 2)))
        .with_exact(Arc::new(|t| vec![1.0 / (t + 1.0)]))
}

fn eg2() -> OdeProblem {
    OdeProblem::scalar("eg2", -10.0, 1.0 / 10001.0, 0.0, CubicTimeSquare)
        .with_partials(DerivativeProvider::Exact(monomial_partials(-4.0, 3, 2)))
        .with_exact(Arc::new(|t| vec![1.0 / (t.powi(4) + 1.0)]))
}

fn eg3() -> OdeProblem {
    OdeProblem::scalar("eg3", 1.0, 2.0, 2.0, Rational)
        .with_exact(Arc::new(|t| vec![1.0 / t + (1.0 / (t * t) + 4.0 * t - 4.0).sqrt()]))
}

fn eg4() -> OdeProblem {
    let rhs = Arc::new(|t: f64, u: &[f64]| {
        Ok(vec![t.exp() - 5.0 * u[0] + 3.0 * u[1], -3.0 * u[0] + u[1]])
    });
    OdeProblem::system("eg4", 0.0, vec![1.0, 0.0], 5.0, rhs)
        .with_partials(DerivativeProvider::Exact(ExactPartials::System {
            time: Some(Arc::new(|t: f64, _: &[f64]| Ok(vec![t.exp(), 0.0]))),
            jacobian: Some(Arc::new(|_, _: &[f64]| {
                Ok(vec![vec![-5.0, 3.0], vec![-3.0, 1.0]])
            })),
        }))
        .with_exact(Arc::new(|t| {
            let d = (-2.0 * t).exp();
            vec![(1.0 - 2.0 * t) * d, (1.0 / 3.0 - 2.0 * t) * d - t.exp() / 3.0]
        }))
}

/// `(p, q)` of the Duffing solution `q = sn(ωt | (k/ω)²)`, `p = q'`.
pub fn duffing_exact(t: f64) -> Vec<f64> {
    let m = (DUFFING_K / DUFFING_OMEGA).powi(2);
    let (s, c, d) = sn_cn_dn(DUFFING_OMEGA * t, m);
    vec![DUFFING_OMEGA * c * d, s]
}

fn eg5() -> OdeProblem {
    let (k, w) = (DUFFING_K, DUFFING_OMEGA);
    let rhs = Arc::new(move |_t: f64, u: &[f64]| {
        let (p, q) = (u[0], u[1]);
        Ok(vec![-w * w * q + k * k * (2.0 * q.powi(3) - q), p])
    });
    OdeProblem::system("eg5", 0.0, vec![w, 0.0], 20.0, rhs)
        .with_partials(DerivativeProvider::Exact(ExactPartials::System {
            time: Some(Arc::new(|_, _: &[f64]| Ok(vec![0.0, 0.0]))),
            jacobian: Some(Arc::new(move |_, u: &[f64]| {
                Ok(vec![
                    vec![0.0, -w * w + k * k * (6.0 * u[1] * u[1] - 1.0)],
                    vec![1.0, 0.0],
                ])
            })),
        }))
        .with_exact(Arc::new(duffing_exact))
}

pub fn registry() -> Vec<OdeProblem> {
    vec![eg1(), eg2(), eg3(), eg4(), eg5()]
}

pub fn find_problem(id: &str) -> Result<OdeProblem> {
    match id {
        "eg1" => Ok(eg1()),
        "eg2" => Ok(eg2()),
        "eg3" => Ok(eg3()),
        "eg4" => Ok(eg4()),
        "eg5" => Ok(eg5()),
        _ => Err(Error::UnknownProblem {
            id: id.to_string(),
            valid: PROBLEM_IDS.join(", "),
        }),
    }
}

/// Step counts used by default for a convergence study.
pub fn default_steps(id: &str) -> Vec<usize> {
    let (first, count) = match id {
        "eg2" => (200, 6),
        "eg5" => (640, 5),
        _ => (20, 5),
    };
    (0..count).map(|i| first << i).collect()
}

/// Registered shape overrides. The first three-stage variant degenerates
/// on `-u²`, so its shape is fixed at `ε_2² = 450u²`.
pub fn shape_override(problem: &str, method: &str) -> Option<ShapeOverride> {
    match (problem, method) {
        ("eg1", "mq-rk3-b1") => Some(ShapeOverride::new(
            "450u^2",
            Arc::new(|_, u: &[f64], _| 450.0 * u[0] * u[0]),
        )),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    ClosedForm,
    JacobiSn,
    FineIntegration,
}

#[derive(Clone)]
pub struct ReferenceSolution {
    pub kind: ReferenceKind,
    pub eval: ExactFn,
}

impl fmt::Debug for ReferenceSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceSolution").field("kind", &self.kind).finish()
    }
}

impl ReferenceSolution {
    pub fn at(&self, t: f64) -> Vec<f64> {
        (self.eval)(t)
    }
}

pub fn reference(id: &str) -> Result<ReferenceSolution> {
    let p = find_problem(id)?;
    let kind = if id == "eg5" {
        ReferenceKind::JacobiSn
    } else {
        ReferenceKind::ClosedForm
    };
    let eval = p
        .exact_fn()
        .ok_or_else(|| Error::Unsupported(format!("{id} has no closed-form solution")))?;
    Ok(ReferenceSolution { kind, eval })
}

/// Reference by integrating `problem` with the classical four-stage method
/// `rk4-c2` at a step no larger than `h_max`.
pub fn fine_integration(problem: &OdeProblem, h_max: f64) -> Result<ReferenceSolution> {
    let spec = find_method("rk4-c2")?.clone();
    let base = problem.clone();
    let eval: ExactFn = Arc::new(move |t: f64| {
        let span = t - base.t0;
        if span <= 0.0 {
            return base.u0.clone();
        }
        let n = (span / h_max).ceil().max(1.0) as usize;
        let mut p = base.clone();
        p.t_end = t;
        let opts = IntegrateOptions {
            final_only: true,
            ..Default::default()
        };
        match integrate_with(&spec, &p, n, &opts) {
            Ok(tr) => tr.final_u,
            Err(_) => vec![f64::NAN; base.dim],
        }
    });
    Ok(ReferenceSolution {
        kind: ReferenceKind::FineIntegration,
        eval,
    })
}
