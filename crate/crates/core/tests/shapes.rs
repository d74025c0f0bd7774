use std::sync::Arc;

use mqrk::harness::{find_problem, local_order_probe_on};
use mqrk::jet::Scalar;
use mqrk::methods::{find_method, RootChoice, Rk3Variant, Rk4Variant};
use mqrk::problem::{OdeProblem, ScalarRhs};
use mqrk::shape::{shape_rk2, shape_rk3, shape_rk4, solve_shape_quadratic, RootUsed, ShapeOverride, ShapeStatus};
use mqrk::stepper::integrate;
use mqrk::{DomainError, Error};

struct Linear(f64);

impl ScalarRhs for Linear {
    fn eval<S: Scalar>(&self, _t: S, u: S) -> Result<S, DomainError> {
        Ok(u * self.0)
    }
}

struct Zero;

impl ScalarRhs for Zero {
    fn eval<S: Scalar>(&self, _t: S, u: S) -> Result<S, DomainError> {
        Ok(u * 0.0)
    }
}

/// `u' = sqrt(1 - u)`, undefined past `u = 1`.
struct SqrtGap;

impl ScalarRhs for SqrtGap {
    fn eval<S: Scalar>(&self, _t: S, u: S) -> Result<S, DomainError> {
        (-u + 1.0).sqrt_checked("sqrt(1 - u)")
    }
}

fn linear(lambda: f64) -> OdeProblem {
    OdeProblem::scalar("lin", 0.0, 1.0, 1.0, Linear(lambda))
        .with_exact(Arc::new(move |t| vec![(lambda * t).exp()]))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

#[test]
fn two_stage_examples() {
    let eg1 = find_problem("eg1").unwrap();
    let r = shape_rk2(&eg1.partials_at(0.0, &[1.0]).unwrap(), &[1.0]);
    assert!(close(r.eps2()[0], 2.0) && r.status == ShapeStatus::Optimal);

    let eg2 = find_problem("eg2").unwrap();
    let r = shape_rk2(&eg2.partials_at(1.0, &[0.5]).unwrap(), &[0.5]);
    assert!(close(r.eps2()[0], 2.0));

    let eg4 = find_problem("eg4").unwrap();
    let r = shape_rk2(&eg4.partials_at(0.0, &[1.0, 0.0]).unwrap(), &[1.0, 0.0]);
    assert!(close(r.eps2()[0], 12.0) && r.eps2()[1] == 0.0);
    assert_eq!(r.diag.fallback_components, vec![1]);

    let z = OdeProblem::scalar("zero", 0.0, 1.0, 1.0, Zero);
    let r = shape_rk2(&z.partials_at(0.0, &[1.0]).unwrap(), &[1.0]);
    assert_eq!((r.eps2()[0], r.status), (0.0, ShapeStatus::Optimal));
}

#[test]
fn three_stage_linear_ratios() {
    let at = |lambda: f64, v: Rk3Variant| {
        let p = linear(lambda);
        shape_rk3(v, &p.partials_at(0.0, &[1.0]).unwrap(), 1.0).unwrap()
    };
    let r = at(3.0, Rk3Variant::B4);
    assert!(close(r.eps_sq[0][0], 12.0) && close(r.eps_sq[1][0], -4.0));
    let r = at(1.0, Rk3Variant::B2a);
    assert!(close(r.eps_sq[0][0], (7.0 - 33f64.sqrt()) / 4.0) && close(r.eps_sq[1][0], -1.0));
    let r = at(2.0, Rk3Variant::B3b);
    assert!(close(r.eps_sq[0][0], 12.0) && close(r.eps_sq[1][0], -12.0 / 5.0));
    let r = at(-1.5, Rk3Variant::B1);
    assert_eq!(r.status, ShapeStatus::FallbackZero);
    assert!(r.is_zero());
    let r = at(2.0, Rk3Variant::B3a);
    assert!(close(r.eps_sq[0][0], 4.0 / 3.0));
}

#[test]
fn four_stage_examples() {
    let p = linear(1.0);
    let table = p.partials_at(0.0, &[1.0]).unwrap();
    let r = shape_rk4(Rk4Variant::C1, RootChoice::Plus, &table, 1.0).unwrap();
    let want = [-55.0 / 12.0, 55.0 / 18.0, -5.0 / 6.0];
    assert!(r.eps_sq.iter().zip(want).all(|(e, w)| close(e[0], w)));
    assert_eq!(r.diag.root_choice_used, RootUsed::Linear);
    let r = shape_rk4(Rk4Variant::C2, RootChoice::Plus, &table, 1.0).unwrap();
    let want = [8.0 / 3.0, -4.0 / 9.0, 4.0 / 15.0];
    assert!(r.eps_sq.iter().zip(want).all(|(e, w)| close(e[0], w)));

    let eg1 = find_problem("eg1").unwrap();
    let table = eg1.partials_at(0.0, &[1.0]).unwrap();
    let r = shape_rk4(Rk4Variant::C2, RootChoice::Plus, &table, 1.0).unwrap();
    assert!(close(r.eps2()[0], -4.0 + 2.0 * 23f64.sqrt()));
}

#[test]
fn quadratic_examples() {
    assert_eq!(solve_shape_quadratic(1.0, 0.0, -4.0, RootChoice::Plus).root, Some(2.0));
    assert_eq!(solve_shape_quadratic(1.0, 0.0, -4.0, RootChoice::Minus).root, Some(-2.0));
    let q = solve_shape_quadratic(1.0, 0.0, 1.0, RootChoice::Plus);
    assert_eq!((q.root, q.discriminant), (None, Some(-4.0)));
    let q = solve_shape_quadratic(0.0, -72.0, -330.0, RootChoice::Plus);
    assert!(close(q.root.unwrap(), -55.0 / 12.0) && q.used == RootUsed::Linear);
    assert_eq!(solve_shape_quadratic(0.0, 0.0, 1.0, RootChoice::Plus).root, None);
}

#[test]
fn b3a_linear_shape_resolved_by_probe() {
    // two candidate readings of ε₂² on u' = λu: λ²/3 from the closed form, λ² from the table
    let lambda = -1.0;
    let p = linear(lambda);
    let spec = find_method("mq-rk3-b3a").unwrap();
    let hs: Vec<f64> = (4..=10).map(|k| 2f64.powi(-k)).collect();
    let slope = |e: f64| {
        let over = ShapeOverride::new("probe", Arc::new(move |_, _: &[f64], _| e * lambda * lambda));
        local_order_probe_on(spec, &p, 0.0, &[1.0], &hs, Some(&over)).unwrap().slope
    };
    let (third, one) = (slope(1.0 / 3.0), slope(1.0));
    assert!(third >= 4.85, "λ²/3 slope {third}");
    assert!((one - 4.0).abs() < 0.15, "λ² slope {one}");
    let closed = local_order_probe_on(spec, &p, 0.0, &[1.0], &hs, None).unwrap().slope;
    assert!((closed - third).abs() < 1e-9);
}

#[test]
fn stage_domain_error_names_the_stage() {
    // K1 = sqrt(0.1) is fine; the second stage argument 0.9 + (2/3)·h·K1 passes 1
    let p = OdeProblem::scalar("gap", 0.0, 0.9, 2.0, SqrtGap);
    let aborted = integrate(find_method("rk2").unwrap(), &p, 2).unwrap_err();
    match &aborted.error {
        Error::Stage { step, stage, source } => {
            assert_eq!((*step, *stage), (1, 2));
            assert_eq!(source.tag, "sqrt(1 - u)");
        }
        other => panic!("unexpected error {other}"),
    }
    assert_eq!(aborted.partial.steps_taken, 0);
}

#[test]
fn singular_start_on_rational_problem() {
    let p = find_problem("eg3").unwrap().with_initial(1.0, vec![1.0]);
    assert!(!p.has_exact());
    let aborted = integrate(find_method("mq-rk2").unwrap(), &p, 4).unwrap_err();
    assert!(matches!(aborted.error, Error::Stage { step: 1, stage: 1, .. }));
    let text = aborted.error.to_string();
    assert!(text.contains("stage 1 of step 1") && text.contains("t^2 u - t"), "{text}");
}

#[test]
fn trajectory_csv_for_a_system() {
    let tr = integrate(find_method("mq-rk2").unwrap(), &find_problem("eg4").unwrap(), 4).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf, 2).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i,t,u_1,u_2,eps2_sq,status");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].ends_with(",,initial"));
    let first: Vec<&str> = lines[2].split(',').collect();
    // component 2 starts at 0 and is guarded on the first step
    assert_eq!(first[4].split(';').count(), 2);
    assert!(lines[5].starts_with("4,5e0,"));
}
