//! Per-step shape parameters `ε_j²` from a partial-derivative table.
//!
//! Every closed form is guarded: a near-zero denominator, a complex root or a
//! degenerate quadratic yields `ε ≡ 0`, which reduces the step to the
//! classical method with the same tableau.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::methods::{MethodSpec, RootChoice, Rk3Variant, Rk4Variant, ShapeFormula};
use crate::problem::{PartialTable, ScalarPartials};

/// Relative denominator guard.
pub const TOL_DENOMINATOR: f64 = 1e-10;
/// Relative tolerance for a vanishing quadratic coefficient.
pub const TOL_QUADRATIC: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeStatus {
    Optimal,
    FallbackZero,
    Override,
    /// Classical method; no shape parameters are computed.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootUsed {
    Plus,
    Minus,
    Linear,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeDiagnostics {
    pub denominator_magnitude: f64,
    pub discriminant: Option<f64>,
    pub root_choice_used: RootUsed,
    /// Components that fell back to zero (systems only).
    pub fallback_components: Vec<usize>,
}

impl Default for ShapeDiagnostics {
    fn default() -> Self {
        Self {
            denominator_magnitude: 0.0,
            discriminant: None,
            root_choice_used: RootUsed::None,
            fallback_components: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeResult {
    /// `eps_sq[j][i]` is `ε_{j+2}²` for component `i`.
    pub eps_sq: Vec<Vec<f64>>,
    pub status: ShapeStatus,
    pub diag: ShapeDiagnostics,
}

impl ShapeResult {
    fn zeros(stages: usize, dim: usize, status: ShapeStatus) -> Self {
        Self {
            eps_sq: vec![vec![0.0; dim]; stages.saturating_sub(1)],
            status,
            diag: ShapeDiagnostics::default(),
        }
    }

    pub fn disabled(stages: usize, dim: usize) -> Self {
        Self::zeros(stages, dim, ShapeStatus::Disabled)
    }

    pub fn fallback(stages: usize, dim: usize, diag: ShapeDiagnostics) -> Self {
        Self {
            diag,
            ..Self::zeros(stages, dim, ShapeStatus::FallbackZero)
        }
    }

    /// Scalar result with `ε_j² = κ_j·ε_2²`.
    fn coupled(eps2: f64, kappa: &[f64], status: ShapeStatus, diag: ShapeDiagnostics) -> Self {
        Self {
            eps_sq: kappa.iter().map(|k| vec![k * eps2]).collect(),
            status,
            diag,
        }
    }

    /// `ε_2²` per component.
    pub fn eps2(&self) -> &[f64] {
        self.eps_sq.first().map(Vec::as_slice).unwrap_or(&[])
    }

    /// `ε_j²` for stage `j` (1-based); stage 1 is never scaled.
    pub fn stage(&self, j: usize) -> Option<&[f64]> {
        if j < 2 {
            None
        } else {
            self.eps_sq.get(j - 2).map(Vec::as_slice)
        }
    }

    /// Largest `|ε_j²|` over all stages and components.
    pub fn max_abs(&self) -> f64 {
        self.eps_sq
            .iter()
            .flatten()
            .fold(0.0, |m, e| m.max(e.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.eps_sq.iter().flatten().all(|&e| e == 0.0)
    }
}

pub type ShapeOverrideFn = Arc<dyn Fn(f64, &[f64], &PartialTable) -> f64 + Send + Sync>;

/// Replaces the closed form with a user-supplied `ε_2²`.
#[derive(Clone)]
pub struct ShapeOverride {
    pub label: String,
    pub eps2: ShapeOverrideFn,
}

impl ShapeOverride {
    pub fn new(label: impl Into<String>, eps2: ShapeOverrideFn) -> Self {
        Self {
            label: label.into(),
            eps2,
        }
    }
}

impl fmt::Debug for ShapeOverride {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShapeOverride").field("label", &self.label).finish()
    }
}

/// Guarded `num/den`.
fn guarded_ratio(num: f64, den: f64) -> Option<f64> {
    if !num.is_finite() || !den.is_finite() || den.abs() <= TOL_DENOMINATOR * (1.0 + num.abs()) {
        None
    } else {
        Some(num / den)
    }
}

fn ratio_result(num: f64, den: f64, kappa: &[f64]) -> ShapeResult {
    let diag = ShapeDiagnostics {
        denominator_magnitude: den.abs(),
        ..Default::default()
    };
    match guarded_ratio(num, den) {
        Some(e) => ShapeResult::coupled(e, kappa, ShapeStatus::Optimal, diag),
        None => ShapeResult::fallback(kappa.len() + 1, 1, diag),
    }
}

fn scalar(table: &PartialTable) -> Result<&ScalarPartials> {
    table.as_scalar().ok_or_else(|| {
        Error::Unsupported("shape formulas beyond the two-stage family need a scalar problem".into())
    })
}

/// Two-stage shape: `ε_2² = u''/u`, componentwise for systems.
pub fn shape_rk2(table: &PartialTable, u: &[f64]) -> ShapeResult {
    let upp = crate::problem::second_derivative(table);
    let mut eps = Vec::with_capacity(u.len());
    let mut fallback = Vec::new();
    let mut den_min = f64::INFINITY;
    for (i, (&n, &d)) in upp.iter().zip(u).enumerate() {
        den_min = den_min.min(d.abs());
        match guarded_ratio(n, d) {
            Some(e) => eps.push(e),
            None => {
                eps.push(0.0);
                fallback.push(i);
            }
        }
    }
    let status = if fallback.len() == u.len() {
        ShapeStatus::FallbackZero
    } else {
        ShapeStatus::Optimal
    };
    ShapeResult {
        eps_sq: vec![eps],
        status,
        diag: ShapeDiagnostics {
            denominator_magnitude: den_min,
            fallback_components: if u.len() > 1 { fallback } else { Vec::new() },
            ..Default::default()
        },
    }
}

fn rk3_kappa3(variant: Rk3Variant) -> f64 {
    let s33 = 33f64.sqrt();
    match variant {
        Rk3Variant::B1 | Rk3Variant::B3a => -1.0,
        Rk3Variant::B2a => (-7.0 - s33) / 4.0,
        Rk3Variant::B2b => (-7.0 + s33) / 4.0,
        Rk3Variant::B3b => -0.2,
        Rk3Variant::B4 => -1.0 / 3.0,
    }
}

/// Numerator and denominator of the three-stage `ε_2²`.
pub fn rk3_fraction(variant: Rk3Variant, p: &ScalarPartials, u: f64) -> (f64, f64) {
    let (f, ft, fu) = (p.f(), p.ft(), p.fu());
    let (ftt, ftu, fuu) = (p.ftt(), p.ftu(), p.fuu());
    let upp = p.second_derivative();
    match variant {
        Rk3Variant::B1 => {
            let n = fuu * f - fu * fu + ftu;
            (n * upp, n * u + fu * f)
        }
        Rk3Variant::B2a | Rk3Variant::B2b => {
            let s33 = 33f64.sqrt();
            let sg = if variant == Rk3Variant::B2a { s33 } else { -s33 };
            let num = 12.0 * fu * fu * upp
                + (3.0 + sg) * (f * f * fuu - ftt) * fu
                + 2.0 * (3.0 + sg) * (fuu * f + ftu) * ft;
            let den = (2.0 * (3.0 + sg) * (f * fuu + ftu) + (15.0 + sg) * fu * fu) * u
                + 2.0 * (3.0 + sg) * fu * f;
            (num, den)
        }
        Rk3Variant::B3a => {
            let num = fu * fu * upp - (ftu * f + ftt) * fu + (fuu * f + ftu) * ft;
            let den = (fuu * f + ftu + 2.0 * fu * fu) * u + fu * f;
            (num, den)
        }
        Rk3Variant::B3b => {
            let num = 3.0 * fu * fu * upp + (ftu * f + ftt) * fu - (fuu * f + ftu) * ft;
            let den = (-fuu * f - ftu + 2.0 * fu * fu) * u - fu * f;
            (num, den)
        }
        Rk3Variant::B4 => {
            let num = 12.0 * fu * fu * upp
                + p.fttt()
                + p.fuuu() * f.powi(3)
                + 3.0 * (p.fttu() + p.ftuu() * f) * f;
            let den = 3.0 * (-fuu * f - ftu + 4.0 * fu * fu) * u - 3.0 * fu * f;
            (num, den)
        }
    }
}

/// Three-stage shape `(ε_2², ε_3²)`.
pub fn shape_rk3(variant: Rk3Variant, table: &PartialTable, u: f64) -> Result<ShapeResult> {
    let p = scalar(table)?;
    let (num, den) = rk3_fraction(variant, p, u);
    Ok(ratio_result(num, den, &[1.0, rk3_kappa3(variant)]))
}

fn rk4_kappa(variant: Rk4Variant) -> [f64; 3] {
    match variant {
        Rk4Variant::C1 => [1.0, -2.0 / 3.0, 2.0 / 11.0],
        Rk4Variant::C2 => [1.0, -1.0 / 6.0, 0.1],
    }
}

/// Coefficients `(α, β, γ)` of the four-stage shape quadratic.
pub fn rk4_coefficients(variant: Rk4Variant, p: &ScalarPartials, u: f64) -> (f64, f64, f64) {
    let (f, ft, fu) = (p.f(), p.ft(), p.fu());
    let (ftt, ftu, fuu) = (p.ftt(), p.ftu(), p.fuu());
    let (fttt, fttu, ftuu, fuuu) = (p.fttt(), p.fttu(), p.ftuu(), p.fuuu());
    let (ftttt, ftttu, fttuu, ftuuu, fuuuu) = (p.ftttt(), p.ftttu(), p.fttuu(), p.ftuuu(), p.fuuuu());
    let upp = p.second_derivative();
    let (f2, f3, f4) = (f * f, f * f * f, f * f * f * f);
    let fu2 = fu * fu;
    let fu3 = fu2 * fu;
    match variant {
        Rk4Variant::C1 => {
            let alpha = 168.0 * fuu * u * u;
            let beta = (66.0 * fttu + 66.0 * fuuu * f2 + 132.0 * ftuu * f
                - 462.0 * ftu * fu
                - 270.0 * fuu * ft
                - 732.0 * fuu * fu * f
                + 330.0 * fu3)
                * u
                + 132.0 * f2 * fuu
                - 402.0 * fu2 * f
                + 132.0 * ftu * f
                - 270.0 * ft * fu;
            let gamma = 11.0
                * (ftttt + fuuuu * f4 + 4.0 * ftttu * f + 4.0 * ftuuu * f3 + 6.0 * fttuu * f2)
                - 44.0 * (fttt * fu + 3.0 * fttu * fu * f + 3.0 * fu * ftuu * f2 + fu * fuuu * f3)
                + 330.0 * ft * ftu * fu
                + 330.0 * ftu * fu2 * f
                + 135.0 * ft * ft * fuu
                + 600.0 * ft * fu * fuu * f
                + 465.0 * fu2 * fuu * f2
                - 330.0 * fu3 * upp;
            (alpha, beta, gamma)
        }
        Rk4Variant::C2 => {
            let alpha = 3.0 * fuu * u * u;
            let beta = 6.0
                * (fttu + f2 * fuuu + 2.0 * ftuu * f - 7.0 * ftu * fu - 7.0 * fuu * fu * f
                    + 5.0 * fu3)
                * u
                + 12.0 * (fuu * f2 - fu2 * f + ftu * f);
            let gamma = ftttt + 4.0 * ftttu * f + 6.0 * fttuu * f2 + 4.0 * ftuuu * f3 + fuuuu * f4
                - 4.0 * (fttt + 3.0 * fttu * f + 3.0 * ftuu * f2 + fuuu * f3) * fu
                + 18.0 * ftt * ftu
                + 18.0 * ftt * fuu * f
                + 18.0 * fuu * fuu * f3
                + 36.0 * ftu * ftu * f
                + 54.0 * ftu * fuu * f2
                + 30.0 * fuu * fu2 * f2
                + 48.0 * fuu * ft * fu * f
                + 48.0 * ftu * ft * fu
                + 12.0 * ftu * fu2 * f
                - 18.0 * ftt * fu2
                - 48.0 * fu3 * upp;
            (alpha, beta, gamma)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticRoot {
    /// `None` when no real root is usable.
    pub root: Option<f64>,
    pub used: RootUsed,
    pub discriminant: Option<f64>,
}

/// Real root of `αx² + βx + γ = 0`; `Plus` picks the larger root.
pub fn solve_shape_quadratic(alpha: f64, beta: f64, gamma: f64, choice: RootChoice) -> QuadraticRoot {
    let none = QuadraticRoot {
        root: None,
        used: RootUsed::None,
        discriminant: None,
    };
    if ![alpha, beta, gamma].iter().all(|x| x.is_finite()) {
        return none;
    }
    let tol = TOL_QUADRATIC * alpha.abs().max(beta.abs()).max(gamma.abs()).max(1.0);
    if alpha.abs() > tol {
        let disc = beta * beta - 4.0 * alpha * gamma;
        if disc < 0.0 {
            return QuadraticRoot {
                discriminant: Some(disc),
                ..none
            };
        }
        // cancellation-free pair of roots
        let q = -0.5 * (beta + beta.signum() * disc.sqrt());
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / alpha, gamma / q) };
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        let (root, used) = match choice {
            RootChoice::Minus => (lo, RootUsed::Minus),
            _ => (hi, RootUsed::Plus),
        };
        QuadraticRoot {
            root: Some(root),
            used,
            discriminant: Some(disc),
        }
    } else if beta.abs() > tol {
        QuadraticRoot {
            root: Some(-gamma / beta),
            used: RootUsed::Linear,
            discriminant: None,
        }
    } else {
        none
    }
}

/// Four-stage shape `(ε_2², ε_3², ε_4²)`.
pub fn shape_rk4(
    variant: Rk4Variant,
    choice: RootChoice,
    table: &PartialTable,
    u: f64,
) -> Result<ShapeResult> {
    let p = scalar(table)?;
    let (alpha, beta, gamma) = rk4_coefficients(variant, p, u);
    let q = solve_shape_quadratic(alpha, beta, gamma, choice);
    let diag = ShapeDiagnostics {
        denominator_magnitude: if q.used == RootUsed::Linear { beta.abs() } else { alpha.abs() },
        discriminant: q.discriminant,
        root_choice_used: q.used,
        fallback_components: Vec::new(),
    };
    Ok(match q.root {
        Some(e) if e.is_finite() => {
            ShapeResult::coupled(e, &rk4_kappa(variant), ShapeStatus::Optimal, diag)
        }
        _ => ShapeResult::fallback(4, 1, diag),
    })
}

/// Shape parameters for `spec` at `(t, u)`, honoring an installed override.
pub fn shape_for(
    spec: &MethodSpec,
    table: &PartialTable,
    t: f64,
    u: &[f64],
    over: Option<&ShapeOverride>,
) -> Result<ShapeResult> {
    if spec.classical || spec.formula == ShapeFormula::None {
        return Ok(ShapeResult::disabled(spec.stages, u.len()));
    }
    if let Some(o) = over {
        let e = (o.eps2)(t, u, table);
        let kappa: Vec<f64> = if spec.kappa.len() == spec.stages - 1 {
            spec.kappa.clone()
        } else {
            vec![1.0; spec.stages - 1]
        };
        return Ok(override_result(e, &kappa, u.len()));
    }
    let scalar_u = || -> Result<f64> {
        if u.len() == 1 {
            Ok(u[0])
        } else {
            Err(Error::Unsupported(format!(
                "method `{}` supports scalar problems only",
                spec.id
            )))
        }
    };
    match spec.formula {
        ShapeFormula::Rk2 => Ok(shape_rk2(table, u)),
        ShapeFormula::Rk3(v) => shape_rk3(v, table, scalar_u()?),
        ShapeFormula::Rk4(v) => shape_rk4(v, spec.root_choice, table, scalar_u()?),
        ShapeFormula::None => unreachable!(),
    }
}

fn override_result(e: f64, kappa: &[f64], dim: usize) -> ShapeResult {
    ShapeResult {
        eps_sq: kappa.iter().map(|k| vec![k * e; dim]).collect(),
        status: ShapeStatus::Override,
        diag: ShapeDiagnostics::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::LEN;

    /// Table for `f = λu` at `u`.
    fn linear(lambda: f64, u: f64) -> PartialTable {
        let mut d = [0.0; LEN];
        d[0] = lambda * u;
        d[2] = lambda;
        PartialTable::Scalar(ScalarPartials { d })
    }

    /// Table for `f = -u²` at `u`.
    fn neg_square(u: f64) -> PartialTable {
        let mut d = [0.0; LEN];
        d[0] = -u * u;
        d[2] = -2.0 * u;
        d[5] = -2.0;
        PartialTable::Scalar(ScalarPartials { d })
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    fn eps(r: &ShapeResult) -> Vec<f64> {
        r.eps_sq.iter().map(|v| v[0]).collect()
    }

    #[test]
    fn rk2_examples() {
        let r = shape_rk2(&neg_square(1.0), &[1.0]);
        assert_eq!(r.status, ShapeStatus::Optimal);
        assert!(close(r.eps2()[0], 2.0));
        let zero = PartialTable::Scalar(ScalarPartials { d: [0.0; LEN] });
        let r = shape_rk2(&zero, &[1.0]);
        assert_eq!((r.status, r.eps2()[0]), (ShapeStatus::Optimal, 0.0));
        let r = shape_rk2(&linear(2.0, 0.0), &[0.0]);
        assert_eq!(r.status, ShapeStatus::FallbackZero);
    }

    #[test]
    fn rk3_linear_ratios() {
        let s33 = 33f64.sqrt();
        let r = shape_rk3(Rk3Variant::B4, &linear(3.0, 1.0), 1.0).unwrap();
        assert!(close(eps(&r)[0], 12.0) && close(eps(&r)[1], -4.0));
        let r = shape_rk3(Rk3Variant::B2a, &linear(1.0, 1.0), 1.0).unwrap();
        assert!(close(eps(&r)[0], (7.0 - s33) / 4.0) && close(eps(&r)[1], -1.0));
        let r = shape_rk3(Rk3Variant::B2b, &linear(1.0, 1.0), 1.0).unwrap();
        assert!(close(eps(&r)[0], (7.0 + s33) / 4.0) && close(eps(&r)[1], -1.0));
        let r = shape_rk3(Rk3Variant::B3b, &linear(2.0, 1.0), 1.0).unwrap();
        assert!(close(eps(&r)[0], 12.0) && close(eps(&r)[1], -2.4));
        let r = shape_rk3(Rk3Variant::B3a, &linear(3.0, 1.0), 1.0).unwrap();
        assert!(close(eps(&r)[0], 3.0) && close(eps(&r)[1], -3.0));
        let r = shape_rk3(Rk3Variant::B1, &linear(1.0, 1.0), 1.0).unwrap();
        assert_eq!(r.status, ShapeStatus::FallbackZero);
        assert!(r.is_zero());
    }

    #[test]
    fn rk3_neg_square_values() {
        let s33 = 33f64.sqrt();
        let u = 0.7;
        let cases = [
            (Rk3Variant::B2a, 13.0 / 4.0 - 5.0 * s33 / 12.0),
            (Rk3Variant::B2b, 13.0 / 4.0 + 5.0 * s33 / 12.0),
            (Rk3Variant::B3a, 2.0 / 3.0),
            (Rk3Variant::B3b, 6.0),
            (Rk3Variant::B4, 8.0 / 3.0),
        ];
        for (v, k) in cases {
            let r = shape_rk3(v, &neg_square(u), u).unwrap();
            assert!(close(r.eps2()[0], k * u * u), "{v:?}: {}", r.eps2()[0]);
        }
        let r = shape_rk3(Rk3Variant::B1, &neg_square(u), u).unwrap();
        assert_eq!(r.status, ShapeStatus::FallbackZero);
    }

    #[test]
    fn rk4_linear_ratios() {
        let t = linear(1.0, 1.0);
        let p = t.as_scalar().unwrap();
        assert_eq!(rk4_coefficients(Rk4Variant::C1, p, 1.0), (0.0, -72.0, -330.0));
        let r = shape_rk4(Rk4Variant::C1, RootChoice::Plus, &t, 1.0).unwrap();
        assert_eq!(r.diag.root_choice_used, RootUsed::Linear);
        let e = eps(&r);
        assert!(close(e[0], -55.0 / 12.0) && close(e[1], 55.0 / 18.0) && close(e[2], -5.0 / 6.0));
        let r = shape_rk4(Rk4Variant::C2, RootChoice::Minus, &t, 1.0).unwrap();
        let e = eps(&r);
        assert!(close(e[0], 8.0 / 3.0) && close(e[1], -4.0 / 9.0) && close(e[2], 4.0 / 15.0));
    }

    #[test]
    fn rk4_neg_square_roots() {
        let u = 1.3;
        let u2 = u * u;
        let c2 = 23f64.sqrt();
        let c1 = 2066f64.sqrt();
        let cases = [
            (Rk4Variant::C2, RootChoice::Plus, -4.0 + 2.0 * c2),
            (Rk4Variant::C2, RootChoice::Minus, -4.0 - 2.0 * c2),
            (Rk4Variant::C1, RootChoice::Plus, (34.0 + c1) / 14.0),
            (Rk4Variant::C1, RootChoice::Minus, (34.0 - c1) / 14.0),
        ];
        for (v, c, k) in cases {
            let r = shape_rk4(v, c, &neg_square(u), u).unwrap();
            assert_eq!(r.status, ShapeStatus::Optimal);
            assert!(close(r.eps2()[0], k * u2), "{v:?} {c:?}: {}", r.eps2()[0]);
        }
    }

    #[test]
    fn quadratic_examples() {
        assert_eq!(solve_shape_quadratic(1.0, 0.0, -4.0, RootChoice::Plus).root, Some(2.0));
        assert_eq!(solve_shape_quadratic(1.0, 0.0, -4.0, RootChoice::Minus).root, Some(-2.0));
        let q = solve_shape_quadratic(1.0, 0.0, 1.0, RootChoice::Plus);
        assert_eq!(q.root, None);
        assert_eq!(q.discriminant, Some(-4.0));
        let q = solve_shape_quadratic(0.0, -72.0, -330.0, RootChoice::Plus);
        assert!(close(q.root.unwrap(), -55.0 / 12.0));
        assert_eq!(q.used, RootUsed::Linear);
        assert_eq!(solve_shape_quadratic(0.0, 0.0, 5.0, RootChoice::Plus).root, None);
        // negative leading coefficient keeps plus as the larger root
        assert_eq!(solve_shape_quadratic(-1.0, 0.0, 4.0, RootChoice::Plus).root, Some(2.0));
        assert_eq!(solve_shape_quadratic(1.0, 0.0, 0.0, RootChoice::Plus).root, Some(0.0));
    }

    #[test]
    fn system_components_are_guarded_independently() {
        use crate::problem::SystemPartials;
        let t = PartialTable::System(SystemPartials {
            f: vec![-4.0, -3.0],
            ft: vec![1.0, 0.0],
            jacobian: vec![vec![-5.0, 3.0], vec![-3.0, 1.0]],
        });
        let r = shape_rk2(&t, &[1.0, 0.0]);
        assert_eq!(r.status, ShapeStatus::Optimal);
        assert_eq!(r.eps2(), &[12.0, 0.0]);
        assert_eq!(r.diag.fallback_components, vec![1]);
    }

    #[test]
    fn override_couples_and_marks() {
        let spec = crate::find_method("mq-rk3-b1").unwrap();
        let o = ShapeOverride::new("450u^2", Arc::new(|_, u: &[f64], _| 450.0 * u[0] * u[0]));
        let r = shape_for(spec, &neg_square(1.0), 0.0, &[1.0], Some(&o)).unwrap();
        assert_eq!(r.status, ShapeStatus::Override);
        assert_eq!(eps(&r), vec![450.0, -450.0]);
    }

    #[test]
    fn dispatch_rejects_systems_beyond_two_stages() {
        use crate::problem::SystemPartials;
        let t = PartialTable::System(SystemPartials {
            f: vec![0.0; 2],
            ft: vec![0.0; 2],
            jacobian: vec![vec![0.0; 2]; 2],
        });
        let spec = crate::find_method("mq-rk3-b4").unwrap();
        assert!(matches!(
            shape_for(spec, &t, 0.0, &[1.0, 1.0], None),
            Err(Error::Unsupported(_))
        ));
        let classical = crate::find_method("rk3-b4").unwrap();
        let r = shape_for(classical, &t, 0.0, &[1.0, 1.0], None).unwrap();
        assert_eq!(r.status, ShapeStatus::Disabled);
    }
}
