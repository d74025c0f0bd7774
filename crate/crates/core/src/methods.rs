//! Catalog of explicit Runge-Kutta parameter sets.
//!
//! Each multiquadric (MQ) variant shares its tableau with a classical
//! counterpart; the two differ only in whether stage arguments receive the
//! shape-parameter scaling. Stage `j` uses `ε_j² = κ_j·ε_2²`, with `κ_2 = 1`.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tableau {
    Ralston,
    B1,
    B2a,
    B2b,
    B3a,
    B3b,
    B4,
    C1,
    C2,
    /// User-assembled parameters without variant-specific conditions.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rk3Variant {
    B1,
    B2a,
    B2b,
    B3a,
    B3b,
    B4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rk4Variant {
    C1,
    C2,
}

/// Closed form used to compute `ε_2²` each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeFormula {
    None,
    Rk2,
    Rk3(Rk3Variant),
    Rk4(Rk4Variant),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootChoice {
    /// Algebraically larger root of the shape quadratic.
    Plus,
    /// Algebraically smaller root.
    Minus,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSpec {
    pub id: &'static str,
    pub stages: usize,
    /// Nodes `c_1..c_s` (`c_1 = 0`).
    pub c: Vec<f64>,
    /// Strictly lower-triangular couplings; row `j` has `j` entries.
    pub a: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    /// Shape ratios `κ_2..κ_s` (`κ_2 = 1`).
    pub kappa: Vec<f64>,
    pub tableau: Tableau,
    pub formula: ShapeFormula,
    pub root_choice: RootChoice,
    /// Forces every `ε` to zero.
    pub classical: bool,
    pub formal_order: usize,
}

impl MethodSpec {
    /// Id of the classical method with the same tableau.
    pub fn classical_counterpart(&self) -> Option<&'static MethodSpec> {
        catalog()
            .iter()
            .find(|m| m.classical && m.tableau == self.tableau && m.stages == self.stages)
    }

    /// A copy with shape scaling disabled.
    pub fn as_classical(&self) -> MethodSpec {
        MethodSpec {
            classical: true,
            formula: ShapeFormula::None,
            root_choice: RootChoice::None,
            formal_order: self.stages,
            ..self.clone()
        }
    }
}

fn spec(
    id: &'static str,
    tableau: Tableau,
    c: &[f64],
    a: &[&[f64]],
    w: &[f64],
    kappa: &[f64],
    formula: ShapeFormula,
    root_choice: RootChoice,
) -> MethodSpec {
    let stages = w.len();
    let classical = formula == ShapeFormula::None;
    MethodSpec {
        id,
        stages,
        c: c.to_vec(),
        a: a.iter().map(|r| r.to_vec()).collect(),
        w: w.to_vec(),
        kappa: kappa.to_vec(),
        tableau,
        formula,
        root_choice,
        classical,
        formal_order: if classical { stages } else { stages + 1 },
    }
}

struct Params {
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    w: Vec<f64>,
    kappa: Vec<f64>,
}

fn params(t: Tableau) -> Params {
    let s33 = 33f64.sqrt();
    let p = |c: &[f64], a: &[&[f64]], w: &[f64], kappa: &[f64]| Params {
        c: c.to_vec(),
        a: a.iter().map(|r| r.to_vec()).collect(),
        w: w.to_vec(),
        kappa: kappa.to_vec(),
    };
    match t {
        Tableau::Ralston => p(&[0.0, 2.0 / 3.0], &[&[], &[2.0 / 3.0]], &[0.25, 0.75], &[1.0]),
        Tableau::B1 => p(
            &[0.0, 0.5, 1.0],
            &[&[], &[0.5], &[-1.0, 2.0]],
            &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            &[1.0, -1.0],
        ),
        Tableau::B2a | Tableau::B2b => {
            // (b) flips the sign of every √33 term
            let sg = if t == Tableau::B2a { 1.0 } else { -1.0 };
            let c2 = 5.0 / 8.0 + sg * s33 / 24.0;
            let c3 = 5.0 / 8.0 - sg * s33 / 24.0;
            p(
                &[0.0, c2, c3],
                &[
                    &[],
                    &[c2],
                    &[
                        -49.0 / 256.0 + sg * 29.0 * s33 / 768.0,
                        209.0 / 256.0 - sg * 61.0 * s33 / 768.0,
                    ],
                ],
                &[
                    1.0 / 8.0,
                    7.0 / 16.0 - sg * 3.0 * s33 / 176.0,
                    7.0 / 16.0 + sg * 3.0 * s33 / 176.0,
                ],
                &[1.0, (-7.0 - sg * s33) / 4.0],
            )
        }
        Tableau::B3a => p(
            &[0.0, 1.0, 0.5],
            &[&[], &[1.0], &[0.25, 0.25]],
            &[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            &[1.0, -1.0],
        ),
        Tableau::B3b => p(
            &[0.0, 1.0 / 3.0, 5.0 / 6.0],
            &[&[], &[1.0 / 3.0], &[-5.0 / 12.0, 5.0 / 4.0]],
            &[0.1, 0.5, 0.4],
            &[1.0, -0.2],
        ),
        Tableau::B4 => p(
            &[0.0, 0.5, 0.75],
            &[&[], &[0.5], &[0.0, 0.75]],
            &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0],
            &[1.0, -1.0 / 3.0],
        ),
        Tableau::C1 => p(
            &[0.0, 0.4, 0.6, 1.0],
            &[
                &[],
                &[0.4],
                &[-3.0 / 20.0, 0.75],
                &[19.0 / 44.0, -15.0 / 44.0, 10.0 / 11.0],
            ],
            &[11.0 / 72.0, 25.0 / 72.0, 25.0 / 72.0, 11.0 / 72.0],
            &[1.0, -2.0 / 3.0, 2.0 / 11.0],
        ),
        Tableau::C2 => p(
            &[0.0, 0.25, 0.6, 1.0],
            &[
                &[],
                &[0.25],
                &[-6.0 / 25.0, 21.0 / 25.0],
                &[6.0 / 5.0, -57.0 / 35.0, 10.0 / 7.0],
            ],
            &[1.0 / 9.0, 16.0 / 63.0, 125.0 / 252.0, 5.0 / 36.0],
            &[1.0, -1.0 / 6.0, 1.0 / 10.0],
        ),
        Tableau::Custom => unreachable!("custom tableaus have no catalog parameters"),
    }
}

fn build_catalog() -> Vec<MethodSpec> {
    use Rk3Variant as V3;
    use ShapeFormula as F;
    let mk = |id, t: Tableau, formula, root| {
        let p = params(t);
        let rows: Vec<&[f64]> = p.a.iter().map(|r| r.as_slice()).collect();
        let kappa = if formula == F::None { vec![] } else { p.kappa.clone() };
        spec(id, t, &p.c, &rows, &p.w, &kappa, formula, root)
    };
    let none = RootChoice::None;
    vec![
        mk("rk2", Tableau::Ralston, F::None, none),
        mk("mq-rk2", Tableau::Ralston, F::Rk2, none),
        mk("rk3-b1", Tableau::B1, F::None, none),
        mk("rk3-b2a", Tableau::B2a, F::None, none),
        mk("rk3-b2b", Tableau::B2b, F::None, none),
        mk("rk3-b3a", Tableau::B3a, F::None, none),
        mk("rk3-b3b", Tableau::B3b, F::None, none),
        mk("rk3-b4", Tableau::B4, F::None, none),
        mk("mq-rk3-b1", Tableau::B1, F::Rk3(V3::B1), none),
        mk("mq-rk3-b2a", Tableau::B2a, F::Rk3(V3::B2a), none),
        mk("mq-rk3-b2b", Tableau::B2b, F::Rk3(V3::B2b), none),
        mk("mq-rk3-b3a", Tableau::B3a, F::Rk3(V3::B3a), none),
        mk("mq-rk3-b3b", Tableau::B3b, F::Rk3(V3::B3b), none),
        mk("mq-rk3-b4", Tableau::B4, F::Rk3(V3::B4), none),
        mk("rk4-c1", Tableau::C1, F::None, none),
        mk("rk4-c2", Tableau::C2, F::None, none),
        mk("mq-rk4-c1-plus", Tableau::C1, F::Rk4(Rk4Variant::C1), RootChoice::Plus),
        mk("mq-rk4-c1-minus", Tableau::C1, F::Rk4(Rk4Variant::C1), RootChoice::Minus),
        mk("mq-rk4-c2-plus", Tableau::C2, F::Rk4(Rk4Variant::C2), RootChoice::Plus),
        mk("mq-rk4-c2-minus", Tableau::C2, F::Rk4(Rk4Variant::C2), RootChoice::Minus),
    ]
}

/// Every catalog method, in a stable order.
pub fn catalog() -> &'static [MethodSpec] {
    static CATALOG: OnceLock<Vec<MethodSpec>> = OnceLock::new();
    CATALOG.get_or_init(build_catalog)
}

pub fn method_ids() -> Vec<&'static str> {
    catalog().iter().map(|m| m.id).collect()
}

pub fn find_method(id: &str) -> Result<&'static MethodSpec> {
    catalog()
        .iter()
        .find(|m| m.id == id)
        .ok_or_else(|| Error::UnknownMethod {
            id: id.to_string(),
            valid: method_ids().join(", "),
        })
}

/// Residuals of the order conditions the method's tableau and shape ratios are
/// meant to satisfy, as `(condition id, residual)` pairs.
pub fn verify_order_conditions(spec: &MethodSpec) -> Vec<(&'static str, f64)> {
    let s = spec.stages;
    let (c, a, w) = (&spec.c, &spec.a, &spec.w);
    let mut out: Vec<(&'static str, f64)> = Vec::new();
    let sum_w: f64 = w.iter().sum();
    let named = spec.tableau != Tableau::Custom;
    let shaped = !spec.classical && spec.kappa.len() == s - 1;
    let kappa = |j: usize| spec.kappa.get(j - 1).copied().unwrap_or(0.0);

    match s {
        2 => {
            out.push(("p1.weights", sum_w - 1.0));
            out.push(("p1.row2", a[1][0] - c[1]));
            out.push(("p1.order2", w[1] * c[1] - 0.5));
            if named {
                out.push(("p2", 3.0 * w[1] * a[1][0].powi(2) - 1.0));
            }
        }
        3 => {
            let (c2, c3) = (c[1], c[2]);
            let (w2, w3) = (w[1], w[2]);
            let a32 = a[2][1];
            let wc3 = w2 * c2.powi(3) + w3 * c3.powi(3);
            out.push(("pv31.row2", a[1][0] - c2));
            out.push(("pv31.row3", a[2][0] + a32 - c3));
            out.push(("pv32.weights", sum_w - 1.0));
            out.push(("pv32.c", 2.0 * (w2 * c2 + w3 * c3) - 1.0));
            out.push(("pv32.c2", 3.0 * (w2 * c2 * c2 + w3 * c3 * c3) - 1.0));
            out.push(("pv32.a32", 6.0 * a32 * c2 * w3 - 1.0));
            if shaped {
                out.push(("pv33", w2 * c2 * c2 + w3 * c3 * c3 * kappa(2)));
            }
            match spec.tableau {
                Tableau::B1 => {
                    out.push(("b1.c3", wc3 - 0.25));
                    out.push(("b1.a32c2sq", a32 * c2 * c2 * w3 - 1.0 / 12.0));
                }
                Tableau::B2a | Tableau::B2b => {
                    out.push(("b2.c3", wc3 - 0.25));
                    out.push(("b2.a32c2c", a32 * c2 * (c2 + c3) * w3 - 5.0 / 24.0));
                }
                Tableau::B3a | Tableau::B3b => {
                    out.push(("b3.c3", wc3 - 0.25));
                    out.push((
                        "b3.a32",
                        a32 * c2 * c2 * w3 / 2.0 + a32 * c2 * c3 * w3 - 1.0 / 6.0,
                    ));
                }
                Tableau::B4 => {
                    out.push(("b4.a32c2c3", a32 * c2 * c3 * w3 - 1.0 / 8.0));
                    out.push(("b4.a32c2sq", a32 * c2 * c2 * w3 - 1.0 / 12.0));
                }
                _ => {}
            }
        }
        4 => {
            let (c2, c3, c4) = (c[1], c[2], c[3]);
            let (w2, w3, w4) = (w[1], w[2], w[3]);
            let (a32, a42, a43) = (a[2][1], a[3][1], a[3][2]);
            out.push(("pv41.row2", a[1][0] - c2));
            out.push(("pv41.row3", a[2][0] + a32 - c3));
            out.push(("pv41.row4", a[3][0] + a42 + a43 - c4));
            out.push(("pv42.weights", sum_w - 1.0));
            out.push(("pv42.c", 2.0 * (w2 * c2 + w3 * c3 + w4 * c4) - 1.0));
            out.push(("pv42.c2", 3.0 * (w2 * c2.powi(2) + w3 * c3.powi(2) + w4 * c4.powi(2)) - 1.0));
            out.push(("pv42.c3", 4.0 * (w2 * c2.powi(3) + w3 * c3.powi(3) + w4 * c4.powi(3)) - 1.0));
            out.push(("pv42.ac", 6.0 * (a32 * w3 * c2 + a42 * w4 * c2 + a43 * w4 * c3) - 1.0));
            out.push((
                "pv42.acc",
                8.0 * (a32 * w3 * c2 * c3 + a42 * w4 * c2 * c4 + a43 * w4 * c3 * c4) - 1.0,
            ));
            out.push((
                "pv42.ac2",
                12.0 * (a32 * w3 * c2 * c2 + a42 * w4 * c2 * c2 + a43 * w4 * c3 * c3) - 1.0,
            ));
            out.push(("pv42.aac", 24.0 * a32 * a43 * w4 * c2 - 1.0));
            if shaped {
                let (k3, k4) = (kappa(2), kappa(3));
                out.push(("pc43.c2", w2 * c2.powi(2) + w3 * c3.powi(2) * k3 + w4 * c4.powi(2) * k4));
                out.push(("pc43.c3", w2 * c2.powi(3) + w3 * c3.powi(3) * k3 + w4 * c4.powi(3) * k4));
                out.push((
                    "pc43.a",
                    a32 * w3 * c2 * c2 + a42 * w4 * c2 * c2 + a43 * w4 * c3 * c3 * k3,
                ));
            }
            let cc2 = a32 * c2 * c3 * c3 * w3 + (a42 * c2 + a43 * c3) * c4 * c4 * w4;
            match spec.tableau {
                Tableau::C1 => {
                    out.push(("c1.acc2", cc2 - 0.1));
                    out.push((
                        "c1.ac2c",
                        a32 * c2 * c2 * c3 * w3 + (a42 * c2 * c2 + a43 * c3 * c3) * c4 * w4 - 1.0 / 15.0,
                    ));
                }
                Tableau::C2 => {
                    out.push(("c2.acc2", cc2 - 0.1));
                    out.push((
                        "c2.a2c2",
                        a32 * a32 * c2 * c2 * w3 + (a42 * c2 + a43 * c3).powi(2) * w4 - 0.05,
                    ));
                }
                _ => {}
            }
        }
        _ => {}
    }
    out
}
