//! Stability functions `R(z)` on `u' = λu`, real stability intervals and
//! region rasterization.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::exec::Execution;
use crate::jet::LEN;
use crate::methods::{MethodSpec, Tableau};
use crate::problem::{PartialTable, ScalarPartials};
use crate::shape::shape_for;

/// Coefficients `c_0..c_d` of `R(z) = Σ c_k z^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityPolynomial {
    pub method: String,
    pub coeffs: Vec<f64>,
    pub claimed_order: usize,
}

impl StabilityPolynomial {
    pub fn new(method: impl Into<String>, coeffs: Vec<f64>, claimed_order: usize) -> Self {
        Self {
            method: method.into(),
            coeffs,
            claimed_order,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add_assign(a: &mut Vec<f64>, b: &[f64], scale: f64) {
    if a.len() < b.len() {
        a.resize(b.len(), 0.0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += scale * y;
    }
}

/// Three-stage polynomial whose shape formula degenerates on `λu`.
fn b1_polynomial() -> Vec<f64> {
    vec![
        1.0,
        1.0,
        0.5,
        1.0 / 6.0,
        0.0,
        -1.0 / 32.0,
        -1.0 / 192.0,
        -1.0 / 134.0,
    ]
}

/// Shape ratios `ε_j²/λ²` on `f = λu` at `λ = u = 1`.
fn linear_ratios(spec: &MethodSpec) -> Vec<f64> {
    let mut d = [0.0; LEN];
    d[0] = 1.0;
    d[2] = 1.0;
    let table = PartialTable::Scalar(ScalarPartials { d });
    match shape_for(spec, &table, 0.0, &[1.0], None) {
        Ok(r) => r.eps_sq.iter().map(|v| v[0]).collect(),
        Err(_) => vec![0.0; spec.stages - 1],
    }
}

/// `R(z)` obtained by running the step on `u' = λu` in polynomial arithmetic.
pub fn derive_stability_poly(spec: &MethodSpec) -> StabilityPolynomial {
    if !spec.classical && spec.tableau == Tableau::B1 {
        return StabilityPolynomial::new(spec.id, b1_polynomial(), spec.formal_order);
    }
    let ratios = if spec.classical {
        vec![0.0; spec.stages - 1]
    } else {
        linear_ratios(spec)
    };
    // hk[j] = h·K_j as a polynomial in z
    let mut hk: Vec<Vec<f64>> = Vec::with_capacity(spec.stages);
    for j in 0..spec.stages {
        let mut arg = vec![1.0];
        for (m, a) in spec.a[j].iter().enumerate() {
            poly_add_assign(&mut arg, &hk[m], *a);
        }
        let e = if j == 0 { 0.0 } else { ratios[j - 1] };
        if e != 0.0 {
            let c = spec.c[j];
            arg = poly_mul(&arg, &[1.0, 0.0, e * c * c / 2.0]);
        }
        hk.push(poly_mul(&[0.0, 1.0], &arg));
    }
    let mut r = vec![1.0];
    for (j, p) in hk.iter().enumerate() {
        poly_add_assign(&mut r, p, spec.w[j]);
    }
    while r.len() > 2 && r.last().is_some_and(|c| c.abs() < 1e-15) {
        r.pop();
    }
    StabilityPolynomial::new(spec.id, r, spec.formal_order)
}

/// Largest `p` with `c_k = 1/k!` for every `k ≤ p`.
pub fn exp_match_order(poly: &StabilityPolynomial) -> usize {
    let mut fact = 1.0;
    let mut p = 0;
    for k in 0..=14 {
        if k > 0 {
            fact *= k as f64;
        }
        let c = poly.coeffs.get(k).copied().unwrap_or(0.0);
        if (c - 1.0 / fact).abs() > 1e-12 {
            break;
        }
        p = k;
    }
    p
}

const TANGENCY: f64 = 1e-12;

fn inside(poly: &StabilityPolynomial, x: f64) -> bool {
    poly.eval(x).abs() <= 1.0 + TANGENCY
}

/// Left end `x*` of the maximal `[x*, 0]` on which `|R| ≤ 1`.
pub fn real_stability_interval(poly: &StabilityPolynomial) -> f64 {
    const STEP: f64 = 1e-3;
    const LIMIT: f64 = -100.0;
    let mut x_in = 0.0;
    let mut k = 1u32;
    loop {
        let x = -(k as f64) * STEP;
        if x < LIMIT {
            return LIMIT;
        }
        if !inside(poly, x) {
            let (mut lo, mut hi) = (x, x_in);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if inside(poly, mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return hi;
        }
        x_in = x;
        k += 1;
    }
}

/// Boolean membership grid of `|R(z)| ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `inside[row][col]` for `z = xs[col] + i·ys[row]`.
    pub inside: Vec<Vec<bool>>,
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| lo + k as f64 * step).collect()
}

pub fn rasterize_region(
    poly: &StabilityPolynomial,
    re_range: (f64, f64),
    im_range: (f64, f64),
    step: f64,
    exec: Execution,
) -> RegionGrid {
    assert!(step > 0.0, "grid step must be positive");
    let xs = axis(re_range.0, re_range.1, step);
    let ys = axis(im_range.0, im_range.1, step);
    let inside = exec.map(&ys, |&y| {
        xs.iter()
            .map(|&x| poly.eval_complex(Complex64::new(x, y)).norm() <= 1.0 + TANGENCY)
            .collect()
    });
    RegionGrid { xs, ys, inside }
}

impl RegionGrid {
    pub fn count_inside(&self) -> usize {
        self.inside.iter().flatten().filter(|&&b| b).count()
    }

    /// CSV with header `x,y,inside`, rows in scan order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,inside")?;
        for (row, &y) in self.inside.iter().zip(&self.ys) {
            for (&b, &x) in row.iter().zip(&self.xs) {
                writeln!(w, "{x:.6},{y:.6},{}", u8::from(b))?;
            }
        }
        Ok(())
    }
}
