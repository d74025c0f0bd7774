//! Truncated bivariate Taylor arithmetic in `(t, u)`.
//!
//! A [`Jet4`] stores the coefficients `c_ab` of `Σ c_ab δt^a δu^b` for all
//! `a + b ≤ 4`: 15 slots in graded order, degree by degree, and within a
//! degree by increasing `u`-order. Products discard every term of total
//! degree above four, so evaluating a right-hand side on seeded coordinate
//! jets yields all partial derivatives needed by the shape formulas in one
//! pass.
//!
//! The [`Scalar`] trait lets a right-hand side be written once and evaluated
//! both on plain `f64` and on jets.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::DomainError;

/// Truncation degree.
pub const DEGREE: usize = 4;
/// Number of coefficients with `a + b ≤ DEGREE`.
pub const LEN: usize = (DEGREE + 1) * (DEGREE + 2) / 2;

/// Slot of coefficient `(a, b)`; `a + b` must not exceed [`DEGREE`].
#[inline]
pub const fn index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Inverse of [`index`].
pub const ORDERS: [(usize, usize); LEN] = {
    let mut out = [(0, 0); LEN];
    let mut d = 0;
    let mut k = 0;
    while d <= DEGREE {
        let mut b = 0;
        while b <= d {
            out[k] = (d - b, b);
            k += 1;
            b += 1;
        }
        d += 1;
    }
    out
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet4 {
    coeffs: [f64; LEN],
}

impl Jet4 {
    pub const fn zero() -> Self {
        Self { coeffs: [0.0; LEN] }
    }

    pub const fn constant(c: f64) -> Self {
        let mut coeffs = [0.0; LEN];
        coeffs[0] = c;
        Self { coeffs }
    }

    pub const fn from_coeffs(coeffs: [f64; LEN]) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64; LEN] {
        &self.coeffs
    }

    /// Coefficient of `δt^a δu^b`, zero above the truncation degree.
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > DEGREE {
            0.0
        } else {
            self.coeffs[index(a, b)]
        }
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Part without the constant term; nilpotent under truncation.
    fn tail(&self) -> Self {
        let mut r = *self;
        r.coeffs[0] = 0.0;
        r
    }

    /// `Σ_k series[k] · r^k` for a jet `r` with zero constant term.
    fn compose(r: &Self, series: &[f64; DEGREE + 1]) -> Self {
        let mut out = Self::constant(series[0]);
        let mut power = Self::constant(1.0);
        for &coef in &series[1..] {
            power = power * *r;
            out = out + power * coef;
        }
        out
    }

    /// Degree-4 reciprocal series.
    pub fn recip(&self) -> Result<Self, DomainError> {
        let y0 = self.value();
        if y0 == 0.0 || !y0.is_finite() {
            return Err(DomainError::new("jet reciprocal of zero constant term"));
        }
        let r = self.tail() * (1.0 / y0);
        let inv = 1.0 / y0;
        Ok(Self::compose(&r, &[inv, -inv, inv, -inv, inv]))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, DomainError> {
        Ok(*self * rhs.recip()?)
    }

    pub fn exp(&self) -> Self {
        let e0 = self.value().exp();
        Self::compose(
            &self.tail(),
            &[e0, e0, e0 / 2.0, e0 / 6.0, e0 / 24.0],
        )
    }

    pub fn sqrt(&self) -> Result<Self, DomainError> {
        let y0 = self.value();
        if !(y0 > 0.0) {
            return Err(DomainError::new("jet square root of nonpositive constant term"));
        }
        let s0 = y0.sqrt();
        let r = self.tail() * (1.0 / y0);
        // binomial coefficients of (1 + r)^{1/2}
        Ok(Self::compose(
            &r,
            &[s0, s0 / 2.0, -s0 / 8.0, s0 / 16.0, -5.0 * s0 / 128.0],
        ))
    }

    pub fn powi(&self, n: i32) -> Result<Self, DomainError> {
        let base = if n < 0 { self.recip()? } else { *self };
        let mut exp = n.unsigned_abs();
        let mut acc = Self::constant(1.0);
        let mut sq = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * sq;
            }
            exp >>= 1;
            if exp > 0 {
                sq = sq * sq;
            }
        }
        Ok(acc)
    }

    /// `∂ᵃₜ∂ᵇᵤ` of the represented function at the expansion point,
    /// i.e. `a!·b!·c_ab`, in slot order.
    pub fn derivatives(&self) -> [f64; LEN] {
        const FACT: [f64; DEGREE + 1] = [1.0, 1.0, 2.0, 6.0, 24.0];
        let mut out = [0.0; LEN];
        for (k, &(a, b)) in ORDERS.iter().enumerate() {
            out[k] = FACT[a] * FACT[b] * self.coeffs[k];
        }
        out
    }
}

/// Coordinate jets `T = t + δt` and `U = u + δu`.
pub fn jet_seed(t: f64, u: f64) -> (Jet4, Jet4) {
    let mut tj = Jet4::constant(t);
    tj.coeffs[index(1, 0)] = 1.0;
    let mut uj = Jet4::constant(u);
    uj.coeffs[index(0, 1)] = 1.0;
    (tj, uj)
}

impl Default for Jet4 {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for Jet4 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (x, y) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *x += y;
        }
        self
    }
}

impl Sub for Jet4 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (x, y) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *x -= y;
        }
        self
    }
}

impl Neg for Jet4 {
    type Output = Self;
    fn neg(mut self) -> Self {
        for x in self.coeffs.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl Mul for Jet4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = [0.0; LEN];
        for (i, &(a1, b1)) in ORDERS.iter().enumerate() {
            let x = self.coeffs[i];
            if x == 0.0 {
                continue;
            }
            let d1 = a1 + b1;
            for (j, &(a2, b2)) in ORDERS.iter().enumerate() {
                if d1 + a2 + b2 > DEGREE {
                    break;
                }
                out[index(a1 + a2, b1 + b2)] += x * rhs.coeffs[j];
            }
        }
        Self { coeffs: out }
    }
}

impl Add<f64> for Jet4 {
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet4 {
    type Output = Self;
    fn sub(mut self, rhs: f64) -> Self {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet4 {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for x in self.coeffs.iter_mut() {
            *x *= rhs;
        }
        self
    }
}

/// Number-like values a scalar right-hand side can be evaluated on.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn from_f64(c: f64) -> Self;
    fn value(&self) -> f64;
    /// Division that fails with a tagged [`DomainError`] on a zero divisor.
    fn div_checked(self, rhs: Self, tag: &str) -> Result<Self, DomainError>;
    fn exp(self) -> Self;
    fn sqrt_checked(self, tag: &str) -> Result<Self, DomainError>;
    fn powi(self, n: i32) -> Result<Self, DomainError>;
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn div_checked(self, rhs: Self, tag: &str) -> Result<Self, DomainError> {
        if rhs == 0.0 {
            Err(DomainError::new(tag))
        } else {
            Ok(self / rhs)
        }
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt_checked(self, tag: &str) -> Result<Self, DomainError> {
        if self < 0.0 {
            Err(DomainError::new(tag))
        } else {
            Ok(self.sqrt())
        }
    }
    fn powi(self, n: i32) -> Result<Self, DomainError> {
        if n < 0 && self == 0.0 {
            Err(DomainError::new("negative power of zero"))
        } else {
            Ok(f64::powi(self, n))
        }
    }
}

impl Scalar for Jet4 {
    fn from_f64(c: f64) -> Self {
        Jet4::constant(c)
    }
    fn value(&self) -> f64 {
        Jet4::value(self)
    }
    fn div_checked(self, rhs: Self, tag: &str) -> Result<Self, DomainError> {
        self.checked_div(&rhs).map_err(|_| DomainError::new(tag))
    }
    fn exp(self) -> Self {
        Jet4::exp(&self)
    }
    fn sqrt_checked(self, tag: &str) -> Result<Self, DomainError> {
        self.sqrt().map_err(|_| DomainError::new(tag))
    }
    fn powi(self, n: i32) -> Result<Self, DomainError> {
        Jet4::powi(&self, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * (1.0 + b.abs()), "{a} vs {b}");
    }

    #[test]
    fn index_round_trips() {
        for (k, &(a, b)) in ORDERS.iter().enumerate() {
            assert_eq!(index(a, b), k);
        }
        assert_eq!(LEN, 15);
    }

    #[test]
    fn seeds() {
        let (t, u) = jet_seed(0.0, 0.0);
        assert_eq!(t.coeff(1, 0), 1.0);
        assert_eq!(u.coeff(0, 1), 1.0);
        assert_eq!(t.value() + u.value(), 0.0);

        let (t, u) = jet_seed(1.0, 2.0);
        assert_eq!((t.value(), t.coeff(1, 0)), (1.0, 1.0));
        assert_eq!((u.value(), u.coeff(0, 1)), (2.0, 1.0));
        assert_eq!(t.coeffs().iter().filter(|c| **c != 0.0).count(), 2);

        // constant expression built from seeds has no derivative part
        let c = t * 0.0 + u * 0.0 + 3.5;
        assert_eq!(c.derivatives()[0], 3.5);
        assert!(c.derivatives()[1..].iter().all(|&d| d == 0.0));
    }

    #[test]
    fn square_of_u() {
        let (_, u) = jet_seed(0.0, 3.0);
        let sq = u * u;
        assert_eq!(sq.coeff(0, 0), 9.0);
        assert_eq!(sq.coeff(0, 1), 6.0);
        assert_eq!(sq.coeff(0, 2), 1.0);
        let rest: f64 = (0..LEN)
            .filter(|&k| k != 0 && k != index(0, 1) && k != index(0, 2))
            .map(|k| sq.coeffs()[k].abs())
            .sum();
        assert_eq!(rest, 0.0);
        // f = -u^2 at u = 1: f_uu = 2!·(-1)
        let (_, u) = jet_seed(0.0, 1.0);
        let f = -(u * u);
        assert_eq!(f.coeff(0, 2), -1.0);
        assert_eq!(f.derivatives()[index(0, 2)], -2.0);
    }

    #[test]
    fn reciprocal_geometric_series() {
        let (t, _) = jet_seed(2.0, 0.0);
        let r = Jet4::constant(1.0).checked_div(&t).unwrap();
        let expect = [0.5, -0.25, 0.125, -0.0625, 0.03125];
        for (a, e) in expect.iter().enumerate() {
            assert_close(r.coeff(a, 0), *e, 1e-15);
        }
        for (k, &(_, b)) in ORDERS.iter().enumerate() {
            if b > 0 {
                assert_eq!(r.coeffs()[k], 0.0);
            }
        }
    }

    #[test]
    fn exp_series() {
        let (t, _) = jet_seed(0.0, 0.0);
        let e = t.exp();
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        for a in 0..=4 {
            assert_close(e.coeff(a, 0), 1.0 / fact[a], 1e-15);
        }
        assert!((0..LEN).filter(|&k| ORDERS[k].1 > 0).all(|k| e.coeffs()[k] == 0.0));
    }

    #[test]
    fn sqrt_squares_back() {
        let (t, u) = jet_seed(1.3, 0.4);
        let x = t * t + u * 3.0 + 0.5;
        let s = x.sqrt().unwrap();
        let back = s * s;
        for k in 0..LEN {
            assert_close(back.coeffs()[k], x.coeffs()[k], 1e-14);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(Jet4::constant(0.0).recip().is_err());
        assert!(Jet4::constant(-1.0).sqrt().is_err());
        assert!(Jet4::constant(0.0).sqrt().is_err());
        assert!(Scalar::div_checked(1.0, 0.0, "x").is_err());
    }

    #[test]
    fn powers() {
        let (t, u) = jet_seed(0.7, -1.2);
        let x = t * u + 2.0;
        let p3 = x.powi(3).unwrap();
        let m = x * x * x;
        let pm2 = x.powi(-2).unwrap();
        let m2 = (x * x).recip().unwrap();
        for k in 0..LEN {
            assert_close(p3.coeffs()[k], m.coeffs()[k], 1e-14);
            assert_close(pm2.coeffs()[k], m2.coeffs()[k], 1e-14);
        }
    }

    #[test]
    fn linear_partials() {
        let (_, u) = jet_seed(0.0, 1.0);
        let f = u * 2.0;
        let d = f.derivatives();
        assert_eq!(d[0], 2.0);
        assert_eq!(d[index(0, 1)], 2.0);
        assert_eq!(d.iter().filter(|x| **x != 0.0).count(), 2);
    }

    fn arb_jet() -> impl Strategy<Value = Jet4> {
        prop::array::uniform15(-2.0f64..2.0).prop_map(Jet4::from_coeffs)
    }

    proptest! {
        #[test]
        fn ring_axioms(x in arb_jet(), y in arb_jet(), z in arb_jet()) {
            let tol = 1e-14 * 64.0;
            let ab = x * y;
            let ba = y * x;
            let assoc_l = (x * y) * z;
            let assoc_r = x * (y * z);
            let dist_l = x * (y + z);
            let dist_r = x * y + x * z;
            for k in 0..LEN {
                prop_assert!((ab.coeffs()[k] - ba.coeffs()[k]).abs() <= 1e-14);
                prop_assert!((assoc_l.coeffs()[k] - assoc_r.coeffs()[k]).abs() <= tol);
                prop_assert!((dist_l.coeffs()[k] - dist_r.coeffs()[k]).abs() <= tol);
                prop_assert!(((x + y).coeffs()[k] - (y + x).coeffs()[k]).abs() == 0.0);
            }
        }

        #[test]
        fn division_inverts_multiplication(x in arb_jet(), mut y in arb_jet(), c0 in 1e-6f64..2.0, sign in any::<bool>()) {
            let mut c = *y.coeffs();
            c[0] = if sign { c0 } else { -c0 };
            y = Jet4::from_coeffs(c);
            let back = (x * y).checked_div(&y).unwrap();
            // the reciprocal series is conditioned by (max|y| / |y0|)^5
            let ymax = y.coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = (1.0 + ymax / c0).powi(5);
            for k in 0..LEN {
                prop_assert!((back.coeffs()[k] - x.coeffs()[k]).abs() <= 1e-12 * scale,
                    "slot {k}: {} vs {}", back.coeffs()[k], x.coeffs()[k]);
            }
        }
    }
}
