//! Jacobi elliptic functions by the arithmetic-geometric mean.

/// `(sn, cn, dn)` of `x` for parameter `m = k²` in `[0, 1]`.
pub fn sn_cn_dn(x: f64, m: f64) -> (f64, f64, f64) {
    assert!((0.0..=1.0).contains(&m), "parameter must lie in [0, 1], got {m}");
    if m == 0.0 {
        return (x.sin(), x.cos(), 1.0);
    }
    if m == 1.0 {
        let s = 1.0 / x.cosh();
        return (x.tanh(), s, s);
    }
    const MAX: usize = 16;
    let mut a = [0.0; MAX + 1];
    let mut c = [0.0; MAX + 1];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = m.sqrt();
    let mut n = 0;
    while n < MAX && c[n].abs() > f64::EPSILON * a[n] {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }
    let mut phi = 2f64.powi(n as i32) * a[n] * x;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    let (s, co) = phi.sin_cos();
    // dn > 0 for m < 1
    (s, co, (1.0 - m * s * s).sqrt())
}
