//! Initial value problems `u' = f(t, u)` and the partial derivatives of `f`
//! consumed by the shape-parameter formulas.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{DomainError, Error, Result};
use crate::jet::{self, jet_seed, Jet4, Scalar};

pub type RhsFn = Arc<dyn Fn(f64, &[f64]) -> Result<Vec<f64>, DomainError> + Send + Sync>;
pub type ExactFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
pub type JetRhsFn = Arc<dyn Fn(Jet4, Jet4) -> Result<Jet4, DomainError> + Send + Sync>;
pub type ScalarPartialFn = Arc<dyn Fn(f64, f64) -> Result<f64, DomainError> + Send + Sync>;
pub type VectorFn = RhsFn;
pub type MatrixFn = Arc<dyn Fn(f64, &[f64]) -> Result<Vec<Vec<f64>>, DomainError> + Send + Sync>;

/// A scalar right-hand side written once for every [`Scalar`] type, so the
/// same code serves plain evaluation and jet differentiation.
pub trait ScalarRhs: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, t: S, u: S) -> Result<S, DomainError>;
}

/// User-supplied closures for the partials of `f`.
#[derive(Clone)]
pub enum ExactPartials {
    /// Keyed by `(t-order, u-order)`; all `a + b ≤ 4` must be present.
    Scalar(BTreeMap<(usize, usize), ScalarPartialFn>),
    /// `f_t` and the Jacobian `∂f/∂u` (row `i` holds `∂f_i/∂u_j`).
    System {
        time: Option<VectorFn>,
        jacobian: Option<MatrixFn>,
    },
}

#[derive(Clone)]
pub enum DerivativeProvider {
    Exact(ExactPartials),
    /// Scalar right-hand side lifted to [`Jet4`]s.
    Jet(JetRhsFn),
    /// Central differences of the right-hand side. Meant for validation.
    FiniteDifference,
}

impl DerivativeProvider {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Exact(_) => "exact",
            Self::Jet(_) => "jet",
            Self::FiniteDifference => "finite-difference",
        }
    }
}

impl fmt::Debug for DerivativeProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

/// All partials `∂ᵃₜ∂ᵇᵤ f` with `a + b ≤ 4` at one point, in jet slot order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPartials {
    pub d: [f64; jet::LEN],
}

impl ScalarPartials {
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.d[jet::index(a, b)]
    }
    pub fn f(&self) -> f64 {
        self.get(0, 0)
    }
    pub fn ft(&self) -> f64 {
        self.get(1, 0)
    }
    pub fn fu(&self) -> f64 {
        self.get(0, 1)
    }
    pub fn ftt(&self) -> f64 {
        self.get(2, 0)
    }
    pub fn ftu(&self) -> f64 {
        self.get(1, 1)
    }
    pub fn fuu(&self) -> f64 {
        self.get(0, 2)
    }
    pub fn fttt(&self) -> f64 {
        self.get(3, 0)
    }
    pub fn fttu(&self) -> f64 {
        self.get(2, 1)
    }
    pub fn ftuu(&self) -> f64 {
        self.get(1, 2)
    }
    pub fn fuuu(&self) -> f64 {
        self.get(0, 3)
    }
    pub fn ftttt(&self) -> f64 {
        self.get(4, 0)
    }
    pub fn ftttu(&self) -> f64 {
        self.get(3, 1)
    }
    pub fn fttuu(&self) -> f64 {
        self.get(2, 2)
    }
    pub fn ftuuu(&self) -> f64 {
        self.get(1, 3)
    }
    pub fn fuuuu(&self) -> f64 {
        self.get(0, 4)
    }
    /// `u'' = f_t + f_u f`.
    pub fn second_derivative(&self) -> f64 {
        self.ft() + self.fu() * self.f()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemPartials {
    pub f: Vec<f64>,
    pub ft: Vec<f64>,
    /// Row-major Jacobian, `jacobian[i][j] = ∂f_i/∂u_j`.
    pub jacobian: Vec<Vec<f64>>,
}

impl SystemPartials {
    /// `u'' = f_t + J f`.
    pub fn second_derivative(&self) -> Vec<f64> {
        self.jacobian
            .iter()
            .zip(&self.ft)
            .map(|(row, ft)| ft + row.iter().zip(&self.f).map(|(j, f)| j * f).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartialTable {
    Scalar(ScalarPartials),
    System(SystemPartials),
}

impl PartialTable {
    pub fn dim(&self) -> usize {
        match self {
            Self::Scalar(_) => 1,
            Self::System(s) => s.f.len(),
        }
    }

    pub fn f(&self) -> Vec<f64> {
        match self {
            Self::Scalar(s) => vec![s.f()],
            Self::System(s) => s.f.clone(),
        }
    }

    pub fn as_scalar(&self) -> Option<&ScalarPartials> {
        match self {
            Self::Scalar(s) => Some(s),
            Self::System(_) => None,
        }
    }
}

#[derive(Clone)]
pub struct OdeProblem {
    pub name: String,
    pub dim: usize,
    pub t0: f64,
    pub u0: Vec<f64>,
    pub t_end: f64,
    rhs: RhsFn,
    partials: DerivativeProvider,
    exact: Option<ExactFn>,
}

impl fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("t0", &self.t0)
            .field("u0", &self.u0)
            .field("t_end", &self.t_end)
            .field("partials", &self.partials)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl OdeProblem {
    /// Scalar problem whose partials come from jets of `rhs`.
    pub fn scalar<F: ScalarRhs>(name: &str, t0: f64, u0: f64, t_end: f64, rhs: F) -> Self {
        let rhs = Arc::new(rhs);
        let plain = Arc::clone(&rhs);
        let lifted = Arc::clone(&rhs);
        Self {
            name: name.to_string(),
            dim: 1,
            t0,
            u0: vec![u0],
            t_end,
            rhs: Arc::new(move |t, u: &[f64]| plain.eval(t, u[0]).map(|v| vec![v])),
            partials: DerivativeProvider::Jet(Arc::new(move |t, u| lifted.eval(t, u))),
            exact: None,
        }
    }

    /// Vector problem; partials default to finite differences until an
    /// exact provider is installed with [`Self::with_partials`].
    pub fn system(name: &str, t0: f64, u0: Vec<f64>, t_end: f64, rhs: RhsFn) -> Self {
        Self {
            name: name.to_string(),
            dim: u0.len(),
            t0,
            u0,
            t_end,
            rhs,
            partials: DerivativeProvider::FiniteDifference,
            exact: None,
        }
    }

    pub fn with_partials(mut self, provider: DerivativeProvider) -> Self {
        self.partials = provider;
        self
    }

    pub fn with_exact(mut self, exact: ExactFn) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Replace the initial data. The exact solution no longer applies and
    /// is dropped unless `t0` and `u0` are unchanged.
    pub fn with_initial(mut self, t0: f64, u0: Vec<f64>) -> Self {
        if t0 != self.t0 || u0 != self.u0 {
            self.exact = None;
        }
        self.t0 = t0;
        self.u0 = u0;
        self
    }

    pub fn provider(&self) -> &DerivativeProvider {
        &self.partials
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_fn(&self) -> Option<ExactFn> {
        self.exact.clone()
    }

    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|e| e(t))
    }

    pub fn rhs(&self, t: f64, u: &[f64]) -> Result<Vec<f64>, DomainError> {
        (self.rhs)(t, u).map_err(|e| e.at(t, u))
    }

    /// Check the structural invariants of the problem.
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t0) {
            return Err(Error::InvalidArgument(format!(
                "{}: t_end ({}) must exceed t0 ({})",
                self.name, self.t_end, self.t0
            )));
        }
        if self.dim == 0 || self.u0.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "{}: u0 has length {}, expected dim {}",
                self.name,
                self.u0.len(),
                self.dim
            )));
        }
        let f0 = self.rhs(self.t0, &self.u0)?;
        if f0.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "{}: rhs returned {} components, expected {}",
                self.name,
                f0.len(),
                self.dim
            )));
        }
        if let Some(e0) = self.exact(self.t0) {
            let gap = norm(&sub(&e0, &self.u0));
            if e0.len() != self.dim || !(gap < 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "{}: exact(t0) differs from u0 by {gap:e}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Complete partial table at `(t, u)` from the installed provider.
    pub fn partials_at(&self, t: f64, u: &[f64]) -> Result<PartialTable> {
        if u.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "state has length {}, expected {}",
                u.len(),
                self.dim
            )));
        }
        match &self.partials {
            DerivativeProvider::Jet(f) => {
                if self.dim != 1 {
                    return Err(Error::Provider(
                        "jet provider supports scalar problems only".into(),
                    ));
                }
                let (tj, uj) = jet_seed(t, u[0]);
                let j = f(tj, uj).map_err(|e| e.at(t, u))?;
                Ok(PartialTable::Scalar(jet_to_partials(&j)))
            }
            DerivativeProvider::Exact(ExactPartials::Scalar(map)) => {
                if self.dim != 1 {
                    return Err(Error::Provider(
                        "scalar exact partials installed on a system".into(),
                    ));
                }
                let mut d = [0.0; jet::LEN];
                for (k, &(a, b)) in jet::ORDERS.iter().enumerate() {
                    let closure = map.get(&(a, b)).ok_or_else(|| {
                        Error::Provider(format!("missing exact partial closure for (t^{a}, u^{b})"))
                    })?;
                    d[k] = closure(t, u[0]).map_err(|e| e.at(t, u))?;
                }
                Ok(PartialTable::Scalar(ScalarPartials { d }))
            }
            DerivativeProvider::Exact(ExactPartials::System { time, jacobian }) => {
                let time = time
                    .as_ref()
                    .ok_or_else(|| Error::Provider("missing f_t closure".into()))?;
                let jacobian = jacobian
                    .as_ref()
                    .ok_or_else(|| Error::Provider("missing Jacobian closure".into()))?;
                let f = self.rhs(t, u)?;
                let ft = time(t, u).map_err(|e| e.at(t, u))?;
                let jac = jacobian(t, u).map_err(|e| e.at(t, u))?;
                if ft.len() != self.dim
                    || jac.len() != self.dim
                    || jac.iter().any(|r| r.len() != self.dim)
                {
                    return Err(Error::Provider("exact system partials have wrong shape".into()));
                }
                Ok(PartialTable::System(SystemPartials {
                    f,
                    ft,
                    jacobian: jac,
                }))
            }
            DerivativeProvider::FiniteDifference => {
                if self.dim == 1 {
                    self.fd_scalar(t, u[0]).map(PartialTable::Scalar)
                } else {
                    self.fd_system(t, u).map(PartialTable::System)
                }
            }
        }
    }

    fn fd_scalar(&self, t: f64, u: f64) -> Result<ScalarPartials> {
        let scale = t.abs() + u.abs() + 1.0;
        let eval = |tt: f64, uu: f64| -> Result<f64> { Ok(self.rhs(tt, &[uu])?[0]) };
        let mut d = [0.0; jet::LEN];
        d[0] = eval(t, u)?;
        for (k, &(a, b)) in jet::ORDERS.iter().enumerate().skip(1) {
            let h = fd_step(a + b) * scale;
            let wa = central_weights(a);
            let wb = central_weights(b);
            let mut acc = 0.0;
            for &(ot, wt) in &wa {
                for &(ou, wu) in &wb {
                    acc += wt * wu * eval(t + ot * h, u + ou * h)?;
                }
            }
            d[k] = acc / h.powi((a + b) as i32);
        }
        Ok(ScalarPartials { d })
    }

    fn fd_system(&self, t: f64, u: &[f64]) -> Result<SystemPartials> {
        let scale = t.abs() + norm(u) + 1.0;
        let h = fd_step(1) * scale;
        let f = self.rhs(t, u)?;
        let fp = self.rhs(t + h, u)?;
        let fm = self.rhs(t - h, u)?;
        let ft = fp.iter().zip(&fm).map(|(p, m)| (p - m) / (2.0 * h)).collect();
        let mut jacobian = vec![vec![0.0; self.dim]; self.dim];
        let mut probe = u.to_vec();
        for j in 0..self.dim {
            probe[j] = u[j] + h;
            let fp = self.rhs(t, &probe)?;
            probe[j] = u[j] - h;
            let fm = self.rhs(t, &probe)?;
            probe[j] = u[j];
            for i in 0..self.dim {
                jacobian[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(SystemPartials { f, ft, jacobian })
    }
}

/// Step (before scaling by `|t|+|u|+1`) for central differences of the given
/// total order: `1e-5` for first derivatives, `ε^{1/(n+2)}` above.
fn fd_step(order: usize) -> f64 {
    if order <= 1 {
        1e-5
    } else {
        f64::EPSILON.powf(1.0 / (order as f64 + 2.0))
    }
}

/// Offsets (in units of the step) and weights of the second-order-accurate
/// central difference of order `n`.
fn central_weights(n: usize) -> Vec<(f64, f64)> {
    let mut binom = 1.0;
    (0..=n)
        .map(|k| {
            let w = if k % 2 == 0 { binom } else { -binom };
            let offset = n as f64 / 2.0 - k as f64;
            binom = binom * (n - k) as f64 / (k + 1) as f64;
            (offset, w)
        })
        .collect()
}

/// `∂ᵃₜ∂ᵇᵤ f = a!·b!·c_ab`.
pub fn jet_to_partials(j: &Jet4) -> ScalarPartials {
    ScalarPartials { d: j.derivatives() }
}

/// `u''` along the solution through the table's evaluation point.
pub fn second_derivative(table: &PartialTable) -> Vec<f64> {
    match table {
        PartialTable::Scalar(s) => vec![s.second_derivative()],
        PartialTable::System(s) => s.second_derivative(),
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct NegSquare;
    impl ScalarRhs for NegSquare {
        fn eval<S: Scalar>(&self, _t: S, u: S) -> Result<S, DomainError> {
            Ok(-(u * u))
        }
    }

    struct Linear(f64);
    impl ScalarRhs for Linear {
        fn eval<S: Scalar>(&self, _t: S, u: S) -> Result<S, DomainError> {
            Ok(u * self.0)
        }
    }

    struct Rational;
    impl ScalarRhs for Rational {
        fn eval<S: Scalar>(&self, t: S, u: S) -> Result<S, DomainError> {
            (t * t * 2.0 - u).div_checked(t * t * u - t, "t^2 u - t")
        }
    }

    #[test]
    fn neg_square_partials() {
        let p = OdeProblem::scalar("sq", 0.0, 1.0, 1.0, NegSquare);
        let tab = p.partials_at(2.0, &[3.0]).unwrap();
        let s = tab.as_scalar().unwrap();
        assert_eq!(s.f(), -9.0);
        assert_eq!(s.fu(), -6.0);
        assert_eq!(s.fuu(), -2.0);
        for (k, &(a, b)) in jet::ORDERS.iter().enumerate() {
            if !matches!((a, b), (0, 0) | (0, 1) | (0, 2)) {
                assert_eq!(s.d[k], 0.0, "({a},{b})");
            }
        }
    }

    #[test]
    fn rational_partials_and_singularity() {
        let p = OdeProblem::scalar("rat", 1.0, 2.0, 2.0, Rational);
        let s = *p.partials_at(1.0, &[2.0]).unwrap().as_scalar().unwrap();
        assert_eq!(s.f(), 0.0);
        assert!((s.ft() - 4.0).abs() < 1e-14);
        match p.partials_at(1.0, &[1.0]) {
            Err(Error::Domain(e)) => {
                assert_eq!(e.tag, "t^2 u - t");
                assert_eq!(e.t, Some(1.0));
                assert_eq!(e.u, vec![1.0]);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(p.rhs(1.0, &[1.0]).is_err());
    }

    #[test]
    fn missing_exact_closure_is_provider_error() {
        let mut map: BTreeMap<(usize, usize), ScalarPartialFn> = BTreeMap::new();
        map.insert((0, 0), Arc::new(|_, u| Ok(-u * u)));
        let p = OdeProblem::scalar("sq", 0.0, 1.0, 1.0, NegSquare)
            .with_partials(DerivativeProvider::Exact(ExactPartials::Scalar(map)));
        assert!(matches!(p.partials_at(0.0, &[1.0]), Err(Error::Provider(_))));

        let sys = OdeProblem::system("s", 0.0, vec![1.0, 0.0], 1.0, Arc::new(|_, u| Ok(u.to_vec())))
            .with_partials(DerivativeProvider::Exact(ExactPartials::System {
                time: None,
                jacobian: None,
            }));
        assert!(matches!(sys.partials_at(0.0, &[1.0, 0.0]), Err(Error::Provider(_))));
    }

    #[test]
    fn second_derivative_examples() {
        let p = OdeProblem::scalar("sq", 0.0, 1.0, 1.0, NegSquare);
        let tab = p.partials_at(0.0, &[1.0]).unwrap();
        assert_eq!(second_derivative(&tab), vec![2.0]);

        for lambda in [-3.0, 0.5, 2.0, 7.25] {
            let p = OdeProblem::scalar("lin", 0.0, 1.0, 1.0, Linear(lambda));
            let u = 1.7;
            let tab = p.partials_at(0.3, &[u]).unwrap();
            let got = second_derivative(&tab)[0];
            let want = lambda * lambda * u;
            assert!((got - want).abs() <= 1e-14 * want.abs());
        }

        // 2x2 system: f = (e^t, 0) - A u at t = 0, u = (1, 0)
        let table = PartialTable::System(SystemPartials {
            f: vec![-4.0, -3.0],
            ft: vec![1.0, 0.0],
            jacobian: vec![vec![-5.0, 3.0], vec![-3.0, 1.0]],
        });
        assert_eq!(second_derivative(&table), vec![12.0, 9.0]);
    }

    #[test]
    fn finite_differences_track_jets() {
        let jet = OdeProblem::scalar("rat", 1.0, 2.0, 2.0, Rational);
        let fd = jet.clone().with_partials(DerivativeProvider::FiniteDifference);
        let (t, u) = (1.5, 2.3);
        let a = *jet.partials_at(t, &[u]).unwrap().as_scalar().unwrap();
        let b = *fd.partials_at(t, &[u]).unwrap().as_scalar().unwrap();
        for (k, &(ta, ub)) in jet::ORDERS.iter().enumerate() {
            if ta + ub <= 2 {
                assert!(
                    (a.d[k] - b.d[k]).abs() <= 1e-6 * a.d[k].abs().max(1.0),
                    "({ta},{ub}): {} vs {}",
                    a.d[k],
                    b.d[k]
                );
            }
        }
    }

    #[test]
    fn central_weights_are_binomial() {
        assert_eq!(central_weights(0), vec![(0.0, 1.0)]);
        assert_eq!(central_weights(1), vec![(0.5, 1.0), (-0.5, -1.0)]);
        assert_eq!(central_weights(2), vec![(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)]);
    }

    #[test]
    fn validate_rejects_bad_horizon() {
        let p = OdeProblem::scalar("sq", 1.0, 1.0, 0.5, NegSquare);
        assert!(p.validate().is_err());
        let p = OdeProblem::scalar("sq", 0.0, 1.0, 1.0, NegSquare)
            .with_exact(Arc::new(|t| vec![1.0 / (t + 1.0)]));
        p.validate().unwrap();
        let p = p.with_exact(Arc::new(|t| vec![2.0 / (t + 1.0)]));
        assert!(p.validate().is_err());
    }
}
