use super::registry::{DUFFING_K, DUFFING_OMEGA};
use crate::stepper::Trajectory;

/// First integral `p²/2 + ω²q²/2 + k²(q²/2 - q⁴/2)` of the Duffing system.
pub fn energy(p: f64, q: f64) -> f64 {
    let (k, w) = (DUFFING_K, DUFFING_OMEGA);
    0.5 * p * p + 0.5 * w * w * q * q + k * k * (0.5 * q * q - 0.5 * q.powi(4))
}

/// `(t, E)` at every node of a `(p, q)` trajectory.
pub fn duffing_energy(trajectory: &Trajectory) -> Vec<(f64, f64)> {
    trajectory
        .nodes()
        .into_iter()
        .map(|(t, u)| (t, energy(u[0], u[1])))
        .collect()
}

/// `max |E(t) - E(t_0)|`.
pub fn max_energy_drift(series: &[(f64, f64)]) -> f64 {
    let Some(&(_, e0)) = series.first() else {
        return 0.0;
    };
    series.iter().fold(0.0, |m, &(_, e)| m.max((e - e0).abs()))
}
