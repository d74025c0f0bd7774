//! Built-in problems, convergence studies and report output.

pub mod convergence;
pub mod elliptic;
pub mod energy;
pub mod registry;
pub mod report;

pub use convergence::{
    fit_slope, local_order_probe, local_order_probe_on, run_convergence, run_convergence_on,
    ConvergenceReport, ConvergenceRow, ProbeResult,
};
pub use energy::{duffing_energy, energy, max_energy_drift};
pub use registry::{
    default_steps, duffing_exact, find_problem, fine_integration, reference, registry, shape_override,
    ReferenceKind, ReferenceSolution, DUFFING_K, DUFFING_OMEGA, PROBLEM_IDS,
};
pub use report::{emit_report, format_error, ReportFormat};
