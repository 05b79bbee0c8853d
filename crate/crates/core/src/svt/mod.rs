//! Sparse vector technique variants and an exact audit of their privacy.
//!
//! Every variant compares noisy answers against a noisy threshold θ̂. Fixing
//! θ̂ = x makes the per-query outcomes independent, so the probability of a
//! whole output sequence is a one-dimensional integral over x of the
//! threshold density times a product of Laplace tail probabilities. The
//! audit evaluates those integrals with [`integrate`] on the
//! counterexample streams and reports log-probability ratios.

mod audit;
mod mechanism;
mod quadrature;

pub use audit::{
    audit_variant, battery_max_log_ratio, binary_scenario, binary_svt_log_ratio, default_audit, enumerate_events,
    halting_battery, improved_svt_log_ratio_bound, log_event_probability, log_ratio, monte_carlo_event_probability,
    render_audit_table, vanilla_scenario, vanilla_svt_log_ratio, vanilla_svt_log_ratio_quadrature, AuditEntry,
    AuditScenario, SvtVariant, Verdict, AUDIT_TOLERANCE,
};
pub use mechanism::{
    binary_svt, evaluate, improved_svt, reduced_svt, vanilla_svt, CountQuery, SvtConfig, SvtOutput, SvtRun,
};
pub use quadrature::{integrate, QuadOptions, Quadrature};
