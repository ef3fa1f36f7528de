//! Experiment orchestration: configuration, runs, reports and their files.

mod config;
mod files;
mod report;

pub use config::{Config, GridSection, ModelSection, ReportSection, RunSection, SampleSpec};
pub use files::{
    decay_header, export_csv, read_decay_csv, read_multiplier_csv, read_report_json, write_decay_csv,
    write_multiplier_csv, write_report_json, write_sweep_csv, MULTIPLIER_HEADER,
};
pub use report::{
    dichotomy_sweep, run_linear_decay, run_semilinear_decay, sample_points, verify_multipliers, Bracket,
    Classification, Comparison, MultiplierRow, Provenance, Report, ReportKind, SlackAudit, SweepRow,
    CLASSIFICATION_MARGIN,
};

use crate::error::Result;
use crate::exponents::{
    beta_critical, beta_star, critical_exponent, crucial_ell_threshold, fujita_exponent, linear_rate, q_bar, q_sharp,
    strauss_classic, strauss_generalized, theorem1_beta_floor, theorem2_beta_threshold, LinearRateQuery,
};
use crate::multipliers::rho;

/// One named quantity of [`exponent_table`]; `value` is `None` where the
/// quantity is undefined for the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentRow {
    pub name: &'static str,
    pub value: Option<f64>,
}

/// Critical exponents, thresholds and linear decay rates for `(n, ℓ, β)`.
pub fn exponent_table(n: u32, ell: f64, beta: f64) -> Result<Vec<ExponentRow>> {
    let p_c = critical_exponent(n, ell)?;
    let nf = f64::from(n);
    let row = |name, value: Result<f64>| ExponentRow { name, value: value.ok() };
    let rate = |q: f64| linear_rate(&LinearRateQuery::new(n, ell, beta, q)).map(|r| r.t_exponent);
    Ok(vec![
        ExponentRow { name: "p_c", value: Some(p_c) },
        row("p_fujita(n)", fujita_exponent(nf)),
        row("p_strauss(n)", strauss_classic(nf)),
        row("p_strauss(n,ell,beta)", strauss_generalized(n, ell, beta)),
        row("beta_c", beta_critical(n, ell)),
        ExponentRow { name: "beta_star", value: Some(beta_star(n)) },
        row("q_sharp", q_sharp(n)),
        row("q_bar", q_bar(n, ell)),
        row("theorem1_beta_floor", theorem1_beta_floor(n, ell)),
        ExponentRow { name: "theorem1_ell_limit", value: Some(crucial_ell_threshold(n)) },
        ExponentRow { name: "theorem2_beta_threshold", value: Some(theorem2_beta_threshold(n, ell)) },
        ExponentRow { name: "rho", value: Some(rho(ell, beta)) },
        ExponentRow { name: "mu", value: Some((beta - ell) / (1.0 - ell)) },
        row("linear_rate_l2", rate(2.0)),
        row("linear_rate_l_pc", rate(p_c)),
        row("linear_rate_linf", rate(f64::INFINITY)),
    ])
}
