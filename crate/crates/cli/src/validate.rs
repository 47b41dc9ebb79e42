//! Self-validation: each check compares a production routine against an
//! independent oracle and reports the measured error next to its tolerance.

use std::io::Write;

use serde::Serialize;
use sustain5g_core::model::{
    sustainability_asymptotic, sustainability_closed_form, sustainability_quadrature, NetworkConfig,
};
use sustain5g_core::numerics::reference::ei_reference;
use sustain5g_core::numerics::{ei_asymptotic, ei_series, exp_integral_ei, integrate_adaptive, RealInterval};

use crate::error::{CliError, Result};
use crate::{Format, Suite};

pub const DEFAULT_EI_TOLERANCE: f64 = 1e-9;

/// Ei(1) and Ei(−1) to 17 significant digits.
const EI_ONE: f64 = 1.895_117_816_355_936_8;
const EI_MINUS_ONE: f64 = -0.219_383_934_395_520_27;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(suite: &'static str, name: impl Into<String>, measured: f64, tolerance: f64) -> Check {
    Check {
        suite,
        name: name.into(),
        measured,
        tolerance,
        // NaN never passes.
        pass: measured <= tolerance,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `n` points log-spaced over `[lo, hi]`, both positive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn max_ei_error(xs: impl Iterator<Item = f64>) -> f64 {
    xs.map(|x| match exp_integral_ei(x) {
        Ok(v) => rel(v, ei_reference(x)),
        Err(_) => f64::NAN,
    })
    .fold(0.0, |m: f64, e| if e.is_nan() || m.is_nan() { f64::NAN } else { m.max(e) })
}

fn ei_suite(tol: f64) -> Vec<Check> {
    let grid = log_spaced(1e-3, 30.0, 1000);
    let at = |x: f64| exp_integral_ei(x).unwrap_or(f64::NAN);
    vec![
        check("ei", "positive axis vs reference (1000 pts)", max_ei_error(grid.iter().copied()), tol),
        check("ei", "negative axis vs reference (1000 pts)", max_ei_error(grid.iter().map(|x| -x)), tol),
        check("ei", "Ei(1)", rel(at(1.0), EI_ONE), tol),
        check("ei", "Ei(-1)", rel(at(-1.0), EI_MINUS_ONE), tol),
        check("ei", "series/asymptotic crossover at 40", rel(ei_series(40.0), ei_asymptotic(40.0)), 1e-10),
    ]
}

fn quadrature_suite() -> Vec<Check> {
    let unit = RealInterval::new(0.0, 1.0).expect("valid interval");
    let mut poly_err: f64 = 0.0;
    for k in 0..=13 {
        let v = integrate_adaptive(|x| x.powi(k), unit, 1e-14).map(|r| r.value).unwrap_or(f64::NAN);
        poly_err = poly_err.max(rel(v, 1.0 / (k as f64 + 1.0)));
    }
    let gauss = integrate_adaptive(|x| (-x * x).exp(), RealInterval::new(-10.0, 10.0).expect("valid"), 1e-13)
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    let ei_int = integrate_adaptive(|x| x.exp() / x, RealInterval::new(1.0, 2.0).expect("valid"), 1e-13)
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    vec![
        check("quadrature", "monomials x^0..x^13 on [0,1]", poly_err, 1e-14),
        check("quadrature", "Gaussian on [-10,10] vs sqrt(pi)", rel(gauss, std::f64::consts::PI.sqrt()), 1e-12),
        check("quadrature", "e^x/x on [1,2] vs Ei(2)-Ei(1)", rel(ei_int, ei_reference(2.0) - ei_reference(1.0)), 1e-12),
    ]
}

/// All feasible baseline combinations: β ∈ {2,…,10}, α = β/2, Q ∈ 1..=5, E ∈ 6..=10.
pub fn baseline_grid() -> Vec<NetworkConfig> {
    let mut v = Vec::new();
    for beta in [2.0, 4.0, 6.0, 8.0, 10.0] {
        for q in 1..=5 {
            for e in 6..=10 {
                v.push(NetworkConfig::baseline(beta, q, e));
            }
        }
    }
    v
}

fn closed_form_suite() -> Vec<Check> {
    let grid = baseline_grid();
    let mut gap: f64 = 0.0;
    let mut q_law: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for cfg in &grid {
        let closed = sustainability_closed_form(cfg).unwrap_or(f64::NAN);
        let quad = sustainability_quadrature(cfg).unwrap_or(f64::NAN);
        gap = gap.max(rel(closed, quad));
        let mut q1 = cfg.clone();
        q1.passes = 1;
        let base = sustainability_closed_form(&q1).unwrap_or(f64::NAN);
        q_law = q_law.max(rel(closed * cfg.passes as f64, base));
        asym = asym.max((sustainability_asymptotic(cfg) - cfg.update_rate / cfg.arrival_rate).abs());
    }
    let a1 = sustainability_closed_form(&NetworkConfig::baseline(2.0, 1, 10)).unwrap_or(f64::NAN);
    vec![
        check("closed_form", format!("closed form vs quadrature ({} configs)", grid.len()), gap, 1e-6),
        check("closed_form", "S_N·Q independent of Q", q_law, 1e-12),
        check("closed_form", "asymptotic limit equals α/β", asym, 0.0),
        check("closed_form", "A1, E=10 regression value", rel(a1, 83.083_201_638_809_93), 1e-12),
    ]
}

pub fn run_checks(only: &[Suite], ei_tol: f64) -> Vec<Check> {
    let wanted = |s| only.is_empty() || only.contains(&s);
    let mut checks = Vec::new();
    if wanted(Suite::Ei) {
        checks.extend(ei_suite(ei_tol));
    }
    if wanted(Suite::Quadrature) {
        checks.extend(quadrature_suite());
    }
    if wanted(Suite::ClosedForm) {
        checks.extend(closed_form_suite());
    }
    checks
}

pub fn run(only: &[Suite], ei_tol: f64, format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    if !(ei_tol.is_finite() && ei_tol > 0.0) {
        return Err(CliError::Config(format!("--ei-tol {ei_tol} must be positive")));
    }
    let checks = run_checks(only, ei_tol);
    let text = match format {
        Some(Format::Json) => serde_json::to_string_pretty(&checks).map_err(|e| CliError::Numerical(e.to_string()))? + "\n",
        _ => checks
            .iter()
            .map(|c| {
                format!(
                    "[{}] {:<12} {:<44} measured {:.3e}  tolerance {:.1e}\n",
                    if c.pass { "pass" } else { "FAIL" },
                    c.suite,
                    c.name,
                    c.measured,
                    c.tolerance
                )
            })
            .collect(),
    };
    out.write_all(text.as_bytes()).map_err(|source| CliError::Write {
        path: "<stdout>".into(),
        source,
    })?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::ValidationFailed {
            failed,
            total: checks.len(),
        });
    }
    Ok(())
}
