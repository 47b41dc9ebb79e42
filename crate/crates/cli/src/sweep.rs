//! Parameter sweeps over (β, Q, E).
//!
//! Column set and order are fixed by [`CSV_HEADER`]. Numbers are written as
//! `{:.14e}` (15 significant digits, scientific) so golden files compare
//! byte-for-byte. Rows are ordered by β index, then Q, then E.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sustain5g_core::model::{
    message_overhead, signaling_overhead, sustainability_asymptotic, sustainability_closed_form,
    sustainability_quadrature, ModelError, NetworkConfig,
};

use crate::error::{CliError, Result};

pub const CSV_HEADER: [&str; 13] = [
    "scenario",
    "arrival_rate",
    "update_rate",
    "passes",
    "n_entities",
    "feasible",
    "violation",
    "s_n_closed_form",
    "s_n_quadrature",
    "s_n_asymptotic",
    "o_s",
    "m_o",
    "note",
];

/// Sweep axes. Either `update_rates` pairs one α with each β, or every α is
/// `alpha_ratio · β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub arrival_rates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update_rates: Option<Vec<f64>>,
    #[serde(default = "default_ratio")]
    pub alpha_ratio: f64,
    pub passes: Vec<u32>,
    pub entities: Vec<u32>,
}

fn default_ratio() -> f64 {
    0.5
}

impl Default for SweepSpec {
    /// β ∈ {2, 4, 6, 8, 10}, α = β/2, Q ∈ 1..=5, E ∈ 1..=10.
    fn default() -> Self {
        Self {
            arrival_rates: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            update_rates: None,
            alpha_ratio: default_ratio(),
            passes: (1..=5).collect(),
            entities: (1..=10).collect(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(format!("malformed sweep: {m}")));
        if self.arrival_rates.is_empty() || self.passes.is_empty() || self.entities.is_empty() {
            return bad("arrival_rates, passes and entities must be non-empty".into());
        }
        if let Some(alphas) = &self.update_rates {
            if alphas.len() != self.arrival_rates.len() {
                return bad(format!(
                    "{} update_rates for {} arrival_rates",
                    alphas.len(),
                    self.arrival_rates.len()
                ));
            }
        } else if !(self.alpha_ratio.is_finite() && self.alpha_ratio > 0.0) {
            return bad(format!("alpha_ratio = {} must be positive", self.alpha_ratio));
        }
        if let Some(x) = self.arrival_rates.iter().chain(self.update_rates.iter().flatten()).find(|x| !x.is_finite()) {
            return bad(format!("non-finite rate {x}"));
        }
        Ok(())
    }

    fn update_rate(&self, i: usize) -> f64 {
        match &self.update_rates {
            Some(alphas) => alphas[i],
            None => self.alpha_ratio * self.arrival_rates[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: String,
    pub arrival_rate: f64,
    pub update_rate: f64,
    pub passes: u32,
    pub n_entities: u32,
    pub feasible: bool,
    pub violation: String,
    pub s_n_closed_form: Option<f64>,
    pub s_n_quadrature: Option<f64>,
    pub s_n_asymptotic: Option<f64>,
    pub o_s: Option<f64>,
    pub m_o: Option<f64>,
    pub note: String,
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.14e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

impl SweepRow {
    pub fn csv_record(&self) -> [String; 13] {
        [
            self.scenario.clone(),
            fmt_num(self.arrival_rate),
            fmt_num(self.update_rate),
            self.passes.to_string(),
            self.n_entities.to_string(),
            self.feasible.to_string(),
            self.violation.clone(),
            fmt_opt(self.s_n_closed_form),
            fmt_opt(self.s_n_quadrature),
            fmt_opt(self.s_n_asymptotic),
            fmt_opt(self.o_s),
            fmt_opt(self.m_o),
            self.note.clone(),
        ]
    }
}

fn evaluate(scenario: String, cfg: NetworkConfig) -> Result<SweepRow> {
    let mut row = SweepRow {
        scenario,
        arrival_rate: cfg.arrival_rate,
        update_rate: cfg.update_rate,
        passes: cfg.passes,
        n_entities: cfg.n_entities,
        feasible: false,
        violation: String::new(),
        s_n_closed_form: None,
        s_n_quadrature: None,
        s_n_asymptotic: None,
        o_s: None,
        m_o: None,
        note: String::new(),
    };
    let violations = cfg.violations();
    if !violations.is_empty() {
        row.violation = violations.iter().map(|c| c.as_str()).collect::<Vec<_>>().join("; ");
        return Ok(row);
    }
    row.feasible = true;
    row.s_n_closed_form = Some(sustainability_closed_form(&cfg)?);
    row.s_n_quadrature = Some(sustainability_quadrature(&cfg)?);
    row.s_n_asymptotic = Some(sustainability_asymptotic(&cfg));
    match signaling_overhead(&cfg) {
        Ok(o) => {
            row.o_s = Some(o.value);
            row.m_o = Some(message_overhead(&cfg)?);
        }
        Err(ModelError::Domain(_)) => row.note = "α′ ∉ (0,1)".into(),
        Err(e) => return Err(e.into()),
    }
    Ok(row)
}

/// Evaluates every combination, in parallel, returning rows in axis order.
/// `base` supplies everything the axes do not set.
pub fn run_sweep(base: &NetworkConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut combos = Vec::new();
    for (i, &beta) in spec.arrival_rates.iter().enumerate() {
        for &q in &spec.passes {
            for &e in &spec.entities {
                let mut cfg = base.clone();
                cfg.arrival_rate = beta;
                cfg.update_rate = spec.update_rate(i);
                cfg.passes = q;
                cfg.n_entities = e;
                combos.push((format!("A{}", i + 1), cfg));
            }
        }
    }
    combos.into_par_iter().map(|(s, cfg)| evaluate(s, cfg)).collect()
}

pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_rows() -> Vec<SweepRow> {
        run_sweep(&NetworkConfig::baseline(2.0, 1, 10), &SweepSpec::default()).unwrap()
    }

    #[test]
    fn default_sweep_shape() {
        let rows = default_rows();
        assert_eq!(rows.len(), 250);
        assert_eq!(rows.iter().filter(|r| r.feasible).count(), 125);
        assert!(rows.iter().filter(|r| r.feasible).all(|r| r.n_entities >= 6));
        for r in rows.iter().filter(|r| r.n_entities == 3) {
            assert!(!r.feasible);
            assert!(r.violation.contains("E − n⁻¹ > 0"));
            assert!(r.s_n_closed_form.is_none());
        }
        assert_eq!(rows[0].scenario, "A1");
        assert_eq!(rows[249].scenario, "A5");
    }

    #[test]
    fn sustainability_decreases_down_q() {
        let rows = default_rows();
        for scenario in ["A1", "A2", "A3", "A4", "A5"] {
            for e in 6..=10 {
                let col: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.scenario == scenario && r.n_entities == e)
                    .map(|r| r.s_n_closed_form.unwrap())
                    .collect();
                assert_eq!(col.len(), 5);
                assert!(col.windows(2).all(|w| w[1] < w[0]));
            }
        }
    }

    #[test]
    fn last_scenario_has_undefined_overhead() {
        let rows = default_rows();
        for r in rows.iter().filter(|r| r.scenario == "A5" && r.feasible) {
            assert!(r.o_s.is_none() && r.m_o.is_none());
            assert_eq!(r.note, "α′ ∉ (0,1)");
        }
        assert!(rows.iter().filter(|r| r.scenario == "A1" && r.feasible).all(|r| r.o_s.is_some()));
    }

    #[test]
    fn malformed_specs_are_config_errors() {
        let base = NetworkConfig::baseline(2.0, 1, 10);
        let mut s = SweepSpec::default();
        s.passes.clear();
        assert_eq!(run_sweep(&base, &s).unwrap_err().code(), 2);
        let mut s = SweepSpec::default();
        s.update_rates = Some(vec![1.0]);
        assert_eq!(run_sweep(&base, &s).unwrap_err().code(), 2);
    }

    #[test]
    fn csv_formatting_is_pinned() {
        assert_eq!(fmt_num(83.083_201_638_809_93), "8.30832016388099e1");
        assert_eq!(fmt_num(0.5), "5.00000000000000e-1");
        let mut buf = Vec::new();
        write_csv(&default_rows()[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&(CSV_HEADER.join(",") + "\n")));
        assert!(!text.contains('\r'));
    }
}
