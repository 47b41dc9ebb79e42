use std::io::Write;

use serde::Serialize;
use sustain5g_core::keychain::{root_seed_from_u64, KeyHierarchy, RefreshPolicy};
use sustain5g_core::model::{
    check_feasibility, failsafe_point, key_utilization_window, message_overhead, signaling_overhead_with,
    sustainability_report, Criterion, FailSafeReport, ModelError, NetworkConfig, OptimizationConstraints,
    OverheadForm, SustainabilityReport,
};
use sustain5g_core::sim::{compare_q_sweep, compare_to_analytic, run_sim, ComparisonReport, SimStats};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::manifest::OutputDir;
use crate::sweep::{fmt_num, run_sweep, write_csv};
use crate::{Common, CriterionArg, Format, Interpretation};

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Write {
        path: "<stdout>".into(),
        source: e,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => stdout_err(io),
        other => CliError::Numerical(format!("{other:?}")),
    }
}

fn apply_interpretation(cfg: &mut NetworkConfig, interp: Option<Interpretation>, flags: &mut Vec<String>) {
    if let Some(i) = interp {
        cfg.overhead_interpretation = i.into();
        flags.push(format!("--interpretation {}", cfg.overhead_interpretation.as_str()));
    }
}

/// A quantity that is undefined for some valid configurations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaybeValue {
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MaybeValue {
    fn from_model(r: std::result::Result<f64, ModelError>) -> Result<Self> {
        match r {
            Ok(v) => Ok(Self { value: Some(v), note: None }),
            Err(ModelError::Domain(msg)) => Ok(Self { value: None, note: Some(msg) }),
            Err(e) => Err(e.into()),
        }
    }

    fn text(&self) -> String {
        match (self.value, &self.note) {
            (Some(v), _) => fmt_num(v),
            (None, Some(n)) => format!("n/a ({n})"),
            (None, None) => "n/a".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub network: NetworkConfig,
    pub sustainability: SustainabilityReport,
    pub o_s_integral: MaybeValue,
    pub o_s_printed: MaybeValue,
    /// Under the configured overhead interpretation.
    pub m_o: MaybeValue,
    pub feasible: bool,
    pub violations: Vec<String>,
    /// ⌊α·(t₂ − t₁)⌋, used as the observed update count for U_N ≥ U′_N.
    pub expected_updates: u64,
}

impl AnalyzeReport {
    pub fn build(cfg: &NetworkConfig, constraints: Option<&OptimizationConstraints>) -> Result<Self> {
        let sustainability = sustainability_report(cfg)?;
        let os = |form| MaybeValue::from_model(signaling_overhead_with(cfg, form).map(|o| o.value));
        let expected_updates = (cfg.update_rate * (cfg.t2 - cfg.t1)).floor() as u64;
        let violations = match constraints {
            Some(opt) => check_feasibility(cfg, opt, expected_updates, None),
            None => cfg.violations(),
        };
        Ok(Self {
            network: cfg.clone(),
            sustainability,
            o_s_integral: os(OverheadForm::Integral)?,
            o_s_printed: os(OverheadForm::Printed)?,
            m_o: MaybeValue::from_model(message_overhead(cfg))?,
            feasible: violations.is_empty(),
            violations: violations.iter().map(|c| c.as_str().to_string()).collect(),
            expected_updates,
        })
    }

    pub fn text(&self) -> String {
        let c = &self.network;
        let s = &self.sustainability;
        let verdict = if self.feasible {
            "feasible".to_string()
        } else {
            format!("infeasible: {}", self.violations.join("; "))
        };
        let rows = [
            ("N, E, n⁻¹, Q", format!("{}, {}, {}, {}", c.n_devices, c.n_entities, c.reachable_hops_inv, c.passes)),
            ("α, β", format!("{}, {}", c.update_rate, c.arrival_rate)),
            ("window", format!("[{}, {}]", c.t1, c.t2)),
            ("S_N closed form", fmt_num(s.closed_form)),
            ("S_N quadrature", fmt_num(s.quadrature)),
            ("S_N asymptotic", fmt_num(s.asymptotic)),
            ("relative gap", fmt_num(s.relative_gap)),
            ("O_S integral", self.o_s_integral.text()),
            ("O_S printed", self.o_s_printed.text()),
            (
                if c.overhead_interpretation == OverheadForm::Integral { "M_O integral" } else { "M_O printed" },
                self.m_o.text(),
            ),
            ("feasibility", verdict),
        ];
        rows.iter().map(|(k, v)| format!("{k:<16} {v}\n")).collect()
    }
}

pub fn analyze(common: &Common, interp: Option<Interpretation>, out: &mut dyn Write) -> Result<()> {
    let file = RunConfig::load(common.config.as_deref())?;
    let mut cfg = file.network_or_error()?;
    let mut flags = Vec::new();
    apply_interpretation(&mut cfg, interp, &mut flags);
    let report = AnalyzeReport::build(&cfg, file.constraints.as_ref())?;

    let text = match common.format {
        Some(Format::Json) => to_json(&report)?,
        _ => report.text(),
    };
    out.write_all(text.as_bytes()).map_err(stdout_err)?;

    if let Some(dir) = &common.out {
        let mut od = OutputDir::create(dir)?;
        od.write_json("analyze.json", &report)?;
        let resolved = RunConfig {
            network: Some(cfg),
            ..file
        };
        od.finish("analyze", common.config.as_deref(), None, flags, resolved)?;
    }
    Ok(())
}

pub fn sweep(common: &Common, interp: Option<Interpretation>, out: &mut dyn Write) -> Result<()> {
    let file = RunConfig::load(common.config.as_deref())?;
    let mut base = file.network_or_default();
    let mut flags = Vec::new();
    apply_interpretation(&mut base, interp, &mut flags);
    let spec = file.sweep.clone().unwrap_or_default();
    let rows = run_sweep(&base, &spec)?;

    let json = common.format == Some(Format::Json);
    let body = if json {
        to_json(&rows)?.into_bytes()
    } else {
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).map_err(csv_err)?;
        buf
    };

    match &common.out {
        Some(dir) => {
            let mut od = OutputDir::create(dir)?;
            let path = od.write(if json { "sweep.json" } else { "sweep.csv" }, &body)?;
            let resolved = RunConfig {
                network: Some(base),
                sweep: Some(spec),
                ..file
            };
            od.finish("sweep", common.config.as_deref(), None, flags, resolved)?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display()).map_err(stdout_err)?;
        }
        None => out.write_all(&body).map_err(stdout_err)?,
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SimulateOutput<'a> {
    stats: &'a SimStats,
    comparison: &'a ComparisonReport,
}

fn comparison_text(report: &ComparisonReport) -> String {
    let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_else(|| "-".into());
    let mut s = format!(
        "{:<26} {:<22} {:<22} {:<8} {:<20} {:<6} {}\n",
        "row", "empirical", "analytic", "z", "rule", "status", "note"
    );
    for r in &report.rows {
        let z = r.z_score.map(|z| format!("{z:.2}")).unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{:<26} {:<22} {:<22} {:<8} {:<20} {:<6} {}\n",
            r.name,
            fmt_num(r.empirical),
            opt(r.analytic),
            z,
            if r.rule.is_empty() { "-" } else { &r.rule },
            r.status.as_str(),
            r.note
        ));
    }
    s
}

fn check_policy(p: &RefreshPolicy) -> Result<()> {
    if p.weights.iter().all(|w| w.is_finite() && *w >= 0.0) && p.threshold.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config("policy weights must be finite and non-negative, threshold finite".into()))
    }
}

pub fn simulate(common: &Common, seed: Option<u64>, out: &mut dyn Write) -> Result<()> {
    let file = RunConfig::load(common.config.as_deref())?;
    let cfg = file.network_or_default();
    let mut section = file.sim.clone().unwrap_or_default();
    let sim = section.resolve(seed)?;
    section.seed = Some(sim.seed);
    let policy = file.policy.clone().unwrap_or_default();
    check_policy(&policy)?;

    let root = root_seed_from_u64(sim.seed);
    let mut hierarchy = KeyHierarchy::build(root);
    let stats = run_sim(&cfg, &sim, &mut hierarchy, &policy)?;
    let mut comparison = compare_to_analytic(&stats, &cfg)?;
    if !section.q_sweep.is_empty() {
        comparison
            .rows
            .extend(compare_q_sweep(&cfg, &sim, &policy, root, &section.q_sweep)?.rows);
    }

    let text = match common.format {
        Some(Format::Json) => to_json(&SimulateOutput {
            stats: &stats,
            comparison: &comparison,
        })?,
        _ => format!(
            "arrivals {}  lost {}  authentications {}  key updates {}  messages {}\n\n{}",
            stats.arrival_count,
            stats.lost_count,
            stats.auth_count,
            stats.key_update_count,
            stats.message_total,
            comparison_text(&comparison)
        ),
    };
    out.write_all(text.as_bytes()).map_err(stdout_err)?;

    if let Some(dir) = &common.out {
        let mut od = OutputDir::create(dir)?;
        od.write_json("sim_stats.json", &stats)?;
        od.write_json("comparison.json", &comparison)?;
        let mut traces = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        for b in &stats.traces {
            traces.serialize(b).map_err(csv_err)?;
        }
        let bytes = traces.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?;
        od.write("traces.csv", &bytes)?;
        let flags = seed.map(|s| vec![format!("--seed {s}")]).unwrap_or_default();
        let resolved = RunConfig {
            network: Some(cfg),
            sim: Some(section),
            policy: Some(policy),
            ..file
        };
        od.finish("simulate", common.config.as_deref(), Some(sim.seed), flags, resolved)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailsafeOutput {
    pub report: FailSafeReport,
    pub utilization_time: Option<MaybeValue>,
}

fn scan_csv(report: &FailSafeReport) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["t", "value"]).map_err(csv_err)?;
    for &(t, v) in &report.scan_points {
        w.write_record([fmt_num(t), fmt_num(v)]).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn failsafe(
    common: &Common,
    criterion: CriterionArg,
    interp: Option<Interpretation>,
    out: &mut dyn Write,
) -> Result<()> {
    let file = RunConfig::load(common.config.as_deref())?;
    let mut cfg = file.network_or_error()?;
    let mut flags = vec![format!("--criterion {}", Criterion::from(criterion))];
    apply_interpretation(&mut cfg, interp, &mut flags);
    let report = failsafe_point(&cfg, criterion.into())?;

    let utilization_time = file.constraints.as_ref().map(|opt| match key_utilization_window(opt, &report) {
        Ok(t_u) => MaybeValue { value: Some(t_u), note: None },
        Err(e) => MaybeValue {
            value: None,
            note: Some(e.to_string()),
        },
    });
    let output = FailsafeOutput {
        report,
        utilization_time,
    };
    let report = &output.report;

    let body = match common.format {
        Some(Format::Json) => to_json(&output)?.into_bytes(),
        Some(Format::Csv) => scan_csv(report)?,
        None => {
            let mut s = format!("criterion        {}\n", report.criterion);
            s.push_str(&format!("threshold        {}\n", fmt_num(report.threshold_used)));
            match report.fail_safe_time {
                Some(t) => s.push_str(&format!("F_S              {}\n", fmt_num(t))),
                None => s.push_str(&format!(
                    "F_S              none\nnote             criterion already fails at t₁ = {}\n",
                    cfg.t1
                )),
            }
            if let Some(t_u) = &output.utilization_time {
                s.push_str(&format!("t_u              {}\n", t_u.text()));
            }
            s.into_bytes()
        }
    };
    out.write_all(&body).map_err(stdout_err)?;

    if let Some(dir) = &common.out {
        let mut od = OutputDir::create(dir)?;
        od.write_json("failsafe.json", &output)?;
        od.write("scan.csv", &scan_csv(report)?)?;
        let resolved = RunConfig {
            network: Some(cfg),
            ..file
        };
        od.finish("failsafe", common.config.as_deref(), None, flags, resolved)?;
    }
    Ok(())
}
