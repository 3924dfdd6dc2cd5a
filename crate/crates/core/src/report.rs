//! Multi-trial drivers and deterministic report emission.
//!
//! A report is a pure function of `(config, master_seed)`: no timestamps, no
//! hostnames, map keys sorted, floats rounded to six fractional digits. The
//! JSON report embeds the fully resolved config plus the master seed, so any
//! report can be replayed bit-for-bit from the report file alone.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::Policy;
use crate::metrics::{aggregate, Aggregate};
use crate::scenario::{load_config, ScenarioConfig, ScenarioError};
use crate::simcore::{run_simulation, trial_seed, FrameKind, FrameRecord, SimOutput};

// ---------------------------------------------------------------------------
// Trial execution
// ---------------------------------------------------------------------------

/// One completed trial, with everything the simulator produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub trial: u32,
    pub seed: u64,
    pub output: SimOutput,
}

/// Run all of a scenario's trials in parallel. Trials are independent RNG
/// streams, so the result is identical however many worker threads exist.
pub fn run_trials(cfg: &ScenarioConfig, master_seed: u64) -> Result<Vec<TrialRun>, ScenarioError> {
    cfg.validate()?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            run_simulation(cfg, master_seed, trial).map(|output| TrialRun {
                trial,
                seed: trial_seed(master_seed, trial),
                output,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Rounding and hashing
// ---------------------------------------------------------------------------

/// Round to six fractional digits (the precision every emitted float uses).
pub fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float always parses")
}

fn round6_opt(x: Option<f64>) -> Option<f64> {
    x.map(round6)
}

/// FNV-1a 64-bit hash, used to fingerprint the embedded config.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// ---------------------------------------------------------------------------
// Report shapes
// ---------------------------------------------------------------------------

/// Per-trial scalar summary as it appears in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u32,
    pub seed: u64,
    pub attempts: u64,
    pub successes: u64,
    pub fsr: Option<f64>,
    pub fairness: Option<f64>,
    pub mean_switch_latency: Option<f64>,
    /// Reception counts keyed by channel (stringified for JSON).
    pub received_per_channel: BTreeMap<String, u64>,
    /// Reception counts keyed by "channel/sf".
    pub received_per_pair: BTreeMap<String, u64>,
}

impl TrialSummary {
    pub fn new(run: &TrialRun, fairness_channels: &[u16]) -> Self {
        let m = &run.output.metrics;
        TrialSummary {
            trial: run.trial,
            seed: run.seed,
            attempts: m.attempts,
            successes: m.successes,
            fsr: round6_opt(m.fsr()),
            fairness: round6_opt(m.fairness_over(fairness_channels)),
            mean_switch_latency: round6_opt(m.mean_switch_latency()),
            received_per_channel: m
                .received_per_channel
                .iter()
                .map(|(ch, n)| (ch.to_string(), *n))
                .collect(),
            received_per_pair: m
                .received_per_pair
                .iter()
                .map(|((ch, sf), n)| (format!("{ch}/{sf}"), *n))
                .collect(),
        }
    }
}

/// Cross-trial aggregate of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub ci95: f64,
}

impl AggregateSummary {
    fn from_values(values: &[f64]) -> Option<Self> {
        aggregate(values).map(|Aggregate { n, mean, std_dev, ci95 }| AggregateSummary {
            n,
            mean: round6(mean),
            std_dev: round6(std_dev),
            ci95: round6(ci95),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportAggregate {
    pub fsr: Option<AggregateSummary>,
    pub fairness: Option<AggregateSummary>,
    pub mean_switch_latency: Option<AggregateSummary>,
}

fn aggregate_of(trials: &[TrialSummary]) -> ReportAggregate {
    let collect = |f: fn(&TrialSummary) -> Option<f64>| -> Vec<f64> {
        trials.iter().filter_map(f).collect()
    };
    ReportAggregate {
        fsr: AggregateSummary::from_values(&collect(|t| t.fsr)),
        fairness: AggregateSummary::from_values(&collect(|t| t.fairness)),
        mean_switch_latency: AggregateSummary::from_values(&collect(|t| t.mean_switch_latency)),
    }
}

/// The full JSON report for one scenario run. Contains everything needed to
/// reproduce itself: the resolved config and the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub policy: String,
    pub master_seed: u64,
    pub config_hash: String,
    pub config_toml: String,
    pub seeds: Vec<u64>,
    pub trials: Vec<TrialSummary>,
    pub aggregate: ReportAggregate,
}

impl RunReport {
    /// Recover the embedded scenario for replay.
    pub fn config(&self) -> Result<ScenarioConfig, ScenarioError> {
        load_config(&self.config_toml)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Build the report for one scenario run.
pub fn build_report(cfg: &ScenarioConfig, master_seed: u64, runs: &[TrialRun]) -> RunReport {
    let channels = cfg.device_channel_union();
    let trials: Vec<TrialSummary> = runs.iter().map(|r| TrialSummary::new(r, &channels)).collect();
    let aggregate = aggregate_of(&trials);
    let config_toml = cfg.to_toml();
    RunReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: cfg.name.clone(),
        policy: cfg.policy.kind.name().to_string(),
        master_seed,
        config_hash: format!("{:016x}", fnv1a64(config_toml.as_bytes())),
        config_toml,
        seeds: runs.iter().map(|r| r.seed).collect(),
        trials,
        aggregate,
    }
}

// ---------------------------------------------------------------------------
// Tabular rows (CSV and JSON)
// ---------------------------------------------------------------------------

pub const CSV_HEADER: &str =
    "axis_value,policy,seed,attempts,successes,fsr,fairness,mean_switch_latency";

/// One row of tabular output: a single trial of a single (axis point,
/// policy) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub axis_value: String,
    pub policy: String,
    pub seed: u64,
    pub attempts: u64,
    pub successes: u64,
    pub fsr: Option<f64>,
    pub fairness: Option<f64>,
    pub mean_switch_latency: Option<f64>,
}

pub fn rows_from_runs(axis_value: &str, cfg: &ScenarioConfig, runs: &[TrialRun]) -> Vec<ReportRow> {
    let channels = cfg.device_channel_union();
    runs.iter()
        .map(|r| {
            let s = TrialSummary::new(r, &channels);
            ReportRow {
                axis_value: axis_value.to_string(),
                policy: cfg.policy.kind.name().to_string(),
                seed: s.seed,
                attempts: s.attempts,
                successes: s.successes,
                fsr: s.fsr,
                fairness: s.fairness,
                mean_switch_latency: s.mean_switch_latency,
            }
        })
        .collect()
}

/// Numeric-aware total order: numeric axis values sort by value, everything
/// else lexically after the numbers.
fn axis_key(v: &str) -> (u8, f64, String) {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => (0, x, String::new()),
        _ => (1, 0.0, v.to_string()),
    }
}

pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        let (na, xa, sa) = axis_key(&a.axis_value);
        let (nb, xb, sb) = axis_key(&b.axis_value);
        na.cmp(&nb)
            .then(xa.partial_cmp(&xb).expect("axis keys are finite"))
            .then(sa.cmp(&sb))
            .then(a.policy.cmp(&b.policy))
            .then(a.seed.cmp(&b.seed))
    });
}

fn csv_field(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) => format!("{x:.6}"),
    }
}

/// Render rows as CSV with the fixed header. Missing metrics are empty
/// fields, never NaN.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.axis_value,
            r.policy,
            r.seed,
            r.attempts,
            r.successes,
            csv_field(r.fsr),
            csv_field(r.fairness),
            csv_field(r.mean_switch_latency),
        ));
    }
    out
}

/// Rows as a JSON document carrying the same values as the CSV (nulls where
/// the CSV has empty fields) plus reproduction metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub rows: Vec<ReportRow>,
}

pub fn sweep_report(master_seed: u64, rows: Vec<ReportRow>) -> SweepReport {
    SweepReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed,
        rows,
    }
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

// ---------------------------------------------------------------------------
// Sweep driver
// ---------------------------------------------------------------------------

/// One point on a sweep axis: a label and the scenario to run there.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis_value: String,
    pub cfg: ScenarioConfig,
}

/// Run every (axis point × policy) cell and return sorted rows. The per-cell
/// configs only differ from the given points in `policy.kind`.
pub fn run_sweep(
    points: &[SweepPoint],
    policies: &[Policy],
    master_seed: u64,
) -> Result<Vec<ReportRow>, ScenarioError> {
    let mut rows = Vec::new();
    for point in points {
        for &policy in policies {
            let mut cfg = point.cfg.clone();
            cfg.policy.kind = policy;
            let runs = run_trials(&cfg, master_seed)?;
            rows.extend(rows_from_runs(&point.axis_value, &cfg, &runs));
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Frame event log
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FrameLine<'a> {
    trial: u32,
    time_ms: u64,
    kind: &'a str,
    source: u32,
    channel: u16,
    sf: Option<u8>,
    duration_ms: u64,
    decoded: Option<bool>,
}

/// Render one trial's frames as JSON Lines, one frame per line.
pub fn frames_to_jsonl(trial: u32, frames: &[FrameRecord]) -> String {
    let mut out = String::new();
    for f in frames {
        let line = FrameLine {
            trial,
            time_ms: f.time_ms,
            kind: match f.kind {
                FrameKind::Lora => "lora",
                FrameKind::WiSun => "wisun",
            },
            source: f.source,
            channel: f.channel,
            sf: f.sf,
            duration_ms: f.duration_ms,
            decoded: f.decoded,
        };
        out.push_str(&serde_json::to_string(&line).expect("frame serialization cannot fail"));
        out.push('\n');
    }
    out
}

// ===========================================================================
// Tests
// ===========================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{builtin, HorizonConfig};

    fn tiny_cfg() -> ScenarioConfig {
        let mut cfg = builtin("ch-static").unwrap();
        cfg.trials = 3;
        cfg.horizon = HorizonConfig { wall_min: None, attempts: Some(10) };
        cfg.set_device_count(4).unwrap();
        cfg
    }

    #[test]
    fn test_round6_truncates_noise() {
        assert_eq!(round6(0.123456789), 0.123457);
        assert_eq!(round6(0.5), 0.5);
        assert_eq!(round6(1.0 / 3.0), 0.333333);
        assert_eq!(round6(0.0), 0.0);
    }

    #[test]
    fn test_fnv1a64_known_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn test_csv_header_is_pinned() {
        assert_eq!(
            CSV_HEADER,
            "axis_value,policy,seed,attempts,successes,fsr,fairness,mean_switch_latency"
        );
    }

    #[test]
    fn test_run_trials_is_ordered_and_deterministic() {
        let cfg = tiny_cfg();
        let a = run_trials(&cfg, 42).unwrap();
        let b = run_trials(&cfg, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for (i, run) in a.iter().enumerate() {
            assert_eq!(run.trial, i as u32);
            assert_eq!(run.seed, trial_seed(42, i as u32));
        }
        assert_ne!(a[0].output, a[1].output, "trials see different randomness");
    }

    #[test]
    fn test_report_embeds_replayable_config() {
        let cfg = tiny_cfg();
        let runs = run_trials(&cfg, 7).unwrap();
        let report = build_report(&cfg, 7, &runs);
        assert_eq!(report.scenario, "ch-static");
        assert_eq!(report.policy, "tow");
        assert_eq!(report.seeds.len(), 3);
        assert_eq!(
            report.config_hash,
            format!("{:016x}", fnv1a64(report.config_toml.as_bytes()))
        );

        // Full replay loop: parse the embedded config, rerun, rebuild.
        let recovered = report.config().unwrap();
        assert_eq!(recovered, cfg);
        let replay_runs = run_trials(&recovered, report.master_seed).unwrap();
        let replay = build_report(&recovered, report.master_seed, &replay_runs);
        assert_eq!(report.to_json(), replay.to_json());
    }

    #[test]
    fn test_report_json_round_trips() {
        let cfg = tiny_cfg();
        let runs = run_trials(&cfg, 3).unwrap();
        let report = build_report(&cfg, 3, &runs);
        let parsed: RunReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn test_rows_sort_numerically_then_by_policy_and_seed() {
        let row = |axis: &str, policy: &str, seed: u64| ReportRow {
            axis_value: axis.into(),
            policy: policy.into(),
            seed,
            attempts: 1,
            successes: 1,
            fsr: Some(1.0),
            fairness: None,
            mean_switch_latency: None,
        };
        let mut rows = vec![
            row("10", "tow", 5),
            row("2", "tow", 9),
            row("2", "egreedy", 1),
            row("10", "random", 1),
            row("2", "tow", 3),
        ];
        sort_rows(&mut rows);
        let order: Vec<(String, String, u64)> = rows
            .iter()
            .map(|r| (r.axis_value.clone(), r.policy.clone(), r.seed))
            .collect();
        assert_eq!(
            order,
            vec![
                ("2".into(), "egreedy".into(), 1),
                ("2".into(), "tow".into(), 3),
                ("2".into(), "tow".into(), 9),
                ("10".into(), "random".into(), 1),
                ("10".into(), "tow".into(), 5),
            ]
        );
    }

    #[test]
    fn test_csv_renders_missing_metrics_as_empty() {
        let rows = vec![ReportRow {
            axis_value: "ch-static".into(),
            policy: "tow".into(),
            seed: 11,
            attempts: 0,
            successes: 0,
            fsr: None,
            fairness: None,
            mean_switch_latency: None,
        }];
        let csv = rows_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("ch-static,tow,11,0,0,,,"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn test_csv_values_have_six_digits() {
        let rows = vec![ReportRow {
            axis_value: "5".into(),
            policy: "random".into(),
            seed: 1,
            attempts: 3,
            successes: 2,
            fsr: Some(2.0 / 3.0),
            fairness: Some(1.0),
            mean_switch_latency: None,
        }];
        let csv = rows_to_csv(&rows);
        assert!(csv.lines().nth(1).unwrap().contains("0.666667,1.000000,"));
    }

    #[test]
    fn test_no_attempts_yields_null_metrics() {
        // A device whose first epoch falls beyond the wall clock never
        // attempts anything.
        let mut cfg = builtin("ch-static").unwrap();
        cfg.trials = 1;
        cfg.set_device_count(1).unwrap();
        cfg.devices[0].ti_ms = 600_000;
        cfg.devices[0].phase_ms = Some(120_000);
        cfg.horizon.attempts = None;
        cfg.horizon.wall_min = Some(1);
        let runs = run_trials(&cfg, 5).unwrap();
        let report = build_report(&cfg, 5, &runs);
        assert_eq!(report.trials[0].attempts, 0);
        assert_eq!(report.trials[0].fsr, None);
        assert_eq!(report.trials[0].fairness, None);
        assert!(report.aggregate.fsr.is_none());
        let json = report.to_json();
        assert!(json.contains("\"fsr\": null"), "missing metrics serialize as null");
    }

    #[test]
    fn test_sweep_rows_cover_all_cells() {
        let mut base = builtin("ch-static").unwrap();
        base.trials = 2;
        base.horizon = HorizonConfig { wall_min: None, attempts: Some(5) };
        let points: Vec<SweepPoint> = [2u32, 5]
            .iter()
            .map(|&m| {
                let mut cfg = base.clone();
                cfg.set_device_count(m).unwrap();
                SweepPoint { axis_value: m.to_string(), cfg }
            })
            .collect();
        let rows = run_sweep(&points, &[Policy::Tow, Policy::Random], 9).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2);
        assert!(rows.windows(2).all(|w| {
            let ka = (w[0].axis_value.parse::<f64>().unwrap(), w[0].policy.clone(), w[0].seed);
            let kb = (w[1].axis_value.parse::<f64>().unwrap(), w[1].policy.clone(), w[1].seed);
            ka <= kb
        }));
        // Same master seed means the same trial seeds in every cell.
        let seeds: std::collections::BTreeSet<u64> = rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 2);
    }

    #[test]
    fn test_frames_jsonl_shape() {
        let mut cfg = builtin("ch-static").unwrap();
        cfg.trials = 1;
        cfg.set_device_count(2).unwrap();
        cfg.horizon = HorizonConfig { wall_min: None, attempts: Some(2) };
        let runs = run_trials(&cfg, 1).unwrap();
        let jsonl = frames_to_jsonl(0, &runs[0].output.frames);
        let first = jsonl.lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(first).unwrap();
        assert_eq!(v["trial"], 0);
        assert_eq!(v["kind"], "lora");
        assert!(v["decoded"].is_boolean());
        assert_eq!(jsonl.lines().count(), runs[0].output.frames.len());
    }
}
