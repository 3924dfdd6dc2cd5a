//! Outcome metrics: frame success rate, Jain fairness over per-channel
//! reception counts, post-change switch latency, and cross-trial aggregation.
//!
//! "No data" is a first-class value here: FSR over zero attempts and fairness
//! over all-zero counts return `None` instead of NaN, and report emitters
//! render that as an empty CSV field / JSON null.

use std::collections::{BTreeMap, BTreeSet};

/// One decision made by one device: when it was taken, what it selected,
/// and whether the attempt ultimately succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionRecord {
    pub time_ms: u64,
    pub channel: u16,
    pub sf: u8,
    pub success: bool,
}

/// Switch latency of one device after one availability change: how many
/// decision epochs passed before the device settled on the new channel set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchLatency {
    /// 1-based device id.
    pub device: u32,
    /// When the availability changed.
    pub change_ms: u64,
    /// Decision epochs after the change until compliance (see
    /// [`switch_latency`]); for censored records, the number of epochs left.
    pub epochs: u32,
    /// True when the device never settled before the log ran out.
    pub censored: bool,
}

/// Number of consecutive compliant decisions that counts as "settled".
pub const DEFAULT_SETTLE_WINDOW: usize = 5;

/// Cumulative frame success rate; `None` when nothing was attempted.
pub fn fsr(successes: u64, attempts: u64) -> Option<f64> {
    if attempts == 0 {
        None
    } else {
        Some(successes as f64 / attempts as f64)
    }
}

/// Jain fairness index `(sum x)^2 / (n * sum x^2)` over per-channel received
/// counts; `None` when every count is zero. Ranges from `1/n` (all traffic on
/// one channel) to `1` (perfectly even).
pub fn fairness(counts: &[u64]) -> Option<f64> {
    if counts.is_empty() || counts.iter().all(|&c| c == 0) {
        return None;
    }
    let sum: f64 = counts.iter().map(|&c| c as f64).sum();
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    Some(sum * sum / (counts.len() as f64 * sum_sq))
}

/// Per-device switch latencies for every availability change.
///
/// For each change `(time, new_set)` and each device log: if the channel the
/// device was using at the change (its last decision at or before `time`)
/// is still in `new_set`, the latency is 0. Otherwise the latency is the
/// 1-based index of the post-change decision that starts a run of `window`
/// consecutive decisions on channels from `new_set`. A device that never
/// produces such a run is censored with the number of post-change epochs it
/// had left.
pub fn switch_latency(
    logs: &[Vec<DecisionRecord>],
    changes: &[(u64, BTreeSet<u16>)],
    window: usize,
) -> Vec<SwitchLatency> {
    let window = window.max(1);
    let mut out = Vec::new();
    for (dev_idx, log) in logs.iter().enumerate() {
        let device = (dev_idx + 1) as u32;
        for (change_ms, new_set) in changes {
            let current = log
                .iter()
                .rev()
                .find(|d| d.time_ms <= *change_ms)
                .map(|d| d.channel);
            if let Some(ch) = current {
                if new_set.contains(&ch) {
                    out.push(SwitchLatency { device, change_ms: *change_ms, epochs: 0, censored: false });
                    continue;
                }
            }
            let after: Vec<&DecisionRecord> =
                log.iter().filter(|d| d.time_ms > *change_ms).collect();
            let mut settled = None;
            let mut run = 0usize;
            for (i, d) in after.iter().enumerate() {
                if new_set.contains(&d.channel) {
                    run += 1;
                    if run == window {
                        settled = Some(i + 1 - (window - 1)); // start of the run, 1-based
                        break;
                    }
                } else {
                    run = 0;
                }
            }
            match settled {
                Some(epochs) => out.push(SwitchLatency {
                    device,
                    change_ms: *change_ms,
                    epochs: epochs as u32,
                    censored: false,
                }),
                None => out.push(SwitchLatency {
                    device,
                    change_ms: *change_ms,
                    epochs: after.len() as u32,
                    censored: true,
                }),
            }
        }
    }
    out
}

/// Mean switch latency in epochs over all records (censored records count at
/// their observed floor); `None` when there were no availability changes.
pub fn mean_switch_latency(latencies: &[SwitchLatency]) -> Option<f64> {
    if latencies.is_empty() {
        return None;
    }
    Some(latencies.iter().map(|l| l.epochs as f64).sum::<f64>() / latencies.len() as f64)
}

/// Mean, sample standard deviation and 95% confidence half-width (normal
/// approximation) of one metric across trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub ci95: f64,
}

/// Aggregate one metric across trials. `None` for an empty slice; with a
/// single trial the spread fields are zero.
pub fn aggregate(values: &[f64]) -> Option<Aggregate> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_dev = if n >= 2 {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let ci95 = 1.96 * std_dev / (n as f64).sqrt();
    Some(Aggregate { n, mean, std_dev, ci95 })
}

/// Everything one simulation trial measures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsRecord {
    pub attempts: u64,
    pub successes: u64,
    /// Running frame success rate, one point per completed attempt
    /// (completion time, FSR so far).
    pub fsr_series: Vec<(u64, f64)>,
    /// Frames the gateway received, keyed by channel.
    pub received_per_channel: BTreeMap<u16, u64>,
    /// Frames the gateway received, keyed by (channel, spreading factor).
    pub received_per_pair: BTreeMap<(u16, u8), u64>,
    pub switch_latencies: Vec<SwitchLatency>,
}

impl MetricsRecord {
    pub fn fsr(&self) -> Option<f64> {
        fsr(self.successes, self.attempts)
    }

    /// Jain fairness over the given channels; channels with no receptions
    /// count as zero, so concentrating traffic on a subset lowers the score.
    pub fn fairness_over(&self, channels: &[u16]) -> Option<f64> {
        let counts: Vec<u64> = channels
            .iter()
            .map(|ch| self.received_per_channel.get(ch).copied().unwrap_or(0))
            .collect();
        fairness(&counts)
    }

    pub fn mean_switch_latency(&self) -> Option<f64> {
        mean_switch_latency(&self.switch_latencies)
    }
}

// ===========================================================================
// Tests
// ===========================================================================

#[cfg(test)]
mod tests {
    use super::*;

    fn set(chs: &[u16]) -> BTreeSet<u16> {
        chs.iter().copied().collect()
    }

    fn dec(time_ms: u64, channel: u16) -> DecisionRecord {
        DecisionRecord { time_ms, channel, sf: 7, success: true }
    }

    // --- fsr ------------------------------------------------------------

    #[test]
    fn test_fsr_basic() {
        assert_eq!(fsr(3, 4), Some(0.75));
        assert_eq!(fsr(0, 10), Some(0.0));
        assert_eq!(fsr(10, 10), Some(1.0));
    }

    #[test]
    fn test_fsr_no_attempts_is_no_data() {
        assert_eq!(fsr(0, 0), None);
    }

    // --- fairness -------------------------------------------------------

    #[test]
    fn test_fairness_measured_counts() {
        // Three-channel reception counts from a 30-device field run.
        let f = fairness(&[1902, 998, 2045]).unwrap();
        assert!((f - 0.9267).abs() < 0.0005, "fairness = {f}");
    }

    #[test]
    fn test_fairness_even_split_is_one() {
        assert_eq!(fairness(&[7, 7, 7, 7]), Some(1.0));
    }

    #[test]
    fn test_fairness_single_channel_is_floor() {
        let f = fairness(&[9, 0, 0]).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn test_fairness_all_zero_is_no_data() {
        assert_eq!(fairness(&[0, 0, 0]), None);
        assert_eq!(fairness(&[]), None);
    }

    // --- switch latency ---------------------------------------------------

    #[test]
    fn test_switch_latency_already_compliant_is_zero() {
        let logs = vec![vec![dec(100, 3), dec(200, 3), dec(300, 3)]];
        let lat = switch_latency(&logs, &[(150, set(&[3, 5]))], 2);
        assert_eq!(lat, vec![SwitchLatency { device: 1, change_ms: 150, epochs: 0, censored: false }]);
    }

    #[test]
    fn test_switch_latency_counts_epochs_to_settle() {
        // Device sticks to the dead channel for two epochs, then settles.
        let logs = vec![vec![
            dec(0, 1),
            dec(10, 1),
            dec(20, 1),
            dec(30, 5),
            dec(40, 5),
            dec(50, 5),
            dec(60, 5),
            dec(70, 5),
        ]];
        let lat = switch_latency(&logs, &[(5, set(&[3, 5]))], 5);
        assert_eq!(lat[0].epochs, 3);
        assert!(!lat[0].censored);
    }

    #[test]
    fn test_switch_latency_relapse_resets_the_window() {
        let logs = vec![vec![
            dec(0, 1),
            dec(10, 5),
            dec(20, 5),
            dec(30, 1), // relapse: run restarts
            dec(40, 5),
            dec(50, 5),
            dec(60, 5),
        ]];
        let lat = switch_latency(&logs, &[(5, set(&[5]))], 3);
        assert_eq!(lat[0].epochs, 4);
    }

    #[test]
    fn test_switch_latency_censors_when_never_settling() {
        let logs = vec![vec![dec(0, 1), dec(10, 1), dec(20, 1), dec(30, 1)]];
        let lat = switch_latency(&logs, &[(5, set(&[3]))], 5);
        assert_eq!(lat, vec![SwitchLatency { device: 1, change_ms: 5, epochs: 3, censored: true }]);
    }

    #[test]
    fn test_switch_latency_no_changes_no_records() {
        let logs = vec![vec![dec(0, 1)]];
        assert!(switch_latency(&logs, &[], 5).is_empty());
        assert_eq!(mean_switch_latency(&[]), None);
    }

    #[test]
    fn test_mean_switch_latency_averages_epochs() {
        let lat = vec![
            SwitchLatency { device: 1, change_ms: 0, epochs: 2, censored: false },
            SwitchLatency { device: 2, change_ms: 0, epochs: 4, censored: true },
        ];
        assert_eq!(mean_switch_latency(&lat), Some(3.0));
    }

    // --- aggregation ---------------------------------------------------------

    #[test]
    fn test_aggregate_two_trials() {
        let a = aggregate(&[0.7, 0.8]).unwrap();
        assert!((a.mean - 0.75).abs() < 1e-12);
        assert!((a.std_dev - 0.07071067811865478).abs() < 1e-9);
        assert!((a.ci95 - 1.96 * a.std_dev / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn test_aggregate_identical_values_have_zero_spread() {
        let a = aggregate(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(a.mean, 0.5);
        assert_eq!(a.std_dev, 0.0);
        assert_eq!(a.ci95, 0.0);
    }

    #[test]
    fn test_aggregate_empty_and_singleton() {
        assert_eq!(aggregate(&[]), None);
        let a = aggregate(&[0.9]).unwrap();
        assert_eq!(a.mean, 0.9);
        assert_eq!(a.std_dev, 0.0);
    }

    #[test]
    fn test_aggregate_is_deterministic() {
        let vals = [0.1, 0.9, 0.4, 0.4];
        assert_eq!(aggregate(&vals), aggregate(&vals));
    }

    // --- properties -------------------------------------------------------------

    use proptest::prelude::*;

    proptest! {
        /// Fairness is scale invariant: multiplying every count by the same
        /// factor does not change the index.
        #[test]
        fn prop_fairness_scale_invariant(
            counts in proptest::collection::vec(0u64..1000, 1..16),
            scale in 1u64..50,
        ) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let scaled: Vec<u64> = counts.iter().map(|&c| c * scale).collect();
            let a = fairness(&counts).unwrap();
            let b = fairness(&scaled).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        /// Fairness stays within [1/n, 1].
        #[test]
        fn prop_fairness_bounds(counts in proptest::collection::vec(0u64..1000, 1..16)) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let f = fairness(&counts).unwrap();
            let n = counts.len() as f64;
            prop_assert!(f >= 1.0 / n - 1e-12, "f = {f} below floor");
            prop_assert!(f <= 1.0 + 1e-12, "f = {f} above 1");
        }
    }
}
