//! Scenario configuration: the TOML schema, validation, and builtin presets.
//!
//! A scenario describes one experiment: a fleet of uplink devices (channel
//! set, SF set, transmit interval, retry budget), a gateway with a possibly
//! time-varying set of listening channels, optional cross-technology
//! interferers, the adjacent-channel interference kernel, the horizon, and
//! the learning policy with its parameters.
//!
//! Validation reports *every* violation at once (field path + message), not
//! just the first; a config that took four edits to fix one error at a time
//! is a config nobody enjoys debugging.
//!
//! All builtin presets round-trip through [`ScenarioConfig::to_toml`] and
//! [`load_config`] unchanged.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::airtime::{Bandwidth, InterferenceKernel, DEFAULT_G1, DEFAULT_G2, DEFAULT_G3};
use crate::bandit::{Policy, PolicyParams, DEFAULT_OMEGA_MAX};

pub const MS_PER_MIN: u64 = 60_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid configuration:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<String>),
    #[error("unknown preset `{name}`; available: {}", available.join(", "))]
    UnknownPreset { name: String, available: Vec<String> },
    #[error("{0}")]
    Unsupported(String),
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_khz: f64,
    /// Number of independent trials (seeds) a report covers by default.
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub interference: InterferenceConfig,
    #[serde(default)]
    pub mac: MacConfig,
    #[serde(default)]
    pub collision: CollisionConfig,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wisun: Option<WiSunConfig>,
    #[serde(default)]
    pub devices: Vec<DeviceGroup>,
}

fn default_bandwidth() -> f64 {
    125.0
}

fn default_trials() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default = "default_policy_kind")]
    pub kind: Policy,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_alpha")]
    pub beta: f64,
    #[serde(default = "default_amp")]
    pub amp: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
}

fn default_policy_kind() -> Policy {
    Policy::Tow
}
fn default_alpha() -> f64 {
    0.9
}
fn default_amp() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_omega_max() -> f64 {
    DEFAULT_OMEGA_MAX
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            kind: default_policy_kind(),
            alpha: default_alpha(),
            beta: default_alpha(),
            amp: default_amp(),
            epsilon: default_epsilon(),
            omega_max: default_omega_max(),
        }
    }
}

impl PolicyConfig {
    pub fn params(&self) -> PolicyParams {
        PolicyParams {
            alpha: self.alpha,
            beta: self.beta,
            amp: self.amp,
            epsilon: self.epsilon,
            omega_max: self.omega_max,
        }
    }
}

/// Exactly one of `wall_min` / `attempts` must be set: run for a fixed wall
/// time, or until every device has completed a fixed number of attempts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_min: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    WallMs(u64),
    Attempts(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceConfig {
    #[serde(default = "default_radius")]
    pub radius: u8,
    #[serde(default = "default_g1")]
    pub g1: f64,
    #[serde(default = "default_g2")]
    pub g2: f64,
    #[serde(default = "default_g3")]
    pub g3: f64,
}

fn default_radius() -> u8 {
    3
}
fn default_g1() -> f64 {
    DEFAULT_G1
}
fn default_g2() -> f64 {
    DEFAULT_G2
}
fn default_g3() -> f64 {
    DEFAULT_G3
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        InterferenceConfig { radius: 3, g1: DEFAULT_G1, g2: DEFAULT_G2, g3: DEFAULT_G3 }
    }
}

impl InterferenceConfig {
    pub fn kernel(&self) -> Result<InterferenceKernel, crate::airtime::AirtimeError> {
        InterferenceKernel::with_radius(self.radius, self.g1, self.g2, self.g3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacConfig {
    /// Gap between a frame's end and the next retry's clear-channel check.
    #[serde(default = "default_ack_wait")]
    pub ack_wait_ms: u64,
    /// Upper bound of the uniform backoff drawn after a busy channel check.
    #[serde(default = "default_backoff_max")]
    pub backoff_max_ms: u64,
}

fn default_ack_wait() -> u64 {
    100
}
fn default_backoff_max() -> u64 {
    500
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig { ack_wait_ms: 100, backoff_max_ms: 500 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionConfig {
    /// When set, the earlier-starting frame of a destructive same-channel
    /// overlap survives (simultaneous starts still destroy both).
    #[serde(default)]
    pub capture: bool,
    /// When set, co-channel frames with *different* SFs destroy each other
    /// too; by default different SFs are treated as orthogonal.
    #[serde(default)]
    pub inter_sf: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default)]
    pub channels: Vec<u16>,
    /// Explicit `(channel, sf)` demodulator bank; defaults to every gateway
    /// channel crossed with every SF the device fleet can use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demodulators: Option<Vec<(u16, u8)>>,
    /// Time-varying listening channels; defaults to all gateway channels for
    /// the whole run. Windows must be contiguous from minute 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub availability: Option<Vec<AvailabilityWindow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvailabilityWindow {
    pub from_min: u64,
    pub to_min: u64,
    pub channels: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WiSunConfig {
    pub count: u32,
    pub bitrate_kbps: f64,
    pub payload: u32,
    pub ti_ms: u64,
    /// Windows with no `channel` key are idle. Windows must not overlap.
    #[serde(default)]
    pub schedule: Vec<WiSunWindow>,
}

impl WiSunConfig {
    /// Frame duration in whole milliseconds: `payload * 8 / bitrate`.
    pub fn frame_ms(&self) -> u64 {
        ((self.payload as f64) * 8.0 / self.bitrate_kbps).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WiSunWindow {
    pub from_min: u64,
    pub to_min: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceGroup {
    #[serde(default = "default_count")]
    pub count: u32,
    pub channels: Vec<u16>,
    pub sfs: Vec<u8>,
    #[serde(default = "default_ti")]
    pub ti_ms: u64,
    /// Retransmission budget: an attempt spends up to `1 + retries` trials.
    #[serde(default)]
    pub retries: u32,
    #[serde(default = "default_payload")]
    pub payload: u16,
    /// Fixed epoch phase for every device in the group; random in
    /// `[0, ti_ms)` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_ms: Option<u64>,
}

fn default_count() -> u32 {
    1
}
fn default_ti() -> u64 {
    10_000
}
fn default_payload() -> u16 {
    50
}

// ---------------------------------------------------------------------------
// Loading & validation
// ---------------------------------------------------------------------------

/// Parse and validate a TOML scenario. Parse errors carry the line/column
/// from the TOML parser; validation reports every violation at once.
pub fn load_config(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn total_devices(&self) -> u32 {
        self.devices.iter().map(|g| g.count).sum()
    }

    /// Sorted union of every device group's channel set; the fairness index
    /// is computed over these channels.
    pub fn device_channel_union(&self) -> Vec<u16> {
        let set: BTreeSet<u16> =
            self.devices.iter().flat_map(|g| g.channels.iter().copied()).collect();
        set.into_iter().collect()
    }

    pub fn device_sf_union(&self) -> Vec<u8> {
        let set: BTreeSet<u8> = self.devices.iter().flat_map(|g| g.sfs.iter().copied()).collect();
        set.into_iter().collect()
    }

    pub fn horizon(&self) -> Horizon {
        match (self.horizon.wall_min, self.horizon.attempts) {
            (Some(w), None) => Horizon::WallMs(w * MS_PER_MIN),
            (None, Some(a)) => Horizon::Attempts(a),
            // validate() rejects every other combination.
            _ => Horizon::WallMs(0),
        }
    }

    /// Demodulator bank: explicit pairs, or gateway channels x fleet SFs.
    pub fn demodulators(&self) -> BTreeSet<(u16, u8)> {
        match &self.gateway.demodulators {
            Some(pairs) => pairs.iter().copied().collect(),
            None => {
                let mut set = BTreeSet::new();
                for &ch in &self.gateway.channels {
                    for &sf in &self.device_sf_union() {
                        set.insert((ch, sf));
                    }
                }
                set
            }
        }
    }

    /// Replace the fleet size; only meaningful for single-group scenarios.
    pub fn set_device_count(&mut self, count: u32) -> Result<(), ScenarioError> {
        if self.devices.len() != 1 {
            return Err(ScenarioError::Unsupported(format!(
                "device-count override needs a single device group, this scenario has {}",
                self.devices.len()
            )));
        }
        self.devices[0].count = count;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut bad: Vec<String> = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };

        check(
            Bandwidth::from_khz(self.bandwidth_khz).is_ok(),
            format!("bandwidth_khz: unsupported value {} (use 62.5, 125, 250 or 500)", self.bandwidth_khz),
        );
        check(self.trials >= 1, format!("trials: must be at least 1, got {}", self.trials));

        // policy
        let p = &self.policy;
        check(
            (0.0..=1.0).contains(&p.alpha),
            format!("policy.alpha: must be in [0, 1], got {}", p.alpha),
        );
        check(
            (0.0..=1.0).contains(&p.beta),
            format!("policy.beta: must be in [0, 1], got {}", p.beta),
        );
        check(p.amp >= 0.0, format!("policy.amp: must be >= 0, got {}", p.amp));
        check(
            (0.0..=1.0).contains(&p.epsilon),
            format!("policy.epsilon: must be in [0, 1], got {}", p.epsilon),
        );
        check(p.omega_max > 0.0, format!("policy.omega_max: must be > 0, got {}", p.omega_max));

        // horizon
        let horizon_ms = match (self.horizon.wall_min, self.horizon.attempts) {
            (Some(w), None) => {
                check(w > 0, "horizon.wall_min: must be > 0".into());
                Some(w * MS_PER_MIN)
            }
            (None, Some(a)) => {
                check(a > 0, "horizon.attempts: must be > 0".into());
                None
            }
            (None, None) => {
                check(false, "horizon: one of wall_min or attempts must be set".into());
                None
            }
            (Some(_), Some(_)) => {
                check(false, "horizon: wall_min and attempts are mutually exclusive".into());
                None
            }
        };

        // interference
        if let Err(e) = self.interference.kernel() {
            check(false, format!("interference: {e}"));
        }
        check(
            self.interference.radius <= 3,
            format!("interference.radius: only 0..=3 supported, got {}", self.interference.radius),
        );

        // devices
        check(!self.devices.is_empty(), "devices: at least one device group is required".into());
        for (i, g) in self.devices.iter().enumerate() {
            let path = format!("devices[{i}]");
            check(g.count >= 1, format!("{path}.count: must be at least 1"));
            check(!g.channels.is_empty(), format!("{path}.channels: must not be empty"));
            check(
                has_no_duplicates(&g.channels),
                format!("{path}.channels: duplicate entries in {:?}", g.channels),
            );
            check(!g.sfs.is_empty(), format!("{path}.sfs: must not be empty"));
            check(has_no_duplicates(&g.sfs), format!("{path}.sfs: duplicate entries in {:?}", g.sfs));
            for &sf in &g.sfs {
                check((7..=12).contains(&sf), format!("{path}.sfs: SF{sf} outside SF7..SF12"));
            }
            check(g.ti_ms >= 1, format!("{path}.ti_ms: must be at least 1"));
            check(
                g.payload == crate::airtime::TABLE_PAYLOAD_BYTES,
                format!("{path}.payload: airtime table covers 50 B frames, got {}", g.payload),
            );
            if let Some(phase) = g.phase_ms {
                check(
                    phase < g.ti_ms,
                    format!("{path}.phase_ms: must be below ti_ms ({} >= {})", phase, g.ti_ms),
                );
            }
        }

        // gateway
        check(
            has_no_duplicates(&self.gateway.channels),
            format!("gateway.channels: duplicate entries in {:?}", self.gateway.channels),
        );
        if let Some(demods) = &self.gateway.demodulators {
            for &(ch, sf) in demods {
                check(
                    self.gateway.channels.contains(&ch),
                    format!("gateway.demodulators: channel {ch} is not a gateway channel"),
                );
                check(
                    (7..=12).contains(&sf),
                    format!("gateway.demodulators: SF{sf} outside SF7..SF12"),
                );
            }
        }
        if let Some(windows) = &self.gateway.availability {
            check(!windows.is_empty(), "gateway.availability: must not be empty when given".into());
            let mut prev_to = 0u64;
            for (i, w) in windows.iter().enumerate() {
                let path = format!("gateway.availability[{i}]");
                check(w.from_min < w.to_min, format!("{path}: from_min must be below to_min"));
                if i == 0 {
                    check(w.from_min == 0, format!("{path}: windows must start at minute 0"));
                } else {
                    check(
                        w.from_min == prev_to,
                        format!("{path}: windows must be contiguous (gap or overlap at minute {})", w.from_min),
                    );
                }
                for &ch in &w.channels {
                    check(
                        self.gateway.channels.contains(&ch),
                        format!("{path}.channels: channel {ch} is not a gateway channel"),
                    );
                }
                prev_to = w.to_min;
            }
            if let Some(wall) = horizon_ms {
                check(
                    prev_to * MS_PER_MIN >= wall,
                    format!(
                        "gateway.availability: windows end at minute {prev_to} but the horizon is minute {}",
                        wall / MS_PER_MIN
                    ),
                );
            }
        }

        // wisun
        if let Some(w) = &self.wisun {
            check(w.count >= 1, "wisun.count: must be at least 1".into());
            check(w.bitrate_kbps > 0.0, "wisun.bitrate_kbps: must be > 0".into());
            check(w.payload >= 1, "wisun.payload: must be at least 1".into());
            check(w.ti_ms >= 1, "wisun.ti_ms: must be at least 1".into());
            if w.bitrate_kbps > 0.0 {
                check(w.frame_ms() >= 1, "wisun: frame duration rounds below 1 ms".into());
            }
            let mut prev_to = 0u64;
            for (i, win) in w.schedule.iter().enumerate() {
                let path = format!("wisun.schedule[{i}]");
                check(win.from_min < win.to_min, format!("{path}: from_min must be below to_min"));
                check(
                    win.from_min >= prev_to,
                    format!("{path}: windows must not overlap (at minute {})", win.from_min),
                );
                prev_to = win.to_min;
            }
        }

        if bad.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(bad))
        }
    }
}

fn has_no_duplicates<T: Ord + Copy>(items: &[T]) -> bool {
    let set: BTreeSet<T> = items.iter().copied().collect();
    set.len() == items.len()
}

// ---------------------------------------------------------------------------
// Resolved availability
// ---------------------------------------------------------------------------

/// Gateway availability resolved to millisecond windows. The last window is
/// extended indefinitely so frames that spill past the horizon still get a
/// well-defined answer.
#[derive(Debug, Clone)]
pub struct ResolvedAvailability {
    windows: Vec<(u64, u64, BTreeSet<u16>)>,
}

impl ResolvedAvailability {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let windows = match &cfg.gateway.availability {
            None => vec![(0, u64::MAX, cfg.gateway.channels.iter().copied().collect())],
            Some(ws) => {
                let mut out: Vec<(u64, u64, BTreeSet<u16>)> = ws
                    .iter()
                    .map(|w| {
                        (
                            w.from_min * MS_PER_MIN,
                            w.to_min * MS_PER_MIN,
                            w.channels.iter().copied().collect(),
                        )
                    })
                    .collect();
                if let Some(last) = out.last_mut() {
                    last.1 = u64::MAX;
                }
                out
            }
        };
        ResolvedAvailability { windows }
    }

    /// Channels the gateway listens on at instant `t`.
    pub fn at(&self, t: u64) -> &BTreeSet<u16> {
        let i = self
            .windows
            .iter()
            .position(|&(from, to, _)| t >= from && t < to)
            .unwrap_or(self.windows.len() - 1);
        &self.windows[i].2
    }

    /// True when `ch` is listened on for the whole span `[start, end)`.
    pub fn covers_span(&self, ch: u16, start: u64, end: u64) -> bool {
        self.windows
            .iter()
            .filter(|&&(from, to, _)| from < end && start < to)
            .all(|(_, _, set)| set.contains(&ch))
    }

    /// Change points after t=0 where the channel set actually differs,
    /// paired with the new set. Feeds the switch-latency metric.
    pub fn changes(&self) -> Vec<(u64, BTreeSet<u16>)> {
        let mut out = Vec::new();
        for pair in self.windows.windows(2) {
            if pair[0].2 != pair[1].2 {
                out.push((pair[1].0, pair[1].2.clone()));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Builtin presets
// ---------------------------------------------------------------------------

pub const BUILTIN_NAMES: [&str; 15] = [
    "ch-static",
    "ch-dynamic",
    "chsf-static",
    "chsf-sf7",
    "chsf-sf8",
    "chsf-sf9",
    "chsf-mixed",
    "chsf-wisun",
    "chsf-wisun-sf7",
    "chsf-wisun-sf8",
    "chsf-wisun-sf9",
    "chsf-wisun-mixed",
    "adjacent-1",
    "adjacent-2",
    "adjacent-wisun",
];

/// Look up a builtin scenario by name.
///
/// Device arm lists put the values the gateway actually serves at the tail
/// (and the cheapest spreading factor last): an untrained tug-of-war
/// selector sweeps arms from the last index backward, so tail placement
/// steers cold-start exploration toward arms that can answer.
pub fn builtin(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let cfg = match name {
        "ch-static" => ch_selection_base("ch-static", vec![9, 7, 3, 5, 1], vec![1, 3, 5], 30),
        "ch-dynamic" => {
            let mut cfg = ch_selection_base("ch-dynamic", vec![9, 7, 3, 5, 1], vec![1, 3, 5], 40);
            cfg.gateway.availability = Some(vec![
                window(0, 10, vec![1, 3, 5]),
                window(10, 20, vec![1, 3]),
                window(20, 30, vec![3, 5]),
                window(30, 40, vec![1, 5]),
            ]);
            cfg
        }
        "chsf-static" => chsf_base("chsf-static", vec![vec![9, 8, 7]]),
        "chsf-sf7" => chsf_base("chsf-sf7", vec![vec![7]]),
        "chsf-sf8" => chsf_base("chsf-sf8", vec![vec![8]]),
        "chsf-sf9" => chsf_base("chsf-sf9", vec![vec![9]]),
        "chsf-mixed" => chsf_base("chsf-mixed", vec![vec![7], vec![8], vec![9]]),
        "chsf-wisun" => chsf_wisun_base("chsf-wisun", vec![vec![9, 8, 7]]),
        "chsf-wisun-sf7" => chsf_wisun_base("chsf-wisun-sf7", vec![vec![7]]),
        "chsf-wisun-sf8" => chsf_wisun_base("chsf-wisun-sf8", vec![vec![8]]),
        "chsf-wisun-sf9" => chsf_wisun_base("chsf-wisun-sf9", vec![vec![9]]),
        "chsf-wisun-mixed" => chsf_wisun_base("chsf-wisun-mixed", vec![vec![7], vec![8], vec![9]]),
        "adjacent-1" => ch_selection_base("adjacent-1", vec![2, 4, 6], vec![2, 4, 6], 30),
        "adjacent-2" => ch_selection_base("adjacent-2", vec![2, 5, 8], vec![2, 5, 8], 30),
        "adjacent-wisun" => {
            let mut cfg =
                ch_selection_base("adjacent-wisun", vec![14, 10, 7, 4, 1], vec![1, 4, 7], 40);
            cfg.wisun = Some(WiSunConfig {
                count: 20,
                bitrate_kbps: 50.0,
                payload: 200,
                ti_ms: 1000,
                schedule: vec![
                    wisun_window(0, 10, None),
                    wisun_window(10, 20, Some(1)),
                    wisun_window(20, 30, Some(4)),
                    wisun_window(30, 40, Some(7)),
                ],
            });
            cfg
        }
        other => {
            return Err(ScenarioError::UnknownPreset {
                name: other.to_string(),
                available: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    debug_assert!(cfg.validate().is_ok(), "builtin `{name}` must validate");
    Ok(cfg)
}

fn window(from_min: u64, to_min: u64, channels: Vec<u16>) -> AvailabilityWindow {
    AvailabilityWindow { from_min, to_min, channels }
}

fn wisun_window(from_min: u64, to_min: u64, channel: Option<u16>) -> WiSunWindow {
    WiSunWindow { from_min, to_min, channel }
}

/// Channel-selection experiments: 30 devices, fixed SF7, 10 s interval,
/// 3 retries, 50 B frames.
fn ch_selection_base(
    name: &str,
    device_channels: Vec<u16>,
    gw_channels: Vec<u16>,
    wall_min: u64,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        bandwidth_khz: 125.0,
        trials: 10,
        policy: PolicyConfig::default(),
        horizon: HorizonConfig { wall_min: Some(wall_min), attempts: None },
        interference: InterferenceConfig::default(),
        mac: MacConfig::default(),
        collision: CollisionConfig::default(),
        gateway: GatewayConfig { channels: gw_channels, demodulators: None, availability: None },
        wisun: None,
        devices: vec![DeviceGroup {
            count: 30,
            channels: device_channels,
            sfs: vec![7],
            ti_ms: 10_000,
            retries: 3,
            payload: 50,
            phase_ms: None,
        }],
    }
}

/// Joint channel/SF experiments: 30 devices over channels {1,3,5}, 20 s
/// interval, no retries, 200 attempts each. `sf_groups` splits the fleet
/// evenly into one group per SF set.
fn chsf_base(name: &str, sf_groups: Vec<Vec<u8>>) -> ScenarioConfig {
    let per_group = 30 / sf_groups.len() as u32;
    ScenarioConfig {
        name: name.to_string(),
        bandwidth_khz: 125.0,
        trials: 10,
        policy: PolicyConfig::default(),
        horizon: HorizonConfig { wall_min: None, attempts: Some(200) },
        interference: InterferenceConfig::default(),
        mac: MacConfig::default(),
        collision: CollisionConfig::default(),
        gateway: GatewayConfig {
            channels: vec![1, 3, 5],
            // The reference deployment demodulates every (channel, SF) pair
            // regardless of which SF variant the fleet runs.
            demodulators: Some(
                [1u16, 3, 5].iter().flat_map(|&ch| [7u8, 8, 9].map(|sf| (ch, sf))).collect(),
            ),
            availability: None,
        },
        wisun: None,
        devices: sf_groups
            .into_iter()
            .map(|sfs| DeviceGroup {
                count: per_group,
                channels: vec![1, 3, 5],
                sfs,
                ti_ms: 20_000,
                retries: 0,
                payload: 50,
                phase_ms: None,
            })
            .collect(),
    }
}

/// The joint channel/SF experiments with a Wi-SUN fleet hammering one
/// channel at a time; bounded to a 50-minute wall because that is where the
/// interferer schedule ends.
fn chsf_wisun_base(name: &str, sf_groups: Vec<Vec<u8>>) -> ScenarioConfig {
    let mut cfg = chsf_base(name, sf_groups);
    cfg.horizon = HorizonConfig { wall_min: Some(50), attempts: None };
    cfg.wisun = Some(WiSunConfig {
        count: 20,
        bitrate_kbps: 50.0,
        payload: 200,
        ti_ms: 1000,
        schedule: vec![
            wisun_window(0, 20, None),
            wisun_window(20, 30, Some(1)),
            wisun_window(30, 40, Some(3)),
            wisun_window(40, 50, Some(5)),
        ],
    });
    cfg
}

// ===========================================================================
// Tests
// ===========================================================================
