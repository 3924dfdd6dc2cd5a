//! Deterministic discrete-event simulator for LoRa uplink fleets.
//!
//! Each device loops through decide → clear-channel check → transmit →
//! ack/retry → feedback → sleep. The shared medium is a time-ordered frame
//! log; reception is evaluated at frame end against gateway availability,
//! the demodulator bank, co-channel overlaps (same SF destructive, Wi-SUN
//! destructive, different SF orthogonal by default) and adjacent-channel
//! coupling sampled from the interference kernel. Wi-SUN interferers are
//! listen-before-talk transmitters driven by a channel schedule.
//!
//! # Determinism
//!
//! A run is a pure function of `(scenario, master_seed, trial)`:
//!
//! * every entity gets its own RNG stream via [`derive_seed`] — entity 0 is
//!   the gateway's coupling sampler, entities `1..=M` the LoRa devices,
//!   `M+1..` the Wi-SUN devices — so adding trials or devices never perturbs
//!   other streams;
//! * simultaneous events are processed in a fixed order: `(time, kind,
//!   source id, insertion order)`.
//!
//! Replaying the same triple reproduces every frame and metric bit-exactly.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::airtime::{time_on_air, Bandwidth, InterferenceKernel, MAX_TOA_MS};
use crate::bandit::JointSelector;
use crate::metrics::{self, DecisionRecord, MetricsRecord};
use crate::scenario::{
    CollisionConfig, Horizon, ResolvedAvailability, ScenarioConfig, ScenarioError, MS_PER_MIN,
};

// ---------------------------------------------------------------------------
// Seed derivation
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Root seed of one trial, reported alongside metrics so any single trial
/// can be re-run in isolation.
pub fn trial_seed(master: u64, trial: u32) -> u64 {
    mix(master ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(trial as u64 + 1))
}

/// Derive the RNG seed for one entity of one trial.
///
/// The derivation is splittable: every `(master, trial, entity)` triple maps
/// to an independent stream, so growing the trial count or the fleet never
/// changes the streams of existing entities.
pub fn derive_seed(master: u64, trial: u32, entity: u32) -> u64 {
    mix(trial_seed(master, trial) ^ 0xC2B2_AE3D_27D4_EB4Fu64.wrapping_mul(entity as u64 + 1))
}

// ---------------------------------------------------------------------------
// Frames and the shared medium
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FrameKind {
    Lora,
    WiSun,
}

impl FrameKind {
    pub fn name(self) -> &'static str {
        match self {
            FrameKind::Lora => "lora",
            FrameKind::WiSun => "wisun",
        }
    }
}

/// One transmission on the shared medium, `[start_ms, end_ms)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameEvent {
    pub kind: FrameKind,
    /// 1-based id within the kind's fleet.
    pub source: u32,
    pub channel: u16,
    pub sf: Option<u8>,
    pub start_ms: u64,
    pub end_ms: u64,
}

/// Append-only frame log ordered by start time. Queries are purely
/// arithmetic over the log, so results do not depend on how simultaneous
/// events were ordered — only on the frames themselves.
#[derive(Debug, Clone)]
pub struct MediumLog {
    frames: Vec<FrameEvent>,
    max_duration_ms: u64,
}

impl MediumLog {
    pub fn new(max_duration_ms: u64) -> Self {
        MediumLog { frames: Vec::new(), max_duration_ms: max_duration_ms.max(1) }
    }

    pub fn push(&mut self, frame: FrameEvent) {
        debug_assert!(
            self.frames.last().map_or(true, |f| f.start_ms <= frame.start_ms),
            "frames must be pushed in start order"
        );
        debug_assert!(frame.end_ms > frame.start_ms);
        debug_assert!(frame.end_ms - frame.start_ms <= self.max_duration_ms);
        self.frames.push(frame);
    }

    pub fn frames(&self) -> &[FrameEvent] {
        &self.frames
    }

    fn scan_from(&self, earliest_start: u64) -> usize {
        self.frames.partition_point(|f| f.start_ms < earliest_start)
    }

    /// Carrier sense at one instant: is any frame on `channel` strictly
    /// mid-flight? A frame starting exactly *now* is not sensed — two
    /// transmitters keying up in the same millisecond cannot hear each other,
    /// which is precisely how simultaneous-start collisions happen.
    pub fn busy_at(&self, channel: u16, now: u64) -> bool {
        let lo = self.scan_from(now.saturating_sub(self.max_duration_ms));
        self.frames[lo..]
            .iter()
            .take_while(|f| f.start_ms < now)
            .any(|f| f.channel == channel && now < f.end_ms)
    }

    /// All frames whose span intersects `[start, end)`.
    pub fn overlapping(&self, start: u64, end: u64) -> impl Iterator<Item = &FrameEvent> {
        let lo = self.scan_from(start.saturating_sub(self.max_duration_ms));
        self.frames[lo..]
            .iter()
            .take_while(move |f| f.start_ms < end)
            .filter(move |f| f.end_ms > start)
    }
}

// ---------------------------------------------------------------------------
// Gateway reception
// ---------------------------------------------------------------------------

/// Decide whether the gateway receives `frame`.
///
/// The frame must sit on a channel the gateway listens to for the frame's
/// whole span, match a demodulator, and survive every overlapping frame:
/// co-channel same-SF LoRa and co-channel Wi-SUN are destructive, co-channel
/// different-SF LoRa is orthogonal unless `collision.inter_sf` is set, and a
/// frame `d` channels away destroys reception with probability `g(d)`,
/// sampled independently per overlapping pair.
pub fn gw_decode<R: Rng + ?Sized>(
    frame: &FrameEvent,
    availability: &ResolvedAvailability,
    demodulators: &BTreeSet<(u16, u8)>,
    medium: &MediumLog,
    kernel: &InterferenceKernel,
    collision: CollisionConfig,
    rng: &mut R,
) -> bool {
    let sf = frame.sf.expect("only LoRa frames are decoded");
    if !availability.covers_span(frame.channel, frame.start_ms, frame.end_ms) {
        return false;
    }
    if !demodulators.contains(&(frame.channel, sf)) {
        return false;
    }
    for other in medium.overlapping(frame.start_ms, frame.end_ms) {
        if other.kind == frame.kind && other.source == frame.source {
            continue;
        }
        let d = other.channel.abs_diff(frame.channel);
        if d == 0 {
            let destructive = match other.kind {
                FrameKind::WiSun => true,
                FrameKind::Lora => other.sf == frame.sf || collision.inter_sf,
            };
            if destructive {
                // Optional capture effect: the earlier frame survives.
                if collision.capture && frame.start_ms < other.start_ms {
                    continue;
                }
                return false;
            }
        } else {
            let g = kernel.g(d);
            if g > 0.0 && rng.gen::<f64>() < g {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Simulation engine
// ---------------------------------------------------------------------------

/// One emitted frame plus its fate, for the per-frame event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRecord {
    pub time_ms: u64,
    pub kind: FrameKind,
    pub source: u32,
    pub channel: u16,
    pub sf: Option<u8>,
    pub duration_ms: u64,
    /// `Some(received?)` for LoRa frames, `None` for interferer frames.
    pub decoded: Option<bool>,
}

/// Everything one trial produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub metrics: MetricsRecord,
    /// Per-device decision logs, indexed by device id - 1.
    pub decision_logs: Vec<Vec<DecisionRecord>>,
    /// Every frame that went on air, in start order.
    pub frames: Vec<FrameRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    FrameEnd,
    WiSunEpoch,
    Epoch,
    Retry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct QueuedEvent {
    time: u64,
    kind: EventKind,
    source: u32,
    seq: u64,
}

struct Device {
    id: u32,
    rng: ChaCha8Rng,
    selector: JointSelector,
    channels: Vec<u16>,
    sfs: Vec<u8>,
    toa_ms: Vec<u64>,
    ti_ms: u64,
    trials_max: u32,
    phase: u64,
    // Current attempt.
    grid_k: u64,
    epoch_time: u64,
    pair: (usize, usize),
    channel: u16,
    sf: u8,
    duration: u64,
    trials_used: u32,
    frame_idx: usize,
    attempts_done: u32,
}

struct WiSunDevice {
    phase: u64,
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    availability: ResolvedAvailability,
    demodulators: BTreeSet<(u16, u8)>,
    kernel: InterferenceKernel,
    horizon: Horizon,
    wall_ms: Option<u64>,
    devices: Vec<Device>,
    wisun: Vec<WiSunDevice>,
    wisun_windows: Vec<(u64, u64, Option<u16>)>,
    wisun_frame_ms: u64,
    wisun_ti_ms: u64,
    gw_rng: ChaCha8Rng,
    medium: MediumLog,
    queue: BinaryHeap<Reverse<QueuedEvent>>,
    seq: u64,
    // Accumulators.
    frames: Vec<FrameRecord>,
    decision_logs: Vec<Vec<DecisionRecord>>,
    attempts: u64,
    successes: u64,
    fsr_series: Vec<(u64, f64)>,
    received_per_channel: std::collections::BTreeMap<u16, u64>,
    received_per_pair: std::collections::BTreeMap<(u16, u8), u64>,
}

/// Run one trial of a validated scenario.
pub fn run_simulation(
    cfg: &ScenarioConfig,
    master_seed: u64,
    trial: u32,
) -> Result<SimOutput, ScenarioError> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg, master_seed, trial)?;
    engine.prime();
    while let Some(Reverse(ev)) = engine.queue.pop() {
        engine.dispatch(ev);
    }
    Ok(engine.into_output())
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ScenarioConfig, master_seed: u64, trial: u32) -> Result<Self, ScenarioError> {
        let bw = Bandwidth::from_khz(cfg.bandwidth_khz)
            .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?;
        let kernel = cfg
            .interference
            .kernel()
            .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?;
        let horizon = cfg.horizon();
        let wall_ms = match horizon {
            Horizon::WallMs(t) => Some(t),
            Horizon::Attempts(_) => None,
        };

        let params = cfg.policy.params();
        let mut devices = Vec::with_capacity(cfg.total_devices() as usize);
        let mut id = 0u32;
        for group in &cfg.devices {
            let toa_ms: Vec<u64> = group
                .sfs
                .iter()
                .map(|&sf| {
                    time_on_air(bw, sf, group.payload)
                        .map(u64::from)
                        .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))
                })
                .collect::<Result<_, _>>()?;
            for _ in 0..group.count {
                id += 1;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, trial, id));
                let phase = match group.phase_ms {
                    Some(p) => p,
                    None => rng.gen_range(0..group.ti_ms),
                };
                let selector = JointSelector::new(
                    cfg.policy.kind,
                    group.channels.len(),
                    group.sfs.len(),
                    &params,
                )
                .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?;
                devices.push(Device {
                    id,
                    rng,
                    selector,
                    channels: group.channels.clone(),
                    sfs: group.sfs.clone(),
                    toa_ms: toa_ms.clone(),
                    ti_ms: group.ti_ms,
                    trials_max: group.retries + 1,
                    phase,
                    grid_k: 0,
                    epoch_time: 0,
                    pair: (1, 1),
                    channel: group.channels[0],
                    sf: group.sfs[0],
                    duration: toa_ms[0],
                    trials_used: 0,
                    frame_idx: usize::MAX,
                    attempts_done: 0,
                });
            }
        }

        let (wisun, wisun_windows, wisun_frame_ms, wisun_ti_ms) = match &cfg.wisun {
            None => (Vec::new(), Vec::new(), 0, 0),
            Some(w) => {
                let fleet: Vec<WiSunDevice> = (0..w.count)
                    .map(|j| {
                        let seed = derive_seed(master_seed, trial, id + 1 + j);
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        WiSunDevice { phase: rng.gen_range(0..w.ti_ms) }
                    })
                    .collect();
                let windows: Vec<(u64, u64, Option<u16>)> = w
                    .schedule
                    .iter()
                    .map(|s| (s.from_min * MS_PER_MIN, s.to_min * MS_PER_MIN, s.channel))
                    .collect();
                (fleet, windows, w.frame_ms(), w.ti_ms)
            }
        };

        let max_duration = u64::from(MAX_TOA_MS).max(wisun_frame_ms);
        let device_count = devices.len();
        Ok(Engine {
            cfg,
            availability: ResolvedAvailability::from_config(cfg),
            demodulators: cfg.demodulators(),
            kernel,
            horizon,
            wall_ms,
            devices,
            wisun,
            wisun_windows,
            wisun_frame_ms,
            wisun_ti_ms,
            gw_rng: ChaCha8Rng::seed_from_u64(derive_seed(master_seed, trial, 0)),
            medium: MediumLog::new(max_duration),
            queue: BinaryHeap::new(),
            seq: 0,
            frames: Vec::new(),
            decision_logs: vec![Vec::new(); device_count],
            attempts: 0,
            successes: 0,
            fsr_series: Vec::new(),
            received_per_channel: std::collections::BTreeMap::new(),
            received_per_pair: std::collections::BTreeMap::new(),
        })
    }

    fn schedule(&mut self, time: u64, kind: EventKind, source: u32) {
        self.seq += 1;
        self.queue.push(Reverse(QueuedEvent { time, kind, source, seq: self.seq }));
    }

    /// Queue every entity's first event.
    fn prime(&mut self) {
        let wisun_end = self.wisun_windows.last().map_or(0, |w| w.1);
        for i in 0..self.devices.len() {
            let at = self.devices[i].phase;
            if self.wall_ms.map_or(true, |wall| at < wall) {
                self.schedule(at, EventKind::Epoch, self.devices[i].id);
            }
        }
        for j in 0..self.wisun.len() {
            let at = self.wisun[j].phase;
            if at < wisun_end && self.wall_ms.map_or(true, |wall| at < wall) {
                self.schedule(at, EventKind::WiSunEpoch, j as u32 + 1);
            }
        }
    }

    fn dispatch(&mut self, ev: QueuedEvent) {
        match ev.kind {
            EventKind::Epoch => self.on_epoch(ev.source, ev.time),
            EventKind::Retry => self.try_trial(ev.source, ev.time),
            EventKind::FrameEnd => self.on_frame_end(ev.source, ev.time),
            EventKind::WiSunEpoch => self.on_wisun_epoch(ev.source, ev.time),
        }
    }

    // --- device lifecycle -------------------------------------------------

    fn on_epoch(&mut self, id: u32, now: u64) {
        let dev = &mut self.devices[(id - 1) as usize];
        dev.epoch_time = now;
        dev.pair = dev.selector.decide(&mut dev.rng);
        dev.channel = dev.channels[dev.pair.0 - 1];
        dev.sf = dev.sfs[dev.pair.1 - 1];
        dev.duration = dev.toa_ms[dev.pair.1 - 1];
        dev.trials_used = 0;
        self.try_trial(id, now);
    }

    /// One trial: carrier-sense now, then transmit or back off. A busy
    /// channel consumes the trial.
    fn try_trial(&mut self, id: u32, now: u64) {
        let backoff_max = self.cfg.mac.backoff_max_ms;
        let dev = &mut self.devices[(id - 1) as usize];
        dev.trials_used += 1;
        if self.medium.busy_at(dev.channel, now) {
            if dev.trials_used >= dev.trials_max {
                self.finish_attempt(id, now, false);
            } else {
                let wait = dev.rng.gen_range(0..=backoff_max);
                self.schedule(now + wait, EventKind::Retry, id);
            }
            return;
        }
        let frame = FrameEvent {
            kind: FrameKind::Lora,
            source: id,
            channel: dev.channel,
            sf: Some(dev.sf),
            start_ms: now,
            end_ms: now + dev.duration,
        };
        dev.frame_idx = self.frames.len();
        let duration = dev.duration;
        self.medium.push(frame);
        self.frames.push(FrameRecord {
            time_ms: now,
            kind: FrameKind::Lora,
            source: id,
            channel: frame.channel,
            sf: frame.sf,
            duration_ms: duration,
            decoded: None,
        });
        self.schedule(frame.end_ms, EventKind::FrameEnd, id);
    }

    fn on_frame_end(&mut self, id: u32, now: u64) {
        let dev = &self.devices[(id - 1) as usize];
        let frame = FrameEvent {
            kind: FrameKind::Lora,
            source: id,
            channel: dev.channel,
            sf: Some(dev.sf),
            start_ms: now - dev.duration,
            end_ms: now,
        };
        let received = gw_decode(
            &frame,
            &self.availability,
            &self.demodulators,
            &self.medium,
            &self.kernel,
            self.cfg.collision,
            &mut self.gw_rng,
        );
        let frame_idx = dev.frame_idx;
        self.frames[frame_idx].decoded = Some(received);
        if received {
            *self.received_per_channel.entry(frame.channel).or_insert(0) += 1;
            *self.received_per_pair.entry((frame.channel, dev.sf)).or_insert(0) += 1;
            self.finish_attempt(id, now, true);
        } else if dev.trials_used >= dev.trials_max {
            self.finish_attempt(id, now, false);
        } else {
            self.schedule(now + self.cfg.mac.ack_wait_ms, EventKind::Retry, id);
        }
    }

    /// Close the attempt: one feedback, one decision record, then sleep
    /// until the next free slot on the device's epoch grid.
    fn finish_attempt(&mut self, id: u32, now: u64, success: bool) {
        let dev = &mut self.devices[(id - 1) as usize];
        dev.selector.feedback(dev.pair, success).expect("selected pair is always in range");
        self.decision_logs[(id - 1) as usize].push(DecisionRecord {
            time_ms: dev.epoch_time,
            channel: dev.channel,
            sf: dev.sf,
            success,
        });
        dev.attempts_done += 1;
        self.attempts += 1;
        if success {
            self.successes += 1;
        }
        self.fsr_series.push((now, self.successes as f64 / self.attempts as f64));

        dev.grid_k += 1;
        let mut next = dev.phase + dev.grid_k * dev.ti_ms;
        while next < now {
            // An attempt that overran its interval skips ahead to the next
            // free grid slot rather than transmitting back-to-back.
            dev.grid_k += 1;
            next += dev.ti_ms;
        }
        let more = match self.horizon {
            Horizon::Attempts(n) => dev.attempts_done < n,
            Horizon::WallMs(wall) => next < wall,
        };
        if more {
            self.schedule(next, EventKind::Epoch, id);
        }
    }

    // --- interferers ---------------------------------------------------------

    fn wisun_channel_at(&self, now: u64) -> Option<u16> {
        self.wisun_windows
            .iter()
            .find(|&&(from, to, _)| now >= from && now < to)
            .and_then(|&(_, _, ch)| ch)
    }

    /// Listen-before-talk interferer: transmit on the scheduled channel if
    /// it is clear, otherwise skip this interval entirely.
    fn on_wisun_epoch(&mut self, idx: u32, now: u64) {
        if let Some(ch) = self.wisun_channel_at(now) {
            if !self.medium.busy_at(ch, now) {
                self.medium.push(FrameEvent {
                    kind: FrameKind::WiSun,
                    source: idx,
                    channel: ch,
                    sf: None,
                    start_ms: now,
                    end_ms: now + self.wisun_frame_ms,
                });
                self.frames.push(FrameRecord {
                    time_ms: now,
                    kind: FrameKind::WiSun,
                    source: idx,
                    channel: ch,
                    sf: None,
                    duration_ms: self.wisun_frame_ms,
                    decoded: None,
                });
            }
        }
        let next = now + self.wisun_ti_ms;
        let wisun_end = self.wisun_windows.last().map_or(0, |w| w.1);
        if next < wisun_end && self.wall_ms.map_or(true, |wall| next < wall) {
            self.schedule(next, EventKind::WiSunEpoch, idx);
        }
    }

    // --- wrap-up ----------------------------------------------------------------

    fn into_output(self) -> SimOutput {
        let changes = self.availability.changes();
        let switch_latencies =
            metrics::switch_latency(&self.decision_logs, &changes, metrics::DEFAULT_SETTLE_WINDOW);
        SimOutput {
            metrics: MetricsRecord {
                attempts: self.attempts,
                successes: self.successes,
                fsr_series: self.fsr_series,
                received_per_channel: self.received_per_channel,
                received_per_pair: self.received_per_pair,
                switch_latencies,
            },
            decision_logs: self.decision_logs,
            frames: self.frames,
        }
    }
}

// ===========================================================================
// Tests
// ===========================================================================
