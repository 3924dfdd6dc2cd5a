//! Learning-driven channel and spreading-factor selection for LoRa uplinks,
//! plus a deterministic discrete-event simulator to measure it.
//!
//! The crate has two halves:
//!
//! * **Policies** ([`bandit`]): a coupled-oscillator "tug of war" learner and
//!   three baselines (UCB1-tuned, ε-greedy, uniform random), all behind one
//!   per-device [`bandit::JointSelector`] that picks a (channel, spreading
//!   factor) pair each transmit interval from O(arms) state.
//! * **Simulation** ([`simcore`], [`scenario`], [`airtime`], [`metrics`],
//!   [`report`]): a millisecond-resolution event simulator of LoRa fleets
//!   sharing channels with listen-before-talk interferers, an intermittently
//!   available gateway, adjacent-channel coupling, and retry MACs — with
//!   bit-exact replay from any emitted report.
//!
//! ```
//! use lora_tow_sim::{report, scenario};
//!
//! let mut cfg = scenario::builtin("ch-static").unwrap();
//! cfg.trials = 2;
//! cfg.horizon = scenario::HorizonConfig { wall_min: None, attempts: Some(50) };
//! cfg.set_device_count(5).unwrap();
//! let runs = report::run_trials(&cfg, 42).unwrap();
//! let summary = report::build_report(&cfg, 42, &runs);
//! assert!(summary.aggregate.fsr.unwrap().mean > 0.5);
//! ```

pub mod airtime;
pub mod bandit;
pub mod metrics;
pub mod report;
pub mod scenario;
pub mod simcore;

pub use bandit::{JointSelector, Policy, PolicyParams};
pub use metrics::MetricsRecord;
pub use report::{build_report, run_trials, RunReport};
pub use scenario::{builtin, load_config, ScenarioConfig, ScenarioError};
pub use simcore::{run_simulation, SimOutput};
