//! Lightweight multi-armed-bandit policies for decentralized channel and
//! spreading-factor selection.
//!
//! Four policies are provided:
//!
//! * **Tug-of-war dynamics** ([`TowState`]) — each arm carries a displacement
//!   `Q` plus exponentially discounted pull/success counters `N`/`R`. A
//!   selection compares `X_k = Q_k - (1/(D-1)) * sum(Q_other) + osc_k(t)`,
//!   where the oscillation term staggers exploration across arms over time.
//!   Rewards are `+1` on success and `-omega` on failure, with `omega` derived
//!   from the two best empirical success rates so that punishment grows as the
//!   top arms become competitive.
//! * **UCB1-tuned** and **epsilon-greedy** ([`BaselineState`]) — classic
//!   index/greedy baselines over plain pull/success counters.
//! * **Uniform random** ([`random_select`]) — the no-learning floor.
//!
//! A [`JointSelector`] bundles two independent policy states (channel
//! dimension and spreading-factor dimension) behind one decide/feedback pair;
//! both dimensions receive the same success bit. Arm indices are 1-based
//! everywhere in this module.
//!
//! States are intentionally tiny: three scalars per arm regardless of policy.
//! Selection never mutates learning state; all mutation flows through the
//! explicit `feedback` calls.

use std::cell::Cell;
use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Default cap applied to the failure punishment `omega`.
pub const DEFAULT_OMEGA_MAX: f64 = 1e6;

/// Denominator floor below which `omega` saturates at its cap.
const OMEGA_DENOM_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BanditError {
    #[error("arm index {index} out of range 1..={count}")]
    ArmOutOfRange { index: usize, count: usize },
    #[error("need at least {min} arms, got {got}")]
    TooFewArms { min: usize, got: usize },
    #[error("parameter {name} out of range: {value}")]
    ParamOutOfRange { name: &'static str, value: f64 },
}

// ---------------------------------------------------------------------------
// Oscillation term
// ---------------------------------------------------------------------------

/// Phase-staggered oscillation added to arm `k` (1-based) at decision step
/// `t`: `amp * cos(2*pi*(t + k - 1) / d)`.
///
/// Each arm peaks at a different step, so a fleet of devices with differing
/// step counters spreads its exploration instead of herding onto one arm.
pub fn compute_osc(k: usize, t: u64, d: usize, amp: f64) -> f64 {
    amp * (TAU * ((t as f64) + (k as f64) - 1.0) / (d as f64)).cos()
}

// ---------------------------------------------------------------------------
// Tug-of-war dynamics
// ---------------------------------------------------------------------------

/// Learning parameters for [`TowState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowParams {
    /// Discount applied to every `Q` before the chosen arm's increment.
    pub alpha: f64,
    /// Forgetting factor for the pull/success counters `N`/`R`.
    pub beta: f64,
    /// Oscillation amplitude.
    pub amp: f64,
    /// Cap on the failure punishment.
    pub omega_max: f64,
}

impl Default for TowParams {
    fn default() -> Self {
        TowParams { alpha: 0.9, beta: 0.9, amp: 0.5, omega_max: DEFAULT_OMEGA_MAX }
    }
}

/// One tug-of-war arm: displacement plus discounted pull/success counters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TowArm {
    pub q: f64,
    pub n: f64,
    pub r: f64,
}

/// Tug-of-war bandit over `D >= 2` arms.
#[derive(Debug, Clone)]
pub struct TowState {
    arms: Vec<TowArm>,
    params: TowParams,
    t: u64,
    arm_ops: Cell<u64>,
}

impl TowState {
    pub fn new(arm_count: usize, params: TowParams) -> Result<Self, BanditError> {
        if arm_count < 2 {
            return Err(BanditError::TooFewArms { min: 2, got: arm_count });
        }
        check_unit("alpha", params.alpha)?;
        check_unit("beta", params.beta)?;
        if !(params.amp >= 0.0) {
            return Err(BanditError::ParamOutOfRange { name: "amp", value: params.amp });
        }
        if !(params.omega_max > 0.0) {
            return Err(BanditError::ParamOutOfRange { name: "omega_max", value: params.omega_max });
        }
        Ok(TowState {
            arms: vec![TowArm::default(); arm_count],
            params,
            t: 0,
            arm_ops: Cell::new(0),
        })
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    /// Completed feedback count; also the phase fed to the oscillation term.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn arms(&self) -> &[TowArm] {
        &self.arms
    }

    pub fn params(&self) -> &TowParams {
        &self.params
    }

    /// Total per-arm touches performed so far (diagnostic; see module doc's
    /// cost note — one decide/feedback cycle is linear in the arm count).
    pub fn arm_ops(&self) -> u64 {
        self.arm_ops.get()
    }

    fn touch(&self, n: u64) {
        self.arm_ops.set(self.arm_ops.get() + n);
    }

    /// Decision values `X_k` for the current step.
    pub fn decision_values(&self) -> Vec<f64> {
        let d = self.arms.len();
        let total: f64 = self.arms.iter().map(|a| a.q).sum();
        self.touch(d as u64);
        let xs = self
            .arms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a.q - (total - a.q) / ((d - 1) as f64) + compute_osc(i + 1, self.t, d, self.params.amp)
            })
            .collect();
        self.touch(d as u64);
        xs
    }

    /// Pick the arm with the largest `X_k`; exact ties are broken uniformly
    /// at random. Returns a 1-based index. Learning state is not mutated.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let xs = self.decision_values();
        argmax_random_tie(&xs, rng) + 1
    }

    /// Failure punishment derived from the two best empirical success rates:
    /// `omega = (p1 + p2) / (2 - p1 - p2)`, clamped to `[0, omega_max]` and
    /// saturating at `omega_max` when the denominator vanishes. An arm with
    /// no (discounted) pulls counts as `p = 0`.
    pub fn omega(&self) -> f64 {
        let (p1, p2) = self.top_two_rates();
        let denom = 2.0 - p1 - p2;
        if denom < OMEGA_DENOM_FLOOR {
            return self.params.omega_max;
        }
        ((p1 + p2) / denom).clamp(0.0, self.params.omega_max)
    }

    /// Empirical success rates of the best and second-best arms. Rate ties
    /// rank the lower index first; a single pass suffices.
    fn top_two_rates(&self) -> (f64, f64) {
        let mut best = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for arm in &self.arms {
            let p = if arm.n > 0.0 { arm.r / arm.n } else { 0.0 };
            if p > best {
                second = best;
                best = p;
            } else if p > second {
                second = p;
            }
        }
        self.touch(self.arms.len() as u64);
        (best, second.max(0.0).min(best))
    }

    /// Apply one outcome for `chosen` (1-based). Update order: discount and
    /// bump the `N`/`R` counters, derive `omega` from the freshly updated
    /// rates, translate the outcome into `delta_q` (`+1` or `-omega`), decay
    /// every `Q` by `alpha` and add `delta_q` to the chosen arm, then advance
    /// the step counter.
    pub fn feedback(&mut self, chosen: usize, success: bool) -> Result<(), BanditError> {
        let d = self.arms.len();
        if chosen < 1 || chosen > d {
            return Err(BanditError::ArmOutOfRange { index: chosen, count: d });
        }
        let beta = self.params.beta;
        for arm in &mut self.arms {
            arm.n *= beta;
            arm.r *= beta;
        }
        self.touch(d as u64);
        {
            let arm = &mut self.arms[chosen - 1];
            arm.n += 1.0;
            if success {
                arm.r += 1.0;
            }
        }
        let delta_q = if success { 1.0 } else { -self.omega() };
        let alpha = self.params.alpha;
        for arm in &mut self.arms {
            arm.q *= alpha;
        }
        self.touch(d as u64);
        self.arms[chosen - 1].q += delta_q;
        self.t += 1;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Counter-based baselines (UCB1-tuned, epsilon-greedy, random)
// ---------------------------------------------------------------------------

/// One baseline arm: pull count, success count and sum of squared rewards.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BaselineArm {
    pub pulls: u64,
    pub successes: u64,
    pub sum_sq: f64,
}

impl BaselineArm {
    pub fn mean(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.successes as f64 / self.pulls as f64
        }
    }

    /// Population variance of the observed rewards.
    pub fn variance(&self) -> f64 {
        if self.pulls == 0 {
            return 0.0;
        }
        let m = self.mean();
        self.sum_sq / self.pulls as f64 - m * m
    }
}

/// Shared state for the UCB1-tuned and epsilon-greedy baselines (and the
/// bookkeeping behind uniform-random runs).
#[derive(Debug, Clone)]
pub struct BaselineState {
    arms: Vec<BaselineArm>,
    t: u64,
    epsilon: f64,
    arm_ops: Cell<u64>,
}

impl BaselineState {
    pub fn new(arm_count: usize, epsilon: f64) -> Result<Self, BanditError> {
        if arm_count < 1 {
            return Err(BanditError::TooFewArms { min: 1, got: arm_count });
        }
        check_unit("epsilon", epsilon)?;
        Ok(BaselineState {
            arms: vec![BaselineArm::default(); arm_count],
            t: 0,
            epsilon,
            arm_ops: Cell::new(0),
        })
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn arms(&self) -> &[BaselineArm] {
        &self.arms
    }

    pub fn arm_ops(&self) -> u64 {
        self.arm_ops.get()
    }

    fn touch(&self, n: u64) {
        self.arm_ops.set(self.arm_ops.get() + n);
    }

    /// UCB1-tuned index for a pulled arm, with the decision step counted
    /// from 1 (i.e. `ln(t+1)` after `t` completed feedbacks).
    fn ucb1_tuned_index(&self, arm: &BaselineArm) -> f64 {
        let ln_t = ((self.t + 1) as f64).ln();
        let n = arm.pulls as f64;
        let v = arm.variance() + (2.0 * ln_t / n).sqrt();
        arm.mean() + (ln_t / n * v.min(0.25)).sqrt()
    }

    /// UCB1-tuned selection: any unpulled arm is taken first (lowest index
    /// among them); otherwise the largest index wins, ties to the lowest
    /// index. Deterministic, so no RNG is consumed.
    pub fn select_ucb1_tuned(&self) -> usize {
        self.touch(self.arms.len() as u64);
        if let Some(i) = self.arms.iter().position(|a| a.pulls == 0) {
            return i + 1;
        }
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, arm) in self.arms.iter().enumerate() {
            let val = self.ucb1_tuned_index(arm);
            if val > best_val {
                best_val = val;
                best = i;
            }
        }
        best + 1
    }

    /// Epsilon-greedy selection: with probability `epsilon` a uniform random
    /// arm, otherwise the best empirical success rate (unpulled arms rate as
    /// 0), ties broken uniformly at random.
    pub fn select_egreedy<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if rng.gen::<f64>() < self.epsilon {
            return rng.gen_range(0..self.arms.len()) + 1;
        }
        let rates: Vec<f64> = self.arms.iter().map(|a| a.mean()).collect();
        self.touch(self.arms.len() as u64);
        argmax_random_tie(&rates, rng) + 1
    }

    /// Record one outcome for `chosen` (1-based). Rewards are 0/1, so the
    /// squared-reward sum advances by the success bit.
    pub fn feedback(&mut self, chosen: usize, success: bool) -> Result<(), BanditError> {
        let d = self.arms.len();
        if chosen < 1 || chosen > d {
            return Err(BanditError::ArmOutOfRange { index: chosen, count: d });
        }
        let arm = &mut self.arms[chosen - 1];
        arm.pulls += 1;
        if success {
            arm.successes += 1;
            arm.sum_sq += 1.0;
        }
        self.t += 1;
        self.touch(1);
        Ok(())
    }
}

/// Uniform random arm choice over `1..=arm_count`.
pub fn random_select<R: Rng + ?Sized>(arm_count: usize, rng: &mut R) -> usize {
    rng.gen_range(0..arm_count) + 1
}

// ---------------------------------------------------------------------------
// Joint channel/SF selector
// ---------------------------------------------------------------------------

/// Which learning rule drives both dimensions of a [`JointSelector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Tow,
    Ucb1Tuned,
    EpsilonGreedy,
    Random,
}

impl Policy {
    pub const ALL: [Policy; 4] =
        [Policy::Tow, Policy::Ucb1Tuned, Policy::EpsilonGreedy, Policy::Random];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Tow => "tow",
            Policy::Ucb1Tuned => "ucb1tuned",
            Policy::EpsilonGreedy => "egreedy",
            Policy::Random => "random",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tow" => Ok(Policy::Tow),
            "ucb1tuned" => Ok(Policy::Ucb1Tuned),
            "egreedy" => Ok(Policy::EpsilonGreedy),
            "random" => Ok(Policy::Random),
            other => Err(format!(
                "unknown policy `{other}` (expected tow, ucb1tuned, egreedy or random)"
            )),
        }
    }
}

/// Learning parameters shared by every policy a scenario can run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub alpha: f64,
    pub beta: f64,
    pub amp: f64,
    pub epsilon: f64,
    pub omega_max: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams { alpha: 0.9, beta: 0.9, amp: 0.5, epsilon: 0.1, omega_max: DEFAULT_OMEGA_MAX }
    }
}

impl PolicyParams {
    fn tow(&self) -> TowParams {
        TowParams { alpha: self.alpha, beta: self.beta, amp: self.amp, omega_max: self.omega_max }
    }
}

/// Per-dimension state. A dimension with a single arm needs no learning at
/// all (the choice is forced), so it stores nothing.
#[derive(Debug, Clone)]
enum DimState {
    Fixed,
    Tow(TowState),
    Baseline(BaselineState),
}

impl DimState {
    fn new(policy: Policy, arm_count: usize, params: &PolicyParams) -> Result<Self, BanditError> {
        if arm_count == 0 {
            return Err(BanditError::TooFewArms { min: 1, got: 0 });
        }
        if arm_count == 1 {
            return Ok(DimState::Fixed);
        }
        Ok(match policy {
            Policy::Tow => DimState::Tow(TowState::new(arm_count, params.tow())?),
            _ => DimState::Baseline(BaselineState::new(arm_count, params.epsilon)?),
        })
    }

    fn arm_count(&self) -> usize {
        match self {
            DimState::Fixed => 1,
            DimState::Tow(s) => s.arm_count(),
            DimState::Baseline(s) => s.arm_count(),
        }
    }

    fn t(&self) -> u64 {
        match self {
            DimState::Fixed => 0,
            DimState::Tow(s) => s.t(),
            DimState::Baseline(s) => s.t(),
        }
    }

    fn select<R: Rng + ?Sized>(&self, policy: Policy, rng: &mut R) -> usize {
        match self {
            DimState::Fixed => 1,
            // The very first decision is uniform random for every policy:
            // there is no evidence yet, and a deterministic first pick would
            // herd an entire fleet onto the same arm.
            DimState::Tow(s) => {
                if s.t() == 0 {
                    random_select(s.arm_count(), rng)
                } else {
                    s.select(rng)
                }
            }
            DimState::Baseline(s) => {
                if s.t() == 0 {
                    return random_select(s.arm_count(), rng);
                }
                match policy {
                    Policy::Ucb1Tuned => s.select_ucb1_tuned(),
                    Policy::EpsilonGreedy => s.select_egreedy(rng),
                    Policy::Random => random_select(s.arm_count(), rng),
                    Policy::Tow => unreachable!("tow runs on TowState"),
                }
            }
        }
    }

    fn feedback(&mut self, chosen: usize, success: bool) -> Result<(), BanditError> {
        match self {
            DimState::Fixed => {
                if chosen != 1 {
                    return Err(BanditError::ArmOutOfRange { index: chosen, count: 1 });
                }
                Ok(())
            }
            DimState::Tow(s) => s.feedback(chosen, success),
            DimState::Baseline(s) => s.feedback(chosen, success),
        }
    }

    fn stored_scalars(&self) -> usize {
        match self {
            DimState::Fixed => 0,
            DimState::Tow(s) => 3 * s.arm_count(),
            DimState::Baseline(s) => 3 * s.arm_count(),
        }
    }

    fn arm_ops(&self) -> u64 {
        match self {
            DimState::Fixed => 0,
            DimState::Tow(s) => s.arm_ops(),
            DimState::Baseline(s) => s.arm_ops(),
        }
    }
}

/// Two independent single-dimension bandits (channel, spreading factor)
/// sharing one policy and one success bit per decision.
#[derive(Debug, Clone)]
pub struct JointSelector {
    policy: Policy,
    ch: DimState,
    sf: DimState,
}

impl JointSelector {
    pub fn new(
        policy: Policy,
        ch_arms: usize,
        sf_arms: usize,
        params: &PolicyParams,
    ) -> Result<Self, BanditError> {
        Ok(JointSelector {
            policy,
            ch: DimState::new(policy, ch_arms, params)?,
            sf: DimState::new(policy, sf_arms, params)?,
        })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Completed decide/feedback cycles.
    pub fn t(&self) -> u64 {
        self.ch.t().max(self.sf.t())
    }

    /// Choose a `(channel_arm, sf_arm)` pair (both 1-based). Selection never
    /// mutates learning state; each dimension decides on its own.
    pub fn decide<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let ch = self.ch.select(self.policy, rng);
        let sf = self.sf.select(self.policy, rng);
        (ch, sf)
    }

    /// Feed the shared success bit to both dimensions.
    pub fn feedback(&mut self, pair: (usize, usize), success: bool) -> Result<(), BanditError> {
        self.ch.feedback(pair.0, success)?;
        self.sf.feedback(pair.1, success)
    }

    /// Number of per-arm scalars held across both dimensions: three per arm,
    /// zero for a forced single-arm dimension.
    pub fn stored_scalars(&self) -> usize {
        self.ch.stored_scalars() + self.sf.stored_scalars()
    }

    /// Combined per-arm touch count of both dimensions (diagnostic).
    pub fn arm_ops(&self) -> u64 {
        self.ch.arm_ops() + self.sf.arm_ops()
    }

    pub fn ch_arm_count(&self) -> usize {
        self.ch.arm_count()
    }

    pub fn sf_arm_count(&self) -> usize {
        self.sf.arm_count()
    }
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn check_unit(name: &'static str, value: f64) -> Result<(), BanditError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(BanditError::ParamOutOfRange { name, value });
    }
    Ok(())
}

/// Index of the maximum value; exact ties are resolved uniformly at random.
/// A single RNG draw is consumed only when there is more than one maximum.
fn argmax_random_tie<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let mut best = values[0];
    let mut count = 1usize;
    for &v in &values[1..] {
        if v > best {
            best = v;
            count = 1;
        } else if v == best {
            count += 1;
        }
    }
    if count == 1 {
        return values.iter().position(|&v| v == best).unwrap();
    }
    let pick = rng.gen_range(0..count);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap()
}

// ===========================================================================
// Tests
// ===========================================================================
