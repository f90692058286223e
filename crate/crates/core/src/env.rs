//! The controlled spin as a finite-state decision process.
//!
//! States are grid cells of the Bloch sphere, actions are the three switch
//! unitaries, and the reward is a step function of the fidelity with the
//! target state.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::quantum::{
    apply, bloch_to_state, build_control_set, fidelity_pure, state_to_bloch, BlochPoint,
    ControlSet, PureState,
};

/// Number of control actions under three-switch control.
pub const NUM_ACTIONS: usize = 3;

/// Reward levels and their fidelity breakpoints.
pub const REWARD_LOW: f64 = 10.0;
pub const REWARD_MID: f64 = 100.0;
pub const REWARD_HIGH: f64 = 10_000.0;
pub const REWARD_LOW_MAX_FIDELITY: f64 = 0.5;
pub const REWARD_MID_MAX_FIDELITY: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub initial: BlochPoint,
    pub target: BlochPoint,
    pub theta_bins: usize,
    pub phi_bins: usize,
    pub max_steps: usize,
    pub success_fidelity: f64,
    /// Draw a uniformly random start state at every reset instead of `initial`.
    pub random_start: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            initial: BlochPoint::new(PI / 60.0, PI / 30.0).expect("valid default"),
            target: BlochPoint::new(41.0 * PI / 60.0, 29.0 * PI / 30.0).expect("valid default"),
            theta_bins: 60,
            phi_bins: 60,
            max_steps: 200,
            success_fidelity: 0.99,
            random_start: false,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta_bins < 2 || self.phi_bins < 2 {
            return Err(Error::invalid("theta_bins and phi_bins must be at least 2"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be positive"));
        }
        if !(0.0..=1.0).contains(&self.success_fidelity) {
            return Err(Error::invalid(format!(
                "success_fidelity {} must lie in [0, 1]",
                self.success_fidelity
            )));
        }
        Ok(())
    }

    /// [`EnvConfig::validate`] plus the requirement that success lies above
    /// the top reward breakpoint. Applied to user-supplied configs.
    pub fn validate_strict(&self) -> Result<()> {
        self.validate()?;
        if self.success_fidelity <= REWARD_MID_MAX_FIDELITY {
            return Err(Error::invalid(format!(
                "success_fidelity {} must exceed {REWARD_MID_MAX_FIDELITY}",
                self.success_fidelity
            )));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.theta_bins * self.phi_bins
    }

    pub fn initial_state(&self) -> PureState {
        bloch_to_state(&self.initial)
    }

    pub fn target_state(&self) -> PureState {
        bloch_to_state(&self.target)
    }
}

/// Row-major cell index on the (θ, φ) grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateIndex(pub usize);

/// One of the three switch actions: 0 ↔ U1, 1 ↔ U2, 2 ↔ U3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(u8);

impl ActionId {
    pub const ALL: [ActionId; NUM_ACTIONS] = [ActionId(0), ActionId(1), ActionId(2)];

    pub fn new(id: usize) -> Result<Self> {
        if id < NUM_ACTIONS {
            Ok(ActionId(id as u8))
        } else {
            Err(Error::invalid(format!("action id {id} out of range")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> &'static str {
        ["U1", "U2", "U3"][self.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: PureState,
    pub next_index: StateIndex,
    pub reward: f64,
    pub fidelity: f64,
    pub done: bool,
}

/// Ordered list of switch actions.
pub type ControlSequence = Vec<ActionId>;

/// Renders a sequence as `U2 U1 U3 ...`.
pub fn format_sequence(seq: &[ActionId]) -> String {
    seq.iter().map(|a| a.label()).collect::<Vec<_>>().join(" ")
}

// Grid-aligned angles (the default endpoints are multiples of π/60) land
// on bin edges; snapping absorbs the last-ulp error of the division.
fn bin_of(fraction_times_bins: f64) -> f64 {
    let nearest = fraction_times_bins.round();
    if (fraction_times_bins - nearest).abs() < 1e-9 {
        nearest
    } else {
        fraction_times_bins.floor()
    }
}

/// Maps a Bloch point to its grid cell.
pub fn discretize(p: &BlochPoint, cfg: &EnvConfig) -> StateIndex {
    let tb = cfg.theta_bins;
    let pb = cfg.phi_bins;
    let t = bin_of(p.theta() / PI * tb as f64).max(0.0) as usize;
    let t = t.min(tb - 1);
    let f = bin_of(p.phi() / TAU * pb as f64).max(0.0) as usize % pb;
    StateIndex(t * pb + f)
}

/// Reward as a step function of fidelity: 10, 100 or 10000.
pub fn reward_from_fidelity(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::invalid(format!("fidelity {f} outside [0, 1]")));
    }
    Ok(if f <= REWARD_LOW_MAX_FIDELITY {
        REWARD_LOW
    } else if f <= REWARD_MID_MAX_FIDELITY {
        REWARD_MID
    } else {
        REWARD_HIGH
    })
}

/// Fidelity with the target after applying `seq` to the initial state.
pub fn evaluate_sequence(seq: &[ActionId], cfg: &EnvConfig) -> f64 {
    let controls = build_control_set();
    let state = seq.iter().fold(cfg.initial_state(), |s, a| {
        apply(controls.get(a.index()).expect("action in range"), &s)
    });
    fidelity_pure(&state, &cfg.target_state())
}

/// Episode state machine for one spin under three-switch control.
#[derive(Debug, Clone)]
pub struct SpinEnv {
    cfg: EnvConfig,
    controls: ControlSet,
    target: PureState,
    state: PureState,
    index: StateIndex,
    steps: usize,
    done: bool,
    started: bool,
}

impl SpinEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let state = cfg.initial_state();
        let index = discretize(&cfg.initial, &cfg);
        Ok(Self {
            target: cfg.target_state(),
            controls: build_control_set(),
            cfg,
            state,
            index,
            steps: 0,
            done: false,
            started: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn index(&self) -> StateIndex {
        self.index
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Current fidelity with the target.
    pub fn fidelity(&self) -> f64 {
        fidelity_pure(&self.state, &self.target)
    }

    /// Returns to the configured initial state.
    pub fn reset(&mut self) -> (PureState, StateIndex) {
        self.start_from(self.cfg.initial)
    }

    /// Like [`SpinEnv::reset`], but honours `random_start` by drawing a
    /// uniformly distributed point on the sphere from `rng`.
    pub fn reset_with<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (PureState, StateIndex) {
        if !self.cfg.random_start {
            return self.reset();
        }
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..TAU);
        let p = BlochPoint::new(z.acos(), phi).expect("sampled angles are in range");
        self.start_from(p)
    }

    fn start_from(&mut self, p: BlochPoint) -> (PureState, StateIndex) {
        self.state = bloch_to_state(&p);
        self.index = discretize(&p, &self.cfg);
        self.steps = 0;
        self.done = false;
        self.started = true;
        (self.state, self.index)
    }

    pub fn step(&mut self, a: ActionId) -> Result<StepOutcome> {
        if !self.started {
            return Err(Error::IllegalState("step called before reset".into()));
        }
        if self.done {
            return Err(Error::IllegalState("step called after episode end".into()));
        }
        let u = self.controls.get(a.index()).expect("action in range");
        self.state = apply(u, &self.state);
        self.steps += 1;
        let fidelity = fidelity_pure(&self.state, &self.target);
        let reward = reward_from_fidelity(fidelity)?;
        self.index = discretize(&state_to_bloch(&self.state)?, &self.cfg);
        self.done = fidelity >= self.cfg.success_fidelity || self.steps >= self.cfg.max_steps;
        Ok(StepOutcome {
            next_state: self.state,
            next_index: self.index,
            reward,
            fidelity,
            done: self.done,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute-force binning: scan bin intervals instead of dividing.
    fn scan_bin(value: f64, width: f64, bins: usize) -> usize {
        (0..bins)
            .rev()
            .find(|&k| value >= k as f64 * width - 1e-12)
            .unwrap_or(0)
    }

    #[test]
    fn discretize_examples() {
        let cfg = EnvConfig::default();
        let p = |t, f| BlochPoint::new(t, f).unwrap();
        assert_eq!(discretize(&p(0.0, 0.0), &cfg), StateIndex(0));
        assert_eq!(discretize(&p(PI, TAU - 1e-9), &cfg), StateIndex(3599));
        assert_eq!(discretize(&cfg.initial, &cfg), StateIndex(61));

        let tb = scan_bin(PI / 60.0, PI / 60.0, 60);
        let fb = scan_bin(PI / 30.0, TAU / 60.0, 60);
        assert_eq!(tb * 60 + fb, 61);
        let target = discretize(&cfg.target, &cfg);
        let tb = scan_bin(41.0 * PI / 60.0, PI / 60.0, 60);
        let fb = scan_bin(29.0 * PI / 30.0, TAU / 60.0, 60);
        assert_eq!(target, StateIndex(tb * 60 + fb));
    }

    #[test]
    fn discretize_matches_scan_off_boundaries() {
        let cfg = EnvConfig {
            theta_bins: 7,
            phi_bins: 11,
            ..EnvConfig::default()
        };
        for i in 0..500 {
            let theta = PI * (i as f64 * 0.618_033_988_75).fract();
            let phi = TAU * (i as f64 * 0.414_213_562_37).fract();
            let idx = discretize(&BlochPoint::new(theta, phi).unwrap(), &cfg);
            let tb = scan_bin(theta, PI / 7.0, 7);
            let fb = scan_bin(phi, TAU / 11.0, 11);
            assert_eq!(idx, StateIndex(tb * 11 + fb), "theta={theta} phi={phi}");
        }
    }

    #[test]
    fn reward_levels() {
        assert_eq!(reward_from_fidelity(0.4).unwrap(), 10.0);
        assert_eq!(reward_from_fidelity(0.5).unwrap(), 10.0);
        assert_eq!(reward_from_fidelity(0.6).unwrap(), 100.0);
        assert_eq!(reward_from_fidelity(0.7).unwrap(), 100.0);
        assert_eq!(reward_from_fidelity(0.8).unwrap(), 10000.0);
        assert!(reward_from_fidelity(-0.01).is_err());
        assert!(reward_from_fidelity(1.01).is_err());
        assert!(reward_from_fidelity(f64::NAN).is_err());
    }

    #[test]
    fn reset_is_deterministic() {
        let mut env = SpinEnv::new(EnvConfig::default()).unwrap();
        let a = env.reset();
        env.step(ActionId::new(1).unwrap()).unwrap();
        let b = env.reset();
        assert_eq!(a, b);
        assert_eq!(env.steps(), 0);
        assert_abs_diff_eq!(fidelity_pure(&a.0, &env.config().initial_state()), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn free_evolution_keeps_polar_angle() {
        let mut env = SpinEnv::new(EnvConfig::default()).unwrap();
        let (s0, _) = env.reset();
        let theta0 = state_to_bloch(&s0).unwrap().theta();
        let out = env.step(ActionId::new(0).unwrap()).unwrap();
        let p = state_to_bloch(&out.next_state).unwrap();
        assert_abs_diff_eq!(p.theta(), theta0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phi(), PI / 30.0 + PI / 15.0, epsilon = 1e-12);
    }

    #[test]
    fn episode_ends_at_step_cap() {
        let cfg = EnvConfig {
            max_steps: 5,
            ..EnvConfig::default()
        };
        let mut env = SpinEnv::new(cfg).unwrap();
        env.reset();
        for k in 1..=5 {
            let out = env.step(ActionId::new(0).unwrap()).unwrap();
            assert_eq!(out.done, k == 5);
        }
        assert!(matches!(
            env.step(ActionId::new(0).unwrap()),
            Err(Error::IllegalState(_))
        ));
    }

    #[test]
    fn episode_ends_at_threshold() {
        // Target equals the state reached after one free step.
        let base = EnvConfig::default();
        let target = BlochPoint::new(PI / 60.0, PI / 30.0 + PI / 15.0).unwrap();
        let cfg = EnvConfig { target, ..base };
        let mut env = SpinEnv::new(cfg).unwrap();
        env.reset();
        let out = env.step(ActionId::new(0).unwrap()).unwrap();
        assert!(out.fidelity >= 0.99);
        assert!(out.done);
    }

    #[test]
    fn step_before_reset_is_illegal() {
        let mut env = SpinEnv::new(EnvConfig::default()).unwrap();
        assert!(matches!(
            env.step(ActionId::new(0).unwrap()),
            Err(Error::IllegalState(_))
        ));
    }

    #[test]
    fn sequence_evaluation() {
        let cfg = EnvConfig::default();
        let base = fidelity_pure(&cfg.initial_state(), &cfg.target_state());
        assert_eq!(evaluate_sequence(&[], &cfg), base);
        let u1 = ActionId::new(0).unwrap();
        let theta0 = cfg.initial.theta();
        for k in 1..=30 {
            let seq = vec![u1; k];
            // Rebuild the rotated point and compare through the Bloch dot product.
            let phi = cfg.initial.phi() + k as f64 * PI / 15.0;
            let moved = BlochPoint::new(theta0, phi).unwrap().to_cartesian();
            let t = cfg.target.to_cartesian();
            let cos: f64 = moved.iter().zip(&t).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(evaluate_sequence(&seq, &cfg), 0.5 * (1.0 + cos), epsilon = 1e-12);
        }
    }

    #[test]
    fn sequence_matches_stepping() {
        let cfg = EnvConfig::default();
        let seq: Vec<ActionId> = (0..40).map(|i| ActionId::new((i * 7 + i / 3) % 3).unwrap()).collect();
        let mut env = SpinEnv::new(cfg.clone()).unwrap();
        env.reset();
        let mut last = 0.0;
        for &a in &seq {
            last = env.step(a).unwrap().fidelity;
        }
        assert_abs_diff_eq!(evaluate_sequence(&seq, &cfg), last, epsilon = 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EnvConfig::default();
        cfg.theta_bins = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = EnvConfig::default();
        cfg.success_fidelity = 0.7;
        assert!(cfg.validate().is_ok());
        assert!(cfg.validate_strict().is_err());
        cfg.success_fidelity = 1.5;
        assert!(cfg.validate().is_err());
        assert!(SpinEnv::new(EnvConfig {
            max_steps: 0,
            ..EnvConfig::default()
        })
        .is_err());
    }
}
