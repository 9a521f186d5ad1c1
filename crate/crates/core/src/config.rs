//! Experiment configuration: physical parameters, the stage schedule, and
//! run settings, plus validation and the flat key-value config file format.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// The drift gap `t3 - t2` must be at least this multiple of the splitter
/// window length, so the first particle's packets separate cleanly before
/// the second splitter fires.
pub const DRIFT_GAP_FACTOR: f64 = 5.0;

/// A splitter window shorter than this many integration steps is rejected.
pub const MIN_STEPS_PER_WINDOW: f64 = 10.0;

/// Relative tolerance when checking a user-supplied `u` against
/// `hbar * delta_prime / mass`.
const U_CONSISTENCY_RTOL: f64 = 1e-9;

/// Physical constants and magnet parameters shared by both particles.
///
/// `u` is the packet separation speed imparted by a splitter and is tied to
/// the field-gradient phase slope by `u = hbar * delta_prime / mass`;
/// [`ExperimentConfig::validate`] re-derives `delta_prime` from `u` so the
/// relation holds to machine precision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
    /// Initial packet width; also the scale of the equilibrium position draw.
    pub sigma0: f64,
    /// Branch separation speed after a splitter window.
    pub u: f64,
    /// Constant phase offset acquired in a splitter window.
    pub delta: f64,
    /// Linear phase slope acquired in a splitter window.
    pub delta_prime: f64,
}

/// Stage boundary times and the integration step.
///
/// The particle-A splitter acts on `[t1, t2]`, the particle-B splitter on
/// `[t3, t4]`; both windows must have equal length. The coil fires at
/// `t_coil` and trajectories are read out at `t_end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub t_coil: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl StageSchedule {
    /// Length of each splitter window.
    pub fn window_len(&self) -> f64 {
        self.t2 - self.t1
    }
}

/// Complete description of one experiment run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub physical: PhysicalParams,
    pub schedule: StageSchedule,
    /// Coil angle applied to particle A.
    pub alpha: f64,
    /// Coil angle applied to particle B.
    pub beta: f64,
    /// Master seed for all random draws.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    /// Canonical run: natural units, branch speed 5, and a schedule whose
    /// readout-time branch centers sit at 5 * 8.9 = 44.5 length units,
    /// far outside the spread packet width sqrt(26).
    fn default() -> Self {
        ExperimentConfig {
            physical: PhysicalParams {
                hbar: 1.0,
                mass: 1.0,
                sigma0: 1.0,
                u: 5.0,
                delta: 0.0,
                delta_prime: 5.0,
            },
            schedule: StageSchedule {
                t_coil: 0.5,
                t1: 1.0,
                t2: 1.1,
                t3: 5.0,
                t4: 5.1,
                t_end: 10.0,
                dt: 1e-3,
            },
            alpha: 0.0,
            beta: 0.0,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Relative coil angle seen by the post-coil spin state.
    pub fn gamma(&self) -> f64 {
        crate::spin::relative_angle(self.alpha, self.beta)
    }

    /// Checks every structural invariant and fills derived fields
    /// (`delta_prime` from `u`). Idempotent: validating a validated config
    /// returns it unchanged.
    pub fn validate(mut self) -> Result<Self, ConfigError> {
        let p = &self.physical;
        let s = &self.schedule;
        for (field, value) in [
            ("hbar", p.hbar),
            ("mass", p.mass),
            ("sigma0", p.sigma0),
            ("u", p.u),
            ("delta", p.delta),
            ("delta_prime", p.delta_prime),
            ("t_coil", s.t_coil),
            ("t1", s.t1),
            ("t2", s.t2),
            ("t3", s.t3),
            ("t4", s.t4),
            ("t_end", s.t_end),
            ("dt", s.dt),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !value.is_finite() {
                return Err(ConfigError::NonFinite { field, value });
            }
        }
        for (field, value) in [
            ("hbar", p.hbar),
            ("mass", p.mass),
            ("sigma0", p.sigma0),
            ("u", p.u),
            ("dt", s.dt),
        ] {
            if value <= 0.0 {
                return Err(ConfigError::NotPositive { field, value });
            }
        }

        let derived = p.hbar * p.delta_prime / p.mass;
        if (p.u - derived).abs() > U_CONSISTENCY_RTOL * p.u.abs() {
            return Err(ConfigError::VelocityMismatch { u: p.u, derived });
        }
        // u is primary; re-derive delta_prime so the relation is exact.
        self.physical.delta_prime = p.u * p.mass / p.hbar;

        let ordered = 0.0 < s.t_coil
            && s.t_coil < s.t1
            && s.t1 < s.t2
            && s.t2 < s.t3
            && s.t3 < s.t4
            && s.t4 < s.t_end;
        if !ordered {
            return Err(ConfigError::ScheduleOrder {
                t_coil: s.t_coil,
                t1: s.t1,
                t2: s.t2,
                t3: s.t3,
                t4: s.t4,
                t_end: s.t_end,
            });
        }

        let w1 = s.t2 - s.t1;
        let w2 = s.t4 - s.t3;
        if (w1 - w2).abs() > 1e-12 * w1 {
            return Err(ConfigError::WindowMismatch { w1, w2 });
        }

        let gap = s.t3 - s.t2;
        let required = DRIFT_GAP_FACTOR * w1;
        if gap < required {
            return Err(ConfigError::DriftGapTooShort { gap, required });
        }

        let max_dt = w1 / MIN_STEPS_PER_WINDOW;
        if s.dt > max_dt {
            return Err(ConfigError::StepTooCoarse { dt: s.dt, max_dt });
        }

        Ok(self)
    }

    /// Packet width |s_t| at time `t`.
    pub fn packet_width(&self, t: f64) -> f64 {
        let p = &self.physical;
        let tau = p.hbar * t / (2.0 * p.mass * p.sigma0 * p.sigma0);
        p.sigma0 * (1.0 + tau * tau).sqrt()
    }

    /// Ratio of the smallest readout-time branch-center distance (particle
    /// B's, `2 u (t_end - t4)`) to the packet width at readout. Readout is
    /// reliable when this comfortably exceeds [`DRIFT_GAP_FACTOR`].
    pub fn separation_ratio(&self) -> f64 {
        let spread = 2.0 * self.physical.u * (self.schedule.t_end - self.schedule.t4);
        spread / self.packet_width(self.schedule.t_end)
    }

    /// Stable digest of the full config, for tagging outputs.
    pub fn digest(&self) -> u64 {
        let text = self.to_flat_toml();
        let hash = Sha256::digest(text.as_bytes());
        u64::from_le_bytes(hash[..8].try_into().expect("sha256 yields 32 bytes"))
    }

    /// Renders the config in the flat key-value file format.
    pub fn to_flat_toml(&self) -> String {
        let flat = ConfigPatch {
            hbar: Some(self.physical.hbar),
            mass: Some(self.physical.mass),
            sigma0: Some(self.physical.sigma0),
            u: Some(self.physical.u),
            delta: Some(self.physical.delta),
            delta_prime: Some(self.physical.delta_prime),
            t_coil: Some(self.schedule.t_coil),
            t1: Some(self.schedule.t1),
            t2: Some(self.schedule.t2),
            t3: Some(self.schedule.t3),
            t4: Some(self.schedule.t4),
            t_end: Some(self.schedule.t_end),
            dt: Some(self.schedule.dt),
            alpha: Some(self.alpha),
            beta: Some(self.beta),
            seed: Some(self.seed),
        };
        toml::to_string(&flat).expect("flat config always serializes")
    }
}

/// Partial configuration: the flat config file format, and also the shape of
/// a set of command-line overrides. Any subset of keys may be present;
/// unknown keys are a hard error.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    pub hbar: Option<f64>,
    pub mass: Option<f64>,
    pub sigma0: Option<f64>,
    pub u: Option<f64>,
    pub delta: Option<f64>,
    pub delta_prime: Option<f64>,
    pub t_coil: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub t4: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigPatch {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn is_empty(&self) -> bool {
        let ConfigPatch {
            hbar,
            mass,
            sigma0,
            u,
            delta,
            delta_prime,
            t_coil,
            t1,
            t2,
            t3,
            t4,
            t_end,
            dt,
            alpha,
            beta,
            seed,
        } = self;
        hbar.is_none()
            && mass.is_none()
            && sigma0.is_none()
            && u.is_none()
            && delta.is_none()
            && delta_prime.is_none()
            && t_coil.is_none()
            && t1.is_none()
            && t2.is_none()
            && t3.is_none()
            && t4.is_none()
            && t_end.is_none()
            && dt.is_none()
            && alpha.is_none()
            && beta.is_none()
            && seed.is_none()
    }

    /// Applies the patch on top of `base`. If exactly one of `u` and
    /// `delta_prime` is patched the other is re-derived, so a file may pin
    /// either; if both are patched they must agree and `validate` checks it.
    pub fn apply(&self, base: ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base;
        let p = &mut cfg.physical;
        if let Some(v) = self.hbar {
            p.hbar = v;
        }
        if let Some(v) = self.mass {
            p.mass = v;
        }
        if let Some(v) = self.sigma0 {
            p.sigma0 = v;
        }
        if let Some(v) = self.delta {
            p.delta = v;
        }
        match (self.u, self.delta_prime) {
            (Some(u), Some(dp)) => {
                p.u = u;
                p.delta_prime = dp;
            }
            (Some(u), None) => {
                p.u = u;
                p.delta_prime = u * p.mass / p.hbar;
            }
            (None, Some(dp)) => {
                p.delta_prime = dp;
                p.u = p.hbar * dp / p.mass;
            }
            (None, None) => {}
        }
        let s = &mut cfg.schedule;
        if let Some(v) = self.t_coil {
            s.t_coil = v;
        }
        if let Some(v) = self.t1 {
            s.t1 = v;
        }
        if let Some(v) = self.t2 {
            s.t2 = v;
        }
        if let Some(v) = self.t3 {
            s.t3 = v;
        }
        if let Some(v) = self.t4 {
            s.t4 = v;
        }
        if let Some(v) = self.t_end {
            s.t_end = v;
        }
        if let Some(v) = self.dt {
            s.dt = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} must be > 0, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error(
        "stage times must satisfy 0 < t_coil < t1 < t2 < t3 < t4 < t_end, got \
         t_coil={t_coil}, t1={t1}, t2={t2}, t3={t3}, t4={t4}, t_end={t_end}"
    )]
    ScheduleOrder {
        t_coil: f64,
        t1: f64,
        t2: f64,
        t3: f64,
        t4: f64,
        t_end: f64,
    },
    #[error("splitter windows must have equal length: t2-t1={w1}, t4-t3={w2}")]
    WindowMismatch { w1: f64, w2: f64 },
    #[error("drift gap too short: t3-t2={gap} but {DRIFT_GAP_FACTOR}*(t2-t1)={required} required")]
    DriftGapTooShort { gap: f64, required: f64 },
    #[error("dt={dt} too coarse: the splitter window needs at least {MIN_STEPS_PER_WINDOW} steps (dt <= {max_dt})")]
    StepTooCoarse { dt: f64, max_dt: f64 },
    #[error("u={u} disagrees with hbar*delta_prime/mass={derived}; set one and let the other derive")]
    VelocityMismatch { u: f64, derived: f64 },
    #[error("failed to read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config file rejected: {0}")]
    Parse(#[from] toml::de::Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        let cfg = ExperimentConfig::default().validate().unwrap();
        assert_eq!(cfg.physical.u, 5.0);
        assert_eq!(cfg.physical.delta_prime, 5.0);
        // Branch centers at readout sit at u*(t_end - t2) = 44.5, far beyond
        // the packet width sqrt(26).
        let drift = cfg.physical.u * (cfg.schedule.t_end - cfg.schedule.t2);
        assert_eq!(drift, 44.5);
        let width = cfg.packet_width(cfg.schedule.t_end);
        assert!((width - 26.0_f64.sqrt()).abs() < 1e-15);
        assert!(drift > DRIFT_GAP_FACTOR * width);
        assert!(cfg.separation_ratio() > DRIFT_GAP_FACTOR);
    }

    #[test]
    fn validate_is_idempotent() {
        let once = ExperimentConfig::default().validate().unwrap();
        let twice = once.validate().unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn derived_velocity_relation_is_exact() {
        let mut cfg = ExperimentConfig::default();
        cfg.physical.hbar = 0.7;
        cfg.physical.mass = 1.3;
        cfg.physical.u = 2.9;
        cfg.physical.delta_prime = 2.9 * 1.3 / 0.7;
        let cfg = cfg.validate().unwrap();
        assert_eq!(
            cfg.physical.u * cfg.physical.mass,
            cfg.physical.hbar * cfg.physical.delta_prime
        );
    }

    #[test]
    fn inconsistent_velocity_pair_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.physical.delta_prime = 4.0;
        match cfg.validate() {
            Err(ConfigError::VelocityMismatch { .. }) => {}
            other => panic!("expected VelocityMismatch, got {other:?}"),
        }
    }

    #[test]
    fn schedule_order_violations_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.schedule.t3 = 1.05; // inside the A window
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::ScheduleOrder { .. })
        ));

        let mut cfg = ExperimentConfig::default();
        cfg.schedule.t_coil = 0.0;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::ScheduleOrder { .. })
        ));
    }

    #[test]
    fn unequal_windows_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.schedule.t4 = 5.2;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::WindowMismatch { .. })
        ));
    }

    #[test]
    fn short_drift_gap_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.schedule.t3 = 1.3;
        cfg.schedule.t4 = 1.4;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::DriftGapTooShort { .. })
        ));
    }

    #[test]
    fn coarse_step_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.schedule.dt = 0.02; // window is 0.1, so at most 0.01
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn nonpositive_sigma_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.physical.sigma0 = 0.0;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::NotPositive { field: "sigma0", .. })
        ));
    }

    #[test]
    fn nonfinite_field_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.schedule.t_end = f64::NAN;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::NonFinite { field: "t_end", .. })
        ));
    }

    #[test]
    fn patch_overrides_and_derives() {
        let patch = ConfigPatch::parse("delta_prime = 3.0\nseed = 11\n").unwrap();
        let cfg = patch
            .apply(ExperimentConfig::default())
            .validate()
            .unwrap();
        assert_eq!(cfg.physical.u, 3.0);
        assert_eq!(cfg.physical.delta_prime, 3.0);
        assert_eq!(cfg.seed, 11);
        // Untouched fields keep their defaults.
        assert_eq!(cfg.schedule.t_end, 10.0);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ConfigPatch::parse("sigma_zero = 1.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(err.to_string().contains("sigma_zero"));
    }

    #[test]
    fn flat_toml_round_trips() {
        let cfg = ExperimentConfig::default().validate().unwrap();
        let text = cfg.to_flat_toml();
        let back = ConfigPatch::parse(&text)
            .unwrap()
            .apply(ExperimentConfig::default())
            .validate()
            .unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn digest_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a;
        b.seed = 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), ExperimentConfig::default().digest());
    }
}
