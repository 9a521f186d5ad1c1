//! Guidance dynamics: the configuration-space velocity field and its
//! fixed-step fourth-order Runge-Kutta integration.
//!
//! The integrator walks a precomputed time grid whose steps are aligned to
//! the stage boundaries. The blend windows join the stages with merely C1
//! velocity fields, so a step that straddled a window edge would degrade
//! the integration order; aligning segment boundaries to `t1..t4` keeps
//! every step inside a smooth regime.

use crate::config::ExperimentConfig;
use crate::wavefunction::{field_sample, FieldSample, GammaWeights, StageId, TimeSlice};
use thiserror::Error;

/// True density floor below which the velocity is treated as undefined.
pub const DENSITY_FLOOR: f64 = 1e-300;

// ln(DENSITY_FLOOR); the guard compares in log space so the density itself
// never has to be exponentiated.
const LOG_DENSITY_FLOOR: f64 = -690.7755278982137;

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error(
        "density underflow at (z_a={z_a}, z_b={z_b}, t={t}): below {DENSITY_FLOOR:e}, \
         velocity undefined"
    )]
    DensityUnderflow { z_a: f64, z_b: f64, t: f64 },
    #[error(
        "single-particle density underflow at (z={z}, t={t}): below {DENSITY_FLOOR:e}, \
         velocity undefined"
    )]
    SingleDensityUnderflow { z: f64, t: f64 },
    #[error("time must be >= 0, got {t}")]
    NegativeTime { t: f64 },
    #[error("snapshot times must be ascending and within [0, {t_end}], got {t}")]
    SnapshotTime { t: f64, t_end: f64 },
    #[error(
        "branch amplitudes must satisfy c_plus^2 + c_minus^2 = 1, got {c_plus}^2 + {c_minus}^2 \
         = {sum}"
    )]
    BadAmplitudes { c_plus: f64, c_minus: f64, sum: f64 },
}

/// A configuration-space point on a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairPosition {
    pub t: f64,
    pub z_a: f64,
    pub z_b: f64,
}

/// Recorded pair trajectory, tagged with the digest of the config that
/// produced it so downstream files can assert provenance.
#[derive(Clone, Debug)]
pub struct PairTrajectory {
    pub samples: Vec<PairPosition>,
    pub config_digest: u64,
}

/// One recorded point of a single-particle trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplePoint {
    pub t: f64,
    pub z: f64,
}

/// Single-particle splitter trajectory plus its readout sign.
#[derive(Clone, Debug)]
pub struct SingleTrajectory {
    pub samples: Vec<SamplePoint>,
    pub sign: i8,
}

/// Detector readout convention: the non-negative side (including -0.0)
/// counts as +1.
pub fn sign_of(z: f64) -> i8 {
    if z >= 0.0 {
        1
    } else {
        -1
    }
}

#[inline]
fn velocity_from(f: &FieldSample, slice: &TimeSlice, z_a: f64, z_b: f64) -> Result<(f64, f64), GuidanceError> {
    // f.rho is anchored near 1; its log stays finite whenever rho > 0.
    let log_rho = f.log_scale + f.rho.ln();
    if log_rho <= LOG_DENSITY_FLOOR || !log_rho.is_finite() {
        return Err(GuidanceError::DensityUnderflow { z_a, z_b, t: slice.t });
    }
    Ok((f.j_a / f.rho, f.j_b / f.rho))
}

/// Guidance velocity `(dz_a/dt, dz_b/dt)` at a configuration-space point.
pub fn velocity(
    z_a: f64,
    z_b: f64,
    t: f64,
    cfg: &ExperimentConfig,
) -> Result<(f64, f64), GuidanceError> {
    if t < 0.0 {
        return Err(GuidanceError::NegativeTime { t });
    }
    let slice = TimeSlice::new(t, cfg);
    let gw = GammaWeights::new(cfg.gamma());
    let f = field_sample(&slice, &gw, z_a, z_b);
    velocity_from(&f, &slice, z_a, z_b)
}

// One Runge-Kutta step: slices at the step start, midpoint, and end.
struct Step {
    t0: f64,
    h: f64,
    s0: TimeSlice,
    sm: TimeSlice,
    s1: TimeSlice,
}

/// Precomputed integration grid for one config: step sizes, per-step stage
/// slices, and the spin mixing weights. Sharable across trajectories.
pub struct TimeGrid {
    steps: Vec<Step>,
    gw: GammaWeights,
    t_end: f64,
    config_digest: u64,
}

impl TimeGrid {
    pub fn new(cfg: &ExperimentConfig) -> TimeGrid {
        let s = &cfg.schedule;
        let bounds = [0.0, s.t1, s.t2, s.t3, s.t4, s.t_end];
        let mut steps = Vec::new();
        for w in bounds.windows(2) {
            let (start, end) = (w[0], w[1]);
            let len = end - start;
            // Round the step count up so h <= dt; the slack keeps exact
            // multiples like 1.0/1e-3 from spilling into an extra step.
            let n = ((len / s.dt - 1e-9).ceil()).max(1.0) as usize;
            let h = len / n as f64;
            for i in 0..n {
                let t0 = start + i as f64 * h;
                let t1 = if i + 1 == n {
                    end
                } else {
                    start + (i + 1) as f64 * h
                };
                let hi = t1 - t0;
                steps.push(Step {
                    t0,
                    h: hi,
                    s0: TimeSlice::new(t0, cfg),
                    sm: TimeSlice::new(t0 + 0.5 * hi, cfg),
                    s1: TimeSlice::new(t1, cfg),
                });
            }
        }
        TimeGrid {
            steps,
            gw: GammaWeights::new(cfg.gamma()),
            t_end: s.t_end,
            config_digest: cfg.digest(),
        }
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    #[inline]
    fn eval(&self, slice: &TimeSlice, y: (f64, f64)) -> Result<(f64, f64), GuidanceError> {
        let f = field_sample(slice, &self.gw, y.0, y.1);
        velocity_from(&f, slice, y.0, y.1)
    }

    #[inline]
    fn rk4(&self, step: &Step, y: (f64, f64)) -> Result<(f64, f64), GuidanceError> {
        let h = step.h;
        let k1 = self.eval(&step.s0, y)?;
        let k2 = self.eval(&step.sm, (y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1))?;
        let k3 = self.eval(&step.sm, (y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1))?;
        let k4 = self.eval(&step.s1, (y.0 + h * k3.0, y.1 + h * k3.1))?;
        Ok((
            y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        ))
    }

    /// Integrate to `t_end` without recording intermediate points.
    pub fn integrate(&self, z0: (f64, f64)) -> Result<PairPosition, GuidanceError> {
        let mut y = z0;
        for step in &self.steps {
            y = self.rk4(step, y)?;
        }
        Ok(PairPosition {
            t: self.t_end,
            z_a: y.0,
            z_b: y.1,
        })
    }

    /// Integrate, recording every `stride`-th step boundary plus the final
    /// point. `stride` is clamped to at least 1.
    pub fn integrate_recording(
        &self,
        z0: (f64, f64),
        stride: usize,
    ) -> Result<PairTrajectory, GuidanceError> {
        let stride = stride.max(1);
        let mut samples = Vec::with_capacity(self.steps.len() / stride + 2);
        let mut y = z0;
        for (i, step) in self.steps.iter().enumerate() {
            if i % stride == 0 {
                samples.push(PairPosition {
                    t: step.t0,
                    z_a: y.0,
                    z_b: y.1,
                });
            }
            y = self.rk4(step, y)?;
        }
        samples.push(PairPosition {
            t: self.t_end,
            z_a: y.0,
            z_b: y.1,
        });
        Ok(PairTrajectory {
            samples,
            config_digest: self.config_digest,
        })
    }

    /// Positions at the grid boundaries nearest each requested time.
    /// `times` must be ascending and within `[0, t_end]`; requested times
    /// land on exact step boundaries whenever they match one, which holds
    /// for all stage boundaries by construction.
    pub fn positions_at(
        &self,
        z0: (f64, f64),
        times: &[f64],
    ) -> Result<Vec<PairPosition>, GuidanceError> {
        let mut prev = f64::NEG_INFINITY;
        for &t in times {
            if !(0.0..=self.t_end).contains(&t) || t < prev {
                return Err(GuidanceError::SnapshotTime { t, t_end: self.t_end });
            }
            prev = t;
        }
        let mut out = Vec::with_capacity(times.len());
        let mut targets = times.iter().copied().peekable();
        let mut y = z0;
        for step in &self.steps {
            let mid = step.t0 + 0.5 * step.h;
            while targets.peek().is_some_and(|&t| t <= mid) {
                out.push(PairPosition {
                    t: step.t0,
                    z_a: y.0,
                    z_b: y.1,
                });
                targets.next();
            }
            y = self.rk4(step, y)?;
        }
        for _ in targets {
            out.push(PairPosition {
                t: self.t_end,
                z_a: y.0,
                z_b: y.1,
            });
        }
        Ok(out)
    }

    /// Single-particle splitter trajectory on this grid. The particle sees
    /// only the A-side schedule: free flight, the `[t1, t2]` blend, then a
    /// two-branch split weighted by `c_plus^2` and `c_minus^2`.
    pub fn integrate_single(
        &self,
        z0: f64,
        c_plus: f64,
        c_minus: f64,
        stride: usize,
    ) -> Result<SingleTrajectory, GuidanceError> {
        let sum = c_plus * c_plus + c_minus * c_minus;
        if !((sum - 1.0).abs() <= 1e-6) {
            return Err(GuidanceError::BadAmplitudes { c_plus, c_minus, sum });
        }
        let (cp2, cm2) = (c_plus * c_plus, c_minus * c_minus);
        let stride = stride.max(1);
        let mut samples = Vec::with_capacity(self.steps.len() / stride + 2);
        let mut z = z0;
        for (i, step) in self.steps.iter().enumerate() {
            if i % stride == 0 {
                samples.push(SamplePoint { t: step.t0, z });
            }
            let h = step.h;
            let k1 = single_velocity_at(&step.s0, z, cp2, cm2)?;
            let k2 = single_velocity_at(&step.sm, z + 0.5 * h * k1, cp2, cm2)?;
            let k3 = single_velocity_at(&step.sm, z + 0.5 * h * k2, cp2, cm2)?;
            let k4 = single_velocity_at(&step.s1, z + h * k3, cp2, cm2)?;
            z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        samples.push(SamplePoint { t: self.t_end, z });
        Ok(SingleTrajectory {
            samples,
            sign: sign_of(z),
        })
    }
}

// Single-particle velocity on a slice. Reuses the pair slice kinematics;
// only the A-side schedule matters, so the B stages reduce to the split
// regime.
fn single_velocity_at(
    slice: &TimeSlice,
    z: f64,
    cp2: f64,
    cm2: f64,
) -> Result<f64, GuidanceError> {
    let (num, den, anchor) = match slice.stage {
        StageId::Free | StageId::PostCoil => {
            let lf = -z * z * slice.inv2sig2;
            (slice.kappa * z, 1.0, lf)
        }
        StageId::BlendA => {
            let lf = -z * z * slice.inv2sig2;
            let lp = -(z - slice.c_a) * (z - slice.c_a) * slice.inv2sig2;
            let lm = -(z + slice.c_a) * (z + slice.c_a) * slice.inv2sig2;
            let anchor = lf.max(lp).max(lm);
            let wf = (lf - anchor).exp();
            let (wp, wm) = ((lp - anchor).exp(), (lm - anchor).exp());
            let vp = slice.kappa * (z - slice.c_a) + slice.u;
            let vm = slice.kappa * (z + slice.c_a) - slice.u;
            let l = slice.lambda;
            let rho = (1.0 - l) * wf + l * (cp2 * wp + cm2 * wm);
            let j = (1.0 - l) * wf * slice.kappa * z + l * (cp2 * wp * vp + cm2 * wm * vm);
            (j, rho, anchor)
        }
        StageId::SplitA | StageId::BlendB | StageId::SplitBoth => {
            let lp = -(z - slice.c_a) * (z - slice.c_a) * slice.inv2sig2;
            let lm = -(z + slice.c_a) * (z + slice.c_a) * slice.inv2sig2;
            let anchor = lp.max(lm);
            let (wp, wm) = ((lp - anchor).exp(), (lm - anchor).exp());
            let vp = slice.kappa * (z - slice.c_a) + slice.u;
            let vm = slice.kappa * (z + slice.c_a) - slice.u;
            (cp2 * wp * vp + cm2 * wm * vm, cp2 * wp + cm2 * wm, anchor)
        }
    };
    // Single-particle normalization is the square root of the pair one.
    let log_rho = anchor + den.ln() + 0.5 * slice.log_norm2;
    if log_rho <= LOG_DENSITY_FLOOR || !log_rho.is_finite() {
        return Err(GuidanceError::SingleDensityUnderflow { z, t: slice.t });
    }
    Ok(num / den)
}

/// Single-particle guidance velocity for branch amplitudes
/// `(c_plus, c_minus)`; the window-A schedule applies.
pub fn single_velocity(
    z: f64,
    t: f64,
    c_plus: f64,
    c_minus: f64,
    cfg: &ExperimentConfig,
) -> Result<f64, GuidanceError> {
    if t < 0.0 {
        return Err(GuidanceError::NegativeTime { t });
    }
    let sum = c_plus * c_plus + c_minus * c_minus;
    if !((sum - 1.0).abs() <= 1e-6) {
        return Err(GuidanceError::BadAmplitudes { c_plus, c_minus, sum });
    }
    let slice = TimeSlice::new(t, cfg);
    single_velocity_at(&slice, z, c_plus * c_plus, c_minus * c_minus)
}

/// Integrate one pair trajectory, recording every step.
pub fn integrate_pair(
    z0: (f64, f64),
    cfg: &ExperimentConfig,
) -> Result<PairTrajectory, GuidanceError> {
    TimeGrid::new(cfg).integrate_recording(z0, 1)
}

/// Integrate one pair trajectory, recording every `stride`-th step.
pub fn integrate_pair_decimated(
    z0: (f64, f64),
    cfg: &ExperimentConfig,
    stride: usize,
) -> Result<PairTrajectory, GuidanceError> {
    TimeGrid::new(cfg).integrate_recording(z0, stride)
}

/// Final configuration-space point of one pair trajectory.
pub fn final_position(
    z0: (f64, f64),
    cfg: &ExperimentConfig,
) -> Result<PairPosition, GuidanceError> {
    TimeGrid::new(cfg).integrate(z0)
}

/// Single-particle splitter run with per-step recording.
pub fn integrate_single(
    z0: f64,
    c_plus: f64,
    c_minus: f64,
    cfg: &ExperimentConfig,
    stride: usize,
) -> Result<SingleTrajectory, GuidanceError> {
    TimeGrid::new(cfg).integrate_single(z0, c_plus, c_minus, stride)
}
