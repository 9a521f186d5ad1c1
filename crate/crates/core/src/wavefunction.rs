//! Stage wavefunctions of the two-particle experiment: Gaussian packet
//! amplitudes, per-stage position densities and probability currents, and
//! the cosine-ramp blends that bridge the splitter windows.
//!
//! Two evaluation routes exist on purpose. The complex amplitudes
//! ([`free_packet`], [`sg_component`]) are the reference forms; the density
//! and current evaluators used by the guidance dynamics work with packet
//! log-weights so that intermediate factors can be rescaled by the dominant
//! branch and late-time velocity ratios never underflow.

use crate::config::{ExperimentConfig, StageSchedule};
use num_complex::Complex64;
use thiserror::Error;

/// Dynamical regime at a given time, dispatched half-open on the schedule:
/// a boundary time belongs to the later stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageId {
    /// Both packets free, coil not yet fired.
    Free,
    /// After the coil: spin state rotated, spatial dynamics unchanged.
    PostCoil,
    /// Particle A's splitter window, blending PostCoil into SplitA.
    BlendA,
    /// A's packet split in two branches; B still free.
    SplitA,
    /// Particle B's splitter window, blending SplitA into SplitBoth.
    BlendB,
    /// Both packets split; the entangled four-branch regime.
    SplitBoth,
}

/// The two splitter blend windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlendWindow {
    /// `[t1, t2]`, bridging PostCoil to SplitA.
    A,
    /// `[t3, t4]`, bridging SplitA to SplitBoth.
    B,
}

pub fn stage_at(t: f64, s: &StageSchedule) -> StageId {
    if t < s.t_coil {
        StageId::Free
    } else if t < s.t1 {
        StageId::PostCoil
    } else if t < s.t2 {
        StageId::BlendA
    } else if t < s.t3 {
        StageId::SplitA
    } else if t < s.t4 {
        StageId::BlendB
    } else {
        StageId::SplitBoth
    }
}

/// Blend weight: 0 at the window start, 1 at the end, cosine-smooth so the
/// velocity field stays continuously differentiable at both edges.
pub fn blend_lambda(t: f64, start: f64, end: f64) -> f64 {
    (1.0 - (std::f64::consts::PI * (t - start) / (end - start)).cos()) / 2.0
}

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("time must be >= 0, got {t}")]
    NegativeTime { t: f64 },
    #[error("no split packet exists before the splitter exit: t={t} < t_exit={t_exit}")]
    BeforeExit { t: f64, t_exit: f64 },
    #[error("stage {stage:?} is not defined at t={t}")]
    StageTimeMismatch { t: f64, stage: StageId },
    #[error("t={t} lies outside the blend window [{start}, {end}]")]
    OutsideBlendWindow { t: f64, start: f64, end: f64 },
}

/// Complex width of a packet born with real width `sigma0`.
fn complex_width(t: f64, cfg: &ExperimentConfig) -> Complex64 {
    let p = &cfg.physical;
    let tau = p.hbar * t / (2.0 * p.mass * p.sigma0 * p.sigma0);
    Complex64::new(p.sigma0, p.sigma0 * tau)
}

/// Normalized free Gaussian packet centered at the origin,
/// `(2 pi s_t^2)^(-1/4) exp(-z^2 / (4 sigma0 s_t))`.
pub fn free_packet(z: f64, t: f64, cfg: &ExperimentConfig) -> Result<Complex64, WaveError> {
    if t < 0.0 {
        return Err(WaveError::NegativeTime { t });
    }
    let s_t = complex_width(t, cfg);
    let prefactor = (2.0 * std::f64::consts::PI).powf(-0.25) / s_t.sqrt();
    let exponent = -z * z / (4.0 * cfg.physical.sigma0 * s_t);
    Ok(prefactor * exponent.exp())
}

/// Branch packet after a splitter: center drifts at `sign * u` from the
/// window exit while the width keeps the global clock, so the modulus joins
/// the free packet continuously at `t_exit`. The phase carries the splitter
/// offset `delta` and slope `delta_prime`.
pub fn sg_component(
    z: f64,
    t: f64,
    sign: i8,
    t_exit: f64,
    cfg: &ExperimentConfig,
) -> Result<Complex64, WaveError> {
    assert!(sign == 1 || sign == -1, "branch sign must be +1 or -1");
    if t < 0.0 {
        return Err(WaveError::NegativeTime { t });
    }
    if t < t_exit {
        return Err(WaveError::BeforeExit { t, t_exit });
    }
    let p = &cfg.physical;
    let s_t = complex_width(t, cfg);
    let center = f64::from(sign) * p.u * (t - t_exit);
    let prefactor = (2.0 * std::f64::consts::PI).powf(-0.25) / s_t.sqrt();
    let envelope = -(z - center) * (z - center) / (4.0 * p.sigma0 * s_t);
    let phase = f64::from(sign) * (p.delta + (z - center / 2.0) * p.delta_prime);
    Ok(prefactor * (envelope + Complex64::new(0.0, phase)).exp())
}

/// Everything about a fixed evaluation time that the density and current
/// evaluators need.
#[derive(Clone, Copy, Debug)]
pub(crate) struct TimeSlice {
    pub t: f64,
    pub stage: StageId,
    /// Blend weight; meaningful only in blend stages.
    pub lambda: f64,
    /// `1 / (2 |s_t|^2)`.
    pub inv2sig2: f64,
    /// Spreading velocity coefficient: a lone packet centered at `c` moves
    /// its z-quantiles at `kappa * (z - c)`.
    pub kappa: f64,
    pub u: f64,
    /// Signed A branch-center offset `u * (t - t2)`.
    pub c_a: f64,
    /// Signed B branch-center offset `u * (t - t4)`.
    pub c_b: f64,
    /// Log of the two-packet normalization `1 / (2 pi |s_t|^2)`.
    pub log_norm2: f64,
}

impl TimeSlice {
    pub fn for_stage(t: f64, cfg: &ExperimentConfig, stage: StageId) -> TimeSlice {
        let p = &cfg.physical;
        let s = &cfg.schedule;
        let tau = p.hbar * t / (2.0 * p.mass * p.sigma0 * p.sigma0);
        let sig2 = p.sigma0 * p.sigma0 * (1.0 + tau * tau);
        let lambda = match stage {
            StageId::BlendA => blend_lambda(t, s.t1, s.t2),
            StageId::BlendB => blend_lambda(t, s.t3, s.t4),
            _ => 0.0,
        };
        TimeSlice {
            t,
            stage,
            lambda,
            inv2sig2: 1.0 / (2.0 * sig2),
            kappa: p.hbar * tau / (2.0 * p.mass * sig2),
            u: p.u,
            c_a: p.u * (t - s.t2),
            c_b: p.u * (t - s.t4),
            log_norm2: -(2.0 * std::f64::consts::PI * sig2).ln(),
        }
    }

    pub fn new(t: f64, cfg: &ExperimentConfig) -> TimeSlice {
        Self::for_stage(t, cfg, stage_at(t, &cfg.schedule))
    }
}

/// Spin mixing weights of the four-branch stage.
#[derive(Clone, Copy, Debug)]
pub(crate) struct GammaWeights {
    /// cos^2(gamma/2): weight pairing same-sign branch pairs with the
    /// anticorrelated outcome.
    pub cos2: f64,
    pub sin2: f64,
}

impl GammaWeights {
    pub fn new(gamma: f64) -> GammaWeights {
        let c = (gamma / 2.0).cos();
        let s = (gamma / 2.0).sin();
        GammaWeights {
            cos2: c * c,
            sin2: s * s,
        }
    }
}

/// Density and currents at one configuration-space point, in a rescaled
/// normalization: true value = reduced value * exp(log_scale). Velocities
/// are ratios of the reduced fields, immune to the rescaling.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FieldSample {
    pub j_a: f64,
    pub j_b: f64,
    pub rho: f64,
    pub log_scale: f64,
}

// Per-particle packet weights relative to the dominant branch. `anchor` is
// the dominant log-weight; each weight is exp(log - anchor) <= 1.
struct SplitSide {
    w_plus: f64,
    w_minus: f64,
    v_plus: f64,
    v_minus: f64,
    anchor: f64,
}

#[inline]
fn split_side(z: f64, c: f64, slice: &TimeSlice) -> SplitSide {
    let lp = -(z - c) * (z - c) * slice.inv2sig2;
    let lm = -(z + c) * (z + c) * slice.inv2sig2;
    let anchor = lp.max(lm);
    SplitSide {
        w_plus: (lp - anchor).exp(),
        w_minus: (lm - anchor).exp(),
        v_plus: slice.kappa * (z - c) + slice.u,
        v_minus: slice.kappa * (z + c) - slice.u,
        anchor,
    }
}

/// Evaluate the reduced density and currents for the slice's stage.
#[inline]
pub(crate) fn field_sample(
    slice: &TimeSlice,
    gw: &GammaWeights,
    z_a: f64,
    z_b: f64,
) -> FieldSample {
    match slice.stage {
        StageId::Free | StageId::PostCoil => {
            let lfa = -z_a * z_a * slice.inv2sig2;
            let lfb = -z_b * z_b * slice.inv2sig2;
            FieldSample {
                j_a: slice.kappa * z_a,
                j_b: slice.kappa * z_b,
                rho: 1.0,
                log_scale: lfa + lfb + slice.log_norm2,
            }
        }
        StageId::SplitA => {
            let a = split_side(z_a, slice.c_a, slice);
            let lfb = -z_b * z_b * slice.inv2sig2;
            let rho = 0.5 * (a.w_plus + a.w_minus);
            FieldSample {
                j_a: 0.5 * (a.w_plus * a.v_plus + a.w_minus * a.v_minus),
                j_b: rho * slice.kappa * z_b,
                rho,
                log_scale: a.anchor + lfb + slice.log_norm2,
            }
        }
        StageId::SplitBoth => {
            let a = split_side(z_a, slice.c_a, slice);
            let b = split_side(z_b, slice.c_b, slice);
            let mix_p = gw.cos2 * b.w_minus + gw.sin2 * b.w_plus;
            let mix_m = gw.sin2 * b.w_minus + gw.cos2 * b.w_plus;
            FieldSample {
                j_a: 0.5 * (a.w_plus * a.v_plus * mix_p + a.w_minus * a.v_minus * mix_m),
                j_b: 0.5
                    * (a.w_plus * (gw.cos2 * b.w_minus * b.v_minus + gw.sin2 * b.w_plus * b.v_plus)
                        + a.w_minus
                            * (gw.sin2 * b.w_minus * b.v_minus + gw.cos2 * b.w_plus * b.v_plus)),
                rho: 0.5 * (a.w_plus * mix_p + a.w_minus * mix_m),
                log_scale: a.anchor + b.anchor + slice.log_norm2,
            }
        }
        StageId::BlendA => {
            // Shared anchor across the free form and the split form so the
            // two stages blend in one normalization.
            let lfa = -z_a * z_a * slice.inv2sig2;
            let a = split_side(z_a, slice.c_a, slice);
            let anchor_a = a.anchor.max(lfa);
            let scale_a = (a.anchor - anchor_a).exp();
            let (wp, wm) = (a.w_plus * scale_a, a.w_minus * scale_a);
            let wfa = (lfa - anchor_a).exp();
            let lfb = -z_b * z_b * slice.inv2sig2;

            let rho_pre = wfa;
            let ja_pre = wfa * slice.kappa * z_a;
            let rho_post = 0.5 * (wp + wm);
            let ja_post = 0.5 * (wp * a.v_plus + wm * a.v_minus);

            let l = slice.lambda;
            let rho = (1.0 - l) * rho_pre + l * rho_post;
            FieldSample {
                j_a: (1.0 - l) * ja_pre + l * ja_post,
                j_b: rho * slice.kappa * z_b,
                rho,
                log_scale: anchor_a + lfb + slice.log_norm2,
            }
        }
        StageId::BlendB => {
            let a = split_side(z_a, slice.c_a, slice);
            let lfb = -z_b * z_b * slice.inv2sig2;
            let b = split_side(z_b, slice.c_b, slice);
            let anchor_b = b.anchor.max(lfb);
            let scale_b = (b.anchor - anchor_b).exp();
            let (wbp, wbm) = (b.w_plus * scale_b, b.w_minus * scale_b);
            let wfb = (lfb - anchor_b).exp();

            let rho_pre = 0.5 * (a.w_plus + a.w_minus) * wfb;
            let ja_pre = 0.5 * (a.w_plus * a.v_plus + a.w_minus * a.v_minus) * wfb;
            let jb_pre = rho_pre * slice.kappa * z_b;

            let mix_p = gw.cos2 * wbm + gw.sin2 * wbp;
            let mix_m = gw.sin2 * wbm + gw.cos2 * wbp;
            let rho_post = 0.5 * (a.w_plus * mix_p + a.w_minus * mix_m);
            let ja_post = 0.5 * (a.w_plus * a.v_plus * mix_p + a.w_minus * a.v_minus * mix_m);
            let jb_post = 0.5
                * (a.w_plus * (gw.cos2 * wbm * b.v_minus + gw.sin2 * wbp * b.v_plus)
                    + a.w_minus * (gw.sin2 * wbm * b.v_minus + gw.cos2 * wbp * b.v_plus));

            let l = slice.lambda;
            FieldSample {
                j_a: (1.0 - l) * ja_pre + l * ja_post,
                j_b: (1.0 - l) * jb_pre + l * jb_post,
                rho: (1.0 - l) * rho_pre + l * rho_post,
                log_scale: a.anchor + anchor_b + slice.log_norm2,
            }
        }
    }
}

/// A stage tag paired with the config it belongs to.
#[derive(Clone, Copy, Debug)]
pub struct StageState<'a> {
    pub stage_id: StageId,
    pub config: &'a ExperimentConfig,
}

impl<'a> StageState<'a> {
    /// The stage the schedule assigns to `t`.
    pub fn at(t: f64, config: &'a ExperimentConfig) -> StageState<'a> {
        StageState {
            stage_id: stage_at(t, &config.schedule),
            config,
        }
    }

    pub fn new(stage_id: StageId, config: &'a ExperimentConfig) -> StageState<'a> {
        StageState { stage_id, config }
    }

    // Each stage's form is evaluable on a wider window than the dispatch
    // assigns it: a split form exists from the moment its window opens.
    fn check_time(&self, t: f64) -> Result<(), WaveError> {
        if t < 0.0 {
            return Err(WaveError::NegativeTime { t });
        }
        let s = &self.config.schedule;
        let ok = match self.stage_id {
            StageId::Free | StageId::PostCoil => true,
            StageId::BlendA => (s.t1..=s.t2).contains(&t),
            StageId::SplitA => t >= s.t1,
            StageId::BlendB => (s.t3..=s.t4).contains(&t),
            StageId::SplitBoth => t >= s.t3,
        };
        if ok {
            Ok(())
        } else {
            Err(WaveError::StageTimeMismatch {
                t,
                stage: self.stage_id,
            })
        }
    }
}

/// Position density of the stage state at `(z_a, z_b, t)`.
pub fn stage_density(z_a: f64, z_b: f64, t: f64, state: &StageState) -> Result<f64, WaveError> {
    state.check_time(t)?;
    let slice = TimeSlice::for_stage(t, state.config, state.stage_id);
    let gw = GammaWeights::new(state.config.gamma());
    let f = field_sample(&slice, &gw, z_a, z_b);
    Ok(f.rho * f.log_scale.exp())
}

/// Probability currents `(j_a, j_b)` of the stage state at `(z_a, z_b, t)`.
pub fn stage_currents(
    z_a: f64,
    z_b: f64,
    t: f64,
    state: &StageState,
) -> Result<(f64, f64), WaveError> {
    state.check_time(t)?;
    let slice = TimeSlice::for_stage(t, state.config, state.stage_id);
    let gw = GammaWeights::new(state.config.gamma());
    let f = field_sample(&slice, &gw, z_a, z_b);
    let scale = f.log_scale.exp();
    Ok((f.j_a * scale, f.j_b * scale))
}

fn blend_stage(window: BlendWindow) -> StageId {
    match window {
        BlendWindow::A => StageId::BlendA,
        BlendWindow::B => StageId::BlendB,
    }
}

fn check_window(t: f64, window: BlendWindow, cfg: &ExperimentConfig) -> Result<(), WaveError> {
    let s = &cfg.schedule;
    let (start, end) = match window {
        BlendWindow::A => (s.t1, s.t2),
        BlendWindow::B => (s.t3, s.t4),
    };
    if (start..=end).contains(&t) {
        Ok(())
    } else {
        Err(WaveError::OutsideBlendWindow { t, start, end })
    }
}

/// Interpolated density inside a blend window.
pub fn blend_density(
    z_a: f64,
    z_b: f64,
    t: f64,
    window: BlendWindow,
    cfg: &ExperimentConfig,
) -> Result<f64, WaveError> {
    check_window(t, window, cfg)?;
    stage_density(z_a, z_b, t, &StageState::new(blend_stage(window), cfg))
}

/// Interpolated currents inside a blend window.
pub fn blend_currents(
    z_a: f64,
    z_b: f64,
    t: f64,
    window: BlendWindow,
    cfg: &ExperimentConfig,
) -> Result<(f64, f64), WaveError> {
    check_window(t, window, cfg)?;
    stage_currents(z_a, z_b, t, &StageState::new(blend_stage(window), cfg))
}
