//! Outcome statistics: detector readout, spin correlations, the CHSH
//! combination, no-signaling marginals, and the hidden-variable disk
//! geometry with its analytic outcome boundary.
//!
//! Every sampled statistic draws its pairs from a context-tagged random
//! substream derived from the config seed, so repeated calls and different
//! statistics never share or disturb each other's streams.

use crate::batch::{run_pairs, PairRun};
use crate::config::ExperimentConfig;
use crate::erf::inverse_erf;
use crate::guidance::{sign_of, GuidanceError, PairPosition};
use crate::sampling::{context_id, disk_to_positions, DiskPoint};

/// Readout of one integrated pair: the branch signs at the end time.
pub fn readout(end: &PairPosition) -> (i8, i8) {
    (sign_of(end.z_a), sign_of(end.z_b))
}

/// One pair's initial conditions and detector outcomes.
#[derive(Clone, Copy, Debug)]
pub struct PairOutcome {
    pub pair_index: u64,
    pub disk: DiskPoint,
    pub z0: (f64, f64),
    pub s_a: i8,
    pub s_b: i8,
}

impl PairOutcome {
    fn from_run(run: &PairRun) -> PairOutcome {
        let (s_a, s_b) = readout(&run.end);
        PairOutcome {
            pair_index: run.pair_index,
            disk: run.disk,
            z0: run.z0,
            s_a,
            s_b,
        }
    }
}

fn with_gamma(cfg: &ExperimentConfig, gamma: f64) -> ExperimentConfig {
    let mut c = *cfg;
    c.beta = c.alpha + gamma;
    c
}

// Mean and standard error (ddof 1) of +/-1 products; n < 2 yields 0 error.
fn sign_mean_stderr(products: impl Iterator<Item = i8>) -> (f64, f64, u64) {
    let (mut sum, mut n) = (0i64, 0u64);
    for p in products {
        sum += i64::from(p);
        n += 1;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n < 2 {
        return (mean, 0.0, n);
    }
    // Products are +/-1, so sum of squares is exactly n.
    let var = ((nf - (sum as f64) * (sum as f64) / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt(), n)
}

/// Empirical spin correlation at detector separation angle `gamma`.
#[derive(Clone, Copy, Debug)]
pub struct Correlation {
    pub gamma: f64,
    pub e: f64,
    pub stderr: f64,
    pub n: u64,
}

fn correlation_in_context(
    cfg: &ExperimentConfig,
    gamma: f64,
    n: u64,
    context: u64,
) -> Result<Correlation, GuidanceError> {
    let runs = run_pairs(&with_gamma(cfg, gamma), context, n)?;
    let (e, stderr, n) = sign_mean_stderr(runs.iter().map(|r| {
        let (s_a, s_b) = readout(&r.end);
        s_a * s_b
    }));
    Ok(Correlation {
        gamma,
        e,
        stderr,
        n,
    })
}

/// Estimate `E(gamma) = <s_a s_b>` over `n` fresh pairs. The detector
/// settings become `(alpha, alpha + gamma)`; only the difference matters.
pub fn correlation(
    cfg: &ExperimentConfig,
    gamma: f64,
    n: u64,
) -> Result<Correlation, GuidanceError> {
    correlation_in_context(cfg, gamma, n, context_id("correlation", &[gamma.to_bits()]))
}

/// Quantum joint outcome probabilities at separation `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointProbabilities {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

/// Closed-form joint law: same-sign outcomes carry `sin^2(gamma/2) / 2`
/// each, opposite-sign outcomes `cos^2(gamma/2) / 2` each.
pub fn joint_probabilities_theory(gamma: f64) -> JointProbabilities {
    let s2 = (gamma / 2.0).sin().powi(2);
    let c2 = (gamma / 2.0).cos().powi(2);
    JointProbabilities {
        pp: 0.5 * s2,
        pm: 0.5 * c2,
        mp: 0.5 * c2,
        mm: 0.5 * s2,
    }
}

/// Joint outcome counts over a batch of outcomes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JointCounts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl JointCounts {
    pub fn tally(outcomes: &[PairOutcome]) -> JointCounts {
        let mut c = JointCounts::default();
        for o in outcomes {
            match (o.s_a, o.s_b) {
                (1, 1) => c.pp += 1,
                (1, -1) => c.pm += 1,
                (-1, 1) => c.mp += 1,
                (-1, -1) => c.mm += 1,
                other => unreachable!("readout yields only +/-1 pairs, got {other:?}"),
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }
}

/// CHSH estimate at sweep parameter `theta`.
#[derive(Clone, Copy, Debug)]
pub struct ChshEstimate {
    pub theta: f64,
    pub m: f64,
    pub stderr: f64,
    pub n_per_setting: u64,
}

/// Reference CHSH curve `3 cos(theta/2) - cos(3 theta/2)`, written in the
/// sign convention that peaks at `+2 sqrt(2)` for `theta = pi/2`. Each
/// measured correlator is `-cos` of its separation, so the estimator
/// realizes the opposite sign; comparisons use magnitudes.
pub fn chsh_theory(theta: f64) -> f64 {
    3.0 * (theta / 2.0).cos() - (1.5 * theta).cos()
}

/// Estimate the CHSH combination
/// `M = E(a,b) - E(a,b') + E(a',b) + E(a',b')` at detector settings
/// `(a, a', b, b') = (0, theta, theta/2, 3 theta/2)`, with `n_per_setting`
/// fresh pairs per correlator.
pub fn chsh_m(
    cfg: &ExperimentConfig,
    theta: f64,
    n_per_setting: u64,
) -> Result<ChshEstimate, GuidanceError> {
    // Separation angles of the four correlators and their signs in M.
    let settings: [(f64, f64); 4] = [
        (theta / 2.0, 1.0),
        (1.5 * theta, -1.0),
        (-theta / 2.0, 1.0),
        (theta / 2.0, 1.0),
    ];
    let mut m = 0.0;
    let mut var = 0.0;
    for (k, (gamma, sign)) in settings.into_iter().enumerate() {
        let ctx = context_id("chsh", &[theta.to_bits(), k as u64]);
        let c = correlation_in_context(cfg, gamma, n_per_setting, ctx)?;
        m += sign * c.e;
        var += c.stderr * c.stderr;
    }
    Ok(ChshEstimate {
        theta,
        m,
        stderr: var.sqrt(),
        n_per_setting,
    })
}

/// Detector-side outcome frequencies at separation `gamma`.
#[derive(Clone, Copy, Debug)]
pub struct Marginals {
    pub gamma: f64,
    pub p_a_plus: f64,
    pub p_b_plus: f64,
    pub n: u64,
}

/// Estimate each side's `P(+1)` over `n` fresh pairs. No-signaling puts
/// both at 1/2 regardless of `gamma`.
pub fn marginals(cfg: &ExperimentConfig, gamma: f64, n: u64) -> Result<Marginals, GuidanceError> {
    let ctx = context_id("marginals", &[gamma.to_bits()]);
    let runs = run_pairs(&with_gamma(cfg, gamma), ctx, n)?;
    let mut a_plus = 0u64;
    let mut b_plus = 0u64;
    for r in &runs {
        let (s_a, s_b) = readout(&r.end);
        if s_a == 1 {
            a_plus += 1;
        }
        if s_b == 1 {
            b_plus += 1;
        }
    }
    Ok(Marginals {
        gamma,
        p_a_plus: a_plus as f64 / n as f64,
        p_b_plus: b_plus as f64 / n as f64,
        n,
    })
}

/// Three-sigma half width of a binomial proportion estimate.
pub fn three_sigma_half_width(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Integrate `n` pairs at separation `gamma` and report each one's disk
/// coordinates with its outcomes, in pair-index order.
pub fn disk_partition(
    cfg: &ExperimentConfig,
    gamma: f64,
    n: u64,
) -> Result<Vec<PairOutcome>, GuidanceError> {
    let ctx = context_id("disk", &[gamma.to_bits()]);
    let runs = run_pairs(&with_gamma(cfg, gamma), ctx, n)?;
    Ok(runs.iter().map(PairOutcome::from_run).collect())
}

/// Fixed plotting palette for the four outcome sectors.
pub fn outcome_color(s_a: i8, s_b: i8) -> &'static str {
    match (s_a, s_b) {
        (1, 1) => "blue",
        (1, -1) => "orange",
        (-1, 1) => "green",
        (-1, -1) => "red",
        other => panic!("outcome signs must be +/-1, got {other:?}"),
    }
}

/// One sampled point of the outcome boundary in disk coordinates.
#[derive(Clone, Copy, Debug)]
pub struct SeparatrixPoint {
    pub theta: f64,
    pub u: f64,
}

/// The outcome boundary in the initial-condition disk.
#[derive(Clone, Debug)]
pub enum Separatrix {
    /// Generic separation angle: B's outcome flips across the radial curve
    /// `u(theta)`, which lives on two opposite quarter arcs.
    Curved {
        gamma: f64,
        /// B's initial-position threshold when A reads +1; the mirror
        /// threshold applies when A reads -1.
        z_b_threshold: f64,
        samples: Vec<SeparatrixPoint>,
    },
    /// `cos(gamma) = +/-1`: outcomes are fully (anti-)correlated and the
    /// boundary degenerates to the whole disk edge.
    Degenerate { gamma: f64, anti: bool },
}

/// Sample the outcome boundary at `samples_per_arc` angles per quarter arc.
/// Points whose radial coordinate rounds to 1 (indistinguishable from the
/// disk edge at f64 resolution) are dropped, keeping `u` in `[0, 1)`.
pub fn separatrix(gamma: f64, sigma0: f64, samples_per_arc: usize) -> Separatrix {
    let cos_gamma = gamma.cos();
    if cos_gamma == 1.0 || cos_gamma == -1.0 {
        return Separatrix::Degenerate {
            gamma,
            anti: cos_gamma == 1.0,
        };
    }
    let k = inverse_erf(cos_gamma).expect("|cos| < 1 after the degenerate check");
    // The boundary needs sin(theta) to carry the threshold's sign: upper
    // quarter arcs for positive thresholds, lower for negative.
    let arc_starts = if k >= 0.0 {
        [0.0, std::f64::consts::PI]
    } else {
        [std::f64::consts::FRAC_PI_2, 1.5 * std::f64::consts::PI]
    };
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut samples = Vec::with_capacity(2 * samples_per_arc);
    for start in arc_starts {
        for j in 0..samples_per_arc {
            let theta = start + quarter * (j + 1) as f64 / samples_per_arc as f64;
            let ratio = k / theta.sin();
            let u = 1.0 - (-ratio * ratio).exp();
            if u < 1.0 {
                samples.push(SeparatrixPoint { theta, u });
            }
        }
    }
    Separatrix::Curved {
        gamma,
        z_b_threshold: std::f64::consts::SQRT_2 * sigma0 * k,
        samples,
    }
}

/// Analytic outcome prediction from the initial disk point alone: A reads
/// the sign of its start, B reads the side of its threshold given A.
pub fn predicted_signs(disk: DiskPoint, gamma: f64, sigma0: f64) -> (i8, i8) {
    let (z_a0, z_b0) = disk_to_positions(disk, sigma0);
    let s_a = sign_of(z_a0);
    let cos_gamma = gamma.cos();
    if cos_gamma == 1.0 {
        return (s_a, -s_a);
    }
    if cos_gamma == -1.0 {
        return (s_a, s_a);
    }
    let z_star = std::f64::consts::SQRT_2
        * sigma0
        * inverse_erf(cos_gamma).expect("|cos| < 1 after the degenerate checks");
    let threshold = if s_a == 1 { z_star } else { -z_star };
    let s_b = if z_b0 >= threshold { 1 } else { -1 };
    (s_a, s_b)
}
