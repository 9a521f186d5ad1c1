//! Deterministic pilot-wave simulation of a two-particle spin-correlation
//! experiment: equilibrium position sampling, nonlocal guidance dynamics
//! through a coil and two sequential splitter stages, and the correlation
//! statistics built on top of the trajectories.

pub mod analysis;
pub mod batch;
pub mod config;
pub mod erf;
pub mod guidance;
pub mod sampling;
pub mod spin;
pub mod wavefunction;

pub use config::{ConfigError, ConfigPatch, ExperimentConfig, PhysicalParams, StageSchedule};
pub use erf::{erf, inverse_erf, ErfDomainError};
pub use analysis::{
    chsh_m, chsh_theory, correlation, disk_partition, joint_probabilities_theory, marginals,
    outcome_color, predicted_signs, readout, separatrix, three_sigma_half_width, ChshEstimate,
    Correlation, JointCounts, JointProbabilities, Marginals, PairOutcome, Separatrix,
    SeparatrixPoint,
};
pub use batch::{run_pairs, run_pairs_at, PairRun, PairSnapshots};
pub use guidance::{
    final_position, integrate_pair, integrate_pair_decimated, integrate_single, sign_of,
    single_velocity, velocity, GuidanceError, PairPosition, PairTrajectory, SamplePoint,
    SingleTrajectory, TimeGrid,
};
pub use sampling::{
    context_id, disk_to_positions, positions_to_disk, sample_disk, sample_pair, sample_position,
    stream_rng, DiskPoint,
};
pub use spin::{conditional_coefficients, relative_angle, rotation_y, SpinRotation, Spinor2};
pub use wavefunction::{
    blend_currents, blend_density, blend_lambda, free_packet, sg_component, stage_at,
    stage_currents, stage_density, BlendWindow, StageId, StageState, WaveError,
};
