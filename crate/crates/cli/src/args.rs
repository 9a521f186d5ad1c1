use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pilotwave::ConfigPatch;

/// Command-line surface of the `simulate` binary.
///
/// Configuration is resolved in three layers: built-in defaults, then an
/// optional TOML file given with `--config`, then individual `--<field>`
/// flags. `--seed` wins over a seed from the file.
#[derive(Parser, Debug)]
#[command(
    name = "simulate",
    version,
    about = "Deterministic pilot-wave simulator for a two-particle spin correlation experiment"
)]
pub struct Cli {
    /// TOML file with flat configuration keys (hbar, sigma0, t1, ...).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed for all random draws.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Worker threads for trajectory batches (default: all cores).
    #[arg(long, global = true, env = "SIMULATE_WORKERS", value_name = "N")]
    pub workers: Option<usize>,

    /// Directory for output files; created if missing.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,

    #[command(flatten)]
    pub overrides: FieldOverrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Per-field configuration overrides, applied after the config file.
#[derive(Args, Debug, Default)]
pub struct FieldOverrides {
    /// Reduced Planck constant.
    #[arg(long, global = true, value_name = "X")]
    pub hbar: Option<f64>,

    /// Particle mass.
    #[arg(long, global = true, value_name = "X")]
    pub mass: Option<f64>,

    /// Initial packet width.
    #[arg(long, global = true, value_name = "X")]
    pub sigma0: Option<f64>,

    /// Branch drift speed imparted by a splitter.
    #[arg(long, global = true, value_name = "X")]
    pub u: Option<f64>,

    /// Constant phase offset accumulated inside a splitter.
    #[arg(long, global = true, value_name = "X")]
    pub delta: Option<f64>,

    /// Phase gradient accumulated inside a splitter.
    #[arg(long, global = true, value_name = "X")]
    pub delta_prime: Option<f64>,

    /// Coil pulse duration.
    #[arg(long, global = true, value_name = "T")]
    pub t_coil: Option<f64>,

    /// Entry time of the first splitter.
    #[arg(long, global = true, value_name = "T")]
    pub t1: Option<f64>,

    /// Exit time of the first splitter.
    #[arg(long, global = true, value_name = "T")]
    pub t2: Option<f64>,

    /// Entry time of the second splitter.
    #[arg(long, global = true, value_name = "T")]
    pub t3: Option<f64>,

    /// Exit time of the second splitter.
    #[arg(long, global = true, value_name = "T")]
    pub t4: Option<f64>,

    /// Readout time.
    #[arg(long, global = true, value_name = "T")]
    pub t_end: Option<f64>,

    /// Integrator step size.
    #[arg(long, global = true, value_name = "T")]
    pub dt: Option<f64>,

    /// First detector angle.
    #[arg(long, global = true, value_name = "RAD")]
    pub alpha: Option<f64>,

    /// Second detector angle.
    #[arg(long, global = true, value_name = "RAD")]
    pub beta: Option<f64>,
}

impl FieldOverrides {
    pub fn to_patch(&self) -> ConfigPatch {
        ConfigPatch {
            hbar: self.hbar,
            mass: self.mass,
            sigma0: self.sigma0,
            u: self.u,
            delta: self.delta,
            delta_prime: self.delta_prime,
            t_coil: self.t_coil,
            t1: self.t1,
            t2: self.t2,
            t3: self.t3,
            t4: self.t4,
            t_end: self.t_end,
            dt: self.dt,
            alpha: self.alpha,
            beta: self.beta,
            seed: None,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Resolve the configuration, print it as TOML, and write nothing.
    ValidateConfig,

    /// Single-particle splitter traversal with chosen branch amplitudes.
    Sg {
        /// Number of trajectories.
        #[arg(long, default_value_t = 20, value_name = "N")]
        n: u64,

        /// Upper-branch amplitude.
        #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2, value_name = "X")]
        c_plus: f64,

        /// Lower-branch amplitude.
        #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2, value_name = "X")]
        c_minus: f64,

        /// Record every STRIDE-th integrator step.
        #[arg(long, default_value_t = 100, value_name = "STRIDE")]
        stride: usize,
    },

    /// Pair trajectories at one or more detector separations.
    Trajectories {
        /// Number of pairs.
        #[arg(long, default_value_t = 5, value_name = "N")]
        pairs: u64,

        /// Detector separation in radians; repeatable. Defaults to the
        /// configured beta - alpha. Initial conditions are shared across
        /// separations so trajectory families are directly comparable.
        #[arg(long = "gamma", value_name = "RAD")]
        gammas: Vec<f64>,

        /// Record every STRIDE-th integrator step.
        #[arg(long, default_value_t = 100, value_name = "STRIDE")]
        stride: usize,

        /// Also write the shared initial conditions to initials.csv.
        #[arg(long)]
        dump_initials: bool,
    },

    /// Bell sweep: estimate the four-correlator combination over a grid of
    /// detector offsets theta in [0, 4 pi].
    Chsh {
        /// Number of grid points.
        #[arg(long, default_value_t = 200, value_name = "N")]
        points: usize,

        /// Pairs per correlator (four correlators per grid point).
        #[arg(long, default_value_t = 2000, value_name = "N")]
        pairs: u64,
    },

    /// Initial-condition disk colored by joint outcome, with the analytic
    /// boundary between outcome regions.
    Disk {
        /// Detector separation in radians. Defaults to the configured
        /// beta - alpha.
        #[arg(long, value_name = "RAD")]
        gamma: Option<f64>,

        /// Number of pairs.
        #[arg(long, default_value_t = 2000, value_name = "N")]
        pairs: u64,

        /// Boundary samples per quarter-turn arc.
        #[arg(long, default_value_t = 256, value_name = "N")]
        curve_samples: usize,
    },

    /// Single-detector outcome frequencies at one or more separations.
    Marginals {
        /// Detector separation in radians; repeatable. Defaults to the
        /// configured beta - alpha.
        #[arg(long = "gamma", value_name = "RAD")]
        gammas: Vec<f64>,

        /// Number of pairs per separation.
        #[arg(long, default_value_t = 2000, value_name = "N")]
        pairs: u64,
    },
}
