use std::fmt;
use std::time::Instant;

use pilotwave::{
    chsh_m, chsh_theory, context_id, disk_partition, marginals, outcome_color, sample_pair,
    sample_position, separatrix, stream_rng, three_sigma_half_width, ConfigError, ConfigPatch,
    ExperimentConfig, GuidanceError, PairTrajectory, Separatrix, SingleTrajectory, TimeGrid,
};
use rayon::prelude::*;

use crate::args::{Cli, Command};
use crate::output::{fmt_f64, OutputDir};

/// Branch separation below this many packet widths at readout makes the
/// sign assignment unreliable; commands warn but still run.
const SEPARATION_FLOOR: f64 = 5.0;

#[derive(Debug)]
pub enum CliError {
    /// Rejected configuration or arguments (exit code 1).
    Validation(String),
    /// Failure during simulation or while writing results (exit code 2).
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GuidanceError> for CliError {
    fn from(e: GuidanceError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn write_err(name: &str) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("writing {name}: {e}"))
}

/// Layer the config file and per-field flags over the defaults, then
/// validate the result once.
fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg = ConfigPatch::load(path)?.apply(cfg);
    }
    let overrides = cli.overrides.to_patch();
    if !overrides.is_empty() {
        cfg = overrides.apply(cfg);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg.validate()?)
}

fn init_workers(requested: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = requested {
        if n == 0 {
            return Err(CliError::Validation("--workers must be at least 1".into()));
        }
        // Fails only if a pool already exists (in-process reuse); the
        // existing pool then stays in effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

fn require_nonzero(value: u64, flag: &str) -> Result<(), CliError> {
    if value == 0 {
        Err(CliError::Validation(format!("{flag} must be at least 1")))
    } else {
        Ok(())
    }
}

fn with_gamma(mut cfg: ExperimentConfig, gamma: f64) -> ExperimentConfig {
    cfg.beta = cfg.alpha + gamma;
    cfg
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;

    if let Command::ValidateConfig = cli.command {
        print!("{}", cfg.to_flat_toml());
        return Ok(());
    }

    let workers = init_workers(cli.workers)?;
    let started = Instant::now();
    let mut out = OutputDir::create(&cli.out)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", cli.out.display())))?;

    match &cli.command {
        Command::ValidateConfig => unreachable!("handled above"),
        Command::Sg {
            n,
            c_plus,
            c_minus,
            stride,
        } => run_sg(&cfg, &mut out, *n, *c_plus, *c_minus, *stride)?,
        Command::Trajectories {
            pairs,
            gammas,
            stride,
            dump_initials,
        } => run_trajectories(&cfg, &mut out, *pairs, gammas, *stride, *dump_initials)?,
        Command::Chsh { points, pairs } => run_chsh(&cfg, &mut out, *points, *pairs)?,
        Command::Disk {
            gamma,
            pairs,
            curve_samples,
        } => run_disk(&cfg, &mut out, *gamma, *pairs, *curve_samples)?,
        Command::Marginals { gammas, pairs } => run_marginals(&cfg, &mut out, gammas, *pairs)?,
    }

    let command_line: Vec<String> = std::env::args().skip(1).collect();
    out.write_manifest(
        &cfg,
        &command_line.join(" "),
        workers,
        started.elapsed().as_secs_f64(),
    )
    .map_err(write_err("manifest.json"))
}

fn warn_pair_separation(cfg: &ExperimentConfig) {
    let ratio = cfg.separation_ratio();
    if ratio < SEPARATION_FLOOR {
        eprintln!(
            "warning: branch separation at readout is only {ratio:.2} packet widths; \
             outcome signs may be ambiguous"
        );
    }
}

fn run_sg(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    n: u64,
    c_plus: f64,
    c_minus: f64,
    stride: usize,
) -> Result<(), CliError> {
    require_nonzero(n, "--n")?;
    require_nonzero(stride as u64, "--stride")?;
    let norm2 = c_plus * c_plus + c_minus * c_minus;
    if norm2 == 0.0 {
        return Err(CliError::Validation(
            "branch amplitudes c-plus and c-minus are both zero".into(),
        ));
    }
    let scale = norm2.sqrt();
    let (cp, cm) = (c_plus / scale, c_minus / scale);
    if (norm2 - 1.0).abs() > 1e-12 {
        eprintln!("warning: renormalized branch amplitudes to ({cp:.6}, {cm:.6})");
    }

    // Single splitter: branches drift apart from its exit at t2.
    let s = &cfg.schedule;
    let separation = 2.0 * cfg.physical.u * (s.t_end - s.t2);
    let ratio = separation / cfg.packet_width(s.t_end);
    if ratio < SEPARATION_FLOOR {
        eprintln!(
            "warning: branch separation at readout is only {ratio:.2} packet widths; \
             outcome signs may be ambiguous"
        );
    }

    let context = context_id("splitter", &[]);
    let z0s: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, context, i);
            sample_position(&mut rng, cfg.physical.sigma0)
        })
        .collect();

    let grid = TimeGrid::new(cfg);
    let trajectories: Vec<SingleTrajectory> = z0s
        .par_iter()
        .map(|&z0| grid.integrate_single(z0, cp, cm, stride))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for (i, traj) in trajectories.iter().enumerate() {
        for p in &traj.samples {
            rows.push(format!("{i},{},{}", fmt_f64(p.t), fmt_f64(p.z)));
        }
    }
    out.write_csv("sg_trajectories.csv", "trajectory_index,t,z", &rows)
        .map_err(write_err("sg_trajectories.csv"))?;

    let summary: Vec<String> = trajectories
        .iter()
        .enumerate()
        .map(|(i, traj)| {
            format!(
                "{i},{},{},{},{}",
                fmt_f64(z0s[i]),
                fmt_f64(cp),
                fmt_f64(cm),
                traj.sign
            )
        })
        .collect();
    out.write_csv(
        "sg_summary.csv",
        "trajectory_index,z0,c_plus,c_minus,sign",
        &summary,
    )
    .map_err(write_err("sg_summary.csv"))
}

fn run_trajectories(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    pairs: u64,
    gammas: &[f64],
    stride: usize,
    dump_initials: bool,
) -> Result<(), CliError> {
    require_nonzero(pairs, "--pairs")?;
    require_nonzero(stride as u64, "--stride")?;
    let gammas = if gammas.is_empty() {
        vec![cfg.gamma()]
    } else {
        gammas.to_vec()
    };
    warn_pair_separation(cfg);

    // One draw per pair index, independent of gamma: the same initial
    // conditions feed every separation so the families are comparable.
    let context = context_id("trajectories", &[]);
    let starts: Vec<_> = (0..pairs)
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, context, i);
            sample_pair(&mut rng, cfg.physical.sigma0)
        })
        .collect();

    let mut rows = Vec::new();
    for &gamma in &gammas {
        let run_cfg = with_gamma(*cfg, gamma);
        let grid = TimeGrid::new(&run_cfg);
        let trajectories: Vec<PairTrajectory> = starts
            .par_iter()
            .map(|(_, z0)| grid.integrate_recording(*z0, stride))
            .collect::<Result<_, _>>()?;
        for (i, traj) in trajectories.iter().enumerate() {
            for p in &traj.samples {
                rows.push(format!(
                    "{},{i},{},{},{}",
                    fmt_f64(gamma),
                    fmt_f64(p.t),
                    fmt_f64(p.z_a),
                    fmt_f64(p.z_b)
                ));
            }
        }
    }
    out.write_csv("trajectories.csv", "gamma,pair_index,t,z_a,z_b", &rows)
        .map_err(write_err("trajectories.csv"))?;

    if dump_initials {
        let rows: Vec<String> = starts
            .iter()
            .enumerate()
            .map(|(i, (disk, (z_a, z_b)))| {
                format!(
                    "{i},{},{},{},{}",
                    fmt_f64(disk.r),
                    fmt_f64(disk.theta),
                    fmt_f64(*z_a),
                    fmt_f64(*z_b)
                )
            })
            .collect();
        out.write_csv("initials.csv", "pair_index,r,theta,z_a0,z_b0", &rows)
            .map_err(write_err("initials.csv"))?;
    }
    Ok(())
}

fn run_chsh(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    points: usize,
    pairs: u64,
) -> Result<(), CliError> {
    require_nonzero(points as u64, "--points")?;
    require_nonzero(pairs, "--pairs")?;
    warn_pair_separation(cfg);

    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let theta = 4.0 * std::f64::consts::PI * i as f64 / points as f64;
        let est = chsh_m(cfg, theta, pairs)?;
        rows.push(format!(
            "{},{},{},{}",
            fmt_f64(theta),
            fmt_f64(est.m),
            fmt_f64(est.stderr),
            fmt_f64(chsh_theory(theta))
        ));
    }
    out.write_csv("chsh.csv", "theta,m_hat,stderr,m_theory", &rows)
        .map_err(write_err("chsh.csv"))
}

fn run_disk(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    gamma: Option<f64>,
    pairs: u64,
    curve_samples: usize,
) -> Result<(), CliError> {
    require_nonzero(pairs, "--pairs")?;
    require_nonzero(curve_samples as u64, "--curve-samples")?;
    let gamma = gamma.unwrap_or_else(|| cfg.gamma());
    warn_pair_separation(cfg);

    let outcomes = disk_partition(cfg, gamma, pairs)?;
    let rows: Vec<String> = outcomes
        .iter()
        .map(|o| {
            format!(
                "{},{},{},{},{},{},{}",
                o.pair_index,
                fmt_f64(o.disk.r),
                fmt_f64(o.disk.theta),
                fmt_f64(o.z0.0),
                fmt_f64(o.z0.1),
                o.s_a,
                o.s_b
            )
        })
        .collect();
    out.write_csv(
        "disk_points.csv",
        "pair_index,r,theta,z_a0,z_b0,s_a,s_b",
        &rows,
    )
    .map_err(write_err("disk_points.csv"))?;

    let boundary = separatrix(gamma, cfg.physical.sigma0, curve_samples);
    let rows: Vec<String> = match &boundary {
        Separatrix::Curved { samples, .. } => samples
            .iter()
            .map(|p| format!("{},{}", fmt_f64(p.theta), fmt_f64(p.u)))
            .collect(),
        // Fully (anti-)correlated outcomes: the boundary sits on the disk
        // edge. Emit sentinel rows at u = 1 over the arcs it collapses to.
        Separatrix::Degenerate { anti, .. } => {
            let quarter = std::f64::consts::FRAC_PI_2;
            let arc_starts = if *anti {
                [0.0, std::f64::consts::PI]
            } else {
                [quarter, 1.5 * std::f64::consts::PI]
            };
            let mut rows = Vec::with_capacity(2 * curve_samples);
            for start in arc_starts {
                for j in 0..curve_samples {
                    let theta = start + quarter * (j + 1) as f64 / curve_samples as f64;
                    rows.push(format!("{},{}", fmt_f64(theta), fmt_f64(1.0)));
                }
            }
            rows
        }
    };
    out.write_csv("separatrix.csv", "theta,u", &rows)
        .map_err(write_err("separatrix.csv"))?;

    let palette: Vec<String> = [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)]
        .iter()
        .map(|&(s_a, s_b)| format!("{s_a},{s_b},{}", outcome_color(s_a, s_b)))
        .collect();
    out.write_csv("palette.csv", "s_a,s_b,color", &palette)
        .map_err(write_err("palette.csv"))
}

fn run_marginals(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    gammas: &[f64],
    pairs: u64,
) -> Result<(), CliError> {
    require_nonzero(pairs, "--pairs")?;
    let gammas = if gammas.is_empty() {
        vec![cfg.gamma()]
    } else {
        gammas.to_vec()
    };
    warn_pair_separation(cfg);

    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in &gammas {
        let m = marginals(cfg, gamma, pairs)?;
        // Half-width of the three-sigma band around the no-signaling value
        // p = 1/2, the null each estimate should sit inside.
        rows.push(format!(
            "{},{},{},{},{}",
            fmt_f64(gamma),
            fmt_f64(m.p_a_plus),
            fmt_f64(m.p_b_plus),
            m.n,
            fmt_f64(three_sigma_half_width(0.5, m.n))
        ));
    }
    out.write_csv(
        "marginals.csv",
        "gamma,p_a_plus,p_b_plus,n,ci_half_width_3sigma",
        &rows,
    )
    .map_err(write_err("marginals.csv"))
}
