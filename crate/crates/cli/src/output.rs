use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use pilotwave::ExperimentConfig;

/// Canonical float formatting for all output files. Full round-trip
/// precision so reruns can be compared byte for byte.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects files written under one output directory and finishes with a
/// manifest describing the run.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes a CSV file with a single header line. Rows must already be
    /// comma-joined.
    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> io::Result<()> {
        let mut body = String::with_capacity(header.len() + 1 + rows.iter().map(|r| r.len() + 1).sum::<usize>());
        body.push_str(header);
        body.push('\n');
        for row in rows {
            body.push_str(row);
            body.push('\n');
        }
        fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes manifest.json recording the resolved configuration, seed,
    /// worker count, wall time, and the files produced. Wall time varies
    /// between runs; everything else is deterministic.
    pub fn write_manifest(
        &mut self,
        cfg: &ExperimentConfig,
        command: &str,
        workers: usize,
        wall_time_seconds: f64,
    ) -> io::Result<()> {
        let manifest = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": {
                "hbar": cfg.physical.hbar,
                "mass": cfg.physical.mass,
                "sigma0": cfg.physical.sigma0,
                "u": cfg.physical.u,
                "delta": cfg.physical.delta,
                "delta_prime": cfg.physical.delta_prime,
                "t_coil": cfg.schedule.t_coil,
                "t1": cfg.schedule.t1,
                "t2": cfg.schedule.t2,
                "t3": cfg.schedule.t3,
                "t4": cfg.schedule.t4,
                "t_end": cfg.schedule.t_end,
                "dt": cfg.schedule.dt,
                "alpha": cfg.alpha,
                "beta": cfg.beta,
                "seed": cfg.seed,
            },
            "seed": cfg.seed,
            "workers": workers,
            "wall_time_seconds": wall_time_seconds,
            "outputs": self.files,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest is plain data");
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)
    }
}
