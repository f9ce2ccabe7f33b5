//! Run configuration and its flat `key = value` file format.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Experiment selector for the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Viscosity sweep of the boundary vorticity.
    E1,
    /// Inviscid-limit convergence against an Euler run.
    E2,
    /// Kato strip dissipation sweep.
    E3,
    /// Kernel and norm audits.
    E4,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "E1" => Ok(Self::E1),
            "E2" => Ok(Self::E2),
            "E3" => Ok(Self::E3),
            "E4" => Ok(Self::E4),
            other => Err(Error::Config(format!("unknown experiment `{other}`"))),
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::E1 => "E1",
            Self::E2 => "E2",
            Self::E3 => "E3",
            Self::E4 => "E4",
        };
        f.write_str(s)
    }
}

/// All solver, norm and harness parameters.
///
/// The field names double as the keys of the config file format.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub nu: f64,
    pub t_final: f64,
    pub n_theta: usize,
    pub n_r: usize,
    pub r_max: f64,
    pub delta0: f64,
    pub rho0: f64,
    pub eps0: f64,
    pub lambda: f64,
    pub dt_max: f64,
    pub cfl: f64,
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    /// Smallest viscosity the grid must resolve; `None` means `nu`.
    pub nu_grid: Option<f64>,
    /// Far-to-near spacing ratio of the radial grid; `None` picks one.
    pub clustering: Option<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub k_norm: usize,
    pub kato_c: f64,
    pub amplitude: f64,
    pub kappa: f64,
    pub n0: usize,
    pub seed: u64,
    pub snapshot_every: f64,
    pub diag_every: usize,
    pub project: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu: 1e-3,
            t_final: 0.5,
            n_theta: 32,
            n_r: 512,
            r_max: 20.0,
            delta0: 0.5,
            rho0: 0.5,
            eps0: 0.25,
            lambda: 1.0,
            dt_max: 1e-2,
            cfl: 0.5,
            experiment: Experiment::E1,
            output_dir: PathBuf::from("out"),
            nu_grid: None,
            clustering: None,
            beta: 4.0,
            gamma: 0.5,
            k_norm: 1,
            kato_c: 1.0,
            amplitude: 4.0,
            kappa: 2.0,
            n0: 3,
            seed: 7,
            snapshot_every: 0.05,
            diag_every: 1,
            project: true,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse::<T>()
        .map_err(|_| format!("cannot parse `{v}` for key `{key}`"))
}

fn parse_bool(key: &str, v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("cannot parse `{v}` for key `{key}` as bool")),
    }
}

fn parse_opt(key: &str, v: &str) -> std::result::Result<Option<f64>, String> {
    if v == "auto" || v == "none" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

impl SolverConfig {
    /// Viscosity that sets the wall spacing of the grid.
    pub fn grid_nu(&self) -> f64 {
        self.nu_grid.unwrap_or(self.nu)
    }

    /// Sets one field from its key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "nu" => self.nu = parse_num(key, v)?,
            "t_final" => self.t_final = parse_num(key, v)?,
            "n_theta" => self.n_theta = parse_num(key, v)?,
            "n_r" => self.n_r = parse_num(key, v)?,
            "r_max" => self.r_max = parse_num(key, v)?,
            "delta0" => self.delta0 = parse_num(key, v)?,
            "rho0" => self.rho0 = parse_num(key, v)?,
            "eps0" => self.eps0 = parse_num(key, v)?,
            "lambda" => self.lambda = parse_num(key, v)?,
            "dt_max" => self.dt_max = parse_num(key, v)?,
            "cfl" => self.cfl = parse_num(key, v)?,
            "experiment" => self.experiment = v.parse().map_err(|e: Error| e.to_string())?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "nu_grid" => self.nu_grid = parse_opt(key, v)?,
            "clustering" => self.clustering = parse_opt(key, v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "gamma" => self.gamma = parse_num(key, v)?,
            "k_norm" => self.k_norm = parse_num(key, v)?,
            "kato_c" => self.kato_c = parse_num(key, v)?,
            "amplitude" => self.amplitude = parse_num(key, v)?,
            "kappa" => self.kappa = parse_num(key, v)?,
            "n0" => self.n0 = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "snapshot_every" => self.snapshot_every = parse_num(key, v)?,
            "diag_every" => self.diag_every = parse_num(key, v)?,
            "project" => self.project = parse_bool(key, v)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Parses the flat `key = value` format on top of the defaults.
    pub fn parse_str(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ConfigParse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            cfg.set(k, v).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return bad("nu must be finite and >= 0");
        }
        if !(self.t_final > 0.0) {
            return bad("t_final must be positive");
        }
        if self.n_theta < 4 || self.n_theta % 2 != 0 {
            return bad("n_theta must be even and >= 4");
        }
        if !(self.delta0 > 0.0 && self.delta0 <= self.rho0) {
            return bad("need 0 < delta0 <= rho0");
        }
        if !(self.eps0 > 0.0 && self.eps0 < 0.5) {
            return bad("eps0 must lie in (0, 1/2)");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda must lie in (0, 1]");
        }
        if !(self.dt_max > 0.0 && self.cfl > 0.0) {
            return bad("dt_max and cfl must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(1..=3).contains(&self.k_norm) {
            return bad("k_norm must be 1, 2 or 3");
        }
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if self.diag_every == 0 {
            return bad("diag_every must be >= 1");
        }
        if let Some(nu_g) = self.nu_grid {
            if !(nu_g > 0.0) {
                return bad("nu_grid must be positive");
            }
        }
        Ok(())
    }

    /// Serializes every field in the config file format.
    pub fn to_text(&self) -> String {
        let opt = |o: Option<f64>| o.map_or_else(|| "auto".to_string(), |v| format!("{v:e}"));
        let mut s = String::new();
        let _ = writeln!(s, "nu = {:e}", self.nu);
        let _ = writeln!(s, "t_final = {}", self.t_final);
        let _ = writeln!(s, "n_theta = {}", self.n_theta);
        let _ = writeln!(s, "n_r = {}", self.n_r);
        let _ = writeln!(s, "r_max = {}", self.r_max);
        let _ = writeln!(s, "delta0 = {}", self.delta0);
        let _ = writeln!(s, "rho0 = {}", self.rho0);
        let _ = writeln!(s, "eps0 = {}", self.eps0);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "dt_max = {:e}", self.dt_max);
        let _ = writeln!(s, "cfl = {}", self.cfl);
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "nu_grid = {}", opt(self.nu_grid));
        let _ = writeln!(s, "clustering = {}", opt(self.clustering));
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "k_norm = {}", self.k_norm);
        let _ = writeln!(s, "kato_c = {}", self.kato_c);
        let _ = writeln!(s, "amplitude = {}", self.amplitude);
        let _ = writeln!(s, "kappa = {}", self.kappa);
        let _ = writeln!(s, "n0 = {}", self.n0);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        let _ = writeln!(s, "diag_every = {}", self.diag_every);
        let _ = writeln!(s, "project = {}", self.project);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_through_text() {
        let mut cfg = SolverConfig::default();
        cfg.nu = 3e-3;
        cfg.experiment = Experiment::E3;
        cfg.clustering = Some(25.0);
        let back = SolverConfig::parse_str(&cfg.to_text(), Path::new("mem")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# sweep member\n\nnu = 1e-2   # largest\nn_r=256\n";
        let cfg = SolverConfig::parse_str(text, Path::new("mem")).unwrap();
        assert_eq!(cfg.nu, 1e-2);
        assert_eq!(cfg.n_r, 256);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = SolverConfig::parse_str("nu = 1\nviscosity = 2\n", Path::new("c.cfg"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("c.cfg:2"), "{err}");
    }

    #[test]
    fn rejects_bad_ranges() {
        for text in ["eps0 = 0.6", "lambda = 0", "n_theta = 7", "delta0 = 0.9\nrho0 = 0.5"] {
            assert!(SolverConfig::parse_str(text, Path::new("m")).is_err(), "{text}");
        }
    }
}
