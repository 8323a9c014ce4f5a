use std::path::{Path, PathBuf};

use gl_selfdual::bogomolny::SolverConfig;
use gl_selfdual::landau::ThetaParams;
use gl_selfdual::lattice::Lattice;
use gl_selfdual::phase::default_h_grid;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GLSD_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Settings shared by all commands, merged from the config file and flags.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub lattice: Option<String>,
    pub u: Option<f64>,
    pub w: Option<f64>,
    pub grid: Option<usize>,
    pub theta_trunc: Option<usize>,
    pub tol: Option<f64>,
    pub h: Option<f64>,
    pub h_grid: Option<Vec<f64>>,
    pub k_range: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
}

fn parse_f64(key: &str, v: &str) -> Result<f64, String> {
    v.trim().parse().map_err(|_| format!("{key}: not a number: {v:?}"))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, String> {
    v.trim().parse().map_err(|_| format!("{key}: not a non-negative integer: {v:?}"))
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, String> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_f64(key, s)).collect()
}

pub fn parse_format(v: &str) -> Result<Format, String> {
    match v.trim() {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(format!("format: expected csv or json, got {other:?}")),
    }
}

impl RunConfig {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| format!("{}:{}: expected key=value", path.display(), lineno + 1))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| format!("{}:{}: {e}", path.display(), lineno + 1))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "lattice" => self.lattice = Some(value.to_string()),
            "u" => self.u = Some(parse_f64(key, value)?),
            "w" => self.w = Some(parse_f64(key, value)?),
            "grid" => self.grid = Some(parse_usize(key, value)?),
            "theta-trunc" => self.theta_trunc = Some(parse_usize(key, value)?),
            "tol" => self.tol = Some(parse_f64(key, value)?),
            "H" => self.h = Some(parse_f64(key, value)?),
            "H-grid" => self.h_grid = Some(parse_list(key, value)?),
            "k-range" => self.k_range = Some(parse_list(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = Some(parse_format(value)?),
            "jobs" => self.jobs = Some(parse_usize(key, value)?),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: RunConfig) -> RunConfig {
        RunConfig {
            lattice: other.lattice.or(self.lattice),
            u: other.u.or(self.u),
            w: other.w.or(self.w),
            grid: other.grid.or(self.grid),
            theta_trunc: other.theta_trunc.or(self.theta_trunc),
            tol: other.tol.or(self.tol),
            h: other.h.or(self.h),
            h_grid: other.h_grid.or(self.h_grid),
            k_range: other.k_range.or(self.k_range),
            out: other.out.or(self.out),
            format: other.format.or(self.format),
            jobs: other.jobs.or(self.jobs),
        }
    }

    pub fn lattice(&self) -> Result<Lattice, String> {
        let custom = self.u.is_some() || self.w.is_some();
        match (&self.lattice, custom) {
            (Some(_), true) => Err("give either --lattice or --u/--w, not both".into()),
            (Some(name), false) => Lattice::preset(name).map_err(|e| e.to_string()),
            (None, true) => Lattice::new(self.u.unwrap_or(1.0), self.w.unwrap_or(0.0)).map_err(|e| e.to_string()),
            (None, false) => Ok(Lattice::square()),
        }
    }

    pub fn solver(&self) -> Result<SolverConfig, String> {
        let mut cfg = SolverConfig::default();
        if let Some(n) = self.grid {
            if n < 8 || n % 2 != 0 {
                return Err(format!("grid must be even and at least 8, got {n}"));
            }
            cfg.grid_n = n;
            cfg.escalate_grid = false;
        }
        if let Some(t) = self.theta_trunc {
            cfg.theta = ThetaParams::new(t);
            cfg.theta.validate(&self.lattice()?).map_err(|e| e.to_string())?;
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return Err(format!("tol must be positive, got {tol}"));
            }
            cfg.tol_residual = tol;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn h_grid(&self) -> Result<Vec<f64>, String> {
        let g = self.h_grid.clone().unwrap_or_else(default_h_grid);
        if g.is_empty() {
            return Err("H-grid is empty".into());
        }
        if g.iter().any(|h| !(*h > 0.0 && *h < std::f64::consts::FRAC_1_SQRT_2)) {
            return Err("H-grid values must lie in (0, 1/sqrt 2)".into());
        }
        if g.windows(2).any(|w| !(w[1] < w[0])) {
            return Err("H-grid must be strictly descending".into());
        }
        Ok(g)
    }

    /// `(k_min, k_max, samples)`; defaults to `0.3, 2, 35`.
    pub fn k_range(&self) -> Result<(f64, f64, usize), String> {
        match self.k_range.as_deref() {
            None => Ok((0.3, 2.0, 35)),
            Some([lo, hi]) => Ok((*lo, *hi, 35)),
            Some([lo, hi, n]) if *n >= 2.0 && n.fract() == 0.0 => Ok((*lo, *hi, *n as usize)),
            Some(other) => Err(format!("k-range expects min,max[,samples], got {other:?}")),
        }
        .and_then(|(lo, hi, n)| {
            if lo > 0.0 && hi > lo && hi.is_finite() {
                Ok((lo, hi, n))
            } else {
                Err(format!("k-range needs 0 < min < max, got [{lo}, {hi}]"))
            }
        })
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    /// Output directory from `--out`, the config file or the environment.
    pub fn out_dir(&self) -> Option<PathBuf> {
        self.out.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }
}
