//! Flat `key = value` run configuration. `#` starts a comment; command-line
//! flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use catkit::catability::OptConfig;
use catkit::decoherence::WignerGrid;
use catkit::fock::{FockSpace, DEFAULT_DIM, DEFAULT_HERM_TOL, DEFAULT_TAIL_TOL};
use clap::Args;

pub const KEYS: [&str; 15] = [
    "dim",
    "tail_tol",
    "herm_tol",
    "gamma_min",
    "gamma_max",
    "gamma_points",
    "gs_tol",
    "starts",
    "r_max",
    "seed",
    "max_iters",
    "beta_max",
    "h",
    "out",
    "json",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub tail_tol: f64,
    pub herm_tol: f64,
    pub opt: OptConfig,
    pub wigner: WignerGrid,
    pub out: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            tail_tol: DEFAULT_TAIL_TOL,
            herm_tol: DEFAULT_HERM_TOL,
            opt: OptConfig::default(),
            wigner: WignerGrid::default(),
            out: None,
            json: None,
        }
    }
}

/// Every config key as a global flag.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Flat key=value config file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Fock-space cutoff
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub tail_tol: Option<f64>,
    #[arg(long, global = true)]
    pub herm_tol: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_min: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_max: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_points: Option<usize>,
    #[arg(long, global = true)]
    pub gs_tol: Option<f64>,
    /// Optimizer multistart count
    #[arg(long, global = true)]
    pub starts: Option<usize>,
    #[arg(long, global = true)]
    pub r_max: Option<f64>,
    /// Seed for optimizer starts
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Wigner grid half-width
    #[arg(long, global = true)]
    pub beta_max: Option<f64>,
    /// Wigner grid spacing
    #[arg(long = "h", global = true)]
    pub h: Option<f64>,
    /// Output path for CSV or text output
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output path for JSON output
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| anyhow!("config key `{key}`: cannot parse `{raw}`"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "dim" => self.dim = parse_num(key, raw)?,
            "tail_tol" => self.tail_tol = parse_num(key, raw)?,
            "herm_tol" => self.herm_tol = parse_num(key, raw)?,
            "gamma_min" => self.opt.gamma_min = parse_num(key, raw)?,
            "gamma_max" => self.opt.gamma_max = parse_num(key, raw)?,
            "gamma_points" => self.opt.gamma_points = parse_num(key, raw)?,
            "gs_tol" => self.opt.gs_tol = parse_num(key, raw)?,
            "starts" => self.opt.starts = parse_num(key, raw)?,
            "r_max" => self.opt.r_max = parse_num(key, raw)?,
            "seed" => self.opt.seed = parse_num(key, raw)?,
            "max_iters" => self.opt.max_iters = parse_num(key, raw)?,
            "beta_max" => self.wigner.beta_max = parse_num(key, raw)?,
            "h" => self.wigner.h = parse_num(key, raw)?,
            "out" => self.out = Some(PathBuf::from(raw)),
            "json" => self.json = Some(PathBuf::from(raw)),
            other => bail!("unknown config key `{other}` (known: {})", KEYS.join(", ")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            cfg.set(key.trim(), value.trim()).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// File (if any) first, then flags.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut cfg = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! apply {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = o.$field.clone() { $target = v; })*
            };
        }
        apply!(
            dim => cfg.dim,
            tail_tol => cfg.tail_tol,
            herm_tol => cfg.herm_tol,
            gamma_min => cfg.opt.gamma_min,
            gamma_max => cfg.opt.gamma_max,
            gamma_points => cfg.opt.gamma_points,
            gs_tol => cfg.opt.gs_tol,
            starts => cfg.opt.starts,
            r_max => cfg.opt.r_max,
            seed => cfg.opt.seed,
            max_iters => cfg.opt.max_iters,
            beta_max => cfg.wigner.beta_max,
            h => cfg.wigner.h,
        );
        if o.out.is_some() {
            cfg.out = o.out.clone();
        }
        if o.json.is_some() {
            cfg.json = o.json.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every numeric field must be positive; errors name the key.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tail_tol", self.tail_tol),
            ("herm_tol", self.herm_tol),
            ("gamma_min", self.opt.gamma_min),
            ("gamma_max", self.opt.gamma_max),
            ("gs_tol", self.opt.gs_tol),
            ("r_max", self.opt.r_max),
            ("beta_max", self.wigner.beta_max),
            ("h", self.wigner.h),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bail!("config key `{key}` must be positive and finite, got {v}");
            }
        }
        let counts = [
            ("dim", self.dim),
            ("gamma_points", self.opt.gamma_points),
            ("starts", self.opt.starts),
            ("max_iters", self.opt.max_iters),
        ];
        for (key, v) in counts {
            if v == 0 {
                bail!("config key `{key}` must be positive");
            }
        }
        self.opt.validate().map_err(|e| anyhow!("optimizer settings: {e}"))?;
        Ok(())
    }

    pub fn space(&self) -> Result<FockSpace> {
        FockSpace::new(self.dim, self.herm_tol, self.tail_tol).map_err(|e| anyhow!("config key `dim`: {e}"))
    }
}
