use std::path::PathBuf;
use std::str::FromStr;

use crate::conditioning::{reference_polynomials, HistogramSpec, NumberPolynomial};
use crate::error::{Error, Result};
use crate::fock::DEFAULT_N_MAX;
use crate::gaussian::ExperimentParams;
use crate::tomography::{GridSpec, DEFAULT_CUTOFF};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Simulate,
    Condition,
    Reconstruct,
    Oracle,
    Verify,
    Run,
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "simulate" => RunMode::Simulate,
            "condition" => RunMode::Condition,
            "reconstruct" => RunMode::Reconstruct,
            "oracle" => RunMode::Oracle,
            "verify" => RunMode::Verify,
            "run" => RunMode::Run,
            other => return Err(format!("unknown mode `{other}`")),
        })
    }
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Simulate => "simulate",
            RunMode::Condition => "condition",
            RunMode::Reconstruct => "reconstruct",
            RunMode::Oracle => "oracle",
            RunMode::Verify => "verify",
            RunMode::Run => "run",
        }
    }
}

/// Everything a pipeline invocation needs. Parsed from flat `key = value`
/// text; every key is optional and defaults to the reference experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ExperimentParams,
    pub histogram: HistogramSpec,
    /// Coarser binning accumulated alongside, for oracle comparison at
    /// lower statistical noise.
    pub compare_histogram: HistogramSpec,
    pub polynomials: Vec<NumberPolynomial>,
    pub grid: GridSpec,
    pub cutoff: f64,
    pub n_max: usize,
    pub shards_per_angle: u32,
    pub oracle: bool,
    /// Worker threads; `None` uses the machine's parallelism. Never affects output bytes.
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
    /// Directory of previously written stage outputs, for the file-driven verbs.
    pub input_dir: Option<PathBuf>,
    pub mode: RunMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ExperimentParams::default(),
            histogram: HistogramSpec::default(),
            compare_histogram: HistogramSpec {
                x_max: 8.0,
                n_bins: 16,
            },
            polynomials: reference_polynomials(),
            grid: GridSpec::default(),
            cutoff: DEFAULT_CUTOFF,
            n_max: DEFAULT_N_MAX,
            shards_per_angle: 10,
            oracle: true,
            threads: None,
            out_dir: PathBuf::from("out"),
            input_dir: None,
            mode: RunMode::Run,
        }
    }
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        o => Err(format!("expected a boolean, got `{o}`")),
    }
}

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |reason: String| Error::Config {
                line: i + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("expected `key = value`, got `{line}`")))?;
            cfg.set(key.trim(), value.trim()).map_err(fail)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let p = &mut self.params;
        match key {
            "squeezed_variance_db" => p.squeezed_variance_db = parse_num(v)?,
            "antisqueezed_variance_db" => p.antisqueezed_variance_db = parse_num(v)?,
            "tap_reflectivity" => p.tap_reflectivity = parse_num(v)?,
            "homodyne_efficiency" => p.homodyne_efficiency = parse_num(v)?,
            "dark_noise_db" => {
                p.dark_noise_db = if v == "none" {
                    f64::NEG_INFINITY
                } else {
                    parse_num(v)?
                }
            }
            "conditioning_phase" => p.conditioning_phase = parse_num(v)?,
            "tomography_angles" => p.tomography_angles = parse_list(v)?,
            "tomography_angles_deg" => {
                p.tomography_angles = parse_list::<f64>(v)?
                    .iter()
                    .map(|d| d.to_radians())
                    .collect()
            }
            "samples_per_angle" => p.samples_per_angle = parse_num(v)?,
            "rng_seed" | "seed" => p.rng_seed = parse_num(v)?,
            "hist_x_max" => self.histogram.x_max = parse_num(v)?,
            "hist_bins" => self.histogram.n_bins = parse_num(v)?,
            "compare_x_max" => self.compare_histogram.x_max = parse_num(v)?,
            "compare_bins" => self.compare_histogram.n_bins = parse_num(v)?,
            "polynomials" => {
                self.polynomials = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| NumberPolynomial::parse(s).map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "grid_x_max" => self.grid.x_max = parse_num(v)?,
            "grid_points" => self.grid.n_grid = parse_num(v)?,
            "cutoff" => self.cutoff = parse_num(v)?,
            "n_max" => self.n_max = parse_num(v)?,
            "shards_per_angle" => self.shards_per_angle = parse_num(v)?,
            "oracle" => self.oracle = parse_bool(v)?,
            "threads" => self.threads = Some(parse_num(v)?),
            "out" => self.out_dir = PathBuf::from(v),
            "input" => self.input_dir = Some(PathBuf::from(v)),
            "mode" => self.mode = v.parse()?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.histogram.validate()?;
        self.compare_histogram.validate()?;
        self.grid.validate()?;
        let bad = |reason: String| Err(Error::Config { line: 0, reason });
        if self.polynomials.is_empty() {
            return bad("at least one conditioning polynomial is required".into());
        }
        if !(self.cutoff > 0.0) {
            return bad(format!("cutoff must be positive, got {}", self.cutoff));
        }
        if self.shards_per_angle == 0 {
            return bad("shards_per_angle must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if let Some(dir) = &self.input_dir {
            if !dir.is_dir() {
                return bad(format!("input directory {} does not exist", dir.display()));
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("mode", self.mode.as_str().into());
        kv("squeezed_variance_db", p.squeezed_variance_db.to_string());
        kv(
            "antisqueezed_variance_db",
            p.antisqueezed_variance_db.to_string(),
        );
        kv("tap_reflectivity", p.tap_reflectivity.to_string());
        kv("homodyne_efficiency", p.homodyne_efficiency.to_string());
        kv(
            "dark_noise_db",
            if p.dark_noise_db == f64::NEG_INFINITY {
                "none".into()
            } else {
                p.dark_noise_db.to_string()
            },
        );
        kv("conditioning_phase", p.conditioning_phase.to_string());
        kv("tomography_angles", join(&p.tomography_angles));
        kv("samples_per_angle", p.samples_per_angle.to_string());
        kv("rng_seed", p.rng_seed.to_string());
        kv("hist_x_max", self.histogram.x_max.to_string());
        kv("hist_bins", self.histogram.n_bins.to_string());
        kv("compare_x_max", self.compare_histogram.x_max.to_string());
        kv("compare_bins", self.compare_histogram.n_bins.to_string());
        kv(
            "polynomials",
            self.polynomials
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        );
        kv("grid_x_max", self.grid.x_max.to_string());
        kv("grid_points", self.grid.n_grid.to_string());
        kv("cutoff", self.cutoff.to_string());
        kv("n_max", self.n_max.to_string());
        kv("shards_per_angle", self.shards_per_angle.to_string());
        kv("oracle", self.oracle.to_string());
        kv("out", self.out_dir.display().to_string());
        if let Some(t) = self.threads {
            kv("threads", t.to_string());
        }
        if let Some(d) = &self.input_dir {
            kv("input", d.display().to_string());
        }
        s
    }
}
