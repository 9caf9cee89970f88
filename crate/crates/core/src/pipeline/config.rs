//! Plain-text pipeline configuration.
//!
//! Same lexical rules as ENVI headers: `key = value` lines, `;`/`#`
//! comments, brace lists. Relative paths resolve against the directory of
//! the config file.

use std::path::{Path, PathBuf};

use crate::endmember;
use crate::error::{Error, Result};
use crate::hyperion;
use crate::kv::{self, Entry};
use crate::mapping;
use crate::mnf;
use crate::ppi::{self, PpiParams};
use crate::preprocess::Roi;
use crate::spectral_match::AnalystWeights;

pub const DEFAULT_MIN_COUNT: u32 = 1;
pub const DEFAULT_MAX_PIXELS: usize = 10_000;
pub const DEFAULT_OUTPUT_DIRECTORY: &str = "out";
pub const DEFAULT_MASK_FILE: &str = "hyperion_bad_bands.csv";
pub const DEFAULT_GAINS_FILE: &str = "hyperion_gains.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReflectanceMethod {
    Iarr,
    FlatField,
}

impl ReflectanceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ReflectanceMethod::Iarr => "iarr",
            ReflectanceMethod::FlatField => "flat_field",
        }
    }
}

/// Parameters of the `synth` stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub lines: usize,
    pub samples: usize,
    pub bands: usize,
    pub wavelength_range: (f64, f64),
    pub endmembers: Vec<String>,
    pub pure_per_endmember: usize,
    /// Noise sigma as a fraction of the mean endmember value.
    pub noise_fraction: f64,
    /// Abundances are shared within tiles of (lines, samples); 0 samples
    /// means the full line.
    pub tile: (usize, usize),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            lines: 64,
            samples: 64,
            bands: 60,
            wavelength_range: (400.0, 2450.0),
            endmembers: ["Kaolinite", "Calcite", "Hematite", "Gypsum", "Olivine"]
                .map(String::from)
                .to_vec(),
            pure_per_endmember: 5,
            noise_fraction: 0.005,
            tile: (1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub cube_header: Option<PathBuf>,
    pub cube_data: Option<PathBuf>,
    pub bad_band_mask: Option<PathBuf>,
    pub gains: Option<PathBuf>,
    pub library: Option<PathBuf>,
    pub sensor_bands: usize,
    pub roi: Option<Roi>,
    pub reflectance_method: ReflectanceMethod,
    pub flat_field_roi: Option<Roi>,
    pub mnf_keep_k: usize,
    pub ppi: PpiParams,
    pub ppi_min_count: u32,
    pub ppi_max_pixels: usize,
    pub endmember_k: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub analyst_weights: AnalystWeights,
    pub sam_max_angle: f64,
    pub seed: u64,
    pub output_directory: PathBuf,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            cube_header: None,
            cube_data: None,
            bad_band_mask: None,
            gains: None,
            library: None,
            sensor_bands: hyperion::HYPERION_BANDS,
            roi: None,
            reflectance_method: ReflectanceMethod::Iarr,
            flat_field_roi: None,
            mnf_keep_k: mnf::DEFAULT_KEEP_K,
            ppi: PpiParams {
                n_iterations: ppi::DEFAULT_ITERATIONS,
                threshold: ppi::DEFAULT_THRESHOLD,
                seed: 0,
            },
            ppi_min_count: DEFAULT_MIN_COUNT,
            ppi_max_pixels: DEFAULT_MAX_PIXELS,
            endmember_k: endmember::DEFAULT_K,
            kmeans_max_iter: endmember::DEFAULT_MAX_ITER,
            kmeans_tol: endmember::DEFAULT_TOL,
            analyst_weights: AnalystWeights::default(),
            sam_max_angle: mapping::DEFAULT_MAX_ANGLE,
            seed: 0,
            output_directory: PathBuf::from(DEFAULT_OUTPUT_DIRECTORY),
            synth: SynthConfig::default(),
        }
    }
}

/// Text of the shipped `default.cfg`.
pub fn default_config_text() -> String {
    let d = PipelineConfig::default();
    let s = &d.synth;
    let mut t = String::new();
    t.push_str("; hypermap pipeline configuration\n");
    t.push_str("; Relative paths are resolved against this file's directory.\n\n");
    t.push_str("; inputs\n");
    t.push_str("cube header = scene.hdr\n");
    t.push_str("; cube data = scene.img\n");
    t.push_str(&format!("bad band mask = {DEFAULT_MASK_FILE}\n"));
    t.push_str(&format!("gains = {DEFAULT_GAINS_FILE}\n"));
    t.push_str("; library = library.csv\n");
    t.push_str(&format!("sensor bands = {}\n\n", d.sensor_bands));
    t.push_str("; preprocessing\n");
    t.push_str("; roi = {first line, first sample, lines, samples}\n");
    t.push_str(&format!("reflectance method = {}\n", d.reflectance_method.as_str()));
    t.push_str("; flat field roi = {0, 0, 16, 16}\n\n");
    t.push_str("; MNF\n");
    t.push_str(&format!("mnf keep k = {}\n\n", d.mnf_keep_k));
    t.push_str("; pixel purity index\n");
    t.push_str(&format!("ppi iterations = {}\n", d.ppi.n_iterations));
    t.push_str(&format!("ppi threshold = {}\n", d.ppi.threshold));
    t.push_str(&format!("ppi min count = {}\n", d.ppi_min_count));
    t.push_str(&format!("ppi max pixels = {}\n\n", d.ppi_max_pixels));
    t.push_str("; endmembers\n");
    t.push_str(&format!("endmember k = {}\n", d.endmember_k));
    t.push_str(&format!("kmeans max iter = {}\n", d.kmeans_max_iter));
    t.push_str(&format!("kmeans tol = {:e}\n\n", d.kmeans_tol));
    t.push_str("; matching and mapping\n");
    let w = d.analyst_weights;
    t.push_str(&format!("analyst weights = {{{}, {}, {}}}\n", w.sam, w.sff, w.be));
    t.push_str(&format!("sam max angle = {}\n\n", d.sam_max_angle));
    t.push_str(&format!("seed = {}\n", d.seed));
    t.push_str(&format!("output directory = {}\n\n", DEFAULT_OUTPUT_DIRECTORY));
    t.push_str("; synthetic scene\n");
    t.push_str(&format!("synth lines = {}\n", s.lines));
    t.push_str(&format!("synth samples = {}\n", s.samples));
    t.push_str(&format!("synth bands = {}\n", s.bands));
    t.push_str(&format!(
        "synth wavelength range = {{{}, {}}}\n",
        s.wavelength_range.0, s.wavelength_range.1
    ));
    t.push_str(&format!("synth endmembers = {{{}}}\n", s.endmembers.join(", ")));
    t.push_str(&format!("synth pure per endmember = {}\n", s.pure_per_endmember));
    t.push_str(&format!("synth noise fraction = {}\n", s.noise_fraction));
    t.push_str(&format!("synth tile = {{{}, {}}}\n", s.tile.0, s.tile.1));
    t
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("expected {what}, got {value:?}")))
}

fn positive(key: &str, value: &str) -> Result<usize> {
    let v: usize = parse_num(key, value, "a positive integer")?;
    if v == 0 {
        return Err(Error::config(key, "must be a positive integer (>= 1)"));
    }
    Ok(v)
}

fn real_in(key: &str, value: &str, lo: f64, hi: f64) -> Result<f64> {
    let v: f64 = parse_num(key, value, "a real number")?;
    if !(v >= lo && v <= hi) {
        return Err(Error::config(key, format!("must lie in [{lo}, {hi}], got {v}")));
    }
    Ok(v)
}

fn reals(key: &str, value: &str, n: usize) -> Result<Vec<f64>> {
    let v = kv::parse_real_list(key, value).map_err(|e| Error::config(key, e.to_string()))?;
    if v.len() != n {
        return Err(Error::config(key, format!("expected a list of {n} numbers, got {}", v.len())));
    }
    Ok(v)
}

fn roi(key: &str, value: &str) -> Result<Roi> {
    let v = reals(key, value, 4)?;
    if v.iter().any(|x| !(*x >= 0.0) || x.fract() != 0.0) {
        return Err(Error::config(key, "expected {first line, first sample, lines, samples} as non-negative integers"));
    }
    if v[2] < 1.0 || v[3] < 1.0 {
        return Err(Error::config(key, "roi must cover at least one line and one sample"));
    }
    Ok(Roi::new(v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize))
}

impl PipelineConfig {
    /// Read a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_text(&text, base)
    }

    pub fn from_text(text: &str, base_dir: &Path) -> Result<Self> {
        let entries = kv::parse_entries(text).map_err(|e| Error::config("<syntax>", e.to_string()))?;
        let mut cfg = Self {
            output_directory: base_dir.join(DEFAULT_OUTPUT_DIRECTORY),
            ..Self::default()
        };
        for Entry { key, value } in &entries {
            cfg.apply(&kv::normalize_key(key), value, base_dir)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || -> Result<PathBuf> {
            if value.trim().is_empty() {
                return Err(Error::config(key, "expected a file path"));
            }
            Ok(base.join(value.trim()))
        };
        match key {
            "cube header" => self.cube_header = Some(path()?),
            "cube data" => self.cube_data = Some(path()?),
            "bad band mask" => self.bad_band_mask = Some(path()?),
            "gains" => self.gains = Some(path()?),
            "library" => self.library = Some(path()?),
            "sensor bands" => self.sensor_bands = positive(key, value)?,
            "roi" => self.roi = Some(roi(key, value)?),
            "reflectance method" => {
                self.reflectance_method = match value.trim().to_ascii_lowercase().as_str() {
                    "iarr" => ReflectanceMethod::Iarr,
                    "flat_field" | "flat field" => ReflectanceMethod::FlatField,
                    other => return Err(Error::config(key, format!("expected iarr or flat_field, got {other:?}"))),
                }
            }
            "flat field roi" => self.flat_field_roi = Some(roi(key, value)?),
            "mnf keep k" => self.mnf_keep_k = positive(key, value)?,
            "ppi iterations" => self.ppi.n_iterations = positive(key, value)?,
            "ppi threshold" => self.ppi.threshold = real_in(key, value, 0.0, f64::MAX)?,
            "ppi min count" => {
                let v = positive(key, value)?;
                self.ppi_min_count = u32::try_from(v).map_err(|_| Error::config(key, "too large"))?;
            }
            "ppi max pixels" => self.ppi_max_pixels = positive(key, value)?,
            "endmember k" => self.endmember_k = positive(key, value)?,
            "kmeans max iter" => self.kmeans_max_iter = positive(key, value)?,
            "kmeans tol" => self.kmeans_tol = real_in(key, value, 0.0, f64::MAX)?,
            "analyst weights" => {
                let w = reals(key, value, 3)?;
                self.analyst_weights =
                    AnalystWeights::new(w[0], w[1], w[2]).map_err(|e| Error::config(key, e.to_string()))?;
            }
            "sam max angle" => self.sam_max_angle = real_in(key, value, 0.0, std::f64::consts::FRAC_PI_2)?,
            "seed" => self.seed = parse_num(key, value, "a non-negative integer")?,
            "output directory" => self.output_directory = path()?,
            "synth lines" => self.synth.lines = positive(key, value)?,
            "synth samples" => self.synth.samples = positive(key, value)?,
            "synth bands" => self.synth.bands = positive(key, value)?,
            "synth wavelength range" => {
                let v = reals(key, value, 2)?;
                if !(v[0] < v[1]) {
                    return Err(Error::config(key, "expected {first, last} with first < last"));
                }
                self.synth.wavelength_range = (v[0], v[1]);
            }
            "synth endmembers" => {
                let names = kv::parse_text_list(key, value).map_err(|e| Error::config(key, e.to_string()))?;
                if names.is_empty() || names.iter().any(String::is_empty) {
                    return Err(Error::config(key, "expected a non-empty list of library names"));
                }
                self.synth.endmembers = names;
            }
            "synth pure per endmember" => {
                self.synth.pure_per_endmember = parse_num(key, value, "a non-negative integer")?
            }
            "synth noise fraction" => self.synth.noise_fraction = real_in(key, value, 0.0, 1.0)?,
            "synth tile" => {
                let v = reals(key, value, 2)?;
                if v.iter().any(|x| !(*x >= 0.0) || x.fract() != 0.0) || v[0] < 1.0 {
                    return Err(Error::config(key, "expected {lines >= 1, samples >= 0} as integers"));
                }
                self.synth.tile = (v[0] as usize, v[1] as usize);
            }
            _ => return Err(Error::config(key, "unknown configuration key")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.reflectance_method == ReflectanceMethod::FlatField && self.flat_field_roi.is_none() {
            return Err(Error::config("flat field roi", "required when reflectance method = flat_field"));
        }
        if self.synth.bands < 2 {
            return Err(Error::config("synth bands", "must be at least 2"));
        }
        Ok(())
    }

    /// PPI parameters with the run seed applied.
    pub fn ppi_params(&self) -> PpiParams {
        PpiParams { seed: self.seed, ..self.ppi }
    }
}
