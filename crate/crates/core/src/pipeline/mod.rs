//! Staged pipeline driver.
//!
//! Every stage reads its inputs from the configured files or from the
//! artifacts earlier stages left in the output directory, and writes its own
//! artifacts there under fixed names.

mod config;

pub use config::{
    default_config_text, PipelineConfig, ReflectanceMethod, SynthConfig, DEFAULT_GAINS_FILE, DEFAULT_MASK_FILE,
};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cube::{SpectralCube, UnitsTag};
use crate::endmember::{self, DeriveOptions};
use crate::envi_io::{
    self, parse_envi_header, read_envi, write_envi, write_spectral_library, DataType, Interleave, SpectralLibrary,
    SpectrumRecord,
};
use crate::error::{Error, Result};
use crate::mapping;
use crate::mnf;
use crate::numerics::split_seed;
use crate::ppi;
use crate::preprocess::{self, BandMask};
use crate::spectral_match;
use crate::synthcube::{self, MixingScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Info,
    Preprocess,
    Mnf,
    Ppi,
    Endmembers,
    Match,
    Classify,
    Mtmf,
    Synth,
    Report,
    All,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::Info,
        Stage::Preprocess,
        Stage::Mnf,
        Stage::Ppi,
        Stage::Endmembers,
        Stage::Match,
        Stage::Classify,
        Stage::Mtmf,
        Stage::Synth,
        Stage::Report,
        Stage::All,
    ];

    /// Stages run, in order, by [`Stage::All`].
    pub const SEQUENCE: [Stage; 8] = [
        Stage::Preprocess,
        Stage::Mnf,
        Stage::Ppi,
        Stage::Endmembers,
        Stage::Match,
        Stage::Classify,
        Stage::Mtmf,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Info => "info",
            Stage::Preprocess => "preprocess",
            Stage::Mnf => "mnf",
            Stage::Ppi => "ppi",
            Stage::Endmembers => "endmembers",
            Stage::Match => "match",
            Stage::Classify => "classify",
            Stage::Mtmf => "mtmf",
            Stage::Synth => "synth",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown stage {s:?}")))
    }
}

/// What a stage did.
#[derive(Debug, Clone, Default)]
pub struct StageReport {
    /// Files written, in write order.
    pub artifacts: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

impl StageReport {
    fn merge(&mut self, other: StageReport) {
        self.artifacts.extend(other.artifacts);
        self.summary.extend(other.summary);
    }
}

pub mod artifact {
    pub const REFLECTANCE: &str = "reflectance";
    pub const STANDARDIZED: &str = "standardized";
    pub const BAND_STATS: &str = "band_stats.csv";
    pub const MNF_MODEL: &str = "mnf_model.csv";
    pub const MNF: &str = "mnf";
    pub const MNF_DENOISED: &str = "mnf_denoised";
    pub const EIGENVALUES: &str = "eigenvalues.csv";
    pub const PPI: &str = "ppi";
    pub const PURE_PIXELS: &str = "pure_pixels.csv";
    pub const PPI_TRACE: &str = "ppi_trace.csv";
    pub const ENDMEMBERS: &str = "endmembers.csv";
    pub const ENDMEMBER_MANIFEST: &str = "endmember_manifest.csv";
    pub const ENDMEMBER_MEMBERS: &str = "endmember_members.csv";
    pub const ENDMEMBERS_MNF: &str = "endmembers_mnf.csv";
    pub const MATCHES_DIR: &str = "matches";
    pub const CLASSMAP: &str = "classmap";
    pub const RULES: &str = "rules";
    pub const CLASS_STATS: &str = "class_stats.csv";
    pub const CLASS_LEGEND: &str = "class_legend.csv";
    pub const REPORT: &str = "report.csv";
    pub const PLOT_SPECTRA: &str = "plot_endmember_spectra.csv";
    pub const PLOT_PPI_HISTOGRAM: &str = "plot_ppi_histogram.csv";
    pub const PLOT_EIGENVALUES: &str = "plot_eigenvalues.csv";
    pub const SYNTH: &str = "synth";
    pub const GROUND_TRUTH: &str = "ground_truth.csv";
    pub const SYNTH_LIBRARY: &str = "library.csv";

    pub fn matches_file(class_id: usize) -> String {
        format!("{MATCHES_DIR}/class_{class_id}.csv")
    }

    pub fn mtmf_base(class_id: usize) -> String {
        format!("mtmf_class_{class_id}")
    }
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    report: StageReport,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a PipelineConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output_directory).map_err(|e| Error::io(&cfg.output_directory, e))?;
        Ok(Self {
            cfg,
            report: StageReport::default(),
        })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.output_directory.join(name)
    }

    /// An artifact produced by `stage`, which must already exist.
    fn require(&self, stage: Stage, name: &str) -> Result<PathBuf> {
        let p = self.out(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::Dependency {
                stage: stage.as_str().to_string(),
                path: p,
            })
        }
    }

    fn require_cube(&self, stage: Stage, base: &str) -> Result<SpectralCube> {
        let hdr = self.require(stage, &format!("{base}.hdr"))?;
        let img = self.require(stage, &format!("{base}.img"))?;
        read_envi(&hdr, Some(&img))
    }

    fn require_text(&self, stage: Stage, name: &str) -> Result<String> {
        let p = self.require(stage, name)?;
        fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.out(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        self.report.artifacts.push(p);
        Ok(())
    }

    fn write_cube(&mut self, base: &str, cube: &SpectralCube, dt: DataType) -> Result<()> {
        let p = self.out(base);
        write_envi(cube, &p, Interleave::Bsq, dt)?;
        self.report.artifacts.push(p.with_extension("hdr"));
        self.report.artifacts.push(p.with_extension("img"));
        Ok(())
    }

    fn say(&mut self, line: impl Into<String>) {
        self.report.summary.push(line.into());
    }
}

/// A configured input file, which must be set and exist.
fn input<'p>(key: &str, path: &'p Option<PathBuf>) -> Result<&'p Path> {
    let p = path.as_deref().ok_or_else(|| Error::config(key, "not set"))?;
    if !p.exists() {
        return Err(Error::config(key, format!("file {} does not exist", p.display())));
    }
    Ok(p)
}

fn optional_text(key: &str, path: &Option<PathBuf>) -> Result<Option<String>> {
    match path {
        None => Ok(None),
        Some(_) => {
            let p = input(key, path)?;
            fs::read_to_string(p).map(Some).map_err(|e| Error::io(p, e))
        }
    }
}

/// Run one stage (or the whole sequence for [`Stage::All`]).
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<StageReport> {
    if stage == Stage::All {
        let mut total = StageReport::default();
        for st in Stage::SEQUENCE {
            total.merge(run_stage(st, cfg)?);
        }
        return Ok(total);
    }
    if stage == Stage::Info {
        return info(cfg);
    }
    let mut ctx = Ctx::new(cfg)?;
    match stage {
        Stage::Preprocess => stage_preprocess(&mut ctx)?,
        Stage::Mnf => stage_mnf(&mut ctx)?,
        Stage::Ppi => stage_ppi(&mut ctx)?,
        Stage::Endmembers => stage_endmembers(&mut ctx)?,
        Stage::Match => stage_match(&mut ctx)?,
        Stage::Classify => stage_classify(&mut ctx)?,
        Stage::Mtmf => stage_mtmf(&mut ctx)?,
        Stage::Synth => stage_synth(&mut ctx)?,
        Stage::Report => stage_report(&mut ctx)?,
        Stage::Info | Stage::All => unreachable!(),
    }
    Ok(ctx.report)
}

fn info(cfg: &PipelineConfig) -> Result<StageReport> {
    let path = input("cube header", &cfg.cube_header)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let h = parse_envi_header(&text)?;
    let mut summary = vec![
        format!("header: {}", path.display()),
        format!("dimensions: {} x {} x {} (samples x lines x bands)", h.samples, h.lines, h.bands),
        format!("interleave: {}", h.interleave.as_str()),
        format!("data type: {} ({} bytes)", h.data_type.code(), h.data_type.size()),
        format!("byte order: {}", h.byte_order.code()),
    ];
    match h.wavelengths_nm() {
        Some(wl) if !wl.is_empty() => summary.push(format!(
            "wavelengths: {} nm to {} nm",
            wl[0],
            wl[wl.len() - 1]
        )),
        _ => summary.push("wavelengths: none".into()),
    }
    if let Some(bbl) = &h.bad_band_multiplier {
        summary.push(format!("good bands: {} of {}", bbl.iter().filter(|&&b| b == 1).count(), bbl.len()));
    }
    Ok(StageReport {
        artifacts: Vec::new(),
        summary,
    })
}

fn stage_preprocess(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let hdr = input("cube header", &cfg.cube_header)?;
    let data = match &cfg.cube_data {
        Some(_) => Some(input("cube data", &cfg.cube_data)?),
        None => None,
    };
    let mut cube = read_envi(hdr, data)?;
    if cube.bands() != cfg.sensor_bands {
        return Err(Error::config(
            "sensor bands",
            format!("is {}, but the cube has {} bands", cfg.sensor_bands, cube.bands()),
        ));
    }
    let mask = match optional_text("bad band mask", &cfg.bad_band_mask)? {
        Some(t) => preprocess::read_band_mask_csv(&t, cube.bands())?,
        None => BandMask::new(cube.bad_band_mask().to_vec())?,
    };
    if let Some(roi) = &cfg.roi {
        cube = preprocess::subset_roi(&cube, roi)?;
    }
    if cube.units() == UnitsTag::Radiance {
        if let Some(t) = optional_text("gains", &cfg.gains)? {
            let gains = preprocess::read_gains_csv(&t, cube.bands())?;
            cube = preprocess::scale_radiance(&cube, &gains)?;
        }
        cube = preprocess::remove_bad_bands(&cube, &mask)?;
        cube = match cfg.reflectance_method {
            ReflectanceMethod::Iarr => preprocess::reflectance_iarr(&cube)?,
            ReflectanceMethod::FlatField => {
                let roi = cfg.flat_field_roi.as_ref().expect("validated with the config");
                preprocess::reflectance_flat_field(&cube, roi)?
            }
        };
    } else {
        cube = preprocess::remove_bad_bands(&cube, &mask)?;
        ctx.say(format!("input is {}; radiance scaling and reflectance retrieval skipped", cube.units()));
    }
    let (standardized, stats) = preprocess::standardize(&cube)?;
    ctx.write_cube(artifact::REFLECTANCE, &cube, DataType::F64)?;
    ctx.write_cube(artifact::STANDARDIZED, &standardized, DataType::F64)?;
    let mut csv = String::from("band,wavelength_nm,mean,std\n");
    for (b, ((m, s), w)) in stats.mean.iter().zip(&stats.std).zip(cube.wavelengths()).enumerate() {
        csv.push_str(&format!("{},{w},{m:e},{s:e}\n", b + 1));
    }
    ctx.write_text(artifact::BAND_STATS, &csv)?;
    ctx.say(format!(
        "preprocess: {} x {} pixels, {} of {} bands kept",
        cube.samples(),
        cube.lines(),
        cube.bands(),
        mask.keep().len()
    ));
    Ok(())
}

fn stage_mnf(ctx: &mut Ctx) -> Result<()> {
    let cube = ctx.require_cube(Stage::Preprocess, artifact::REFLECTANCE)?;
    let keep = ctx.cfg.mnf_keep_k;
    if keep > cube.bands() {
        return Err(Error::config(
            "mnf keep k",
            format!("must lie in 1..={} (bands after preprocessing), got {keep}", cube.bands()),
        ));
    }
    let noise = mnf::estimate_noise_covariance(&cube)?;
    let model = mnf::fit_mnf(&cube, &noise)?;
    let components = mnf::forward_mnf(&model, &cube)?;
    let denoised = mnf::inverse_mnf(&model, &components, keep)?;
    ctx.write_text(artifact::MNF_MODEL, &mnf::model_to_csv(&model))?;
    ctx.write_cube(artifact::MNF, &components, DataType::F64)?;
    ctx.write_cube(artifact::MNF_DENOISED, &denoised, DataType::F64)?;
    ctx.write_text(artifact::EIGENVALUES, &eigenvalue_csv(&model.eigenvalues))?;
    ctx.say(format!(
        "mnf: {} components, leading eigenvalue {:.4}, keeping {keep}",
        model.eigenvalues.len(),
        model.eigenvalues.first().copied().unwrap_or(0.0)
    ));
    Ok(())
}

fn eigenvalue_csv(values: &[f64]) -> String {
    let mut s = String::from("component,eigenvalue\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{},{v:e}\n", i + 1));
    }
    s
}

fn stage_ppi(ctx: &mut Ctx) -> Result<()> {
    let mnf_cube = ctx.require_cube(Stage::Mnf, artifact::MNF)?;
    let cfg = ctx.cfg;
    if cfg.mnf_keep_k > mnf_cube.bands() {
        return Err(Error::config(
            "mnf keep k",
            format!("must lie in 1..={}, got {}", mnf_cube.bands(), cfg.mnf_keep_k),
        ));
    }
    let img = ppi::run_ppi(&mnf_cube, &cfg.ppi_params(), cfg.mnf_keep_k)?;
    let pure = ppi::select_pure_pixels(&img, cfg.ppi_min_count, cfg.ppi_max_pixels);
    ctx.write_cube(artifact::PPI, &ppi::counts_cube(&img)?, DataType::I32)?;
    ctx.write_text(artifact::PURE_PIXELS, &ppi::pure_pixels_csv(&pure))?;
    let mut trace = String::from("iteration,pure_pixels\n");
    for (i, n) in img.cumulative_trace().iter().enumerate() {
        trace.push_str(&format!("{},{n}\n", i + 1));
    }
    ctx.write_text(artifact::PPI_TRACE, &trace)?;
    ctx.say(format!(
        "ppi: {} iterations, {} pixels ever extreme, {} selected",
        img.params.n_iterations,
        img.counts.iter().filter(|&&c| c > 0).count(),
        pure.len()
    ));
    Ok(())
}

fn stage_endmembers(ctx: &mut Ctx) -> Result<()> {
    let corrected = ctx.require_cube(Stage::Preprocess, artifact::REFLECTANCE)?;
    let mnf_cube = ctx.require_cube(Stage::Mnf, artifact::MNF)?;
    let pure = ppi::read_pure_pixels_csv(&ctx.require_text(Stage::Ppi, artifact::PURE_PIXELS)?)?;
    let cfg = ctx.cfg;
    let locs: Vec<(usize, usize)> = pure.iter().map(|&(l, s, _)| (l, s)).collect();
    if locs.len() < cfg.endmember_k {
        return Err(Error::config(
            "endmember k",
            format!("must not exceed the {} selected pure pixels, got {}", locs.len(), cfg.endmember_k),
        ));
    }
    let opts = DeriveOptions {
        k: cfg.endmember_k,
        n_components: cfg.mnf_keep_k.min(mnf_cube.bands()),
        seed: cfg.seed,
        max_iter: cfg.kmeans_max_iter,
        tol: cfg.kmeans_tol,
    };
    let set = endmember::derive_endmembers(&corrected, &mnf_cube, &locs, &opts)?;
    ctx.write_text(artifact::ENDMEMBERS, &write_spectral_library(&set.to_library()?)?)?;
    ctx.write_text(artifact::ENDMEMBER_MANIFEST, &set.manifest_csv())?;
    ctx.write_text(artifact::ENDMEMBER_MEMBERS, &set.members_csv())?;
    ctx.write_text(artifact::ENDMEMBERS_MNF, &set.mnf_means_csv())?;
    ctx.say(format!("endmembers: {} classes from {} pure pixels", set.k, locs.len()));
    Ok(())
}

fn load_library(cfg: &PipelineConfig) -> Result<SpectralLibrary> {
    match &cfg.library {
        Some(_) => envi_io::read_spectral_library_file(input("library", &cfg.library)?),
        None => Ok(synthcube::reference_library()),
    }
}

fn class_id_of(name: &str) -> Result<usize> {
    name.strip_prefix("class_")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("endmember name {name:?} is not class_<id>")))
}

fn load_endmembers(ctx: &Ctx) -> Result<Vec<(usize, SpectrumRecord)>> {
    let text = ctx.require_text(Stage::Endmembers, artifact::ENDMEMBERS)?;
    let lib = envi_io::read_spectral_library(&text)?;
    lib.entries()
        .iter()
        .map(|e| Ok((class_id_of(e.name())?, e.clone())))
        .collect()
}

fn stage_match(ctx: &mut Ctx) -> Result<()> {
    let ems = load_endmembers(ctx)?;
    let lib = load_library(ctx.cfg)?;
    let Some((_, first)) = ems.first() else {
        return Err(Error::InvalidInput("endmember file holds no spectra".into()));
    };
    let resampled = spectral_match::resample_library(&lib, first.wavelengths())?;
    let weights = ctx.cfg.analyst_weights;
    for (id, em) in &ems {
        let ranking = spectral_match::rank_matches(em, &resampled, &weights)?;
        ctx.write_text(&artifact::matches_file(*id), &spectral_match::ranking_csv(&ranking))?;
        ctx.say(format!(
            "match: class {id} -> {} ({:.4})",
            ranking[0].mineral_name, ranking[0].weighted
        ));
    }
    Ok(())
}

fn stage_classify(ctx: &mut Ctx) -> Result<()> {
    let cube = ctx.require_cube(Stage::Preprocess, artifact::REFLECTANCE)?;
    let ems = load_endmembers(ctx)?;
    let spectra: Vec<Vec<f64>> = ems.iter().map(|(_, e)| e.reflectance().to_vec()).collect();
    let map = mapping::sam_classify(&cube, &spectra, ctx.cfg.sam_max_angle)?;
    let stats = mapping::class_statistics(&map);
    ctx.write_cube(artifact::CLASSMAP, &map.class_cube()?, DataType::I32)?;
    ctx.write_cube(artifact::RULES, &map.rule_cube()?, DataType::F64)?;
    ctx.write_text(artifact::CLASS_STATS, &mapping::class_statistics_csv(&stats))?;
    ctx.say(format!(
        "classify: {:.2}% of pixels unclassified at max angle {}",
        stats[0].percent, ctx.cfg.sam_max_angle
    ));
    Ok(())
}

fn stage_mtmf(ctx: &mut Ctx) -> Result<()> {
    let mnf_cube = ctx.require_cube(Stage::Mnf, artifact::MNF)?;
    let (ids, means) = endmember::read_mnf_means_csv(&ctx.require_text(Stage::Endmembers, artifact::ENDMEMBERS_MNF)?)?;
    let nc = means.first().map_or(0, Vec::len);
    if nc == 0 || nc > mnf_cube.bands() {
        return Err(Error::SizeMismatch(format!(
            "endmember MNF means have {nc} components, MNF cube has {}",
            mnf_cube.bands()
        )));
    }
    let leading = mnf::leading_components(&mnf_cube, nc)?;
    for (id, target) in ids.iter().zip(&means) {
        let result = mapping::mtmf(&leading, target)?;
        ctx.write_cube(&artifact::mtmf_base(*id), &result.to_cube()?, DataType::F64)?;
    }
    ctx.say(format!("mtmf: {} class targets over {nc} components", ids.len()));
    Ok(())
}

struct TopMatch {
    mineral: String,
    weighted: String,
}

fn top_match(text: &str) -> Result<TopMatch> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("ranking CSV lacks column {name:?}")))
    };
    let (mi, wi) = (col("mineral")?, col("weighted")?);
    let row = rdr
        .records()
        .next()
        .ok_or_else(|| Error::Parse("empty ranking CSV".into()))??;
    Ok(TopMatch {
        mineral: row[mi].to_string(),
        weighted: row[wi].to_string(),
    })
}

fn read_class_stats(text: &str) -> Result<Vec<(usize, usize, String)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<usize> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad class statistics row {rec:?}")))
        };
        out.push((parse(0)?, parse(1)?, rec.get(2).unwrap_or("").to_string()));
    }
    Ok(out)
}

fn stage_report(ctx: &mut Ctx) -> Result<()> {
    let ems = load_endmembers(ctx)?;
    let stats = read_class_stats(&ctx.require_text(Stage::Classify, artifact::CLASS_STATS)?)?;
    let mut report = String::from("class_id,top_mineral,weighted_score,pixel_count,percent\n");
    let mut legend = String::from("class_id,matched_mineral,weighted_score\n");
    for (id, _) in &ems {
        let top = top_match(&ctx.require_text(Stage::Match, &artifact::matches_file(*id))?)?;
        let (count, percent) = stats
            .iter()
            .find(|(c, _, _)| c == id)
            .map(|(_, n, p)| (*n, p.clone()))
            .unwrap_or((0, "0.000000".into()));
        report.push_str(&format!("{id},{},{},{count},{percent}\n", top.mineral, top.weighted));
        legend.push_str(&format!("{id},{},{}\n", top.mineral, top.weighted));
        ctx.say(format!("class {id}: {} ({}), {percent}% of pixels", top.mineral, top.weighted));
    }
    ctx.write_text(artifact::REPORT, &report)?;
    ctx.write_text(artifact::CLASS_LEGEND, &legend)?;

    let spectra = ctx.require_text(Stage::Endmembers, artifact::ENDMEMBERS)?;
    ctx.write_text(artifact::PLOT_SPECTRA, &spectra)?;

    let counts = ctx.require_cube(Stage::Ppi, artifact::PPI)?;
    let mut hist = std::collections::BTreeMap::new();
    for &c in counts.values().iter().filter(|&&c| c > 0.0) {
        *hist.entry(c as u64).or_insert(0usize) += 1;
    }
    let mut h = String::from("count,pixels\n");
    for (c, n) in hist {
        h.push_str(&format!("{c},{n}\n"));
    }
    ctx.write_text(artifact::PLOT_PPI_HISTOGRAM, &h)?;

    let model = mnf::model_from_csv(&ctx.require_text(Stage::Mnf, artifact::MNF_MODEL)?)?;
    ctx.write_text(artifact::PLOT_EIGENVALUES, &eigenvalue_csv(&model.eigenvalues))?;
    Ok(())
}

fn stage_synth(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let s = &cfg.synth;
    let lib = load_library(cfg)?;
    let wl = synthcube::linear_wavelengths(s.wavelength_range.0, s.wavelength_range.1, s.bands);
    let resampled = spectral_match::resample_library(&lib, &wl)?;
    let mut endmembers = Vec::with_capacity(s.endmembers.len());
    for name in &s.endmembers {
        let e = resampled.get(name).ok_or_else(|| Error::Config {
            key: "synth endmembers".into(),
            message: format!("{name:?} is not in the library"),
        })?;
        if e.usable().iter().any(|u| !u) {
            return Err(Error::Config {
                key: "synth wavelength range".into(),
                message: format!("extends beyond the library coverage of {name:?}"),
            });
        }
        endmembers.push(e.reflectance().to_vec());
    }
    let k = endmembers.len();
    let tile = (s.tile.0, if s.tile.1 == 0 { s.samples } else { s.tile.1 });
    let mut field = synthcube::tiled_abundance_field(s.lines, s.samples, k, tile, split_seed(cfg.seed, 1))?;
    let plan = synthcube::pure_pixel_plan(s.lines, s.samples, k, s.pure_per_endmember, split_seed(cfg.seed, 2))
        .map_err(|e| Error::Config {
            key: "synth pure per endmember".into(),
            message: e.to_string(),
        })?;
    synthcube::plant_pure_pixels(&mut field, &plan)?;
    let scenario = MixingScenario {
        names: s.endmembers.clone(),
        wavelengths: wl,
        noise_sigma: synthcube::relative_noise_sigma(&endmembers, s.noise_fraction),
        endmembers,
        abundances: field,
        pure_pixels: plan,
        seed: split_seed(cfg.seed, 3),
    };
    let (cube, truth) = synthcube::generate(&scenario)?;
    ctx.write_cube(artifact::SYNTH, &cube, DataType::F64)?;
    ctx.write_text(artifact::GROUND_TRUTH, &truth.to_csv())?;
    if cfg.library.is_none() {
        ctx.write_text(artifact::SYNTH_LIBRARY, &write_spectral_library(&lib)?)?;
    }
    ctx.say(format!(
        "synth: {} x {} x {} cube, {} endmembers, noise sigma {:.3e}",
        s.samples, s.lines, s.bands, k, scenario.noise_sigma
    ));
    Ok(())
}

/// Class means as written by the endmembers stage, by class id.
pub fn read_endmember_set_spectra(dir: &Path) -> Result<Vec<(usize, SpectrumRecord)>> {
    let p = dir.join(artifact::ENDMEMBERS);
    let lib = envi_io::read_spectral_library_file(&p)?;
    lib.entries()
        .iter()
        .map(|e| Ok((class_id_of(e.name())?, e.clone())))
        .collect()
}
