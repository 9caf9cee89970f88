//! Bad-band removal, ROI subsetting, radiance scaling, scene-derived
//! reflectance and per-band standardization.

use crate::cube::{SpectralCube, UnitsTag};
use crate::error::{Error, Result};

/// Scene-mean magnitudes below this make relative reflectance undefined.
pub const REFLECTANCE_EPSILON: f64 = 1e-12;

/// Rectangular spatial window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub first_line: usize,
    pub first_sample: usize,
    pub n_lines: usize,
    pub n_samples: usize,
}

impl Roi {
    pub fn new(first_line: usize, first_sample: usize, n_lines: usize, n_samples: usize) -> Self {
        Self {
            first_line,
            first_sample,
            n_lines,
            n_samples,
        }
    }

    pub fn whole(cube: &SpectralCube) -> Self {
        Self::new(0, 0, cube.lines(), cube.samples())
    }

    fn check(&self, cube: &SpectralCube) -> Result<()> {
        if self.n_lines == 0 || self.n_samples == 0 {
            return Err(Error::InvalidInput("ROI must be non-empty".into()));
        }
        if self.first_line + self.n_lines > cube.lines()
            || self.first_sample + self.n_samples > cube.samples()
        {
            return Err(Error::Range(format!(
                "ROI lines {}..{} samples {}..{} exceeds a {}x{} cube",
                self.first_line,
                self.first_line + self.n_lines,
                self.first_sample,
                self.first_sample + self.n_samples,
                cube.lines(),
                cube.samples()
            )));
        }
        Ok(())
    }
}

/// Bands to keep; at least one must be kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandMask {
    keep: Vec<bool>,
}

impl BandMask {
    pub fn new(keep: Vec<bool>) -> Result<Self> {
        if !keep.iter().any(|&k| k) {
            return Err(Error::InvalidInput("band mask keeps no bands".into()));
        }
        Ok(Self { keep })
    }

    pub fn all(bands: usize) -> Self {
        Self {
            keep: vec![true; bands],
        }
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn kept(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

pub fn remove_bad_bands(cube: &SpectralCube, mask: &BandMask) -> Result<SpectralCube> {
    if mask.keep.len() != cube.bands() {
        return Err(Error::SizeMismatch(format!(
            "band mask of length {} for {} bands",
            mask.keep.len(),
            cube.bands()
        )));
    }
    let kept: Vec<usize> = (0..cube.bands()).filter(|&b| mask.keep[b]).collect();
    let wavelengths = kept.iter().map(|&b| cube.wavelengths()[b]).collect();
    let mut values = Vec::with_capacity(kept.len() * cube.n_pixels());
    for &b in &kept {
        values.extend_from_slice(cube.band(b));
    }
    SpectralCube::new(
        cube.samples(),
        cube.lines(),
        kept.len(),
        wavelengths,
        values,
        cube.units(),
    )
}

pub fn subset_roi(cube: &SpectralCube, roi: &Roi) -> Result<SpectralCube> {
    roi.check(cube)?;
    let mut values = Vec::with_capacity(roi.n_lines * roi.n_samples * cube.bands());
    for b in 0..cube.bands() {
        let band = cube.band(b);
        for l in roi.first_line..roi.first_line + roi.n_lines {
            let start = l * cube.samples() + roi.first_sample;
            values.extend_from_slice(&band[start..start + roi.n_samples]);
        }
    }
    SpectralCube::new(
        roi.n_samples,
        roi.n_lines,
        cube.bands(),
        cube.wavelengths().to_vec(),
        values,
        cube.units(),
    )?
    .with_bad_band_mask(cube.bad_band_mask().to_vec())
}

/// Divide each band by its gain (L1 digital numbers to radiance units).
pub fn scale_radiance(cube: &SpectralCube, gains: &[f64]) -> Result<SpectralCube> {
    if cube.units() != UnitsTag::Radiance {
        return Err(Error::InvalidInput(format!(
            "radiance scaling needs a radiance cube, got {}",
            cube.units()
        )));
    }
    if gains.len() != cube.bands() {
        return Err(Error::SizeMismatch(format!(
            "{} gains for {} bands",
            gains.len(),
            cube.bands()
        )));
    }
    if let Some((i, g)) = gains.iter().enumerate().find(|(_, g)| !(**g > 0.0)) {
        return Err(Error::Range(format!("gain for band {} must be positive, got {g}", i + 1)));
    }
    divide_bands(cube, gains, UnitsTag::Radiance)
}

fn divide_bands(cube: &SpectralCube, divisors: &[f64], units: UnitsTag) -> Result<SpectralCube> {
    let mut values = Vec::with_capacity(cube.values().len());
    for (b, d) in divisors.iter().enumerate() {
        values.extend(cube.band(b).iter().map(|v| v / d));
    }
    SpectralCube::new(
        cube.samples(),
        cube.lines(),
        cube.bands(),
        cube.wavelengths().to_vec(),
        values,
        units,
    )?
    .with_bad_band_mask(cube.bad_band_mask().to_vec())
}

fn relative_reflectance(cube: &SpectralCube, reference: &[f64]) -> Result<SpectralCube> {
    if cube.units() != UnitsTag::Radiance {
        return Err(Error::InvalidInput(format!(
            "reflectance retrieval needs a radiance cube, got {}",
            cube.units()
        )));
    }
    if let Some((b, m)) = reference
        .iter()
        .enumerate()
        .find(|(_, m)| m.abs() < REFLECTANCE_EPSILON)
    {
        return Err(Error::Numerical(format!(
            "reference spectrum magnitude {m} below {REFLECTANCE_EPSILON} in band {}",
            b + 1
        )));
    }
    divide_bands(cube, reference, UnitsTag::Reflectance)
}

/// Internal Average Relative Reflectance: every pixel divided by the
/// scene-mean spectrum.
pub fn reflectance_iarr(cube: &SpectralCube) -> Result<SpectralCube> {
    relative_reflectance(cube, &cube.band_means())
}

/// Flat-field reflectance: every pixel divided by the mean spectrum of a
/// spectrally flat reference area.
pub fn reflectance_flat_field(cube: &SpectralCube, reference: &Roi) -> Result<SpectralCube> {
    let area = subset_roi(cube, reference)?;
    relative_reflectance(cube, &area.band_means())
}

/// Per-band statistics removed by [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandStats {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant bands.
    pub std: Vec<f64>,
}

/// Subtract each band's mean and divide by its (population) standard
/// deviation. Constant bands become 0 with a recorded std of 1.
pub fn standardize(cube: &SpectralCube) -> Result<(SpectralCube, BandStats)> {
    if cube.n_pixels() < 2 {
        return Err(Error::InvalidInput("standardization needs at least 2 pixels".into()));
    }
    let n = cube.n_pixels() as f64;
    let mut means = Vec::with_capacity(cube.bands());
    let mut stds = Vec::with_capacity(cube.bands());
    let mut values = Vec::with_capacity(cube.values().len());
    for b in 0..cube.bands() {
        let band = cube.band(b);
        let mean = band.iter().sum::<f64>() / n;
        let var = band.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut std = var.sqrt();
        if std <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) || std == 0.0 {
            std = 1.0;
            values.extend(std::iter::repeat_n(0.0, band.len()));
        } else {
            values.extend(band.iter().map(|v| (v - mean) / std));
        }
        means.push(mean);
        stds.push(std);
    }
    let out = SpectralCube::new(
        cube.samples(),
        cube.lines(),
        cube.bands(),
        cube.wavelengths().to_vec(),
        values,
        cube.units(),
    )?
    .with_bad_band_mask(cube.bad_band_mask().to_vec())?;
    Ok((out, BandStats { mean: means, std: stds }))
}

fn read_band_csv(text: &str, value_column: &str, bands: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.len() != 2
        || !headers[0].eq_ignore_ascii_case("band_index")
        || !headers[1].eq_ignore_ascii_case(value_column)
    {
        return Err(Error::Parse(format!(
            "expected header `band_index,{value_column}`, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut out: Vec<Option<f64>> = vec![None; bands];
    for record in rdr.records() {
        let record = record?;
        let idx: usize = record[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad band index {:?}", &record[0])))?;
        let val: f64 = record[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad {value_column} value {:?}", &record[1])))?;
        if idx == 0 || idx > bands {
            return Err(Error::Range(format!("band index {idx} outside 1..={bands}")));
        }
        if out[idx - 1].replace(val).is_some() {
            return Err(Error::InvalidInput(format!("band index {idx} listed twice")));
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::SizeMismatch(format!("band {} missing", i + 1))))
        .collect()
}

/// Parse a `band_index,keep` CSV (1-based indices, keep ∈ {0,1}).
pub fn read_band_mask_csv(text: &str, bands: usize) -> Result<BandMask> {
    let raw = read_band_csv(text, "keep", bands)?;
    let keep = raw
        .into_iter()
        .map(|v| match v {
            1.0 => Ok(true),
            0.0 => Ok(false),
            x => Err(Error::Parse(format!("keep must be 0 or 1, got {x}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    BandMask::new(keep)
}

/// Parse a `band_index,gain` CSV (1-based indices).
pub fn read_gains_csv(text: &str, bands: usize) -> Result<Vec<f64>> {
    read_band_csv(text, "gain", bands)
}
