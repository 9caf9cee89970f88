//! The in-memory hyperspectral cube.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// What the values of a cube represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitsTag {
    Radiance,
    Reflectance,
    MnfComponent,
    Score,
}

impl UnitsTag {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitsTag::Radiance => "radiance",
            UnitsTag::Reflectance => "reflectance",
            UnitsTag::MnfComponent => "mnf_component",
            UnitsTag::Score => "score",
        }
    }
}

impl fmt::Display for UnitsTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnitsTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "radiance" => Ok(UnitsTag::Radiance),
            "reflectance" => Ok(UnitsTag::Reflectance),
            "mnf_component" => Ok(UnitsTag::MnfComponent),
            "score" => Ok(UnitsTag::Score),
            other => Err(Error::Parse(format!("unknown units tag {other:?}"))),
        }
    }
}

/// A samples × lines × bands grid of finite reals.
///
/// Values are stored band-sequentially over a (line, sample) raster:
/// `values[band * lines * samples + line * samples + sample]`. Every
/// algorithm in the crate sees this one layout; file interleave is handled
/// by [`crate::envi_io`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    samples: usize,
    lines: usize,
    bands: usize,
    wavelengths: Vec<f64>,
    values: Vec<f64>,
    bad_band_mask: Vec<bool>,
    units: UnitsTag,
}

impl SpectralCube {
    /// Build a cube from band-sequential values. All bands start usable.
    pub fn new(
        samples: usize,
        lines: usize,
        bands: usize,
        wavelengths: Vec<f64>,
        values: Vec<f64>,
        units: UnitsTag,
    ) -> Result<Self> {
        if samples == 0 || lines == 0 || bands == 0 {
            return Err(Error::InvalidInput(format!(
                "cube dimensions must be positive, got {samples}x{lines}x{bands}"
            )));
        }
        if wavelengths.len() != bands {
            return Err(Error::SizeMismatch(format!(
                "{} wavelengths for {bands} bands",
                wavelengths.len()
            )));
        }
        let n = samples * lines * bands;
        if values.len() != n {
            return Err(Error::SizeMismatch(format!(
                "{} values for a {samples}x{lines}x{bands} cube",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {} at flat index {i}",
                values[i]
            )));
        }
        Ok(Self {
            samples,
            lines,
            bands,
            wavelengths,
            values,
            bad_band_mask: vec![true; bands],
            units,
        })
    }

    /// Build a cube from a function of (line, sample, band).
    pub fn from_fn(
        samples: usize,
        lines: usize,
        bands: usize,
        wavelengths: Vec<f64>,
        units: UnitsTag,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(samples * lines * bands);
        for b in 0..bands {
            for l in 0..lines {
                for s in 0..samples {
                    values.push(f(l, s, b));
                }
            }
        }
        Self::new(samples, lines, bands, wavelengths, values, units)
    }

    /// Build a cube from pixel spectra in raster order.
    pub fn from_pixels(
        samples: usize,
        lines: usize,
        wavelengths: Vec<f64>,
        pixels: &[Vec<f64>],
        units: UnitsTag,
    ) -> Result<Self> {
        let bands = wavelengths.len();
        if pixels.len() != samples * lines {
            return Err(Error::SizeMismatch(format!(
                "{} pixels for a {samples}x{lines} raster",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| p.len() != bands) {
            return Err(Error::SizeMismatch(format!(
                "pixel spectrum of length {} for {bands} bands",
                p.len()
            )));
        }
        let npix = samples * lines;
        let mut values = vec![0.0; npix * bands];
        for (p, spectrum) in pixels.iter().enumerate() {
            for (b, v) in spectrum.iter().enumerate() {
                values[b * npix + p] = *v;
            }
        }
        Self::new(samples, lines, bands, wavelengths, values, units)
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn n_pixels(&self) -> usize {
        self.samples * self.lines
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn bad_band_mask(&self) -> &[bool] {
        &self.bad_band_mask
    }

    pub fn units(&self) -> UnitsTag {
        self.units
    }

    /// All values, band-sequential.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_units(mut self, units: UnitsTag) -> Self {
        self.units = units;
        self
    }

    pub fn with_bad_band_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.bands {
            return Err(Error::SizeMismatch(format!(
                "bad-band mask of length {} for {} bands",
                mask.len(),
                self.bands
            )));
        }
        self.bad_band_mask = mask;
        Ok(self)
    }

    #[inline]
    pub fn index(&self, line: usize, sample: usize, band: usize) -> usize {
        band * self.lines * self.samples + line * self.samples + sample
    }

    #[inline]
    pub fn get(&self, line: usize, sample: usize, band: usize) -> f64 {
        self.values[self.index(line, sample, band)]
    }

    /// One band as a raster-ordered slice.
    pub fn band(&self, band: usize) -> &[f64] {
        let n = self.n_pixels();
        &self.values[band * n..(band + 1) * n]
    }

    /// Spectrum of the pixel at raster position `pixel = line * samples + sample`.
    pub fn spectrum_at(&self, pixel: usize) -> Vec<f64> {
        let n = self.n_pixels();
        (0..self.bands).map(|b| self.values[b * n + pixel]).collect()
    }

    pub fn pixel(&self, line: usize, sample: usize) -> Vec<f64> {
        self.spectrum_at(line * self.samples + sample)
    }

    /// Pixel-major copy of the data: `out[p * bands + b]`.
    pub fn to_pixel_major(&self) -> Vec<f64> {
        let n = self.n_pixels();
        let mut out = vec![0.0; n * self.bands];
        for b in 0..self.bands {
            let band = self.band(b);
            for (p, v) in band.iter().enumerate() {
                out[p * self.bands + b] = *v;
            }
        }
        out
    }

    /// Per-band mean over all pixels, accumulated in raster order.
    pub fn band_means(&self) -> Vec<f64> {
        let n = self.n_pixels() as f64;
        (0..self.bands)
            .map(|b| self.band(b).iter().sum::<f64>() / n)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let r = SpectralCube::new(1, 1, 2, vec![1.0, 2.0], vec![1.0, f64::NAN], UnitsTag::Radiance);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_zero_dimension() {
        assert!(SpectralCube::new(0, 1, 1, vec![1.0], vec![], UnitsTag::Radiance).is_err());
    }

    #[test]
    fn layout_is_band_sequential() {
        let c = SpectralCube::from_fn(3, 2, 2, vec![1.0, 2.0], UnitsTag::Score, |l, s, b| {
            (100 * b + 10 * l + s) as f64
        })
        .unwrap();
        assert_eq!(c.get(1, 2, 1), 112.0);
        assert_eq!(c.values()[c.index(1, 2, 1)], 112.0);
        assert_eq!(c.pixel(1, 0), vec![10.0, 110.0]);
        let pm = c.to_pixel_major();
        assert_eq!(&pm[2 * 5..2 * 5 + 2], &[12.0, 112.0]);
    }

    #[test]
    fn from_pixels_matches_from_fn() {
        let a = SpectralCube::from_fn(2, 2, 3, vec![1.0, 2.0, 3.0], UnitsTag::Radiance, |l, s, b| {
            (l * 7 + s * 3 + b) as f64
        })
        .unwrap();
        let pixels: Vec<Vec<f64>> = (0..4).map(|p| a.spectrum_at(p)).collect();
        let b = SpectralCube::from_pixels(2, 2, vec![1.0, 2.0, 3.0], &pixels, UnitsTag::Radiance)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn units_tag_parses() {
        for t in [
            UnitsTag::Radiance,
            UnitsTag::Reflectance,
            UnitsTag::MnfComponent,
            UnitsTag::Score,
        ] {
            assert_eq!(t.as_str().parse::<UnitsTag>().unwrap(), t);
        }
    }
}
