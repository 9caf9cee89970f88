//! Spectral Analyst: rank library minerals against an unknown spectrum by a
//! weighted sum of three similarity scores, each in [0, 1]:
//!
//! * SAM: `1 − angle / (π/2)`, clamped.
//! * SFF: continuum-removed feature-depth fit, `scale · (1 − rms / mean_depth)`.
//! * Binary encoding: fraction of agreeing above-mean bits.
//!
//! All three are invariant to positive scaling of either spectrum.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use crate::envi_io::{SpectralLibrary, SpectrumRecord};
use crate::error::{Error, Result};

/// Fewest target bands a library spectrum must cover after resampling.
pub const MIN_OVERLAP_BANDS: usize = 4;

/// Reference depths whose mean is at or below this count as featureless.
const FLAT_DEPTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalystWeights {
    pub sam: f64,
    pub sff: f64,
    pub be: f64,
}

impl Default for AnalystWeights {
    fn default() -> Self {
        Self { sam: 1.0, sff: 1.0, be: 1.0 }
    }
}

impl AnalystWeights {
    pub fn new(sam: f64, sff: f64, be: f64) -> Result<Self> {
        let w = Self { sam, sff, be };
        if [sam, sff, be].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Range(format!("analyst weights must be non-negative, got {w:?}")));
        }
        if sam + sff + be <= 0.0 {
            return Err(Error::Range("at least one analyst weight must be positive".into()));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchScore {
    pub mineral_name: String,
    pub sam_score: f64,
    pub sff_score: f64,
    pub be_score: f64,
    pub weighted: f64,
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

fn interpolate(wl: &[f64], refl: &[f64], target: f64) -> Option<f64> {
    let (first, last) = (*wl.first()?, *wl.last()?);
    if target < first || target > last {
        return None;
    }
    let i = wl.partition_point(|&w| w < target);
    if wl[i] == target {
        return Some(refl[i]);
    }
    let (w0, w1) = (wl[i - 1], wl[i]);
    let t = (target - w0) / (w1 - w0);
    Some(refl[i - 1] + t * (refl[i] - refl[i - 1]))
}

/// Linearly interpolate every library spectrum at `targets`. Targets outside
/// a spectrum's range are flagged unusable for that spectrum.
pub fn resample_library(lib: &SpectralLibrary, targets: &[f64]) -> Result<SpectralLibrary> {
    let entries = lib
        .entries()
        .iter()
        .map(|e| resample_spectrum(e, targets))
        .collect::<Result<Vec<_>>>()?;
    SpectralLibrary::new(entries, lib.source_tag())
}

pub fn resample_spectrum(e: &SpectrumRecord, targets: &[f64]) -> Result<SpectrumRecord> {
    let mut refl = Vec::with_capacity(targets.len());
    let mut usable = Vec::with_capacity(targets.len());
    for &t in targets {
        match interpolate(e.wavelengths(), e.reflectance(), t) {
            Some(v) => {
                refl.push(v);
                usable.push(true);
            }
            None => {
                refl.push(0.0);
                usable.push(false);
            }
        }
    }
    let overlap = usable.iter().filter(|&&u| u).count();
    if overlap < MIN_OVERLAP_BANDS {
        return Err(Error::InvalidInput(format!(
            "spectrum {:?} overlaps only {overlap} target bands (need {MIN_OVERLAP_BANDS})",
            e.name()
        )));
    }
    Ok(SpectrumRecord::resampled(e.name().to_string(), targets.to_vec(), refl, usable))
}

// ---------------------------------------------------------------------------
// Spectral angle
// ---------------------------------------------------------------------------

/// Angle between two spectra viewed as vectors, in [0, π].
///
/// Computed as `2·atan2(‖â − b̂‖, ‖â + b̂‖)` on the unit vectors, which equals
/// the arc cosine of the normalized dot product but stays accurate for
/// nearly parallel spectra.
pub fn sam_angle(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::SizeMismatch(format!(
            "spectral angle needs equal lengths >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("spectral angle of a zero vector".into()));
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()))
}

pub fn sam_score(angle: f64) -> f64 {
    (1.0 - angle / FRAC_PI_2).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Continuum removal and feature fitting
// ---------------------------------------------------------------------------

/// Indices of the upper convex hull vertices of (λ, ρ), left to right.
/// Collinear points, up to rounding, are kept as vertices.
fn upper_hull(wl: &[f64], refl: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(wl.len());
    for i in 0..wl.len() {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let lhs = (wl[a] - wl[o]) * (refl[i] - refl[o]);
            let rhs = (refl[a] - refl[o]) * (wl[i] - wl[o]);
            if lhs - rhs > 1e-12 * (lhs.abs() + rhs.abs()) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Divide a spectrum by its upper convex hull.
pub fn continuum_remove(wavelengths: &[f64], reflectance: &[f64]) -> Result<Vec<f64>> {
    if wavelengths.len() != reflectance.len() || wavelengths.len() < 2 {
        return Err(Error::SizeMismatch(format!(
            "continuum removal needs matching lengths >= 2, got {} and {}",
            wavelengths.len(),
            reflectance.len()
        )));
    }
    if wavelengths.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "continuum removal needs strictly increasing wavelengths".into(),
        ));
    }
    if let Some(r) = reflectance.iter().find(|&&r| !(r > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "continuum removal needs positive reflectance, got {r}"
        )));
    }
    let hull = upper_hull(wavelengths, reflectance);
    let mut out = vec![0.0; reflectance.len()];
    for seg in hull.windows(2) {
        let (i0, i1) = (seg[0], seg[1]);
        out[i0] = 1.0;
        let slope = (reflectance[i1] - reflectance[i0]) / (wavelengths[i1] - wavelengths[i0]);
        for j in i0 + 1..i1 {
            let c = reflectance[i0] + slope * (wavelengths[j] - wavelengths[i0]);
            out[j] = (reflectance[j] / c).min(1.0);
        }
    }
    out[*hull.last().unwrap()] = 1.0;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SffFit {
    pub score: f64,
    pub scale: f64,
    pub rms: f64,
}

/// Least-squares fit of the unknown's continuum-removed band depths to a
/// scaled copy of the reference's.
pub fn sff_score(wavelengths: &[f64], unknown: &[f64], reference: &[f64]) -> Result<SffFit> {
    if unknown.len() != reference.len() {
        return Err(Error::SizeMismatch("SFF needs equal band counts".into()));
    }
    let cu = continuum_remove(wavelengths, unknown)?;
    let cr = continuum_remove(wavelengths, reference)?;
    sff_from_continuum_removed(&cu, &cr)
}

fn sff_from_continuum_removed(cu: &[f64], cr: &[f64]) -> Result<SffFit> {
    let du: Vec<f64> = cu.iter().map(|v| 1.0 - v).collect();
    let dr: Vec<f64> = cr.iter().map(|v| 1.0 - v).collect();
    let n = dr.len() as f64;
    let mean_depth = dr.iter().sum::<f64>() / n;
    let rr: f64 = dr.iter().map(|d| d * d).sum();
    if mean_depth <= FLAT_DEPTH || rr == 0.0 {
        return Err(Error::InvalidInput("reference has no absorption features".into()));
    }
    let ur: f64 = du.iter().zip(&dr).map(|(u, r)| u * r).sum();
    let scale = ur / rr;
    let rms = (du
        .iter()
        .zip(&dr)
        .map(|(u, r)| (u - scale * r).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let rms_norm = (rms / mean_depth).clamp(0.0, 1.0);
    let score = scale.clamp(0.0, 1.0) * (1.0 - rms_norm);
    Ok(SffFit { score, scale, rms })
}

// ---------------------------------------------------------------------------
// Binary encoding
// ---------------------------------------------------------------------------

/// `bit_i = ρ_i > mean(ρ)`.
pub fn binary_encode(spectrum: &[f64]) -> Vec<bool> {
    let mean = spectrum.iter().sum::<f64>() / spectrum.len() as f64;
    spectrum.iter().map(|&v| v > mean).collect()
}

/// Fraction of matching bits between two encodings.
pub fn be_score(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::SizeMismatch("binary encodings differ in length".into()));
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

/// Score one library entry against `unknown` over the bands the entry can use.
pub fn score_entry(
    unknown: &SpectrumRecord,
    entry: &SpectrumRecord,
    weights: &AnalystWeights,
) -> Result<MatchScore> {
    if entry.len() != unknown.len()
        || entry
            .wavelengths()
            .iter()
            .zip(unknown.wavelengths())
            .any(|(a, b)| (a - b).abs() > 1e-9)
    {
        return Err(Error::InvalidInput(format!(
            "library entry {:?} is not resampled to the unknown's wavelengths",
            entry.name()
        )));
    }
    let idx: Vec<usize> = (0..unknown.len())
        .filter(|&i| entry.usable()[i] && unknown.usable()[i])
        .collect();
    let pick = |v: &[f64]| -> Vec<f64> { idx.iter().map(|&i| v[i]).collect() };
    let wl = pick(unknown.wavelengths());
    let u = pick(unknown.reflectance());
    let r = pick(entry.reflectance());

    let sam = sam_score(sam_angle(&u, &r)?);
    let cu = continuum_remove(&wl, &u)?;
    let sff = match continuum_remove(&wl, &r) {
        Ok(cr) => match sff_from_continuum_removed(&cu, &cr) {
            Ok(fit) => fit.score,
            // Featureless reference: nothing to fit.
            Err(Error::InvalidInput(_)) => 0.0,
            Err(e) => return Err(e),
        },
        Err(_) => 0.0,
    };
    let be = be_score(&binary_encode(&u), &binary_encode(&r))?;
    Ok(MatchScore {
        mineral_name: entry.name().to_string(),
        sam_score: sam,
        sff_score: sff,
        be_score: be,
        weighted: weights.sam * sam + weights.sff * sff + weights.be * be,
    })
}

/// Score every entry of a resampled library; best first, ties by name.
pub fn rank_matches(
    unknown: &SpectrumRecord,
    lib: &SpectralLibrary,
    weights: &AnalystWeights,
) -> Result<Vec<MatchScore>> {
    if lib.is_empty() {
        return Err(Error::InvalidInput("cannot rank against an empty library".into()));
    }
    let mut scores = lib
        .entries()
        .iter()
        .map(|e| score_entry(unknown, e, weights))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| {
        b.weighted
            .partial_cmp(&a.weighted)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.mineral_name.cmp(&b.mineral_name))
    });
    Ok(scores)
}

/// `rank,mineral,sam,sff,be,weighted` CSV.
pub fn ranking_csv(scores: &[MatchScore]) -> String {
    let mut s = String::from("rank,mineral,sam,sff,be,weighted\n");
    for (i, m) in scores.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6}\n",
            i + 1,
            m.mineral_name,
            m.sam_score,
            m.sff_score,
            m.be_score,
            m.weighted
        ));
    }
    s
}
