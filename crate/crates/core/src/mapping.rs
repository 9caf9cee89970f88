//! Scene-wide mapping: SAM classification, matched filtering with MTMF
//! infeasibility, and class statistics.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::cube::{SpectralCube, UnitsTag};
use crate::error::{Error, Result};
use crate::numerics::{covariance, symmetric_eig, Matrix};
use crate::spectral_match::sam_angle;

pub const DEFAULT_MAX_ANGLE: f64 = 0.10;
/// Ridge on the background covariance, as a fraction of its mean diagonal.
pub const BACKGROUND_RIDGE: f64 = 1e-10;
/// Expected residual spread (in background sigmas) of a pure target pixel.
pub const TARGET_RESIDUAL_SIGMA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    pub lines: usize,
    pub samples: usize,
    pub n_classes: usize,
    /// 0 = unclassified, otherwise 1-based class id.
    pub classes: Vec<u32>,
    /// Angle to each class, `rule_angles[pixel * n_classes + class]`.
    pub rule_angles: Vec<f64>,
}

impl ClassMap {
    pub fn class_at(&self, line: usize, sample: usize) -> u32 {
        self.classes[line * self.samples + sample]
    }

    pub fn angles_at(&self, pixel: usize) -> &[f64] {
        &self.rule_angles[pixel * self.n_classes..(pixel + 1) * self.n_classes]
    }

    pub fn class_cube(&self) -> Result<SpectralCube> {
        SpectralCube::new(
            self.samples,
            self.lines,
            1,
            vec![1.0],
            self.classes.iter().map(|&c| c as f64).collect(),
            UnitsTag::Score,
        )
    }

    /// Rule image: one band of angles per class.
    pub fn rule_cube(&self) -> Result<SpectralCube> {
        SpectralCube::from_fn(
            self.samples,
            self.lines,
            self.n_classes,
            (1..=self.n_classes).map(|c| c as f64).collect(),
            UnitsTag::Score,
            |l, s, c| self.rule_angles[(l * self.samples + s) * self.n_classes + c],
        )
    }
}

/// Assign every pixel to the endmember at the smallest spectral angle, or to
/// 0 when that angle exceeds `max_angle`. Zero pixels get angle π/2 to all.
pub fn sam_classify(cube: &SpectralCube, endmembers: &[Vec<f64>], max_angle: f64) -> Result<ClassMap> {
    if endmembers.is_empty() {
        return Err(Error::InvalidInput("no endmembers to classify against".into()));
    }
    if let Some(e) = endmembers.iter().find(|e| e.len() != cube.bands()) {
        return Err(Error::SizeMismatch(format!(
            "endmember has {} bands, cube has {}",
            e.len(),
            cube.bands()
        )));
    }
    if endmembers.iter().any(|e| e.iter().all(|&v| v == 0.0)) {
        return Err(Error::InvalidInput("zero endmember spectrum".into()));
    }
    if !(max_angle >= 0.0) {
        return Err(Error::Range(format!("max_angle must be non-negative, got {max_angle}")));
    }
    let k = endmembers.len();
    let per_pixel: Vec<(u32, Vec<f64>)> = (0..cube.n_pixels())
        .into_par_iter()
        .map(|p| {
            let x = cube.spectrum_at(p);
            let zero = x.iter().all(|&v| v == 0.0);
            let angles: Vec<f64> = endmembers
                .iter()
                .map(|e| if zero { FRAC_PI_2 } else { sam_angle(&x, e).unwrap_or(FRAC_PI_2) })
                .collect();
            let mut best = 0;
            for j in 1..k {
                if angles[j] < angles[best] {
                    best = j;
                }
            }
            let class = if !zero && angles[best] <= max_angle { best as u32 + 1 } else { 0 };
            (class, angles)
        })
        .collect();
    let mut classes = Vec::with_capacity(per_pixel.len());
    let mut rule_angles = Vec::with_capacity(per_pixel.len() * k);
    for (c, a) in per_pixel {
        classes.push(c);
        rule_angles.extend(a);
    }
    Ok(ClassMap {
        lines: cube.lines(),
        samples: cube.samples(),
        n_classes: k,
        classes,
        rule_angles,
    })
}

/// Background statistics and whitening for matched filtering.
#[derive(Debug, Clone)]
pub struct MatchedFilter {
    mean: Vec<f64>,
    /// `Λ^{-1/2} Vᵀ` of the regularized background covariance.
    whiten: Matrix,
    /// Whitened target offset `W (t − μ)`.
    target_w: Vec<f64>,
    target_norm2: f64,
}

impl MatchedFilter {
    /// Fit on the scene itself (scene-adaptive background).
    pub fn fit(cube: &SpectralCube, target: &[f64]) -> Result<Self> {
        let b = cube.bands();
        if target.len() != b {
            return Err(Error::SizeMismatch(format!(
                "target has {} components, cube has {b}",
                target.len()
            )));
        }
        let (mean, cov) = covariance(&cube.to_pixel_major(), b)?;
        let trace = cov.trace();
        if !(trace > 0.0) {
            return Err(Error::Numerical("background covariance is zero".into()));
        }
        let eig = symmetric_eig(&cov.with_ridge(BACKGROUND_RIDGE * trace / b as f64))?;
        if let Some(v) = eig.values.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::Numerical(format!("background covariance singular (eigenvalue {v})")));
        }
        let mut whiten = eig.vectors.transpose();
        for (i, &ev) in eig.values.iter().enumerate() {
            let s = 1.0 / ev.sqrt();
            for j in 0..b {
                whiten[(i, j)] *= s;
            }
        }
        let offset: Vec<f64> = target.iter().zip(&mean).map(|(t, m)| t - m).collect();
        let target_w = whiten.mul_vec(&offset);
        let target_norm2: f64 = target_w.iter().map(|v| v * v).sum();
        if !(target_norm2 > 0.0) {
            return Err(Error::InvalidInput("target equals the scene mean".into()));
        }
        Ok(Self {
            mean,
            whiten,
            target_w,
            target_norm2,
        })
    }

    fn whitened(&self, x: &[f64]) -> Vec<f64> {
        let offset: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.whiten.mul_vec(&offset)
    }

    /// `(x−μ)ᵀΣ⁻¹(t−μ) / (t−μ)ᵀΣ⁻¹(t−μ)`
    pub fn score(&self, x: &[f64]) -> f64 {
        let z = self.whitened(x);
        z.iter().zip(&self.target_w).map(|(a, b)| a * b).sum::<f64>() / self.target_norm2
    }

    /// (MF score, infeasibility) for one pixel.
    pub fn score_mtmf(&self, x: &[f64]) -> (f64, f64) {
        let z = self.whitened(x);
        let b = z.len();
        let tn = self.target_norm2.sqrt();
        let alpha: f64 = z.iter().zip(&self.target_w).map(|(a, t)| a * t / tn).sum();
        let mf = alpha / tn;
        let resid2: f64 = z
            .iter()
            .zip(&self.target_w)
            .map(|(a, t)| {
                let r = a - alpha * t / tn;
                r * r
            })
            .sum();
        let f = mf.clamp(0.0, 1.0);
        let sigma = 1.0 + (TARGET_RESIDUAL_SIGMA - 1.0) * f;
        let infeasibility = resid2.sqrt() / (sigma * ((b - 1) as f64).sqrt());
        (mf, infeasibility)
    }
}

/// Matched-filter score image.
pub fn matched_filter(mnf_cube: &SpectralCube, target_mnf: &[f64]) -> Result<Vec<f64>> {
    let mf = MatchedFilter::fit(mnf_cube, target_mnf)?;
    Ok((0..mnf_cube.n_pixels())
        .into_par_iter()
        .map(|p| mf.score(&mnf_cube.spectrum_at(p)))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtmfResult {
    pub lines: usize,
    pub samples: usize,
    pub mf_score: Vec<f64>,
    pub infeasibility: Vec<f64>,
}

impl MtmfResult {
    /// Two-band (MF score, infeasibility) cube.
    pub fn to_cube(&self) -> Result<SpectralCube> {
        let mut values = self.mf_score.clone();
        values.extend_from_slice(&self.infeasibility);
        SpectralCube::new(self.samples, self.lines, 2, vec![1.0, 2.0], values, UnitsTag::Score)
    }
}

/// Mixture-tuned matched filtering.
///
/// In background-whitened space each pixel splits into a component along
/// the target direction and an orthogonal residual. The residual spread
/// expected of a feasible mixture shrinks linearly from 1 (background) to
/// [`TARGET_RESIDUAL_SIGMA`] (pure target) as the MF score goes 0 → 1;
/// infeasibility is the residual norm in units of that spread, per degree
/// of freedom.
pub fn mtmf(mnf_cube: &SpectralCube, target_mnf: &[f64]) -> Result<MtmfResult> {
    if mnf_cube.bands() < 2 {
        return Err(Error::InvalidInput("MTMF needs at least 2 components".into()));
    }
    let mf = MatchedFilter::fit(mnf_cube, target_mnf)?;
    let (mf_score, infeasibility): (Vec<f64>, Vec<f64>) = (0..mnf_cube.n_pixels())
        .into_par_iter()
        .map(|p| mf.score_mtmf(&mnf_cube.spectrum_at(p)))
        .unzip();
    Ok(MtmfResult {
        lines: mnf_cube.lines(),
        samples: mnf_cube.samples(),
        mf_score,
        infeasibility,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStat {
    pub class_id: u32,
    pub pixel_count: usize,
    pub percent: f64,
}

/// Pixel count and share of every class, including 0 (unclassified).
pub fn class_statistics(map: &ClassMap) -> Vec<ClassStat> {
    let mut counts = vec![0usize; map.n_classes + 1];
    for &c in &map.classes {
        counts[c as usize] += 1;
    }
    let total = map.classes.len() as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(id, n)| ClassStat {
            class_id: id as u32,
            pixel_count: n,
            percent: if total > 0.0 { 100.0 * n as f64 / total } else { 0.0 },
        })
        .collect()
}

pub fn class_statistics_csv(stats: &[ClassStat]) -> String {
    let mut s = String::from("class_id,pixel_count,percent\n");
    for st in stats {
        s.push_str(&format!("{},{},{:.6}\n", st.class_id, st.pixel_count, st.percent));
    }
    s
}
