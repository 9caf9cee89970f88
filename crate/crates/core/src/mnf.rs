//! Minimum Noise Fraction transform.
//!
//! Noise is estimated from horizontal neighbour differences. The fitted
//! transform first whitens the noise covariance and then rotates onto the
//! principal axes of the whitened data, so output components have unit noise
//! variance and are ordered by decreasing signal-to-noise ratio.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::cube::{SpectralCube, UnitsTag};
use crate::error::{Error, Result};
use crate::numerics::{covariance, symmetric_eig, Matrix, SymmetricMatrix};

/// Ridge added to the noise covariance diagonal, as a fraction of its mean
/// diagonal entry.
pub const NOISE_RIDGE: f64 = 1e-10;

/// Default number of retained components.
pub const DEFAULT_KEEP_K: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMethod {
    ShiftDifferenceHorizontal,
}

#[derive(Debug, Clone)]
pub struct NoiseEstimate {
    pub method: NoiseMethod,
    pub cov: SymmetricMatrix,
}

/// Covariance of `(x[l, s] - x[l, s + 1]) / sqrt(2)` over all horizontal
/// neighbour pairs.
pub fn estimate_noise_covariance(cube: &SpectralCube) -> Result<NoiseEstimate> {
    if cube.samples() < 2 {
        return Err(Error::InvalidInput(format!(
            "shift-difference noise needs at least 2 samples per line, got {}",
            cube.samples()
        )));
    }
    let b = cube.bands();
    let pm = cube.to_pixel_major();
    let n_pairs = cube.lines() * (cube.samples() - 1);
    let mut diffs = Vec::with_capacity(n_pairs * b);
    for l in 0..cube.lines() {
        for s in 0..cube.samples() - 1 {
            let p = (l * cube.samples() + s) * b;
            let q = p + b;
            diffs.extend((0..b).map(|k| (pm[p + k] - pm[q + k]) * std::f64::consts::FRAC_1_SQRT_2));
        }
    }
    let cov = if n_pairs >= 2 {
        covariance(&diffs, b)?.1
    } else {
        // A single pair: second moment about zero.
        let m = Matrix::from_rows(b, b, (0..b * b).map(|i| diffs[i / b] * diffs[i % b]).collect())?;
        SymmetricMatrix::new(m)?
    };
    Ok(NoiseEstimate {
        method: NoiseMethod::ShiftDifferenceHorizontal,
        cov,
    })
}

/// Fitted MNF transform.
#[derive(Debug, Clone)]
pub struct MnfModel {
    pub band_mean: Vec<f64>,
    pub noise_cov: SymmetricMatrix,
    pub data_cov: SymmetricMatrix,
    /// Whitened-data eigenvalues (signal-to-noise plus one), descending.
    pub eigenvalues: Vec<f64>,
    /// Rows are MNF components.
    pub forward: Matrix,
    pub inverse: Matrix,
    /// Units of the cube the model was fitted on; restored by the inverse.
    pub source_units: UnitsTag,
    /// Wavelengths of the fitted cube, restored by the inverse.
    pub wavelengths: Vec<f64>,
}

pub fn fit_mnf(cube: &SpectralCube, noise: &NoiseEstimate) -> Result<MnfModel> {
    let b = cube.bands();
    if noise.cov.n() != b {
        return Err(Error::SizeMismatch(format!(
            "noise covariance is {0}x{0}, cube has {b} bands",
            noise.cov.n()
        )));
    }
    let (band_mean, data_cov) = covariance(&cube.to_pixel_major(), b)?;

    let trace = noise.cov.trace();
    if !(trace > 0.0) {
        return Err(Error::Numerical(
            "noise covariance is zero; cannot whiten".into(),
        ));
    }
    let noise_reg = noise.cov.with_ridge(NOISE_RIDGE * trace / b as f64);
    let ne = symmetric_eig(&noise_reg)?;
    if let Some(bad) = ne.values.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Numerical(format!(
            "noise covariance singular after regularization (eigenvalue {bad})"
        )));
    }

    // whiten = diag(n^-1/2) Uᵀ, unwhiten = U diag(n^1/2)
    let mut whiten = ne.vectors.transpose();
    let mut unwhiten = ne.vectors.clone();
    for (i, &nv) in ne.values.iter().enumerate() {
        let (inv_sqrt, sqrt) = (1.0 / nv.sqrt(), nv.sqrt());
        for j in 0..b {
            whiten[(i, j)] *= inv_sqrt;
            unwhiten[(j, i)] *= sqrt;
        }
    }

    let wd = whiten.matmul(data_cov.matrix()).matmul(&whiten.transpose());
    let wd = symmetrize(wd);
    let de = symmetric_eig(&SymmetricMatrix::new(wd)?)?;

    let forward = de.vectors.transpose().matmul(&whiten);
    let inverse = unwhiten.matmul(&de.vectors);

    Ok(MnfModel {
        band_mean,
        noise_cov: noise.cov.clone(),
        data_cov,
        eigenvalues: de.values,
        forward,
        inverse,
        source_units: cube.units(),
        wavelengths: cube.wavelengths().to_vec(),
    })
}

fn symmetrize(mut m: Matrix) -> Matrix {
    let n = m.rows();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    m
}

impl MnfModel {
    pub fn dim(&self) -> usize {
        self.band_mean.len()
    }
}

/// Apply a dense matrix to every pixel of a cube, with an optional offset
/// subtracted before and added after.
fn apply_per_pixel(
    cube: &SpectralCube,
    matrix: &Matrix,
    pre_offset: Option<&[f64]>,
    post_offset: Option<&[f64]>,
    keep: usize,
    wavelengths: Vec<f64>,
    units: UnitsTag,
) -> Result<SpectralCube> {
    let b_in = cube.bands();
    let b_out = matrix.rows();
    let pm = cube.to_pixel_major();
    let out_pm: Vec<Vec<f64>> = pm
        .par_chunks(b_in)
        .map(|px| {
            let mut x: Vec<f64> = match pre_offset {
                Some(o) => px.iter().zip(o).map(|(v, m)| v - m).collect(),
                None => px.to_vec(),
            };
            x[keep..].iter_mut().for_each(|v| *v = 0.0);
            let mut y = matrix.mul_vec(&x);
            if let Some(o) = post_offset {
                y.iter_mut().zip(o).for_each(|(v, m)| *v += m);
            }
            y
        })
        .collect();
    debug_assert!(out_pm.iter().all(|y| y.len() == b_out));
    SpectralCube::from_pixels(cube.samples(), cube.lines(), wavelengths, &out_pm, units)
}

/// Project every pixel onto the MNF components: `y = forward · (x − mean)`.
pub fn forward_mnf(model: &MnfModel, cube: &SpectralCube) -> Result<SpectralCube> {
    if cube.bands() != model.dim() {
        return Err(Error::SizeMismatch(format!(
            "cube has {} bands, MNF model expects {}",
            cube.bands(),
            model.dim()
        )));
    }
    let comps: Vec<f64> = (1..=model.dim()).map(|i| i as f64).collect();
    apply_per_pixel(
        cube,
        &model.forward,
        Some(&model.band_mean),
        None,
        model.dim(),
        comps,
        UnitsTag::MnfComponent,
    )
}

/// Zero components beyond `keep_k` and map back: `x̂ = inverse · y + mean`.
pub fn inverse_mnf(model: &MnfModel, mnf_cube: &SpectralCube, keep_k: usize) -> Result<SpectralCube> {
    if mnf_cube.bands() != model.dim() {
        return Err(Error::SizeMismatch(format!(
            "MNF cube has {} bands, model expects {}",
            mnf_cube.bands(),
            model.dim()
        )));
    }
    if keep_k == 0 || keep_k > model.dim() {
        return Err(Error::Range(format!(
            "keep_k must be in 1..={}, got {keep_k}",
            model.dim()
        )));
    }
    apply_per_pixel(
        mnf_cube,
        &model.inverse,
        None,
        Some(&model.band_mean),
        keep_k,
        model.wavelengths.clone(),
        model.source_units,
    )
}

/// Keep only the first `k` bands of a cube.
pub fn leading_components(cube: &SpectralCube, k: usize) -> Result<SpectralCube> {
    if k == 0 || k > cube.bands() {
        return Err(Error::Range(format!(
            "component count must be in 1..={}, got {k}",
            cube.bands()
        )));
    }
    let n = cube.n_pixels();
    SpectralCube::new(
        cube.samples(),
        cube.lines(),
        k,
        cube.wavelengths()[..k].to_vec(),
        cube.values()[..k * n].to_vec(),
        cube.units(),
    )
}

// ---------------------------------------------------------------------------
// CSV bundle
// ---------------------------------------------------------------------------

/// Serialize as `section,index,values...` rows.
pub fn model_to_csv(model: &MnfModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "units,0,{}", model.source_units);
    let row = |s: &mut String, name: &str, idx: usize, vals: &[f64]| {
        let _ = write!(s, "{name},{idx}");
        for v in vals {
            let _ = write!(s, ",{v:e}");
        }
        s.push('\n');
    };
    row(&mut s, "wavelength", 0, &model.wavelengths);
    row(&mut s, "mean", 0, &model.band_mean);
    row(&mut s, "eigenvalues", 0, &model.eigenvalues);
    let b = model.dim();
    for (name, m) in [
        ("forward", &model.forward),
        ("inverse", &model.inverse),
        ("noise_cov", model.noise_cov.matrix()),
        ("data_cov", model.data_cov.matrix()),
    ] {
        for r in 0..b {
            row(&mut s, name, r, m.row(r));
        }
    }
    s
}

pub fn model_from_csv(text: &str) -> Result<MnfModel> {
    let mut units = None;
    let mut vectors: std::collections::HashMap<String, Vec<f64>> = Default::default();
    let mut mats: std::collections::HashMap<String, Vec<(usize, Vec<f64>)>> = Default::default();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let name = fields.next().unwrap_or_default().trim().to_string();
        let idx: usize = fields
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("MNF bundle line {}: bad index", lineno + 1)))?;
        if name == "units" {
            units = Some(fields.next().unwrap_or_default().parse::<UnitsTag>()?);
            continue;
        }
        let vals = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("MNF bundle line {}: bad number {f:?}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        match name.as_str() {
            "wavelength" | "mean" | "eigenvalues" => {
                vectors.insert(name, vals);
            }
            "forward" | "inverse" | "noise_cov" | "data_cov" => {
                mats.entry(name).or_default().push((idx, vals));
            }
            other => return Err(Error::Parse(format!("unknown MNF bundle section {other:?}"))),
        }
    }
    let take_vec = |v: &mut std::collections::HashMap<String, Vec<f64>>, k: &str| {
        v.remove(k)
            .ok_or_else(|| Error::Parse(format!("MNF bundle missing `{k}`")))
    };
    let band_mean = take_vec(&mut vectors, "mean")?;
    let eigenvalues = take_vec(&mut vectors, "eigenvalues")?;
    let wavelengths = take_vec(&mut vectors, "wavelength")?;
    let b = band_mean.len();
    let mut take_mat = |k: &str| -> Result<Matrix> {
        let mut rows = mats
            .remove(k)
            .ok_or_else(|| Error::Parse(format!("MNF bundle missing `{k}`")))?;
        rows.sort_by_key(|(i, _)| *i);
        if rows.len() != b || rows.iter().enumerate().any(|(i, (j, r))| i != *j || r.len() != b) {
            return Err(Error::SizeMismatch(format!("MNF bundle `{k}` is not {b}x{b}")));
        }
        Matrix::from_rows(b, b, rows.into_iter().flat_map(|(_, r)| r).collect())
    };
    let forward = take_mat("forward")?;
    let inverse = take_mat("inverse")?;
    let noise_cov = SymmetricMatrix::new(take_mat("noise_cov")?)?;
    let data_cov = SymmetricMatrix::new(take_mat("data_cov")?)?;
    if eigenvalues.len() != b || wavelengths.len() != b {
        return Err(Error::SizeMismatch("MNF bundle vector lengths disagree".into()));
    }
    Ok(MnfModel {
        band_mean,
        noise_cov,
        data_cov,
        eigenvalues,
        forward,
        inverse,
        source_units: units.ok_or_else(|| Error::Parse("MNF bundle missing `units`".into()))?,
        wavelengths,
    })
}
