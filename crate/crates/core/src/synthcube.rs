//! Synthetic cubes from a linear mixing model, with ground truth.

use crate::cube::{SpectralCube, UnitsTag};
use crate::envi_io::{SpectralLibrary, SpectrumRecord};
use crate::error::{Error, Result};
use crate::numerics::{split_seed, RandomSource};

const ABUNDANCE_SUM_TOL: f64 = 1e-12;

/// Per-pixel abundance vectors, raster order, `k` values per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceField {
    pub lines: usize,
    pub samples: usize,
    pub k: usize,
    pub values: Vec<f64>,
}

impl AbundanceField {
    pub fn at(&self, pixel: usize) -> &[f64] {
        &self.values[pixel * self.k..(pixel + 1) * self.k]
    }

    fn set(&mut self, pixel: usize, a: &[f64]) {
        self.values[pixel * self.k..(pixel + 1) * self.k].copy_from_slice(a);
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.values.len() != self.lines * self.samples * self.k {
            return Err(Error::SizeMismatch(format!(
                "abundance field holds {} values, expected {}x{}x{}",
                self.values.len(),
                self.lines,
                self.samples,
                self.k
            )));
        }
        for p in 0..self.lines * self.samples {
            let a = self.at(p);
            if a.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::InvalidInput(format!("negative abundance at pixel {p}")));
            }
            let sum: f64 = a.iter().sum();
            if (sum - 1.0).abs() > ABUNDANCE_SUM_TOL {
                return Err(Error::InvalidInput(format!("abundances at pixel {p} sum to {sum}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PurePixel {
    pub line: usize,
    pub sample: usize,
    /// 0-based endmember index.
    pub endmember: usize,
}

#[derive(Debug, Clone)]
pub struct MixingScenario {
    pub names: Vec<String>,
    pub wavelengths: Vec<f64>,
    pub endmembers: Vec<Vec<f64>>,
    pub abundances: AbundanceField,
    pub noise_sigma: f64,
    pub pure_pixels: Vec<PurePixel>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub names: Vec<String>,
    pub abundances: AbundanceField,
    pub pure_pixels: Vec<PurePixel>,
}

impl GroundTruth {
    /// `line,sample,<name>...,pure` rows; `pure` holds the planted endmember
    /// name or is empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("line,sample");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push_str(",pure\n");
        let mut planted = vec![None; self.abundances.lines * self.abundances.samples];
        for p in &self.pure_pixels {
            planted[p.line * self.abundances.samples + p.sample] = Some(p.endmember);
        }
        for l in 0..self.abundances.lines {
            for smp in 0..self.abundances.samples {
                let p = l * self.abundances.samples + smp;
                s.push_str(&format!("{l},{smp}"));
                for a in self.abundances.at(p) {
                    s.push_str(&format!(",{a:.15}"));
                }
                s.push(',');
                if let Some(e) = planted[p] {
                    s.push_str(&self.names[e]);
                }
                s.push('\n');
            }
        }
        s
    }
}

fn flat_dirichlet(rs: &mut RandomSource, k: usize) -> Vec<f64> {
    let mut a: Vec<f64> = (0..k).map(|_| -(1.0 - rs.next_uniform()).ln()).collect();
    let sum: f64 = a.iter().sum();
    if !(sum > 0.0) {
        return vec![1.0 / k as f64; k];
    }
    for v in &mut a {
        *v /= sum;
    }
    a
}

/// Independent flat-Dirichlet abundances per pixel.
pub fn random_abundance_field(lines: usize, samples: usize, k: usize, seed: u64) -> Result<AbundanceField> {
    tiled_abundance_field(lines, samples, k, (1, 1), seed)
}

/// Flat-Dirichlet abundances drawn once per `tile = (lines, samples)`
/// rectangle, so that neighbouring pixels share a mixture. Every pixel's
/// abundance vector is still flat-Dirichlet distributed.
pub fn tiled_abundance_field(
    lines: usize,
    samples: usize,
    k: usize,
    tile: (usize, usize),
    seed: u64,
) -> Result<AbundanceField> {
    if k == 0 {
        return Err(Error::Range("need at least one endmember".into()));
    }
    let (tl, ts) = tile;
    if tl == 0 || ts == 0 {
        return Err(Error::Range(format!("tile must be at least 1x1, got {tl}x{ts}")));
    }
    let mut rs = RandomSource::new(seed);
    let (nl, ns) = (lines.div_ceil(tl), samples.div_ceil(ts));
    let tiles: Vec<Vec<f64>> = (0..nl * ns).map(|_| flat_dirichlet(&mut rs, k)).collect();
    let mut values = Vec::with_capacity(lines * samples * k);
    for l in 0..lines {
        for s in 0..samples {
            values.extend_from_slice(&tiles[(l / tl) * ns + s / ts]);
        }
    }
    Ok(AbundanceField { lines, samples, k, values })
}

/// Choose distinct locations for `per_endmember` pure pixels of each of `k`
/// endmembers. Each endmember's pixels form one horizontal run.
pub fn pure_pixel_plan(
    lines: usize,
    samples: usize,
    k: usize,
    per_endmember: usize,
    seed: u64,
) -> Result<Vec<PurePixel>> {
    if per_endmember == 0 {
        return Ok(Vec::new());
    }
    if per_endmember > samples || k > lines {
        return Err(Error::Range(format!(
            "cannot place {k} runs of {per_endmember} pure pixels in {lines}x{samples}"
        )));
    }
    let mut rs = RandomSource::new(split_seed(seed, 0x70_75_72_65));
    let mut free_lines: Vec<usize> = (0..lines).collect();
    let mut plan = Vec::with_capacity(k * per_endmember);
    for e in 0..k {
        let line = free_lines.swap_remove(rs.next_index(free_lines.len()));
        let start = rs.next_index(samples - per_endmember + 1);
        plan.extend((start..start + per_endmember).map(|sample| PurePixel { line, sample, endmember: e }));
    }
    Ok(plan)
}

/// Overwrite the planned pixels with one-hot abundances.
pub fn plant_pure_pixels(field: &mut AbundanceField, plan: &[PurePixel]) -> Result<()> {
    for p in plan {
        if p.line >= field.lines || p.sample >= field.samples || p.endmember >= field.k {
            return Err(Error::Range(format!(
                "pure pixel ({}, {}) of endmember {} outside the field",
                p.line, p.sample, p.endmember
            )));
        }
        let mut a = vec![0.0; field.k];
        a[p.endmember] = 1.0;
        field.set(p.line * field.samples + p.sample, &a);
    }
    Ok(())
}

/// `fraction` of the mean endmember value, the noise level used for
/// "σ = x% of mean signal" scenarios.
pub fn relative_noise_sigma(endmembers: &[Vec<f64>], fraction: f64) -> f64 {
    let n: usize = endmembers.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    fraction * endmembers.iter().flatten().sum::<f64>() / n as f64
}

/// Render the scenario: `Σ aᵢ·eᵢ + σ·g` per pixel and band.
pub fn generate(scenario: &MixingScenario) -> Result<(SpectralCube, GroundTruth)> {
    let k = scenario.endmembers.len();
    let b = scenario.wavelengths.len();
    if k == 0 || k != scenario.abundances.k || k != scenario.names.len() {
        return Err(Error::SizeMismatch(format!(
            "{k} endmembers, {} names, abundance vectors of length {}",
            scenario.names.len(),
            scenario.abundances.k
        )));
    }
    if let Some(e) = scenario.endmembers.iter().find(|e| e.len() != b) {
        return Err(Error::SizeMismatch(format!("endmember has {} bands, expected {b}", e.len())));
    }
    if !(scenario.noise_sigma >= 0.0) || !scenario.noise_sigma.is_finite() {
        return Err(Error::Range(format!("noise sigma must be non-negative, got {}", scenario.noise_sigma)));
    }
    scenario.abundances.validate()?;
    for p in &scenario.pure_pixels {
        let a = scenario.abundances.at(p.line * scenario.abundances.samples + p.sample);
        if a[p.endmember] != 1.0 {
            return Err(Error::InvalidInput(format!(
                "pure pixel ({}, {}) does not have one-hot abundance",
                p.line, p.sample
            )));
        }
    }

    let (lines, samples) = (scenario.abundances.lines, scenario.abundances.samples);
    let mut rs = RandomSource::new(scenario.seed);
    let mut pixels = Vec::with_capacity(lines * samples);
    for p in 0..lines * samples {
        let a = scenario.abundances.at(p);
        let mut x = vec![0.0; b];
        for (ai, e) in a.iter().zip(&scenario.endmembers) {
            if *ai != 0.0 {
                for (xv, ev) in x.iter_mut().zip(e) {
                    *xv += ai * ev;
                }
            }
        }
        if scenario.noise_sigma > 0.0 {
            for xv in &mut x {
                *xv += scenario.noise_sigma * rs.next_gaussian();
            }
        }
        pixels.push(x);
    }
    let cube = SpectralCube::from_pixels(samples, lines, scenario.wavelengths.clone(), &pixels, UnitsTag::Reflectance)?;
    Ok((
        cube,
        GroundTruth {
            names: scenario.names.clone(),
            abundances: scenario.abundances.clone(),
            pure_pixels: scenario.pure_pixels.clone(),
        },
    ))
}

struct Mineral {
    name: &'static str,
    level: f64,
    slope: f64,
    /// (centre nm, width nm, depth)
    features: &'static [(f64, f64, f64)],
}

const MINERALS: [Mineral; 30] = [
    Mineral { name: "Kaolinite", level: 0.80, slope: 0.05, features: &[(1395.0, 18.0, 0.22), (1414.0, 15.0, 0.18), (2165.0, 25.0, 0.20), (2206.0, 20.0, 0.35)] },
    Mineral { name: "Alunite", level: 0.75, slope: 0.02, features: &[(1430.0, 25.0, 0.30), (1762.0, 20.0, 0.15), (2170.0, 30.0, 0.30), (2320.0, 40.0, 0.15)] },
    Mineral { name: "Calcite", level: 0.85, slope: -0.05, features: &[(1870.0, 60.0, 0.10), (1995.0, 40.0, 0.12), (2340.0, 35.0, 0.40)] },
    Mineral { name: "Dolomite", level: 0.80, slope: -0.03, features: &[(1860.0, 60.0, 0.10), (2320.0, 35.0, 0.40)] },
    Mineral { name: "Muscovite", level: 0.70, slope: 0.0, features: &[(1410.0, 20.0, 0.25), (2200.0, 25.0, 0.35), (2350.0, 25.0, 0.20), (2440.0, 25.0, 0.15)] },
    Mineral { name: "Montmorillonite", level: 0.60, slope: 0.05, features: &[(1410.0, 30.0, 0.30), (1910.0, 40.0, 0.45), (2210.0, 25.0, 0.20)] },
    Mineral { name: "Illite", level: 0.55, slope: 0.05, features: &[(1410.0, 25.0, 0.20), (1910.0, 35.0, 0.25), (2205.0, 20.0, 0.25), (2345.0, 30.0, 0.15)] },
    Mineral { name: "Hematite", level: 0.20, slope: 0.40, features: &[(450.0, 60.0, 0.60), (860.0, 80.0, 0.35)] },
    Mineral { name: "Goethite", level: 0.25, slope: 0.35, features: &[(480.0, 60.0, 0.50), (650.0, 40.0, 0.20), (920.0, 90.0, 0.40)] },
    Mineral { name: "Jarosite", level: 0.40, slope: 0.20, features: &[(430.0, 30.0, 0.40), (910.0, 70.0, 0.30), (1470.0, 30.0, 0.25), (2265.0, 25.0, 0.35)] },
    Mineral { name: "Chlorite", level: 0.45, slope: 0.05, features: &[(1000.0, 150.0, 0.15), (2250.0, 30.0, 0.25), (2330.0, 30.0, 0.35)] },
    Mineral { name: "Epidote", level: 0.45, slope: 0.0, features: &[(1050.0, 150.0, 0.20), (1550.0, 40.0, 0.15), (2255.0, 25.0, 0.30), (2340.0, 30.0, 0.35)] },
    Mineral { name: "Talc", level: 0.85, slope: 0.0, features: &[(1390.0, 15.0, 0.30), (2080.0, 30.0, 0.15), (2310.0, 20.0, 0.40)] },
    Mineral { name: "Gypsum", level: 0.90, slope: -0.10, features: &[(1450.0, 40.0, 0.40), (1750.0, 20.0, 0.15), (1940.0, 50.0, 0.50), (2215.0, 30.0, 0.12)] },
    Mineral { name: "Buddingtonite", level: 0.60, slope: 0.0, features: &[(1570.0, 30.0, 0.15), (2020.0, 30.0, 0.30), (2120.0, 30.0, 0.25)] },
    Mineral { name: "Pyrophyllite", level: 0.85, slope: 0.0, features: &[(1395.0, 12.0, 0.35), (2165.0, 20.0, 0.40)] },
    Mineral { name: "Dickite", level: 0.80, slope: 0.05, features: &[(1380.0, 15.0, 0.25), (2180.0, 20.0, 0.30), (2207.0, 18.0, 0.35)] },
    Mineral { name: "Nontronite", level: 0.45, slope: 0.10, features: &[(650.0, 60.0, 0.20), (950.0, 100.0, 0.30), (1430.0, 30.0, 0.25), (2290.0, 25.0, 0.35)] },
    Mineral { name: "Zircon", level: 0.65, slope: 0.05, features: &[(655.0, 15.0, 0.20), (1120.0, 30.0, 0.25), (1520.0, 40.0, 0.15)] },
    Mineral { name: "Staurolite", level: 0.30, slope: 0.20, features: &[(800.0, 100.0, 0.30), (1120.0, 120.0, 0.30), (1410.0, 25.0, 0.10)] },
    Mineral { name: "Ilmenite", level: 0.08, slope: 0.04, features: &[(700.0, 200.0, 0.20), (1050.0, 250.0, 0.30)] },
    Mineral { name: "Magnetite", level: 0.05, slope: 0.02, features: &[(1000.0, 300.0, 0.25)] },
    Mineral { name: "Opal", level: 0.70, slope: -0.05, features: &[(1410.0, 40.0, 0.20), (1910.0, 50.0, 0.30), (2250.0, 50.0, 0.15)] },
    Mineral { name: "Corundum", level: 0.90, slope: 0.0, features: &[(420.0, 30.0, 0.10), (694.0, 10.0, 0.15)] },
    Mineral { name: "Diaspore", level: 0.75, slope: 0.0, features: &[(1800.0, 40.0, 0.20), (2100.0, 60.0, 0.20), (2290.0, 40.0, 0.15)] },
    Mineral { name: "Pyrite", level: 0.15, slope: 0.15, features: &[(600.0, 80.0, 0.15), (900.0, 200.0, 0.25)] },
    Mineral { name: "Sphalerite", level: 0.30, slope: 0.20, features: &[(460.0, 40.0, 0.50), (640.0, 60.0, 0.20)] },
    Mineral { name: "Olivine", level: 0.40, slope: 0.05, features: &[(850.0, 80.0, 0.15), (1050.0, 120.0, 0.45), (1250.0, 100.0, 0.25)] },
    Mineral { name: "Augite", level: 0.35, slope: 0.05, features: &[(980.0, 100.0, 0.35), (2300.0, 200.0, 0.30)] },
    Mineral { name: "Serpentine", level: 0.55, slope: 0.05, features: &[(1390.0, 20.0, 0.35), (2120.0, 40.0, 0.10), (2325.0, 30.0, 0.40)] },
];

pub const LIBRARY_FIRST_NM: f64 = 350.0;
pub const LIBRARY_LAST_NM: f64 = 2500.0;

/// Names of the built-in reference minerals, in library order.
pub fn reference_mineral_names() -> Vec<&'static str> {
    MINERALS.iter().map(|m| m.name).collect()
}

/// A 30-mineral reference library on a 1 nm grid from 350 to 2500 nm.
/// Each spectrum is a sloped continuum times Gaussian absorption bands.
pub fn reference_library() -> SpectralLibrary {
    let wl: Vec<f64> = (0..=(LIBRARY_LAST_NM - LIBRARY_FIRST_NM) as usize)
        .map(|i| LIBRARY_FIRST_NM + i as f64)
        .collect();
    let span = LIBRARY_LAST_NM - LIBRARY_FIRST_NM;
    let entries = MINERALS
        .iter()
        .map(|m| {
            let refl: Vec<f64> = wl
                .iter()
                .map(|&w| {
                    let continuum = m.level + m.slope * (w - LIBRARY_FIRST_NM) / span;
                    m.features.iter().fold(continuum, |acc, &(c, width, depth)| {
                        let z = (w - c) / width;
                        acc * (1.0 - depth * (-0.5 * z * z).exp())
                    })
                })
                .collect();
            SpectrumRecord::new(m.name, wl.clone(), refl).expect("built-in spectra are valid")
        })
        .collect();
    SpectralLibrary::new(entries, "builtin").expect("built-in names are unique")
}

/// `n` wavelengths evenly spaced over `[first, last]`.
pub fn linear_wavelengths(first: f64, last: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![first],
        _ => (0..n).map(|i| first + (last - first) * i as f64 / (n - 1) as f64).collect(),
    }
}
