//! Pixel Purity Index.
//!
//! Each iteration draws a random unit "skewer" in MNF space, projects every
//! pixel onto it and credits the pixels lying within `threshold` of either
//! extreme. Skewer `i` uses its own child random stream, so the count image
//! does not depend on how iterations are spread across threads.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::cube::SpectralCube;
use crate::error::{Error, Result};
use crate::numerics::{split_seed, RandomSource};

pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_THRESHOLD: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpiParams {
    pub n_iterations: usize,
    /// Projection distance from an extreme, in MNF noise-sigma units.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for PpiParams {
    fn default() -> Self {
        Self {
            n_iterations: DEFAULT_ITERATIONS,
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
        }
    }
}

impl PpiParams {
    fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 {
            return Err(Error::Range("PPI needs at least one iteration".into()));
        }
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return Err(Error::Range(format!(
                "PPI threshold must be a non-negative real, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpiImage {
    pub lines: usize,
    pub samples: usize,
    /// Raster-ordered extreme counts.
    pub counts: Vec<u32>,
    /// Index of the first iteration in which each pixel was extreme.
    pub first_hit: Vec<Option<u32>>,
    pub params: PpiParams,
}

impl PpiImage {
    pub fn count(&self, line: usize, sample: usize) -> u32 {
        self.counts[line * self.samples + sample]
    }

    /// Cumulative number of distinct pixels flagged after each iteration.
    pub fn cumulative_trace(&self) -> Vec<usize> {
        let mut per_iter = vec![0usize; self.params.n_iterations];
        for i in self.first_hit.iter().flatten() {
            per_iter[*i as usize] += 1;
        }
        per_iter
            .iter()
            .scan(0, |acc, n| {
                *acc += n;
                Some(*acc)
            })
            .collect()
    }

    /// (count, number of pixels with that count) for every count > 0.
    pub fn histogram(&self) -> Vec<(u32, usize)> {
        let mut map = std::collections::BTreeMap::new();
        for &c in self.counts.iter().filter(|&&c| c > 0) {
            *map.entry(c).or_insert(0usize) += 1;
        }
        map.into_iter().collect()
    }
}

/// Unit skewer for iteration `iteration`.
pub fn skewer(seed: u64, iteration: usize, dim: usize) -> Vec<f64> {
    let mut rs = RandomSource::new(split_seed(seed, iteration as u64));
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rs.next_gaussian()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Pixels within `threshold` of the maximum and of the minimum projection.
/// A pixel near both ends appears in both lists.
pub fn extremes(projections: &[f64], threshold: f64) -> (Vec<usize>, Vec<usize>) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in projections {
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let top = (0..projections.len())
        .filter(|&i| projections[i] >= hi - threshold)
        .collect();
    let bottom = (0..projections.len())
        .filter(|&i| projections[i] <= lo + threshold)
        .collect();
    (top, bottom)
}

pub fn run_ppi(mnf_cube: &SpectralCube, params: &PpiParams, use_k_components: usize) -> Result<PpiImage> {
    run_ppi_with_progress(mnf_cube, params, use_k_components, &|_| {})
}

/// As [`run_ppi`], reporting the number of completed iterations.
pub fn run_ppi_with_progress(
    mnf_cube: &SpectralCube,
    params: &PpiParams,
    use_k_components: usize,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<PpiImage> {
    params.validate()?;
    let k = use_k_components;
    if k == 0 || k > mnf_cube.bands() {
        return Err(Error::Range(format!(
            "PPI component count must be in 1..={}, got {k}",
            mnf_cube.bands()
        )));
    }
    let n = mnf_cube.n_pixels();
    let mut points = vec![0.0; n * k];
    for b in 0..k {
        for (p, v) in mnf_cube.band(b).iter().enumerate() {
            points[p * k + b] = *v;
        }
    }

    let done = AtomicUsize::new(0);
    let (counts, first_hit) = (0..params.n_iterations)
        .into_par_iter()
        .fold(
            || (vec![0u32; n], vec![u32::MAX; n], vec![0.0; n]),
            |(mut counts, mut first, mut proj), it| {
                let dir = skewer(params.seed, it, k);
                for (p, pt) in proj.iter_mut().zip(points.chunks_exact(k)) {
                    *p = pt.iter().zip(&dir).map(|(a, b)| a * b).sum();
                }
                let (top, bottom) = extremes(&proj, params.threshold);
                for i in top.into_iter().chain(bottom) {
                    counts[i] += 1;
                    first[i] = first[i].min(it as u32);
                }
                progress(done.fetch_add(1, Ordering::Relaxed) + 1);
                (counts, first, proj)
            },
        )
        .map(|(c, f, _)| (c, f))
        .reduce(
            || (vec![0u32; n], vec![u32::MAX; n]),
            |(mut ca, mut fa), (cb, fb)| {
                for (a, b) in ca.iter_mut().zip(cb) {
                    *a += b;
                }
                for (a, b) in fa.iter_mut().zip(fb) {
                    *a = (*a).min(b);
                }
                (ca, fa)
            },
        );

    Ok(PpiImage {
        lines: mnf_cube.lines(),
        samples: mnf_cube.samples(),
        counts,
        first_hit: first_hit
            .into_iter()
            .map(|f| (f != u32::MAX).then_some(f))
            .collect(),
        params: *params,
    })
}

/// Pixels with `count >= min_count`, by count descending then raster order,
/// truncated to `max_pixels`. Returns (line, sample, count).
pub fn select_pure_pixels(ppi: &PpiImage, min_count: u32, max_pixels: usize) -> Vec<(usize, usize, u32)> {
    let mut hits: Vec<(usize, u32)> = ppi
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= min_count && c > 0)
        .map(|(i, &c)| (i, c))
        .collect();
    hits.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    hits.truncate(max_pixels);
    hits.into_iter()
        .map(|(i, c)| (i / ppi.samples, i % ppi.samples, c))
        .collect()
}

/// `line,sample,count` CSV.
pub fn pure_pixels_csv(pixels: &[(usize, usize, u32)]) -> String {
    let mut s = String::from("line,sample,count\n");
    for (l, smp, c) in pixels {
        s.push_str(&format!("{l},{smp},{c}\n"));
    }
    s
}

pub fn read_pure_pixels_csv(text: &str) -> Result<Vec<(usize, usize, u32)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<u64> {
            rec.get(i)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad pure-pixel row {:?}", rec)))
        };
        out.push((parse(0)? as usize, parse(1)? as usize, parse(2)? as u32));
    }
    Ok(out)
}

/// Counts as a single-band score cube.
pub fn counts_cube(ppi: &PpiImage) -> Result<SpectralCube> {
    SpectralCube::new(
        ppi.samples,
        ppi.lines,
        1,
        vec![1.0],
        ppi.counts.iter().map(|&c| c as f64).collect(),
        crate::cube::UnitsTag::Score,
    )
}
