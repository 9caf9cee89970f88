//! Endmember derivation: seeded k-means over PPI-selected pixels in MNF space,
//! reported as class-mean spectra.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::cube::SpectralCube;
use crate::envi_io::{SpectralLibrary, SpectrumRecord};
use crate::error::{Error, Result};
use crate::numerics::RandomSource;

pub const DEFAULT_K: usize = 48;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Zero-based cluster index per point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sse: f64,
    /// SSE after every assignment step, in order.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn count_distinct(points: &[Vec<f64>]) -> usize {
    points
        .iter()
        .map(|p| p.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<u64>>())
        .collect::<HashSet<_>>()
        .len()
}

/// Nearest centroid (ties to the lowest index) and its squared distance.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points.par_iter().map(|p| nearest(p, centroids)).unzip()
}

/// k-means++ seeding.
fn seed_centroids(points: &[Vec<f64>], k: usize, rs: &mut RandomSource) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rs.next_index(points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rs.next_uniform() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let next = points[pick.expect("k <= distinct points leaves positive weight")].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &next));
        }
        centroids.push(next);
    }
    centroids
}

/// Lloyd's k-means with k-means++ seeding from `seed`.
///
/// Stops when no centroid moves by `tol` or more, or after `max_iter`
/// updates. An empty cluster is re-seeded with the point farthest from its
/// centroid among clusters holding at least two points.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::Range("k must be positive".into()));
    }
    let Some(first) = points.first() else {
        return Err(Error::InvalidInput("k-means needs at least one point".into()));
    };
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::SizeMismatch("k-means points have differing dimensions".into()));
    }
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds the {distinct} distinct points"
        )));
    }

    let mut rs = RandomSource::new(seed);
    let mut centroids = seed_centroids(points, k, &mut rs);
    let mut sse_history = Vec::new();
    let mut iterations = 0;

    let (mut labels, mut d2) = assign(points, &centroids);
    sse_history.push(d2.iter().sum());
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&labels) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &n), old)| {
                if n == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / n as f64).collect()
                }
            })
            .collect();
        let empties: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
        for empty in empties {
            let far = (0..points.len())
                .filter(|&i| counts[labels[i]] >= 2)
                .max_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                counts[labels[i]] -= 1;
                counts[empty] = 1;
                labels[i] = empty;
                d2[i] = 0.0;
                next[empty] = points[i].clone();
            }
        }
        let movement = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        let (l, d) = assign(points, &centroids);
        labels = l;
        d2 = d;
        sse_history.push(d2.iter().sum());
        if movement < tol {
            break;
        }
    }

    Ok(KMeansResult {
        assignments: labels,
        sse: d2.iter().sum(),
        centroids,
        sse_history,
        iterations,
    })
}

/// Class-mean endmembers.
#[derive(Debug, Clone, PartialEq)]
pub struct EndmemberSet {
    pub k: usize,
    /// 1-based class ids.
    pub class_ids: Vec<usize>,
    pub mnf_means: Vec<Vec<f64>>,
    pub reflectance_means: Vec<Vec<f64>>,
    pub member_counts: Vec<usize>,
    /// (line, sample) of every clustered pixel, per class.
    pub source_pixels: Vec<Vec<(usize, usize)>>,
    /// Wavelengths of `reflectance_means`.
    pub wavelengths: Vec<f64>,
}

impl EndmemberSet {
    pub fn class_name(id: usize) -> String {
        format!("class_{id}")
    }

    /// Reflectance means as a library with entries named `class_<id>`.
    pub fn to_library(&self) -> Result<SpectralLibrary> {
        let entries = self
            .class_ids
            .iter()
            .zip(&self.reflectance_means)
            .map(|(&id, m)| SpectrumRecord::new(Self::class_name(id), self.wavelengths.clone(), m.clone()))
            .collect::<Result<Vec<_>>>()?;
        SpectralLibrary::new(entries, "endmembers")
    }

    /// `class_id,member_count` manifest.
    pub fn manifest_csv(&self) -> String {
        let mut s = String::from("class_id,member_count\n");
        for (id, n) in self.class_ids.iter().zip(&self.member_counts) {
            s.push_str(&format!("{id},{n}\n"));
        }
        s
    }

    /// `class_id,line,sample` membership list.
    pub fn members_csv(&self) -> String {
        let mut s = String::from("class_id,line,sample\n");
        for (id, px) in self.class_ids.iter().zip(&self.source_pixels) {
            for (l, smp) in px {
                s.push_str(&format!("{id},{l},{smp}\n"));
            }
        }
        s
    }

    /// MNF-space means as `class_id,c1,...,ck` rows.
    pub fn mnf_means_csv(&self) -> String {
        let dim = self.mnf_means.first().map_or(0, Vec::len);
        let mut s = String::from("class_id");
        for c in 1..=dim {
            s.push_str(&format!(",c{c}"));
        }
        s.push('\n');
        for (id, m) in self.class_ids.iter().zip(&self.mnf_means) {
            s.push_str(&id.to_string());
            for v in m {
                s.push_str(&format!(",{v:e}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Parse [`EndmemberSet::mnf_means_csv`] output: (class ids, means).
pub fn read_mnf_means_csv(text: &str) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut ids = Vec::new();
    let mut means = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let bad = || Error::Parse(format!("bad MNF-means row {rec:?}"));
        ids.push(rec.get(0).and_then(|f| f.parse().ok()).ok_or_else(bad)?);
        means.push(
            rec.iter()
                .skip(1)
                .map(|f| f.parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok((ids, means))
}

/// Options for [`derive_endmembers`].
#[derive(Debug, Clone, Copy)]
pub struct DeriveOptions {
    pub k: usize,
    /// Leading MNF components used as clustering coordinates.
    pub n_components: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            n_components: crate::mnf::DEFAULT_KEEP_K,
            seed: 0,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

/// Cluster `pure_pixels` on their MNF vectors and average each class in both
/// MNF and corrected-reflectance space.
pub fn derive_endmembers(
    corrected: &SpectralCube,
    mnf_cube: &SpectralCube,
    pure_pixels: &[(usize, usize)],
    opts: &DeriveOptions,
) -> Result<EndmemberSet> {
    if pure_pixels.is_empty() {
        return Err(Error::InvalidInput("no pure pixels to cluster".into()));
    }
    if (corrected.lines(), corrected.samples()) != (mnf_cube.lines(), mnf_cube.samples()) {
        return Err(Error::SizeMismatch(format!(
            "corrected cube is {}x{}, MNF cube is {}x{}",
            corrected.lines(),
            corrected.samples(),
            mnf_cube.lines(),
            mnf_cube.samples()
        )));
    }
    let nc = opts.n_components;
    if nc == 0 || nc > mnf_cube.bands() {
        return Err(Error::Range(format!(
            "component count must be in 1..={}, got {nc}",
            mnf_cube.bands()
        )));
    }
    if let Some(&(l, s)) = pure_pixels
        .iter()
        .find(|&&(l, s)| l >= corrected.lines() || s >= corrected.samples())
    {
        return Err(Error::Range(format!("pure pixel ({l}, {s}) outside the image")));
    }
    let points: Vec<Vec<f64>> = pure_pixels
        .iter()
        .map(|&(l, s)| mnf_cube.pixel(l, s)[..nc].to_vec())
        .collect();
    let km = kmeans(&points, opts.k, opts.seed, opts.max_iter, opts.tol)?;

    let bands = corrected.bands();
    let mut refl_sums = vec![vec![0.0; bands]; opts.k];
    let mut mnf_sums = vec![vec![0.0; nc]; opts.k];
    let mut members = vec![Vec::new(); opts.k];
    for ((&(l, s), &c), p) in pure_pixels.iter().zip(&km.assignments).zip(&points) {
        members[c].push((l, s));
        for (acc, v) in refl_sums[c].iter_mut().zip(corrected.pixel(l, s)) {
            *acc += v;
        }
        for (acc, v) in mnf_sums[c].iter_mut().zip(p) {
            *acc += v;
        }
    }
    let member_counts: Vec<usize> = members.iter().map(Vec::len).collect();
    if let Some(j) = member_counts.iter().position(|&n| n == 0) {
        return Err(Error::Numerical(format!("class {} ended empty", j + 1)));
    }
    let avg = |sums: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        sums.into_iter()
            .zip(&member_counts)
            .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect()
    };
    Ok(EndmemberSet {
        k: opts.k,
        class_ids: (1..=opts.k).collect(),
        mnf_means: avg(mnf_sums),
        reflectance_means: avg(refl_sums),
        member_counts,
        source_pixels: members,
        wavelengths: corrected.wavelengths().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::UnitsTag;

    #[test]
    fn k_one_is_the_mean() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3.0]];
        let r = kmeans(&pts, 1, 0, 300, 1e-6).unwrap();
        assert_eq!(r.centroids, vec![vec![1.0, 1.0]]);
        assert_eq!(r.assignments, vec![0, 0, 0]);
    }

    #[test]
    fn k_equals_distinct_points() {
        let pts = vec![vec![0.0], vec![5.0], vec![5.0], vec![9.0]];
        let r = kmeans(&pts, 3, 4, 300, 1e-6).unwrap();
        assert_eq!(r.sse, 0.0);
        let mut cs: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        cs.sort_by(f64::total_cmp);
        assert_eq!(cs, vec![0.0, 5.0, 9.0]);
    }

    #[test]
    fn k_too_large() {
        let pts = vec![vec![1.0], vec![1.0]];
        assert!(kmeans(&pts, 2, 0, 300, 1e-6).is_err());
    }

    #[test]
    fn sse_non_increasing_and_deterministic() {
        let mut rs = RandomSource::new(12);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rs.next_gaussian()).collect()).collect();
        let a = kmeans(&pts, 6, 99, 300, 1e-9).unwrap();
        for w in a.sse_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", a.sse_history);
        }
        let b = kmeans(&pts, 6, 99, 300, 1e-9).unwrap();
        assert_eq!(a, b);
    }

    fn planted_cube() -> (SpectralCube, Vec<Vec<f64>>) {
        let ems = vec![vec![0.1, 0.5, 0.9], vec![0.8, 0.2, 0.3], vec![0.4, 0.4, 0.1]];
        // 9 pixels: 3 repetitions of each endmember.
        let pixels: Vec<Vec<f64>> = (0..9).map(|i| ems[i % 3].clone()).collect();
        let cube = SpectralCube::from_pixels(3, 3, vec![500.0, 600.0, 700.0], &pixels, UnitsTag::Reflectance).unwrap();
        (cube, ems)
    }

    #[test]
    fn planted_endmembers_recovered_exactly() {
        let (cube, ems) = planted_cube();
        let pure: Vec<(usize, usize)> = (0..9).map(|i| (i / 3, i % 3)).collect();
        let opts = DeriveOptions { k: 3, n_components: 3, ..Default::default() };
        let set = derive_endmembers(&cube, &cube, &pure, &opts).unwrap();
        assert_eq!(set.member_counts.iter().sum::<usize>(), 9);
        for em in &ems {
            let hit = set
                .reflectance_means
                .iter()
                .any(|m| m.iter().zip(em).all(|(a, b)| (a - b).abs() < 1e-12));
            assert!(hit, "{em:?} not in {:?}", set.reflectance_means);
        }
        assert_eq!(set.class_ids, vec![1, 2, 3]);
    }

    #[test]
    fn too_few_distinct_pixels() {
        let (cube, _) = planted_cube();
        let pure = vec![(0, 0), (1, 0)];
        let opts = DeriveOptions { k: 2, n_components: 3, ..Default::default() };
        assert!(derive_endmembers(&cube, &cube, &pure, &opts).is_err());
        assert!(derive_endmembers(&cube, &cube, &[], &opts).is_err());
    }

    #[test]
    fn library_export_names() {
        let (cube, _) = planted_cube();
        let pure: Vec<(usize, usize)> = (0..9).map(|i| (i / 3, i % 3)).collect();
        let opts = DeriveOptions { k: 3, n_components: 2, ..Default::default() };
        let set = derive_endmembers(&cube, &cube, &pure, &opts).unwrap();
        let lib = set.to_library().unwrap();
        assert_eq!(lib.entries()[2].name(), "class_3");
        assert!(set.manifest_csv().starts_with("class_id,member_count\n1,"));
        let (ids, means) = read_mnf_means_csv(&set.mnf_means_csv()).unwrap();
        assert_eq!(ids, vec![1, 2, 3]);
        assert_eq!(means, set.mnf_means);
    }
}
