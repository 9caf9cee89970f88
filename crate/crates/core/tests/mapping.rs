use hypermap_core::mapping::{class_statistics, mtmf, sam_classify, MatchedFilter};
use hypermap_core::numerics::RandomSource;
use hypermap_core::spectral_match::resample_library;
use hypermap_core::synthcube::{
    generate, linear_wavelengths, random_abundance_field, reference_library, relative_noise_sigma,
    MixingScenario,
};
use hypermap_core::{SpectralCube, UnitsTag};
use proptest::prelude::*;

fn library_endmembers(names: &[&str], wl: &[f64]) -> Vec<Vec<f64>> {
    let lib = resample_library(&reference_library(), wl).unwrap();
    names.iter().map(|n| lib.get(n).unwrap().reflectance().to_vec()).collect()
}

fn scene(names: &[&str], side: usize, noise_fraction: f64, seed: u64) -> (SpectralCube, Vec<f64>, usize) {
    let wl = linear_wavelengths(450.0, 2400.0, 40);
    let endmembers = library_endmembers(names, &wl);
    let k = endmembers.len();
    let abundances = random_abundance_field(side, side, k, seed).unwrap();
    let scenario = MixingScenario {
        names: names.iter().map(|s| s.to_string()).collect(),
        wavelengths: wl,
        noise_sigma: relative_noise_sigma(&endmembers, noise_fraction),
        endmembers,
        abundances: abundances.clone(),
        pure_pixels: Vec::new(),
        seed,
    };
    let (cube, _) = generate(&scenario).unwrap();
    (cube, abundances.values, k)
}

fn gaussian_cube(seed: u64, pixels: usize, bands: usize) -> SpectralCube {
    let mut rng = RandomSource::new(seed);
    let wl = (0..bands).map(|b| b as f64).collect();
    SpectralCube::from_fn(pixels, 1, bands, wl, UnitsTag::Score, |_, _, b| {
        (b + 1) as f64 * rng.next_gaussian()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matched_filter_is_affine_equivariant(
        seed in any::<u64>(),
        a in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0],
        shift in prop::collection::vec(-10.0f64..10.0, 3),
    ) {
        let cube = gaussian_cube(seed, 150, 3);
        let target = vec![2.0, -1.0, 3.0];
        let moved = |x: &[f64]| -> Vec<f64> { x.iter().zip(&shift).map(|(v, c)| a * v + c).collect() };
        let pixels: Vec<Vec<f64>> = (0..cube.n_pixels()).map(|p| moved(&cube.spectrum_at(p))).collect();
        let cube2 = SpectralCube::from_pixels(150, 1, cube.wavelengths().to_vec(), &pixels, UnitsTag::Score).unwrap();
        let f1 = MatchedFilter::fit(&cube, &target).unwrap();
        let f2 = MatchedFilter::fit(&cube2, &moved(&target)).unwrap();
        for (p, moved_pixel) in pixels.iter().enumerate() {
            let (s1, s2) = (f1.score(&cube.spectrum_at(p)), f2.score(moved_pixel));
            prop_assert!((s1 - s2).abs() < 1e-8 * s1.abs().max(1.0), "{} vs {}", s1, s2);
        }
    }

    #[test]
    fn sam_classes_ignore_pixel_brightness(seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let ends = vec![vec![1.0, 0.2, 0.1], vec![0.1, 1.0, 0.3], vec![0.2, 0.2, 1.0]];
        let pixels: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| 0.05 + rng.next_uniform()).collect()).collect();
        let bright: Vec<Vec<f64>> = pixels.iter().map(|p| {
            let k = 0.1 + 10.0 * rng.next_uniform();
            p.iter().map(|v| v * k).collect()
        }).collect();
        let wl = vec![1.0, 2.0, 3.0];
        let a = SpectralCube::from_pixels(40, 1, wl.clone(), &pixels, UnitsTag::Reflectance).unwrap();
        let b = SpectralCube::from_pixels(40, 1, wl, &bright, UnitsTag::Reflectance).unwrap();
        let ma = sam_classify(&a, &ends, 0.3).unwrap();
        let mb = sam_classify(&b, &ends, 0.3).unwrap();
        prop_assert_eq!(ma.classes, mb.classes);
    }
}

#[test]
fn dominant_mixtures_classify_to_their_dominant_endmember() {
    let names = ["Kaolinite", "Calcite", "Hematite", "Olivine"];
    let (cube, abundances, k) = scene(&names, 96, 0.002, 11);
    let wl = cube.wavelengths().to_vec();
    let map = sam_classify(&cube, &library_endmembers(&names, &wl), std::f64::consts::FRAC_PI_2).unwrap();
    let (mut total, mut right) = (0, 0);
    for p in 0..cube.n_pixels() {
        let a = &abundances[p * k..(p + 1) * k];
        if let Some(i) = a.iter().position(|&v| v >= 0.8) {
            total += 1;
            right += usize::from(map.classes[p] as usize == i + 1);
        }
    }
    assert!(total > 100, "only {total} dominant pixels");
    assert!(right as f64 >= 0.99 * total as f64, "{right}/{total}");
}

#[test]
fn mtmf_score_tracks_target_abundance() {
    let names = ["Gypsum", "Calcite", "Hematite"];
    let (cube, abundances, k) = scene(&names, 64, 0.002, 5);
    let target = library_endmembers(&names[..1], cube.wavelengths()).remove(0);
    let r = mtmf(&cube, &target).unwrap();
    let mut bins = [(0.0, 0usize); 5];
    for p in 0..cube.n_pixels() {
        let bin = ((abundances[p * k] * 5.0) as usize).min(4);
        bins[bin].0 += r.mf_score[p];
        bins[bin].1 += 1;
    }
    let means: Vec<f64> = bins.iter().map(|(s, n)| s / *n as f64).collect();
    assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
    // The MF is calibrated to the scene mean and the target, not to absolute
    // abundance, so check linear association only.
    let n = cube.n_pixels() as f64;
    let a: Vec<f64> = (0..cube.n_pixels()).map(|p| abundances[p * k]).collect();
    let (ma, mm) = (a.iter().sum::<f64>() / n, r.mf_score.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(&r.mf_score).map(|(x, y)| (x - ma) * (y - mm)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vm: f64 = r.mf_score.iter().map(|y| (y - mm).powi(2)).sum();
    let corr = cov / (va * vm).sqrt();
    assert!(corr > 0.9, "correlation {corr}");
}

#[test]
fn mtmf_flags_off_mixture_pixels() {
    let names = ["Gypsum", "Calcite", "Hematite"];
    let (cube, _, _) = scene(&names, 48, 0.002, 9);
    let wl = cube.wavelengths().to_vec();
    let ends = library_endmembers(&names, &wl);
    let r = mtmf(&cube, &ends[0]).unwrap();
    let mf = MatchedFilter::fit(&cube, &ends[0]).unwrap();
    let olivine = library_endmembers(&["Olivine"], &wl).remove(0);
    let decoy: Vec<f64> = ends[0].iter().zip(&olivine).map(|(g, o)| 0.5 * g + 0.5 * o).collect();
    let honest: Vec<f64> = ends[0].iter().zip(&ends[1]).map(|(g, c)| 0.5 * g + 0.5 * c).collect();
    let (_, inf_decoy) = mf.score_mtmf(&decoy);
    let (_, inf_honest) = mf.score_mtmf(&honest);
    assert!(inf_decoy > 10.0 * inf_honest, "{inf_decoy} vs {inf_honest}");
    let max_scene = r.infeasibility.iter().cloned().fold(0.0, f64::max);
    assert!(inf_decoy > max_scene);
}

#[test]
fn class_statistics_cover_every_pixel() {
    let ends = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let pixels = vec![vec![1.0, 0.01], vec![0.01, 1.0], vec![1.0, 1.0], vec![2.0, 0.0]];
    let cube = SpectralCube::from_pixels(2, 2, vec![1.0, 2.0], &pixels, UnitsTag::Reflectance).unwrap();
    let map = sam_classify(&cube, &ends, 0.1).unwrap();
    assert_eq!(map.classes, vec![1, 2, 0, 1]);
    let stats = class_statistics(&map);
    assert_eq!(stats.iter().map(|s| s.pixel_count).sum::<usize>(), 4);
    assert!((stats.iter().map(|s| s.percent).sum::<f64>() - 100.0).abs() < 1e-12);
}
