//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use hypermap_core::envi_io::{
    parse_envi_header, read_cube, write_cube, ByteOrder, DataType, Interleave, SpectrumRecord,
};
use hypermap_core::mapping::MatchedFilter;
use hypermap_core::numerics::{splitmix64_next, symmetric_eig, RandomSource, SymmetricMatrix};
use hypermap_core::pipeline::{self, artifact, PipelineConfig, Stage};
use hypermap_core::spectral_match::{self, rank_matches, resample_library, AnalystWeights};
use hypermap_core::{hyperion, mnf, ppi, synthcube, SpectralCube, UnitsTag};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

// ---------------------------------------------------------------------------
// 1 + 2: end-to-end recovery on a synthetic scene
// ---------------------------------------------------------------------------

const PLANTED: [&str; 5] = ["Kaolinite", "Calcite", "Hematite", "Gypsum", "Olivine"];

struct EndToEnd {
    elapsed: Duration,
    top_minerals: Vec<String>,
    class_means: Vec<Vec<f64>>,
    wavelengths: Vec<f64>,
}

fn end_to_end(dir: &Path) -> Result<EndToEnd, String> {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/synthetic.cfg");
    let cfg_text = std::fs::read_to_string(shipped).map_err(|e| e.to_string())?;
    let cfg_path = dir.join("scene.cfg");
    std::fs::write(&cfg_path, cfg_text).unwrap();
    let cfg = PipelineConfig::load(&cfg_path).map_err(|e| e.to_string())?;
    check(
        cfg.synth.endmembers == PLANTED && cfg.ppi.threshold == 2.5 && cfg.ppi.n_iterations == 10_000,
        "synthetic.cfg does not describe the planted scenario",
    )?;
    check(cfg.endmember_k == 5 && cfg.synth.noise_fraction == 0.005, "synthetic.cfg: wrong k or noise")?;
    let start = Instant::now();
    single_threaded(|| -> hypermap_core::Result<()> {
        pipeline::run_stage(Stage::Synth, &cfg)?;
        pipeline::run_stage(Stage::All, &cfg)?;
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let out = dir.join("out");
    let report = std::fs::read_to_string(out.join(artifact::REPORT)).unwrap();
    let top_minerals = report
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    let ems = pipeline::read_endmember_set_spectra(&out).map_err(|e| e.to_string())?;
    Ok(EndToEnd {
        elapsed,
        top_minerals,
        class_means: ems.iter().map(|(_, e)| e.reflectance().to_vec()).collect(),
        wavelengths: ems[0].1.wavelengths().to_vec(),
    })
}

fn criterion_1(run: &EndToEnd) -> Outcome {
    for m in PLANTED {
        check(
            run.top_minerals.iter().any(|t| t == m),
            format!("{m} is no class's top match; tops = {:?}", run.top_minerals),
        )?;
    }
    check(
        run.elapsed < Duration::from_secs(60),
        format!("runtime {:?} exceeds 60 s", run.elapsed),
    )?;
    Ok(format!("tops {:?}, {:.2?} single-threaded", run.top_minerals, run.elapsed))
}

fn criterion_2(run: &EndToEnd) -> Outcome {
    let lib = resample_library(&synthcube::reference_library(), &run.wavelengths).unwrap();
    let mut worst: f64 = 0.0;
    for m in PLANTED {
        let planted = lib.get(m).unwrap().reflectance();
        let best = run
            .class_means
            .iter()
            .map(|c| spectral_match::sam_angle(c, planted).unwrap())
            .fold(f64::INFINITY, f64::min);
        check(best <= 0.05, format!("{m}: closest class mean at {best:.4} rad"))?;
        worst = worst.max(best);
    }
    Ok(format!("worst best-match angle {worst:.4} rad"))
}

// ---------------------------------------------------------------------------
// 3: MNF round trip and eigenvalue behaviour
// ---------------------------------------------------------------------------

fn random_cube(rs: &mut RandomSource, samples: usize, lines: usize, bands: usize) -> SpectralCube {
    let scales: Vec<f64> = (0..bands).map(|_| 0.1 + 10.0 * rs.next_uniform()).collect();
    let mix: Vec<f64> = (0..bands * bands).map(|_| rs.next_gaussian()).collect();
    let n = samples * lines;
    let latent: Vec<Vec<f64>> = (0..n)
        .map(|_| scales.iter().map(|s| s * rs.next_gaussian()).collect())
        .collect();
    let pixels: Vec<Vec<f64>> = latent
        .iter()
        .map(|z| {
            (0..bands)
                .map(|i| 50.0 + (0..bands).map(|j| mix[i * bands + j] * z[j]).sum::<f64>())
                .collect()
        })
        .collect();
    let wl = (1..=bands).map(|b| b as f64).collect();
    SpectralCube::from_pixels(samples, lines, wl, &pixels, UnitsTag::Reflectance).unwrap()
}

fn criterion_3() -> Outcome {
    let mut rs = RandomSource::new(0x3);
    let mut worst_rel: f64 = 0.0;
    for trial in 0..10 {
        let bands = 4 + trial;
        let cube = random_cube(&mut rs, 24, 20, bands);
        let noise = mnf::estimate_noise_covariance(&cube).map_err(|e| e.to_string())?;
        let model = mnf::fit_mnf(&cube, &noise).map_err(|e| e.to_string())?;
        for w in model.eigenvalues.windows(2) {
            check(w[1] <= w[0], format!("eigenvalues increase: {:?}", model.eigenvalues))?;
        }
        let y = mnf::forward_mnf(&model, &cube).unwrap();
        let back = mnf::inverse_mnf(&model, &y, bands).unwrap();
        let scale = cube.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let err = cube
            .values()
            .iter()
            .zip(back.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        worst_rel = worst_rel.max(err / scale);
    }
    check(worst_rel <= 1e-7, format!("round-trip relative error {worst_rel:e}"))?;

    let mut rs = RandomSource::new(0x30);
    let pixels: Vec<Vec<f64>> = (0..64 * 64)
        .map(|_| (0..30).map(|_| rs.next_gaussian()).collect())
        .collect();
    let noise_cube = SpectralCube::from_pixels(
        64,
        64,
        (1..=30).map(|b| b as f64).collect(),
        &pixels,
        UnitsTag::Reflectance,
    )
    .unwrap();
    let noise = mnf::estimate_noise_covariance(&noise_cube).unwrap();
    let model = mnf::fit_mnf(&noise_cube, &noise).unwrap();
    let dev = model
        .eigenvalues
        .iter()
        .fold(0.0_f64, |m, v| m.max((v - 1.0).abs()));
    check(dev <= 0.15, format!("pure-noise eigenvalue off 1 by {dev:.4}"))?;
    Ok(format!("round-trip rel err {worst_rel:.1e}, pure-noise max |λ-1| {dev:.3}"))
}

// ---------------------------------------------------------------------------
// 4: PPI on noise-free simplex data
// ---------------------------------------------------------------------------

fn simplex_cube(corners: &[Vec<f64>], samples: usize, lines: usize, seed: u64) -> (SpectralCube, Vec<usize>) {
    let k = corners.len();
    let dim = corners[0].len();
    let field = synthcube::random_abundance_field(lines, samples, k, seed).unwrap();
    let n = samples * lines;
    let corner_pixels: Vec<usize> = (0..k).map(|i| (i * 37 + 5) % n).collect();
    let pixels: Vec<Vec<f64>> = (0..n)
        .map(|p| match corner_pixels.iter().position(|&c| c == p) {
            Some(i) => corners[i].clone(),
            None => {
                let a = field.at(p);
                (0..dim).map(|d| (0..k).map(|i| a[i] * corners[i][d]).sum()).collect()
            }
        })
        .collect();
    let wl = (1..=dim).map(|d| d as f64).collect();
    (
        SpectralCube::from_pixels(samples, lines, wl, &pixels, UnitsTag::MnfComponent).unwrap(),
        corner_pixels,
    )
}

fn criterion_4() -> Outcome {
    let corners = vec![
        vec![3.0, 0.0, 0.0],
        vec![0.0, 2.5, 0.5],
        vec![-1.0, -1.0, 2.0],
        vec![0.5, -2.0, -1.5],
    ];
    let (cube, corner_pixels) = simplex_cube(&corners, 12, 10, 4);
    let params = ppi::PpiParams {
        n_iterations: 2000,
        threshold: 0.0,
        seed: 17,
    };
    let img = ppi::run_ppi(&cube, &params, 3).map_err(|e| e.to_string())?;

    // Exhaustive oracle: project every pixel on every skewer.
    let pixels: Vec<Vec<f64>> = (0..cube.n_pixels()).map(|p| cube.spectrum_at(p)).collect();
    let mut oracle = vec![0u32; pixels.len()];
    for it in 0..params.n_iterations {
        let s = ppi::skewer(params.seed, it, 3);
        let proj: Vec<f64> = pixels
            .iter()
            .map(|x| x.iter().zip(&s).map(|(a, b)| a * b).sum())
            .collect();
        let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
        for (p, &v) in proj.iter().enumerate() {
            if v == hi {
                oracle[p] += 1;
            }
            if v == lo {
                oracle[p] += 1;
            }
            if (v == hi || v == lo) && !corner_pixels.contains(&p) {
                return Err(format!("skewer {it}: interior pixel {p} attains an extreme"));
            }
        }
    }
    check(img.counts == oracle, "count image differs from the exhaustive projection oracle")?;
    let mut order: Vec<usize> = (0..img.counts.len()).collect();
    order.sort_by(|&a, &b| img.counts[b].cmp(&img.counts[a]).then(a.cmp(&b)));
    let mut top: Vec<usize> = order[..corners.len()].to_vec();
    top.sort();
    let mut expect = corner_pixels.clone();
    expect.sort();
    check(top == expect, format!("top-{} counts at {top:?}, corners at {expect:?}", corners.len()))?;

    let counts_bytes = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let img = pool.install(|| ppi::run_ppi(&cube, &params, 3).unwrap());
        let (_, bytes) = write_cube(&ppi::counts_cube(&img).unwrap(), Interleave::Bsq, DataType::I32, ByteOrder::Little)
            .unwrap();
        bytes
    };
    check(counts_bytes(1) == counts_bytes(8), "count image differs between 1 and 8 threads")?;
    Ok(format!(
        "corners hold top-{} counts, oracle agrees over {} skewers, 1 vs 8 threads identical",
        corners.len(),
        params.n_iterations
    ))
}

// ---------------------------------------------------------------------------
// 5: Spectral Analyst self-match
// ---------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let targets = hyperion::usable_wavelengths();
    check(targets.len() == 196, format!("{} usable bands", targets.len()))?;
    let lib = resample_library(&synthcube::reference_library(), &targets).map_err(|e| e.to_string())?;
    check(lib.len() == 30, format!("library holds {} spectra", lib.len()))?;
    let w = AnalystWeights::default();
    let mut worst_gap = f64::INFINITY;
    for e in lib.entries() {
        let ranked = rank_matches(e, &lib, &w).map_err(|e| e.to_string())?;
        check(
            ranked[0].mineral_name == e.name(),
            format!("{} ranks {} first", e.name(), ranked[0].mineral_name),
        )?;
        check(
            (ranked[0].weighted - 3.0).abs() <= 1e-9,
            format!("{} self-score {}", e.name(), ranked[0].weighted),
        )?;
        check(
            ranked[1].weighted < ranked[0].weighted,
            format!("{} ties with {}", e.name(), ranked[1].mineral_name),
        )?;
        worst_gap = worst_gap.min(ranked[0].weighted - ranked[1].weighted);
    }

    // Two spectra whose absorption features do not overlap.
    let wl: Vec<f64> = (0..200).map(|i| 400.0 + 10.0 * i as f64).collect();
    let feature = |centre: f64| -> Vec<f64> {
        wl.iter()
            .map(|&x| 0.6 * (1.0 - 0.4 * (-0.5 * ((x - centre) / 30.0).powi(2)).exp()))
            .collect()
    };
    let a = SpectrumRecord::new("a", wl.clone(), feature(900.0)).unwrap();
    let b = SpectrumRecord::new("b", wl.clone(), feature(2100.0)).unwrap();
    let self_a = spectral_match::score_entry(&a, &a, &w).unwrap().weighted;
    let cross = spectral_match::score_entry(&a, &b, &w).unwrap().weighted;
    check(cross < self_a, format!("orthogonal pair scores {cross} vs self {self_a}"))?;
    Ok(format!("30/30 self-matches at 3.000, smallest margin {worst_gap:.4}, orthogonal pair {cross:.4}"))
}

// ---------------------------------------------------------------------------
// 6: matched filter calibration and MTMF infeasibility
// ---------------------------------------------------------------------------

fn background(rs: &mut RandomSource, n: usize, dim: usize) -> SpectralCube {
    let scales: Vec<f64> = (0..dim).map(|_| 0.5 + 3.0 * rs.next_uniform()).collect();
    let pixels: Vec<Vec<f64>> = (0..n)
        .map(|_| scales.iter().map(|s| s * rs.next_gaussian()).collect())
        .collect();
    SpectralCube::from_pixels(n, 1, (1..=dim).map(|d| d as f64).collect(), &pixels, UnitsTag::MnfComponent)
        .unwrap()
}

fn criterion_6() -> Outcome {
    let mut rs = RandomSource::new(0x6);
    let cube = background(&mut rs, 400, 6);
    let mean = cube.band_means();
    let target: Vec<f64> = mean.iter().map(|m| m + 4.0 * rs.next_gaussian()).collect();
    let mf = MatchedFilter::fit(&cube, &target).map_err(|e| e.to_string())?;
    let at_target = mf.score(&target);
    let at_mean = mf.score(&mean);
    check((at_target - 1.0).abs() <= 1e-9, format!("MF(target) = {at_target}"))?;
    check(at_mean.abs() <= 1e-9, format!("MF(mean) = {at_mean}"))?;
    let mut dev: f64 = 0.0;
    for i in 0..=20 {
        let f = i as f64 / 20.0;
        let x: Vec<f64> = mean.iter().zip(&target).map(|(m, t)| m + f * (t - m)).collect();
        dev = dev.max((mf.score(&x) - f).abs());
    }
    check(dev <= 1e-9, format!("MF deviates from the segment by {dev:e}"))?;

    let mut wins = 0;
    for _ in 0..100 {
        let dim = 3 + rs.next_index(8);
        let cube = background(&mut rs, 300, dim);
        let mean = cube.band_means();
        let target: Vec<f64> = mean.iter().map(|m| m + 3.0 * rs.next_gaussian()).collect();
        let mf = MatchedFilter::fit(&cube, &target).map_err(|e| e.to_string())?;
        let f = 0.1 + 0.8 * rs.next_uniform();
        let dir: Vec<f64> = target.iter().zip(&mean).map(|(t, m)| t - m).collect();
        let on_line: Vec<f64> = mean.iter().zip(&dir).map(|(m, d)| m + f * d).collect();
        let mut v: Vec<f64> = (0..dim).map(|_| rs.next_gaussian()).collect();
        let proj = v.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() / dir.iter().map(|d| d * d).sum::<f64>();
        v.iter_mut().zip(&dir).for_each(|(a, d)| *a -= proj * d);
        let off_line: Vec<f64> = on_line.iter().zip(&v).map(|(x, p)| x + p).collect();
        if mf.score_mtmf(&off_line).1 > mf.score_mtmf(&on_line).1 {
            wins += 1;
        }
    }
    check(wins == 100, format!("perturbed pixels more infeasible in only {wins}/100 trials"))?;
    Ok(format!("MF(t)-1 {:.1e}, MF(mean) {:.1e}, segment dev {dev:.1e}, MTMF 100/100", at_target - 1.0, at_mean))
}

// ---------------------------------------------------------------------------
// 7: ENVI I/O round trip
// ---------------------------------------------------------------------------

fn random_value(rs: &mut RandomSource, dt: DataType) -> f64 {
    match dt.int_range() {
        Some((lo, hi)) => {
            let span = (hi - lo) as u64;
            lo + (rs.next_u64() % (span + 1)) as f64
        }
        None => {
            let v = (rs.next_uniform() - 0.5) * 10f64.powi(rs.next_index(12) as i32 - 4);
            if dt == DataType::F32 {
                v as f32 as f64
            } else {
                v
            }
        }
    }
}

fn criterion_7() -> Outcome {
    let mut rs = RandomSource::new(0x7);
    let orders = [ByteOrder::Little, ByteOrder::Big];
    let mut combos = 0;
    for i in 0..200 {
        let il = Interleave::ALL[i % 3];
        let dt = DataType::ALL[(i / 3) % DataType::ALL.len()];
        let bo = orders[(i / (3 * DataType::ALL.len())) % 2];
        if i < 3 * DataType::ALL.len() * 2 {
            combos += 1;
        }
        let (s, l, b) = (1 + rs.next_index(6), 1 + rs.next_index(6), 1 + rs.next_index(6));
        let wl: Vec<f64> = (0..b).map(|k| 400.0 + 10.0 * k as f64).collect();
        let values: Vec<f64> = (0..s * l * b).map(|_| random_value(&mut rs, dt)).collect();
        let cube = SpectralCube::new(s, l, b, wl, values, UnitsTag::Reflectance).unwrap();
        let (text, bytes) = write_cube(&cube, il, dt, bo).map_err(|e| e.to_string())?;
        let header = parse_envi_header(&text).map_err(|e| e.to_string())?;
        let back = read_cube(&header, &bytes).map_err(|e| e.to_string())?;
        let exact = cube
            .values()
            .iter()
            .zip(back.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        check(exact, format!("cube {i} ({il:?}, {dt:?}, {bo:?}) did not round-trip"))?;
        check(back.wavelengths() == cube.wavelengths(), format!("cube {i}: wavelengths changed"))?;
        let again = parse_envi_header(&header.to_text()).map_err(|e| e.to_string())?;
        check(again == header, format!("cube {i}: header parse/serialize is not a fixed point"))?;
    }
    Ok(format!("200 cubes over {combos} interleave/type/byte-order combinations exact"))
}

// ---------------------------------------------------------------------------
// 8: numerics oracles
// ---------------------------------------------------------------------------

/// Eigenvalues of a symmetric 2×2 or 3×3 matrix from its characteristic
/// polynomial, descending.
fn char_poly_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    let mut ev = if n == 2 {
        let (p, q, r) = (a[0], a[1], a[3]);
        let mid = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        vec![mid + rad, mid - rad]
    } else {
        // Trigonometric solution of the depressed cubic.
        let m = (a[0] + a[4] + a[8]) / 3.0;
        let b: Vec<f64> = (0..9).map(|i| a[i] - if i % 4 == 0 { m } else { 0.0 }).collect();
        let p2: f64 = b.iter().map(|v| v * v).sum::<f64>() / 6.0;
        let p = p2.sqrt();
        if p == 0.0 {
            vec![m; 3]
        } else {
            let c: Vec<f64> = b.iter().map(|v| v / p).collect();
            let det = c[0] * (c[4] * c[8] - c[5] * c[7]) - c[1] * (c[3] * c[8] - c[5] * c[6])
                + c[2] * (c[3] * c[7] - c[4] * c[6]);
            let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
            let tau = 2.0 * std::f64::consts::PI / 3.0;
            vec![
                m + 2.0 * p * phi.cos(),
                m + 2.0 * p * (phi + tau).cos(),
                m + 2.0 * p * (phi + 2.0 * tau).cos(),
            ]
        }
    };
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

fn reference_splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn criterion_8() -> Outcome {
    let mut rs = RandomSource::new(0x8);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = 2 + i % 2;
        let mut a = vec![0.0; n * n];
        for r in 0..n {
            for c in r..n {
                let v = 2.0 * rs.next_uniform() - 1.0;
                a[r * n + c] = v;
                a[c * n + r] = v;
            }
        }
        let eig = symmetric_eig(&SymmetricMatrix::from_rows(n, a.clone()).unwrap()).map_err(|e| e.to_string())?;
        for (x, y) in eig.values.iter().zip(char_poly_eigenvalues(n, &a)) {
            worst = worst.max((x - y).abs());
        }
    }
    check(worst <= 1e-8, format!("eigenvalues off the oracle by {worst:e}"))?;

    // First outputs and the 1000th output of each stream.
    let anchors: [(u64, [u64; 3], u64); 3] = [
        (0, [0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, 0x06c45d188009454f], 0x14e0abb2bfcf7c3e),
        (1, [0x910a2dec89025cc1, 0xbeeb8da1658eec67, 0xf893a2eefb32555e], 0xe71894b1b5034fb7),
        (0xDEADBEEF, [0x4adfb90f68c9eb9b, 0xde586a3141a10922, 0x021fbc2f8e1cfc1d], 0x89425e84566f3c44),
    ];
    for (seed, first, last) in anchors {
        let (mut s, mut r) = (seed, seed);
        let mut out = Vec::with_capacity(1000);
        for _ in 0..1000 {
            let v = splitmix64_next(&mut s);
            check(v == reference_splitmix64(&mut r), format!("seed {seed:#x}: stream diverges"))?;
            out.push(v);
        }
        check(out[..3] == first && out[999] == last, format!("seed {seed:#x}: anchors differ"))?;
    }
    Ok(format!("1000 eigenproblems within {worst:.1e}, 3 x 1000 splitmix64 outputs match"))
}

// ---------------------------------------------------------------------------
// 9: shipped defaults
// ---------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config");
    let text = std::fs::read_to_string(dir.join("default.cfg")).map_err(|e| e.to_string())?;
    check(text == pipeline::default_config_text(), "shipped default.cfg differs from the generated text")?;
    let cfg = PipelineConfig::load(&dir.join("default.cfg")).map_err(|e| e.to_string())?;
    check(cfg.sensor_bands == 242, format!("sensor bands {}", cfg.sensor_bands))?;
    check(cfg.mnf_keep_k == 48, format!("mnf keep k {}", cfg.mnf_keep_k))?;
    check(cfg.ppi.threshold == 2.5, format!("ppi threshold {}", cfg.ppi.threshold))?;
    check(cfg.ppi.n_iterations == 10_000, format!("ppi iterations {}", cfg.ppi.n_iterations))?;
    check(cfg.endmember_k == 48, format!("endmember k {}", cfg.endmember_k))?;
    let mask_path = cfg.bad_band_mask.clone().unwrap();
    let mask = hypermap_core::preprocess::read_band_mask_csv(&std::fs::read_to_string(&mask_path).unwrap(), 242)
        .map_err(|e| e.to_string())?;
    check(mask.kept() == 196, format!("shipped mask keeps {} bands", mask.kept()))?;
    Ok("242 bands, keep k 48, PPI (2.5, 10000), k 48".into())
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let e2e = catch_unwind(AssertUnwindSafe(|| end_to_end(tmp.path())))
        .unwrap_or_else(|_| Err("end-to-end run panicked".into()));

    let criteria: Vec<(&str, Criterion)> = vec![
        ("end-to-end recovery", Box::new(|| e2e.as_ref().map_err(Clone::clone).and_then(criterion_1))),
        ("endmember fidelity", Box::new(|| e2e.as_ref().map_err(Clone::clone).and_then(criterion_2))),
        ("MNF round trip", Box::new(criterion_3)),
        ("PPI correctness", Box::new(criterion_4)),
        ("Spectral Analyst self-match", Box::new(criterion_5)),
        ("matched filter calibration", Box::new(criterion_6)),
        ("I/O round trip", Box::new(criterion_7)),
        ("numerics oracles", Box::new(criterion_8)),
        ("parameter fidelity", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
