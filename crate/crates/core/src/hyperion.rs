//! EO-1 Hyperion sensor defaults: band centres, L1 radiance scaling and the
//! conventional usable-band list.

/// Total bands in a Hyperion L1 product.
pub const HYPERION_BANDS: usize = 242;
/// Last band (1-based) of the VNIR detector.
pub const VNIR_LAST_BAND: usize = 70;

/// VNIR bands (1..=70) are divided by this to get W/(m² sr µm).
pub const VNIR_GAIN: f64 = 40.0;
/// SWIR bands (71..=242) are divided by this.
pub const SWIR_GAIN: f64 = 80.0;

/// Calibrated, usable 1-based band ranges (inclusive).
pub const USABLE_BAND_RANGES: [(usize, usize); 2] = [(8, 57), (79, 224)];

/// Nominal band centres in nm. The VNIR and SWIR detectors overlap around
/// 850–1060 nm, so the list restarts at band 71.
pub fn wavelengths() -> Vec<f64> {
    (1..=HYPERION_BANDS)
        .map(|b| {
            if b <= VNIR_LAST_BAND {
                355.59 + 10.1733 * (b - 1) as f64
            } else {
                851.92 + 10.0900 * (b - 71) as f64
            }
        })
        .collect()
}

pub fn default_gains() -> Vec<f64> {
    (1..=HYPERION_BANDS)
        .map(|b| if b <= VNIR_LAST_BAND { VNIR_GAIN } else { SWIR_GAIN })
        .collect()
}

pub fn default_band_mask() -> Vec<bool> {
    (1..=HYPERION_BANDS)
        .map(|b| USABLE_BAND_RANGES.iter().any(|&(lo, hi)| (lo..=hi).contains(&b)))
        .collect()
}

/// Wavelengths of the bands kept by [`default_band_mask`].
pub fn usable_wavelengths() -> Vec<f64> {
    wavelengths()
        .into_iter()
        .zip(default_band_mask())
        .filter_map(|(w, k)| k.then_some(w))
        .collect()
}

/// `band_index,keep` CSV for the default mask.
pub fn default_band_mask_csv() -> String {
    let mut s = String::from("band_index,keep\n");
    for (i, k) in default_band_mask().iter().enumerate() {
        s.push_str(&format!("{},{}\n", i + 1, *k as u8));
    }
    s
}

/// `band_index,gain` CSV for the default gains.
pub fn default_gains_csv() -> String {
    let mut s = String::from("band_index,gain\n");
    for (i, g) in default_gains().iter().enumerate() {
        s.push_str(&format!("{},{}\n", i + 1, g));
    }
    s
}
