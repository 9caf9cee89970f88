use std::fs;
use std::path::{Path, PathBuf};

use super::header::{parse_envi_header, ByteOrder, DataType, EnviHeader, Interleave};
use crate::cube::{SpectralCube, UnitsTag};
use crate::error::{Error, Result};

/// Header key carrying the cube's [`UnitsTag`].
const UNITS_KEY: &str = "units tag";

/// File-order element index of (line, sample, band).
#[inline]
fn file_index(il: Interleave, lines: usize, samples: usize, bands: usize, l: usize, s: usize, b: usize) -> usize {
    match il {
        Interleave::Bsq => b * lines * samples + l * samples + s,
        Interleave::Bil => l * bands * samples + b * samples + s,
        Interleave::Bip => l * samples * bands + s * bands + b,
    }
}

fn decode(dt: DataType, order: ByteOrder, bytes: &[u8]) -> f64 {
    macro_rules! conv {
        ($t:ty, $n:expr) => {{
            let mut buf = [0u8; $n];
            buf.copy_from_slice(bytes);
            match order {
                ByteOrder::Little => <$t>::from_le_bytes(buf) as f64,
                ByteOrder::Big => <$t>::from_be_bytes(buf) as f64,
            }
        }};
    }
    match dt {
        DataType::U8 => bytes[0] as f64,
        DataType::I16 => conv!(i16, 2),
        DataType::I32 => conv!(i32, 4),
        DataType::F32 => conv!(f32, 4),
        DataType::F64 => conv!(f64, 8),
        DataType::U16 => conv!(u16, 2),
        DataType::U32 => conv!(u32, 4),
    }
}

fn encode(dt: DataType, order: ByteOrder, value: f64, out: &mut Vec<u8>) -> Result<()> {
    macro_rules! put {
        ($v:expr) => {{
            let v = $v;
            match order {
                ByteOrder::Little => out.extend_from_slice(&v.to_le_bytes()),
                ByteOrder::Big => out.extend_from_slice(&v.to_be_bytes()),
            }
        }};
    }
    if let Some((lo, hi)) = dt.int_range() {
        let r = value.round();
        if !(lo..=hi).contains(&r) {
            return Err(Error::Range(format!(
                "value {value} does not fit data type {} ({lo}..={hi})",
                dt.code()
            )));
        }
        match dt {
            DataType::U8 => out.push(r as u8),
            DataType::I16 => put!(r as i16),
            DataType::I32 => put!(r as i32),
            DataType::U16 => put!(r as u16),
            DataType::U32 => put!(r as u32),
            _ => unreachable!(),
        }
        return Ok(());
    }
    match dt {
        DataType::F32 => {
            let v = value as f32;
            if !v.is_finite() {
                return Err(Error::Range(format!("value {value} overflows float32")));
            }
            put!(v)
        }
        DataType::F64 => put!(value),
        _ => unreachable!(),
    }
    Ok(())
}

/// Decode a raw ENVI payload (including `header_offset` leading bytes).
pub fn read_cube(header: &EnviHeader, raw: &[u8]) -> Result<SpectralCube> {
    let expected = header.header_offset + header.payload_len();
    if raw.len() != expected {
        return Err(Error::SizeMismatch(format!(
            "payload has {} bytes, header declares {} ({} offset + {}x{}x{} x {} bytes)",
            raw.len(),
            expected,
            header.header_offset,
            header.samples,
            header.lines,
            header.bands,
            header.data_type.size()
        )));
    }
    let (s_n, l_n, b_n) = (header.samples, header.lines, header.bands);
    let size = header.data_type.size();
    let payload = &raw[header.header_offset..];
    let mut values = vec![0.0; s_n * l_n * b_n];
    for b in 0..b_n {
        for l in 0..l_n {
            for s in 0..s_n {
                let fi = file_index(header.interleave, l_n, s_n, b_n, l, s, b);
                let v = decode(header.data_type, header.byte_order, &payload[fi * size..(fi + 1) * size]);
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "non-finite payload value at line {l}, sample {s}, band {b}"
                    )));
                }
                values[b * l_n * s_n + l * s_n + s] = v;
            }
        }
    }
    let wavelengths = header
        .wavelengths_nm()
        .unwrap_or_else(|| (1..=b_n).map(|b| b as f64).collect());
    let units = match header.extra_value(UNITS_KEY) {
        Some(t) => t.parse::<UnitsTag>()?,
        None => UnitsTag::Radiance,
    };
    let cube = SpectralCube::new(s_n, l_n, b_n, wavelengths, values, units)?;
    match &header.bad_band_multiplier {
        Some(bbl) => cube.with_bad_band_mask(bbl.iter().map(|&b| b == 1).collect()),
        None => Ok(cube),
    }
}

/// Header describing `cube` stored with the given layout.
pub fn header_for_cube(
    cube: &SpectralCube,
    interleave: Interleave,
    data_type: DataType,
    byte_order: ByteOrder,
) -> EnviHeader {
    let mut h = EnviHeader::new(cube.samples(), cube.lines(), cube.bands(), interleave, data_type);
    h.byte_order = byte_order;
    h.wavelengths = Some(cube.wavelengths().to_vec());
    h.bad_band_multiplier = Some(cube.bad_band_mask().iter().map(|&k| k as u8).collect());
    h.set_extra("wavelength units", "Nanometers");
    h.set_extra(UNITS_KEY, cube.units().as_str());
    h
}

/// Serialize a cube: returns (header text, payload bytes).
pub fn write_cube(
    cube: &SpectralCube,
    interleave: Interleave,
    data_type: DataType,
    byte_order: ByteOrder,
) -> Result<(String, Vec<u8>)> {
    let header = header_for_cube(cube, interleave, data_type, byte_order);
    let (s_n, l_n, b_n) = (cube.samples(), cube.lines(), cube.bands());
    let mut bytes = Vec::with_capacity(header.payload_len());
    // Walk the file order directly so the output is written sequentially.
    let total = s_n * l_n * b_n;
    for fi in 0..total {
        let (l, s, b) = match interleave {
            Interleave::Bsq => (fi / s_n % l_n, fi % s_n, fi / (s_n * l_n)),
            Interleave::Bil => (fi / (b_n * s_n), fi % s_n, fi / s_n % b_n),
            Interleave::Bip => (fi / (s_n * b_n), fi / b_n % s_n, fi % b_n),
        };
        encode(data_type, byte_order, cube.get(l, s, b), &mut bytes)?;
    }
    Ok((header.to_text(), bytes))
}

/// Locate the payload file belonging to a `.hdr` path.
pub fn data_file_for(header_path: &Path) -> Option<PathBuf> {
    let stem = header_path.with_extension("");
    let mut candidates = vec![stem.clone()];
    for ext in ["img", "dat", "bil", "bsq", "bip", "raw"] {
        candidates.push(stem.with_extension(ext));
    }
    candidates.into_iter().find(|p| p.is_file() && p != header_path)
}

/// Read a header file and its payload.
pub fn read_envi(header_path: &Path, data_path: Option<&Path>) -> Result<SpectralCube> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header = parse_envi_header(&text)?;
    let data_path = match data_path {
        Some(p) => p.to_path_buf(),
        None => data_file_for(header_path).ok_or_else(|| {
            Error::io(
                header_path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no payload file next to header"),
            )
        })?,
    };
    let raw = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    read_cube(&header, &raw)
}

/// Write `<base>.hdr` and `<base>.img`.
pub fn write_envi(
    cube: &SpectralCube,
    base: &Path,
    interleave: Interleave,
    data_type: DataType,
) -> Result<()> {
    let (text, bytes) = write_cube(cube, interleave, data_type, ByteOrder::Little)?;
    let hdr = base.with_extension("hdr");
    let img = base.with_extension("img");
    fs::write(&hdr, text).map_err(|e| Error::io(&hdr, e))?;
    fs::write(&img, bytes).map_err(|e| Error::io(&img, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f32_bytes(vals: &[f32]) -> Vec<u8> {
        vals.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn single_pixel_bsq() {
        let h = EnviHeader::new(1, 1, 2, Interleave::Bsq, DataType::F32);
        let cube = read_cube(&h, &f32_bytes(&[1.0, 2.0])).unwrap();
        assert_eq!(cube.pixel(0, 0), vec![1.0, 2.0]);
    }

    #[test]
    fn interleave_is_layout_only() {
        // 2 samples, 1 line, 2 bands: pixel0 = (1, 3), pixel1 = (2, 4)
        let bsq = [1.0f32, 2.0, 3.0, 4.0];
        let bil = [1.0f32, 2.0, 3.0, 4.0];
        let bip = [1.0f32, 3.0, 2.0, 4.0];
        let cubes: Vec<_> = [(Interleave::Bsq, bsq), (Interleave::Bil, bil), (Interleave::Bip, bip)]
            .into_iter()
            .map(|(il, data)| {
                let h = EnviHeader::new(2, 1, 2, il, DataType::F32);
                read_cube(&h, &f32_bytes(&data)).unwrap()
            })
            .collect();
        assert_eq!(cubes[0], cubes[1]);
        assert_eq!(cubes[0], cubes[2]);
        assert_eq!(cubes[0].pixel(0, 1), vec![2.0, 4.0]);
    }

    #[test]
    fn truncated_payload() {
        let h = EnviHeader::new(1, 1, 2, Interleave::Bsq, DataType::F32);
        assert!(matches!(
            read_cube(&h, &f32_bytes(&[1.0])[..3]),
            Err(Error::SizeMismatch(_))
        ));
    }

    #[test]
    fn header_offset_and_big_endian() {
        let mut h = EnviHeader::new(1, 1, 2, Interleave::Bip, DataType::I16);
        h.header_offset = 3;
        h.byte_order = ByteOrder::Big;
        let mut raw = vec![9, 9, 9];
        raw.extend_from_slice(&(-5i16).to_be_bytes());
        raw.extend_from_slice(&300i16.to_be_bytes());
        let cube = read_cube(&h, &raw).unwrap();
        assert_eq!(cube.pixel(0, 0), vec![-5.0, 300.0]);
    }

    #[test]
    fn nan_payload_rejected() {
        let h = EnviHeader::new(1, 1, 1, Interleave::Bsq, DataType::F64);
        assert!(read_cube(&h, &f64::NAN.to_le_bytes()).is_err());
    }

    #[test]
    fn uint16_range_error() {
        let cube = SpectralCube::new(1, 1, 1, vec![500.0], vec![70000.0], UnitsTag::Radiance).unwrap();
        let err = write_cube(&cube, Interleave::Bsq, DataType::U16, ByteOrder::Little).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
    }

    #[test]
    fn write_read_write_is_byte_identical() {
        let h = EnviHeader::new(3, 2, 4, Interleave::Bil, DataType::F32);
        let raw: Vec<u8> = f32_bytes(&(0..24).map(|i| i as f32 * 0.25 - 1.0).collect::<Vec<_>>());
        let cube = read_cube(&h, &raw).unwrap();
        let (_, out) = write_cube(&cube, Interleave::Bil, DataType::F32, ByteOrder::Little).unwrap();
        assert_eq!(out, raw);
    }

    #[test]
    fn bsq_to_bil_and_back() {
        // Brute-force permutation oracle on a 3x2x4 cube.
        let (s_n, l_n, b_n) = (3usize, 2usize, 4usize);
        let bsq: Vec<f32> = (0..24).map(|i| i as f32 + 0.5).collect();
        let h = EnviHeader::new(s_n, l_n, b_n, Interleave::Bsq, DataType::F32);
        let cube = read_cube(&h, &f32_bytes(&bsq)).unwrap();
        let (_, bil_bytes) = write_cube(&cube, Interleave::Bil, DataType::F32, ByteOrder::Little).unwrap();

        let mut expected_bil = vec![0f32; 24];
        for l in 0..l_n {
            for b in 0..b_n {
                for s in 0..s_n {
                    expected_bil[(l * b_n + b) * s_n + s] = bsq[(b * l_n + l) * s_n + s];
                }
            }
        }
        assert_eq!(bil_bytes, f32_bytes(&expected_bil));

        let hb = EnviHeader::new(s_n, l_n, b_n, Interleave::Bil, DataType::F32);
        let back = read_cube(&hb, &bil_bytes).unwrap();
        let (_, bsq_again) = write_cube(&back, Interleave::Bsq, DataType::F32, ByteOrder::Little).unwrap();
        assert_eq!(bsq_again, f32_bytes(&bsq));
    }

    #[test]
    fn units_and_mask_survive_header() {
        let cube = SpectralCube::new(1, 1, 3, vec![400.0, 500.0, 600.0], vec![0.1, 0.2, 0.3], UnitsTag::Reflectance)
            .unwrap()
            .with_bad_band_mask(vec![true, false, true])
            .unwrap();
        let (text, bytes) = write_cube(&cube, Interleave::Bip, DataType::F64, ByteOrder::Big).unwrap();
        let h = parse_envi_header(&text).unwrap();
        let back = read_cube(&h, &bytes).unwrap();
        assert_eq!(back, cube);
    }
}
