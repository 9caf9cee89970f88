use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kv::{self, Entry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

impl Interleave {
    pub const ALL: [Interleave; 3] = [Interleave::Bsq, Interleave::Bil, Interleave::Bip];

    pub fn as_str(self) -> &'static str {
        match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        }
    }
}

impl fmt::Display for Interleave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Interleave {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bsq" => Ok(Interleave::Bsq),
            "bil" => Ok(Interleave::Bil),
            "bip" => Ok(Interleave::Bip),
            other => Err(Error::Parse(format!("unknown interleave {other:?}"))),
        }
    }
}

/// ENVI `data type` codes supported by the reader and writer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataType {
    U8,
    I16,
    I32,
    F32,
    F64,
    U16,
    U32,
}

impl DataType {
    pub const ALL: [DataType; 7] = [
        DataType::U8,
        DataType::I16,
        DataType::I32,
        DataType::F32,
        DataType::F64,
        DataType::U16,
        DataType::U32,
    ];

    pub fn code(self) -> u32 {
        match self {
            DataType::U8 => 1,
            DataType::I16 => 2,
            DataType::I32 => 3,
            DataType::F32 => 4,
            DataType::F64 => 5,
            DataType::U16 => 12,
            DataType::U32 => 13,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        Ok(match code {
            1 => DataType::U8,
            2 => DataType::I16,
            3 => DataType::I32,
            4 => DataType::F32,
            5 => DataType::F64,
            12 => DataType::U16,
            13 => DataType::U32,
            other => return Err(Error::Parse(format!("unsupported data type code {other}"))),
        })
    }

    pub fn size(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 | DataType::U16 => 2,
            DataType::I32 | DataType::U32 | DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, DataType::F32 | DataType::F64)
    }

    /// Inclusive value range of an integer type.
    pub fn int_range(self) -> Option<(f64, f64)> {
        match self {
            DataType::U8 => Some((0.0, u8::MAX as f64)),
            DataType::I16 => Some((i16::MIN as f64, i16::MAX as f64)),
            DataType::I32 => Some((i32::MIN as f64, i32::MAX as f64)),
            DataType::U16 => Some((0.0, u16::MAX as f64)),
            DataType::U32 => Some((0.0, u32::MAX as f64)),
            DataType::F32 | DataType::F64 => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ByteOrder {
    Little,
    Big,
}

impl ByteOrder {
    pub fn code(self) -> u8 {
        match self {
            ByteOrder::Little => 0,
            ByteOrder::Big => 1,
        }
    }
}

/// Parsed ENVI header.
#[derive(Debug, Clone, PartialEq)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub interleave: Interleave,
    pub data_type: DataType,
    pub byte_order: ByteOrder,
    /// Bytes to skip before the payload.
    pub header_offset: usize,
    /// Band centers, in the header's own wavelength units.
    pub wavelengths: Option<Vec<f64>>,
    pub fwhm: Option<Vec<f64>>,
    /// `bbl` entries, 1 = usable.
    pub bad_band_multiplier: Option<Vec<u8>>,
    pub description: String,
    /// Unrecognized keys with raw values, in file order.
    pub extra: Vec<(String, String)>,
}

impl EnviHeader {
    pub fn new(
        samples: usize,
        lines: usize,
        bands: usize,
        interleave: Interleave,
        data_type: DataType,
    ) -> Self {
        Self {
            samples,
            lines,
            bands,
            interleave,
            data_type,
            byte_order: ByteOrder::Little,
            header_offset: 0,
            wavelengths: None,
            fwhm: None,
            bad_band_multiplier: None,
            description: String::new(),
            extra: Vec::new(),
        }
    }

    pub fn payload_len(&self) -> usize {
        self.samples * self.lines * self.bands * self.data_type.size()
    }

    /// Look up an `extra` value by normalized key.
    pub fn extra_value(&self, key: &str) -> Option<&str> {
        let key = kv::normalize_key(key);
        self.extra
            .iter()
            .find(|(k, _)| kv::normalize_key(k) == key)
            .map(|(_, v)| v.as_str())
    }

    /// Insert or replace an `extra` entry.
    pub fn set_extra(&mut self, key: &str, value: impl Into<String>) {
        let norm = kv::normalize_key(key);
        let value = value.into();
        match self.extra.iter_mut().find(|(k, _)| kv::normalize_key(k) == norm) {
            Some(slot) => slot.1 = value,
            None => self.extra.push((key.to_string(), value)),
        }
    }

    /// Wavelengths converted to nanometres using `wavelength units`.
    pub fn wavelengths_nm(&self) -> Option<Vec<f64>> {
        let wl = self.wavelengths.as_ref()?;
        let factor = match self
            .extra_value("wavelength units")
            .map(|u| u.trim().to_ascii_lowercase())
            .as_deref()
        {
            Some("micrometers") | Some("micrometer") | Some("microns") | Some("um") => 1000.0,
            _ => 1.0,
        };
        Some(wl.iter().map(|w| w * factor).collect())
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.lines == 0 || self.bands == 0 {
            return Err(Error::Parse(format!(
                "dimensions must be positive, got samples={} lines={} bands={}",
                self.samples, self.lines, self.bands
            )));
        }
        let check = |name: &str, len: Option<usize>| -> Result<()> {
            match len {
                Some(n) if n != self.bands => Err(Error::SizeMismatch(format!(
                    "{name} list has {n} entries, expected bands = {}",
                    self.bands
                ))),
                _ => Ok(()),
            }
        };
        check("wavelength", self.wavelengths.as_ref().map(Vec::len))?;
        check("fwhm", self.fwhm.as_ref().map(Vec::len))?;
        check("bbl", self.bad_band_multiplier.as_ref().map(Vec::len))?;
        Ok(())
    }

    /// Serialize to header text. Recognized keys come first, then `extra`
    /// entries in their original order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("ENVI\n");
        out.push_str(&format!("description = {{{}}}\n", self.description));
        out.push_str(&format!("samples = {}\n", self.samples));
        out.push_str(&format!("lines = {}\n", self.lines));
        out.push_str(&format!("bands = {}\n", self.bands));
        out.push_str(&format!("header offset = {}\n", self.header_offset));
        out.push_str(&format!("data type = {}\n", self.data_type.code()));
        out.push_str(&format!("interleave = {}\n", self.interleave));
        out.push_str(&format!("byte order = {}\n", self.byte_order.code()));
        if let Some(wl) = &self.wavelengths {
            out.push_str(&format!("wavelength = {}\n", kv::format_real_list(wl, 6)));
        }
        if let Some(fwhm) = &self.fwhm {
            out.push_str(&format!("fwhm = {}\n", kv::format_real_list(fwhm, 6)));
        }
        if let Some(bbl) = &self.bad_band_multiplier {
            let as_real: Vec<f64> = bbl.iter().map(|&b| b as f64).collect();
            out.push_str(&format!("bbl = {}\n", kv::format_real_list(&as_real, 20)));
        }
        for (k, v) in &self.extra {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("{key}: unparseable number {:?}", value.trim())))
}

/// Parse ENVI header text.
pub fn parse_envi_header(text: &str) -> Result<EnviHeader> {
    let mut lines = text.lines();
    let first = lines.by_ref().find(|l| !l.trim().is_empty());
    if first.map(str::trim) != Some("ENVI") {
        return Err(Error::Parse("missing `ENVI` magic token on first line".into()));
    }
    let body: Vec<&str> = lines.collect();
    let entries = kv::parse_entries(&body.join("\n"))?;

    let mut samples = None;
    let mut lines_n = None;
    let mut bands = None;
    let mut data_type = None;
    let mut interleave = None;
    let mut byte_order = ByteOrder::Little;
    let mut header_offset = 0;
    let mut wavelengths = None;
    let mut fwhm = None;
    let mut bbl = None;
    let mut description = String::new();
    let mut extra = Vec::new();

    for Entry { key, value } in entries {
        match kv::normalize_key(&key).as_str() {
            "samples" => samples = Some(parse_usize(&key, &value)?),
            "lines" => lines_n = Some(parse_usize(&key, &value)?),
            "bands" => bands = Some(parse_usize(&key, &value)?),
            "header offset" => header_offset = parse_usize(&key, &value)?,
            "data type" => {
                let code = parse_usize(&key, &value)? as u32;
                data_type = Some(DataType::from_code(code)?);
            }
            "interleave" => interleave = Some(value.parse::<Interleave>()?),
            "byte order" => {
                byte_order = match parse_usize(&key, &value)? {
                    0 => ByteOrder::Little,
                    1 => ByteOrder::Big,
                    other => {
                        return Err(Error::Parse(format!("byte order must be 0 or 1, got {other}")))
                    }
                }
            }
            "wavelength" => wavelengths = Some(kv::parse_real_list(&key, &value)?),
            "fwhm" => fwhm = Some(kv::parse_real_list(&key, &value)?),
            "bbl" => {
                let raw = kv::parse_real_list(&key, &value)?;
                let bits = raw
                    .iter()
                    .map(|&v| {
                        if v == 0.0 {
                            Ok(0u8)
                        } else if v == 1.0 {
                            Ok(1u8)
                        } else {
                            Err(Error::Parse(format!("bbl entries must be 0 or 1, got {v}")))
                        }
                    })
                    .collect::<Result<Vec<u8>>>()?;
                bbl = Some(bits);
            }
            "description" => {
                description = kv::brace_inner(&value)
                    .map(str::to_string)
                    .unwrap_or_else(|| value.trim().to_string());
            }
            _ => extra.push((key, value)),
        }
    }

    let missing = |name: &str| Error::Parse(format!("missing required key `{name}`"));
    let header = EnviHeader {
        samples: samples.ok_or_else(|| missing("samples"))?,
        lines: lines_n.ok_or_else(|| missing("lines"))?,
        bands: bands.ok_or_else(|| missing("bands"))?,
        interleave: interleave.ok_or_else(|| missing("interleave"))?,
        data_type: data_type.ok_or_else(|| missing("data type"))?,
        byte_order,
        header_offset,
        wavelengths,
        fwhm,
        bad_band_multiplier: bbl,
        description,
        extra,
    };
    header.validate()?;
    Ok(header)
}
