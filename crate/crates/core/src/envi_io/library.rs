use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One named reflectance spectrum.
///
/// Resampled records may carry bands outside the source spectrum's range;
/// those are flagged in [`SpectrumRecord::usable`] and excluded from scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    name: String,
    wavelengths: Vec<f64>,
    reflectance: Vec<f64>,
    usable: Vec<bool>,
}

impl SpectrumRecord {
    pub fn new(name: impl Into<String>, wavelengths: Vec<f64>, reflectance: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if wavelengths.len() != reflectance.len() {
            return Err(Error::SizeMismatch(format!(
                "spectrum {name:?}: {} wavelengths vs {} values",
                wavelengths.len(),
                reflectance.len()
            )));
        }
        if let Some(w) = wavelengths.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "spectrum {name:?}: wavelengths not strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if reflectance.iter().chain(&wavelengths).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("spectrum {name:?}: non-finite value")));
        }
        let usable = vec![true; wavelengths.len()];
        Ok(Self {
            name,
            wavelengths,
            reflectance,
            usable,
        })
    }

    /// Record produced by resampling; wavelengths follow the target grid,
    /// which may restart at detector segment boundaries.
    pub(crate) fn resampled(
        name: String,
        wavelengths: Vec<f64>,
        reflectance: Vec<f64>,
        usable: Vec<bool>,
    ) -> Self {
        Self {
            name,
            wavelengths,
            reflectance,
            usable,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn reflectance(&self) -> &[f64] {
        &self.reflectance
    }

    pub fn usable(&self) -> &[bool] {
        &self.usable
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLibrary {
    entries: Vec<SpectrumRecord>,
    source_tag: String,
}

impl SpectralLibrary {
    pub fn new(entries: Vec<SpectrumRecord>, source_tag: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate library entry {:?}", e.name)));
            }
        }
        Ok(Self {
            entries,
            source_tag: source_tag.into(),
        })
    }

    pub fn entries(&self) -> &[SpectrumRecord] {
        &self.entries
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn get(&self, name: &str) -> Option<&SpectrumRecord> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parse the `wavelength_nm,<name1>,<name2>,...` CSV layout.
pub fn read_spectral_library(text: &str) -> Result<SpectralLibrary> {
    parse_library(text, "csv")
}

pub fn read_spectral_library_file(path: &Path) -> Result<SpectralLibrary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tag = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_library(&text, &tag)
}

fn parse_library(text: &str, source_tag: &str) -> Result<SpectralLibrary> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Parse("library CSV needs a wavelength column and at least one spectrum".into()));
    }
    if !headers[0].eq_ignore_ascii_case("wavelength_nm") {
        return Err(Error::Parse(format!(
            "library CSV first column must be `wavelength_nm`, found {:?}",
            &headers[0]
        )));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate library column {n:?}")));
        }
    }

    let mut wavelengths = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::SizeMismatch(format!(
                "library row {} has {} fields, header has {}",
                row_no + 2,
                record.len(),
                headers.len()
            )));
        }
        let mut fields = record.iter().map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::Parse(format!("library row {}: unparseable number {f:?}", row_no + 2)))
        });
        wavelengths.push(fields.next().unwrap()?);
        for (col, field) in columns.iter_mut().zip(fields) {
            col.push(field?);
        }
    }
    let entries = names
        .into_iter()
        .zip(columns)
        .map(|(name, refl)| SpectrumRecord::new(name, wavelengths.clone(), refl))
        .collect::<Result<Vec<_>>>()?;
    SpectralLibrary::new(entries, source_tag)
}

/// Serialize a library whose entries share one wavelength grid.
pub fn write_spectral_library(lib: &SpectralLibrary) -> Result<String> {
    let Some(first) = lib.entries.first() else {
        return Err(Error::InvalidInput("cannot write an empty library".into()));
    };
    let grid = &first.wavelengths;
    if let Some(e) = lib.entries.iter().find(|e| &e.wavelengths != grid) {
        return Err(Error::InvalidInput(format!(
            "entry {:?} does not share the library wavelength grid",
            e.name
        )));
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["wavelength_nm".to_string()];
    header.extend(lib.entries.iter().map(|e| e.name.clone()));
    wtr.write_record(&header)?;
    for (i, w) in grid.iter().enumerate() {
        let mut row = vec![w.to_string()];
        row.extend(lib.entries.iter().map(|e| e.reflectance[i].to_string()));
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
