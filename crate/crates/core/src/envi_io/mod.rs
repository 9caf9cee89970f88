//! ENVI headers, binary cubes (BSQ/BIL/BIP) and spectral-library CSVs.

mod header;
mod library;
mod raster;

pub use header::{parse_envi_header, ByteOrder, DataType, EnviHeader, Interleave};
pub use library::{
    read_spectral_library, read_spectral_library_file, write_spectral_library, SpectralLibrary,
    SpectrumRecord,
};
pub use raster::{
    data_file_for, header_for_cube, read_cube, read_envi, write_cube, write_envi,
};
