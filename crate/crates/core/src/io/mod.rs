//! Image file formats: little-endian PFM for linear HDR data and 8-bit PNG
//! for LDR data and previews.

mod pfm;
mod png;

pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use png::{read_png, write_png};

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Reads a `.pfm` or `.png` file based on its extension. PNG values are
/// mapped to `[0, 1]` and treated as linear.
pub fn read_image(path: &Path) -> Result<Image> {
    match extension(path).as_deref() {
        Some("pfm") => read_pfm(path),
        Some("png") => read_png(path),
        _ => Err(Error::format(path, "expected a .pfm or .png file")),
    }
}

pub(crate) fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}
