use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Encodes a 1- or 3-channel image as little-endian PFM (scale `-1.0`).
///
/// PFM stores scanlines bottom-to-top with interleaved channels.
pub fn encode_pfm(img: &Image) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        1 => "Pf",
        3 => "PF",
        c => return Err(Error::invalid(format!("PFM supports 1 or 3 channels, got {c}"))),
    };
    let (c, h, w) = img.shape();
    let header = format!("{magic}\n{w} {h}\n-1.0\n");
    let mut out = Vec::with_capacity(header.len() + c * h * w * 4);
    out.extend_from_slice(header.as_bytes());
    for y in (0..h).rev() {
        for x in 0..w {
            for ch in 0..c {
                out.extend_from_slice(&img.get(ch, y, x).to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_pfm(bytes: &[u8], path: &Path) -> Result<Image> {
    let mut pos = 0;
    let mut next_token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "truncated PFM header"));
        }
        let tok = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        Ok(tok)
    };
    let channels = match next_token()?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::format(path, format!("bad PFM magic {other:?}"))),
    };
    let parse_dim = |s: String| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::format(path, format!("bad PFM dimension {s:?}")))
    };
    let width = parse_dim(next_token()?)?;
    let height = parse_dim(next_token()?)?;
    let scale_tok = next_token()?;
    let scale: f32 = scale_tok
        .parse()
        .map_err(|_| Error::format(path, format!("bad PFM scale {scale_tok:?}")))?;
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let little_endian = scale < 0.0;
    let n = width * height * channels;
    let raster = bytes
        .get(pos..pos + n * 4)
        .ok_or_else(|| Error::format(path, "truncated PFM raster"))?;
    let mut img = Image::zeros(channels, height, width);
    for (i, chunk) in raster.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        let ch = i % channels;
        let x = (i / channels) % width;
        let row = i / (channels * width);
        img.set(ch, height - 1 - row, x, v);
    }
    Ok(img)
}

pub fn write_pfm(path: &Path, img: &Image) -> Result<()> {
    let bytes = encode_pfm(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_little_endian() {
        let img = Image::filled(3, 2, 3, 1.5);
        let bytes = encode_pfm(&img).unwrap();
        assert!(bytes.starts_with(b"PF\n3 2\n-1.0\n"));
        assert_eq!(bytes.len(), 12 + 3 * 2 * 3 * 4);
    }

    #[test]
    fn rows_are_stored_bottom_up() {
        let img = Image::from_fn(1, 2, 1, |_, y, _| y as f32);
        let bytes = encode_pfm(&img).unwrap();
        let first = f32::from_le_bytes(bytes[12..16].try_into().unwrap());
        assert_eq!(first, 1.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_pfm(b"P6\n1 1\n255\n", Path::new("x.pfm")).is_err());
        assert!(decode_pfm(b"PF\n2 2\n-1.0\n\0\0", Path::new("x.pfm")).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            channels in prop::sample::select(vec![1usize, 3]),
            h in 1usize..6,
            w in 1usize..6,
            seed in any::<u64>(),
        ) {
            let img = Image::from_fn(channels, h, w, |c, y, x| {
                let k = seed.wrapping_mul(6364136223846793005).wrapping_add((c * 97 + y * 13 + x) as u64);
                f32::from_bits((k >> 33) as u32 & 0x7f7f_ffff)
            });
            let back = decode_pfm(&encode_pfm(&img).unwrap(), Path::new("x.pfm")).unwrap();
            let a: Vec<u32> = img.data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
