//! Image file I/O.
//!
//! Binary PGM (`P5`, maxval 255) is the interchange format and is written
//! bit-exactly as `P5\n<w> <h>\n255\n<pixels>`. PNG files are accepted on
//! load and converted to 8-bit luminance.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

/// Parses a binary PGM. Comments (`#` to end of line) are allowed in the header.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> std::result::Result<String, String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(bytes)?;
    if magic != "P5" {
        return Err(format!("unsupported magic {magic:?}, expected P5"));
    }
    let mut number = |what: &str| -> std::result::Result<usize, String> {
        let tok = next_token(bytes)?;
        tok.parse::<usize>()
            .map_err(|_| format!("bad {what} {tok:?}"))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(format!("only maxval 255 is supported, got {maxval}"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let data_start = pos + 1;
    let len = width
        .checked_mul(height)
        .ok_or_else(|| "dimensions overflow".to_string())?;
    if width == 0 || height == 0 {
        return Err(format!("empty image {width}x{height}"));
    }
    let data = bytes
        .get(data_start..data_start + len)
        .ok_or_else(|| format!("raster truncated: need {len} bytes"))?;
    GrayImage::new(width, height, data.to_vec()).map_err(|e| e.to_string())
}

pub fn decode_png(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let channels = info.color_type.samples();
    let luma = |px: &[u8]| -> u8 {
        match channels {
            1 | 2 => px[0],
            _ => {
                let y = 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
                crate::imaging::round_to_u8(y)
            }
        }
    };
    let pixels: Vec<u8> = buf.chunks_exact(channels).map(luma).collect();
    GrayImage::new(w, h, pixels).map_err(|e| e.to_string())
}

/// Loads a PGM or PNG file, sniffing the format from its leading bytes.
pub fn read_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes)
    } else {
        decode_pgm(&bytes)
    };
    decoded.map_err(|reason| Error::Decode {
        path: path.to_path_buf(),
        reason,
    })
}

/// True for file names this crate knows how to load.
pub fn is_supported_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pgm_layout_is_exact() {
        let img = GrayImage::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 1, 2, 253, 254, 255]);
    }

    #[test]
    fn pgm_header_comments_and_errors() {
        let bytes = b"P5 # made by hand\n2 1\n# maxval next\n255\n\x07\x09";
        let img = decode_pgm(bytes).unwrap();
        assert_eq!(img.pixels(), &[7, 9]);

        assert!(decode_pgm(b"P2\n1 1\n255\n1").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x01").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x01").is_err());
        assert!(decode_pgm(b"").is_err());
        assert!(decode_pgm(b"P5\n0 4\n255\n").is_err());
    }

    #[test]
    fn png_gray_and_rgb_load() {
        let encode = |color: png::ColorType, data: &[u8]| {
            let mut out = Vec::new();
            {
                let mut enc = png::Encoder::new(&mut out, 2, 1);
                enc.set_color(color);
                enc.set_depth(png::BitDepth::Eight);
                let mut w = enc.write_header().unwrap();
                w.write_image_data(data).unwrap();
            }
            out
        };
        let g = decode_png(&encode(png::ColorType::Grayscale, &[12, 250])).unwrap();
        assert_eq!(g.pixels(), &[12, 250]);
        let c = decode_png(&encode(png::ColorType::Rgb, &[255, 255, 255, 0, 0, 0])).unwrap();
        assert_eq!(c.pixels(), &[255, 0]);
    }

    #[test]
    fn read_image_reports_decode_failure() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.pgm");
        std::fs::write(&p, b"not an image").unwrap();
        assert!(matches!(read_image(&p), Err(Error::Decode { .. })));
        assert!(matches!(read_image(dir.path().join("absent.pgm")), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn pgm_roundtrip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let img = GrayImage::from_fn(w, h, |x, y| (seed.wrapping_mul(31 + x as u64 * 7 + y as u64 * 131) >> 13) as u8);
            prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }
}
