//! Portable graymap (P2 ASCII / P5 binary, 8- or 16-bit) reading and writing.

use std::fs;
use std::path::Path;

use super::GrayImage;
use crate::{Error, Result};

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes)
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    max_level: u16,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let bad = |m: &str| Error::InvalidImage(format!("pgm: {m}"));
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'2' | b'5') {
        return Err(bad("expected P2 or P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed header"))?;
    }
    // Exactly one whitespace byte separates the header from binary data.
    pos += 1;
    let [width, height, max] = fields;
    if max == 0 || max > 65535 {
        return Err(bad("max value must be in 1..=65535"));
    }
    Ok(Header { magic: [bytes[0], bytes[1]], width, height, max_level: max as u16, data_start: pos })
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    let n = h.width * h.height;
    let body = bytes.get(h.data_start..).unwrap_or(&[]);
    let pixels: Vec<u16> = if h.magic[1] == b'5' {
        let wide = h.max_level > 255;
        let need = if wide { 2 * n } else { n };
        if body.len() < need {
            return Err(Error::InvalidImage("pgm: truncated pixel data".into()));
        }
        if wide {
            body[..need].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        } else {
            body[..n].iter().map(|&b| b as u16).collect()
        }
    } else {
        let text = std::str::from_utf8(body).map_err(|_| Error::InvalidImage("pgm: non-ascii P2 body".into()))?;
        let px: Vec<u16> = text
            .split_ascii_whitespace()
            .map(|t| t.parse::<u16>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidImage("pgm: bad ascii pixel".into()))?;
        if px.len() < n {
            return Err(Error::InvalidImage("pgm: truncated pixel data".into()));
        }
        px[..n].to_vec()
    };
    GrayImage::new(h.width, h.height, h.max_level, pixels)
}

/// Binary P5 encoding.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), img.max_level()).into_bytes();
    if img.max_level() > 255 {
        for &p in img.pixels() {
            out.extend_from_slice(&p.to_be_bytes());
        }
    } else {
        out.extend(img.pixels().iter().map(|&p| p as u8));
    }
    out
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_with_comment() {
        let img = parse_pgm(b"P2\n# c\n3 2\n9\n0 1 2\n3 4 9\n").unwrap();
        assert_eq!((img.width(), img.height(), img.max_level()), (3, 2, 9));
        assert_eq!(img.pixels(), &[0, 1, 2, 3, 4, 9]);
    }

    #[test]
    fn binary_round_trips_8_and_16_bit() {
        for max in [255u16, 4095] {
            let px: Vec<u16> = (0..12).map(|i| (i * 97 % (max as usize + 1)) as u16).collect();
            let img = GrayImage::new(4, 3, max, px).unwrap();
            assert_eq!(parse_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(parse_pgm(b"P5\n4 4\n255\n\0").is_err());
    }
}
