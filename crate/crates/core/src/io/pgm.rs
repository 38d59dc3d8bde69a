//! Portable graymap input (P2 ASCII and P5 binary, 8 or 16 bit).

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub values: Array2<u16>,
    pub maxval: u16,
}

fn pgm_err(field: &'static str, detail: String) -> Error {
    Error::Format {
        format: "pgm",
        field,
        detail,
    }
}

/// Splits header tokens, skipping `#` comments; returns the byte offset just
/// past the single whitespace byte that ends the last token.
fn header_tokens(bytes: &[u8], wanted: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < wanted {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(pgm_err("header", "unexpected end of file".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    Ok((tokens, (i + 1).min(bytes.len())))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let (tok, body) = header_tokens(bytes, 4)?;
    let binary = match tok[0].as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(pgm_err("magic", format!("expected P2 or P5, found {other:?}"))),
    };
    let parse = |s: &str, field: &'static str| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| pgm_err(field, format!("bad value {s:?}")))
    };
    let w = parse(&tok[1], "width")?;
    let h = parse(&tok[2], "height")?;
    let maxval = parse(&tok[3], "maxval")?;
    if maxval > u16::MAX as usize {
        return Err(pgm_err("maxval", format!("{maxval} exceeds 65535")));
    }
    let n = w * h;
    let values: Vec<u16> = if binary {
        let data = &bytes[body..];
        let per = if maxval < 256 { 1 } else { 2 };
        if data.len() < n * per {
            return Err(pgm_err(
                "payload",
                format!("byte length mismatch: expected {} bytes, found {}", n * per, data.len()),
            ));
        }
        if per == 1 {
            data[..n].iter().map(|&b| b as u16).collect()
        } else {
            data[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        }
    } else {
        let text = String::from_utf8_lossy(&bytes[body..]);
        let vals: Vec<u16> = text
            .split_whitespace()
            .take(n)
            .map(|s| s.parse::<u16>().map_err(|_| pgm_err("payload", format!("bad sample {s:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() != n {
            return Err(pgm_err("payload", format!("expected {n} samples, found {}", vals.len())));
        }
        vals
    };
    if let Some(v) = values.iter().find(|&&v| v as usize > maxval) {
        return Err(pgm_err("payload", format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(GrayImage {
        values: Array2::from_shape_vec((h, w), values).expect("length checked"),
        maxval: maxval as u16,
    })
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    decode_pgm(&std::fs::read(path)?)
}

/// Gray levels mapped linearly onto depths in `[0, 0.8 T]`.
pub fn depth_from_gray(img: &GrayImage, bins: usize) -> Array2<f64> {
    let top = 0.8 * bins as f64;
    img.values.mapv(|v| v as f64 / img.maxval as f64 * top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_pgm() {
        let img = decode_pgm(b"P2\n# comment\n3 2\n10\n0 5 10\n1 2 3\n").unwrap();
        assert_eq!(img.values.dim(), (2, 3));
        assert_eq!(img.values[[0, 2]], 10);
        assert_eq!(img.values[[1, 0]], 1);
        let d = depth_from_gray(&img, 100);
        assert_eq!(d[[0, 2]], 80.0);
        assert_eq!(d[[0, 1]], 40.0);
    }

    #[test]
    fn binary_8_and_16_bit() {
        let mut b = b"P5 2 1 255\n".to_vec();
        b.extend([0u8, 255]);
        let img = decode_pgm(&b).unwrap();
        assert_eq!(img.values.as_slice().unwrap(), &[0, 255]);

        let mut b = b"P5\n1 2\n65535\n".to_vec();
        b.extend([0x01, 0x02, 0xff, 0xff]);
        let img = decode_pgm(&b).unwrap();
        assert_eq!(img.values.as_slice().unwrap(), &[0x0102, 0xffff]);
    }

    #[test]
    fn malformed_pgm() {
        assert!(decode_pgm(b"P6 1 1 255\n\0\0\0").unwrap_err().to_string().contains("magic"));
        assert!(decode_pgm(b"P5 4 4 255\n\0").unwrap_err().to_string().contains("payload"));
        assert!(decode_pgm(b"P2 2 1 5\n1 9\n").is_err());
        assert!(decode_pgm(b"P2 0 1 5\n").unwrap_err().to_string().contains("width"));
    }
}
