//! File formats.
//!
//! Binary layouts (all integers and floats little-endian, payloads row-major):
//!
//! | file        | header                                                      | payload                        |
//! |-------------|-------------------------------------------------------------|--------------------------------|
//! | cube        | `"SPLH"`, version `u8`, `H u32`, `W u32`, `T u32`           | `H*W*T` `u32`, bin fastest     |
//! | depth map   | `"SPDM"`, version `u8`, `H u32`, `W u32`, units `u8`        | `H*W` `f32`                    |
//! | multiscale  | `"SPMS"`, version `u8`, `L u32`, `H u32`, `W u32`, `T u32`  | `d_ml`, `s_bar`, `sigma2`, `b_hat`, each `L*H*W` `f32` |
//!
//! Depth-map units: 0 = bins, 1 = meters.

mod format;
mod pgm;
mod ply;

pub use format::{
    decode_cube, decode_depth_map, decode_multiscale, encode_cube, encode_depth_map,
    encode_multiscale, read_cube, read_depth_map, read_multiscale, write_cube, write_depth_map,
    write_multiscale, DepthMap, DepthUnits, CUBE_MAGIC, DEPTH_MAGIC, FORMAT_VERSION,
    MULTISCALE_MAGIC,
};
pub use pgm::{decode_pgm, depth_from_gray, read_pgm, GrayImage};
pub use ply::{export_ply, parse_ply, write_ply, PlyCloud};

use std::path::Path;

use crate::error::{Error, Result};
use crate::scene::Irf;

/// Parse a one-column text impulse response. Blank lines and lines starting
/// with `#` are skipped.
pub fn parse_irf(text: &str) -> Result<Irf> {
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Format {
            format: "impulse response",
            field: "sample",
            detail: format!("line {}: cannot parse {line:?}", lineno + 1),
        })?;
        samples.push(v);
    }
    Irf::from_samples(samples)
}

pub fn read_irf(path: &Path) -> Result<Irf> {
    parse_irf(&std::fs::read_to_string(path)?)
}
