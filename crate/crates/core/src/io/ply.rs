//! ASCII PLY point clouds from depth maps.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// One vertex per pixel: `x = col`, `y = row`, `z = depth * bin_width`.
///
/// With a confidence map, each vertex also carries a gray level
/// (`red = green = blue`) from `1 / eps` scaled linearly to `[0, 255]`.
pub fn export_ply(depth: &Array2<f64>, eps: Option<&Array2<f64>>, bin_width: f64) -> Result<String> {
    let (h, w) = depth.dim();
    if let Some(e) = eps {
        if e.dim() != (h, w) {
            return Err(Error::DimensionMismatch(format!(
                "depth map is {h}x{w} but uncertainty map is {}x{}",
                e.nrows(),
                e.ncols()
            )));
        }
    }
    let gray = eps.map(confidence_gray);

    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "comment z = depth in bins * {bin_width} m per bin");
    if gray.is_some() {
        out.push_str("comment gray = confidence 1/eps scaled linearly to [0, 255], larger is more certain\n");
    }
    let _ = writeln!(out, "element vertex {}", h * w);
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if gray.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.push_str("end_header\n");
    for ((r, c), &d) in depth.indexed_iter() {
        let z = (d * bin_width) as f32;
        match &gray {
            Some(g) => {
                let v = g[[r, c]];
                let _ = writeln!(out, "{c} {r} {z} {v} {v} {v}");
            }
            None => {
                let _ = writeln!(out, "{c} {r} {z}");
            }
        }
    }
    Ok(out)
}

fn confidence_gray(eps: &Array2<f64>) -> Array2<u8> {
    let conf = eps.mapv(|e| 1.0 / e);
    let lo = conf.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = conf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    conf.mapv(|c| {
        if hi > lo && hi.is_finite() {
            (255.0 * (c - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8
        } else {
            255
        }
    })
}

pub fn write_ply(path: &Path, depth: &Array2<f64>, eps: Option<&Array2<f64>>, bin_width: f64) -> Result<()> {
    std::fs::write(path, export_ply(depth, eps, bin_width)?)?;
    Ok(())
}

/// Vertices parsed back from an ASCII PLY produced by [`export_ply`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlyCloud {
    pub points: Vec<[f32; 3]>,
    pub gray: Option<Vec<u8>>,
}

fn ply_err(field: &'static str, detail: String) -> Error {
    Error::Format {
        format: "ply",
        field,
        detail,
    }
}

pub fn parse_ply(text: &str) -> Result<PlyCloud> {
    let mut lines = text.lines();
    if lines.next() != Some("ply") {
        return Err(ply_err("magic", "first line must be \"ply\"".into()));
    }
    let mut count = None;
    let mut properties = Vec::new();
    loop {
        let line = lines
            .next()
            .ok_or_else(|| ply_err("header", "missing end_header".into()))?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(ply_err("format", format!("only ascii is supported: {line:?}")));
                }
            }
            Some("element") => {
                if tok.next() == Some("vertex") {
                    let n = tok
                        .next()
                        .and_then(|v| v.parse::<usize>().ok())
                        .ok_or_else(|| ply_err("element", format!("bad vertex count: {line:?}")))?;
                    count = Some(n);
                }
            }
            Some("property") => properties.push(tok.last().unwrap_or_default().to_string()),
            Some("end_header") => break,
            _ => {}
        }
    }
    let count = count.ok_or_else(|| ply_err("element", "no vertex element".into()))?;
    let has_gray = properties.iter().any(|p| p == "red");
    let mut points = Vec::with_capacity(count);
    let mut gray = has_gray.then(|| Vec::with_capacity(count));
    for i in 0..count {
        let line = lines
            .next()
            .ok_or_else(|| ply_err("vertex", format!("expected {count} vertices, found {i}")))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != properties.len() {
            return Err(ply_err("vertex", format!("vertex {i} has {} values", vals.len())));
        }
        let f = |j: usize| {
            vals[j]
                .parse::<f32>()
                .map_err(|_| ply_err("vertex", format!("vertex {i}: bad number {:?}", vals[j])))
        };
        points.push([f(0)?, f(1)?, f(2)?]);
        if let Some(g) = gray.as_mut() {
            g.push(
                vals[3]
                    .parse::<u8>()
                    .map_err(|_| ply_err("vertex", format!("vertex {i}: bad color {:?}", vals[3])))?,
            );
        }
    }
    Ok(PlyCloud { points, gray })
}
