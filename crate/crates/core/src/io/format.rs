use std::path::Path;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::estimate::MultiscaleEstimates;
use crate::scene::HistogramCube;

pub const CUBE_MAGIC: &[u8; 4] = b"SPLH";
pub const DEPTH_MAGIC: &[u8; 4] = b"SPDM";
pub const MULTISCALE_MAGIC: &[u8; 4] = b"SPMS";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthUnits {
    Bins,
    Meters,
}

impl DepthUnits {
    fn tag(self) -> u8 {
        match self {
            DepthUnits::Bins => 0,
            DepthUnits::Meters => 1,
        }
    }
}

/// Depth (or uncertainty) map as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub units: DepthUnits,
    pub values: Array2<f32>,
}

impl DepthMap {
    pub fn from_f64(values: &Array2<f64>, units: DepthUnits) -> Self {
        DepthMap {
            units,
            values: values.mapv(|v| v as f32),
        }
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.values.mapv(f64::from)
    }
}

struct Reader<'a> {
    format: &'static str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(format: &'static str, bytes: &'a [u8]) -> Self {
        Reader { format, bytes, pos: 0 }
    }

    fn err(&self, field: &'static str, detail: String) -> Error {
        Error::Format {
            format: self.format,
            field,
            detail,
        }
    }

    fn take(&mut self, n: usize, field: &'static str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err(
                field,
                format!(
                    "file ends after {} bytes, header needs {}",
                    self.bytes.len(),
                    self.pos + n
                ),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(self.err(
                "magic",
                format!(
                    "expected {:?}, found {:?}",
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(got)
                ),
            ));
        }
        Ok(())
    }

    fn version(&mut self) -> Result<()> {
        let v = self.take(1, "version")?[0];
        if v != FORMAT_VERSION {
            return Err(self.err("version", format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn u32(&mut self, field: &'static str) -> Result<u32> {
        let b = self.take(4, field)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn dim(&mut self, field: &'static str) -> Result<usize> {
        let v = self.u32(field)?;
        if v == 0 {
            return Err(self.err(field, "must be positive".into()));
        }
        Ok(v as usize)
    }

    /// Remaining bytes, which must be exactly `count` 4-byte words.
    fn payload(&mut self, count: usize) -> Result<&'a [u8]> {
        let expected = count.checked_mul(4).ok_or_else(|| self.err("payload", "size overflows".into()))?;
        let found = self.bytes.len() - self.pos;
        if found != expected {
            return Err(self.err(
                "payload",
                format!("byte length mismatch: expected {expected} bytes, found {found}"),
            ));
        }
        let out = &self.bytes[self.pos..];
        self.pos = self.bytes.len();
        Ok(out)
    }
}

fn words(bytes: &[u8]) -> impl Iterator<Item = [u8; 4]> + '_ {
    bytes.chunks_exact(4).map(|c| c.try_into().expect("4 bytes"))
}

pub fn encode_cube(cube: &HistogramCube) -> Vec<u8> {
    let (h, w, t) = cube.dim();
    let mut out = Vec::with_capacity(17 + h * w * t * 4);
    out.extend_from_slice(CUBE_MAGIC);
    out.push(FORMAT_VERSION);
    for d in [h, w, t] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &c in cube.counts().iter() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn decode_cube(bytes: &[u8]) -> Result<HistogramCube> {
    let mut rd = Reader::new("cube", bytes);
    rd.magic(CUBE_MAGIC)?;
    rd.version()?;
    let h = rd.dim("height")?;
    let w = rd.dim("width")?;
    let t = rd.dim("bins")?;
    let payload = rd.payload(h * w * t)?;
    let counts: Vec<u32> = words(payload).map(u32::from_le_bytes).collect();
    HistogramCube::new(Array3::from_shape_vec((h, w, t), counts).expect("length checked"))
}

pub fn encode_depth_map(map: &DepthMap) -> Vec<u8> {
    let (h, w) = map.values.dim();
    let mut out = Vec::with_capacity(14 + h * w * 4);
    out.extend_from_slice(DEPTH_MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.push(map.units.tag());
    for &v in map.values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_depth_map(bytes: &[u8]) -> Result<DepthMap> {
    let mut rd = Reader::new("depth map", bytes);
    rd.magic(DEPTH_MAGIC)?;
    rd.version()?;
    let h = rd.dim("height")?;
    let w = rd.dim("width")?;
    let units = match rd.take(1, "units")?[0] {
        0 => DepthUnits::Bins,
        1 => DepthUnits::Meters,
        other => return Err(rd.err("units", format!("unknown units tag {other}"))),
    };
    let payload = rd.payload(h * w)?;
    let values: Vec<f32> = words(payload).map(f32::from_le_bytes).collect();
    Ok(DepthMap {
        units,
        values: Array2::from_shape_vec((h, w), values).expect("length checked"),
    })
}

pub fn encode_multiscale(est: &MultiscaleEstimates) -> Vec<u8> {
    let (l, h, w) = est.d_ml.dim();
    let mut out = Vec::with_capacity(21 + 4 * l * h * w * 4);
    out.extend_from_slice(MULTISCALE_MAGIC);
    out.push(FORMAT_VERSION);
    for d in [l, h, w, est.bins] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for field in [&est.d_ml, &est.s_bar, &est.sigma2, &est.b_hat] {
        for &v in field.iter() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Decode a multiscale dump. Values come back at `f32` precision.
pub fn decode_multiscale(bytes: &[u8]) -> Result<MultiscaleEstimates> {
    let mut rd = Reader::new("multiscale", bytes);
    rd.magic(MULTISCALE_MAGIC)?;
    rd.version()?;
    let l = rd.dim("levels")?;
    let h = rd.dim("height")?;
    let w = rd.dim("width")?;
    let t = rd.dim("bins")?;
    let n = l * h * w;
    let payload = rd.payload(4 * n)?;
    let all: Vec<f64> = words(payload).map(|b| f32::from_le_bytes(b) as f64).collect();
    let field = |i: usize| Array3::from_shape_vec((l, h, w), all[i * n..(i + 1) * n].to_vec()).expect("length");
    MultiscaleEstimates::new(field(0), field(1), field(2), field(3), t)
}

pub fn write_cube(path: &Path, cube: &HistogramCube) -> Result<()> {
    std::fs::write(path, encode_cube(cube))?;
    Ok(())
}

pub fn read_cube(path: &Path) -> Result<HistogramCube> {
    decode_cube(&std::fs::read(path)?)
}

pub fn write_depth_map(path: &Path, map: &DepthMap) -> Result<()> {
    std::fs::write(path, encode_depth_map(map))?;
    Ok(())
}

pub fn read_depth_map(path: &Path) -> Result<DepthMap> {
    decode_depth_map(&std::fs::read(path)?)
}

pub fn write_multiscale(path: &Path, est: &MultiscaleEstimates) -> Result<()> {
    std::fs::write(path, encode_multiscale(est))?;
    Ok(())
}

pub fn read_multiscale(path: &Path) -> Result<MultiscaleEstimates> {
    decode_multiscale(&std::fs::read(path)?)
}
