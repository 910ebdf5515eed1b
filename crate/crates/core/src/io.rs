//! Image and sample-set persistence.
//!
//! Images: binary PGM (P5, 8 or 16 bit, big-endian samples) and raw
//! little-endian `f32` with a `<file>.json` sidecar holding
//! `{"width", "height", "channel"}`. PGM intensities are normalized to
//! `[0, 1]` on load; the source maxval is kept in the channel label.
//!
//! Samples: CSV with header `x,y,value` and a `<file>.json` sidecar with the
//! grid extent.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Image, Sample, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageFormat {
    Pgm8,
    Pgm16,
    RawF32,
}

impl ImageFormat {
    /// Guesses the format from a file extension (`.pgm` loads either depth).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "pgm" => Some(ImageFormat::Pgm8),
            "f32" | "raw" => Some(ImageFormat::RawF32),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSidecar {
    width: usize,
    height: usize,
    #[serde(default)]
    channel: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridSidecar {
    width: usize,
    height: usize,
}

/// Path of the JSON sidecar accompanying `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_image(path: impl AsRef<Path>, format: ImageFormat) -> Result<Image> {
    let path = path.as_ref();
    match format {
        ImageFormat::Pgm8 | ImageFormat::Pgm16 => load_pgm(path).map(|(img, _)| img),
        ImageFormat::RawF32 => load_raw_f32(path),
    }
}

pub fn save_image(img: &Image, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    if !img.is_finite() {
        return Err(Error::InvalidParameter("cannot save a non-finite image".into()));
    }
    match format {
        ImageFormat::Pgm8 => write(path, &encode_pgm(img, 255)),
        ImageFormat::Pgm16 => write(path, &encode_pgm(img, 65535)),
        ImageFormat::RawF32 => save_raw_f32(img, path),
    }
}

/// Loads a P5 file, returning the normalized image and the file's maxval.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<(Image, u16)> {
    let bytes = read(path.as_ref())?;
    decode_pgm(&bytes)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<(Image, u16)> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::Format("not a binary PGM (missing P5 magic)".into()));
    }
    let width = parse_header_number(bytes, &mut pos, "width")?;
    let height = parse_header_number(bytes, &mut pos, "height")?;
    let maxval = parse_header_number(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Format("PGM header not terminated".into()));
    }
    pos += 1;
    let grid = GridSpec::new(width, height).map_err(|e| Error::Format(e.to_string()))?;
    let bps = if maxval < 256 { 1 } else { 2 };
    let need = grid.len() * bps;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(Error::Format(format!(
            "PGM raster truncated: {} of {need} bytes",
            raster.len()
        )));
    }
    let scale = 1.0 / maxval as f64;
    let data = if bps == 1 {
        raster[..need].iter().map(|&b| b as f64 * scale).collect()
    } else {
        raster[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    let img = Image::new(grid, data, format!("pgm:maxval={maxval}"))?;
    Ok((img, maxval as u16))
}

fn skip_ws_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        if bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        } else if bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    skip_ws_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("unexpected end of PGM header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::Format(format!("bad PGM {what} field")))
}

/// Quantizes with round-half-up after scaling `[0, 1]` to `[0, maxval]`.
fn quantize(v: f64, maxval: u16) -> u16 {
    let q = (v * maxval as f64 + 0.5).floor();
    q.clamp(0.0, maxval as f64) as u16
}

pub fn encode_pgm(img: &Image, maxval: u16) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    if maxval < 256 {
        out.extend(img.data().iter().map(|&v| quantize(v, maxval) as u8));
    } else {
        for &v in img.data() {
            out.extend_from_slice(&quantize(v, maxval).to_be_bytes());
        }
    }
    out
}

fn save_raw_f32(img: &Image, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(img.data().len() * 4);
    for &v in img.data() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write(path, &bytes)?;
    let side = RawSidecar {
        width: img.width(),
        height: img.height(),
        channel: img.channel().to_string(),
    };
    let json = serde_json::to_vec_pretty(&side).expect("sidecar serializes");
    write(&sidecar_path(path), &json)
}

fn load_raw_f32(path: &Path) -> Result<Image> {
    let side_path = sidecar_path(path);
    let side: RawSidecar = serde_json::from_slice(&read(&side_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", side_path.display())))?;
    let grid = GridSpec::new(side.width, side.height).map_err(|e| Error::Format(e.to_string()))?;
    let bytes = read(path)?;
    if bytes.len() != grid.len() * 4 {
        return Err(Error::Format(format!(
            "raw f32 payload has {} bytes, expected {}",
            bytes.len(),
            grid.len() * 4
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Image::new(grid, data, side.channel)
}

/// Reads a samples CSV. The grid comes from `grid` when given, otherwise
/// from the `<file>.json` sidecar.
pub fn load_samples(path: impl AsRef<Path>, grid: Option<GridSpec>) -> Result<SampleSet> {
    let path = path.as_ref();
    let bytes = read(path)?;
    let grid = match grid {
        Some(g) => g,
        None => {
            let side_path = sidecar_path(path);
            let side: GridSidecar = serde_json::from_slice(&read(&side_path)?)
                .map_err(|e| Error::Format(format!("{}: {e}", side_path.display())))?;
            GridSpec::new(side.width, side.height).map_err(|e| Error::Format(e.to_string()))?
        }
    };
    parse_samples_csv(&bytes, grid)
}

pub fn parse_samples_csv(bytes: &[u8], grid: GridSpec) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let header = rdr
        .headers()
        .map_err(|e| Error::Format(format!("samples header: {e}")))?;
    if header.iter().map(str::trim).collect::<Vec<_>>() != ["x", "y", "value"] {
        return Err(Error::Format(format!(
            "expected header x,y,value, found {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut samples = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("samples row {}: {e}", line + 1)))?;
        if rec.len() != 3 {
            return Err(Error::Format(format!("samples row {} has {} fields", line + 1, rec.len())));
        }
        let field = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|_| {
                Error::Format(format!("samples row {}: non-numeric field {:?}", line + 1, &rec[i]))
            })
        };
        samples.push(Sample {
            x: field(0)?,
            y: field(1)?,
            value: field(2)?,
        });
    }
    SampleSet::new(samples, grid)
}

/// Writes the CSV with shortest round-trip float formatting, plus the grid sidecar.
pub fn save_samples(set: &SampleSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write(path, &samples_csv_bytes(set))?;
    let side = GridSidecar {
        width: set.grid().width,
        height: set.grid().height,
    };
    write(
        &sidecar_path(path),
        &serde_json::to_vec_pretty(&side).expect("sidecar serializes"),
    )
}

pub fn samples_csv_bytes(set: &SampleSet) -> Vec<u8> {
    let mut out = String::from("x,y,value\n");
    for s in set.samples() {
        out.push_str(&format!("{},{},{}\n", s.x, s.y, s.value));
    }
    out.into_bytes()
}
