use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// First line of every metrics CSV.
pub const METRICS_SCHEMA: &str = "# tvrecover-metrics schema=1";

pub const METRICS_COLUMNS: [&str; 8] =
    ["decoder", "rel_l2_error", "gradient_error", "tv_error", "residual", "eps", "iterations", "converged"];

/// Intensity range stored next to a PGM so the 16-bit codes can be mapped
/// back to pixel values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub rows: usize,
    pub cols: usize,
    pub min: f64,
    pub max: f64,
}

pub fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Encodes `img` as a 16-bit binary PGM, linearly mapping `[min, max]` to
/// `[0, 65535]`.
pub fn encode_pgm(img: &Image) -> (Vec<u8>, PgmSidecar) {
    let (rows, cols) = img.shape();
    let (min, max) = img.pixels().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = max - min;
    let mut out = format!("P5\n{cols} {rows}\n65535\n").into_bytes();
    out.reserve(2 * rows * cols);
    for &v in img.pixels() {
        let code = if span > 0.0 { ((v - min) / span * 65535.0).round() as u16 } else { 0 };
        out.extend_from_slice(&code.to_be_bytes());
    }
    (out, PgmSidecar { rows, cols, min, max })
}

/// Writes `img` as PGM plus its JSON sidecar.
pub fn write_pgm(path: &Path, img: &Image) -> Result<PgmSidecar> {
    let (bytes, side) = encode_pgm(img);
    write_atomic(path, &bytes)?;
    write_atomic(&sidecar_path(path), serde_json::to_string_pretty(&side)?.as_bytes())?;
    Ok(side)
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::Format("non-ascii header".into()))
}

/// Decodes a binary PGM (8- or 16-bit). Codes are mapped to `[0, 1]`, or to
/// `[min, max]` when a sidecar is supplied.
pub fn decode_pgm(bytes: &[u8], sidecar: Option<&PgmSidecar>) -> Result<Image> {
    let mut pos = 0;
    if header_token(bytes, &mut pos)? != "P5" {
        return Err(Error::Format("expected binary PGM magic P5".into()));
    }
    let mut num = |what: &str| -> Result<usize> {
        header_token(bytes, &mut pos)?.parse().map_err(|_| Error::Format(format!("bad {what} in header")))
    };
    let cols = num("width")?;
    let rows = num("height")?;
    let maxval = num("maxval")?;
    if rows == 0 || cols == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("unsupported header {cols}x{rows} maxval {maxval}")));
    }
    pos += 1; // single whitespace before raster
    let wide = maxval > 255;
    let need = rows * cols * if wide { 2 } else { 1 };
    let raster = bytes.get(pos..pos + need).ok_or_else(|| Error::Format("truncated raster".into()))?;
    let codes: Vec<f64> = if wide {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
    } else {
        raster.iter().map(|&b| b as f64).collect()
    };
    let (lo, span) = match sidecar {
        Some(s) => {
            if (s.rows, s.cols) != (rows, cols) {
                return Err(Error::Format("sidecar shape disagrees with PGM header".into()));
            }
            (s.min, s.max - s.min)
        }
        None => (0.0, 1.0),
    };
    let pixels = codes.into_iter().map(|c| lo + c / maxval as f64 * span).collect();
    Image::new(rows, cols, pixels)
}

/// Reads a PGM, using its sidecar when one exists.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    let side = sidecar_path(path);
    let sidecar: Option<PgmSidecar> = if side.exists() { Some(serde_json::from_slice(&fs::read(side)?)?) } else { None };
    decode_pgm(&bytes, sidecar.as_ref())
}

/// One decoder's outcome in an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub decoder: String,
    /// `‖X̂ − X‖₂ / ‖X‖₂`.
    pub rel_l2_error: f64,
    /// `‖∇X − ∇X̂‖₂`.
    pub gradient_error: f64,
    /// `‖X − X̂‖_TV`.
    pub tv_error: f64,
    pub residual: f64,
    pub eps: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Not written to the metrics CSV, which must be byte-reproducible.
    #[serde(default)]
    pub wall_time_s: f64,
}

impl MetricsRow {
    fn record(&self) -> [String; 8] {
        [
            self.decoder.clone(),
            self.rel_l2_error.to_string(),
            self.gradient_error.to_string(),
            self.tv_error.to_string(),
            self.residual.to_string(),
            self.eps.to_string(),
            self.iterations.to_string(),
            self.converged.to_string(),
        ]
    }
}

pub fn encode_metrics_csv(rows: &[MetricsRow]) -> Result<Vec<u8>> {
    let mut out = format!("{METRICS_SCHEMA}\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(METRICS_COLUMNS)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_atomic(path, &encode_metrics_csv(rows)?)
}

/// Parses a metrics CSV, rejecting files without the expected schema line
/// or columns.
pub fn read_metrics_csv(bytes: &[u8]) -> Result<Vec<MetricsRow>> {
    let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    if first != METRICS_SCHEMA.as_bytes() {
        return Err(Error::Format("missing or unsupported metrics schema line".into()));
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_COLUMNS {
        return Err(Error::Format(format!("unexpected columns {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_is_within_quantization() {
        let img = Image::from_fn(5, 7, |j, k| (j as f64 - 2.0) * 0.3 + k as f64 * 0.01);
        let (bytes, side) = encode_pgm(&img);
        assert!(bytes.starts_with(b"P5\n7 5\n65535\n"));
        let back = decode_pgm(&bytes, Some(&side)).unwrap();
        let step = (side.max - side.min) / 65535.0;
        assert!((&back - &img).norm_inf() <= 0.5 * step + 1e-15);
    }

    #[test]
    fn constant_image_encodes_to_zero_codes() {
        let img = Image::constant(2, 2, 4.0);
        let (bytes, side) = encode_pgm(&img);
        assert_eq!(side.min, 4.0);
        assert_eq!(decode_pgm(&bytes, Some(&side)).unwrap(), img);
    }

    #[test]
    fn eight_bit_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend([0u8, 255]);
        let img = decode_pgm(&bytes, None).unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn malformed_pgm() {
        assert!(decode_pgm(b"P2\n1 1\n255\n0", None).is_err());
        assert!(decode_pgm(b"P5\n4 4\n255\n\x00", None).is_err());
    }

    #[test]
    fn metrics_csv_round_trip() {
        let row = MetricsRow {
            decoder: "tv".into(),
            rel_l2_error: 0.125,
            gradient_error: 1.5,
            tv_error: 2.0,
            residual: 1e-9,
            eps: 0.0,
            iterations: 40,
            converged: true,
            wall_time_s: 3.0,
        };
        let bytes = encode_metrics_csv(std::slice::from_ref(&row)).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with(METRICS_SCHEMA));
        assert!(!text.contains("wall"));
        let back = read_metrics_csv(&bytes).unwrap();
        assert_eq!(back, vec![MetricsRow { wall_time_s: 0.0, ..row }]);
        assert!(read_metrics_csv(b"decoder\ntv\n").is_err());
    }
}
