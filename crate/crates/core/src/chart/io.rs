use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChartImage, ImageMeta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageFormat {
    /// Binary PGM (`P5`, maxval 255). Metadata rides in a `#` comment line.
    Pgm,
    /// `height * width` bytes of 0/255 plus a `.json` sidecar manifest.
    Raw,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    height: usize,
    width: usize,
    #[serde(flatten)]
    meta: ImageMeta,
}

const META_TAG: &str = "# tsohlct ";

fn to_bytes(image: &ChartImage) -> Vec<u8> {
    image.pixels.iter().map(|&p| if p == 0 { 0 } else { 255 }).collect()
}

fn from_bytes(bytes: &[u8]) -> Result<Vec<u8>> {
    bytes
        .iter()
        .map(|&b| match b {
            0 => Ok(0),
            255 => Ok(1),
            other => Err(Error::Format(format!("pixel value {other} is not 0 or 255"))),
        })
        .collect()
}

pub fn manifest_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_image(image: &ChartImage, path: &Path, format: ImageFormat) -> Result<()> {
    match format {
        ImageFormat::Pgm => {
            let meta = serde_json::to_string(&image.meta).expect("image metadata serializes");
            let mut out = format!("P5\n{META_TAG}{meta}\n{} {}\n255\n", image.width, image.height).into_bytes();
            out.extend(to_bytes(image));
            fs::write(path, out).map_err(|e| Error::io(path, e))
        }
        ImageFormat::Raw => {
            fs::write(path, to_bytes(image)).map_err(|e| Error::io(path, e))?;
            let manifest = Manifest {
                height: image.height,
                width: image.width,
                meta: image.meta.clone(),
            };
            let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            let mpath = manifest_path(path);
            fs::write(&mpath, json).map_err(|e| Error::io(mpath, e))
        }
    }
}

pub fn read_image(path: &Path, format: ImageFormat) -> Result<ChartImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        ImageFormat::Pgm => parse_pgm(&bytes),
        ImageFormat::Raw => {
            let mpath = manifest_path(path);
            let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
            let manifest: Manifest =
                serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad manifest: {e}")))?;
            if bytes.len() != manifest.height * manifest.width {
                return Err(Error::Format(format!(
                    "raw image has {} bytes, manifest says {}x{}",
                    bytes.len(),
                    manifest.height,
                    manifest.width
                )));
            }
            Ok(ChartImage {
                height: manifest.height,
                width: manifest.width,
                pixels: from_bytes(&bytes)?,
                meta: manifest.meta,
            })
        }
    }
}

fn parse_pgm(bytes: &[u8]) -> Result<ChartImage> {
    let mut pos = 0;
    let mut meta = ImageMeta::default();
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(Error::Format("truncated PGM header".into()));
        }
        if bytes[pos] == b'#' {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .map_or(bytes.len(), |k| pos + k);
            let line = String::from_utf8_lossy(&bytes[pos..end]);
            if let Some(json) = line.strip_prefix(META_TAG) {
                meta = serde_json::from_str(json).map_err(|e| Error::Format(format!("bad PGM metadata: {e}")))?;
            }
            pos = end;
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::Format(format!("expected P5 magic, got {}", fields[0])));
    }
    let num = |s: &str| -> Result<usize> { s.parse().map_err(|_| Error::Format(format!("bad PGM header field `{s}`"))) };
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 255 {
        return Err(Error::Format(format!("expected maxval 255, got {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let data = bytes.get(pos + 1..).unwrap_or(&[]);
    if data.len() != width * height {
        return Err(Error::Format(format!(
            "PGM raster has {} bytes, header says {width}x{height}",
            data.len()
        )));
    }
    Ok(ChartImage {
        height,
        width,
        pixels: from_bytes(data)?,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn sample_image() -> ChartImage {
        let mut img = ChartImage::blank(
            4,
            6,
            ImageMeta {
                n: 2,
                resolution: 1,
                symbol: "AAA".into(),
                end_date: NaiveDate::from_ymd_opt(2024, 3, 8),
            },
        );
        for (r, c) in [(0, 0), (1, 1), (3, 5), (2, 4)] {
            img.set(r, c);
        }
        img
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let img = sample_image();
        write_image(&img, &path, ImageFormat::Pgm).unwrap();
        assert_eq!(read_image(&path, ImageFormat::Pgm).unwrap(), img);
    }

    #[test]
    fn raw_format_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.raw");
        let img = sample_image();
        write_image(&img, &path, ImageFormat::Raw).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 24);
        assert!(bytes.iter().all(|&b| b == 0 || b == 255));
        assert_eq!(bytes[0], 255);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("x.json")).unwrap()).unwrap();
        for key in ["height", "width", "n", "resolution", "symbol", "end_date"] {
            assert!(manifest.get(key).is_some(), "manifest lacks {key}");
        }
        assert_eq!(read_image(&path, ImageFormat::Raw).unwrap(), img);
    }

    #[test]
    fn corrupted_files_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        write_image(&sample_image(), &path, ImageFormat::Pgm).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_image(&path, ImageFormat::Pgm), Err(Error::Format(_))));

        let last = bytes.len() - 1;
        bytes[last] = 17;
        bytes.extend([0, 0, 0]);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_image(&path, ImageFormat::Pgm), Err(Error::Format(_))));

        fs::write(&path, b"P2\n1 1\n255\n0").unwrap();
        assert!(matches!(read_image(&path, ImageFormat::Pgm), Err(Error::Format(_))));

        let raw = dir.path().join("y.raw");
        write_image(&sample_image(), &raw, ImageFormat::Raw).unwrap();
        fs::write(&raw, [0u8; 5]).unwrap();
        assert!(matches!(read_image(&raw, ImageFormat::Raw), Err(Error::Format(_))));
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_image(Path::new("/nonexistent/q.pgm"), ImageFormat::Pgm).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/q.pgm"));
    }
}
