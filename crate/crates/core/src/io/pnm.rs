use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::Image;

/// A decoded grayscale PGM frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub image: Image,
    pub maxval: u16,
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), message: message.into() }
}

/// Splits a netpbm header into `count` tokens and returns them with the offset of the payload.
fn header_tokens(path: &Path, bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
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
            return Err(format_err(path, "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // exactly one whitespace byte separates the header from the payload
    if i >= bytes.len() {
        return Err(format_err(path, "missing payload"));
    }
    Ok((tokens, i + 1))
}

fn parse_dim(path: &Path, token: &str, what: &str) -> Result<usize> {
    token.parse::<usize>().ok().filter(|v| *v > 0).ok_or_else(|| format_err(path, format!("bad {what} {token:?}")))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

/// Reads a binary (P5) PGM file with 8- or 16-bit samples.
pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = read_all(path)?;
    let (tokens, offset) = header_tokens(path, &bytes, 4)?;
    if tokens[0] != "P5" {
        return Err(format_err(path, format!("expected P5 magic, found {:?}", tokens[0])));
    }
    let width = parse_dim(path, &tokens[1], "width")?;
    let height = parse_dim(path, &tokens[2], "height")?;
    let maxval = tokens[3]
        .parse::<u32>()
        .ok()
        .filter(|m| (1..=65535).contains(m))
        .ok_or_else(|| format_err(path, format!("bad maxval {:?}", tokens[3])))? as u16;
    let wide = maxval > 255;
    let need = width * height * if wide { 2 } else { 1 };
    let payload = &bytes[offset..];
    if payload.len() < need {
        return Err(format_err(path, format!("payload has {} bytes, expected {need}", payload.len())));
    }
    let pixels = if wide {
        payload[..need].chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as f64).collect()
    } else {
        payload[..need].iter().map(|b| *b as f64).collect()
    };
    Ok(Pgm { image: Image::new(width, height, pixels)?, maxval })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_pgm_bytes(path: &Path, width: usize, height: usize, maxval: u16, payload: &[u8]) -> Result<()> {
    let mut out = create(path)?;
    write!(out, "P5\n{width} {height}\n{maxval}\n")
        .and_then(|_| out.write_all(payload))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes raw values rounded and clamped to 0..=255.
pub fn write_pgm8(path: &Path, img: &Image) -> Result<()> {
    let payload: Vec<u8> = img.pixels().iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    write_pgm_bytes(path, img.width(), img.height(), 255, &payload)
}

/// Writes raw values rounded and clamped to 0..=65535, big-endian.
pub fn write_pgm16(path: &Path, img: &Image) -> Result<()> {
    let payload: Vec<u8> =
        img.pixels().iter().flat_map(|v| (v.round().clamp(0.0, 65535.0) as u16).to_be_bytes()).collect();
    write_pgm_bytes(path, img.width(), img.height(), 65535, &payload)
}

/// Maps the value range of an image linearly onto 0..=255; a constant image maps to 0.
pub fn display_normalized(img: &Image) -> Image {
    let (lo, hi) = img.pixels().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(hi > lo) {
        return Image::zeros(img.width(), img.height());
    }
    img.map(|v| (v - lo) / (hi - lo) * 255.0)
}

/// Writes a display-normalized 8-bit PGM.
pub fn write_pgm_display(path: &Path, img: &Image) -> Result<()> {
    write_pgm8(path, &display_normalized(img))
}

/// Writes a little-endian grayscale PFM (negative scale), bottom row first.
pub fn write_pfm(path: &Path, img: &Image) -> Result<()> {
    let mut out = create(path)?;
    let (w, h) = img.dims();
    let mut payload = Vec::with_capacity(w * h * 4);
    for y in (0..h).rev() {
        for v in img.row(y) {
            payload.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    write!(out, "Pf\n{w} {h}\n-1.0\n")
        .and_then(|_| out.write_all(&payload))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads a grayscale PFM in either byte order.
pub fn read_pfm(path: &Path) -> Result<Image> {
    let bytes = read_all(path)?;
    let (tokens, offset) = header_tokens(path, &bytes, 4)?;
    if tokens[0] != "Pf" {
        return Err(format_err(path, format!("expected Pf magic, found {:?}", tokens[0])));
    }
    let w = parse_dim(path, &tokens[1], "width")?;
    let h = parse_dim(path, &tokens[2], "height")?;
    let scale: f64 = tokens[3].parse().map_err(|_| format_err(path, "bad scale"))?;
    let payload = &bytes[offset..];
    if payload.len() < w * h * 4 {
        return Err(format_err(path, "truncated payload"));
    }
    let mut img = Image::zeros(w, h);
    for (i, b) in payload[..w * h * 4].chunks_exact(4).enumerate() {
        let arr = [b[0], b[1], b[2], b[3]];
        let v = if scale < 0.0 { f32::from_le_bytes(arr) } else { f32::from_be_bytes(arr) };
        let (x, row) = (i % w, i / w);
        img.set(x, h - 1 - row, v as f64);
    }
    Ok(img)
}

/// PGM files of a directory in lexicographic order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut frames: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    frames.sort();
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(7, 5, |x, y| (x * 30 + y) as f64);
        let p8 = dir.path().join("a.pgm");
        write_pgm8(&p8, &img).unwrap();
        let back = read_pgm(&p8).unwrap();
        assert_eq!((back.image.clone(), back.maxval), (img.clone(), 255));
        let big = img.map(|v| v * 300.0);
        let p16 = dir.path().join("b.pgm");
        write_pgm16(&p16, &big).unwrap();
        assert_eq!(read_pgm(&p16).unwrap().image, big);
    }

    #[test]
    fn pgm_header_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.pgm");
        let mut bytes = b"P5\n# made by hand\n2 2\n# depth\n255\n".to_vec();
        bytes.extend([1, 2, 3, 4]);
        fs::write(&p, bytes).unwrap();
        assert_eq!(read_pgm(&p).unwrap().image.pixels(), &[1.0, 2.0, 3.0, 4.0]);
        fs::write(&p, b"P2\n2 2\n255\n1 2 3 4").unwrap();
        assert!(matches!(read_pgm(&p), Err(Error::Format { .. })));
        fs::write(&p, b"P5\n2 2\n255\n\x01").unwrap();
        assert!(matches!(read_pgm(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn pfm_layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pfm");
        let img = Image::from_fn(3, 2, |x, y| x as f64 - 0.5 * y as f64);
        write_pfm(&p, &img).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"Pf\n3 2\n-1.0\n"));
        // first stored row is the bottom image row
        let first = f32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]);
        assert_eq!(first, -0.5);
        assert_eq!(read_pfm(&p).unwrap(), img);
    }

    #[test]
    fn display_mapping() {
        let img = Image::new(3, 1, vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(display_normalized(&img).pixels(), &[0.0, 127.5, 255.0]);
        assert_eq!(display_normalized(&Image::filled(2, 2, 4.0)).pixels(), &[0.0; 4]);
    }

    #[test]
    fn frames_sorted() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.pgm", "a.pgm", "c.txt", "a10.pgm"] {
            fs::write(dir.path().join(name), b"").unwrap();
        }
        let names: Vec<String> = list_frames(dir.path())
            .unwrap()
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["a.pgm", "a10.pgm", "b.pgm"]);
    }
}
