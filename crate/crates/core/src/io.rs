//! Matrix files and PGM frames.
//!
//! Binary matrices are a 16-byte header (`b"NCXMAT\0\x01"`, rows as `u32`
//! LE, cols as `u32` LE) followed by the entries as `f64` LE in
//! column-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::operators::Mat;

pub const MATRIX_MAGIC: [u8; 8] = *b"NCXMAT\0\x01";

pub fn write_matrix<W: Write>(m: &Mat, mut w: W) -> Result<()> {
    let rows = u32::try_from(m.nrows()).map_err(|_| Error::Format("too many rows".into()))?;
    let cols = u32::try_from(m.ncols()).map_err(|_| Error::Format("too many columns".into()))?;
    let mut buf = Vec::with_capacity(16 + 8 * m.len());
    buf.extend_from_slice(&MATRIX_MAGIC);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    for v in m.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<Mat> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if header[..8] != MATRIX_MAGIC {
        return Err(Error::Format("not a matrix file (bad magic)".into()));
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 8 * rows * cols {
        return Err(Error::Format(format!(
            "expected {} bytes of data for {rows}x{cols}, found {}",
            8 * rows * cols,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect::<Vec<_>>();
    Ok(Mat::from_vec(rows, cols, data))
}

pub fn save_matrix(m: &Mat, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix(m, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Mat> {
    read_matrix(fs::read(path)?.as_slice())
}

/// One matrix row per line, comma separated, shortest round-trip decimals.
pub fn write_matrix_csv<W: Write>(m: &Mat, mut w: W) -> Result<()> {
    for i in 0..m.nrows() {
        let line: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv(text: &str) -> Result<Mat> {
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Format("ragged CSV matrix".into()));
    }
    Ok(Mat::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

/// Loads a `.csv` file as CSV and anything else as binary.
pub fn load_matrix_auto(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_matrix_csv(&fs::read_to_string(path)?)
    } else {
        load_matrix(path)
    }
}

/// Gray frame with pixel values scaled into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame {
    pub height: usize,
    pub width: usize,
    /// Row-major pixels.
    pub pixels: Vec<f64>,
}

impl GrayFrame {
    /// Column-major vectorisation, matching how frames sit in a data column.
    pub fn to_column(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pixels.len());
        for c in 0..self.width {
            for r in 0..self.height {
                out.push(self.pixels[r * self.width + c]);
            }
        }
        out
    }

    pub fn from_column(height: usize, width: usize, col: &[f64]) -> Result<Self> {
        if col.len() != height * width {
            return Err(Error::Shape {
                expected: (height * width, 1),
                got: (col.len(), 1),
            });
        }
        let mut pixels = vec![0.0; col.len()];
        for c in 0..width {
            for r in 0..height {
                pixels[r * width + c] = col[r + c * height];
            }
        }
        Ok(Self { height, width, pixels })
    }
}

fn pgm_token(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|b| *b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::Format("truncated PGM header".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad PGM header field".into()))
}

/// Parses a binary (P5) PGM with 8- or 16-bit samples.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayFrame> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format("not a binary PGM (P5) file".into()));
    }
    let mut pos = 2;
    let width = pgm_token(bytes, &mut pos)?;
    let height = pgm_token(bytes, &mut pos)?;
    let maxval = pgm_token(bytes, &mut pos)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("bad PGM maxval {maxval}")));
    }
    pos += 1;
    let n = width * height;
    let wide = maxval > 255;
    let need = if wide { 2 * n } else { n };
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| Error::Format("truncated PGM data".into()))?;
    let scale = maxval as f64;
    let pixels = if wide {
        data.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale)
            .collect()
    } else {
        data.iter().map(|b| *b as f64 / scale).collect()
    };
    Ok(GrayFrame { height, width, pixels })
}

/// 8-bit P5 output; values are clamped to `[0, 1]` and rounded.
pub fn encode_pgm(frame: &GrayFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend(frame.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

/// Stacks equally sized PGM frames as the columns of a data matrix.
pub fn load_pgm_frames<P: AsRef<Path>>(paths: &[P]) -> Result<(Mat, (usize, usize))> {
    let mut cols = Vec::new();
    let mut dims = None;
    for p in paths {
        let f = parse_pgm(&fs::read(p)?)?;
        match dims {
            None => dims = Some((f.height, f.width)),
            Some(d) if d != (f.height, f.width) => {
                return Err(Error::Shape {
                    expected: d,
                    got: (f.height, f.width),
                })
            }
            _ => {}
        }
        cols.extend(f.to_column());
    }
    let (h, w) = dims.ok_or_else(|| Error::Format("no frames given".into()))?;
    Ok((Mat::from_vec(h * w, paths.len(), cols), (h, w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_header_layout() {
        let m = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 48);
        assert_eq!(&buf[..8], b"NCXMAT\0\x01");
        assert_eq!(&buf[8..16], &[2, 0, 0, 0, 3, 0, 0, 0]);
        // column-major: second stored entry is m[(1, 0)]
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), 4.0);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_matrix(&b"NOTAMATX\x01\0\0\0\x01\0\0\0"[..]).is_err());
        let mut buf = Vec::new();
        write_matrix(&Mat::zeros(2, 2), &mut buf).unwrap();
        buf.pop();
        assert!(read_matrix(buf.as_slice()).is_err());
        assert!(read_matrix_csv("1,2\n3").is_err());
        assert!(read_matrix_csv("1,x").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = Mat::from_row_slice(2, 2, &[0.1, -2.5e-300, f64::MAX, 1.0 / 3.0]);
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        assert_eq!(read_matrix_csv(std::str::from_utf8(&buf).unwrap()).unwrap(), m);
    }

    #[test]
    fn pgm_round_trip_and_layout() {
        let f = GrayFrame {
            height: 2,
            width: 3,
            pixels: vec![0.0, 1.0, 0.2, 0.4, 0.6, 0.8],
        };
        let bytes = encode_pgm(&f);
        let back = parse_pgm(&bytes).unwrap();
        assert_eq!((back.height, back.width), (2, 3));
        for (a, b) in back.pixels.iter().zip(&f.pixels) {
            assert!((a - b).abs() <= 0.5 / 255.0);
        }
        assert_eq!(f.to_column(), vec![0.0, 0.4, 1.0, 0.6, 0.2, 0.8]);
        assert_eq!(GrayFrame::from_column(2, 3, &f.to_column()).unwrap(), f);
    }

    #[test]
    fn pgm_with_comments_and_wide_samples() {
        let mut bytes = b"P5 # comment\n2 1\n# another\n1000\n".to_vec();
        bytes.extend_from_slice(&500u16.to_be_bytes());
        bytes.extend_from_slice(&1000u16.to_be_bytes());
        let f = parse_pgm(&bytes).unwrap();
        assert_eq!(f.pixels, vec![0.5, 1.0]);
        assert!(parse_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x01").is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip_is_bit_exact(
            rows in 0usize..6,
            cols in 0usize..6,
            bits in proptest::collection::vec(any::<u64>(), 36),
        ) {
            let m = Mat::from_fn(rows, cols, |i, j| f64::from_bits(bits[i * 6 + j]));
            let mut buf = Vec::new();
            write_matrix(&m, &mut buf).unwrap();
            let back = read_matrix(buf.as_slice()).unwrap();
            prop_assert_eq!(back.shape(), m.shape());
            for (a, b) in back.iter().zip(m.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
