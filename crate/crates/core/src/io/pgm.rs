//! Grayscale netpbm: P2 (ASCII) and P5 (binary), maxval up to 65535.
//!
//! Parse errors carry the byte offset at which the problem was detected.

use std::path::Path;

use thiserror::Error;

use crate::grid::{GridError, GridMap};

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic at byte {offset}: expected P2 or P5")]
    BadMagic { offset: usize },
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: &'static str },
    #[error("invalid maxval {maxval} at byte {offset}")]
    InvalidMaxval { offset: usize, maxval: u64 },
    #[error("truncated payload at byte {offset}: expected {expected} samples, found {found}")]
    Truncated { offset: usize, expected: usize, found: usize },
    #[error("malformed sample at byte {offset}")]
    MalformedSample { offset: usize },
    #[error("sample {value} at byte {offset} exceeds maxval {maxval}")]
    SampleOutOfRange { offset: usize, value: u32, maxval: u16 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl PgmError {
    pub fn is_io(&self) -> bool {
        matches!(self, PgmError::Io(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    Ascii,
    Binary,
}

/// Raw PGM samples as stored in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl PgmImage {
    /// Normalizes samples to `[0, 1]` by dividing by maxval.
    pub fn to_grid(&self) -> Result<GridMap, GridError> {
        let m = f64::from(self.maxval);
        GridMap::new(
            self.width,
            self.height,
            self.samples.iter().map(|&s| (f64::from(s) / m) as f32).collect(),
        )
    }

    pub fn encode(&self, encoding: PgmEncoding) -> Vec<u8> {
        match encoding {
            PgmEncoding::Binary => {
                let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval)
                    .into_bytes();
                if self.maxval > 255 {
                    out.extend(self.samples.iter().flat_map(|s| s.to_be_bytes()));
                } else {
                    out.extend(self.samples.iter().map(|&s| s as u8));
                }
                out
            }
            PgmEncoding::Ascii => {
                let mut out = format!("P2\n{} {}\n{}\n", self.width, self.height, self.maxval);
                for row in self.samples.chunks(self.width) {
                    let line: Vec<String> = row.iter().map(|s| s.to_string()).collect();
                    out.push_str(&line.join(" "));
                    out.push('\n');
                }
                out.into_bytes()
            }
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Reads an unsigned decimal token; `None` if no digits are present.
    fn number(&mut self) -> Option<u64> {
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value.saturating_mul(10).saturating_add(u64::from(b - b'0'));
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        // a token must end at whitespace, a comment, or EOF
        match self.bytes.get(self.pos) {
            None => Some(value),
            Some(b) if b.is_ascii_whitespace() || *b == b'#' => Some(value),
            Some(_) => None,
        }
    }

    fn header_field(&mut self, reason: &'static str) -> Result<u64, PgmError> {
        self.skip_whitespace_and_comments();
        let offset = self.pos;
        self.number().ok_or(PgmError::MalformedHeader { offset, reason })
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<PgmImage, PgmError> {
    let encoding = match bytes.get(..2) {
        Some(b"P2") => PgmEncoding::Ascii,
        Some(b"P5") => PgmEncoding::Binary,
        _ => return Err(PgmError::BadMagic { offset: 0 }),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !matches!(bytes.get(2), Some(b) if b.is_ascii_whitespace() || *b == b'#') {
        return Err(PgmError::MalformedHeader { offset: 2, reason: "expected whitespace after magic" });
    }
    let width = cur.header_field("expected width")?;
    let height = cur.header_field("expected height")?;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader { offset: cur.pos, reason: "zero dimension" });
    }
    cur.skip_whitespace_and_comments();
    let maxval_offset = cur.pos;
    let maxval = cur
        .number()
        .ok_or(PgmError::MalformedHeader { offset: maxval_offset, reason: "expected maxval" })?;
    if maxval == 0 || maxval > u64::from(u16::MAX) {
        return Err(PgmError::InvalidMaxval { offset: maxval_offset, maxval });
    }
    let maxval = maxval as u16;
    let count = usize::try_from(width)
        .ok()
        .zip(usize::try_from(height).ok())
        .and_then(|(w, h)| w.checked_mul(h))
        .ok_or(PgmError::MalformedHeader { offset: maxval_offset, reason: "dimensions too large" })?;

    let samples = match encoding {
        PgmEncoding::Binary => {
            // exactly one whitespace byte separates the header from the raster
            match bytes.get(cur.pos) {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                _ => {
                    return Err(PgmError::MalformedHeader {
                        offset: cur.pos,
                        reason: "expected single whitespace before raster",
                    })
                }
            }
            let start = cur.pos;
            let bytes_per = if maxval > 255 { 2 } else { 1 };
            let payload = &bytes[start..];
            let needed = count.checked_mul(bytes_per).ok_or(PgmError::MalformedHeader {
                offset: maxval_offset,
                reason: "dimensions too large",
            })?;
            if payload.len() < needed {
                return Err(PgmError::Truncated {
                    offset: bytes.len(),
                    expected: count,
                    found: payload.len() / bytes_per,
                });
            }
            let samples: Vec<u16> = if bytes_per == 2 {
                payload[..needed].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
            } else {
                payload[..needed].iter().map(|&b| u16::from(b)).collect()
            };
            if let Some(i) = samples.iter().position(|&s| s > maxval) {
                return Err(PgmError::SampleOutOfRange {
                    offset: start + i * bytes_per,
                    value: u32::from(samples[i]),
                    maxval,
                });
            }
            samples
        }
        PgmEncoding::Ascii => {
            let mut samples = Vec::with_capacity(count);
            for found in 0..count {
                cur.skip_whitespace_and_comments();
                let offset = cur.pos;
                if offset >= bytes.len() {
                    return Err(PgmError::Truncated { offset, expected: count, found });
                }
                let value = cur.number().ok_or(PgmError::MalformedSample { offset })?;
                if value > u64::from(maxval) {
                    return Err(PgmError::SampleOutOfRange {
                        offset,
                        value: value.min(u64::from(u32::MAX)) as u32,
                        maxval,
                    });
                }
                samples.push(value as u16);
            }
            samples
        }
    };
    Ok(PgmImage { width: width as usize, height: height as usize, maxval, samples })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<PgmImage, PgmError> {
    decode_pgm(&std::fs::read(path)?)
}

/// Loads a PGM and normalizes it to a `[0, 1]` grid.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<GridMap, PgmError> {
    Ok(read_pgm(path)?.to_grid()?)
}

pub fn save_pgm(image: &PgmImage, path: impl AsRef<Path>) -> Result<(), PgmError> {
    super::write_atomic(path.as_ref(), &image.encode(PgmEncoding::Binary))?;
    Ok(())
}
