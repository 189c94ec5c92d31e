//! Binary PGM (P5) frames and numbered frame directories.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::PgmError;
use crate::imaging::Frame;

/// Encodes a frame as P5 with maxval 255.
pub fn encode(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.pixels());
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::Format(format!("missing or invalid {what}")))
    }
}

/// Decodes a P5 image. Maxvals below 255 are rescaled to the full range.
pub fn decode(bytes: &[u8], index: u64) -> Result<Frame, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::Format("missing P5 magic".into()));
    }
    let mut header = Header { bytes, pos: 2 };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::Format(format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(header.pos) {
        Some(c) if c.is_ascii_whitespace() => header.pos += 1,
        _ => return Err(PgmError::Format("no separator after maxval".into())),
    }
    let raster = &bytes[header.pos..];
    let n = width * height;
    if raster.len() < n {
        return Err(PgmError::Format(format!("raster holds {} bytes, expected {n}", raster.len())));
    }
    let pixels = if maxval == 255 {
        raster[..n].to_vec()
    } else {
        raster[..n]
            .iter()
            .map(|&v| ((v.min(maxval as u8) as usize * 255 + maxval / 2) / maxval) as u8)
            .collect()
    };
    Ok(Frame::new(width, height, pixels, index)?)
}

pub fn read_pgm(path: &Path, index: u64) -> Result<Frame, PgmError> {
    let bytes = fs::read(path).map_err(|source| PgmError::Io { path: path.to_owned(), source })?;
    decode(&bytes, index)
}

pub fn write_pgm(path: &Path, frame: &Frame) -> Result<(), PgmError> {
    fs::write(path, encode(frame)).map_err(|source| PgmError::Io { path: path.to_owned(), source })
}

/// File name for the `n`th frame of a sequence, e.g. `frame_000001.pgm`.
pub fn frame_file_name(n: u64) -> String {
    format!("frame_{n:06}.pgm")
}

fn frame_number(name: &str) -> Option<u64> {
    name.strip_prefix("frame_")?.strip_suffix(".pgm")?.parse().ok()
}

/// Lists `frame_NNNNNN.pgm` files of a directory in frame-number order.
pub fn list_sequence(dir: &Path) -> Result<Vec<(u64, PathBuf)>, PgmError> {
    let io_err = |source| PgmError::Io { path: dir.to_owned(), source };
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        if let Some(n) = entry.file_name().to_str().and_then(frame_number) {
            entries.push((n, entry.path()));
        }
    }
    entries.sort_by_key(|(n, _)| *n);
    Ok(entries)
}

/// Reads every numbered frame of a directory; frame indices come from the file names.
pub fn read_sequence(dir: &Path) -> Result<Vec<Frame>, PgmError> {
    list_sequence(dir)?.into_iter().map(|(n, path)| read_pgm(&path, n)).collect()
}

/// Writes frames as `frame_000001.pgm`, `frame_000002.pgm`, ... in slice order.
pub fn write_sequence(dir: &Path, frames: &[Frame]) -> Result<Vec<PathBuf>, PgmError> {
    fs::create_dir_all(dir).map_err(|source| PgmError::Io { path: dir.to_owned(), source })?;
    frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let path = dir.join(frame_file_name(i as u64 + 1));
            write_pgm(&path, frame)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 1, 2, 3, 4, 255]);
        let frame = decode(&bytes, 9).unwrap();
        assert_eq!((frame.width(), frame.height(), frame.index()), (3, 2, 9));
        assert_eq!(frame.get(2, 1), 255);
    }

    #[test]
    fn low_maxval_rescaled() {
        let mut bytes = b"P5 2 1 15\n".to_vec();
        bytes.extend_from_slice(&[15, 0]);
        let frame = decode(&bytes, 0).unwrap();
        assert_eq!(frame.pixels(), &[255, 0]);
    }

    #[test]
    fn rejects_truncated_and_ascii() {
        assert!(decode(b"P2 2 2 255\n0 0 0 0", 0).is_err());
        assert!(decode(b"P5 4 4 255\n\0\0", 0).is_err());
    }

    #[test]
    fn sequence_round_trip_in_numeric_order() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<Frame> = (0..12u8).map(|i| Frame::new(4, 4, vec![i; 16], 0).unwrap()).collect();
        write_sequence(dir.path(), &frames).unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let back = read_sequence(dir.path()).unwrap();
        assert_eq!(back.len(), 12);
        for (i, f) in back.iter().enumerate() {
            assert_eq!(f.index(), i as u64 + 1);
            assert_eq!(f.pixels(), frames[i].pixels());
        }
    }

    proptest! {
        #[test]
        fn encode_decode_identity(w in 1usize..40, h in 1usize..40, seed in any::<u64>()) {
            let pixels: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 7) as u8).collect();
            let frame = Frame::new(w, h, pixels, 3).unwrap();
            prop_assert_eq!(decode(&encode(&frame), 3).unwrap(), frame);
        }
    }
}
