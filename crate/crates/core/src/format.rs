//! File interchange for embedding trajectories.
//!
//! Binary (`UVDT`), all integers little-endian:
//!
//! | offset | size      | content                               |
//! |--------|-----------|---------------------------------------|
//! | 0      | 4         | magic `b"UVDT"`                       |
//! | 4      | 4         | format version, `u32` (currently 1)   |
//! | 8      | 8         | frame count `T`, `u64`                |
//! | 16     | 8         | embedding width `K`, `u64`            |
//! | 24     | `4*T*K`   | `f32` IEEE-754 values, row-major      |
//!
//! No trailing bytes are allowed.
//!
//! CSV: one frame per line, comma-separated decimal values, no quoting. The
//! first line may be a `# K=<int>` header declaring the width. Values are
//! written in shortest round-trip form, so a save/load cycle is exact.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::trajectory::{EmbeddingTrajectory, TrajectoryError};

pub const MAGIC: [u8; 4] = *b"UVDT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Csv,
}

impl Format {
    /// `.csv` files are CSV, everything else is treated as `UVDT`.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "uvdt" => Ok(Format::Binary),
            "csv" => Ok(Format::Csv),
            other => Err(format!(
                "unknown trajectory format `{other}` (expected binary or csv)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("empty path")]
    EmptyPath,
    #[error("bad magic at byte 0: expected \"UVDT\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {version} at byte 4")]
    UnsupportedVersion { version: u32 },
    #[error("truncated file: needed {needed} bytes at byte {offset}, file has {len}")]
    Truncated {
        offset: usize,
        needed: usize,
        len: usize,
    },
    #[error("{extra} trailing byte(s) after data at byte {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("header shape {frames}x{dim} overflows")]
    ShapeOverflow { frames: u64, dim: u64 },
    #[error("non-finite value at byte {offset} (frame {row}, dim {col})")]
    NonFiniteAt {
        offset: usize,
        row: usize,
        col: usize,
    },
    #[error("line {line}, column {col}: cannot parse `{text}` as a number")]
    Parse {
        line: usize,
        col: usize,
        text: String,
    },
    #[error("line {line}: malformed header `{text}` (expected `# K=<int>`)")]
    BadHeader { line: usize, text: String },
    #[error("line {line}: ragged row of width {width}, expected {expected}")]
    Ragged {
        line: usize,
        width: usize,
        expected: usize,
    },
    #[error("line {line}, column {col}: non-finite value")]
    NonFiniteLine { line: usize, col: usize },
    #[error("too short: {frames} frame(s), need at least 2")]
    TooShort { frames: usize },
    #[error(transparent)]
    Invalid(#[from] TrajectoryError),
}

pub fn load_trajectory(path: &Path, format: Format) -> Result<EmbeddingTrajectory, FormatError> {
    if path.as_os_str().is_empty() {
        return Err(FormatError::EmptyPath);
    }
    let io_err = |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    };
    let traj = match format {
        Format::Binary => decode_binary(&fs::read(path).map_err(io_err)?)?,
        Format::Csv => decode_csv(&fs::read_to_string(path).map_err(io_err)?)?,
    };
    let tag = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_owned();
    Ok(traj.with_meta(tag))
}

pub fn save_trajectory(
    traj: &EmbeddingTrajectory,
    path: &Path,
    format: Format,
) -> Result<(), FormatError> {
    if path.as_os_str().is_empty() {
        return Err(FormatError::EmptyPath);
    }
    let bytes = match format {
        Format::Binary => encode_binary(traj),
        Format::Csv => encode_csv(traj).into_bytes(),
    };
    fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn encode_binary(traj: &EmbeddingTrajectory) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * traj.as_flat().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(traj.len() as u64).to_le_bytes());
    out.extend_from_slice(&(traj.dim() as u64).to_le_bytes());
    for v in traj.as_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<EmbeddingTrajectory, FormatError> {
    let take = |offset: usize, n: usize| -> Result<&[u8], FormatError> {
        offset
            .checked_add(n)
            .and_then(|end| bytes.get(offset..end))
            .ok_or(FormatError::Truncated {
                offset,
                needed: n,
                len: bytes.len(),
            })
    };
    let magic: [u8; 4] = take(0, 4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(FormatError::BadMagic { found: magic });
    }
    let version = u32::from_le_bytes(take(4, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion { version });
    }
    let frames_raw = u64::from_le_bytes(take(8, 8)?.try_into().unwrap());
    let dim_raw = u64::from_le_bytes(take(16, 8)?.try_into().unwrap());
    let overflow = || FormatError::ShapeOverflow {
        frames: frames_raw,
        dim: dim_raw,
    };
    let frames = usize::try_from(frames_raw).map_err(|_| overflow())?;
    let dim = usize::try_from(dim_raw).map_err(|_| overflow())?;
    let count = frames.checked_mul(dim).ok_or_else(overflow)?;
    if frames < 2 {
        return Err(FormatError::TooShort { frames });
    }
    let payload_len = count.checked_mul(4).ok_or_else(overflow)?;
    let payload = take(HEADER_LEN, payload_len)?;
    let end = HEADER_LEN + payload_len;
    if bytes.len() > end {
        return Err(FormatError::TrailingBytes {
            offset: end,
            extra: bytes.len() - end,
        });
    }
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(FormatError::NonFiniteAt {
                offset: HEADER_LEN + 4 * i,
                row: i / dim,
                col: i % dim,
            });
        }
        data.push(v);
    }
    Ok(EmbeddingTrajectory::from_flat(data, frames, dim)?)
}

pub fn encode_csv(traj: &EmbeddingTrajectory) -> String {
    let mut out = String::new();
    writeln!(out, "# K={}", traj.dim()).unwrap();
    for row in traj.frames() {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> Result<EmbeddingTrajectory, FormatError> {
    let mut declared: Option<usize> = None;
    let mut data = Vec::new();
    let mut frames = 0usize;
    let mut width: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('#') {
            if i != 0 {
                return Err(FormatError::BadHeader {
                    line,
                    text: trimmed.to_owned(),
                });
            }
            let k = header
                .trim()
                .strip_prefix("K=")
                .and_then(|k| k.trim().parse::<usize>().ok())
                .ok_or_else(|| FormatError::BadHeader {
                    line,
                    text: trimmed.to_owned(),
                })?;
            declared = Some(k);
            continue;
        }
        let mut row_width = 0;
        for (c, field) in trimmed.split(',').enumerate() {
            let field = field.trim();
            let v: f32 = field.parse().map_err(|_| FormatError::Parse {
                line,
                col: c + 1,
                text: field.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(FormatError::NonFiniteLine { line, col: c + 1 });
            }
            data.push(v);
            row_width += 1;
        }
        let expected = *width.get_or_insert(declared.unwrap_or(row_width));
        if row_width != expected {
            return Err(FormatError::Ragged {
                line,
                width: row_width,
                expected,
            });
        }
        frames += 1;
    }
    if frames < 2 {
        return Err(FormatError::TooShort { frames });
    }
    Ok(EmbeddingTrajectory::from_flat(
        data,
        frames,
        width.unwrap_or(0),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingTrajectory {
        EmbeddingTrajectory::from_rows(&[[1.5f32, -2.0], [0.1, 3.25], [1e-30, -7.0e20]]).unwrap()
    }

    #[test]
    fn binary_header_layout() {
        let bytes = encode_binary(&sample());
        assert_eq!(&bytes[0..4], b"UVDT");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 24 + 6 * 4);
        assert_eq!(f32::from_le_bytes(bytes[24..28].try_into().unwrap()), 1.5);
    }

    #[test]
    fn binary_three_by_two() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"UVDT");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&3u64.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        for v in [0.0f32, 1.0, 2.0, 3.0, 4.0, 5.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let t = decode_binary(&bytes).unwrap();
        assert_eq!((t.len(), t.dim()), (3, 2));
        assert_eq!(t.frame(2), &[4.0, 5.0]);
    }

    #[test]
    fn binary_errors_carry_offsets() {
        let good = encode_binary(&sample());

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_binary(&bad),
            Err(FormatError::BadMagic { .. })
        ));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(
            decode_binary(&bad),
            Err(FormatError::UnsupportedVersion { version: 9 })
        ));

        let short = &good[..good.len() - 2];
        assert!(matches!(
            decode_binary(short),
            Err(FormatError::Truncated { offset: 24, .. })
        ));

        let mut long = good.clone();
        long.push(0);
        assert!(matches!(
            decode_binary(&long),
            Err(FormatError::TrailingBytes {
                offset: 48,
                extra: 1
            })
        ));

        let mut nan = good.clone();
        nan[32..36].copy_from_slice(&f32::NAN.to_le_bytes());
        match decode_binary(&nan) {
            Err(FormatError::NonFiniteAt { offset, row, col }) => {
                assert_eq!((offset, row, col), (32, 1, 0))
            }
            other => panic!("unexpected {other:?}"),
        }

        let mut one = good[..24].to_vec();
        one[8..16].copy_from_slice(&1u64.to_le_bytes());
        assert!(matches!(
            decode_binary(&one),
            Err(FormatError::TooShort { frames: 1 })
        ));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let t = sample();
        let back = decode_csv(&encode_csv(&t)).unwrap();
        assert_eq!(back.as_flat(), t.as_flat());
    }

    #[test]
    fn csv_ragged_row_reports_line() {
        let text = "# K=2\n1,2\n3,4,5\n";
        match decode_csv(text) {
            Err(FormatError::Ragged {
                line,
                width,
                expected,
            }) => assert_eq!((line, width, expected), (3, 3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        // without a header the first row fixes the width
        assert!(matches!(
            decode_csv("1,2\n3,4,5\n"),
            Err(FormatError::Ragged { line: 2, .. })
        ));
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(matches!(
            decode_csv("1,x\n2,3\n"),
            Err(FormatError::Parse {
                line: 1,
                col: 2,
                ..
            })
        ));
        assert!(matches!(
            decode_csv("1,NaN\n2,3\n"),
            Err(FormatError::NonFiniteLine { line: 1, col: 2 })
        ));
        assert!(matches!(
            decode_csv("# W=2\n1,2\n"),
            Err(FormatError::BadHeader { line: 1, .. })
        ));
        assert!(matches!(
            decode_csv("# K=2\n1,2\n"),
            Err(FormatError::TooShort { frames: 1 })
        ));
        assert!(matches!(
            decode_csv("1,2\n# K=2\n3,4\n"),
            Err(FormatError::BadHeader { line: 2, .. })
        ));
    }

    #[test]
    fn empty_path_is_io_error() {
        assert!(matches!(
            save_trajectory(&sample(), Path::new(""), Format::Binary),
            Err(FormatError::EmptyPath)
        ));
        assert!(matches!(
            load_trajectory(Path::new(""), Format::Csv),
            Err(FormatError::EmptyPath)
        ));
    }

    #[test]
    fn format_from_path() {
        assert_eq!(Format::from_path(Path::new("a/b.CSV")), Format::Csv);
        assert_eq!(Format::from_path(Path::new("a/b.uvdt")), Format::Binary);
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }
}
