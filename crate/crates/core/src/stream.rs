//! Materialized digit streams and the `CFD1` file format.
//!
//! Layout: the magic bytes `CFD1`, the digit count as a little-endian `u64`,
//! then each digit as an unsigned LEB128 varint. A JSON sidecar named
//! `<file>.json` records how the stream was produced.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};

pub const MAGIC: &[u8; 4] = b"CFD1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamSource {
    Sampler { seed: u64, algorithm: String },
    File { path: PathBuf },
    Explicit,
}

/// A finite run of continued-fraction digits (all `>= 1`) plus its origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitStream {
    digits: Vec<u64>,
    source: StreamSource,
}

impl DigitStream {
    pub(crate) fn new(digits: Vec<u64>, source: StreamSource) -> Self {
        debug_assert!(digits.iter().all(|&d| d >= 1));
        DigitStream { digits, source }
    }

    pub fn from_digits(digits: Vec<u64>) -> Result<Self> {
        if let Some(i) = digits.iter().position(|&d| d == 0) {
            return Err(CfError::domain(format!("digit {i} of the stream is 0")));
        }
        Ok(DigitStream::new(digits, StreamSource::Explicit))
    }

    /// `pattern` repeated until `len` digits.
    pub fn periodic(pattern: &[u64], len: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(CfError::domain("periodic stream needs a non-empty pattern"));
        }
        DigitStream::from_digits(pattern.iter().copied().cycle().take(len).collect())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| CfError::io(path, e))?;
        let digits = decode(&bytes)?;
        Ok(DigitStream::new(
            digits,
            StreamSource::File {
                path: path.to_path_buf(),
            },
        ))
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn source(&self) -> &StreamSource {
        &self.source
    }

    pub fn into_digits(self) -> Vec<u64> {
        self.digits
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, encode(&self.digits)).map_err(|e| CfError::io(path, e))
    }
}

pub fn stream_from_digits(digits: Vec<u64>) -> Result<DigitStream> {
    DigitStream::from_digits(digits)
}

pub fn stream_from_file(path: impl AsRef<Path>) -> Result<DigitStream> {
    DigitStream::from_file(path)
}

pub fn encode(digits: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + digits.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(digits.len() as u64).to_le_bytes());
    for &d in digits {
        let mut v = d;
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                out.push(byte);
                break;
            }
            out.push(byte | 0x80);
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<u64>> {
    let err = |offset: usize, message: &str| CfError::Parse {
        offset: offset as u64,
        message: message.to_string(),
    };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(err(0, "missing CFD1 magic"));
    }
    if bytes.len() < 12 {
        return Err(err(4, "truncated digit count"));
    }
    let count = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes"));
    let mut digits = Vec::with_capacity(count.min(1 << 24) as usize);
    let mut pos = 12;
    for _ in 0..count {
        let start = pos;
        let mut value: u64 = 0;
        let mut shift = 0u32;
        loop {
            let Some(&byte) = bytes.get(pos) else {
                return Err(err(pos, "truncated varint"));
            };
            pos += 1;
            let chunk = (byte & 0x7f) as u64;
            if shift >= 64 || (shift == 63 && chunk > 1) {
                return Err(err(start, "varint overflows u64"));
            }
            value |= chunk << shift;
            if byte & 0x80 == 0 {
                break;
            }
            shift += 7;
        }
        if value == 0 {
            return Err(err(start, "digit 0 is not a continued-fraction digit"));
        }
        digits.push(value);
    }
    if pos != bytes.len() {
        return Err(err(pos, "trailing bytes after the declared digit count"));
    }
    Ok(digits)
}

/// Sidecar describing how a stream file was produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamMetadata {
    pub seed: Option<u64>,
    pub prng_algorithm: Option<String>,
    pub count: u64,
    pub created_utc: String,
    pub tool_version: String,
}

impl StreamMetadata {
    pub fn for_stream(stream: &DigitStream) -> Self {
        let (seed, prng_algorithm) = match stream.source() {
            StreamSource::Sampler { seed, algorithm } => (Some(*seed), Some(algorithm.clone())),
            _ => (None, None),
        };
        StreamMetadata {
            seed,
            prng_algorithm,
            count: stream.len() as u64,
            created_utc: chrono::Utc::now().to_rfc3339(),
            tool_version: crate::TOOL_VERSION.to_string(),
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the stream file and its JSON sidecar; returns the sidecar path.
pub fn write_with_metadata(stream: &DigitStream, path: &Path) -> Result<PathBuf> {
    stream.write_to(path)?;
    let meta = StreamMetadata::for_stream(stream);
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta)?;
    fs::write(&side, json).map_err(|e| CfError::io(&side, e))?;
    Ok(side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_stream_encodes_header_only() {
        let bytes = encode(&[]);
        assert_eq!(bytes, b"CFD1\0\0\0\0\0\0\0\0");
        assert_eq!(decode(&bytes).unwrap(), Vec::<u64>::new());
    }

    #[test]
    fn leb128_layout() {
        let bytes = encode(&[1, 127, 128, 300]);
        assert_eq!(&bytes[12..], &[0x01, 0x7f, 0x80, 0x01, 0xac, 0x02]);
    }

    #[test]
    fn parse_errors_report_offsets() {
        let offset = |bytes: &[u8]| match decode(bytes) {
            Err(CfError::Parse { offset, .. }) => offset,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(offset(b"XXXX"), 0);
        assert_eq!(offset(b"CFD1\x01\0"), 4);
        let mut truncated = encode(&[5, 200]);
        truncated.pop();
        assert_eq!(offset(&truncated), 14);
        let mut zero = encode(&[5, 6]);
        zero[13] = 0;
        assert_eq!(offset(&zero), 13);
        let mut trailing = encode(&[5]);
        trailing.push(1);
        assert_eq!(offset(&trailing), 13);
    }

    #[test]
    fn periodic_streams() {
        let s = DigitStream::periodic(&[2], 10).unwrap();
        assert!(s.digits().iter().all(|&d| d == 2));
        assert!(DigitStream::from_digits(vec![1, 0]).is_err());
        assert!(DigitStream::periodic(&[], 3).is_err());
    }

    #[test]
    fn file_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.cfd");
        let stream = crate::sampler::sample_stream(9, 100_000);
        let side = write_with_metadata(&stream, &path).unwrap();
        let back = DigitStream::from_file(&path).unwrap();
        assert_eq!(back.digits(), stream.digits());
        let meta: StreamMetadata = serde_json::from_str(&fs::read_to_string(side).unwrap()).unwrap();
        assert_eq!(meta.seed, Some(9));
        assert_eq!(meta.count, 100_000);
    }

    proptest! {
        #[test]
        fn encode_decode_inverse(digits in prop::collection::vec(1u64..=u64::MAX, 0..50)) {
            prop_assert_eq!(decode(&encode(&digits)).unwrap(), digits);
        }
    }
}
