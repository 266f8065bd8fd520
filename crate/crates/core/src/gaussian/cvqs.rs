//! CVQS sample files.
//!
//! Layout (little-endian):
//!
//! | offset | size | field                      |
//! |-------:|-----:|----------------------------|
//! | 0      | 4    | magic `b"CVQS"`            |
//! | 4      | 2    | version (`u16`, = 1)       |
//! | 6      | 2    | reserved, zero             |
//! | 8      | 8    | angle θ (`f64`, radians)   |
//! | 16     | 8    | count (`u64`)              |
//! | 24     | 8    | seed (`u64`)               |
//! | 32     | 4    | shard (`u32`)              |
//! | 36     | 4    | reserved, zero             |
//! | 40     | 24·n | `(x_b, x_a1, x_a2)` as `f64` triples |

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use super::sampling::{SampleBatch, SeedLineage, Triple};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CVQS";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 40;
pub const TRIPLE_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvqsHeader {
    pub angle: f64,
    pub count: u64,
    pub lineage: SeedLineage,
}

impl CvqsHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[0..4].copy_from_slice(&MAGIC);
        h[4..6].copy_from_slice(&VERSION.to_le_bytes());
        h[8..16].copy_from_slice(&self.angle.to_le_bytes());
        h[16..24].copy_from_slice(&self.count.to_le_bytes());
        h[24..32].copy_from_slice(&self.lineage.seed.to_le_bytes());
        h[32..36].copy_from_slice(&self.lineage.shard.to_le_bytes());
        h
    }

    fn parse(bytes: &[u8; HEADER_LEN], path: &Path) -> Result<Self> {
        let fail = |offset: u64, reason: String| Error::Format {
            path: path.to_path_buf(),
            offset,
            reason,
        };
        if bytes[0..4] != MAGIC {
            return Err(fail(0, format!("bad magic {:?}", &bytes[0..4])));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(fail(4, format!("unsupported version {version}")));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        Ok(Self {
            angle: f64_at(8),
            count: u64_at(16),
            lineage: SeedLineage {
                seed: u64_at(24),
                shard: u32::from_le_bytes(bytes[32..36].try_into().unwrap()),
            },
        })
    }
}

/// Streams triples into a CVQS file; the header count is fixed up front.
pub struct CvqsWriter {
    out: BufWriter<File>,
    path: PathBuf,
    remaining: u64,
}

impl CvqsWriter {
    pub fn create(path: impl AsRef<Path>, header: CvqsHeader) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(&header.to_bytes())
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            out,
            path,
            remaining: header.count,
        })
    }

    pub fn push(&mut self, t: Triple) -> Result<()> {
        if self.remaining == 0 {
            return Err(Error::Format {
                path: self.path.clone(),
                offset: 0,
                reason: "more triples written than declared in the header".into(),
            });
        }
        self.remaining -= 1;
        let mut buf = [0u8; TRIPLE_LEN];
        for (k, v) in t.iter().enumerate() {
            buf[8 * k..8 * k + 8].copy_from_slice(&v.to_le_bytes());
        }
        self.out
            .write_all(&buf)
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        if self.remaining != 0 {
            return Err(Error::Format {
                path: self.path.clone(),
                offset: 0,
                reason: format!("{} declared triples never written", self.remaining),
            });
        }
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_batch(path: impl AsRef<Path>, batch: &SampleBatch) -> Result<()> {
    let mut w = CvqsWriter::create(
        path,
        CvqsHeader {
            angle: batch.angle,
            count: batch.triples.len() as u64,
            lineage: batch.lineage,
        },
    )?;
    for &t in &batch.triples {
        w.push(t)?;
    }
    w.finish()
}

/// Streaming reader over a CVQS file.
///
/// Iterating yields triples until the declared count is reached; truncated
/// payloads and trailing bytes surface as [`Error::Format`] with the byte
/// offset of the problem.
pub struct CvqsReader<R = BufReader<File>> {
    input: R,
    path: PathBuf,
    header: CvqsHeader,
    read: u64,
    done: bool,
}

/// Opens a CVQS file for streaming.
pub fn ingest(path: impl AsRef<Path>) -> Result<CvqsReader> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    CvqsReader::from_reader(BufReader::with_capacity(1 << 16, file), path)
}

impl<R: Read> CvqsReader<R> {
    pub fn from_reader(mut input: R, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut raw = [0u8; HEADER_LEN];
        let got = read_fully(&mut input, &mut raw).map_err(|e| Error::io(&path, e))?;
        if got < HEADER_LEN {
            return Err(Error::Format {
                path,
                offset: got as u64,
                reason: format!("header truncated ({got} of {HEADER_LEN} bytes)"),
            });
        }
        let header = CvqsHeader::parse(&raw, &path)?;
        Ok(Self {
            input,
            path,
            header,
            read: 0,
            done: false,
        })
    }

    pub fn header(&self) -> &CvqsHeader {
        &self.header
    }

    fn offset(&self) -> u64 {
        HEADER_LEN as u64 + self.read * TRIPLE_LEN as u64
    }

    fn next_triple(&mut self) -> Result<Option<Triple>> {
        if self.read == self.header.count {
            let mut probe = [0u8; 1];
            let extra =
                read_fully(&mut self.input, &mut probe).map_err(|e| Error::io(&self.path, e))?;
            if extra > 0 {
                return Err(Error::Format {
                    path: self.path.clone(),
                    offset: self.offset(),
                    reason: format!(
                        "payload continues past the declared count of {}",
                        self.header.count
                    ),
                });
            }
            return Ok(None);
        }
        let mut buf = [0u8; TRIPLE_LEN];
        let got = read_fully(&mut self.input, &mut buf).map_err(|e| Error::io(&self.path, e))?;
        if got < TRIPLE_LEN {
            return Err(Error::Format {
                path: self.path.clone(),
                offset: self.offset() + got as u64,
                reason: format!(
                    "payload truncated: triple {} of {} has {got} of {TRIPLE_LEN} bytes",
                    self.read, self.header.count
                ),
            });
        }
        self.read += 1;
        let v = |k: usize| f64::from_le_bytes(buf[8 * k..8 * k + 8].try_into().unwrap());
        Ok(Some([v(0), v(1), v(2)]))
    }

    /// Reads the remainder of the file into a [`SampleBatch`].
    pub fn into_batch(self) -> Result<SampleBatch> {
        let angle = self.header.angle;
        let lineage = self.header.lineage;
        let triples = self.collect::<Result<Vec<_>>>()?;
        Ok(SampleBatch {
            angle,
            triples,
            lineage,
        })
    }
}

impl<R: Read> Iterator for CvqsReader<R> {
    type Item = Result<Triple>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_triple() {
            Ok(Some(t)) => Some(Ok(t)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn read_fully(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(count: u64) -> CvqsHeader {
        CvqsHeader {
            angle: 0.25,
            count,
            lineage: SeedLineage::new(9, 2),
        }
    }

    #[test]
    fn header_layout() {
        let h = header(5).to_bytes();
        assert_eq!(&h[0..4], b"CVQS");
        assert_eq!(u16::from_le_bytes([h[4], h[5]]), 1);
        assert_eq!(f64::from_le_bytes(h[8..16].try_into().unwrap()), 0.25);
        assert_eq!(u64::from_le_bytes(h[16..24].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(h[32..36].try_into().unwrap()), 2);
    }

    #[test]
    fn empty_payload() {
        let bytes = header(0).to_bytes().to_vec();
        let r = CvqsReader::from_reader(&bytes[..], "mem").unwrap();
        assert_eq!(r.count(), 0);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = header(0).to_bytes().to_vec();
        bytes[0] = b'X';
        let err = CvqsReader::from_reader(&bytes[..], "mem").err().unwrap();
        assert!(matches!(err, Error::Format { offset: 0, .. }));
    }

    #[test]
    fn truncated_mid_triple() {
        let mut bytes = header(2).to_bytes().to_vec();
        bytes.extend_from_slice(&[0u8; TRIPLE_LEN + 10]);
        let r = CvqsReader::from_reader(&bytes[..], "mem").unwrap();
        let out: Vec<_> = r.collect();
        assert_eq!(out.len(), 2);
        match &out[1] {
            Err(Error::Format { offset, .. }) => {
                assert_eq!(*offset, (HEADER_LEN + TRIPLE_LEN + 10) as u64)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trailing_bytes() {
        let mut bytes = header(1).to_bytes().to_vec();
        bytes.extend_from_slice(&[0u8; TRIPLE_LEN + 3]);
        let r = CvqsReader::from_reader(&bytes[..], "mem").unwrap();
        let err = r.into_batch().err().unwrap();
        assert!(
            matches!(err, Error::Format { offset, .. } if offset == (HEADER_LEN + TRIPLE_LEN) as u64)
        );
    }
}
