//! 8-bit interleaved IQ capture files.
//!
//! Layout (all integers and floats little-endian):
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 8  | magic `DTDFIQ\0\0` |
//! | 8  | 4  | format version (`u32`, currently 1) |
//! | 12 | 4  | reserved, zero |
//! | 16 | 8  | sample rate, samples/s (`f64`) |
//! | 24 | 8  | center RF frequency, Hz (`f64`) |
//! | 32 | 8  | MJD of the first sample (`f64`) |
//! | 40 | 8  | full-scale gain (`f64`) |
//! | 48 | 16 | channel label, UTF-8, zero padded |
//! | 64 | .. | samples: `i8` I then `i8` Q, repeated |
//!
//! A sample `x` is stored as `round(x * gain)` clamped to `[-127, 127]`;
//! reading divides by `gain`.

use std::io::{self, Read, Write};

use num_complex::Complex32;

use crate::{Error, Result};

pub const MAGIC: [u8; 8] = *b"DTDFIQ\0\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;
const LABEL_LEN: usize = 16;
const FULL_SCALE: f32 = 127.0;

#[derive(Debug, Clone, PartialEq)]
pub struct IqHeader {
    pub sample_rate: f64,
    pub center_rf: f64,
    pub start_mjd: f64,
    pub gain: f64,
    pub label: String,
}

impl IqHeader {
    pub fn to_bytes(&self) -> Result<[u8; HEADER_LEN]> {
        let label = self.label.as_bytes();
        if label.len() > LABEL_LEN {
            return Err(Error::invalid(format!("channel label {:?} longer than 16 bytes", self.label)));
        }
        if !(self.gain > 0.0) {
            return Err(Error::invalid("IQ gain must be positive"));
        }
        let mut out = [0u8; HEADER_LEN];
        out[..8].copy_from_slice(&MAGIC);
        out[8..12].copy_from_slice(&VERSION.to_le_bytes());
        out[16..24].copy_from_slice(&self.sample_rate.to_le_bytes());
        out[24..32].copy_from_slice(&self.center_rf.to_le_bytes());
        out[32..40].copy_from_slice(&self.start_mjd.to_le_bytes());
        out[40..48].copy_from_slice(&self.gain.to_le_bytes());
        out[48..48 + label.len()].copy_from_slice(label);
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8; HEADER_LEN]) -> Result<Self> {
        if buf[..8] != MAGIC {
            return Err(Error::Incompatible("not a DTDF IQ file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Incompatible(format!("unsupported IQ format version {version}")));
        }
        let f = |r: std::ops::Range<usize>| f64::from_le_bytes(buf[r].try_into().unwrap());
        let label_bytes = &buf[48..64];
        let end = label_bytes.iter().position(|&b| b == 0).unwrap_or(LABEL_LEN);
        let label = std::str::from_utf8(&label_bytes[..end])
            .map_err(|_| Error::Incompatible("IQ channel label is not UTF-8".into()))?
            .to_string();
        Ok(IqHeader {
            sample_rate: f(16..24),
            center_rf: f(24..32),
            start_mjd: f(32..40),
            gain: f(40..48),
            label,
        })
    }
}

/// Counts reported when a writer is finished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqWriteReport {
    pub samples: u64,
    /// Quadrature values that had to be clamped to full scale.
    pub clipped: u64,
}

impl IqWriteReport {
    pub fn clip_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.clipped as f64 / (2 * self.samples) as f64
        }
    }
}

fn quantize(x: f32, gain: f32, clipped: &mut u64) -> i8 {
    let v = (x * gain).round();
    if v.abs() > FULL_SCALE {
        *clipped += 1;
        v.clamp(-FULL_SCALE, FULL_SCALE) as i8
    } else {
        v as i8
    }
}

pub struct IqWriter<W: Write> {
    inner: W,
    gain: f32,
    clip_limit: f64,
    report: IqWriteReport,
    buf: Vec<u8>,
}

impl<W: Write> IqWriter<W> {
    /// Writes the header immediately. `clip_limit` is the largest tolerated
    /// fraction of clamped quadrature values.
    pub fn new(mut inner: W, header: &IqHeader, clip_limit: f64) -> Result<Self> {
        inner.write_all(&header.to_bytes()?)?;
        Ok(IqWriter {
            inner,
            gain: header.gain as f32,
            clip_limit,
            report: IqWriteReport { samples: 0, clipped: 0 },
            buf: Vec::new(),
        })
    }

    pub fn write_samples(&mut self, samples: &[Complex32]) -> Result<()> {
        self.buf.clear();
        self.buf.reserve(samples.len() * 2);
        for s in samples {
            self.buf.push(quantize(s.re, self.gain, &mut self.report.clipped) as u8);
            self.buf.push(quantize(s.im, self.gain, &mut self.report.clipped) as u8);
        }
        self.inner.write_all(&self.buf)?;
        self.report.samples += samples.len() as u64;
        Ok(())
    }

    /// Flushes and checks the clipping limit.
    pub fn finish(mut self) -> Result<(W, IqWriteReport)> {
        self.inner.flush()?;
        let fraction = self.report.clip_fraction();
        if fraction > self.clip_limit {
            return Err(Error::Clipping {
                fraction,
                limit: self.clip_limit,
            });
        }
        Ok((self.inner, self.report))
    }
}

pub struct IqReader<R: Read> {
    inner: R,
    header: IqHeader,
    buf: Vec<u8>,
}

impl<R: Read> IqReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut head = [0u8; HEADER_LEN];
        inner.read_exact(&mut head).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Incompatible("IQ file shorter than its header".into()),
            _ => Error::Io(e),
        })?;
        let header = IqHeader::from_bytes(&head)?;
        Ok(IqReader {
            inner,
            header,
            buf: Vec::new(),
        })
    }

    pub fn header(&self) -> &IqHeader {
        &self.header
    }

    /// Reads up to `n` samples into `out` (cleared first). Returns the count
    /// read; fewer than `n` means end of file.
    pub fn read_into(&mut self, n: usize, out: &mut Vec<Complex32>) -> Result<usize> {
        self.buf.resize(2 * n, 0);
        let mut filled = 0;
        while filled < self.buf.len() {
            match self.inner.read(&mut self.buf[filled..]) {
                Ok(0) => break,
                Ok(k) => filled += k,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        let count = filled / 2;
        let inv = 1.0 / self.header.gain as f32;
        out.clear();
        out.extend(
            self.buf[..count * 2]
                .chunks_exact(2)
                .map(|p| Complex32::new(p[0] as i8 as f32 * inv, p[1] as i8 as f32 * inv)),
        );
        Ok(count)
    }
}
