//! Binary impulse-response recording, little-endian.
//!
//! ```text
//! header   "VMPC" | version u16 | B f64 (Hz) | T_b f64 (s) | U u32 | sets u32
//! set      index u32 | t0 f64 | d f64 | v_tx f64 | v_rx f64 | snapshots u8
//! snapshot t f64 | reference_delay f64 (ns) | U × (re f32, im f32)
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex32;

use super::recording::{CirSnapshot, RecordingHeader, RecordingSet};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VMPC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 30;

pub struct CirWriter<W: Write> {
    out: W,
    header: RecordingHeader,
    written: u32,
    buf: Vec<u8>,
}

impl CirWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, header: RecordingHeader) -> Result<Self> {
        CirWriter::new(BufWriter::with_capacity(1 << 20, File::create(path)?), header)
    }
}

impl<W: Write> CirWriter<W> {
    pub fn new(mut out: W, header: RecordingHeader) -> Result<Self> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&header.bandwidth.to_le_bytes())?;
        out.write_all(&header.bin_s.to_le_bytes())?;
        out.write_all(&header.delay_bins.to_le_bytes())?;
        out.write_all(&header.set_count.to_le_bytes())?;
        Ok(CirWriter { out, header, written: 0, buf: Vec::new() })
    }

    pub fn write_set(&mut self, set: &RecordingSet) -> Result<()> {
        if self.written >= self.header.set_count {
            return Err(Error::Config(format!("header declares {} sets", self.header.set_count)));
        }
        let n = u8::try_from(set.snapshots.len())
            .map_err(|_| Error::Config(format!("set {} has {} snapshots", set.index, set.snapshots.len())))?;
        let b = &mut self.buf;
        b.clear();
        b.extend_from_slice(&(set.index as u32).to_le_bytes());
        for v in [set.t0, set.d, set.v_tx, set.v_rx] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.push(n);
        for s in &set.snapshots {
            if s.h.len() != self.header.delay_bins as usize {
                return Err(Error::Config(format!(
                    "snapshot has {} bins, header declares {}",
                    s.h.len(),
                    self.header.delay_bins
                )));
            }
            b.extend_from_slice(&s.t.to_le_bytes());
            b.extend_from_slice(&s.reference_delay_ns.to_le_bytes());
            for c in &s.h {
                b.extend_from_slice(&c.re.to_le_bytes());
                b.extend_from_slice(&c.im.to_le_bytes());
            }
        }
        self.out.write_all(b)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.set_count {
            return Err(Error::Config(format!(
                "wrote {} sets but the header declares {}",
                self.written, self.header.set_count
            )));
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Streaming reader; yields one set at a time.
pub struct CirReader<R: Read> {
    input: R,
    header: RecordingHeader,
    offset: u64,
    read: u32,
    buf: Vec<u8>,
}

impl CirReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        CirReader::new(BufReader::with_capacity(1 << 20, File::open(path)?))
    }
}

fn corrupt(offset: u64, reason: impl Into<String>) -> Error {
    Error::Corrupt { offset, reason: reason.into() }
}

impl<R: Read> CirReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let mut h = [0u8; HEADER_LEN as usize];
        read_exact_at(&mut input, &mut h, 0, "header")?;
        if &h[0..4] != MAGIC {
            return Err(corrupt(0, "bad magic, not a VMPC recording"));
        }
        let version = u16::from_le_bytes([h[4], h[5]]);
        if version != VERSION {
            return Err(corrupt(4, format!("unsupported version {version}")));
        }
        let f = |i: usize| f64::from_le_bytes(h[i..i + 8].try_into().expect("8 bytes"));
        let u = |i: usize| u32::from_le_bytes(h[i..i + 4].try_into().expect("4 bytes"));
        let header = RecordingHeader { bandwidth: f(6), bin_s: f(14), delay_bins: u(22), set_count: u(26) };
        if !(header.bandwidth.is_finite() && header.bandwidth > 0.0) {
            return Err(corrupt(6, "bandwidth must be positive"));
        }
        if !(header.bin_s.is_finite() && header.bin_s > 0.0) {
            return Err(corrupt(14, "bin width must be positive"));
        }
        if header.delay_bins == 0 {
            return Err(corrupt(22, "empty delay grid"));
        }
        Ok(CirReader { input, header, offset: HEADER_LEN, read: 0, buf: Vec::new() })
    }

    pub fn header(&self) -> RecordingHeader {
        self.header
    }

    fn read_set(&mut self) -> Result<RecordingSet> {
        let start = self.offset;
        let mut fixed = [0u8; 37];
        read_exact_at(&mut self.input, &mut fixed, start, "set header")?;
        let f = |i: usize| f64::from_le_bytes(fixed[i..i + 8].try_into().expect("8 bytes"));
        let index = u32::from_le_bytes(fixed[0..4].try_into().expect("4 bytes")) as usize;
        let (t0, d, v_tx, v_rx) = (f(4), f(12), f(20), f(28));
        let count = fixed[36];
        if count == 0 {
            return Err(corrupt(start + 36, "set without snapshots"));
        }
        if ![t0, d, v_tx, v_rx].iter().all(|v| v.is_finite()) {
            return Err(corrupt(start + 4, "non-finite set kinematics"));
        }
        self.offset += 37;
        let u = self.header.delay_bins as usize;
        let mut snapshots = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let mut head = [0u8; 16];
            read_exact_at(&mut self.input, &mut head, self.offset, "snapshot header")?;
            let t = f64::from_le_bytes(head[0..8].try_into().expect("8 bytes"));
            let reference_delay_ns = f64::from_le_bytes(head[8..16].try_into().expect("8 bytes"));
            self.offset += 16;
            self.buf.resize(u * 8, 0);
            read_exact_at(&mut self.input, &mut self.buf, self.offset, "snapshot samples")?;
            let h = self
                .buf
                .chunks_exact(8)
                .map(|c| {
                    Complex32::new(
                        f32::from_le_bytes(c[0..4].try_into().expect("4 bytes")),
                        f32::from_le_bytes(c[4..8].try_into().expect("4 bytes")),
                    )
                })
                .collect();
            self.offset += (u * 8) as u64;
            snapshots.push(CirSnapshot { t, reference_delay_ns, h });
        }
        Ok(RecordingSet { index, t0, d, v_tx, v_rx, snapshots })
    }

    /// Confirm that nothing follows the declared sets.
    pub fn expect_end(&mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        loop {
            match self.input.read(&mut probe) {
                Ok(0) => return Ok(()),
                Ok(_) => return Err(corrupt(self.offset, "trailing bytes after the last declared set")),
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }
}

fn read_exact_at<R: Read>(input: &mut R, buf: &mut [u8], offset: u64, what: &str) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(corrupt(
                    offset + filled as u64,
                    format!("unexpected end of file in {what} ({} of {} bytes)", filled, buf.len()),
                ))
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

impl<R: Read> Iterator for CirReader<R> {
    type Item = Result<RecordingSet>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.read >= self.header.set_count {
            return None;
        }
        self.read += 1;
        let r = self.read_set();
        if r.is_err() {
            // Stop after the first error.
            self.read = self.header.set_count;
        }
        Some(r)
    }
}

pub fn write_cir(path: impl AsRef<Path>, header: RecordingHeader, sets: &[RecordingSet]) -> Result<()> {
    let mut w = CirWriter::create(path, header)?;
    for s in sets {
        w.write_set(s)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_cir(path: impl AsRef<Path>) -> Result<(RecordingHeader, Vec<RecordingSet>)> {
    let mut r = CirReader::open(path)?;
    let header = r.header();
    let mut sets = Vec::with_capacity(header.set_count as usize);
    for s in r.by_ref() {
        sets.push(s?);
    }
    r.expect_end()?;
    Ok((header, sets))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (RecordingHeader, Vec<RecordingSet>) {
        let header = RecordingHeader { bandwidth: 1e9, bin_s: 1e-9, delay_bins: 4, set_count: 2 };
        let sets = (0..2)
            .map(|i| RecordingSet {
                index: i,
                t0: i as f64 * 0.01,
                d: 100.0 - i as f64,
                v_tx: 10.0,
                v_rx: 12.5,
                snapshots: (0..3)
                    .map(|k| CirSnapshot {
                        t: i as f64 * 0.01 + k as f64 * 4e-4,
                        reference_delay_ns: 300.0 + k as f64,
                        h: (0..4).map(|u| Complex32::new(u as f32, -(k as f32))).collect(),
                    })
                    .collect(),
            })
            .collect();
        (header, sets)
    }

    #[test]
    fn roundtrip_is_identity() {
        let (header, sets) = sample();
        let mut w = CirWriter::new(Vec::new(), header).unwrap();
        for s in &sets {
            w.write_set(s).unwrap();
        }
        let bytes = w.finish().unwrap();
        let mut r = CirReader::new(bytes.as_slice()).unwrap();
        assert_eq!(r.header(), header);
        let back: Vec<_> = r.by_ref().map(|s| s.unwrap()).collect();
        assert_eq!(back, sets);
        r.expect_end().unwrap();
    }

    #[test]
    fn truncation_reports_offset() {
        let (header, sets) = sample();
        let mut w = CirWriter::new(Vec::new(), header).unwrap();
        for s in &sets {
            w.write_set(s).unwrap();
        }
        let bytes = w.finish().unwrap();
        let cut = &bytes[..bytes.len() - 5];
        let mut r = CirReader::new(cut).unwrap();
        assert!(r.next().unwrap().is_ok());
        match r.next().unwrap() {
            Err(Error::Corrupt { offset, .. }) => assert!(offset > HEADER_LEN && offset < bytes.len() as u64),
            other => panic!("expected corrupt error, got {other:?}"),
        }
        let mut bad = bytes.clone();
        bad[3] = b'X';
        assert!(matches!(CirReader::new(bad.as_slice()), Err(Error::Corrupt { offset: 0, .. })));
    }
}
