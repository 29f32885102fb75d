//! Sample files.
//!
//! Text: a header line `# gbs-samples v1 M=<M> N=<N> method=<m> K=<K> seed=<s>`
//! followed by one line of `0`/`1` characters per sample.
//!
//! Binary: magic `GBSS`, `u32` version, `u32` M, `u64` N (little-endian),
//! then `ceil(M/8)` bytes per sample with mode `i` in bit `i % 8` of byte
//! `i / 8`.

use crate::error::{bail, Result};
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &[u8; 4] = b"GBSS";
const VERSION: u32 = 1;

/// A set of bitstrings stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Samples {
    modes: usize,
    bits: Vec<u8>,
}

impl Samples {
    pub fn new(modes: usize, bits: Vec<u8>) -> Result<Self> {
        if modes == 0 {
            bail!(Domain, "samples need at least one mode");
        }
        if bits.len() % modes != 0 {
            bail!(Dimension, "{} bits do not split into rows of {modes}", bits.len());
        }
        if bits.iter().any(|&b| b > 1) {
            bail!(Domain, "sample bits must be 0 or 1");
        }
        Ok(Samples { modes, bits })
    }

    pub fn from_rows<R: AsRef<[u8]>>(modes: usize, rows: &[R]) -> Result<Self> {
        let mut bits = Vec::with_capacity(rows.len() * modes);
        for r in rows {
            if r.as_ref().len() != modes {
                bail!(Dimension, "row of length {} for {modes} modes", r.as_ref().len());
            }
            bits.extend_from_slice(r.as_ref());
        }
        Self::new(modes, bits)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.bits.len() / self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.modes..(i + 1) * self.modes]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u8> {
        self.bits.chunks_exact(self.modes)
    }

    pub fn as_flat(&self) -> &[u8] {
        &self.bits
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleHeader {
    pub modes: usize,
    pub samples: usize,
    pub method: String,
    pub order: usize,
    pub seed: u64,
}

impl SampleHeader {
    fn line(&self) -> String {
        format!(
            "# gbs-samples v1 M={} N={} method={} K={} seed={}",
            self.modes, self.samples, self.method, self.order, self.seed
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("#") || parts.next() != Some("gbs-samples") || parts.next() != Some("v1") {
            bail!(Format, "not a gbs-samples v1 header: {line:?}");
        }
        let mut h = SampleHeader {
            modes: 0,
            samples: 0,
            method: String::new(),
            order: 0,
            seed: 0,
        };
        let mut seen = 0;
        for kv in parts {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| crate::GbsError::Format(format!("bad header field {kv:?}")))?;
            let num = |v: &str| -> Result<u64> {
                v.parse()
                    .map_err(|_| crate::GbsError::Format(format!("bad header value {kv:?}")))
            };
            match k {
                "M" => h.modes = num(v)? as usize,
                "N" => h.samples = num(v)? as usize,
                "method" => h.method = v.to_string(),
                "K" => h.order = num(v)? as usize,
                "seed" => h.seed = num(v)?,
                _ => bail!(Format, "unknown header field {k:?}"),
            }
            seen += 1;
        }
        if seen != 5 {
            bail!(Format, "header needs M, N, method, K and seed");
        }
        Ok(h)
    }
}

pub fn samples_to_text(header: &SampleHeader, samples: &Samples) -> String {
    let mut out = String::with_capacity(samples.len() * (samples.modes() + 1) + 80);
    let _ = writeln!(out, "{}", header.line());
    for row in samples.rows() {
        out.extend(row.iter().map(|&b| if b == 0 { '0' } else { '1' }));
        out.push('\n');
    }
    out
}

pub fn write_samples_text(path: impl AsRef<Path>, header: &SampleHeader, samples: &Samples) -> Result<()> {
    check_header(header, samples)?;
    std::fs::write(path, samples_to_text(header, samples))?;
    Ok(())
}

fn check_header(header: &SampleHeader, samples: &Samples) -> Result<()> {
    if header.modes != samples.modes() || header.samples != samples.len() {
        bail!(Dimension, "header M/N do not match the samples");
    }
    Ok(())
}

pub fn samples_to_binary(samples: &Samples) -> Vec<u8> {
    let width = samples.modes().div_ceil(8);
    let mut out = Vec::with_capacity(20 + width * samples.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(samples.modes() as u32).to_le_bytes());
    out.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for row in samples.rows() {
        let mut packed = vec![0u8; width];
        for (i, &b) in row.iter().enumerate() {
            packed[i / 8] |= b << (i % 8);
        }
        out.extend_from_slice(&packed);
    }
    out
}

pub fn write_samples_binary(path: impl AsRef<Path>, samples: &Samples) -> Result<()> {
    std::fs::write(path, samples_to_binary(samples))?;
    Ok(())
}

fn parse_binary(bytes: &[u8]) -> Result<Samples> {
    if bytes.len() < 20 {
        bail!(Format, "binary sample file truncated");
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        bail!(Format, "unsupported sample file version {version}");
    }
    let modes = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let width = modes.div_ceil(8);
    if modes == 0 || bytes.len() - 20 != width.saturating_mul(n) {
        bail!(Format, "binary sample body does not hold {n} rows of {modes} modes");
    }
    let mut bits = Vec::with_capacity(n * modes);
    for row in bytes[20..].chunks_exact(width) {
        bits.extend((0..modes).map(|i| row[i / 8] >> (i % 8) & 1));
    }
    Samples::new(modes, bits)
}

fn parse_text(text: &str) -> Result<(SampleHeader, Samples)> {
    let mut lines = text.lines();
    let header = SampleHeader::parse(lines.next().unwrap_or(""))?;
    let mut bits = Vec::with_capacity(header.modes * header.samples);
    let mut rows = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let line = line.trim();
        if line.len() != header.modes {
            bail!(Format, "sample line {} has {} characters, expected {}", rows + 1, line.len(), header.modes);
        }
        for c in line.bytes() {
            match c {
                b'0' => bits.push(0),
                b'1' => bits.push(1),
                _ => bail!(Format, "invalid character {:?} in sample line {}", c as char, rows + 1),
            }
        }
        rows += 1;
    }
    if rows != header.samples {
        bail!(Format, "header announces {} samples, file has {rows}", header.samples);
    }
    let samples = Samples::new(header.modes.max(1), bits)?;
    Ok((header, samples))
}

/// Reads a text or binary sample file; the header is only present in the
/// text form.
pub fn read_samples(path: impl AsRef<Path>) -> Result<(Option<SampleHeader>, Samples)> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        return Ok((None, parse_binary(&bytes)?));
    }
    let text = std::str::from_utf8(&bytes).map_err(|_| crate::GbsError::Format("sample file is not UTF-8".into()))?;
    let (h, s) = parse_text(text)?;
    Ok((Some(h), s))
}
