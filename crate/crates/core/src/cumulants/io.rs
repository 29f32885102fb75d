//! Binary table files.
//!
//! Layout (little-endian): 4-byte magic, `u32` version, `u32` M, `u32` K,
//! `u64` value count, the values as `f64`, then a `u64` checksum equal to
//! the wrapping sum of every preceding byte.

use super::{SubsetTable, TableKind};
use crate::error::{bail, Result};
use std::path::Path;

const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 4 + 4 + 8;

fn byte_sum(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |a, &b| a.wrapping_add(b as u64))
}

pub fn table_bytes<K: TableKind>(table: &SubsetTable<K>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * table.values.len() + 8);
    out.extend_from_slice(&K::MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(table.modes() as u32).to_le_bytes());
    out.extend_from_slice(&(table.max_order() as u32).to_le_bytes());
    out.extend_from_slice(&(table.values.len() as u64).to_le_bytes());
    for v in &table.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let sum = byte_sum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

fn parse<K: TableKind>(bytes: &[u8]) -> Result<SubsetTable<K>> {
    if bytes.len() < HEADER + 8 {
        bail!(Format, "{} file truncated ({} bytes)", K::NAME, bytes.len());
    }
    if bytes[..4] != K::MAGIC {
        bail!(
            Format,
            "expected magic {:?} for a {} table",
            String::from_utf8_lossy(&K::MAGIC),
            K::NAME
        );
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        bail!(Format, "unsupported table version {version}");
    }
    let modes = u32_at(8) as usize;
    let order = u32_at(12) as usize;
    let count = u64_at(16);
    let expected_len = (count as u128) * 8 + HEADER as u128 + 8;
    if expected_len != bytes.len() as u128 {
        bail!(Format, "table length {} does not match count {count}", bytes.len());
    }
    let body_end = bytes.len() - 8;
    if byte_sum(&bytes[..body_end]) != u64_at(body_end) {
        bail!(Format, "{} table checksum mismatch", K::NAME);
    }
    let values = bytes[HEADER..body_end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SubsetTable::from_values(modes, order, values)
}

pub fn write_table<K: TableKind>(path: impl AsRef<Path>, table: &SubsetTable<K>) -> Result<()> {
    std::fs::write(path, table_bytes(table))?;
    Ok(())
}

pub fn read_table<K: TableKind>(path: impl AsRef<Path>) -> Result<SubsetTable<K>> {
    parse(&std::fs::read(path)?)
}
