//! Set-partition patterns of `{0, …, d−1}` with their cumulant weights
//! `w(π) = (−1)^{|π|−1} (|π|−1)!`.

use crate::error::{bail, Result};

/// Largest order for which patterns are generated.
pub const MAX_PATTERN_ORDER: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionPattern {
    /// Blocks as sorted position lists; blocks are ordered by their first
    /// element.
    pub blocks: Vec<Vec<usize>>,
    pub weight: f64,
    /// Each block as a bitmask over positions.
    pub masks: Vec<u32>,
}

impl PartitionPattern {
    fn from_blocks(blocks: Vec<Vec<usize>>) -> Self {
        let nb = blocks.len();
        let fact: f64 = (1..nb).map(|v| v as f64).product();
        let weight = if nb % 2 == 1 { fact } else { -fact };
        let masks = blocks
            .iter()
            .map(|b| b.iter().fold(0u32, |m, &i| m | (1 << i)))
            .collect();
        PartitionPattern {
            blocks,
            weight,
            masks,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }
}

/// All set partitions of `{0, …, d−1}`, generated from restricted growth
/// strings. The list has Bell-number length.
pub fn partition_patterns(d: usize) -> Result<Vec<PartitionPattern>> {
    if d == 0 || d > MAX_PATTERN_ORDER {
        bail!(Domain, "partition order {d} outside 1..={MAX_PATTERN_ORDER}");
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; d];
    loop {
        let nb = rgs.iter().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); nb];
        for (pos, &b) in rgs.iter().enumerate() {
            blocks[b].push(pos);
        }
        out.push(PartitionPattern::from_blocks(blocks));
        // next restricted growth string: a[i] ≤ 1 + max(a[0..i])
        let mut i = d - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            let prefix_max = rgs[..i].iter().max().copied().unwrap_or(0);
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for v in rgs[i + 1..].iter_mut() {
                    *v = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Patterns for every order `1..=K`, built once and shared read-only.
#[derive(Clone, Debug)]
pub struct PatternSet {
    by_order: Vec<Vec<PartitionPattern>>,
}

impl PatternSet {
    pub fn new(max_order: usize) -> Result<Self> {
        let mut by_order = vec![Vec::new()];
        for d in 1..=max_order {
            by_order.push(partition_patterns(d)?);
        }
        Ok(PatternSet { by_order })
    }

    pub fn order(&self, d: usize) -> &[PartitionPattern] {
        &self.by_order[d]
    }

    pub fn max_order(&self) -> usize {
        self.by_order.len() - 1
    }
}
