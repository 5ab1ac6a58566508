use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of subjects with 0, 1 and 2 affected eyes in one group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub label: String,
    pub m0: u64,
    pub m1: u64,
    pub m2: u64,
}

impl GroupCounts {
    pub fn new(label: impl Into<String>, m0: u64, m1: u64, m2: u64) -> Self {
        Self {
            label: label.into(),
            m0,
            m1,
            m2,
        }
    }

    /// Number of subjects `m_i`.
    pub fn total(&self) -> u64 {
        self.m0 + self.m1 + self.m2
    }

    pub fn counts(&self) -> [u64; 3] {
        [self.m0, self.m1, self.m2]
    }
}

/// Groups-by-affected-eyes frequency table.
///
/// Every group must contain at least one subject. Group order is significant
/// and preserved; homogeneity tests additionally need two or more groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    groups: Vec<GroupCounts>,
}

impl FrequencyTable {
    pub fn new(groups: Vec<GroupCounts>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidTable("no groups".into()));
        }
        let mut seen = HashSet::new();
        for (i, g) in groups.iter().enumerate() {
            if g.total() == 0 {
                return Err(Error::InvalidTable(format!(
                    "group {} ({:?}) has no subjects",
                    i + 1,
                    g.label
                )));
            }
            if !seen.insert(g.label.as_str()) {
                return Err(Error::InvalidTable(format!("duplicate group label {:?}", g.label)));
            }
        }
        Ok(Self { groups })
    }

    /// Unlabelled table; groups are named `1..=g`.
    pub fn from_counts(counts: &[[u64; 3]]) -> Result<Self> {
        Self::new(
            counts
                .iter()
                .enumerate()
                .map(|(i, c)| GroupCounts::new((i + 1).to_string(), c[0], c[1], c[2]))
                .collect(),
        )
    }

    /// Number of groups `g`.
    pub fn g(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[GroupCounts] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &GroupCounts {
        &self.groups[i]
    }

    pub fn sizes(&self) -> Vec<u64> {
        self.groups.iter().map(GroupCounts::total).collect()
    }

    /// Total number of subjects `N`.
    pub fn total(&self) -> u64 {
        self.groups.iter().map(GroupCounts::total).sum()
    }

    /// `(S_0, S_1, S_2)`: subjects with 0, 1, 2 affected eyes over all groups.
    pub fn column_totals(&self) -> [u64; 3] {
        self.groups.iter().fold([0; 3], |acc, g| {
            [acc[0] + g.m0, acc[1] + g.m1, acc[2] + g.m2]
        })
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Result<Self> {
        Self::new(
            self.groups
                .iter()
                .map(|g| GroupCounts::new(g.label.clone(), g.m0 * factor, g.m1 * factor, g.m2 * factor))
                .collect(),
        )
    }

    /// Table whose group `k` is group `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.g()).collect::<Vec<_>>() {
            return Err(Error::InvalidTable(format!("{order:?} is not a permutation")));
        }
        Self::new(order.iter().map(|&i| self.groups[i].clone()).collect())
    }

    pub(crate) fn counts_f64(&self) -> Vec<[f64; 3]> {
        self.groups
            .iter()
            .map(|g| [g.m0 as f64, g.m1 as f64, g.m2 as f64])
            .collect()
    }
}
