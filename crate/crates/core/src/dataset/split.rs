use std::collections::HashSet;

use super::{DatasetBundle, DatasetError, Result};
use crate::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub const fn new(train: usize, val: usize, test: usize) -> Self {
        Self { train, val, test }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

fn subset(b: &DatasetBundle, picked: &[usize]) -> DatasetBundle {
    let mut picked = picked.to_vec();
    picked.sort_unstable();
    let names: HashSet<&str> = picked.iter().map(|&i| b.images[i].file_name.as_str()).collect();
    DatasetBundle {
        registry: b.registry.clone(),
        images: picked.iter().map(|&i| b.images[i].clone()).collect(),
        annotations: b
            .annotations
            .iter()
            .filter(|a| names.contains(a.image_ref.as_str()))
            .cloned()
            .collect(),
    }
}

/// Splits by image into `[train, val, test]`.
///
/// Image positions are shuffled with the seeded stream and cut in order.
/// Each part keeps the input's image and annotation order.
pub fn split(b: &DatasetBundle, sizes: SplitSizes, seed: u64) -> Result<[DatasetBundle; 3]> {
    if sizes.total() != b.images.len() {
        return Err(DatasetError::SplitSizes {
            expected: b.images.len(),
            actual: sizes.total(),
        });
    }
    let mut order: Vec<usize> = (0..b.images.len()).collect();
    RngState::new(seed).shuffle(&mut order);
    let (train, rest) = order.split_at(sizes.train);
    let (val, test) = rest.split_at(sizes.val);
    Ok([subset(b, train), subset(b, val), subset(b, test)])
}
