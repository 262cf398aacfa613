use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offloading target plus a quantised allocation vector.
///
/// `levels[i] = j` stands for the allocation fraction `(j + 1) / L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HybridAction {
    pub target: usize,
    pub levels: Vec<usize>,
}

impl HybridAction {
    pub fn new(target: usize, levels: Vec<usize>) -> Self {
        Self { target, levels }
    }

    /// Allocation fractions in `{1/L, .., 1}`.
    pub fn allocation(&self, alloc_levels: usize) -> Vec<f64> {
        self.levels.iter().map(|&j| (j + 1) as f64 / alloc_levels as f64).collect()
    }
}

/// Flat enumeration of `(N + 1) * L^m` hybrid actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    pub targets: usize,
    pub alloc_dims: usize,
    pub alloc_levels: usize,
}

impl ActionSpace {
    pub fn new(targets: usize, alloc_dims: usize, alloc_levels: usize) -> Result<Self> {
        if targets == 0 || alloc_levels == 0 {
            return Err(Error::invalid("action_space", "targets and levels must be positive"));
        }
        Ok(Self { targets, alloc_dims, alloc_levels })
    }

    fn allocations(&self) -> usize {
        self.alloc_levels.pow(self.alloc_dims as u32)
    }

    pub fn len(&self) -> usize {
        self.targets * self.allocations()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, a: &HybridAction) -> Result<()> {
        if a.target >= self.targets {
            return Err(Error::InvalidAction(alloc::format!(
                "target {} out of range 0..{}",
                a.target,
                self.targets
            )));
        }
        if a.levels.len() != self.alloc_dims {
            return Err(Error::InvalidAction(alloc::format!(
                "expected {} allocation components, got {}",
                self.alloc_dims,
                a.levels.len()
            )));
        }
        if a.levels.iter().any(|&j| j >= self.alloc_levels) {
            return Err(Error::InvalidAction("allocation level out of range".into()));
        }
        Ok(())
    }

    /// Row-major index: target first, then allocation digits in base `L`.
    pub fn encode(&self, a: &HybridAction) -> Result<usize> {
        self.validate(a)?;
        let alloc = a.levels.iter().fold(0, |acc, &j| acc * self.alloc_levels + j);
        Ok(a.target * self.allocations() + alloc)
    }

    pub fn decode(&self, index: usize) -> Result<HybridAction> {
        if index >= self.len() {
            return Err(Error::InvalidAction(alloc::format!("action index {index} out of range 0..{}", self.len())));
        }
        let per_target = self.allocations();
        let mut rest = index % per_target;
        let mut levels = vec![0; self.alloc_dims];
        for slot in levels.iter_mut().rev() {
            *slot = rest % self.alloc_levels;
            rest /= self.alloc_levels;
        }
        Ok(HybridAction { target: index / per_target, levels })
    }

    pub fn iter(&self) -> impl Iterator<Item = HybridAction> + '_ {
        (0..self.len()).map(move |i| self.decode(i).expect("index within range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn sizes() {
        assert_eq!(ActionSpace::new(3, 1, 4).unwrap().len(), 12);
        assert_eq!(ActionSpace::new(4, 2, 3).unwrap().len(), 36);
    }

    #[test]
    fn enumeration_is_a_bijection() {
        let space = ActionSpace::new(4, 2, 3).unwrap();
        // brute force: every (target, l0, l1) exactly once
        let mut seen = BTreeSet::new();
        for t in 0..4 {
            for l0 in 0..3 {
                for l1 in 0..3 {
                    let a = HybridAction::new(t, vec![l0, l1]);
                    let i = space.encode(&a).unwrap();
                    assert!(seen.insert(i));
                    assert_eq!(space.decode(i).unwrap(), a);
                }
            }
        }
        assert_eq!(seen.len(), space.len());
        assert_eq!(space.iter().count(), 36);
    }

    #[test]
    fn rejects_out_of_range() {
        let space = ActionSpace::new(3, 1, 4).unwrap();
        assert!(space.encode(&HybridAction::new(3, vec![0])).is_err());
        assert!(space.encode(&HybridAction::new(0, vec![4])).is_err());
        assert!(space.encode(&HybridAction::new(0, vec![0, 0])).is_err());
        assert!(space.decode(12).is_err());
    }

    #[test]
    fn allocation_fractions() {
        assert_eq!(HybridAction::new(0, vec![0, 3]).allocation(4), vec![0.25, 1.0]);
    }
}
