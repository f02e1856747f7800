use serde::Serialize;

use crate::error::{Error, Result};

/// Ordered set of distinct variable indices.
///
/// Insertion order is preserved: the swapping search replaces members by
/// position, and cached pseudo-inverses are laid out in this order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet { indices: Vec::new() }
    }

    pub fn new(indices: Vec<usize>) -> Result<Self> {
        for (a, &i) in indices.iter().enumerate() {
            if indices[..a].contains(&i) {
                return Err(Error::DuplicateIndex(i));
            }
        }
        Ok(IndexSet { indices })
    }

    /// `{0, 1, ..., n-1}`.
    pub fn range(n: usize) -> Self {
        IndexSet {
            indices: (0..n).collect(),
        }
    }

    /// Checks every index is below `p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= p) {
            Some(&i) => Err(Error::Index {
                context: "symmat",
                index: i,
                len: p,
            }),
            None => Ok(()),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn position(&self, i: usize) -> Option<usize> {
        self.indices.iter().position(|&x| x == i)
    }

    pub fn push(&mut self, i: usize) -> Result<()> {
        if self.contains(i) {
            return Err(Error::DuplicateIndex(i));
        }
        self.indices.push(i);
        Ok(())
    }

    pub fn insert_at(&mut self, pos: usize, i: usize) -> Result<()> {
        if pos > self.len() {
            return Err(Error::Index {
                context: "symmat",
                index: pos,
                len: self.len() + 1,
            });
        }
        if self.contains(i) {
            return Err(Error::DuplicateIndex(i));
        }
        self.indices.insert(pos, i);
        Ok(())
    }

    pub fn remove_at(&mut self, pos: usize) -> Result<usize> {
        if pos >= self.len() {
            return Err(Error::Index {
                context: "symmat",
                index: pos,
                len: self.len(),
            });
        }
        Ok(self.indices.remove(pos))
    }

    /// Indices in `0..p` not in the set, ascending.
    pub fn complement(&self, p: usize) -> IndexSet {
        let mut mask = vec![false; p];
        for &i in &self.indices {
            if i < p {
                mask[i] = true;
            }
        }
        IndexSet {
            indices: (0..p).filter(|&i| !mask[i]).collect(),
        }
    }

    /// Copy with indices in ascending order.
    pub fn sorted(&self) -> IndexSet {
        let mut indices = self.indices.clone();
        indices.sort_unstable();
        IndexSet { indices }
    }

    pub fn intersection_len(&self, other: &IndexSet) -> usize {
        self.indices.iter().filter(|&&i| other.contains(i)).count()
    }

    /// Same members regardless of order.
    pub fn same_members(&self, other: &IndexSet) -> bool {
        self.len() == other.len() && self.sorted() == other.sorted()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.indices
    }
}

impl std::fmt::Display for IndexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (a, i) in self.indices.iter().enumerate() {
            if a > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}
