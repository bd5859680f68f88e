use fixedbitset::FixedBitSet;

use crate::runs::{Point, System};

/// A set of points of one system, stored densely by point index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointSet {
    bits: FixedBitSet,
}

impl PointSet {
    pub fn empty(universe: usize) -> Self {
        PointSet { bits: FixedBitSet::with_capacity(universe) }
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        PointSet { bits }
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = PointSet::empty(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.universe()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.bits.contains(index)
    }

    pub fn insert(&mut self, index: usize) {
        self.bits.insert(index);
    }

    pub fn remove(&mut self, index: usize) {
        self.bits.set(index, false);
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn points<'a>(&'a self, system: &'a System) -> impl Iterator<Item = Point> + 'a {
        self.indices().map(|i| system.point_at(i))
    }

    pub fn labels(&self, system: &System) -> Vec<String> {
        self.points(system).map(|p| system.label(p)).collect()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        PointSet { bits }
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        PointSet { bits }
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        PointSet { bits }
    }

    pub fn complement(&self) -> PointSet {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        PointSet { bits }
    }

    pub fn intersect_with(&mut self, other: &PointSet) {
        self.bits.intersect_with(&other.bits);
    }

    pub fn union_with(&mut self, other: &PointSet) {
        self.bits.union_with(&other.bits);
    }

    /// Smallest index not in the set.
    pub fn first_missing(&self) -> Option<usize> {
        self.bits.zeroes().next()
    }
}
