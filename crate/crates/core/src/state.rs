use crate::error::{Error, Result};
use crate::graph::NodeId;

/// A set of nodes of a fixed-size network: sorted members plus a membership
/// mask for O(1) lookups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSet {
    members: Vec<NodeId>,
    mask: Vec<bool>,
}

impl NodeSet {
    pub fn empty(universe: usize) -> Self {
        NodeSet {
            members: Vec::new(),
            mask: vec![false; universe],
        }
    }

    /// Panics if a node is outside `0..universe`.
    pub fn from_nodes(universe: usize, nodes: impl IntoIterator<Item = NodeId>) -> Self {
        let mut mask = vec![false; universe];
        for u in nodes {
            mask[u] = true;
        }
        Self::from_mask(mask)
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let members = mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
        NodeSet { members, mask }
    }

    #[inline]
    pub fn contains(&self, u: NodeId) -> bool {
        self.mask.get(u).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.iter().copied()
    }

    pub fn complement(&self) -> NodeSet {
        Self::from_mask(self.mask.iter().map(|b| !b).collect())
    }

    pub fn is_subset_of(&self, other: &NodeSet) -> bool {
        self.members.iter().all(|&u| other.contains(u))
    }
}

/// An observed activation state: which nodes ended up active (`X1`) and
/// which stayed inactive (`X0`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivationState {
    active: NodeSet,
    inactive: NodeSet,
}

impl ActivationState {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let active = NodeSet::from_mask(bits);
        let inactive = active.complement();
        ActivationState { active, inactive }
    }

    pub fn from_active(n: usize, active: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut bits = vec![false; n];
        for u in active {
            if u >= n {
                return Err(Error::invalid(format!("node {u} out of range for {n} nodes")));
            }
            bits[u] = true;
        }
        Ok(Self::from_bits(bits))
    }

    pub fn len(&self) -> usize {
        self.active.universe()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bits(&self) -> &[bool] {
        self.active.mask()
    }

    #[inline]
    pub fn is_active(&self, u: NodeId) -> bool {
        self.active.contains(u)
    }

    /// `X1`.
    pub fn active(&self) -> &NodeSet {
        &self.active
    }

    /// `X0`.
    pub fn inactive(&self) -> &NodeSet {
        &self.inactive
    }

    /// `N1 = |X1|`.
    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Hamming distance to another state over the same node set.
    pub fn hamming(&self, other: &ActivationState) -> usize {
        self.bits().iter().zip(other.bits()).filter(|(a, b)| a != b).count()
    }
}
