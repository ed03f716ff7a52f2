//! Vershik orderings: a linear order on the edges leaving each vertex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, OrientedGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VershikOrdering {
    /// `children[v]` lists the edges with `I(e) = v`, smallest first.
    children: Vec<Vec<EdgeId>>,
    rank: Vec<usize>,
}

impl VershikOrdering {
    /// Orders the edges at each vertex by edge label.
    pub fn canonical(g: &OrientedGraph) -> Self {
        let lists: Vec<Vec<EdgeId>> = (0..g.vertex_count()).map(|v| g.outgoing(v).collect()).collect();
        Self::from_lists(g, lists).expect("canonical ordering is valid")
    }

    /// `lists[v]` must be a permutation of the edges leaving `v`.
    pub fn from_lists(g: &OrientedGraph, lists: Vec<Vec<EdgeId>>) -> Result<Self> {
        if lists.len() != g.vertex_count() {
            return Err(Error::OrderingMismatch(format!(
                "{} vertex lists for {} vertices",
                lists.len(),
                g.vertex_count()
            )));
        }
        let mut rank = vec![usize::MAX; g.edge_count()];
        for (v, list) in lists.iter().enumerate() {
            for (r, &e) in list.iter().enumerate() {
                if e >= g.edge_count() || g.initial(e) != v {
                    return Err(Error::OrderingMismatch(format!("edge {e} does not leave vertex {v}")));
                }
                if rank[e] != usize::MAX {
                    return Err(Error::OrderingMismatch(format!("edge {e} listed twice")));
                }
                rank[e] = r;
            }
        }
        if let Some(e) = rank.iter().position(|&r| r == usize::MAX) {
            return Err(Error::OrderingMismatch(format!("edge {e} is not ordered")));
        }
        Ok(VershikOrdering { children: lists, rank })
    }

    pub fn lists(&self) -> &[Vec<EdgeId>] {
        &self.children
    }

    /// Edges leaving `v` in increasing order.
    #[inline]
    pub fn children(&self, v: usize) -> &[EdgeId] {
        &self.children[v]
    }

    #[inline]
    pub fn rank(&self, e: EdgeId) -> usize {
        self.rank[e]
    }

    pub fn is_max(&self, g: &OrientedGraph, e: EdgeId) -> bool {
        self.rank[e] + 1 == self.children[g.initial(e)].len()
    }

    pub fn is_min(&self, e: EdgeId) -> bool {
        self.rank[e] == 0
    }

    pub fn next(&self, g: &OrientedGraph, e: EdgeId) -> Option<EdgeId> {
        self.children[g.initial(e)].get(self.rank[e] + 1).copied()
    }

    pub fn prev(&self, g: &OrientedGraph, e: EdgeId) -> Option<EdgeId> {
        let r = self.rank[e];
        if r == 0 {
            None
        } else {
            Some(self.children[g.initial(e)][r - 1])
        }
    }

    pub fn min_from(&self, v: usize) -> EdgeId {
        self.children[v][0]
    }

    pub fn max_from(&self, v: usize) -> EdgeId {
        *self.children[v].last().unwrap()
    }
}

/// Serializable form: per-vertex lists of edge ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingSpec(pub Vec<Vec<EdgeId>>);

impl OrderingSpec {
    pub fn build(&self, g: &OrientedGraph) -> Result<VershikOrdering> {
        VershikOrdering::from_lists(g, self.0.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::example_qa;

    #[test]
    fn canonical_qa() {
        let g = example_qa();
        let o = VershikOrdering::canonical(&g);
        assert_eq!(o.children(0), &[0, 1, 2, 3]);
        assert_eq!(o.children(1), &[4, 5, 6, 7]);
        assert!(o.is_max(&g, 3) && o.is_min(4));
        assert_eq!(o.next(&g, 4), Some(5));
    }

    #[test]
    fn rejects_foreign_edge() {
        let g = example_qa();
        let err = VershikOrdering::from_lists(&g, vec![vec![0, 1, 2, 4], vec![3, 5, 6, 7]]).unwrap_err();
        assert!(matches!(err, Error::OrderingMismatch(_)));
    }
}
