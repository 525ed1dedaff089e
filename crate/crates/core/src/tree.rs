//! Full binary trees that fix the order in which basis directions are coupled.

use std::fmt;
use std::str::FromStr;

use crate::error::{HdcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeNode {
    /// Holds a basis index.
    Leaf(usize),
    /// Holds the node ids of the two children.
    Join(usize, usize),
}

/// A full binary tree with `d` leaves labelled by a permutation of `0..d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationTree {
    nodes: Vec<TreeNode>,
    root: usize,
    leaves: usize,
}

impl AggregationTree {
    /// Validates an explicit node arena.
    pub fn new(nodes: Vec<TreeNode>, root: usize) -> Result<Self> {
        let bad = |why: String| Err(HdcError::param("tree", why));
        if root >= nodes.len() {
            return bad(format!("root {root} out of range"));
        }
        let leaves = nodes.iter().filter(|n| matches!(n, TreeNode::Leaf(_))).count();
        if leaves < 2 {
            return bad("need at least two leaves".into());
        }
        if nodes.len() != 2 * leaves - 1 {
            return bad(format!(
                "{} nodes cannot form a full binary tree with {leaves} leaves",
                nodes.len()
            ));
        }
        let mut seen_label = vec![false; leaves];
        let mut visited = vec![false; nodes.len()];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut visited[id], true) {
                return bad(format!("node {id} is reachable twice"));
            }
            match nodes[id] {
                TreeNode::Leaf(label) => {
                    if label >= leaves || std::mem::replace(&mut seen_label[label], true) {
                        return bad(format!("leaf labels must be a permutation of 0..{leaves}"));
                    }
                }
                TreeNode::Join(l, r) => {
                    if l >= nodes.len() || r >= nodes.len() {
                        return bad(format!("node {id} has a child out of range"));
                    }
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        if visited.iter().any(|v| !v) {
            return bad("some nodes are unreachable from the root".into());
        }
        Ok(AggregationTree {
            nodes,
            root,
            leaves,
        })
    }

    /// Tournament pairing: adjacent nodes are joined layer by layer, and an
    /// odd node out passes through to the next layer.
    pub fn balanced(d: usize) -> Result<Self> {
        check_leaves(d)?;
        let mut nodes: Vec<TreeNode> = (0..d).map(TreeNode::Leaf).collect();
        let mut layer: Vec<usize> = (0..d).collect();
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            for pair in layer.chunks(2) {
                if let [l, r] = *pair {
                    nodes.push(TreeNode::Join(l, r));
                    next.push(nodes.len() - 1);
                } else {
                    next.push(pair[0]);
                }
            }
            layer = next;
        }
        let root = layer[0];
        Self::new(nodes, root)
    }

    /// Left-deep chain `(((0,1),2),…,d−1)`.
    pub fn chain(d: usize) -> Result<Self> {
        check_leaves(d)?;
        let mut nodes: Vec<TreeNode> = (0..d).map(TreeNode::Leaf).collect();
        let mut acc = 0;
        for leaf in 1..d {
            nodes.push(TreeNode::Join(acc, leaf));
            acc = nodes.len() - 1;
        }
        Self::new(nodes, acc)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Join nodes in post-order (children before parents, left before right).
    pub fn post_order_joins(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.leaves - 1);
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            match self.nodes[id] {
                TreeNode::Leaf(_) => {}
                TreeNode::Join(l, r) => {
                    if expanded {
                        out.push(id);
                    } else {
                        stack.push((id, true));
                        stack.push((r, false));
                        stack.push((l, false));
                    }
                }
            }
        }
        out
    }

    fn fmt_node(&self, id: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.nodes[id] {
            TreeNode::Leaf(label) => write!(f, "{label}"),
            TreeNode::Join(l, r) => {
                f.write_str("(")?;
                self.fmt_node(l, f)?;
                f.write_str(",")?;
                self.fmt_node(r, f)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for AggregationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_node(self.root, f)
    }
}

fn check_leaves(d: usize) -> Result<()> {
    if d < 2 {
        return Err(HdcError::param("d", format!("need at least 2 dimensions, got {d}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeKind {
    #[default]
    Balanced,
    Chain,
}

impl TreeKind {
    pub fn build(self, d: usize) -> Result<AggregationTree> {
        match self {
            TreeKind::Balanced => AggregationTree::balanced(d),
            TreeKind::Chain => AggregationTree::chain(d),
        }
    }
}

impl FromStr for TreeKind {
    type Err = HdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(TreeKind::Balanced),
            "chain" => Ok(TreeKind::Chain),
            other => Err(HdcError::param("tree", format!("unknown tree `{other}`"))),
        }
    }
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeKind::Balanced => "balanced",
            TreeKind::Chain => "chain",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_shapes() {
        assert_eq!(AggregationTree::balanced(4).unwrap().to_string(), "((0,1),(2,3))");
        assert_eq!(AggregationTree::balanced(2).unwrap().to_string(), "(0,1)");
        assert_eq!(AggregationTree::balanced(3).unwrap().to_string(), "((0,1),2)");
        assert_eq!(
            AggregationTree::balanced(5).unwrap().to_string(),
            "(((0,1),(2,3)),4)"
        );
    }

    #[test]
    fn chain_shapes() {
        assert_eq!(AggregationTree::chain(4).unwrap().to_string(), "(((0,1),2),3)");
        assert_eq!(AggregationTree::chain(2).unwrap().to_string(), "(0,1)");
        assert_eq!(AggregationTree::chain(5).unwrap().to_string(), "((((0,1),2),3),4)");
    }

    #[test]
    fn too_few_leaves() {
        assert!(AggregationTree::balanced(1).is_err());
        assert!(AggregationTree::chain(0).is_err());
    }

    #[test]
    fn post_order_of_example_schemes() {
        let t = AggregationTree::balanced(4).unwrap();
        let order: Vec<_> = t.post_order_joins().iter().map(|&id| t.nodes()[id]).collect();
        assert_eq!(
            order,
            vec![TreeNode::Join(0, 1), TreeNode::Join(2, 3), TreeNode::Join(4, 5)]
        );
        let t = AggregationTree::chain(4).unwrap();
        let order: Vec<_> = t.post_order_joins().iter().map(|&id| t.nodes()[id]).collect();
        assert_eq!(
            order,
            vec![TreeNode::Join(0, 1), TreeNode::Join(4, 2), TreeNode::Join(5, 3)]
        );
    }

    #[test]
    fn rejects_malformed_trees() {
        use TreeNode::*;
        // duplicate label
        assert!(AggregationTree::new(vec![Leaf(0), Leaf(0), Join(0, 1)], 2).is_err());
        // shared child
        assert!(AggregationTree::new(vec![Leaf(0), Leaf(1), Join(0, 0)], 2).is_err());
        // wrong node count
        assert!(AggregationTree::new(vec![Leaf(0), Leaf(1), Leaf(2), Join(0, 1)], 3).is_err());
        // cycle / unreachable
        assert!(
            AggregationTree::new(vec![Leaf(0), Leaf(1), Leaf(2), Join(0, 4), Join(3, 2)], 4)
                .is_err()
        );
        // label out of range
        assert!(AggregationTree::new(vec![Leaf(0), Leaf(5), Join(0, 1)], 2).is_err());
        assert!(AggregationTree::new(vec![Leaf(1), Leaf(0), Join(0, 1)], 2).is_ok());
    }

    proptest::proptest! {
        #[test]
        fn join_count_is_d_minus_one(d in 2usize..300) {
            for t in [AggregationTree::balanced(d).unwrap(), AggregationTree::chain(d).unwrap()] {
                proptest::prop_assert_eq!(t.leaf_count(), d);
                proptest::prop_assert_eq!(t.post_order_joins().len(), d - 1);
                proptest::prop_assert_eq!(t.nodes().len(), 2 * d - 1);
            }
        }
    }
}
