//! Binary tree topology over a padded token sequence.
//!
//! The balanced tree uses heap (level-order) ids: the root is 0, the children
//! of node `i` are `2i + 1` and `2i + 2`, and the leaves are the last `n` ids
//! in left-to-right order.

use crate::error::{Error, Result};

/// Label used for padding positions in rendered spans.
pub const PAD_LABEL: &str = "−";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    /// `(left, right)` for internal nodes.
    pub children: Option<(usize, usize)>,
    pub depth: usize,
    /// Half-open token range `[start, end)` over the padded sequence.
    pub span: (usize, usize),
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeTopology {
    nodes: Vec<TreeNode>,
    /// Leaf ids in token order.
    leaves: Vec<usize>,
    is_pad: Vec<bool>,
    root: usize,
    schedule: Vec<Vec<usize>>,
}

/// Smallest power of two `>= n` (n >= 1).
pub fn padded_len(n: usize) -> usize {
    n.next_power_of_two()
}

/// Appends `pad` until the length is the next power of two.
pub fn pad_sequence<S: Clone>(tokens: &[S], pad: S) -> Result<Vec<S>> {
    if tokens.is_empty() {
        return Err(Error::InvalidInput("cannot pad an empty sequence".into()));
    }
    let mut out = tokens.to_vec();
    out.resize(padded_len(tokens.len()), pad);
    Ok(out)
}

/// Balanced full binary tree over `n_leaves` (a power of two) leaves.
pub fn build_full_binary_tree(n_leaves: usize) -> Result<TreeTopology> {
    if n_leaves == 0 || !n_leaves.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "leaf count must be a power of two, got {n_leaves}"
        )));
    }
    let total = 2 * n_leaves - 1;
    let first_leaf = n_leaves - 1;
    let mut nodes = Vec::with_capacity(total);
    for i in 0..total {
        let depth = usize::BITS as usize - 1 - (i + 1).leading_zeros() as usize;
        let parent = (i > 0).then(|| (i - 1) / 2);
        let children = (i < first_leaf).then(|| (2 * i + 1, 2 * i + 2));
        // Width of the span at this depth, and position within the level.
        let width = n_leaves >> depth;
        let pos = i + 1 - (1 << depth);
        nodes.push(TreeNode {
            parent,
            children,
            depth,
            span: (pos * width, (pos + 1) * width),
        });
    }
    let leaves: Vec<usize> = (first_leaf..total).collect();
    let max_depth = n_leaves.trailing_zeros() as usize;
    let schedule = (0..=max_depth)
        .rev()
        .map(|d| ((1 << d) - 1..(1 << (d + 1)) - 1).collect())
        .collect();
    Ok(TreeTopology {
        nodes,
        leaves,
        is_pad: vec![false; n_leaves],
        root: 0,
        schedule,
    })
}

impl TreeTopology {
    /// Tree for a sequence of `len` real tokens: padded to the next power of
    /// two with trailing pads flagged.
    pub fn for_sequence(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidInput("empty sequence".into()));
        }
        let mut t = build_full_binary_tree(padded_len(len))?;
        for p in t.is_pad.iter_mut().skip(len) {
            *p = true;
        }
        Ok(t)
    }

    /// Chain that folds leaves left to right: each internal node joins the
    /// previous fold with the next token. No padding is added.
    ///
    /// Leaves take ids `0..n`; internal node `n + j` covers tokens `0..j + 2`.
    pub fn left_branching(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidInput("empty sequence".into()));
        }
        let total = 2 * len - 1;
        let mut nodes: Vec<TreeNode> = (0..total)
            .map(|_| TreeNode {
                parent: None,
                children: None,
                depth: 0,
                span: (0, 0),
            })
            .collect();
        for (p, node) in nodes.iter_mut().take(len).enumerate() {
            node.span = (p, p + 1);
        }
        let mut prev = 0;
        let mut schedule = vec![(0..len).collect::<Vec<_>>()];
        for j in 0..len - 1 {
            let id = len + j;
            let right = j + 1;
            nodes[id].children = Some((prev, right));
            nodes[id].span = (0, j + 2);
            nodes[prev].parent = Some(id);
            nodes[right].parent = Some(id);
            schedule.push(vec![id]);
            prev = id;
        }
        let root = prev;
        // Depths from the root down.
        let mut stack = vec![(root, 0)];
        while let Some((id, d)) = stack.pop() {
            nodes[id].depth = d;
            if let Some((l, r)) = nodes[id].children {
                stack.push((l, d + 1));
                stack.push((r, d + 1));
            }
        }
        Ok(TreeTopology {
            nodes,
            leaves: (0..len).collect(),
            is_pad: vec![false; len],
            root,
            schedule,
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> Result<&TreeNode> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::InvalidInput(format!("node id {id} out of range 0..{}", self.nodes.len())))
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Leaf ids in token order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn is_pad(&self, leaf_position: usize) -> bool {
        self.is_pad[leaf_position]
    }

    pub fn pad_count(&self) -> usize {
        self.is_pad.iter().filter(|&&p| p).count()
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Levels for bottom-up evaluation: level 0 holds the leaves left to
    /// right; every node's children appear in an earlier level.
    pub fn bottom_up_schedule(&self) -> &[Vec<usize>] {
        &self.schedule
    }

    /// Node ids in bottom-up schedule order, flattened.
    pub fn schedule_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.schedule.iter().flatten().copied()
    }

    /// Surface phrase covered by `node`; pad positions render as [`PAD_LABEL`].
    pub fn node_span_label<S: AsRef<str>>(&self, node: usize, tokens: &[S]) -> Result<String> {
        let (start, end) = self.node(node)?.span;
        let words: Vec<&str> = (start..end)
            .map(|p| {
                if self.is_pad.get(p).copied().unwrap_or(true) || p >= tokens.len() {
                    PAD_LABEL
                } else {
                    tokens[p].as_ref()
                }
            })
            .collect();
        Ok(words.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_examples() {
        assert_eq!(pad_sequence(&["a", "b", "c"], "−").unwrap(), vec!["a", "b", "c", "−"]);
        assert_eq!(pad_sequence(&[1, 2, 3, 4], 0).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(pad_sequence(&[7], 0).unwrap(), vec![7]);
        assert!(pad_sequence::<u8>(&[], 0).is_err());
    }

    #[test]
    fn build_examples() {
        let t = build_full_binary_tree(4).unwrap();
        assert_eq!(t.n_nodes(), 7);
        assert_eq!(t.max_depth(), 2);
        assert_eq!(t.leaves(), &[3, 4, 5, 6]);

        let t = build_full_binary_tree(1).unwrap();
        assert_eq!(t.n_nodes(), 1);
        assert_eq!(t.root(), 0);
        assert!(t.node(0).unwrap().is_leaf());

        let t = build_full_binary_tree(8).unwrap();
        assert_eq!(t.n_nodes(), 15);
        assert!(t.leaves().iter().all(|&l| t.node(l).unwrap().depth == 3));

        assert!(build_full_binary_tree(3).is_err());
        assert!(build_full_binary_tree(0).is_err());
    }

    #[test]
    fn schedule_examples() {
        let t = build_full_binary_tree(4).unwrap();
        assert_eq!(t.bottom_up_schedule(), &[vec![3, 4, 5, 6], vec![1, 2], vec![0]]);
        let t = build_full_binary_tree(1).unwrap();
        assert_eq!(t.bottom_up_schedule(), &[vec![0]]);
    }

    #[test]
    fn span_labels() {
        let t = TreeTopology::for_sequence(3).unwrap();
        let toks = ["a", "dog", "runs"];
        assert_eq!(t.node_span_label(t.leaves()[0], &toks).unwrap(), "a");
        assert_eq!(t.node_span_label(t.root(), &toks).unwrap(), "a dog runs −");
        assert_eq!(t.node_span_label(1, &toks).unwrap(), "a dog");
        assert_eq!(t.node_span_label(6, &toks).unwrap(), "−");
        assert!(t.node_span_label(7, &toks).is_err());
    }

    #[test]
    fn pad_flags() {
        let t = TreeTopology::for_sequence(3).unwrap();
        assert_eq!(t.n_leaves(), 4);
        assert!(t.is_pad(3) && !t.is_pad(2));
        assert_eq!(t.pad_count(), 1);
    }

    #[test]
    fn left_branching_chain() {
        let t = TreeTopology::left_branching(5).unwrap();
        assert_eq!(t.n_nodes(), 9);
        assert_eq!(t.bottom_up_schedule().len(), 5);
        assert_eq!(t.node(t.root()).unwrap().span, (0, 5));
        assert_eq!(t.max_depth(), 4);
        let internal = t.nodes().iter().filter(|n| !n.is_leaf()).count();
        assert_eq!(internal, 4);
    }

    #[test]
    fn invariants_for_all_sizes() {
        for d in 0..=10 {
            let n = 1usize << d;
            let t = build_full_binary_tree(n).unwrap();
            assert_eq!(t.n_nodes(), 2 * n - 1);
            assert_eq!(t.n_leaves(), n);
            assert_eq!(t.max_depth(), d);
            assert_eq!(t.bottom_up_schedule().len(), d + 1);
            let mut seen: Vec<usize> = t.schedule_order().collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..2 * n - 1).collect::<Vec<_>>());
            for (id, node) in t.nodes().iter().enumerate() {
                if let Some((l, r)) = node.children {
                    assert_eq!(t.nodes()[l].parent, Some(id));
                    assert_eq!(t.nodes()[r].parent, Some(id));
                    assert_eq!(t.nodes()[l].span.1, t.nodes()[r].span.0);
                    assert_eq!((t.nodes()[l].span.0, t.nodes()[r].span.1), node.span);
                } else {
                    assert_eq!(node.span.1 - node.span.0, 1);
                }
            }
        }
    }
}
