//! McKean binary trees, the germination chain and exact tree probabilities.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_rational::Rational64;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest size accepted by [`enumerate_trees`].
pub const ENUMERATION_LIMIT: usize = 8;
/// Largest size for which exact rational probabilities fit in 64-bit integers.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Leaf,
    Fork(usize, usize),
}

/// Which branch of an internal node a path takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A finite binary tree with ordered leaves, stored as an arena rooted at 0.
#[derive(Clone)]
pub struct McKeanTree {
    nodes: Vec<Node>,
    leaves: Vec<usize>,
}

impl McKeanTree {
    /// The single-leaf tree.
    pub fn leaf() -> Self {
        McKeanTree { nodes: vec![Node::Leaf], leaves: vec![0] }
    }

    /// Joins two trees under a new root.
    pub fn join(left: &McKeanTree, right: &McKeanTree) -> Self {
        let mut nodes = Vec::with_capacity(1 + left.nodes.len() + right.nodes.len());
        nodes.push(Node::Fork(1, 1 + left.nodes.len()));
        for (tree, off) in [(left, 1), (right, 1 + left.nodes.len())] {
            nodes.extend(tree.nodes.iter().map(|n| match *n {
                Node::Leaf => Node::Leaf,
                Node::Fork(a, b) => Node::Fork(a + off, b + off),
            }));
        }
        let leaves =
            left.leaves.iter().map(|&l| l + 1).chain(right.leaves.iter().map(|&l| l + 1 + left.nodes.len())).collect();
        McKeanTree { nodes, leaves }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.leaves.len() == 1
    }

    /// Arena ids of the leaves, left to right.
    pub fn leaf_nodes(&self) -> &[usize] {
        &self.leaves
    }

    /// Replaces the `k`-th leaf (1-based) with a cherry, in place. Returns
    /// the arena id of the new internal node.
    pub fn germinate_in_place(&mut self, k: usize) -> Result<usize> {
        let n = self.leaves.len();
        if k == 0 || k > n {
            return Err(Error::IndexOutOfRange { index: k, leaves: n });
        }
        let id = self.leaves[k - 1];
        let a = self.nodes.len();
        self.nodes.push(Node::Leaf);
        self.nodes.push(Node::Leaf);
        self.nodes[id] = Node::Fork(a, a + 1);
        self.leaves.splice(k - 1..k, [a, a + 1]);
        Ok(id)
    }

    /// The tree obtained by germinating the `k`-th leaf (1-based).
    pub fn germinate(&self, k: usize) -> Result<Self> {
        let mut t = self.clone();
        t.germinate_in_place(k)?;
        Ok(t)
    }

    fn copy_subtree(&self, root: usize) -> McKeanTree {
        let mut nodes = Vec::new();
        let mut leaves = Vec::new();
        // Preorder copy; children are visited left first so leaf order is kept.
        let mut stack = vec![(root, usize::MAX, false)];
        while let Some((old, parent, is_right)) = stack.pop() {
            let id = nodes.len();
            nodes.push(Node::Leaf);
            if parent != usize::MAX {
                if let Node::Fork(l, r) = &mut nodes[parent] {
                    if is_right {
                        *r = id;
                    } else {
                        *l = id;
                    }
                }
            }
            match self.nodes[old] {
                Node::Leaf => leaves.push(id),
                Node::Fork(l, r) => {
                    nodes[id] = Node::Fork(usize::MAX, usize::MAX);
                    stack.push((r, id, true));
                    stack.push((l, id, false));
                }
            }
        }
        McKeanTree { nodes, leaves }
    }

    /// Left and right subtrees of the root.
    pub fn split(&self) -> Result<(McKeanTree, McKeanTree)> {
        match self.nodes[0] {
            Node::Leaf => Err(Error::SplitOfLeaf),
            Node::Fork(l, r) => Ok((self.copy_subtree(l), self.copy_subtree(r))),
        }
    }

    fn subtree_leaf_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.nodes.len()];
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            order.push(id);
            if let Node::Fork(l, r) = self.nodes[id] {
                stack.push(l);
                stack.push(r);
            }
        }
        for &id in order.iter().rev() {
            counts[id] = match self.nodes[id] {
                Node::Leaf => 1,
                Node::Fork(l, r) => counts[l] + counts[r],
            };
        }
        counts
    }

    /// Folds a state along every root-to-leaf path. `step(state, angle, side)`
    /// is applied at each internal node, where `angle` is the 0-based index of
    /// the node's angle: the left subtree uses the first `n_l - 1` indices,
    /// the right subtree the next `n_r - 1`, and the root the last one.
    /// Returns one state per leaf in left-to-right order.
    pub fn fold_paths<S, F>(&self, init: S, mut step: F) -> Vec<S>
    where
        F: FnMut(&S, usize, Side) -> S,
    {
        let counts = self.subtree_leaf_counts();
        let mut out = Vec::with_capacity(self.leaves.len());
        let mut stack = vec![(0usize, init, 0usize)];
        while let Some((id, state, offset)) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf => out.push(state),
                Node::Fork(l, r) => {
                    let (nl, nr) = (counts[l], counts[r]);
                    let angle = offset + nl + nr - 2;
                    stack.push((r, step(&state, angle, Side::Right), offset + nl - 1));
                    stack.push((l, step(&state, angle, Side::Left), offset));
                }
            }
        }
        out
    }

    /// Angle index of each internal arena node (`None` for leaves).
    pub fn angle_indices(&self) -> Vec<Option<usize>> {
        let counts = self.subtree_leaf_counts();
        let mut out = vec![None; self.nodes.len()];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, offset)) = stack.pop() {
            if let Node::Fork(l, r) = self.nodes[id] {
                out[id] = Some(offset + counts[l] + counts[r] - 2);
                stack.push((l, offset));
                stack.push((r, offset + counts[l] - 1));
            }
        }
        out
    }

    /// Leaf depths, left to right.
    pub fn depths(&self) -> Vec<u32> {
        self.fold_paths(0u32, |d, _, _| d + 1)
    }

    /// Probability of this shape under the germination chain started from a
    /// single leaf: the product of `1/(n_v - 1)` over internal nodes `v`.
    pub fn probability(&self) -> f64 {
        self.subtree_leaf_counts()
            .iter()
            .zip(&self.nodes)
            .filter(|(_, n)| matches!(n, Node::Fork(..)))
            .map(|(&c, _)| 1.0 / (c - 1) as f64)
            .product()
    }

    /// Exact version of [`probability`](Self::probability).
    pub fn probability_exact(&self) -> Result<Rational64> {
        let n = self.leaf_count();
        if n > EXACT_LIMIT {
            return Err(Error::TooLarge { requested: n, limit: EXACT_LIMIT });
        }
        let denom: i64 = self
            .subtree_leaf_counts()
            .iter()
            .zip(&self.nodes)
            .filter(|(_, n)| matches!(n, Node::Fork(..)))
            .map(|(&c, _)| (c - 1) as i64)
            .product();
        Ok(Rational64::new(1, denom))
    }

    /// Balanced-parenthesis encoding: `.` is a leaf, `(LR)` a fork.
    pub fn encode(&self) -> String {
        let mut s = String::with_capacity(3 * self.leaves.len());
        let mut stack = vec![Some(0usize)];
        while let Some(item) = stack.pop() {
            match item {
                None => s.push(')'),
                Some(id) => match self.nodes[id] {
                    Node::Leaf => s.push('.'),
                    Node::Fork(l, r) => {
                        s.push('(');
                        stack.push(None);
                        stack.push(Some(r));
                        stack.push(Some(l));
                    }
                },
            }
        }
        s
    }
}

impl fmt::Display for McKeanTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl fmt::Debug for McKeanTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "McKeanTree({})", self.encode())
    }
}

impl PartialEq for McKeanTree {
    fn eq(&self, other: &Self) -> bool {
        self.leaf_count() == other.leaf_count() && self.encode() == other.encode()
    }
}

impl Eq for McKeanTree {}

impl Hash for McKeanTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.encode().hash(state);
    }
}

impl FromStr for McKeanTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        fn parse(bytes: &[u8], pos: &mut usize) -> Result<McKeanTree> {
            match bytes.get(*pos) {
                Some(b'.') => {
                    *pos += 1;
                    Ok(McKeanTree::leaf())
                }
                Some(b'(') => {
                    *pos += 1;
                    let l = parse(bytes, pos)?;
                    let r = parse(bytes, pos)?;
                    if bytes.get(*pos) != Some(&b')') {
                        return Err(Error::BadSpec(format!("expected ')' at byte {}", *pos)));
                    }
                    *pos += 1;
                    Ok(McKeanTree::join(&l, &r))
                }
                _ => Err(Error::BadSpec(format!("unexpected input at byte {}", *pos))),
            }
        }
        let bytes = s.trim().as_bytes();
        let mut pos = 0;
        let t = parse(bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(Error::BadSpec("trailing characters in tree encoding".into()));
        }
        Ok(t)
    }
}

/// Runs the germination chain for `n - 1` steps from a single leaf.
pub fn sample_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<McKeanTree> {
    if n == 0 {
        return Err(Error::BadSpec("trees have at least one leaf".into()));
    }
    let mut t = McKeanTree::leaf();
    for m in 1..n {
        let k = rng.random_range(1..=m);
        t.germinate_in_place(k)?;
    }
    Ok(t)
}

/// All trees with `n` leaves (Catalan(n-1) of them), for `n <= 8`.
pub fn enumerate_trees(n: usize) -> Result<Vec<McKeanTree>> {
    if n == 0 {
        return Err(Error::BadSpec("trees have at least one leaf".into()));
    }
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { requested: n, limit: ENUMERATION_LIMIT });
    }
    let mut by_size: Vec<Vec<McKeanTree>> = vec![Vec::new(), vec![McKeanTree::leaf()]];
    for m in 2..=n {
        let mut all = Vec::new();
        for nl in 1..m {
            for l in &by_size[nl] {
                for r in &by_size[m - nl] {
                    all.push(McKeanTree::join(l, r));
                }
            }
        }
        by_size.push(all);
    }
    Ok(by_size.swap_remove(n))
}
