//! Perfect binary trees, invariant and saturated relations, characteristic
//! tuples, the tree encodings of finite structures, and the numeric decision
//! procedures for characteristic relations.
//!
//! Nodes are heap-addressed: the root is `0` and node `v` has children
//! `2v+1` and `2v+2`. A tree of depth `d` has levels `0..=d` and `2^(d+1)-1`
//! nodes, so a structure with domain `{0..h-1}` encodes onto the tree with
//! `h` levels (depth `h-1`), matching domain elements to node depths.
//!
//! The characteristic tuple of `(a_1,...,a_r)` lists, row-major, the depth
//! of each `a_i` followed by the depths of the least common ancestors
//! `a_i ^ a_j` for `j > i`; see [`pair_index`] for the layout.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::Name;
use crate::structure::{all_tuples, Relation, Structure, Tuple};

/// Automorphism groups are enumerated only up to this depth (`2^(2^d - 1)`
/// maps); the characteristic-tuple criterion has no such cap.
pub const AUTOMORPHISM_DEPTH_LIMIT: u32 = 3;

pub const ROOT_CONST: &str = "root";
pub const EDGE_REL: &str = "E";
pub const ZERO_CONST: &str = "0";
pub const SUCC_REL: &str = "SUCC";
pub const NEQ_REL: &str = "R_neq";
pub const NEG_EDGE_REL: &str = "R_nege";

/// `R*`, the characteristic relation of `R`.
pub fn star_name(rel: &str) -> Name {
    format!("{rel}*")
}

/// `~R*`, the characteristic relation of the complement of `R`.
pub fn neg_star_name(rel: &str) -> Name {
    format!("~{rel}*")
}

/// `FULm*`, the characteristic relation of the full `m`-ary relation.
pub fn ful_star_name(m: usize) -> Name {
    format!("FUL{m}*")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("depth {0} exceeds the automorphism enumeration limit {1}")]
    DepthTooLarge(u32, u32),
    #[error("length {0} is not triangular")]
    MalformedLength(usize),
    #[error("relation `{0}` is not saturated")]
    NotSaturated(Name),
    #[error("relation is not invariant")]
    NotInvariant,
    #[error("not a perfect binary tree: {0}")]
    NotAPerfectTree(String),
    #[error("name `{0}` collides with a reserved symbol")]
    NameClash(Name),
    #[error("node {0} is outside the tree")]
    NodeOutOfRange(u32),
}

// ---------------------------------------------------------------------------
// Trees and characteristic tuples
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerfectTree {
    depth: u32,
}

impl PerfectTree {
    pub fn new(depth: u32) -> Self {
        assert!(depth < 30, "tree too deep to enumerate");
        PerfectTree { depth }
    }

    /// Tree with the given number of levels (depth `levels - 1`).
    pub fn with_levels(levels: u32) -> Self {
        assert!(levels >= 1);
        PerfectTree::new(levels - 1)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn levels(&self) -> u32 {
        self.depth + 1
    }

    pub fn node_count(&self) -> u32 {
        (1u32 << (self.depth + 1)) - 1
    }

    pub fn nodes(&self) -> impl Iterator<Item = u32> {
        0..self.node_count()
    }

    pub fn depth_of(&self, node: u32) -> u32 {
        debug_assert!(node < self.node_count());
        (node + 1).ilog2()
    }

    pub fn parent(&self, node: u32) -> Option<u32> {
        if node == 0 {
            None
        } else {
            Some((node - 1) / 2)
        }
    }

    /// Least common ancestor by lifting the deeper node first.
    pub fn lca(&self, a: u32, b: u32) -> u32 {
        let (mut a, mut b) = (a, b);
        while self.depth_of(a) > self.depth_of(b) {
            a = (a - 1) / 2;
        }
        while self.depth_of(b) > self.depth_of(a) {
            b = (b - 1) / 2;
        }
        while a != b {
            a = (a - 1) / 2;
            b = (b - 1) / 2;
        }
        a
    }

    /// Directed parent-to-child edge relation.
    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        b < self.node_count() && (b == 2 * a + 1 || b == 2 * a + 2)
    }

    pub fn edge_relation(&self) -> Relation {
        let mut rel = Relation::empty(2);
        for v in self.nodes() {
            for child in [2 * v + 1, 2 * v + 2] {
                if child < self.node_count() {
                    rel.insert(vec![v, child]).expect("arity 2");
                }
            }
        }
        rel
    }
}

pub fn triangular(r: usize) -> usize {
    r * (r + 1) / 2
}

/// Inverse of [`triangular`], when the length is triangular.
pub fn arity_of_triangular(len: usize) -> Option<usize> {
    let mut r = 0;
    loop {
        let t = triangular(r);
        if t == len {
            return Some(r);
        }
        if t > len {
            return None;
        }
        r += 1;
    }
}

/// Position of the entry for `(i, j)` (0-based, `i <= j`) in the row-major
/// characteristic layout for arity `r`: row `i` starts with the depth of
/// `a_i` (the `(i, i)` entry) followed by the `(i, j)` pair entries.
pub fn pair_index(r: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    debug_assert!(j < r);
    // Rows 0..i contribute r, r-1, ... entries.
    i * (2 * r - i + 1) / 2 + (j - i)
}

/// The characteristic tuple of a node tuple.
pub fn char_tuple(tree: &PerfectTree, nodes: &[u32]) -> Tuple {
    let r = nodes.len();
    let mut out = Vec::with_capacity(triangular(r));
    for i in 0..r {
        out.push(tree.depth_of(nodes[i]));
        for j in i + 1..r {
            out.push(tree.depth_of(tree.lca(nodes[i], nodes[j])));
        }
    }
    out
}

/// The depth vector of a node tuple (saturation criterion).
fn depth_vector(tree: &PerfectTree, nodes: &[u32]) -> Tuple {
    nodes.iter().map(|&v| tree.depth_of(v)).collect()
}

// ---------------------------------------------------------------------------
// Automorphisms and invariance
// ---------------------------------------------------------------------------

/// A tree automorphism as a node permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automorphism(pub Vec<u32>);

impl Automorphism {
    pub fn apply(&self, node: u32) -> u32 {
        self.0[node as usize]
    }

    pub fn apply_tuple(&self, tuple: &[u32]) -> Tuple {
        tuple.iter().map(|&v| self.apply(v)).collect()
    }

    pub fn apply_relation(&self, rel: &Relation) -> Relation {
        let mut out = Relation::empty(rel.arity());
        for t in rel.iter() {
            out.insert(self.apply_tuple(t)).expect("arity preserved");
        }
        out
    }
}

/// All automorphisms of the tree: one independent child swap per internal
/// node, `2^(#internal)` maps in total.
pub fn enumerate_automorphisms(tree: &PerfectTree) -> Result<Vec<Automorphism>, TreeError> {
    if tree.depth() > AUTOMORPHISM_DEPTH_LIMIT {
        return Err(TreeError::DepthTooLarge(tree.depth(), AUTOMORPHISM_DEPTH_LIMIT));
    }
    let count = tree.node_count();
    let internal = if tree.depth() == 0 { 0 } else { (1u32 << tree.depth()) - 1 };
    let mut out = Vec::with_capacity(1 << internal);
    for mask in 0u64..(1u64 << internal) {
        let mut img = vec![0u32; count as usize];
        for v in 0..internal {
            let w = img[v as usize];
            let (l, r) = (2 * v + 1, 2 * v + 2);
            let (wl, wr) = (2 * w + 1, 2 * w + 2);
            if mask >> v & 1 == 0 {
                img[l as usize] = wl;
                img[r as usize] = wr;
            } else {
                img[l as usize] = wr;
                img[r as usize] = wl;
            }
        }
        out.push(Automorphism(img));
    }
    Ok(out)
}

/// Invariance by definition: fixed setwise by every automorphism. Only
/// available within the enumeration depth limit.
pub fn is_invariant(rel: &Relation, tree: &PerfectTree) -> Result<bool, TreeError> {
    let autos = enumerate_automorphisms(tree)?;
    Ok(autos.iter().all(|f| f.apply_relation(rel) == *rel))
}

/// Invariance by the characteristic criterion: membership depends only on
/// the characteristic tuple. Agrees with [`is_invariant`] and has no depth
/// cap.
pub fn is_invariant_by_char(rel: &Relation, tree: &PerfectTree) -> bool {
    let member_chars: BTreeSet<Tuple> =
        rel.iter().map(|t| char_tuple(tree, t)).collect();
    all_tuples(tree.node_count(), rel.arity())
        .all(|t| rel.contains(&t) == member_chars.contains(&char_tuple(tree, &t)))
}

/// Saturation: membership depends only on the depth vector.
pub fn is_saturated(rel: &Relation, tree: &PerfectTree) -> bool {
    let member_depths: BTreeSet<Tuple> =
        rel.iter().map(|t| depth_vector(tree, t)).collect();
    all_tuples(tree.node_count(), rel.arity())
        .all(|t| rel.contains(&t) == member_depths.contains(&depth_vector(tree, &t)))
}

/// The characteristic relation `R*`: the image of an invariant relation
/// under [`char_tuple`].
pub fn char_relation_of(rel: &Relation, tree: &PerfectTree) -> Result<Relation, TreeError> {
    if !is_invariant_by_char(rel, tree) {
        return Err(TreeError::NotInvariant);
    }
    let mut out = Relation::empty(triangular(rel.arity()));
    for t in rel.iter() {
        out.insert(char_tuple(tree, t)).expect("triangular arity");
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tree structures and the encodings
// ---------------------------------------------------------------------------

/// A perfect binary tree expanded with saturated relations over its nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStructure {
    pub tree: PerfectTree,
    relations: BTreeMap<Name, Relation>,
}

impl TreeStructure {
    pub fn new(tree: PerfectTree) -> Self {
        TreeStructure { tree, relations: BTreeMap::new() }
    }

    /// Adds a relation, enforcing saturation and the reserved names.
    pub fn set_relation(&mut self, name: &str, rel: Relation) -> Result<(), TreeError> {
        if name == ROOT_CONST || name == EDGE_REL {
            return Err(TreeError::NameClash(name.to_string()));
        }
        for t in rel.iter() {
            for &v in t {
                if v >= self.tree.node_count() {
                    return Err(TreeError::NodeOutOfRange(v));
                }
            }
        }
        if !is_saturated(&rel, &self.tree) {
            return Err(TreeError::NotSaturated(name.to_string()));
        }
        self.relations.insert(name.to_string(), rel);
        Ok(())
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }

    /// Renders the tree structure as an ordinary structure with node ids as
    /// domain elements, the `root` constant, and the edge relation `E`.
    pub fn as_structure(&self) -> Structure {
        let mut st = Structure::new(self.tree.node_count());
        st.set_constant(ROOT_CONST, 0).expect("fresh");
        st.set_relation(EDGE_REL, self.tree.edge_relation()).expect("fresh");
        for (name, rel) in &self.relations {
            st.set_relation(name, rel.clone()).expect("checked on insert");
        }
        st
    }

    /// Reads a tree structure back from its structure rendering. The edge
    /// relation must form a perfect binary tree on the whole domain rooted
    /// at `root`; node ids are renumbered heap-style level by level.
    pub fn from_structure(st: &Structure) -> Result<TreeStructure, TreeError> {
        let root = st
            .constant(ROOT_CONST)
            .ok_or_else(|| TreeError::NotAPerfectTree("missing `root` constant".into()))?;
        let edges = st
            .relation(EDGE_REL)
            .ok_or_else(|| TreeError::NotAPerfectTree("missing edge relation `E`".into()))?;
        if edges.arity() != 2 {
            return Err(TreeError::NotAPerfectTree("edge relation must be binary".into()));
        }
        let n = st.size();
        let mut children: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        let mut indegree = vec![0u32; n as usize];
        for t in edges.iter() {
            children.entry(t[0]).or_default().push(t[1]);
            indegree[t[1] as usize] += 1;
        }
        if indegree[root as usize] != 0 {
            return Err(TreeError::NotAPerfectTree("root has a parent".into()));
        }
        // Breadth-first levels; assign heap ids in visiting order.
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        map.insert(root, 0);
        let mut level = vec![root];
        let mut seen = 1u32;
        let mut next_id = 1u32;
        while !level.is_empty() {
            let mut next_level = Vec::new();
            let leaf_level = children.get(&level[0]).map_or(true, |c| c.is_empty());
            for &v in &level {
                let kids = children.get(&v).cloned().unwrap_or_default();
                if leaf_level {
                    if !kids.is_empty() {
                        return Err(TreeError::NotAPerfectTree(
                            "leaves are not all at the same level".into(),
                        ));
                    }
                    continue;
                }
                if kids.len() != 2 {
                    return Err(TreeError::NotAPerfectTree(format!(
                        "node {v} has {} children",
                        kids.len()
                    )));
                }
                for &c in &kids {
                    if indegree[c as usize] != 1 || map.contains_key(&c) {
                        return Err(TreeError::NotAPerfectTree(format!(
                            "node {c} has several parents"
                        )));
                    }
                    map.insert(c, next_id);
                    next_id += 1;
                    next_level.push(c);
                    seen += 1;
                }
            }
            level = next_level;
        }
        if seen != n {
            return Err(TreeError::NotAPerfectTree(
                "domain contains nodes not reachable from root".into(),
            ));
        }
        let levels = (n + 1).ilog2();
        if (1u32 << levels) - 1 != n {
            return Err(TreeError::NotAPerfectTree("node count is not 2^h - 1".into()));
        }
        let mut out = TreeStructure::new(PerfectTree::with_levels(levels));
        for (name, rel) in st.relations() {
            if name == EDGE_REL {
                continue;
            }
            let mapped = Relation::from_tuples(
                rel.arity(),
                rel.iter().map(|t| t.iter().map(|v| map[v]).collect()),
            )
            .expect("arity preserved");
            out.set_relation(name, mapped)?;
        }
        Ok(out)
    }
}

/// Expands a structure onto the perfect binary tree whose levels match the
/// domain: a node tuple is in `R^T` exactly when its depth vector is in
/// `R^A`. Constants of the input, if any, have no tree counterpart and are
/// dropped.
pub fn encode(a: &Structure) -> TreeStructure {
    let tree = PerfectTree::with_levels(a.size());
    let mut out = TreeStructure::new(tree);
    for (name, rel) in a.relations() {
        let mut lifted = Relation::empty(rel.arity());
        for t in all_tuples(tree.node_count(), rel.arity()) {
            if rel.contains(&depth_vector(&tree, &t)) {
                lifted.insert(t).expect("arity preserved");
            }
        }
        out.set_relation(name, lifted).expect("lifted relations are saturated");
    }
    out
}

/// Reads a structure back off a tree structure: the domain is the set of
/// levels and a depth vector is in `R^A` when some node tuple at those
/// depths is in `R^T`.
pub fn decode(t: &TreeStructure) -> Result<Structure, TreeError> {
    let mut out = Structure::new(t.tree.levels());
    for (name, rel) in t.relations() {
        if !is_saturated(rel, &t.tree) {
            return Err(TreeError::NotSaturated(name.to_string()));
        }
        let decoded = Relation::from_tuples(
            rel.arity(),
            rel.iter().map(|tuple| depth_vector(&t.tree, tuple)),
        )
        .expect("arity preserved");
        out.set_relation(name, decoded)
            .map_err(|_| TreeError::NameClash(name.to_string()))?;
    }
    Ok(out)
}

/// The numeric structure of characteristic relations: domain `{0..h-1}`
/// (one element per level), the constant `0`, the successor relation, the
/// characteristic relations of inequality and non-adjacency, the
/// characteristic relation of the full `m`-ary relation, and `R*`, `~R*`
/// for every relation of the tree structure.
pub fn sigma_structure(t: &TreeStructure, m: usize) -> Result<Structure, TreeError> {
    let tree = &t.tree;
    let nodes = tree.node_count();
    let mut out = Structure::new(tree.levels());
    out.set_constant(ZERO_CONST, 0).expect("fresh");

    let mut succ = Relation::empty(2);
    for i in 0..tree.levels().saturating_sub(1) {
        succ.insert(vec![i, i + 1]).expect("arity 2");
    }
    out.set_relation(SUCC_REL, succ).expect("fresh");

    let mut r_neq = Relation::empty(3);
    let mut r_nege = Relation::empty(3);
    for a in 0..nodes {
        for b in 0..nodes {
            let ct = char_tuple(tree, &[a, b]);
            if a != b {
                r_neq.insert(ct.clone()).expect("arity 3");
            }
            if !tree.has_edge(a, b) {
                r_nege.insert(ct).expect("arity 3");
            }
        }
    }
    out.set_relation(NEQ_REL, r_neq).expect("fresh");
    out.set_relation(NEG_EDGE_REL, r_nege).expect("fresh");

    let mut ful = Relation::empty(triangular(m));
    for tuple in all_tuples(nodes, m) {
        ful.insert(char_tuple(tree, &tuple)).expect("triangular arity");
    }
    out.set_relation(&ful_star_name(m), ful).expect("fresh");

    for (name, rel) in t.relations() {
        let star = char_relation_of(rel, tree).expect("saturated implies invariant");
        let neg_star =
            char_relation_of(&rel.complement(nodes), tree).expect("complement of invariant");
        out.set_relation(&star_name(name), star)
            .map_err(|_| TreeError::NameClash(star_name(name)))?;
        out.set_relation(&neg_star_name(name), neg_star)
            .map_err(|_| TreeError::NameClash(neg_star_name(name)))?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Numeric deciders for the characteristic relations
// ---------------------------------------------------------------------------

/// Decides membership of `(e1,e2,e3)` in the characteristic relation of
/// inequality, for trees deep enough to contain the entries.
pub fn decider_r_neq(e1: u32, e2: u32, e3: u32) -> bool {
    if e1 == e3 {
        e2 < e1
    } else {
        e2 <= e1.min(e3)
    }
}

/// Decides membership of `(e1,e2,e3)` in the characteristic relation of
/// non-adjacency.
pub fn decider_r_nege(e1: u32, e2: u32, e3: u32) -> bool {
    if e1 >= e3 {
        e2 <= e3
    } else if e1 + 1 == e3 {
        e2 < e1
    } else {
        // e1 + 1 < e3
        e2 <= e1
    }
}

// ---------------------------------------------------------------------------
// PreCHECK / CHECK
// ---------------------------------------------------------------------------

struct CandidateView<'a> {
    entries: &'a [u32],
    arity: usize,
}

impl CandidateView<'_> {
    fn new(entries: &[u32]) -> Result<CandidateView<'_>, TreeError> {
        let arity = arity_of_triangular(entries.len())
            .ok_or(TreeError::MalformedLength(entries.len()))?;
        Ok(CandidateView { entries, arity })
    }

    fn diag(&self, i: usize) -> u32 {
        self.entries[pair_index(self.arity, i, i)]
    }

    fn pair(&self, i: usize, j: usize) -> u32 {
        self.entries[pair_index(self.arity, i, j)]
    }

    fn kappa1(&self) -> u32 {
        (0..self.arity).map(|i| self.diag(i)).min().expect("arity >= 1")
    }

    fn kappa2(&self) -> u32 {
        let mut min = u32::MAX;
        for i in 0..self.arity {
            for j in i + 1..self.arity {
                min = min.min(self.pair(i, j));
            }
        }
        min
    }

    /// Index partition for the case where the set's least common ancestor is
    /// itself a member (`kappa1 == kappa2`): `s_set` holds the indices at
    /// the minimum depth, and the rest split into the pivot's side and the
    /// opposite side by their pair entry with the pivot (the first index
    /// above the minimum depth).
    fn split_equal(&self, kappa1: u32) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let s_set: Vec<usize> = (0..self.arity).filter(|&i| self.diag(i) == kappa1).collect();
        let pivot = (0..self.arity).find(|&i| self.diag(i) != kappa1);
        let mut left = Vec::new();
        let mut right = Vec::new();
        if let Some(s) = pivot {
            left.push(s);
            for i in 0..self.arity {
                if i == s || self.diag(i) == kappa1 {
                    continue;
                }
                if self.pair(s, i) > kappa1 {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            left.sort_unstable();
        }
        (s_set, left, right)
    }

    /// Index partition for the case where the least common ancestor is not a
    /// member (`kappa1 > kappa2`), pivoting on the first index.
    fn split_strict(&self, kappa2: u32) -> (Vec<usize>, Vec<usize>) {
        let mut left = vec![0];
        let mut right = Vec::new();
        for i in 1..self.arity {
            if self.pair(0, i) > kappa2 {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        (left, right)
    }

    /// The induced sub-candidate on a sorted index set.
    fn induced(&self, indices: &[usize]) -> Vec<u32> {
        let mut out = Vec::with_capacity(triangular(indices.len()));
        for (a, &i) in indices.iter().enumerate() {
            out.push(self.diag(i));
            for &j in &indices[a + 1..] {
                out.push(self.pair(i, j));
            }
        }
        out
    }
}

/// The necessary-conditions filter on candidate characteristic tuples:
/// checks the depth/ancestor constraints that every true characteristic
/// tuple satisfies at its top level. Acceptance does not yet imply the
/// candidate is a characteristic tuple; [`check`] recurses for that.
pub fn pre_check(entries: &[u32]) -> Result<bool, TreeError> {
    let view = CandidateView::new(entries)?;
    if view.arity <= 1 {
        return Ok(true);
    }
    let kappa1 = view.kappa1();
    let kappa2 = view.kappa2();
    if kappa1 < kappa2 {
        return Ok(false);
    }
    if kappa1 == kappa2 {
        let (s_set, left, right) = view.split_equal(kappa1);
        for (a, &i) in s_set.iter().enumerate() {
            for &j in &s_set[a + 1..] {
                if view.pair(i, j) != kappa1 {
                    return Ok(false);
                }
            }
        }
        for &i in &s_set {
            for &j in left.iter().chain(&right) {
                if view.pair(i, j) != kappa1 {
                    return Ok(false);
                }
            }
        }
        for (a, &i) in left.iter().enumerate() {
            for &j in &left[a + 1..] {
                if view.pair(i, j) == kappa1 {
                    return Ok(false);
                }
            }
        }
        for (a, &i) in right.iter().enumerate() {
            for &j in &right[a + 1..] {
                if view.pair(i, j) == kappa1 {
                    return Ok(false);
                }
            }
        }
        for &i in &left {
            for &j in &right {
                if view.pair(i, j) != kappa1 {
                    return Ok(false);
                }
            }
        }
    } else {
        let (left, right) = view.split_strict(kappa2);
        for (a, &i) in left.iter().enumerate() {
            for &j in &left[a + 1..] {
                if view.pair(i, j) == kappa2 {
                    return Ok(false);
                }
            }
        }
        for (a, &i) in right.iter().enumerate() {
            for &j in &right[a + 1..] {
                if view.pair(i, j) == kappa2 {
                    return Ok(false);
                }
            }
        }
        for &i in &left {
            for &j in &right {
                if view.pair(i, j) != kappa2 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Decides whether a candidate is the characteristic tuple of some node
/// tuple in a sufficiently deep perfect binary tree: the top level must pass
/// [`pre_check`], and the candidate splits at the least-common-ancestor
/// depth into the two subtree parts, each checked recursively.
pub fn check(entries: &[u32]) -> Result<bool, TreeError> {
    let view = CandidateView::new(entries)?;
    if view.arity <= 1 {
        return Ok(true);
    }
    if !pre_check(entries)? {
        return Ok(false);
    }
    let kappa1 = view.kappa1();
    let kappa2 = view.kappa2();
    let (left, right) = if kappa1 == kappa2 {
        let (_, left, right) = view.split_equal(kappa1);
        (left, right)
    } else {
        view.split_strict(kappa2)
    };
    Ok(check(&view.induced(&left))? && check(&view.induced(&right))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// A random union of characteristic-tuple classes: invariant by
    /// construction.
    fn random_invariant(rng: &mut StdRng, tree: &PerfectTree, arity: usize) -> Relation {
        let mut chosen: BTreeSet<Tuple> = BTreeSet::new();
        let mut rel = Relation::empty(arity);
        let mut decided: BTreeMap<Tuple, bool> = BTreeMap::new();
        for t in all_tuples(tree.node_count(), arity) {
            let ct = char_tuple(tree, &t);
            let take = *decided.entry(ct.clone()).or_insert_with(|| rng.gen_bool(0.5));
            if take {
                chosen.insert(ct);
                rel.insert(t).unwrap();
            }
        }
        let _ = chosen;
        rel
    }

    #[test]
    fn figure_depths_and_lca() {
        // Depth-3 tree: c is the right child of the root, a and b are
        // depth-3 leaves under c's two children.
        let tree = PerfectTree::new(3);
        let c = 2;
        let a = 11; // under node 5
        let b = 13; // under node 6
        assert_eq!(tree.depth_of(0), 0);
        assert_eq!(tree.depth_of(c), 1);
        assert_eq!(tree.depth_of(a), 3);
        assert_eq!(tree.depth_of(b), 3);
        assert_eq!(tree.lca(a, b), c);
        assert_eq!(char_tuple(&tree, &[a, b]), vec![3, 1, 3]);
    }

    #[test]
    fn lca_basics_exhaustive() {
        for depth in 0..=4 {
            let tree = PerfectTree::new(depth);
            for x in tree.nodes() {
                assert_eq!(tree.lca(x, x), x);
                for y in tree.nodes() {
                    let l = tree.lca(x, y);
                    assert_eq!(l, tree.lca(y, x));
                    assert!(tree.depth_of(l) <= tree.depth_of(x).min(tree.depth_of(y)));
                }
            }
        }
    }

    #[test]
    fn char_tuple_layout() {
        let tree = PerfectTree::new(2);
        assert_eq!(char_tuple(&tree, &[0]), vec![0]);
        assert_eq!(char_tuple(&tree, &[3, 4, 2]).len(), triangular(3));
        assert_eq!(pair_index(3, 0, 0), 0);
        assert_eq!(pair_index(3, 0, 2), 2);
        assert_eq!(pair_index(3, 1, 1), 3);
        assert_eq!(pair_index(3, 2, 1), 4);
        assert_eq!(pair_index(3, 2, 2), 5);
    }

    #[test]
    fn automorphism_counts() {
        assert_eq!(enumerate_automorphisms(&PerfectTree::new(0)).unwrap().len(), 1);
        assert_eq!(enumerate_automorphisms(&PerfectTree::new(1)).unwrap().len(), 2);
        assert_eq!(enumerate_automorphisms(&PerfectTree::new(2)).unwrap().len(), 8);
        assert_eq!(enumerate_automorphisms(&PerfectTree::new(3)).unwrap().len(), 128);
        assert!(matches!(
            enumerate_automorphisms(&PerfectTree::new(4)),
            Err(TreeError::DepthTooLarge(4, _))
        ));
    }

    #[test]
    fn depth_two_automorphisms_match_permutation_filter() {
        // Brute force: all permutations of the 7 nodes that fix the root and
        // preserve the edge relation.
        let tree = PerfectTree::new(2);
        let edges = tree.edge_relation();
        let mut found = 0;
        let mut perm: Vec<u32> = tree.nodes().collect();
        fn heap_permute(k: usize, perm: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
            if k == 1 {
                visit(perm);
                return;
            }
            for i in 0..k {
                heap_permute(k - 1, perm, visit);
                if k % 2 == 0 {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        let n = perm.len();
        heap_permute(n, &mut perm, &mut |p| {
            if p[0] != 0 {
                return;
            }
            let ok = edges.iter().all(|t| {
                edges.contains(&[p[t[0] as usize], p[t[1] as usize]])
            });
            if ok {
                found += 1;
            }
        });
        assert_eq!(found, 8);
    }

    #[test]
    fn automorphisms_preserve_edges() {
        let tree = PerfectTree::new(3);
        let edges = tree.edge_relation();
        for f in enumerate_automorphisms(&tree).unwrap() {
            assert_eq!(f.apply_relation(&edges), edges);
            assert_eq!(f.apply(0), 0);
        }
    }

    #[test]
    fn char_tuples_classify_automorphism_orbits() {
        let tree = PerfectTree::new(3);
        let autos = enumerate_automorphisms(&tree).unwrap();
        // Group pairs by characteristic tuple, then compare with orbits.
        let mut classes: BTreeMap<Tuple, BTreeSet<Tuple>> = BTreeMap::new();
        for pair in all_tuples(tree.node_count(), 2) {
            classes
                .entry(char_tuple(&tree, &pair))
                .or_default()
                .insert(pair);
        }
        for pair in all_tuples(tree.node_count(), 2) {
            let orbit: BTreeSet<Tuple> =
                autos.iter().map(|f| f.apply_tuple(&pair)).collect();
            assert_eq!(&orbit, &classes[&char_tuple(&tree, &pair)]);
        }
    }

    #[test]
    fn equality_is_invariant_singleton_leaf_is_not() {
        let tree = PerfectTree::new(2);
        let mut eq = Relation::empty(2);
        for v in tree.nodes() {
            eq.insert(vec![v, v]).unwrap();
        }
        assert!(is_invariant(&eq, &tree).unwrap());
        assert!(is_invariant_by_char(&eq, &tree));

        let leftmost_leaf = Relation::from_tuples(1, [vec![3]]).unwrap();
        assert!(!is_invariant(&leftmost_leaf, &tree).unwrap());
        assert!(!is_invariant_by_char(&leftmost_leaf, &tree));
    }

    #[test]
    fn invariance_criteria_agree_on_random_relations() {
        let mut rng = StdRng::seed_from_u64(21);
        for depth in 1..=3 {
            let tree = PerfectTree::new(depth);
            for _ in 0..34 {
                let arity = rng.gen_range(1..=2);
                let tuples = all_tuples(tree.node_count(), arity).filter(|_| rng.gen_bool(0.3));
                let rel = Relation::from_tuples(arity, tuples).unwrap();
                assert_eq!(is_invariant(&rel, &tree).unwrap(), is_invariant_by_char(&rel, &tree));
            }
        }
    }

    #[test]
    fn edge_relation_is_invariant_but_not_saturated() {
        let tree = PerfectTree::new(2);
        let edges = tree.edge_relation();
        assert!(is_invariant(&edges, &tree).unwrap());
        // Witness: (1, 5) has depths (1, 2) like the edge (1, 3) but is not
        // an edge.
        assert!(edges.contains(&[1, 3]));
        assert!(!edges.contains(&[1, 5]));
        assert!(!is_saturated(&edges, &tree));
    }

    #[test]
    fn full_is_saturated_and_saturated_implies_invariant() {
        let mut rng = StdRng::seed_from_u64(22);
        let tree = PerfectTree::new(3);
        assert!(is_saturated(&Relation::full(2, tree.node_count()), &tree));
        for _ in 0..100 {
            // Random saturated relation: a union of depth-vector classes.
            let arity = rng.gen_range(1..=2);
            let mut keep: BTreeMap<Tuple, bool> = BTreeMap::new();
            let tuples = all_tuples(tree.node_count(), arity).filter(|t| {
                *keep
                    .entry(depth_vector(&tree, t))
                    .or_insert_with(|| rng.gen_bool(0.5))
            });
            let rel = Relation::from_tuples(arity, tuples).unwrap();
            assert!(is_saturated(&rel, &tree));
            assert!(is_invariant(&rel, &tree).unwrap());
        }
    }

    #[test]
    fn encode_decode_examples() {
        // Single element, empty unary relation: one-node tree.
        let mut a = Structure::new(1);
        a.set_relation("R", Relation::empty(1)).unwrap();
        let t = encode(&a);
        assert_eq!(t.tree.node_count(), 1);
        assert!(t.relation("R").unwrap().is_empty());

        // {0,1} with S = {1}: both leaves of the depth-1 tree.
        let mut a = Structure::new(2);
        a.set_relation("S", Relation::from_tuples(1, [vec![1]]).unwrap()).unwrap();
        let t = encode(&a);
        assert_eq!(
            t.relation("S").unwrap(),
            &Relation::from_tuples(1, [vec![1], vec![2]]).unwrap()
        );
        assert_eq!(decode(&t).unwrap(), a);
    }

    #[test]
    fn encode_decode_round_trip_random() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.gen_range(1..=4);
            let mut a = Structure::new(n);
            for (name, arity) in [("R1", 1usize), ("R2", 2usize)] {
                let tuples = all_tuples(n, arity).filter(|_| rng.gen_bool(0.5));
                a.set_relation(name, Relation::from_tuples(arity, tuples).unwrap())
                    .unwrap();
            }
            let t = encode(&a);
            assert_eq!(decode(&t).unwrap(), a);
            // And the structure rendering reads back to the same tree.
            let rendered = t.as_structure();
            assert_eq!(TreeStructure::from_structure(&rendered).unwrap(), t);
        }
    }

    #[test]
    fn decode_rejects_unsaturated() {
        let tree = PerfectTree::new(1);
        let mut t = TreeStructure::new(tree);
        let one_leaf = Relation::from_tuples(1, [vec![1]]).unwrap();
        assert!(matches!(
            t.set_relation("R", one_leaf),
            Err(TreeError::NotSaturated(_))
        ));
    }

    #[test]
    fn sigma_structure_contents() {
        // Depth-3 tree from a 4-element structure.
        let mut a = Structure::new(4);
        a.set_relation("R1", Relation::from_tuples(1, [vec![0]]).unwrap()).unwrap();
        let t = encode(&a);
        let sigma = sigma_structure(&t, 1).unwrap();
        assert_eq!(sigma.size(), 4);
        assert_eq!(sigma.constant(ZERO_CONST), Some(0));
        assert!(sigma.relation(NEQ_REL).unwrap().contains(&[3, 1, 3]));
        // FUL1* = every singleton characteristic tuple = the whole domain.
        assert_eq!(
            sigma.relation(&ful_star_name(1)).unwrap(),
            &Relation::from_tuples(1, (0..4).map(|i| vec![i])).unwrap()
        );
        assert!(sigma.relation(&star_name("R1")).unwrap().contains(&[0]));
        assert!(sigma.relation(&neg_star_name("R1")).unwrap().contains(&[1]));
    }

    #[test]
    fn deciders_match_enumeration() {
        // All triples with entries <= 4 against a depth-4 tree.
        let tree = PerfectTree::new(4);
        let mut neq = BTreeSet::new();
        let mut nege = BTreeSet::new();
        for a in tree.nodes() {
            for b in tree.nodes() {
                let ct = char_tuple(&tree, &[a, b]);
                if a != b {
                    neq.insert(ct.clone());
                }
                if !tree.has_edge(a, b) {
                    nege.insert(ct);
                }
            }
        }
        for e1 in 0..=4u32 {
            for e2 in 0..=4u32 {
                for e3 in 0..=4u32 {
                    let t = vec![e1, e2, e3];
                    assert_eq!(decider_r_neq(e1, e2, e3), neq.contains(&t), "R_neq {t:?}");
                    assert_eq!(decider_r_nege(e1, e2, e3), nege.contains(&t), "R_nege {t:?}");
                }
            }
        }
    }

    #[test]
    fn decider_examples() {
        assert!(decider_r_neq(3, 1, 3));
        assert!(!decider_r_neq(0, 0, 0));
        assert!(!decider_r_neq(2, 2, 2));
        assert!(!decider_r_nege(0, 0, 1)); // exactly an edge
        assert!(decider_r_nege(1, 0, 1));
        assert!(decider_r_nege(3, 1, 3));
    }

    #[test]
    fn pre_check_examples() {
        assert!(pre_check(&[3, 1, 3]).unwrap());
        assert!(!pre_check(&[1, 2, 1]).unwrap());
        assert!(pre_check(&[5]).unwrap());
        assert!(pre_check(&[]).unwrap());
        assert!(matches!(pre_check(&[1, 2]), Err(TreeError::MalformedLength(2))));
    }

    #[test]
    fn pre_check_accepts_all_true_characteristic_tuples() {
        let tree = PerfectTree::new(4);
        for arity in 0..=3usize {
            for tuple in all_tuples(tree.node_count(), arity) {
                let ct = char_tuple(&tree, &tuple);
                assert!(pre_check(&ct).unwrap(), "rejected {ct:?} of {tuple:?}");
            }
        }
    }

    #[test]
    fn check_examples() {
        assert!(check(&[5]).unwrap());
        assert!(check(&[]).unwrap());
        assert!(!check(&[1, 2, 1]).unwrap());
        assert!(check(&[3, 1, 3]).unwrap());
        assert!(check(&[0, 0, 0]).unwrap()); // the root paired with itself
    }

    #[test]
    fn check_matches_brute_force_small() {
        // Entries <= 3, arities <= 3, against a depth-3 tree (the acceptance
        // suite runs the full depth-4 sweep).
        let tree = PerfectTree::new(3);
        let mut truth: BTreeSet<Tuple> = BTreeSet::new();
        for arity in 0..=3usize {
            for tuple in all_tuples(tree.node_count(), arity) {
                truth.insert(char_tuple(&tree, &tuple));
            }
        }
        for arity in 0..=3usize {
            for candidate in all_tuples(4, triangular(arity)) {
                assert_eq!(
                    check(&candidate).unwrap(),
                    truth.contains(&candidate),
                    "candidate {candidate:?}"
                );
            }
        }
    }

    #[test]
    fn char_relation_examples() {
        let tree = PerfectTree::new(2);
        let mut eq = Relation::empty(2);
        for v in tree.nodes() {
            eq.insert(vec![v, v]).unwrap();
        }
        let star = char_relation_of(&eq, &tree).unwrap();
        assert_eq!(
            star,
            Relation::from_tuples(3, (0..3).map(|k| vec![k, k, k])).unwrap()
        );
        let leaf = Relation::from_tuples(1, [vec![3]]).unwrap();
        assert!(matches!(char_relation_of(&leaf, &tree), Err(TreeError::NotInvariant)));
    }

    #[test]
    fn char_relations_separate_invariant_relations() {
        let mut rng = StdRng::seed_from_u64(24);
        let tree = PerfectTree::new(3);
        for _ in 0..100 {
            let arity = rng.gen_range(1..=2);
            let r1 = random_invariant(&mut rng, &tree, arity);
            let r2 = random_invariant(&mut rng, &tree, arity);
            let s1 = char_relation_of(&r1, &tree).unwrap();
            let s2 = char_relation_of(&r2, &tree).unwrap();
            assert_eq!(r1 == r2, s1 == s2);
        }
    }

    #[test]
    fn complement_char_relation_two_routes() {
        let mut rng = StdRng::seed_from_u64(25);
        let tree = PerfectTree::new(3);
        for _ in 0..50 {
            let arity = rng.gen_range(1..=2);
            let r = random_invariant(&mut rng, &tree, arity);
            let direct = char_relation_of(&r.complement(tree.node_count()), &tree).unwrap();
            // All characteristic tuples of this arity, minus R*.
            let all = char_relation_of(&Relation::full(arity, tree.node_count()), &tree).unwrap();
            let star = char_relation_of(&r, &tree).unwrap();
            let mut subtract = Relation::empty(triangular(arity));
            for t in all.iter() {
                if !star.contains(t) {
                    subtract.insert(t.clone()).unwrap();
                }
            }
            assert_eq!(direct, subtract);
        }
    }

    #[test]
    fn closure_operations_preserve_invariance() {
        let mut rng = StdRng::seed_from_u64(26);
        let tree = PerfectTree::new(3);
        let n = tree.node_count();
        for _ in 0..40 {
            let r1 = random_invariant(&mut rng, &tree, 2);
            let r2 = random_invariant(&mut rng, &tree, 2);
            let r_unary = random_invariant(&mut rng, &tree, 1);
            assert!(is_invariant_by_char(&r1.complement(n), &tree));
            assert!(is_invariant_by_char(&r1.intersect(&r2).unwrap(), &tree));
            assert!(is_invariant_by_char(&r1.union(&r2).unwrap(), &tree));
            assert!(is_invariant_by_char(&r1.permute(&[1, 0]).unwrap(), &tree));
            assert!(is_invariant_by_char(&r1.product(&r_unary), &tree));
            assert!(is_invariant_by_char(&r1.project_exists(1).unwrap(), &tree));
            assert!(is_invariant_by_char(&r1.project_forall(1, n).unwrap(), &tree));
        }
    }
}
