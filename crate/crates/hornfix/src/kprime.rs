//! Membership machinery for the class of graph structures built from an
//! arbitrary decidable class of finite structures: trivial domain
//! extensions, the largest perfect subtree of a rooted graph, the
//! two-condition membership test with a pluggable inner oracle, and a
//! sampling check that membership is closed under induced substructures.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::ast::Name;
use crate::structure::{Relation, Structure, StructureError};
use crate::trees::{decode, PerfectTree, TreeStructure, EDGE_REL, ROOT_CONST};

/// The fixed exponent of the padding: a structure of size `h` extends to
/// size `h + h^c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtensionParams {
    pub c: u32,
}

impl ExtensionParams {
    pub fn new(c: u32) -> Self {
        assert!(c >= 1);
        ExtensionParams { c }
    }

    pub fn padding(&self, h: u32) -> u32 {
        h.pow(self.c)
    }
}

impl Default for ExtensionParams {
    fn default() -> Self {
        ExtensionParams { c: 1 }
    }
}

/// The unary marking relation of graph structures.
pub const MARK_REL: &str = "P";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KprimeError {
    #[error("check ({step}) failed: {message}")]
    StructuralViolation { step: u8, message: String },
    #[error("missing required symbol `{0}`")]
    MissingSymbol(Name),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("{0}")]
    Invalid(String),
}

/// Extends the domain from `{0..h-1}` to `{0..h+h^c-1}`, keeping all
/// relations unchanged.
pub fn trivial_extension(a: &Structure, params: &ExtensionParams) -> Structure {
    let h = a.size();
    let mut out = Structure::new(h + params.padding(h));
    for (name, rel) in a.relations() {
        out.set_relation(name, rel.clone()).expect("fresh domain is larger");
    }
    for (name, value) in a.constants() {
        out.set_constant(name, value).expect("value still in domain");
    }
    out
}

/// A structure with a `root` constant, a binary edge relation, the unary
/// marking `P` and further relations, validated against the standing
/// assumptions: the edges form a DAG, the nodes reachable from the root
/// form a binary tree, and all relations restricted to the largest perfect
/// subtree are saturated.
#[derive(Debug, Clone)]
pub struct GraphStructure {
    structure: Structure,
    /// Reachable nodes grouped by tree depth.
    levels: Vec<Vec<u32>>,
    /// The largest perfect subtree with the root as root, as a tree
    /// structure with heap node ids; carries `P` and the other relations.
    tree: TreeStructure,
}

impl GraphStructure {
    pub fn new(structure: Structure) -> Result<Self, KprimeError> {
        let root = structure
            .constant(ROOT_CONST)
            .ok_or_else(|| KprimeError::MissingSymbol(ROOT_CONST.to_string()))?;
        let edges = structure
            .relation(EDGE_REL)
            .ok_or_else(|| KprimeError::MissingSymbol(EDGE_REL.to_string()))?;
        if edges.arity() != 2 {
            return Err(KprimeError::MissingSymbol(EDGE_REL.to_string()));
        }
        match structure.relation(MARK_REL) {
            Some(r) if r.arity() == 1 => {}
            _ => return Err(KprimeError::MissingSymbol(MARK_REL.to_string())),
        }

        // (1) the whole edge relation is a DAG.
        let n = structure.size() as usize;
        let mut out_edges: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        for t in edges.iter() {
            out_edges[t[0] as usize].push(t[1]);
            indegree[t[1] as usize] += 1;
        }
        let mut queue: Vec<u32> = (0..n as u32).filter(|&v| indegree[v as usize] == 0).collect();
        let mut seen = 0usize;
        let mut cursor = 0usize;
        let mut remaining = indegree.clone();
        while cursor < queue.len() {
            let v = queue[cursor];
            cursor += 1;
            seen += 1;
            for &w in &out_edges[v as usize] {
                remaining[w as usize] -= 1;
                if remaining[w as usize] == 0 {
                    queue.push(w);
                }
            }
        }
        if seen != n {
            return Err(KprimeError::StructuralViolation {
                step: 1,
                message: "the edge relation contains a cycle".to_string(),
            });
        }

        // (2) the nodes reachable from root form a binary tree.
        let mut parent_seen = vec![false; n];
        parent_seen[root as usize] = true;
        let mut levels: Vec<Vec<u32>> = vec![vec![root]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                let mut kids = out_edges[v as usize].clone();
                kids.sort_unstable();
                kids.dedup();
                if kids.len() > 2 {
                    return Err(KprimeError::StructuralViolation {
                        step: 2,
                        message: format!("node {v} has {} children", kids.len()),
                    });
                }
                for c in kids {
                    if parent_seen[c as usize] {
                        return Err(KprimeError::StructuralViolation {
                            step: 2,
                            message: format!("node {c} is reachable along two paths"),
                        });
                    }
                    parent_seen[c as usize] = true;
                    next.push(c);
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }

        // (3) the largest perfect subtree: the longest prefix of levels in
        // which level k holds all 2^k nodes.
        let mut tg_levels = 0u32;
        for (k, level) in levels.iter().enumerate() {
            if level.len() == 1usize << k {
                tg_levels = k as u32 + 1;
            } else {
                break;
            }
        }

        // Map the perfect prefix onto heap ids, children ordered by node id.
        let tree_shape = PerfectTree::with_levels(tg_levels);
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        map.insert(root, 0);
        for k in 0..(tg_levels as usize - 1) {
            for &v in &levels[k] {
                let heap = map[&v];
                let mut kids = out_edges[v as usize].clone();
                kids.sort_unstable();
                kids.dedup();
                map.insert(kids[0], 2 * heap + 1);
                map.insert(kids[1], 2 * heap + 2);
            }
        }
        let in_tree: BTreeSet<u32> = map.keys().copied().collect();

        // (4) relations restricted to the perfect subtree are saturated.
        let mut tree = TreeStructure::new(tree_shape);
        for (name, rel) in structure.relations() {
            if name == EDGE_REL {
                continue;
            }
            let restricted = Relation::from_tuples(
                rel.arity(),
                rel.iter()
                    .filter(|t| t.iter().all(|v| in_tree.contains(v)))
                    .map(|t| t.iter().map(|v| map[v]).collect()),
            )
            .expect("arity preserved");
            tree.set_relation(name, restricted).map_err(|e| {
                KprimeError::StructuralViolation { step: 4, message: e.to_string() }
            })?;
        }

        Ok(GraphStructure { structure, levels, tree })
    }

    pub fn as_structure(&self) -> &Structure {
        &self.structure
    }

    /// The largest perfect subtree with the root as root, together with its
    /// number of levels.
    pub fn largest_perfect_subtree(&self) -> (&TreeStructure, u32) {
        (&self.tree, self.tree.tree.levels())
    }

    /// The largest `h` such that every reachable node in the first `h`
    /// levels is marked.
    pub fn marked_prefix(&self) -> u32 {
        let marks = self
            .structure
            .relation(MARK_REL)
            .expect("validated on construction");
        let mut h = 0u32;
        for level in &self.levels {
            if level.iter().all(|&v| marks.contains(&[v])) {
                h += 1;
            } else {
                break;
            }
        }
        h
    }

    /// The perfect subtree restricted to its first `h` levels (heap ids are
    /// a prefix, so this is a straight filter).
    pub fn tree_prefix(&self, h: u32) -> TreeStructure {
        let shape = PerfectTree::with_levels(h);
        let cutoff = shape.node_count();
        let mut out = TreeStructure::new(shape);
        for (name, rel) in self.tree.relations() {
            let restricted = Relation::from_tuples(
                rel.arity(),
                rel.iter().filter(|t| t.iter().all(|&v| v < cutoff)).cloned(),
            )
            .expect("arity preserved");
            out.set_relation(name, restricted)
                .expect("restriction of saturated is saturated");
        }
        out
    }
}

/// Outcome of the membership test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    /// The perfect subtree has exactly `h + h^c` levels, the padding levels
    /// are unmarked and relation-free, and the inner oracle accepted the
    /// decoded core.
    Condition1,
    /// The perfect subtree has fewer than `h + h^c` levels.
    Condition2,
    NotMember(String),
}

impl Membership {
    pub fn is_member(&self) -> bool {
        !matches!(self, Membership::NotMember(_))
    }
}

/// Decides membership: Condition 2 when the perfect subtree is shallower
/// than `h + h^c`; Condition 1 when it has exactly that depth, the last
/// `h^c` levels are unmarked, no relation touches them, and the oracle
/// accepts the decoded first-`h`-levels structure (without the marking).
pub fn membership_kprime(
    g: &GraphStructure,
    oracle: &dyn Fn(&Structure) -> bool,
    params: &ExtensionParams,
) -> Result<Membership, KprimeError> {
    let h = g.marked_prefix();
    let (tree, tg_levels) = g.largest_perfect_subtree();
    let target = h.checked_add(params.padding(h)).ok_or_else(|| {
        KprimeError::Invalid("padding overflows".to_string())
    })?;
    if tg_levels < target {
        return Ok(Membership::Condition2);
    }
    if tg_levels > target {
        return Ok(Membership::NotMember(format!(
            "perfect subtree has {tg_levels} levels, more than h + h^c = {target}"
        )));
    }
    // Condition 1, clause (2): no marked node in the last h^c levels.
    let marks = tree.relation(MARK_REL).expect("validated");
    let cutoff = PerfectTree::with_levels(h).node_count();
    for t in marks.iter() {
        if t[0] >= cutoff {
            return Ok(Membership::NotMember(format!(
                "node in the padding levels is marked (heap id {})",
                t[0]
            )));
        }
    }
    // Clause (3): no other relation touches the padding levels.
    for (name, rel) in tree.relations() {
        if name == MARK_REL {
            continue;
        }
        for t in rel.iter() {
            if t.iter().any(|&v| v >= cutoff) {
                return Ok(Membership::NotMember(format!(
                    "relation `{name}` holds of a tuple in the padding levels"
                )));
            }
        }
    }
    // Clause (4): the oracle accepts the decoded core, marking removed.
    let core = g.tree_prefix(h);
    let mut decoded = decode(&core).map_err(|e| KprimeError::Invalid(e.to_string()))?;
    let mut stripped = Structure::new(decoded.size());
    for (name, rel) in decoded.relations() {
        if name != MARK_REL {
            stripped.set_relation(name, rel.clone())?;
        }
    }
    decoded = stripped;
    if oracle(&decoded) {
        Ok(Membership::Condition1)
    } else {
        Ok(Membership::NotMember("inner oracle rejected the decoded core".to_string()))
    }
}

/// Marks every element, pads the domain, and encodes onto the perfect tree:
/// the canonical Condition-1 member for any core accepted by the oracle.
pub fn condition1_member(a: &Structure, params: &ExtensionParams) -> Structure {
    let mut marked = a.clone();
    marked
        .set_relation(MARK_REL, Relation::full(1, a.size()))
        .expect("P is fresh");
    let extended = trivial_extension(&marked, params);
    crate::trees::encode(&extended).as_structure()
}

/// Marks every element and encodes without padding: a Condition-2 member.
pub fn condition2_member(a: &Structure) -> Structure {
    let mut marked = a.clone();
    marked
        .set_relation(MARK_REL, Relation::full(1, a.size()))
        .expect("P is fresh");
    crate::trees::encode(&marked).as_structure()
}

#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub samples: usize,
    pub members: usize,
    pub failures: Vec<String>,
}

impl ClosureReport {
    pub fn all_members(&self) -> bool {
        self.failures.is_empty() && self.members == self.samples
    }
}

/// Samples random induced substructures that keep the root and asserts each
/// one is still a member.
pub fn closure_under_substructures_test(
    g: &GraphStructure,
    oracle: &dyn Fn(&Structure) -> bool,
    params: &ExtensionParams,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<ClosureReport, KprimeError> {
    if !membership_kprime(g, oracle, params)?.is_member() {
        return Err(KprimeError::Invalid(
            "closure test requires a member structure".to_string(),
        ));
    }
    let st = g.as_structure();
    let root = st.constant(ROOT_CONST).expect("validated");
    let mut report = ClosureReport { samples, members: 0, failures: Vec::new() };
    for _ in 0..samples {
        let mut subset: BTreeSet<u32> = BTreeSet::new();
        subset.insert(root);
        for v in 0..st.size() {
            if v != root && rng.gen_bool(0.7) {
                subset.insert(v);
            }
        }
        let induced = st.induced_substructure(&subset)?;
        match GraphStructure::new(induced) {
            Err(e) => report.failures.push(format!("substructure invalid: {e}")),
            Ok(sub) => match membership_kprime(&sub, oracle, params)? {
                Membership::NotMember(reason) => {
                    report.failures.push(format!("non-member substructure: {reason}"))
                }
                _ => report.members += 1,
            },
        }
    }
    Ok(report)
}

/// The bundled demonstration oracles for the inner class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoOracle {
    /// Accepts structures with an even number of elements.
    Even,
    /// Accepts structures whose first binary relation, read as an
    /// undirected graph, is 3-colorable.
    ThreeCol,
    Always,
    Never,
}

impl DemoOracle {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "even" => Some(DemoOracle::Even),
            "3col" => Some(DemoOracle::ThreeCol),
            "always" => Some(DemoOracle::Always),
            "never" => Some(DemoOracle::Never),
            _ => None,
        }
    }

    pub fn accepts(&self, a: &Structure) -> bool {
        match self {
            DemoOracle::Even => a.size() % 2 == 0,
            DemoOracle::Always => true,
            DemoOracle::Never => false,
            DemoOracle::ThreeCol => {
                let edges = a.relations().find(|(_, r)| r.arity() == 2);
                let Some((_, edges)) = edges else { return true };
                let n = a.size() as usize;
                let mut adj = vec![BTreeSet::new(); n];
                for t in edges.iter() {
                    if t[0] != t[1] {
                        adj[t[0] as usize].insert(t[1] as usize);
                        adj[t[1] as usize].insert(t[0] as usize);
                    } else {
                        return false; // self loop is never colorable
                    }
                }
                fn color(v: usize, colors: &mut Vec<Option<u8>>, adj: &[BTreeSet<usize>]) -> bool {
                    if v == colors.len() {
                        return true;
                    }
                    for c in 0..3u8 {
                        if adj[v].iter().all(|&w| colors[w] != Some(c)) {
                            colors[v] = Some(c);
                            if color(v + 1, colors, adj) {
                                return true;
                            }
                            colors[v] = None;
                        }
                    }
                    false
                }
                color(0, &mut vec![None; n], &adj)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::all_tuples;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn small_core(n: u32, r1: &[&[u32]]) -> Structure {
        let mut a = Structure::new(n);
        a.set_relation("R1", Relation::from_tuples(1, r1.iter().map(|t| t.to_vec())).unwrap())
            .unwrap();
        a
    }

    #[test]
    fn trivial_extension_sizes() {
        let params = ExtensionParams::new(1);
        assert_eq!(trivial_extension(&Structure::new(1), &params).size(), 2);
        let params2 = ExtensionParams::new(2);
        assert_eq!(trivial_extension(&Structure::new(2), &params2).size(), 6);
    }

    #[test]
    fn trivial_extension_keeps_relations() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..20 {
            use rand::Rng;
            let n = rng.gen_range(1..=4);
            let mut a = Structure::new(n);
            let tuples = all_tuples(n, 2).filter(|_| rng.gen_bool(0.5));
            a.set_relation("R", Relation::from_tuples(2, tuples).unwrap()).unwrap();
            let ext = trivial_extension(&a, &ExtensionParams::new(1));
            assert_eq!(ext.relation("R"), a.relation("R"));
        }
    }

    #[test]
    fn perfect_tree_input_is_its_own_subtree() {
        let g = GraphStructure::new(condition2_member(&small_core(2, &[&[0]]))).unwrap();
        let (_, levels) = g.largest_perfect_subtree();
        assert_eq!(levels, 2);
        assert_eq!(g.marked_prefix(), 2);
    }

    #[test]
    fn missing_grandchild_stops_the_prefix() {
        // Perfect depth-2 tree with one grandchild removed.
        let full = condition2_member(&small_core(3, &[&[0]]));
        let keep: BTreeSet<u32> = (0..7).filter(|&v| v != 6).collect();
        let pruned = full.induced_substructure(&keep).unwrap();
        let g = GraphStructure::new(pruned).unwrap();
        let (_, levels) = g.largest_perfect_subtree();
        assert_eq!(levels, 2);
    }

    #[test]
    fn unreachable_nodes_do_not_matter() {
        // A 3-node perfect tree plus an isolated extra node.
        let mut st = Structure::new(4);
        st.set_constant(ROOT_CONST, 0).unwrap();
        st.set_relation(
            EDGE_REL,
            Relation::from_tuples(2, [vec![0, 1], vec![0, 2]]).unwrap(),
        )
        .unwrap();
        st.set_relation(MARK_REL, Relation::from_tuples(1, [vec![0], vec![1], vec![2]]).unwrap())
            .unwrap();
        let g = GraphStructure::new(st).unwrap();
        let (_, levels) = g.largest_perfect_subtree();
        assert_eq!(levels, 2);
        assert_eq!(g.marked_prefix(), 2);
    }

    #[test]
    fn non_binary_fanout_is_a_structural_violation() {
        let mut st = Structure::new(4);
        st.set_constant(ROOT_CONST, 0).unwrap();
        st.set_relation(
            EDGE_REL,
            Relation::from_tuples(2, [vec![0, 1], vec![0, 2], vec![0, 3]]).unwrap(),
        )
        .unwrap();
        st.set_relation(MARK_REL, Relation::empty(1)).unwrap();
        assert!(matches!(
            GraphStructure::new(st),
            Err(KprimeError::StructuralViolation { step: 2, .. })
        ));
    }

    #[test]
    fn cycle_is_a_structural_violation() {
        let mut st = Structure::new(3);
        st.set_constant(ROOT_CONST, 0).unwrap();
        st.set_relation(
            EDGE_REL,
            Relation::from_tuples(2, [vec![1, 2], vec![2, 1]]).unwrap(),
        )
        .unwrap();
        st.set_relation(MARK_REL, Relation::empty(1)).unwrap();
        assert!(matches!(
            GraphStructure::new(st),
            Err(KprimeError::StructuralViolation { step: 1, .. })
        ));
    }

    #[test]
    fn shallow_tree_is_condition_two() {
        let params = ExtensionParams::new(1);
        let g = GraphStructure::new(condition2_member(&small_core(2, &[&[1]]))).unwrap();
        let oracle = |_: &Structure| false;
        assert_eq!(membership_kprime(&g, &oracle, &params).unwrap(), Membership::Condition2);
    }

    #[test]
    fn generated_extension_is_condition_one_with_even_oracle() {
        let params = ExtensionParams::new(1);
        let member = condition1_member(&small_core(2, &[&[0]]), &params);
        let g = GraphStructure::new(member).unwrap();
        let even = |a: &Structure| DemoOracle::Even.accepts(a);
        assert_eq!(membership_kprime(&g, &even, &params).unwrap(), Membership::Condition1);
        // Condition 1 implies the exact target depth.
        assert_eq!(g.largest_perfect_subtree().1, 2 + 2);
    }

    #[test]
    fn rejecting_oracle_blocks_condition_one() {
        let params = ExtensionParams::new(1);
        let member = condition1_member(&small_core(2, &[&[0]]), &params);
        let g = GraphStructure::new(member).unwrap();
        let never = |a: &Structure| DemoOracle::Never.accepts(a);
        assert!(matches!(
            membership_kprime(&g, &never, &params).unwrap(),
            Membership::NotMember(_)
        ));
    }

    #[test]
    fn decode_encode_coherence_for_condition_one_members() {
        let params = ExtensionParams::new(1);
        let core = small_core(2, &[&[1]]);
        let member = condition1_member(&core, &params);
        let g = GraphStructure::new(member).unwrap();
        let h = g.marked_prefix();
        let whole = decode(g.largest_perfect_subtree().0).unwrap();
        let prefix = decode(&g.tree_prefix(h)).unwrap();
        assert_eq!(whole, trivial_extension(&prefix, &params));
    }

    #[test]
    fn root_only_restriction_is_a_member() {
        let params = ExtensionParams::new(1);
        let member = condition1_member(&small_core(2, &[&[0]]), &params);
        let g = GraphStructure::new(member).unwrap();
        let root = g.as_structure().constant(ROOT_CONST).unwrap();
        let just_root: BTreeSet<u32> = [root].into();
        let restricted = g.as_structure().induced_substructure(&just_root).unwrap();
        let sub = GraphStructure::new(restricted).unwrap();
        let always = |a: &Structure| DemoOracle::Always.accepts(a);
        assert!(membership_kprime(&sub, &always, &params).unwrap().is_member());
    }

    #[test]
    fn removing_leaves_flips_to_condition_two() {
        let params = ExtensionParams::new(1);
        let member = condition1_member(&small_core(2, &[&[0]]), &params);
        let g = GraphStructure::new(member).unwrap();
        // Drop the last heap node (a leaf of the 4-level tree).
        let n = g.as_structure().size();
        let keep: BTreeSet<u32> = (0..n - 1).collect();
        let restricted = g.as_structure().induced_substructure(&keep).unwrap();
        let sub = GraphStructure::new(restricted).unwrap();
        let even = |a: &Structure| DemoOracle::Even.accepts(a);
        assert_eq!(membership_kprime(&sub, &even, &params).unwrap(), Membership::Condition2);
    }

    #[test]
    fn closure_holds_on_sampled_substructures() {
        let params = ExtensionParams::new(1);
        let mut rng = StdRng::seed_from_u64(32);
        let even = |a: &Structure| DemoOracle::Even.accepts(a);
        for member in [
            condition1_member(&small_core(2, &[&[0]]), &params),
            condition2_member(&small_core(3, &[&[0], &[2]])),
        ] {
            let g = GraphStructure::new(member).unwrap();
            let report =
                closure_under_substructures_test(&g, &even, &params, 25, &mut rng).unwrap();
            assert!(report.all_members(), "{:?}", report.failures);
        }
    }

    #[test]
    fn demo_oracles() {
        assert!(DemoOracle::Even.accepts(&Structure::new(2)));
        assert!(!DemoOracle::Even.accepts(&Structure::new(3)));
        // A triangle is 3-colorable, K4 is not.
        let mut triangle = Structure::new(3);
        triangle
            .set_relation(
                "R1",
                Relation::from_tuples(2, [vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap(),
            )
            .unwrap();
        assert!(DemoOracle::ThreeCol.accepts(&triangle));
        let mut k4 = Structure::new(4);
        let mut edges = Vec::new();
        for i in 0..4u32 {
            for j in i + 1..4 {
                edges.push(vec![i, j]);
            }
        }
        k4.set_relation("R1", Relation::from_tuples(2, edges).unwrap()).unwrap();
        assert!(!DemoOracle::ThreeCol.accepts(&k4));
        assert_eq!(DemoOracle::from_name("3col"), Some(DemoOracle::ThreeCol));
    }
}
