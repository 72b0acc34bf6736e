//! Finite relational structures over the domain `{0..n-1}` and the set
//! algebra on relations used by the evaluators and the invariance closure
//! arguments.
//!
//! Tuples are kept in sorted order so serialization and iteration are
//! deterministic. All operations are pure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::{Name, Vocabulary};

pub type Tuple = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("not a permutation of 0..{0}")]
    BadPermutation(usize),
    #[error("constant `{0}` = {1} lies outside the restricted subset")]
    ConstantOutsideSubset(Name, u32),
    #[error("tuple has length {0}, expected {1}")]
    BadTuple(usize, usize),
    #[error("element {0} is outside the domain 0..{1}")]
    ElementOutOfRange(u32, u32),
    #[error("relation `{0}` is not interpreted")]
    MissingRelation(Name),
    #[error("constant `{0}` is not interpreted")]
    MissingConstant(Name),
}

/// A finite relation: a set of equal-length tuples.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Tuple>,
}

impl Relation {
    pub fn empty(arity: usize) -> Self {
        Relation { arity, tuples: BTreeSet::new() }
    }

    /// The 0-ary TRUE relation `{()}`.
    pub fn nullary_true() -> Self {
        let mut tuples = BTreeSet::new();
        tuples.insert(Vec::new());
        Relation { arity: 0, tuples }
    }

    pub fn from_tuples(
        arity: usize,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<Self, StructureError> {
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(StructureError::BadTuple(t.len(), arity));
            }
            set.insert(t);
        }
        Ok(Relation { arity, tuples: set })
    }

    /// The full relation `{0..n-1}^arity`.
    pub fn full(arity: usize, n: u32) -> Self {
        let mut tuples = BTreeSet::new();
        for t in all_tuples(n, arity) {
            tuples.insert(t);
        }
        Relation { arity, tuples }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[u32]) -> bool {
        self.tuples.contains(tuple)
    }

    pub fn insert(&mut self, tuple: Tuple) -> Result<bool, StructureError> {
        if tuple.len() != self.arity {
            return Err(StructureError::BadTuple(tuple.len(), self.arity));
        }
        Ok(self.tuples.insert(tuple))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.tuples.is_subset(&other.tuples)
    }

    pub fn complement(&self, n: u32) -> Relation {
        let mut tuples = BTreeSet::new();
        for t in all_tuples(n, self.arity) {
            if !self.tuples.contains(&t) {
                tuples.insert(t);
            }
        }
        Relation { arity: self.arity, tuples }
    }

    pub fn intersect(&self, other: &Relation) -> Result<Relation, StructureError> {
        if self.arity != other.arity {
            return Err(StructureError::ArityMismatch(self.arity, other.arity));
        }
        Ok(Relation {
            arity: self.arity,
            tuples: self.tuples.intersection(&other.tuples).cloned().collect(),
        })
    }

    pub fn union(&self, other: &Relation) -> Result<Relation, StructureError> {
        if self.arity != other.arity {
            return Err(StructureError::ArityMismatch(self.arity, other.arity));
        }
        Ok(Relation {
            arity: self.arity,
            tuples: self.tuples.union(&other.tuples).cloned().collect(),
        })
    }

    /// Position permutation: output tuples are `(a_{g(0)}, ..., a_{g(r-1)})`.
    pub fn permute(&self, g: &[usize]) -> Result<Relation, StructureError> {
        if g.len() != self.arity {
            return Err(StructureError::BadPermutation(self.arity));
        }
        let mut seen = vec![false; self.arity];
        for &i in g {
            if i >= self.arity || seen[i] {
                return Err(StructureError::BadPermutation(self.arity));
            }
            seen[i] = true;
        }
        let tuples = self
            .tuples
            .iter()
            .map(|t| g.iter().map(|&i| t[i]).collect())
            .collect();
        Ok(Relation { arity: self.arity, tuples })
    }

    /// Cartesian product by concatenation; the arities add up.
    pub fn product(&self, other: &Relation) -> Relation {
        let mut tuples = BTreeSet::new();
        for a in &self.tuples {
            for b in &other.tuples {
                let mut t = a.clone();
                t.extend_from_slice(b);
                tuples.insert(t);
            }
        }
        Relation { arity: self.arity + other.arity, tuples }
    }

    /// Existential projection dropping the `k` leading positions:
    /// `{ a | exists b of length k with b++a in self }`.
    pub fn project_exists(&self, k: usize) -> Result<Relation, StructureError> {
        if k > self.arity {
            return Err(StructureError::ArityMismatch(k, self.arity));
        }
        let tuples = self.tuples.iter().map(|t| t[k..].to_vec()).collect();
        Ok(Relation { arity: self.arity - k, tuples })
    }

    /// Universal projection over the `k` leading positions:
    /// `{ a | for all b in {0..n-1}^k, b++a in self }`.
    pub fn project_forall(&self, k: usize, n: u32) -> Result<Relation, StructureError> {
        if k > self.arity {
            return Err(StructureError::ArityMismatch(k, self.arity));
        }
        let cube: Vec<Tuple> = all_tuples(n, k).collect();
        let mut tuples = BTreeSet::new();
        for t in &self.tuples {
            let suffix = t[k..].to_vec();
            if tuples.contains(&suffix) {
                continue;
            }
            let ok = cube.iter().all(|b| {
                let mut full = b.clone();
                full.extend_from_slice(&suffix);
                self.tuples.contains(&full)
            });
            if ok {
                tuples.insert(suffix);
            }
        }
        Ok(Relation { arity: self.arity - k, tuples })
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, t) in self.tuples.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str("(")?;
            for (j, e) in t.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str(")")?;
        }
        f.write_str("}")
    }
}

/// Iterates all tuples of the given length over `{0..n-1}` in
/// lexicographic order.
pub fn all_tuples(n: u32, len: usize) -> TupleIter {
    TupleIter { n, current: vec![0; len], done: n == 0 && len > 0, started: false }
}

pub struct TupleIter {
    n: u32,
    current: Vec<u32>,
    done: bool,
    started: bool,
}

impl Iterator for TupleIter {
    type Item = Tuple;

    fn next(&mut self) -> Option<Tuple> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current.clone());
        }
        for i in (0..self.current.len()).rev() {
            if self.current[i] + 1 < self.n {
                self.current[i] += 1;
                for slot in &mut self.current[i + 1..] {
                    *slot = 0;
                }
                return Some(self.current.clone());
            }
        }
        self.done = true;
        None
    }
}

/// A finite structure: a domain `{0..size-1}`, interpreted relations and
/// interpreted constants for a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    pub vocabulary: Vocabulary,
    size: u32,
    relations: BTreeMap<Name, Relation>,
    constants: BTreeMap<Name, u32>,
}

impl Structure {
    pub fn new(size: u32) -> Self {
        assert!(size >= 1, "structures have a non-empty domain");
        Structure {
            vocabulary: Vocabulary::new(),
            size,
            relations: BTreeMap::new(),
            constants: BTreeMap::new(),
        }
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn set_relation(&mut self, name: &str, relation: Relation) -> Result<(), StructureError> {
        for t in relation.iter() {
            for &e in t {
                if e >= self.size {
                    return Err(StructureError::ElementOutOfRange(e, self.size));
                }
            }
        }
        self.vocabulary
            .add_relation(name, relation.arity())
            .map_err(|_| StructureError::MissingRelation(name.to_string()))?;
        self.relations.insert(name.to_string(), relation);
        Ok(())
    }

    pub fn set_constant(&mut self, name: &str, value: u32) -> Result<(), StructureError> {
        if value >= self.size {
            return Err(StructureError::ElementOutOfRange(value, self.size));
        }
        self.vocabulary
            .add_constant(name)
            .map_err(|_| StructureError::MissingConstant(name.to_string()))?;
        self.constants.insert(name.to_string(), value);
        Ok(())
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn constant(&self, name: &str) -> Option<u32> {
        self.constants.get(name).copied()
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }

    pub fn constants(&self) -> impl Iterator<Item = (&str, u32)> {
        self.constants.iter().map(|(n, &v)| (n.as_str(), v))
    }

    /// Restricts the structure to a subset of its domain, renumbering the
    /// surviving elements to `{0..|subset|-1}` in increasing order. All
    /// interpreted constants must survive.
    pub fn induced_substructure(&self, subset: &BTreeSet<u32>) -> Result<Structure, StructureError> {
        assert!(!subset.is_empty(), "induced substructures are non-empty");
        for (name, &value) in &self.constants {
            if !subset.contains(&value) {
                return Err(StructureError::ConstantOutsideSubset(name.clone(), value));
            }
        }
        let renumber: BTreeMap<u32, u32> = subset
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i as u32))
            .collect();
        let mut out = Structure::new(subset.len() as u32);
        for (name, rel) in &self.relations {
            let tuples = rel
                .iter()
                .filter(|t| t.iter().all(|e| subset.contains(e)))
                .map(|t| t.iter().map(|e| renumber[e]).collect());
            out.set_relation(name, Relation::from_tuples(rel.arity(), tuples)?)?;
        }
        for (name, &value) in &self.constants {
            out.set_constant(name, renumber[&value])?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rel(arity: usize, tuples: &[&[u32]]) -> Relation {
        Relation::from_tuples(arity, tuples.iter().map(|t| t.to_vec())).unwrap()
    }

    fn random_relation(rng: &mut StdRng, arity: usize, n: u32) -> Relation {
        let tuples = all_tuples(n, arity).filter(|_| rng.gen_bool(0.5));
        Relation::from_tuples(arity, tuples).unwrap()
    }

    #[test]
    fn complement_basics() {
        assert_eq!(rel(1, &[&[0]]).complement(2), rel(1, &[&[1]]));
        assert_eq!(Relation::empty(2).complement(2).len(), 4);
    }

    #[test]
    fn complement_is_involution() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let arity = rng.gen_range(0..=2);
            let n = rng.gen_range(1..=4);
            let r = random_relation(&mut rng, arity, n);
            assert_eq!(r.complement(n).complement(n), r);
        }
    }

    #[test]
    fn intersect_union_basics() {
        let a = rel(2, &[&[0, 1]]);
        let b = rel(2, &[&[0, 1], &[1, 0]]);
        assert_eq!(a.intersect(&b).unwrap(), a);
        assert_eq!(a.union(&Relation::empty(2)).unwrap(), a);
        assert!(a.intersect(&Relation::empty(1)).is_err());
    }

    #[test]
    fn de_morgan_on_random_relations() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..50 {
            let arity = rng.gen_range(0..=2);
            let n = rng.gen_range(1..=4);
            let r1 = random_relation(&mut rng, arity, n);
            let r2 = random_relation(&mut rng, arity, n);
            let lhs = r1.intersect(&r2).unwrap().complement(n);
            let rhs = r1.complement(n).union(&r2.complement(n)).unwrap();
            assert_eq!(lhs, rhs);
            let lhs = r1.union(&r2).unwrap().complement(n);
            let rhs = r1.complement(n).intersect(&r2.complement(n)).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn permute_basics() {
        assert_eq!(rel(2, &[&[0, 1]]).permute(&[1, 0]).unwrap(), rel(2, &[&[1, 0]]));
        let r = rel(2, &[&[0, 1], &[2, 2]]);
        assert_eq!(r.permute(&[0, 1]).unwrap(), r);
        assert!(r.permute(&[0, 0]).is_err());
        assert!(r.permute(&[0]).is_err());
    }

    #[test]
    fn permute_inverse_round_trip() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(1..=4);
            let r = random_relation(&mut rng, 3, n);
            let g = [2usize, 0, 1];
            let g_inv = [1usize, 2, 0];
            assert_eq!(r.permute(&g).unwrap().permute(&g_inv).unwrap(), r);
        }
    }

    #[test]
    fn product_basics_and_cardinality() {
        assert_eq!(rel(1, &[&[0]]).product(&rel(1, &[&[1]])), rel(2, &[&[0, 1]]));
        assert!(Relation::empty(1).product(&rel(1, &[&[0]])).is_empty());
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..30 {
            let n = rng.gen_range(1..=4);
            let arity_a = rng.gen_range(0..=2);
            let arity_b = rng.gen_range(0..=2);
            let a = random_relation(&mut rng, arity_a, n);
            let b = random_relation(&mut rng, arity_b, n);
            assert_eq!(a.product(&b).len(), a.len() * b.len());
        }
    }

    #[test]
    fn projections_basics() {
        let r = rel(2, &[&[0, 1], &[1, 1]]);
        assert_eq!(r.project_exists(1).unwrap(), rel(1, &[&[1]]));
        let full = Relation::full(2, 3);
        assert_eq!(full.project_exists(1).unwrap(), Relation::full(1, 3));
        assert_eq!(full.project_forall(1, 3).unwrap(), Relation::full(1, 3));
        assert_eq!(Relation::empty(2).project_forall(1, 2).unwrap(), Relation::empty(1));
    }

    #[test]
    fn project_forall_matches_double_loop() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let n: u32 = rng.gen_range(1..=4);
            let arity = rng.gen_range(1..=3);
            let k = rng.gen_range(0..=arity);
            let r = random_relation(&mut rng, arity, n);
            let fast = r.project_forall(k, n).unwrap();
            // brute force over all (prefix, suffix) pairs
            let mut slow = Relation::empty(arity - k);
            for suffix in all_tuples(n, arity - k) {
                let ok = all_tuples(n, k).all(|mut prefix| {
                    prefix.extend_from_slice(&suffix);
                    r.contains(&prefix)
                });
                if ok {
                    slow.insert(suffix).unwrap();
                }
            }
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn quantifier_duality() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..50 {
            let n: u32 = rng.gen_range(1..=4);
            let arity = rng.gen_range(1..=3);
            let k = rng.gen_range(0..=arity);
            let r = random_relation(&mut rng, arity, n);
            let exists = r.project_exists(k).unwrap();
            let dual = r
                .complement(n)
                .project_forall(k, n)
                .unwrap()
                .complement(n);
            assert_eq!(exists, dual);
        }
    }

    #[test]
    fn induced_substructure_basics() {
        let mut s = Structure::new(3);
        s.set_relation("E", rel(2, &[&[0, 1], &[1, 2]])).unwrap();
        s.set_constant("s", 0).unwrap();

        let full: BTreeSet<u32> = (0..3).collect();
        assert_eq!(s.induced_substructure(&full).unwrap(), s);

        let ends: BTreeSet<u32> = [0, 2].into_iter().collect();
        let restricted = s.induced_substructure(&ends).unwrap();
        assert_eq!(restricted.size(), 2);
        assert!(restricted.relation("E").unwrap().is_empty());
        assert_eq!(restricted.constant("s"), Some(0));

        let no_const: BTreeSet<u32> = [1, 2].into_iter().collect();
        assert!(matches!(
            s.induced_substructure(&no_const),
            Err(StructureError::ConstantOutsideSubset(..))
        ));
    }

    #[test]
    fn induced_substructure_is_monotone_in_tuple_count() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..50 {
            let n: u32 = rng.gen_range(1..=5);
            let mut s = Structure::new(n);
            s.set_relation("R", random_relation(&mut rng, 2, n)).unwrap();
            let subset: BTreeSet<u32> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
            if subset.is_empty() {
                continue;
            }
            let restricted = s.induced_substructure(&subset).unwrap();
            assert!(restricted.relation("R").unwrap().len() <= s.relation("R").unwrap().len());
        }
    }

    #[test]
    fn all_tuples_counts() {
        assert_eq!(all_tuples(3, 2).count(), 9);
        assert_eq!(all_tuples(1, 0).count(), 1);
        assert_eq!(all_tuples(4, 1).count(), 4);
    }
}
