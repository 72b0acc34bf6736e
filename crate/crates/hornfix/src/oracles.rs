//! Independent reference implementations used as oracles by the test
//! suites and by the bundled selftest. These stay clear of the compiled
//! literal machinery in the evaluators: assignments are explicit maps and
//! iteration is written out directly, so an agreement failure points at a
//! real bug rather than shared code.

use std::collections::BTreeMap;

use crate::ast::{Literal, Name, Program, Term};
use crate::structure::{all_tuples, Relation, Structure};

/// Alternating reachability with memoized per-target saturation: a node
/// reaches the target if it is the target, an existential node with some
/// successor that reaches it, or a universal node all of whose successors
/// reach it (vacuously true without successors).
pub struct AltReachOracle {
    succ: Vec<Vec<u32>>,
    universal: Vec<bool>,
    memo: BTreeMap<u32, Vec<bool>>,
}

impl AltReachOracle {
    pub fn new(n: u32, edges: &Relation, universal: &Relation) -> Self {
        let mut succ = vec![Vec::new(); n as usize];
        for t in edges.iter() {
            succ[t[0] as usize].push(t[1]);
        }
        let universal = (0..n).map(|v| universal.contains(&[v])).collect();
        AltReachOracle { succ, universal, memo: BTreeMap::new() }
    }

    pub fn reaches(&mut self, s: u32, t: u32) -> bool {
        if !self.memo.contains_key(&t) {
            let n = self.succ.len();
            let mut alt = vec![false; n];
            alt[t as usize] = true;
            loop {
                let mut changed = false;
                for x in 0..n {
                    if alt[x] {
                        continue;
                    }
                    let ok = if self.universal[x] {
                        self.succ[x].iter().all(|&z| alt[z as usize])
                    } else {
                        self.succ[x].iter().any(|&z| alt[z as usize])
                    };
                    if ok {
                        alt[x] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            self.memo.insert(t, alt);
        }
        self.memo[&t][s as usize]
    }
}

/// Pairs connected by a path of at least one edge, by breadth-first search
/// from every source.
pub fn transitive_closure(n: u32, edges: &Relation) -> Relation {
    let mut succ = vec![Vec::new(); n as usize];
    for t in edges.iter() {
        succ[t[0] as usize].push(t[1]);
    }
    let mut out = Relation::empty(2);
    for s in 0..n {
        let mut seen = vec![false; n as usize];
        let mut queue: Vec<u32> = succ[s as usize].clone();
        while let Some(v) = queue.pop() {
            if seen[v as usize] {
                continue;
            }
            seen[v as usize] = true;
            out.insert(vec![s, v]).expect("arity 2");
            queue.extend(succ[v as usize].iter().copied());
        }
    }
    out
}

fn term_value(
    term: &Term,
    env: &BTreeMap<Name, u32>,
    input: &Structure,
) -> u32 {
    match term {
        Term::Var(v) => env[v],
        Term::Const(c) => input.constant(c).expect("constant interpreted"),
    }
}

fn literal_holds(
    lit: &Literal,
    env: &BTreeMap<Name, u32>,
    input: &Structure,
    assignment: &BTreeMap<Name, Relation>,
) -> bool {
    let lookup = |rel: &str, tuple: &[u32]| -> bool {
        assignment
            .get(rel)
            .or_else(|| input.relation(rel))
            .is_some_and(|r| r.contains(tuple))
    };
    match lit {
        Literal::Pos(a) => {
            let tuple: Vec<u32> = a.args.iter().map(|t| term_value(t, env, input)).collect();
            lookup(&a.relation, &tuple)
        }
        Literal::Neg(a) => {
            let tuple: Vec<u32> = a.args.iter().map(|t| term_value(t, env, input)).collect();
            !lookup(&a.relation, &tuple)
        }
        Literal::Eq(s, t) => term_value(s, env, input) == term_value(t, env, input),
        Literal::Neq(s, t) => term_value(s, env, input) != term_value(t, env, input),
        Literal::Forall { vars, atom } => all_tuples(input.size(), vars.len()).all(|b| {
            let mut inner = env.clone();
            for (v, &val) in vars.iter().zip(&b) {
                inner.insert(v.clone(), val);
            }
            let tuple: Vec<u32> =
                atom.args.iter().map(|t| term_value(t, &inner, input)).collect();
            lookup(&atom.relation, &tuple)
        }),
    }
}

/// One application of all rules to an assignment of the intentional
/// relations: the derived head tuples, per relation.
pub fn immediate_consequence(
    program: &Program,
    input: &Structure,
    assignment: &BTreeMap<Name, Relation>,
) -> BTreeMap<Name, Relation> {
    let mut out: BTreeMap<Name, Relation> = assignment
        .keys()
        .map(|name| {
            let arity = program.vocabulary.relation_arity(name).expect("intentional");
            (name.clone(), Relation::empty(arity))
        })
        .collect();
    for rule in &program.rules {
        let vars = rule.free_variables();
        for values in all_tuples(input.size(), vars.len()) {
            let env: BTreeMap<Name, u32> =
                vars.iter().cloned().zip(values.iter().copied()).collect();
            if rule
                .body
                .iter()
                .all(|lit| literal_holds(lit, &env, input, assignment))
            {
                let tuple: Vec<u32> =
                    rule.head.args.iter().map(|t| term_value(t, &env, input)).collect();
                out.get_mut(&rule.head.relation)
                    .expect("head is intentional")
                    .insert(tuple)
                    .expect("arity matches");
            }
        }
    }
    out
}

/// Plain stage iteration with map-based environments; the reference answer
/// for the compiled evaluator.
pub fn naive_fixpoint(program: &Program, input: &Structure) -> BTreeMap<Name, Relation> {
    let mut current: BTreeMap<Name, Relation> = program
        .intentional()
        .into_iter()
        .map(|name| {
            let arity = program.vocabulary.relation_arity(&name).expect("intentional");
            (name, Relation::empty(arity))
        })
        .collect();
    loop {
        let next = immediate_consequence(program, input, &current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Whether applying any rule to the assignment derives only tuples already
/// present.
pub fn is_closed_assignment(
    program: &Program,
    input: &Structure,
    assignment: &BTreeMap<Name, Relation>,
) -> bool {
    immediate_consequence(program, input, assignment)
        .iter()
        .all(|(name, derived)| derived.is_subset(&assignment[name]))
}

/// Enumerates every assignment of relations to the intentional symbols that
/// is closed under all rules. Exponential in the sum of tuple spaces; for
/// the minimality check on small instances only.
pub fn all_closed_assignments(
    program: &Program,
    input: &Structure,
) -> Vec<BTreeMap<Name, Relation>> {
    let n = input.size();
    let intentional: Vec<(Name, usize)> = program
        .intentional()
        .into_iter()
        .map(|name| {
            let arity = program.vocabulary.relation_arity(&name).expect("intentional");
            (name, arity)
        })
        .collect();
    let spaces: Vec<Vec<Vec<u32>>> = intentional
        .iter()
        .map(|(_, arity)| all_tuples(n, *arity).collect())
        .collect();
    let total_bits: usize = spaces.iter().map(|s| s.len()).sum();
    assert!(total_bits <= 20, "closed-assignment enumeration is for tiny instances");
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << total_bits) {
        let mut assignment = BTreeMap::new();
        let mut bit = 0;
        for ((name, arity), space) in intentional.iter().zip(&spaces) {
            let mut rel = Relation::empty(*arity);
            for tuple in space {
                if mask >> bit & 1 == 1 {
                    rel.insert(tuple.clone()).expect("arity matches");
                }
                bit += 1;
            }
            assignment.insert(name.clone(), rel);
        }
        if is_closed_assignment(program, input, &assignment) {
            out.push(assignment);
        }
    }
    out
}
