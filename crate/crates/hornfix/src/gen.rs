//! Seeded random instance generators for the cross-logic agreement tests,
//! the acceptance suite and the selftest. Everything is driven by a caller
//! seed, so runs are reproducible.

use rand::Rng;

use crate::ast::{
    Atom, Clause, ClauseHead, HornSentence, LfpFormula, Literal, Name, Program, Quant, Rule, Term,
    Vocabulary,
};
use crate::structure::{all_tuples, Relation, Structure};
use crate::trees::{char_tuple, PerfectTree};

/// Fills every relation of the vocabulary with tuples chosen independently
/// with the given density, and interprets every constant randomly.
pub fn random_structure(
    rng: &mut impl Rng,
    vocab: &Vocabulary,
    n: u32,
    density: f64,
) -> Structure {
    let mut st = Structure::new(n);
    for (name, arity) in vocab.relations() {
        let tuples = all_tuples(n, arity).filter(|_| rng.gen_bool(density));
        st.set_relation(name, Relation::from_tuples(arity, tuples).unwrap())
            .unwrap();
    }
    for name in vocab.constants() {
        st.set_constant(name, rng.gen_range(0..n)).unwrap();
    }
    st
}

/// A random alternating-graph instance: edge relation, universal-node
/// marking, and source/target constants.
pub fn random_agap_instance(rng: &mut impl Rng, max_nodes: u32) -> Structure {
    let n = rng.gen_range(1..=max_nodes);
    let mut st = Structure::new(n);
    let edges = all_tuples(n, 2).filter(|_| rng.gen_bool(0.3));
    st.set_relation("E", Relation::from_tuples(2, edges).unwrap()).unwrap();
    let universal = all_tuples(n, 1).filter(|_| rng.gen_bool(0.5));
    st.set_relation("Puni", Relation::from_tuples(1, universal).unwrap()).unwrap();
    st.set_constant("s", rng.gen_range(0..n)).unwrap();
    st.set_constant("t", rng.gen_range(0..n)).unwrap();
    st
}

const VAR_POOL: [&str; 4] = ["x", "y", "z", "w"];

fn random_term(rng: &mut impl Rng, vars: &[&str], constants: &[Name]) -> Term {
    if !constants.is_empty() && rng.gen_bool(0.15) {
        Term::Const(constants[rng.gen_range(0..constants.len())].clone())
    } else {
        Term::var(vars[rng.gen_range(0..vars.len())])
    }
}

/// Configuration for [`random_program`].
pub struct ProgramShape {
    /// Extensional symbols with arities.
    pub ext: Vec<(Name, usize)>,
    /// Intentional symbols with arities; a 0-ary goal `G` is always added.
    pub int: Vec<(Name, usize)>,
    pub constants: Vec<Name>,
    pub allow_universal: bool,
    pub max_rules_per_symbol: usize,
    pub max_body: usize,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape {
            ext: vec![("E".to_string(), 2), ("S".to_string(), 1)],
            int: vec![("P1".to_string(), 1), ("P2".to_string(), 2)],
            constants: vec![],
            allow_universal: true,
            max_rules_per_symbol: 2,
            max_body: 3,
        }
    }
}

/// A random valid program with a 0-ary goal `G`: every intentional symbol
/// gets at least one rule, negation stays on extensional symbols, and
/// universal atoms quantify intentional ones.
pub fn random_program(rng: &mut impl Rng, shape: &ProgramShape) -> (Program, Name) {
    let mut rules = Vec::new();
    let goal = "G".to_string();
    let mut all_int = shape.int.clone();
    all_int.push((goal.clone(), 0));
    for (name, arity) in &all_int {
        let rule_count = rng.gen_range(1..=shape.max_rules_per_symbol);
        for _ in 0..rule_count {
            let head_vars: Vec<&str> = VAR_POOL[..*arity].to_vec();
            let head = Atom::new(name, head_vars.iter().map(|v| Term::var(v)).collect());
            let body_len = rng.gen_range(0..=shape.max_body);
            let mut body = Vec::new();
            for _ in 0..body_len {
                body.push(random_body_literal(rng, shape, &all_int));
            }
            rules.push(Rule::new(head, body));
        }
    }
    let mut program = Program::infer(rules);
    // Carry declared symbols even if unused by the drawn rules.
    for (name, arity) in shape.ext.iter().chain(&all_int) {
        program.vocabulary.add_relation(name, *arity).unwrap();
    }
    for c in &shape.constants {
        program.vocabulary.add_constant(c).unwrap();
    }
    debug_assert!(program.validate().is_ok());
    (program, goal)
}

fn random_body_literal(
    rng: &mut impl Rng,
    shape: &ProgramShape,
    int: &[(Name, usize)],
) -> Literal {
    let vars = &VAR_POOL[..];
    loop {
        match rng.gen_range(0..6) {
            0 => {
                let (name, arity) = &shape.ext[rng.gen_range(0..shape.ext.len())];
                let args =
                    (0..*arity).map(|_| random_term(rng, vars, &shape.constants)).collect();
                return Literal::Pos(Atom::new(name, args));
            }
            1 => {
                let (name, arity) = &shape.ext[rng.gen_range(0..shape.ext.len())];
                let args =
                    (0..*arity).map(|_| random_term(rng, vars, &shape.constants)).collect();
                return Literal::Neg(Atom::new(name, args));
            }
            2 => {
                let (name, arity) = &int[rng.gen_range(0..int.len())];
                let args =
                    (0..*arity).map(|_| random_term(rng, vars, &shape.constants)).collect();
                return Literal::Pos(Atom::new(name, args));
            }
            3 => {
                return Literal::Eq(
                    random_term(rng, vars, &shape.constants),
                    random_term(rng, vars, &shape.constants),
                )
            }
            4 => {
                return Literal::Neq(
                    random_term(rng, vars, &shape.constants),
                    random_term(rng, vars, &shape.constants),
                )
            }
            _ if shape.allow_universal => {
                // Bind the last pool variable and use it at a random slot.
                let candidates: Vec<&(Name, usize)> =
                    int.iter().filter(|(_, a)| *a >= 1).collect();
                if candidates.is_empty() {
                    continue;
                }
                let (name, arity) = candidates[rng.gen_range(0..candidates.len())];
                let bound = "u".to_string();
                let slot = rng.gen_range(0..*arity);
                let args = (0..*arity)
                    .map(|i| {
                        if i == slot {
                            Term::var(&bound)
                        } else {
                            random_term(rng, vars, &shape.constants)
                        }
                    })
                    .collect();
                return Literal::Forall { vars: vec![bound], atom: Atom::new(name, args) };
            }
            _ => continue,
        }
    }
}

/// Configuration for [`random_horn_sentence`].
pub struct HornShape {
    pub so_vars: Vec<(Name, usize)>,
    pub ext: Vec<(Name, usize)>,
    pub fo_vars: Vec<Name>,
    pub max_clauses: usize,
    pub max_alphas: usize,
    pub max_betas: usize,
}

impl Default for HornShape {
    fn default() -> Self {
        HornShape {
            so_vars: vec![("R".to_string(), 1), ("T".to_string(), 2)],
            ext: vec![("S".to_string(), 1), ("E".to_string(), 2)],
            fo_vars: vec!["x".to_string(), "y".to_string()],
            max_clauses: 3,
            max_alphas: 2,
            max_betas: 2,
        }
    }
}

/// A random sentence over the shape's prefix; roughly a third of the
/// clauses are FALSE-headed.
pub fn random_horn_sentence(rng: &mut impl Rng, shape: &HornShape) -> HornSentence {
    let fo_refs: Vec<&str> = shape.fo_vars.iter().map(|s| s.as_str()).collect();
    let mut vocabulary = Vocabulary::new();
    for (name, arity) in &shape.ext {
        vocabulary.add_relation(name, *arity).unwrap();
    }
    let mut clauses = Vec::new();
    for _ in 0..rng.gen_range(1..=shape.max_clauses) {
        let mut alphas = Vec::new();
        for _ in 0..rng.gen_range(0..=shape.max_alphas) {
            let (name, arity) = &shape.so_vars[rng.gen_range(0..shape.so_vars.len())];
            if *arity >= 1 && rng.gen_bool(0.3) {
                // Universal premise binding a fresh variable at one slot.
                let slot = rng.gen_range(0..*arity);
                let args = (0..*arity)
                    .map(|i| {
                        if i == slot {
                            Term::var("v")
                        } else {
                            random_term(rng, &fo_refs, &[])
                        }
                    })
                    .collect();
                alphas.push(Literal::Forall {
                    vars: vec!["v".to_string()],
                    atom: Atom::new(name, args),
                });
            } else {
                let args = (0..*arity).map(|_| random_term(rng, &fo_refs, &[])).collect();
                alphas.push(Literal::Pos(Atom::new(name, args)));
            }
        }
        let mut betas = Vec::new();
        for _ in 0..rng.gen_range(0..=shape.max_betas) {
            match rng.gen_range(0..4) {
                0 | 1 => {
                    let (name, arity) = &shape.ext[rng.gen_range(0..shape.ext.len())];
                    let args = (0..*arity).map(|_| random_term(rng, &fo_refs, &[])).collect();
                    let atom = Atom::new(name, args);
                    betas.push(if rng.gen_bool(0.5) {
                        Literal::Pos(atom)
                    } else {
                        Literal::Neg(atom)
                    });
                }
                2 => betas.push(Literal::Eq(
                    random_term(rng, &fo_refs, &[]),
                    random_term(rng, &fo_refs, &[]),
                )),
                _ => betas.push(Literal::Neq(
                    random_term(rng, &fo_refs, &[]),
                    random_term(rng, &fo_refs, &[]),
                )),
            }
        }
        let head = if rng.gen_bool(0.35) {
            ClauseHead::Bottom
        } else {
            let (name, arity) = &shape.so_vars[rng.gen_range(0..shape.so_vars.len())];
            let args = (0..*arity).map(|_| random_term(rng, &fo_refs, &[])).collect();
            ClauseHead::Atom(Atom::new(name, args))
        };
        clauses.push(Clause { alphas, betas, head });
    }
    let sentence = HornSentence {
        so_vars: shape.so_vars.clone(),
        fo_vars: shape.fo_vars.clone(),
        clauses,
        vocabulary,
    };
    debug_assert!(sentence.validate().is_ok());
    sentence
}

/// A random normal-form LFP formula over `E/2` and `S/1` with the
/// fixed-point relation occurring only positively.
pub fn random_lfp_formula(rng: &mut impl Rng, max_lfp_vars: usize) -> LfpFormula {
    let r = rng.gen_range(1..=max_lfp_vars);
    let lfp_vars: Vec<Name> = (1..=r).map(|i| format!("z{i}")).collect();
    let prefix_len = rng.gen_range(0..=2);
    let prefix: Vec<(Quant, Name)> = (1..=prefix_len)
        .map(|i| {
            let q = if rng.gen_bool(0.5) { Quant::Forall } else { Quant::Exists };
            (q, format!("y{i}"))
        })
        .collect();
    let mut vars: Vec<&str> = Vec::new();
    let lfp_refs: Vec<String> = lfp_vars.clone();
    for v in &lfp_refs {
        vars.push(v);
    }
    let prefix_refs: Vec<String> = prefix.iter().map(|(_, v)| v.clone()).collect();
    for v in &prefix_refs {
        vars.push(v);
    }
    let mut vocabulary = Vocabulary::new();
    vocabulary.add_relation("E", 2).unwrap();
    vocabulary.add_relation("S", 1).unwrap();

    let clause_count = rng.gen_range(1..=3);
    let mut clauses = Vec::new();
    for _ in 0..clause_count {
        let mut lits = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            match rng.gen_range(0..5) {
                0 => {
                    let args = (0..r).map(|_| random_term(rng, &vars, &[])).collect();
                    lits.push(Literal::Pos(Atom::new("Z", args)));
                }
                1 => {
                    let args = (0..2).map(|_| random_term(rng, &vars, &[])).collect();
                    lits.push(Literal::Pos(Atom::new("E", args)));
                }
                2 => {
                    let atom = Atom::new("S", vec![random_term(rng, &vars, &[])]);
                    lits.push(if rng.gen_bool(0.5) {
                        Literal::Pos(atom)
                    } else {
                        Literal::Neg(atom)
                    });
                }
                3 => lits.push(Literal::Eq(
                    random_term(rng, &vars, &[]),
                    random_term(rng, &vars, &[]),
                )),
                _ => lits.push(Literal::Neq(
                    random_term(rng, &vars, &[]),
                    random_term(rng, &vars, &[]),
                )),
            }
        }
        clauses.push(lits);
    }
    let formula = LfpFormula {
        exist_var: "u".to_string(),
        lfp_vars,
        lfp_relation: "Z".to_string(),
        prefix,
        clauses,
        fixpoint_args: vec![Term::var("u"); r],
        vocabulary,
    };
    debug_assert!(formula.validate().is_ok());
    formula
}

/// A random program over the tree vocabulary (`root`, `E`, `R1/1`, `R2/2`)
/// with a 0-ary goal, at most one universal atom, and literal kinds drawn
/// from the set the characteristic compiler supports.
pub fn random_tree_program(rng: &mut impl Rng, with_universal: bool) -> (Program, Name) {
    let ext: Vec<(Name, usize)> = vec![
        ("E".to_string(), 2),
        ("R1".to_string(), 1),
        ("R2".to_string(), 2),
    ];
    let int: Vec<(Name, usize)> = vec![("P1".to_string(), 1), ("P2".to_string(), 2)];
    let vars = &VAR_POOL[..3];
    let constants = vec!["root".to_string()];
    let mut rules = Vec::new();
    let mut universal_budget = if with_universal { 1 } else { 0 };
    let goal = "G".to_string();
    let mut all_heads = int.clone();
    all_heads.push((goal.clone(), 0));
    for (name, arity) in &all_heads {
        for _ in 0..rng.gen_range(1..=2) {
            let head =
                Atom::new(name, VAR_POOL[..*arity].iter().map(|v| Term::var(v)).collect());
            let mut body = Vec::new();
            for _ in 0..rng.gen_range(0..=2) {
                let lit = match rng.gen_range(0..7) {
                    0 => {
                        let args =
                            (0..2).map(|_| random_term(rng, vars, &constants)).collect();
                        Literal::Pos(Atom::new("E", args))
                    }
                    1 => {
                        let args =
                            (0..2).map(|_| random_term(rng, vars, &constants)).collect();
                        Literal::Neg(Atom::new("E", args))
                    }
                    2 => {
                        let (rel, a) = &ext[rng.gen_range(1..ext.len())];
                        let args =
                            (0..*a).map(|_| random_term(rng, vars, &constants)).collect();
                        let atom = Atom::new(rel, args);
                        if rng.gen_bool(0.5) {
                            Literal::Pos(atom)
                        } else {
                            Literal::Neg(atom)
                        }
                    }
                    3 => Literal::Eq(
                        random_term(rng, vars, &constants),
                        random_term(rng, vars, &constants),
                    ),
                    4 => Literal::Neq(
                        random_term(rng, vars, &constants),
                        random_term(rng, vars, &constants),
                    ),
                    5 if universal_budget > 0 => {
                        universal_budget -= 1;
                        let (rel, a) = &int[rng.gen_range(0..int.len())];
                        let slot = rng.gen_range(0..*a);
                        let args = (0..*a)
                            .map(|i| {
                                if i == slot {
                                    Term::var("u")
                                } else {
                                    // Universal atoms range over variables.
                                    Term::var(vars[rng.gen_range(0..vars.len())])
                                }
                            })
                            .collect();
                        Literal::Forall {
                            vars: vec!["u".to_string()],
                            atom: Atom::new(rel, args),
                        }
                    }
                    _ => {
                        let (rel, a) = &int[rng.gen_range(0..int.len())];
                        let args =
                            (0..*a).map(|_| random_term(rng, vars, &constants)).collect();
                        Literal::Pos(Atom::new(rel, args))
                    }
                };
                body.push(lit);
            }
            rules.push(Rule::new(head, body));
        }
    }
    if with_universal && universal_budget > 0 {
        // Guarantee the occurrence: a goal rule quantifying over an
        // intentional relation.
        let (rel, a) = &int[rng.gen_range(0..int.len())];
        let slot = rng.gen_range(0..*a);
        let args = (0..*a)
            .map(|i| {
                if i == slot {
                    Term::var("u")
                } else {
                    Term::var(vars[rng.gen_range(0..vars.len())])
                }
            })
            .collect();
        rules.push(Rule::new(
            Atom::new(&goal, vec![]),
            vec![Literal::Forall { vars: vec!["u".to_string()], atom: Atom::new(rel, args) }],
        ));
    }
    let mut program = Program::infer(rules);
    for (name, arity) in ext.iter().chain(&all_heads) {
        program.vocabulary.add_relation(name, *arity).unwrap();
    }
    let _ = program.vocabulary.add_constant("root");
    debug_assert!(program.validate().is_ok(), "{:?}", program.validate());
    (program, goal)
}

/// A random union of characteristic-tuple classes: invariant by
/// construction.
pub fn random_invariant_relation(
    rng: &mut impl Rng,
    tree: &PerfectTree,
    arity: usize,
) -> Relation {
    let mut decided: std::collections::BTreeMap<Vec<u32>, bool> = Default::default();
    let tuples = all_tuples(tree.node_count(), arity).filter(|t| {
        *decided
            .entry(char_tuple(tree, t))
            .or_insert_with(|| rng.gen_bool(0.5))
    });
    Relation::from_tuples(arity, tuples).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_horn, parse_lfp, parse_program, print_horn, print_lfp, print_program};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn generated_programs_validate_and_round_trip() {
        let mut rng = StdRng::seed_from_u64(41);
        for i in 0..100 {
            let shape = ProgramShape::default();
            let (program, _) = random_program(&mut rng, &shape);
            assert!(program.validate().is_ok(), "case {i}");
            let printed = print_program(&program);
            let reparsed = parse_program(&printed).unwrap_or_else(|e| {
                panic!("case {i} failed to reparse: {e:?}\n{printed}")
            });
            assert_eq!(program, reparsed, "case {i}");
        }
    }

    #[test]
    fn generated_horn_sentences_validate_and_round_trip() {
        let mut rng = StdRng::seed_from_u64(42);
        for i in 0..100 {
            let sentence = random_horn_sentence(&mut rng, &HornShape::default());
            assert!(sentence.validate().is_ok(), "case {i}");
            let printed = print_horn(&sentence);
            let reparsed = parse_horn(&printed).unwrap_or_else(|e| {
                panic!("case {i} failed to reparse: {e:?}\n{printed}")
            });
            assert_eq!(sentence, reparsed, "case {i}");
        }
    }

    #[test]
    fn generated_lfp_formulas_validate_and_round_trip() {
        let mut rng = StdRng::seed_from_u64(43);
        for i in 0..100 {
            let formula = random_lfp_formula(&mut rng, 2);
            assert!(formula.validate().is_ok(), "case {i}");
            let printed = print_lfp(&formula);
            let reparsed = parse_lfp(&printed).unwrap_or_else(|e| {
                panic!("case {i} failed to reparse: {e:?}\n{printed}")
            });
            assert_eq!(formula, reparsed, "case {i}");
        }
    }

    #[test]
    fn generated_tree_programs_compile() {
        let mut rng = StdRng::seed_from_u64(44);
        for i in 0..50 {
            let (program, _) = random_tree_program(&mut rng, i % 2 == 0);
            assert!(program.validate().is_ok(), "case {i}");
            crate::pistar::compile(&program).unwrap_or_else(|e| {
                panic!("case {i} failed to compile: {e}")
            });
        }
    }

    #[test]
    fn generated_invariant_relations_are_invariant() {
        let mut rng = StdRng::seed_from_u64(45);
        let tree = PerfectTree::new(3);
        for _ in 0..20 {
            let rel = random_invariant_relation(&mut rng, &tree, 2);
            assert!(crate::trees::is_invariant_by_char(&rel, &tree));
        }
    }
}
