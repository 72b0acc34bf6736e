//! The bundled self-test battery: every oracle-backed equivalence the
//! project relies on, at desk scale, with fixed seeds. The output is
//! deterministic byte for byte, so two runs can be compared directly.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::ast::{normalize, Program, Term};
use crate::eval::{
    eval_datalog_r, eval_horn_brute_force, eval_lfp, eval_sim_lfp, DEFAULT_SO_BUDGET,
};
use crate::gen::{
    random_agap_instance, random_horn_sentence, random_invariant_relation, random_lfp_formula,
    random_program, random_structure, random_tree_program, HornShape, ProgramShape,
};
use crate::kprime::{
    closure_under_substructures_test, condition1_member, condition2_member, membership_kprime,
    DemoOracle, ExtensionParams, GraphStructure,
};
use crate::oracles::{all_closed_assignments, transitive_closure, AltReachOracle};
use crate::parse::parse_program;
use crate::pistar::verify_prop6;
use crate::structure::{all_tuples, Relation, Structure};
use crate::translate::{datalog_to_horn, datalog_to_sim_lfp, horn_to_datalog, lfp_to_datalog};
use crate::trees::{char_tuple, check, decider_r_nege, decider_r_neq, decode, encode, PerfectTree};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

const AGAP: &str = "\
const s, t.
Palt(x,y) :- x = y.
Palt(x,y) :- !Puni(x), E(x,z), Palt(z,y).
Palt(x,y) :- Puni(x), forall z: Q(x,z,y).
Q(x,z,y) :- !E(x,z), y = y.
Q(x,z,y) :- Palt(z,y), x = x.
P :- Palt(s,t).
";

fn agap_program() -> Program {
    parse_program(AGAP).expect("bundled program parses")
}

fn check_agap() -> CheckResult {
    let program = agap_program();
    let mut rng = StdRng::seed_from_u64(0xA6A9);
    let mut agree = 0;
    let total = 60;
    for _ in 0..total {
        let st = random_agap_instance(&mut rng, 6);
        let engine = eval_datalog_r(&program, &st)
            .and_then(|e| e.goal_holds("P"))
            .expect("agap evaluates");
        let mut oracle = AltReachOracle::new(
            st.size(),
            st.relation("E").unwrap(),
            st.relation("Puni").unwrap(),
        );
        if engine == oracle.reaches(st.constant("s").unwrap(), st.constant("t").unwrap()) {
            agree += 1;
        }
    }
    result("agap-vs-alternating-oracle", agree == total, format!("{agree}/{total} agree"))
}

fn check_normalize_equivalence() -> CheckResult {
    // P(x,x) :- E(x,x) and its normalized form define the same relation.
    let original = parse_program("P(x,x) :- E(x,x).");
    // The raw rule has a non-normal head, so build it directly.
    let rule = crate::ast::Rule::new(
        crate::ast::Atom::new("P", vec![Term::var("x"), Term::var("x")]),
        vec![crate::ast::Literal::Pos(crate::ast::Atom::new(
            "E",
            vec![Term::var("x"), Term::var("x")],
        ))],
    );
    drop(original);
    let normalized = Program::infer(vec![normalize(&rule)]);
    let mut rng = StdRng::seed_from_u64(0x2071);
    let mut agree = 0;
    let total = 20;
    for _ in 0..total {
        let n = rng.gen_range(1..=4);
        let st = random_structure(&mut rng, &normalized.extensional_vocab(), n, 0.5);
        let norm_fix = eval_datalog_r(&normalized, &st).unwrap();
        // Reference: P = {(a,a) | E(a,a)} directly.
        let mut expect = Relation::empty(2);
        for a in 0..n {
            if st.relation("E").unwrap().contains(&[a, a]) {
                expect.insert(vec![a, a]).unwrap();
            }
        }
        if norm_fix.goal_relation("P").unwrap() == &expect {
            agree += 1;
        }
    }
    result("normalize-preserves-semantics", agree == total, format!("{agree}/{total} agree"))
}

fn check_prop3_forward() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x9403);
    let shape = HornShape::default();
    let mut agree = 0;
    let total = 60;
    for _ in 0..total {
        let sentence = random_horn_sentence(&mut rng, &shape);
        let n = rng.gen_range(1..=3);
        let st = random_structure(&mut rng, &sentence.vocabulary, n, 0.4);
        let direct = eval_horn_brute_force(&sentence, &st, DEFAULT_SO_BUDGET).unwrap();
        let (program, goal) = horn_to_datalog(&sentence);
        let translated = eval_datalog_r(&program, &st).unwrap().goal_holds(&goal).unwrap();
        if direct == !translated {
            agree += 1;
        }
    }
    result("prop3-horn-to-datalog", agree == total, format!("{agree}/{total} agree"))
}

fn check_prop3_reverse() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x9404);
    let shape = ProgramShape {
        int: vec![("P1".to_string(), 1)],
        ..ProgramShape::default()
    };
    let mut agree = 0;
    let total = 60;
    for _ in 0..total {
        let (program, goal) = random_program(&mut rng, &shape);
        let n = rng.gen_range(1..=3);
        let st = random_structure(&mut rng, &program.extensional_vocab(), n, 0.4);
        let direct = eval_datalog_r(&program, &st).unwrap().goal_holds(&goal).unwrap();
        let sentence = datalog_to_horn(&program, &goal).unwrap();
        let translated = eval_horn_brute_force(&sentence, &st, DEFAULT_SO_BUDGET).unwrap();
        if translated == !direct {
            agree += 1;
        }
    }
    result("prop3-datalog-to-horn", agree == total, format!("{agree}/{total} agree"))
}

fn check_prop3_round_trip() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x9405);
    let shape = ProgramShape {
        int: vec![("P1".to_string(), 1)],
        ..ProgramShape::default()
    };
    let mut agree = 0;
    let total = 40;
    for _ in 0..total {
        let (program, goal) = random_program(&mut rng, &shape);
        let n = rng.gen_range(1..=3);
        let st = random_structure(&mut rng, &program.extensional_vocab(), n, 0.4);
        let direct = eval_datalog_r(&program, &st).unwrap().goal_holds(&goal).unwrap();
        let sentence = datalog_to_horn(&program, &goal).unwrap();
        let (back, back_goal) = horn_to_datalog(&sentence);
        let round = eval_datalog_r(&back, &st).unwrap().goal_holds(&back_goal).unwrap();
        if round == direct {
            agree += 1;
        }
    }
    result("prop3-round-trip", agree == total, format!("{agree}/{total} agree"))
}

fn check_thm1_forward() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x1F0F);
    let mut agree = 0;
    let total = 10 * 20;
    for _ in 0..10 {
        let formula = random_lfp_formula(&mut rng, 2);
        let (program, goal) = lfp_to_datalog(&formula);
        for _ in 0..20 {
            let n = rng.gen_range(1..=4);
            let st = random_structure(&mut rng, &formula.vocabulary, n, 0.4);
            let direct = eval_lfp(&formula, &st).unwrap();
            let translated =
                eval_datalog_r(&program, &st).unwrap().goal_holds(&goal).unwrap();
            if direct == translated {
                agree += 1;
            }
        }
    }
    result("thm1-lfp-to-datalog", agree == total, format!("{agree}/{total} agree"))
}

fn check_thm1_backward() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x1F10);
    let shape = ProgramShape::default();
    let mut agree = 0;
    let total = 40;
    for _ in 0..total {
        let (program, goal) = random_program(&mut rng, &shape);
        let system = datalog_to_sim_lfp(&program, &goal, vec![]);
        let n = rng.gen_range(1..=4);
        let st = random_structure(&mut rng, &program.extensional_vocab(), n, 0.4);
        let direct = eval_datalog_r(&program, &st).unwrap().goal_holds(&goal).unwrap();
        let simultaneous = eval_sim_lfp(&system, &st).unwrap().goal_holds.unwrap();
        if direct == simultaneous {
            agree += 1;
        }
    }
    result("thm1-datalog-to-simlfp", agree == total, format!("{agree}/{total} agree"))
}

fn check_tc_oracle() -> CheckResult {
    let program = parse_program("T(x,y) :- E(x,y). T(x,y) :- E(x,z), T(z,y).").unwrap();
    let mut rng = StdRng::seed_from_u64(0x7C7C);
    let mut agree = 0;
    let total = 30;
    for _ in 0..total {
        let n = rng.gen_range(1..=5);
        let st = random_structure(&mut rng, &program.extensional_vocab(), n, 0.3);
        let engine = eval_datalog_r(&program, &st).unwrap();
        if engine.goal_relation("T").unwrap()
            == &transitive_closure(n, st.relation("E").unwrap())
        {
            agree += 1;
        }
    }
    result("transitive-closure-vs-bfs", agree == total, format!("{agree}/{total} agree"))
}

fn check_minimality() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x3141);
    let shape = ProgramShape {
        ext: vec![("S".to_string(), 1)],
        int: vec![("P1".to_string(), 1)],
        allow_universal: true,
        max_rules_per_symbol: 2,
        max_body: 2,
        constants: vec![],
    };
    let mut ok = 0;
    let total = 20;
    for _ in 0..total {
        let (program, _) = random_program(&mut rng, &shape);
        let n = rng.gen_range(1..=3);
        let st = random_structure(&mut rng, &program.extensional_vocab(), n, 0.5);
        let fixpoint = eval_datalog_r(&program, &st).unwrap();
        let closed = all_closed_assignments(&program, &st);
        let minimal = closed.iter().all(|assignment| {
            fixpoint
                .fixpoint()
                .iter()
                .all(|(name, rel)| rel.is_subset(&assignment[name]))
        });
        if minimal && !closed.is_empty() {
            ok += 1;
        }
    }
    result("fixpoint-minimality", ok == total, format!("{ok}/{total} minimal"))
}

fn check_check_procedure() -> CheckResult {
    let tree = PerfectTree::new(3);
    let mut truth = std::collections::BTreeSet::new();
    for arity in 0..=3usize {
        for tuple in all_tuples(tree.node_count(), arity) {
            truth.insert(char_tuple(&tree, &tuple));
        }
    }
    let mut tested = 0;
    let mut agree = 0;
    for arity in 0..=3usize {
        for candidate in all_tuples(4, crate::trees::triangular(arity)) {
            tested += 1;
            if check(&candidate).unwrap() == truth.contains(&candidate) {
                agree += 1;
            }
        }
    }
    result("check-vs-enumeration", agree == tested, format!("{agree}/{tested} agree"))
}

fn check_deciders() -> CheckResult {
    let tree = PerfectTree::new(4);
    let mut neq = std::collections::BTreeSet::new();
    let mut nege = std::collections::BTreeSet::new();
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
    let mut tested = 0;
    let mut agree = 0;
    for e1 in 0..=4u32 {
        for e2 in 0..=4u32 {
            for e3 in 0..=4u32 {
                tested += 2;
                if decider_r_neq(e1, e2, e3) == neq.contains(&vec![e1, e2, e3]) {
                    agree += 1;
                }
                if decider_r_nege(e1, e2, e3) == nege.contains(&vec![e1, e2, e3]) {
                    agree += 1;
                }
            }
        }
    }
    result("deciders-vs-enumeration", agree == tested, format!("{agree}/{tested} agree"))
}

fn check_invariance_closure() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x1E33);
    let tree = PerfectTree::new(3);
    let n = tree.node_count();
    let mut ok = 0;
    let total = 30;
    for _ in 0..total {
        let r1 = random_invariant_relation(&mut rng, &tree, 2);
        let r2 = random_invariant_relation(&mut rng, &tree, 2);
        let preserved = crate::trees::is_invariant_by_char(&r1.complement(n), &tree)
            && crate::trees::is_invariant_by_char(&r1.intersect(&r2).unwrap(), &tree)
            && crate::trees::is_invariant_by_char(&r1.union(&r2).unwrap(), &tree)
            && crate::trees::is_invariant_by_char(&r1.permute(&[1, 0]).unwrap(), &tree)
            && crate::trees::is_invariant_by_char(&r1.product(&r2), &tree)
            && crate::trees::is_invariant_by_char(&r1.project_exists(1).unwrap(), &tree)
            && crate::trees::is_invariant_by_char(&r1.project_forall(1, n).unwrap(), &tree)
            && crate::trees::is_invariant(&r1, &tree).unwrap()
                == crate::trees::is_invariant_by_char(&r1, &tree);
        if preserved {
            ok += 1;
        }
    }
    result("invariance-closure", ok == total, format!("{ok}/{total} preserved"))
}

fn check_encode_decode() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0xE2CD);
    let mut ok = 0;
    let total = 20;
    for _ in 0..total {
        let n = rng.gen_range(1..=4);
        let mut vocab = crate::ast::Vocabulary::new();
        vocab.add_relation("R1", 1).unwrap();
        vocab.add_relation("R2", 2).unwrap();
        let a = random_structure(&mut rng, &vocab, n, 0.5);
        if decode(&encode(&a)).unwrap() == a {
            ok += 1;
        }
    }
    result("encode-decode-round-trip", ok == total, format!("{ok}/{total} round-trip"))
}

fn check_prop6() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x6666);
    let mut ok = 0;
    let total = 12;
    for i in 0..total {
        let (program, goal) = random_tree_program(&mut rng, i % 2 == 0);
        let n = rng.gen_range(1..=3);
        let mut vocab = crate::ast::Vocabulary::new();
        vocab.add_relation("R1", 1).unwrap();
        vocab.add_relation("R2", 2).unwrap();
        let a = random_structure(&mut rng, &vocab, n, 0.4);
        let report = verify_prop6(&a, &program, Some(&goal)).unwrap();
        if report.all_pass() {
            ok += 1;
        }
    }
    result("prop6-characteristic-compilation", ok == total, format!("{ok}/{total} pass"))
}

fn check_kprime_closure() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(0x4B4B);
    let params = ExtensionParams::new(1);
    let even = |a: &Structure| DemoOracle::Even.accepts(a);
    let mut members = Vec::new();
    for _ in 0..2 {
        let mut vocab = crate::ast::Vocabulary::new();
        vocab.add_relation("R1", 1).unwrap();
        let core = random_structure(&mut rng, &vocab, 2, 0.5);
        members.push(condition1_member(&core, &params));
        let size2 = rng.gen_range(1..=3);
        let core2 = random_structure(&mut rng, &vocab, size2, 0.5);
        members.push(condition2_member(&core2));
    }
    let mut ok = 0;
    let mut total = 0;
    for member in &members {
        let g = GraphStructure::new(member.clone()).unwrap();
        if !membership_kprime(&g, &even, &params).unwrap().is_member() {
            continue;
        }
        let report =
            closure_under_substructures_test(&g, &even, &params, 15, &mut rng).unwrap();
        total += report.samples;
        ok += report.members;
    }
    result("kprime-substructure-closure", ok == total && total > 0, format!("{ok}/{total} members"))
}

/// Runs the whole battery with fixed seeds.
pub fn run() -> Vec<CheckResult> {
    vec![
        check_agap(),
        check_normalize_equivalence(),
        check_tc_oracle(),
        check_prop3_forward(),
        check_prop3_reverse(),
        check_prop3_round_trip(),
        check_thm1_forward(),
        check_thm1_backward(),
        check_minimality(),
        check_check_procedure(),
        check_deciders(),
        check_invariance_closure(),
        check_encode_decode(),
        check_prop6(),
        check_kprime_closure(),
    ]
}

pub fn render(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{} {} ({})\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        ));
    }
    let passed = results.iter().filter(|r| r.passed).count();
    out.push_str(&format!("selftest: {passed}/{} checks passed\n", results.len()));
    out
}
