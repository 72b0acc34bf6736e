//! The four constructive translations between the logics.
//!
//! Horn sentences and Datalog formulas are interdefinable up to negation:
//! a sentence holds on a structure exactly when the translated program's
//! 0-ary goal does not, in both directions. LFP formulas in normal form
//! compile to Datalog programs by peeling the quantifier prefix into
//! auxiliary relations, and a program's rule set reads off directly as a
//! simultaneous fixed-point system.
//!
//! Generated relation and variable names carry the reserved `$` prefix and
//! deterministic counters, so translation output is reproducible.

use std::collections::BTreeSet;

use crate::ast::{
    normalize, Atom, Clause, ClauseHead, FreshNames, HornSentence, LfpFormula, Literal, Name,
    Program, Quant, Rule, SimLfpDef, SimLfpDisjunct, SimLfpSystem, Term,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("goal relation `{0}` must be 0-ary and intentional")]
    GoalNotZeroAry(Name),
}

/// Translates an existential second-order Horn sentence into a Datalog
/// program with a fresh 0-ary goal, such that a structure satisfies the
/// sentence iff it does not satisfy the goal formula.
///
/// The construction: one tautological rule per relation variable (which
/// keeps headless relation variables intentional), one rule per clause
/// (FALSE-headed clauses derive the goal), and a never-firing goal rule
/// when no clause is FALSE-headed.
pub fn horn_to_datalog(sentence: &HornSentence) -> (Program, Name) {
    let mut fresh = FreshNames::from_names(
        sentence
            .vocabulary
            .names()
            .chain(sentence.so_vars.iter().map(|(n, _)| n.as_str())),
    );
    let goal = fresh.fresh("P");
    let mut rules = Vec::new();
    for (name, arity) in &sentence.so_vars {
        let args: Vec<Term> = (0..*arity).map(|i| Term::Var(format!("$u{i}"))).collect();
        let atom = Atom::new(name, args);
        rules.push(Rule::new(atom.clone(), vec![Literal::Pos(atom)]));
    }
    let mut saw_bottom = false;
    for clause in &sentence.clauses {
        let body: Vec<Literal> = clause.alphas.iter().chain(&clause.betas).cloned().collect();
        let head = match &clause.head {
            ClauseHead::Atom(a) => a.clone(),
            ClauseHead::Bottom => {
                saw_bottom = true;
                Atom::new(&goal, vec![])
            }
        };
        rules.push(normalize(&Rule::new(head, body)));
    }
    if !saw_bottom {
        let v = Term::Var("$v".to_string());
        rules.push(Rule::new(Atom::new(&goal, vec![]), vec![Literal::Neq(v.clone(), v)]));
    }
    (Program::infer(rules), goal)
}

/// Translates a Datalog formula with a 0-ary goal into a Horn sentence
/// equivalent to its negation.
///
/// 0-ary relation symbols occurring in rule bodies are first eliminated: a
/// body occurrence of `Q` becomes `Q'(x)` for a fresh unary `Q'` and fresh
/// variable `x`, `Q`-headed rules are re-headed to `Q'`, and `Q :- Q'(x)` is
/// added. The sentence then quantifies the non-0-ary intentional symbols
/// existentially, closes all free rule variables universally, and turns
/// goal-headed rules into FALSE-headed clauses.
pub fn datalog_to_horn(program: &Program, goal: &str) -> Result<HornSentence, TranslateError> {
    if program.vocabulary.relation_arity(goal) != Some(0)
        || !program.intentional().contains(goal)
    {
        return Err(TranslateError::GoalNotZeroAry(goal.to_string()));
    }

    let mut fresh = FreshNames::from_names(program.vocabulary.names());
    for rule in &program.rules {
        for name in rule.free_variables() {
            fresh.reserve(&name);
        }
        if let Some(lits) = Some(&rule.body) {
            for lit in lits {
                if let Literal::Forall { vars, .. } = lit {
                    for v in vars {
                        fresh.reserve(v);
                    }
                }
            }
        }
    }

    // Which 0-ary intentional symbols occur in a body?
    let intentional = program.intentional();
    let mut needs_rewrite: BTreeSet<Name> = BTreeSet::new();
    for rule in &program.rules {
        for lit in &rule.body {
            if let Some(atom) = lit.atom() {
                if atom.args.is_empty() && intentional.contains(&atom.relation) {
                    needs_rewrite.insert(atom.relation.clone());
                }
            }
        }
    }
    let mut rules = program.rules.clone();
    for q in &needs_rewrite {
        let q_prime = fresh.fresh(&format!("c_{q}"));
        let x = fresh.fresh(&format!("x_{q}"));
        let replacement = Atom::new(&q_prime, vec![Term::Var(x.clone())]);
        for rule in &mut rules {
            if rule.head.relation == *q {
                rule.head = replacement.clone();
            }
            for lit in &mut rule.body {
                match lit {
                    Literal::Pos(a) if a.relation == *q => *a = replacement.clone(),
                    _ => {}
                }
            }
        }
        rules.push(Rule::new(
            Atom::new(q, vec![]),
            vec![Literal::Pos(replacement)],
        ));
    }
    let rewritten = Program::infer(rules);

    // Prefix: existential over non-0-ary intentional symbols, universal over
    // every free rule variable.
    let intentional = rewritten.intentional();
    let mut so_vars = Vec::new();
    for (name, arity) in rewritten.vocabulary.relations() {
        if intentional.contains(name) && arity > 0 {
            so_vars.push((name.to_string(), arity));
        }
    }
    let mut fo_vars: Vec<Name> = Vec::new();
    for rule in &rewritten.rules {
        for v in rule.free_variables() {
            if !fo_vars.contains(&v) {
                fo_vars.push(v);
            }
        }
    }

    let so_names: BTreeSet<&str> = so_vars.iter().map(|(n, _)| n.as_str()).collect();
    let mut clauses = Vec::new();
    for rule in &rewritten.rules {
        if rule.head.args.is_empty() {
            if rule.head.relation != goal {
                // Other 0-ary heads cannot influence the goal once bodies are
                // free of 0-ary symbols.
                continue;
            }
            clauses.push(make_clause(&rule.body, &so_names, ClauseHead::Bottom));
        } else {
            clauses.push(make_clause(
                &rule.body,
                &so_names,
                ClauseHead::Atom(rule.head.clone()),
            ));
        }
    }

    let mut vocabulary = crate::ast::Vocabulary::new();
    for (name, arity) in rewritten.vocabulary.relations() {
        if !intentional.contains(name) {
            vocabulary.add_relation(name, arity).expect("disjoint names");
        }
    }
    for c in rewritten.vocabulary.constants() {
        vocabulary.add_constant(c).expect("disjoint names");
    }
    Ok(HornSentence { so_vars, fo_vars, clauses, vocabulary })
}

fn make_clause(body: &[Literal], so_names: &BTreeSet<&str>, head: ClauseHead) -> Clause {
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for lit in body {
        match lit {
            Literal::Pos(a) if so_names.contains(a.relation.as_str()) => {
                alphas.push(lit.clone())
            }
            Literal::Forall { .. } => alphas.push(lit.clone()),
            _ => betas.push(lit.clone()),
        }
    }
    Clause { alphas, betas, head }
}

/// Compiles a normal-form LFP sentence into a Datalog program with a fresh
/// 0-ary goal that holds exactly when the formula does.
///
/// One rule per DNF clause defines the matrix relation over all matrix
/// variables; the quantifier prefix is then peeled innermost-first, each
/// universal step contributing a universally quantified body atom; finally
/// the fixed-point relation closes over the peeled relation and the goal
/// projects it onto the repeated-element diagonal.
pub fn lfp_to_datalog(formula: &LfpFormula) -> (Program, Name) {
    let mut fresh = FreshNames::from_names(
        formula
            .vocabulary
            .names()
            .chain([formula.lfp_relation.as_str()]),
    );
    let z_vars: Vec<Term> = formula.lfp_vars.iter().map(|v| Term::var(v)).collect();
    let m = formula.prefix.len();

    // Peeled relation names: level k holds after quantifiers k+1..m are
    // applied; level m is the raw matrix relation.
    let mut level_names = Vec::with_capacity(m + 1);
    for k in 1..=m {
        level_names.push(fresh.fresh(&format!("P{k}")));
    }
    let matrix_name = fresh.fresh("P");
    level_names.push(matrix_name.clone());

    let mut rules = Vec::new();
    // Matrix rules: one per clause over args z-vars ++ prefix vars.
    let mut matrix_args = z_vars.clone();
    matrix_args.extend(formula.prefix.iter().map(|(_, v)| Term::var(v)));
    for clause in &formula.clauses {
        rules.push(Rule::new(
            Atom::new(&matrix_name, matrix_args.clone()),
            clause.clone(),
        ));
    }
    if formula.clauses.is_empty() {
        // Empty disjunction: keep the matrix relation intentional (and
        // forever empty) with a tautological rule.
        let atom = Atom::new(&matrix_name, matrix_args.clone());
        rules.push(Rule::new(atom.clone(), vec![Literal::Pos(atom)]));
    }
    // Peel quantifiers from the innermost outwards.
    for k in (1..=m).rev() {
        let (quant, var) = &formula.prefix[k - 1];
        let mut head_args = z_vars.clone();
        head_args.extend(formula.prefix[..k - 1].iter().map(|(_, v)| Term::var(v)));
        let mut body_args = head_args.clone();
        body_args.push(Term::var(var));
        let inner = Atom::new(&level_names[k], body_args);
        let body_lit = match quant {
            Quant::Exists => Literal::Pos(inner),
            Quant::Forall => Literal::Forall { vars: vec![var.clone()], atom: inner },
        };
        rules.push(Rule::new(
            Atom::new(&level_names[k - 1], head_args),
            vec![body_lit],
        ));
    }
    // Close the fixed-point relation over level 0 (the fully peeled matrix)
    // and project the goal onto the diagonal.
    rules.push(Rule::new(
        Atom::new(&formula.lfp_relation, z_vars.clone()),
        vec![Literal::Pos(Atom::new(&level_names[0], z_vars.clone()))],
    ));
    let goal = fresh.fresh("Q");
    let u = Term::var(&formula.exist_var);
    rules.push(Rule::new(
        Atom::new(&goal, vec![]),
        vec![Literal::Pos(Atom::new(
            &formula.lfp_relation,
            vec![u; formula.lfp_vars.len()],
        ))],
    ));
    (Program::infer(rules), goal)
}

/// Reads a validated program off as a simultaneous fixed-point system: each
/// intentional relation is defined by the disjunction, over its rules, of
/// the existentially closed rule bodies.
pub fn datalog_to_sim_lfp(program: &Program, goal: &str, goal_args: Vec<Term>) -> SimLfpSystem {
    let intentional = program.intentional();
    let mut definitions = Vec::new();
    for name in &intentional {
        let mut args: Option<Vec<Name>> = None;
        let mut disjuncts = Vec::new();
        for rule in &program.rules {
            if rule.head.relation != *name {
                continue;
            }
            let head_vars: Vec<Name> = rule
                .head
                .args
                .iter()
                .map(|t| t.as_var().expect("normal head").to_string())
                .collect();
            let canonical = args.get_or_insert_with(|| head_vars.clone()).clone();
            // Rules for the same head may use different head variable names;
            // rename this rule's variables to the canonical head variables.
            let mut body = rule.body.clone();
            if head_vars != canonical {
                body = body
                    .iter()
                    .map(|lit| rename_literal(lit, &head_vars, &canonical))
                    .collect();
            }
            let exists: Vec<Name> = {
                let mut renamed_rule = Rule::new(
                    Atom::new(name, canonical.iter().map(|v| Term::var(v)).collect()),
                    body.clone(),
                );
                renamed_rule.head.args = canonical.iter().map(|v| Term::var(v)).collect();
                renamed_rule
                    .free_variables()
                    .into_iter()
                    .filter(|v| !canonical.contains(v))
                    .collect()
            };
            disjuncts.push(SimLfpDisjunct { exists, literals: body });
        }
        definitions.push(SimLfpDef {
            relation: name.clone(),
            args: args.unwrap_or_default(),
            disjuncts,
        });
    }
    SimLfpSystem {
        vocabulary: program.vocabulary.clone(),
        definitions,
        goal: (goal.to_string(), goal_args),
    }
}

/// Renames free occurrences of `from[i]` to `to[i]`. Bound variables of a
/// universal atom shadow the renaming.
fn rename_literal(lit: &Literal, from: &[Name], to: &[Name]) -> Literal {
    let rename_term = |t: &Term, shadowed: &[Name]| -> Term {
        match t {
            Term::Var(v) => {
                if shadowed.iter().any(|s| s == v) {
                    t.clone()
                } else if let Some(i) = from.iter().position(|f| f == v) {
                    Term::Var(to[i].clone())
                } else {
                    t.clone()
                }
            }
            Term::Const(_) => t.clone(),
        }
    };
    match lit {
        Literal::Pos(a) => Literal::Pos(Atom {
            relation: a.relation.clone(),
            args: a.args.iter().map(|t| rename_term(t, &[])).collect(),
        }),
        Literal::Neg(a) => Literal::Neg(Atom {
            relation: a.relation.clone(),
            args: a.args.iter().map(|t| rename_term(t, &[])).collect(),
        }),
        Literal::Eq(s, t) => Literal::Eq(rename_term(s, &[]), rename_term(t, &[])),
        Literal::Neq(s, t) => Literal::Neq(rename_term(s, &[]), rename_term(t, &[])),
        Literal::Forall { vars, atom } => Literal::Forall {
            vars: vars.clone(),
            atom: Atom {
                relation: atom.relation.clone(),
                args: atom.args.iter().map(|t| rename_term(t, vars)).collect(),
            },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{eval_datalog_r, eval_horn_brute_force, DEFAULT_SO_BUDGET};
    use crate::parse::{parse_horn, parse_lfp, parse_program, parse_structure};

    #[test]
    fn horn_without_bottom_gets_never_firing_goal() {
        let s = parse_horn("exists R/1 forall x ( S(x) -> R(x) )").unwrap();
        let (program, goal) = horn_to_datalog(&s);
        assert!(program.validate().is_ok());
        let goal_rules: Vec<_> = program
            .rules
            .iter()
            .filter(|r| r.head.relation == goal)
            .collect();
        assert_eq!(goal_rules.len(), 1);
        assert!(matches!(&goal_rules[0].body[..], [Literal::Neq(a, b)] if a == b));
        // tautological rule for R is present
        assert!(program
            .rules
            .iter()
            .any(|r| r.head.relation == "R" && r.body == vec![Literal::Pos(r.head.clone())]));
    }

    #[test]
    fn horn_to_datalog_flips_the_verdict() {
        let s = parse_horn("exists R/1 forall x ( S(x) -> R(x) ; R(x) -> false )").unwrap();
        let input = parse_structure("structure { size 1 rel S/1 { (0) } }").unwrap();
        assert!(!eval_horn_brute_force(&s, &input, DEFAULT_SO_BUDGET).unwrap());
        let (program, goal) = horn_to_datalog(&s);
        let eval = eval_datalog_r(&program, &input).unwrap();
        assert!(eval.goal_holds(&goal).unwrap());
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

    #[test]
    fn agap_to_horn_shape() {
        let program = parse_program(AGAP).unwrap();
        let sentence = datalog_to_horn(&program, "P").unwrap();
        assert!(sentence.validate().is_ok());
        let so: Vec<&str> = sentence.so_vars.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(so, vec!["Palt", "Q"]);
        assert_eq!(sentence.clauses.len(), 6);
        let bottoms = sentence
            .clauses
            .iter()
            .filter(|c| matches!(c.head, ClauseHead::Bottom))
            .count();
        assert_eq!(bottoms, 1);
    }

    #[test]
    fn trivially_false_goal_program_to_horn() {
        // P() :- x = x. The goal holds on every structure, so the sentence
        // must fail everywhere.
        let program = parse_program("P :- x = x.").unwrap();
        let sentence = datalog_to_horn(&program, "P").unwrap();
        for n in 1..=3 {
            let st = crate::structure::Structure::new(n);
            assert!(!eval_horn_brute_force(&sentence, &st, DEFAULT_SO_BUDGET).unwrap());
        }
    }

    #[test]
    fn datalog_to_horn_requires_zero_ary_goal() {
        let program = parse_program("T(x) :- S(x).").unwrap();
        assert!(matches!(
            datalog_to_horn(&program, "T"),
            Err(TranslateError::GoalNotZeroAry(_))
        ));
    }

    #[test]
    fn zero_ary_body_occurrences_are_eliminated() {
        let program = parse_program("B :- S(x). P :- B, T(y).").unwrap();
        let sentence = datalog_to_horn(&program, "P").unwrap();
        assert!(sentence.validate().is_ok());
        // On a structure where S and T are nonempty, P fires, so the
        // sentence is false; where S is empty, P cannot fire.
        let with_s =
            parse_structure("structure { size 2 rel S/1 { (0) } rel T/1 { (1) } }").unwrap();
        assert!(!eval_horn_brute_force(&sentence, &with_s, DEFAULT_SO_BUDGET).unwrap());
        let without_s =
            parse_structure("structure { size 2 rel S/1 { } rel T/1 { (1) } }").unwrap();
        assert!(eval_horn_brute_force(&sentence, &without_s, DEFAULT_SO_BUDGET).unwrap());
    }

    const TC_FORMULA: &str =
        "exists u [lfp z1 z2, Z: exists w ( z1 = z2 | E(z1,w) & Z(w,z2) )] (u,u)";

    #[test]
    fn lfp_to_datalog_shape() {
        let f = parse_lfp(TC_FORMULA).unwrap();
        let (program, goal) = lfp_to_datalog(&f);
        assert!(program.validate().is_ok());
        // two clause rules + one peel rule + Z closure + goal
        assert_eq!(program.rules.len(), 5);
        assert!(program.intentional().contains(goal.as_str()));
        assert!(program.intentional().contains("Z"));
    }

    #[test]
    fn lfp_forall_prefix_becomes_universal_atom() {
        let f = parse_lfp(
            "exists u [lfp z, Z: forall y exists w ( E(y,w) & Z(z) | z = y )] (u)",
        )
        .unwrap();
        let (program, _) = lfp_to_datalog(&f);
        let universal_count = program
            .rules
            .iter()
            .flat_map(|r| &r.body)
            .filter(|l| matches!(l, Literal::Forall { .. }))
            .count();
        assert_eq!(universal_count, 1);
        assert!(program.validate().is_ok());
    }

    #[test]
    fn lfp_empty_matrix_never_holds() {
        let f = parse_lfp("rel E/2. exists u [lfp z1 z2, Z: ( )] (u,u)").unwrap();
        let (program, goal) = lfp_to_datalog(&f);
        let st = parse_structure("structure { size 2 rel E/2 { (0,1) } }").unwrap();
        let eval = eval_datalog_r(&program, &st).unwrap();
        assert!(!eval.goal_holds(&goal).unwrap());
    }

    #[test]
    fn sim_lfp_single_and_double_rule_shapes() {
        let single = parse_program("T(x) :- S(x).").unwrap();
        let system = datalog_to_sim_lfp(&single, "T", vec![]);
        assert_eq!(system.definitions.len(), 1);
        assert_eq!(system.definitions[0].disjuncts.len(), 1);

        let double = parse_program("T(x,y) :- E(x,y). T(x,y) :- E(x,z), T(z,y).").unwrap();
        let system = datalog_to_sim_lfp(&double, "T", vec![]);
        let def = &system.definitions[0];
        assert_eq!(def.disjuncts.len(), 2);
        assert!(def.disjuncts[0].exists.is_empty());
        assert_eq!(def.disjuncts[1].exists, vec!["z"]);
    }

    #[test]
    fn sim_lfp_canonicalizes_head_variables() {
        let program = parse_program("T(x,y) :- E(x,y). T(a,b) :- E(a,c), T(c,b).").unwrap();
        let system = datalog_to_sim_lfp(&program, "T", vec![]);
        let def = &system.definitions[0];
        assert_eq!(def.args, vec!["x", "y"]);
        // The second disjunct's body must now mention x and y, not a and b.
        let rendered = format!("{:?}", def.disjuncts[1]);
        assert!(!rendered.contains("\"a\"") && !rendered.contains("\"b\""));
    }
}
