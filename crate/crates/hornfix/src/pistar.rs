//! Compiles a program over tree structures into one over their numeric
//! structures of characteristic relations, and the harness that verifies
//! the compiled program computes exactly the characteristic relations of
//! the original fixed points.
//!
//! Every variable `x` over tree nodes becomes a depth variable `$i$x`, and
//! every unordered variable pair gains a least-common-ancestor depth
//! variable `$i$x$y` (base names sorted, so the pair variable for `{x,y}`
//! and `{y,x}` coincide). Pairs involving `root` collapse to the constant
//! `0`. An atom's arguments expand to the triangular characteristic layout,
//! equalities and edges turn into depth equations over `SUCC`, negated
//! literals hit the precomputed characteristic relations, and each
//! universally quantified atom unfolds into a four-rule block guarded by
//! the characteristic relation of the full relation, which pins the guard
//! variables to genuine characteristic tuples.

use std::collections::BTreeSet;

use crate::ast::{
    normalize, Atom, FreshNames, Literal, Name, Program, Rule, Term, Vocabulary,
};
use crate::eval::{eval_datalog_r, EvalError};
use crate::structure::Structure;
use crate::trees::{
    char_relation_of, encode, ful_star_name, is_invariant_by_char, neg_star_name, sigma_structure,
    star_name, triangular, TreeError, EDGE_REL, NEG_EDGE_REL, NEQ_REL, ROOT_CONST, SUCC_REL,
    ZERO_CONST,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PistarError {
    #[error("unsupported literal: {0}")]
    UnsupportedLiteral(String),
    #[error("invalid program: {0}")]
    Invalid(String),
    #[error("name `{0}` collides with a generated symbol")]
    NameClash(Name),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The width of the guard relation: the maximum of the per-rule free
/// variable counts and the arities of all relation symbols.
pub fn compute_m(program: &Program) -> usize {
    let rule_max = program
        .rules
        .iter()
        .map(|r| r.free_variable_count())
        .max()
        .unwrap_or(0);
    let arity_max = program
        .vocabulary
        .relations()
        .map(|(_, a)| a)
        .max()
        .unwrap_or(0);
    rule_max.max(arity_max)
}

/// Depth and ancestor-depth variables for the tree variables of one
/// program. `root` and pairs involving it map to the constant `0`.
#[derive(Debug, Default)]
pub struct PairVarTable;

impl PairVarTable {
    /// The depth term `i_x` for a single tree term.
    pub fn single(term: &Term) -> Result<Term, PistarError> {
        match term {
            Term::Var(v) => Ok(Term::Var(format!("$i${v}"))),
            Term::Const(c) if c == ROOT_CONST => Ok(Term::Const(ZERO_CONST.to_string())),
            Term::Const(c) => Err(PistarError::UnsupportedLiteral(format!(
                "constant `{c}` (only `root` is available on tree structures)"
            ))),
        }
    }

    /// The ancestor-depth term `i_{a^b}`; the two base names are sorted so
    /// the pair variable does not depend on argument order.
    pub fn pair(a: &Term, b: &Term) -> Result<Term, PistarError> {
        match (a, b) {
            (Term::Const(c), _) | (_, Term::Const(c)) if c == ROOT_CONST => {
                Ok(Term::Const(ZERO_CONST.to_string()))
            }
            (Term::Var(x), Term::Var(y)) if x == y => Self::single(a),
            (Term::Var(x), Term::Var(y)) => {
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                Ok(Term::Var(format!("$i${lo}${hi}")))
            }
            _ => Err(PistarError::UnsupportedLiteral(format!(
                "pair of `{a}` and `{b}`"
            ))),
        }
    }
}

/// The triangular expansion `(x_1..x_r)* = i_{x_1} i_{x_1^x_2} ... i_{x_r}`.
pub fn star_args(terms: &[Term]) -> Result<Vec<Term>, PistarError> {
    let mut out = Vec::with_capacity(triangular(terms.len()));
    for i in 0..terms.len() {
        out.push(PairVarTable::single(&terms[i])?);
        for j in i + 1..terms.len() {
            out.push(PairVarTable::pair(&terms[i], &terms[j])?);
        }
    }
    Ok(out)
}

/// Pads a non-empty term sequence to width `m` by repeating its last
/// element.
fn pad_to(terms: &[Term], m: usize) -> Vec<Term> {
    let mut out = terms.to_vec();
    let last = out.last().expect("padding needs at least one term").clone();
    while out.len() < m {
        out.push(last.clone());
    }
    out
}

/// The four-rule block a universal atom unfolds into, shared between the
/// compiler and the direct verification of its defining property. Returns
/// the rules and the atom that replaces the occurrence.
fn universal_block(
    atom: &Atom,
    bound: &[Name],
    starred_rel: &str,
    m: usize,
    q_name: &str,
    q1_name: &str,
    q2_name: &str,
) -> Result<(Vec<Rule>, Atom), PistarError> {
    let free_terms: Vec<Term> = atom
        .args
        .iter()
        .filter(|t| !matches!(t, Term::Var(v) if bound.contains(v)))
        .cloned()
        .collect();
    let all_star = star_args(&atom.args)?;
    let free_star = star_args(&free_terms)?;

    let q_atom = Atom::new(q_name, all_star.clone());
    let q1_atom = Atom::new(q1_name, free_star.clone());
    let q2_atom = Atom::new(q2_name, free_star.clone());

    // Guard over the atom's full argument list, padded to width m.
    let all_guard = Atom::new(&ful_star_name(m), star_args(&pad_to(&atom.args, m))?);
    let mut rules = vec![
        Rule::new(q_atom.clone(), vec![Literal::Neg(all_guard)]),
        Rule::new(
            q_atom.clone(),
            vec![Literal::Pos(Atom::new(starred_rel, all_star.clone()))],
        ),
    ];

    // Universally quantify every depth variable that mentions a bound
    // position (pairs with `root` are pinned to 0 and are not variables).
    let bound_positions: Vec<usize> = atom
        .args
        .iter()
        .enumerate()
        .filter(|(_, t)| matches!(t, Term::Var(v) if bound.contains(v)))
        .map(|(p, _)| p)
        .collect();
    let mut uvars: Vec<Name> = Vec::new();
    let r = atom.args.len();
    let mut idx = 0;
    for i in 0..r {
        for j in i..r {
            let involves_bound = bound_positions.contains(&i) || bound_positions.contains(&j);
            if involves_bound {
                if let Term::Var(v) = &all_star[idx] {
                    if !uvars.contains(v) {
                        uvars.push(v.clone());
                    }
                }
            }
            idx += 1;
        }
    }
    rules.push(Rule::new(
        q1_atom.clone(),
        vec![Literal::Forall { vars: uvars, atom: q_atom }],
    ));

    let mut q2_body = vec![Literal::Pos(q1_atom)];
    if !free_terms.is_empty() {
        let free_guard = Atom::new(&ful_star_name(m), star_args(&pad_to(&free_terms, m))?);
        q2_body.push(Literal::Pos(free_guard));
    }
    rules.push(Rule::new(q2_atom.clone(), q2_body));
    Ok((rules, q2_atom))
}

/// Compiles a validated program over the tree vocabulary (`root`, `E`, and
/// saturated relations) into an equivalent program over the corresponding
/// numeric structure of characteristic relations.
pub fn compile(program: &Program) -> Result<Program, PistarError> {
    program
        .validate()
        .map_err(|errs| PistarError::Invalid(errs[0].to_string()))?;
    for c in program.vocabulary.constants() {
        if c != ROOT_CONST {
            return Err(PistarError::UnsupportedLiteral(format!(
                "constant `{c}` (only `root` is available on tree structures)"
            )));
        }
    }
    let intentional = program.intentional();
    if intentional.contains(EDGE_REL) {
        return Err(PistarError::Invalid(format!(
            "`{EDGE_REL}` must be extensional on tree structures"
        )));
    }
    let m = compute_m(program);
    let reserved: BTreeSet<Name> = [
        SUCC_REL.to_string(),
        NEQ_REL.to_string(),
        NEG_EDGE_REL.to_string(),
        ful_star_name(m),
        ZERO_CONST.to_string(),
    ]
    .into();
    let mut fresh = FreshNames::from_names(program.vocabulary.names());
    let mut out_rules: Vec<Rule> = Vec::new();
    let mut occurrence = 0usize;

    for rule in &program.rules {
        let head = Atom::new(&star_name(&rule.head.relation), star_args(&rule.head.args)?);
        if reserved.contains(&star_name(&rule.head.relation)) {
            return Err(PistarError::NameClash(star_name(&rule.head.relation)));
        }
        let mut body: Vec<Literal> = Vec::new();
        for lit in &rule.body {
            match lit {
                Literal::Eq(s, t) => {
                    // d(x) = d(x^y) and d(x^y) = d(y)
                    body.push(Literal::Eq(
                        PairVarTable::single(s)?,
                        PairVarTable::pair(s, t)?,
                    ));
                    body.push(Literal::Eq(
                        PairVarTable::pair(s, t)?,
                        PairVarTable::single(t)?,
                    ));
                }
                Literal::Neq(s, t) => {
                    body.push(Literal::Pos(Atom::new(
                        NEQ_REL,
                        vec![
                            PairVarTable::single(s)?,
                            PairVarTable::pair(s, t)?,
                            PairVarTable::single(t)?,
                        ],
                    )));
                }
                Literal::Pos(a) if a.relation == EDGE_REL => {
                    // d(x) = d(x^y) and d(x^y) + 1 = d(y)
                    let (s, t) = (&a.args[0], &a.args[1]);
                    body.push(Literal::Eq(
                        PairVarTable::single(s)?,
                        PairVarTable::pair(s, t)?,
                    ));
                    body.push(Literal::Pos(Atom::new(
                        SUCC_REL,
                        vec![PairVarTable::pair(s, t)?, PairVarTable::single(t)?],
                    )));
                }
                Literal::Neg(a) if a.relation == EDGE_REL => {
                    let (s, t) = (&a.args[0], &a.args[1]);
                    body.push(Literal::Pos(Atom::new(
                        NEG_EDGE_REL,
                        vec![
                            PairVarTable::single(s)?,
                            PairVarTable::pair(s, t)?,
                            PairVarTable::single(t)?,
                        ],
                    )));
                }
                Literal::Pos(a) => {
                    body.push(Literal::Pos(Atom::new(
                        &star_name(&a.relation),
                        star_args(&a.args)?,
                    )));
                }
                Literal::Neg(a) => {
                    // Validation guarantees a is extensional here; the
                    // complement's characteristic relation is asserted
                    // positively.
                    body.push(Literal::Pos(Atom::new(
                        &neg_star_name(&a.relation),
                        star_args(&a.args)?,
                    )));
                }
                Literal::Forall { vars, atom } => {
                    let q = fresh.fresh(&format!("Q{occurrence}"));
                    let q1 = fresh.fresh(&format!("Q1_{occurrence}"));
                    let q2 = fresh.fresh(&format!("Q2_{occurrence}"));
                    occurrence += 1;
                    let (block, replacement) = universal_block(
                        atom,
                        vars,
                        &star_name(&atom.relation),
                        m,
                        &q,
                        &q1,
                        &q2,
                    )?;
                    out_rules.extend(block);
                    body.push(Literal::Pos(replacement));
                }
            }
        }
        // Guard the rule over its free variables, padded to width m.
        let free = rule.free_variables();
        if !free.is_empty() {
            let terms: Vec<Term> = free.iter().map(|v| Term::var(v)).collect();
            body.push(Literal::Pos(Atom::new(
                &ful_star_name(m),
                star_args(&pad_to(&terms, m))?,
            )));
        }
        out_rules.push(Rule::new(head, body));
    }

    let normalized: Vec<Rule> = out_rules.iter().map(normalize).collect();
    let mut compiled = Program::infer(normalized);
    // Carry the full numeric vocabulary even when parts of it are unused.
    let mut vocab = compiled.vocabulary.clone();
    add_sigma_vocabulary(&mut vocab, program, m)?;
    compiled.vocabulary = vocab;
    compiled
        .validate()
        .map_err(|errs| PistarError::Invalid(format!("compiled program invalid: {}", errs[0])))?;
    Ok(compiled)
}

fn add_sigma_vocabulary(
    vocab: &mut Vocabulary,
    program: &Program,
    m: usize,
) -> Result<(), PistarError> {
    let clash = |e: crate::ast::VocabularyError| PistarError::Invalid(e.to_string());
    vocab.add_constant(ZERO_CONST).map_err(clash)?;
    vocab.add_relation(SUCC_REL, 2).map_err(clash)?;
    vocab.add_relation(NEQ_REL, 3).map_err(clash)?;
    vocab.add_relation(NEG_EDGE_REL, 3).map_err(clash)?;
    vocab.add_relation(&ful_star_name(m), triangular(m)).map_err(clash)?;
    let intentional = program.intentional();
    for (name, arity) in program.vocabulary.relations() {
        if name == EDGE_REL {
            continue;
        }
        vocab
            .add_relation(&star_name(name), triangular(arity))
            .map_err(clash)?;
        if !intentional.contains(name) {
            vocab
                .add_relation(&neg_star_name(name), triangular(arity))
                .map_err(clash)?;
        }
    }
    Ok(())
}

/// Per-symbol outcome of the fixed-point correspondence check.
#[derive(Debug, Clone)]
pub struct Prop6Report {
    /// `(symbol, fixed point is invariant, characteristic relation matches)`.
    pub per_symbol: Vec<(Name, bool, bool)>,
    /// `(tree verdict, numeric verdict)` for the 0-ary goal.
    pub goal: Option<(bool, bool)>,
}

impl Prop6Report {
    pub fn all_pass(&self) -> bool {
        self.per_symbol.iter().all(|(_, inv, eq)| *inv && *eq)
            && self.goal.map_or(true, |(a, b)| a == b)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, inv, eq) in &self.per_symbol {
            out.push_str(&format!(
                "{name}: invariant={} characteristic-match={}\n",
                if *inv { "pass" } else { "FAIL" },
                if *eq { "pass" } else { "FAIL" },
            ));
        }
        if let Some((tree, numeric)) = self.goal {
            out.push_str(&format!(
                "goal: tree={tree} numeric={numeric} {}\n",
                if tree == numeric { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Runs a program on the tree encoding of a structure and its compilation
/// on the corresponding numeric structure, then compares: every intentional
/// fixed point must be invariant and its characteristic relation must equal
/// the starred symbol's fixed point. With a 0-ary goal, the two verdicts
/// must agree.
pub fn verify_prop6(
    a: &Structure,
    program: &Program,
    goal: Option<&str>,
) -> Result<Prop6Report, PistarError> {
    let t = encode(a);
    let tree_input = t.as_structure();
    let tree_eval = eval_datalog_r(program, &tree_input)?;

    let m = compute_m(program);
    let sigma = sigma_structure(&t, m)?;
    let compiled = compile(program)?;
    let numeric_eval = eval_datalog_r(&compiled, &sigma)?;

    let mut per_symbol = Vec::new();
    for name in program.intentional() {
        let fixed = tree_eval.goal_relation(&name)?;
        let invariant = is_invariant_by_char(fixed, &t.tree);
        let matches = if invariant {
            let lhs = char_relation_of(fixed, &t.tree)?;
            let rhs = numeric_eval.goal_relation(&star_name(&name))?;
            lhs == *rhs
        } else {
            false
        };
        per_symbol.push((name, invariant, matches));
    }
    let goal = match goal {
        Some(g) => Some((
            tree_eval.goal_holds(g)?,
            numeric_eval.goal_holds(&star_name(g))?,
        )),
        None => None,
    };
    Ok(Prop6Report { per_symbol, goal })
}
