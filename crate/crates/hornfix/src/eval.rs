//! Executable semantics for the three logics.
//!
//! `eval_datalog_r` computes the simultaneous least fixed point of a program
//! by naive round-based iteration: every stage re-derives every intentional
//! relation from the previous stage, so the trace matches the stage relations
//! of the declarative semantics exactly. `eval_horn_brute_force` checks a
//! second-order Horn sentence by exhausting all relation assignments and is
//! the independent oracle for the translators. `eval_lfp` and `eval_sim_lfp`
//! iterate fixed-point formulas by direct first-order evaluation.

use std::collections::BTreeMap;

use crate::ast::{
    ClauseHead, HornSentence, LfpFormula, Literal, Name, Program, Quant, SimLfpSystem, Term,
};
use crate::structure::{all_tuples, Relation, Structure, Tuple};

/// Default cap on the number of relation assignments the brute-force
/// second-order checker may enumerate. Overridable per call and, in the CLI,
/// via `HORNFIX_BUDGET`.
pub const DEFAULT_SO_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("structure does not interpret the extensional vocabulary: {0}")]
    VocabularyMismatch(String),
    #[error("brute-force check needs {required} assignments, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("goal relation `{0}` is not 0-ary")]
    GoalNotZeroAry(Name),
    #[error("goal relation `{0}` is not defined")]
    UnknownGoal(Name),
}

// ---------------------------------------------------------------------------
// Compiled rule bodies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum Slot {
    Var(usize),
    Const(u32),
}

#[derive(Debug, Clone, Copy)]
enum BoundSlot {
    Free(usize),
    Bound(usize),
    Const(u32),
}

#[derive(Debug, Clone)]
enum CompiledLit {
    Pos { rel: Name, intentional: bool, args: Vec<Slot> },
    Neg { rel: Name, args: Vec<Slot> },
    Eq(Slot, Slot),
    Neq(Slot, Slot),
    Forall { rel: Name, bound: usize, args: Vec<BoundSlot> },
}

#[derive(Debug, Clone)]
struct CompiledRule {
    head_rel: Name,
    head_arity: usize,
    var_count: usize,
    lits: Vec<CompiledLit>,
}

fn resolve_const(st: &Structure, name: &str) -> Result<u32, EvalError> {
    st.constant(name)
        .ok_or_else(|| EvalError::VocabularyMismatch(format!("constant `{name}` uninterpreted")))
}

fn term_slot(
    term: &Term,
    vars: &BTreeMap<&str, usize>,
    input: &Structure,
) -> Result<Slot, EvalError> {
    match term {
        Term::Var(v) => vars
            .get(v.as_str())
            .map(|&i| Slot::Var(i))
            .ok_or_else(|| EvalError::Invalid(format!("unbound variable `{v}`"))),
        Term::Const(c) => Ok(Slot::Const(resolve_const(input, c)?)),
    }
}

fn compile_rule(
    rule: &crate::ast::Rule,
    intentional: &std::collections::BTreeSet<Name>,
    input: &Structure,
) -> Result<CompiledRule, EvalError> {
    let free = rule.free_variables();
    let vars: BTreeMap<&str, usize> = free.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut lits = Vec::with_capacity(rule.body.len());
    for lit in &rule.body {
        let compiled = match lit {
            Literal::Pos(a) => CompiledLit::Pos {
                rel: a.relation.clone(),
                intentional: intentional.contains(&a.relation),
                args: a
                    .args
                    .iter()
                    .map(|t| term_slot(t, &vars, input))
                    .collect::<Result<_, _>>()?,
            },
            Literal::Neg(a) => CompiledLit::Neg {
                rel: a.relation.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| term_slot(t, &vars, input))
                    .collect::<Result<_, _>>()?,
            },
            Literal::Eq(s, t) => {
                CompiledLit::Eq(term_slot(s, &vars, input)?, term_slot(t, &vars, input)?)
            }
            Literal::Neq(s, t) => {
                CompiledLit::Neq(term_slot(s, &vars, input)?, term_slot(t, &vars, input)?)
            }
            Literal::Forall { vars: bound, atom } => {
                let args = atom
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => {
                            if let Some(b) = bound.iter().position(|w| w == v) {
                                Ok(BoundSlot::Bound(b))
                            } else if let Some(&i) = vars.get(v.as_str()) {
                                Ok(BoundSlot::Free(i))
                            } else {
                                Err(EvalError::Invalid(format!("unbound variable `{v}`")))
                            }
                        }
                        Term::Const(c) => Ok(BoundSlot::Const(resolve_const(input, c)?)),
                    })
                    .collect::<Result<_, _>>()?;
                CompiledLit::Forall { rel: atom.relation.clone(), bound: bound.len(), args }
            }
        };
        lits.push(compiled);
    }
    Ok(CompiledRule {
        head_rel: rule.head.relation.clone(),
        head_arity: rule.head.args.len(),
        var_count: free.len(),
        lits,
    })
}

struct Db<'a> {
    input: &'a Structure,
    current: &'a BTreeMap<Name, Relation>,
}

impl Db<'_> {
    fn contains(&self, rel: &str, intentional: bool, tuple: &[u32]) -> bool {
        if intentional {
            self.current.get(rel).is_some_and(|r| r.contains(tuple))
        } else {
            self.input.relation(rel).is_some_and(|r| r.contains(tuple))
        }
    }
}

fn body_satisfied(lits: &[CompiledLit], env: &[u32], db: &Db, n: u32, scratch: &mut Vec<u32>) -> bool {
    let value = |slot: &Slot, env: &[u32]| match slot {
        Slot::Var(i) => env[*i],
        Slot::Const(c) => *c,
    };
    for lit in lits {
        let ok = match lit {
            CompiledLit::Pos { rel, intentional, args } => {
                scratch.clear();
                scratch.extend(args.iter().map(|s| value(s, env)));
                db.contains(rel, *intentional, scratch)
            }
            CompiledLit::Neg { rel, args } => {
                scratch.clear();
                scratch.extend(args.iter().map(|s| value(s, env)));
                !db.contains(rel, false, scratch)
            }
            CompiledLit::Eq(a, b) => value(a, env) == value(b, env),
            CompiledLit::Neq(a, b) => value(a, env) != value(b, env),
            CompiledLit::Forall { rel, bound, args } => {
                // Intentional by validation; the bound cube ranges over the
                // whole domain.
                all_tuples(n, *bound).all(|b| {
                    scratch.clear();
                    scratch.extend(args.iter().map(|s| match s {
                        BoundSlot::Free(i) => env[*i],
                        BoundSlot::Bound(j) => b[*j],
                        BoundSlot::Const(c) => *c,
                    }));
                    db.contains(rel, true, scratch)
                })
            }
        };
        if !ok {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Datalog fixed-point evaluation
// ---------------------------------------------------------------------------

/// The stage relations of one evaluation, `P_(0)` through the fixed point.
/// The final stage is recorded twice (the round that confirmed stability),
/// so the last two entries are always equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixpointTrace {
    pub stages: Vec<BTreeMap<Name, Relation>>,
}

impl FixpointTrace {
    /// Number of distinct stages `P_(0)..P_(inf)`.
    pub fn stage_count(&self) -> usize {
        self.stages.len().saturating_sub(1)
    }

    /// Line-per-stage text dump, stable across runs.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, stage) in self.stages.iter().enumerate() {
            out.push_str(&format!("stage {i}:"));
            for (name, rel) in stage {
                out.push_str(&format!(" {name}={rel}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Result of evaluating a program on a structure: the input expanded by the
/// intentional fixed points, plus the full stage trace.
#[derive(Debug, Clone)]
pub struct DatalogEval {
    pub expanded: Structure,
    pub trace: FixpointTrace,
}

impl DatalogEval {
    pub fn goal_relation(&self, goal: &str) -> Result<&Relation, EvalError> {
        self.fixpoint()
            .get(goal)
            .ok_or_else(|| EvalError::UnknownGoal(goal.to_string()))
    }

    /// Verdict of a 0-ary goal: whether its fixed point is `{()}`.
    pub fn goal_holds(&self, goal: &str) -> Result<bool, EvalError> {
        let rel = self.goal_relation(goal)?;
        if rel.arity() != 0 {
            return Err(EvalError::GoalNotZeroAry(goal.to_string()));
        }
        Ok(!rel.is_empty())
    }

    pub fn fixpoint(&self) -> &BTreeMap<Name, Relation> {
        self.trace.stages.last().expect("trace has at least the empty stage")
    }
}

fn check_program_input(program: &Program, input: &Structure) -> Result<(), EvalError> {
    let intentional = program.intentional();
    for (name, arity) in program.vocabulary.relations() {
        if intentional.contains(name) {
            if input.relation(name).is_some() {
                return Err(EvalError::VocabularyMismatch(format!(
                    "intentional relation `{name}` must not be interpreted by the input"
                )));
            }
            continue;
        }
        match input.relation(name) {
            None => {
                return Err(EvalError::VocabularyMismatch(format!(
                    "extensional relation `{name}` uninterpreted"
                )))
            }
            Some(r) if r.arity() != arity => {
                return Err(EvalError::VocabularyMismatch(format!(
                    "extensional relation `{name}` has arity {} in the input, expected {arity}",
                    r.arity()
                )))
            }
            Some(_) => {}
        }
    }
    for name in program.vocabulary.constants() {
        resolve_const(input, name)?;
    }
    Ok(())
}

/// Bottom-up simultaneous least-fixed-point evaluation.
pub fn eval_datalog_r(program: &Program, input: &Structure) -> Result<DatalogEval, EvalError> {
    program
        .validate()
        .map_err(|errs| EvalError::Invalid(errs[0].to_string()))?;
    check_program_input(program, input)?;
    let intentional = program.intentional();
    let n = input.size();

    let compiled: Vec<CompiledRule> = program
        .rules
        .iter()
        .map(|r| compile_rule(r, &intentional, input))
        .collect::<Result<_, _>>()?;

    let empty: BTreeMap<Name, Relation> = intentional
        .iter()
        .map(|name| {
            let arity = program.vocabulary.relation_arity(name).expect("intentional in vocab");
            (name.clone(), Relation::empty(arity))
        })
        .collect();

    let mut stages = vec![empty.clone()];
    let mut current = empty;
    let mut scratch = Vec::new();
    loop {
        let mut next: BTreeMap<Name, Relation> = current
            .iter()
            .map(|(name, rel)| (name.clone(), Relation::empty(rel.arity())))
            .collect();
        {
            let db = Db { input, current: &current };
            for rule in &compiled {
                let target_arity = rule.head_arity;
                for env in all_tuples(n, rule.var_count) {
                    if body_satisfied(&rule.lits, &env, &db, n, &mut scratch) {
                        let tuple: Tuple = env[..target_arity].to_vec();
                        next.get_mut(&rule.head_rel)
                            .expect("head is intentional")
                            .insert(tuple)
                            .expect("head arity matches");
                    }
                }
            }
        }
        let stable = next == current;
        stages.push(next.clone());
        current = next;
        if stable {
            break;
        }
    }

    let mut expanded = input.clone();
    for (name, rel) in &current {
        expanded
            .set_relation(name, rel.clone())
            .map_err(|e| EvalError::Invalid(e.to_string()))?;
    }
    Ok(DatalogEval { expanded, trace: FixpointTrace { stages } })
}

// ---------------------------------------------------------------------------
// Brute-force second-order Horn model checking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum HornLit {
    So { var: usize, args: Vec<Slot> },
    SoForall { var: usize, bound: usize, args: Vec<BoundSlot> },
    Ext { rel: Name, positive: bool, args: Vec<Slot> },
    Eq(Slot, Slot, bool),
}

#[derive(Debug, Clone)]
struct HornClause {
    body: Vec<HornLit>,
    head: Option<(usize, Vec<Slot>)>, // None = FALSE
}

/// Exhaustively checks whether some assignment of relations to the
/// existentially quantified relation variables satisfies the universal
/// closure of all clauses. This is the reference oracle; its cost is the
/// product of `2^(n^arity)` over the relation variables and must stay within
/// `budget`.
pub fn eval_horn_brute_force(
    sentence: &HornSentence,
    input: &Structure,
    budget: u64,
) -> Result<bool, EvalError> {
    sentence
        .validate()
        .map_err(|errs| EvalError::Invalid(errs[0].to_string()))?;
    for (name, arity) in sentence.vocabulary.relations() {
        match input.relation(name) {
            None => {
                return Err(EvalError::VocabularyMismatch(format!(
                    "relation `{name}` uninterpreted"
                )))
            }
            Some(r) if r.arity() != arity => {
                return Err(EvalError::VocabularyMismatch(format!(
                    "relation `{name}` has arity {} in the input, expected {arity}",
                    r.arity()
                )))
            }
            Some(_) => {}
        }
    }
    for name in sentence.vocabulary.constants() {
        resolve_const(input, name)?;
    }

    let n = input.size();
    // Tuple-space sizes per relation variable.
    let mut space: Vec<usize> = Vec::new();
    let mut required: u128 = 1;
    for (_, arity) in &sentence.so_vars {
        let count = (n as u128).pow(*arity as u32);
        if count > 63 {
            return Err(EvalError::BudgetExceeded { required: u128::MAX, budget });
        }
        space.push(count as usize);
        required = required.saturating_mul(1u128 << count);
    }
    if required > budget as u128 {
        return Err(EvalError::BudgetExceeded { required, budget });
    }

    // Compile clauses against the shared universal prefix.
    let fo_index: BTreeMap<&str, usize> = sentence
        .fo_vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let so_index: BTreeMap<&str, usize> = sentence
        .so_vars
        .iter()
        .enumerate()
        .map(|(i, (v, _))| (v.as_str(), i))
        .collect();
    let slot = |t: &Term| -> Result<Slot, EvalError> {
        match t {
            Term::Var(v) => fo_index
                .get(v.as_str())
                .map(|&i| Slot::Var(i))
                .ok_or_else(|| EvalError::Invalid(format!("unquantified variable `{v}`"))),
            Term::Const(c) => Ok(Slot::Const(resolve_const(input, c)?)),
        }
    };
    let mut clauses = Vec::with_capacity(sentence.clauses.len());
    for clause in &sentence.clauses {
        let mut body = Vec::new();
        for lit in clause.alphas.iter().chain(&clause.betas) {
            let compiled = match lit {
                Literal::Pos(a) => match so_index.get(a.relation.as_str()) {
                    Some(&var) => HornLit::So {
                        var,
                        args: a.args.iter().map(&slot).collect::<Result<_, _>>()?,
                    },
                    None => HornLit::Ext {
                        rel: a.relation.clone(),
                        positive: true,
                        args: a.args.iter().map(&slot).collect::<Result<_, _>>()?,
                    },
                },
                Literal::Neg(a) => HornLit::Ext {
                    rel: a.relation.clone(),
                    positive: false,
                    args: a.args.iter().map(&slot).collect::<Result<_, _>>()?,
                },
                Literal::Eq(s, t) => HornLit::Eq(slot(s)?, slot(t)?, true),
                Literal::Neq(s, t) => HornLit::Eq(slot(s)?, slot(t)?, false),
                Literal::Forall { vars, atom } => {
                    let var = *so_index
                        .get(atom.relation.as_str())
                        .ok_or_else(|| EvalError::Invalid("universal premise over a non-relation-variable".into()))?;
                    let args = atom
                        .args
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => {
                                if let Some(b) = vars.iter().position(|w| w == v) {
                                    Ok(BoundSlot::Bound(b))
                                } else if let Some(&i) = fo_index.get(v.as_str()) {
                                    Ok(BoundSlot::Free(i))
                                } else {
                                    Err(EvalError::Invalid(format!("unquantified variable `{v}`")))
                                }
                            }
                            Term::Const(c) => Ok(BoundSlot::Const(resolve_const(input, c)?)),
                        })
                        .collect::<Result<_, _>>()?;
                    HornLit::SoForall { var, bound: vars.len(), args }
                }
            };
            body.push(compiled);
        }
        let head = match &clause.head {
            ClauseHead::Bottom => None,
            ClauseHead::Atom(a) => {
                let var = *so_index
                    .get(a.relation.as_str())
                    .ok_or_else(|| EvalError::Invalid("clause head must be a relation variable".into()))?;
                Some((var, a.args.iter().map(&slot).collect::<Result<_, _>>()?))
            }
        };
        clauses.push(HornClause { body, head });
    }

    // Tuple -> bit index, base-n positional encoding.
    let tuple_bit = |args: &[u32], arity: usize| -> usize {
        let mut idx = 0usize;
        for &a in &args[..arity] {
            idx = idx * n as usize + a as usize;
        }
        idx
    };
    let arities: Vec<usize> = sentence.so_vars.iter().map(|(_, a)| *a).collect();
    let so_member = |masks: &[u64], var: usize, args: &[u32]| -> bool {
        masks[var] >> tuple_bit(args, arities[var]) & 1 == 1
    };

    let value = |slot: &Slot, env: &[u32]| match slot {
        Slot::Var(i) => env[*i],
        Slot::Const(c) => *c,
    };
    let mut args_buf: Vec<u32> = Vec::new();
    let mut masks = vec![0u64; sentence.so_vars.len()];
    loop {
        // Check the universal closure of all clauses under `masks`.
        let mut satisfied = true;
        'outer: for env in all_tuples(n, sentence.fo_vars.len()) {
            for clause in &clauses {
                let mut body_true = true;
                for lit in &clause.body {
                    let ok = match lit {
                        HornLit::So { var, args } => {
                            args_buf.clear();
                            args_buf.extend(args.iter().map(|s| value(s, &env)));
                            so_member(&masks, *var, &args_buf)
                        }
                        HornLit::SoForall { var, bound, args } => {
                            all_tuples(n, *bound).all(|b| {
                                args_buf.clear();
                                args_buf.extend(args.iter().map(|s| match s {
                                    BoundSlot::Free(i) => env[*i],
                                    BoundSlot::Bound(j) => b[*j],
                                    BoundSlot::Const(c) => *c,
                                }));
                                so_member(&masks, *var, &args_buf)
                            })
                        }
                        HornLit::Ext { rel, positive, args } => {
                            args_buf.clear();
                            args_buf.extend(args.iter().map(|s| value(s, &env)));
                            let member =
                                input.relation(rel).is_some_and(|r| r.contains(&args_buf));
                            member == *positive
                        }
                        HornLit::Eq(a, b, positive) => {
                            (value(a, &env) == value(b, &env)) == *positive
                        }
                    };
                    if !ok {
                        body_true = false;
                        break;
                    }
                }
                if !body_true {
                    continue;
                }
                let head_true = match &clause.head {
                    None => false,
                    Some((var, args)) => {
                        args_buf.clear();
                        args_buf.extend(args.iter().map(|s| value(s, &env)));
                        so_member(&masks, *var, &args_buf)
                    }
                };
                if !head_true {
                    satisfied = false;
                    break 'outer;
                }
            }
        }
        if satisfied {
            return Ok(true);
        }
        // Next assignment (odometer over the per-variable masks).
        let mut i = 0;
        loop {
            if i == masks.len() {
                return Ok(false);
            }
            masks[i] = masks[i].wrapping_add(1);
            if masks[i] < (1u64 << space[i]) || space[i] == 64 && masks[i] != 0 {
                break;
            }
            masks[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// LFP evaluation
// ---------------------------------------------------------------------------

/// Evaluates a normal-form LFP sentence: iterates the fixed-point relation
/// from empty and accepts when some element, repeated to the relation's
/// arity, lands in the fixed point.
pub fn eval_lfp(formula: &LfpFormula, input: &Structure) -> Result<bool, EvalError> {
    formula
        .validate()
        .map_err(|errs| EvalError::Invalid(errs[0].to_string()))?;
    for (name, arity) in formula.vocabulary.relations() {
        match input.relation(name) {
            None => {
                return Err(EvalError::VocabularyMismatch(format!(
                    "relation `{name}` uninterpreted"
                )))
            }
            Some(r) if r.arity() != arity => {
                return Err(EvalError::VocabularyMismatch(format!(
                    "relation `{name}` has arity {} in the input, expected {arity}",
                    r.arity()
                )))
            }
            Some(_) => {}
        }
    }
    for name in formula.vocabulary.constants() {
        resolve_const(input, name)?;
    }

    let n = input.size();
    let r = formula.lfp_vars.len();
    // Variable layout: the fixed-point variables first, then the prefix.
    let mut vars: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, v) in formula.lfp_vars.iter().enumerate() {
        vars.insert(v.as_str(), i);
    }
    for (i, (_, v)) in formula.prefix.iter().enumerate() {
        vars.insert(v.as_str(), r + i);
    }
    #[derive(Clone)]
    enum MatrixLit {
        Z { args: Vec<Slot> },
        Ext { rel: Name, positive: bool, args: Vec<Slot> },
        Eq(Slot, Slot, bool),
    }
    let slot = |t: &Term| -> Result<Slot, EvalError> {
        match t {
            Term::Var(v) => vars
                .get(v.as_str())
                .map(|&i| Slot::Var(i))
                .ok_or_else(|| EvalError::Invalid(format!("free variable `{v}` in the matrix"))),
            Term::Const(c) => Ok(Slot::Const(resolve_const(input, c)?)),
        }
    };
    let mut clauses: Vec<Vec<MatrixLit>> = Vec::new();
    for clause in &formula.clauses {
        let mut out = Vec::new();
        for lit in clause {
            out.push(match lit {
                Literal::Pos(a) if a.relation == formula.lfp_relation => MatrixLit::Z {
                    args: a.args.iter().map(&slot).collect::<Result<_, _>>()?,
                },
                Literal::Pos(a) => MatrixLit::Ext {
                    rel: a.relation.clone(),
                    positive: true,
                    args: a.args.iter().map(&slot).collect::<Result<_, _>>()?,
                },
                Literal::Neg(a) => MatrixLit::Ext {
                    rel: a.relation.clone(),
                    positive: false,
                    args: a.args.iter().map(&slot).collect::<Result<_, _>>()?,
                },
                Literal::Eq(s, t) => MatrixLit::Eq(slot(s)?, slot(t)?, true),
                Literal::Neq(s, t) => MatrixLit::Eq(slot(s)?, slot(t)?, false),
                Literal::Forall { .. } => {
                    return Err(EvalError::Invalid("matrix must be first-order".into()))
                }
            });
        }
        clauses.push(out);
    }

    fn matrix_holds(
        clauses: &[Vec<MatrixLit>],
        env: &[u32],
        z: &Relation,
        input: &Structure,
    ) -> bool {
        let value = |slot: &Slot| match slot {
            Slot::Var(i) => env[*i],
            Slot::Const(c) => *c,
        };
        clauses.iter().any(|clause| {
            clause.iter().all(|lit| match lit {
                MatrixLit::Z { args } => {
                    let tuple: Vec<u32> = args.iter().map(value).collect();
                    z.contains(&tuple)
                }
                MatrixLit::Ext { rel, positive, args } => {
                    let tuple: Vec<u32> = args.iter().map(value).collect();
                    input.relation(rel).is_some_and(|r| r.contains(&tuple)) == *positive
                }
                MatrixLit::Eq(a, b, positive) => (value(a) == value(b)) == *positive,
            })
        })
    }

    fn prefix_holds(
        prefix: &[(Quant, Name)],
        depth: usize,
        clauses: &[Vec<MatrixLit>],
        env: &mut Vec<u32>,
        z: &Relation,
        input: &Structure,
        n: u32,
    ) -> bool {
        if depth == prefix.len() {
            return matrix_holds(clauses, env, z, input);
        }
        let quant = prefix[depth].0;
        for d in 0..n {
            env.push(d);
            let holds = prefix_holds(prefix, depth + 1, clauses, env, z, input, n);
            env.pop();
            match quant {
                Quant::Exists if holds => return true,
                Quant::Forall if !holds => return false,
                _ => {}
            }
        }
        matches!(quant, Quant::Forall)
    }

    let mut z = Relation::empty(r);
    loop {
        let mut next = Relation::empty(r);
        for candidate in all_tuples(n, r) {
            let mut env = candidate.clone();
            if prefix_holds(&formula.prefix, 0, &clauses, &mut env, &z, input, n) {
                next.insert(candidate).expect("arity matches");
            }
        }
        if next == z {
            break;
        }
        z = next;
    }
    // Accept iff some u makes the repeated tuple a member.
    Ok((0..n).any(|u| z.contains(&vec![u; r])))
}

// ---------------------------------------------------------------------------
// Simultaneous LFP evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SimLfpEval {
    /// Joint fixed point of all defined relations.
    pub relations: BTreeMap<Name, Relation>,
    /// The goal relation's value (defined or extensional).
    pub goal_relation: Relation,
    /// Verdict when the goal is applied to ground terms.
    pub goal_holds: Option<bool>,
}

/// Iterates all definitions jointly from empty relations to the simultaneous
/// least fixed point.
pub fn eval_sim_lfp(system: &SimLfpSystem, input: &Structure) -> Result<SimLfpEval, EvalError> {
    let n = input.size();
    let defined: BTreeMap<Name, usize> = system
        .definitions
        .iter()
        .map(|d| (d.relation.clone(), d.args.len()))
        .collect();
    for (name, arity) in system.vocabulary.relations() {
        if defined.contains_key(name) {
            continue;
        }
        match input.relation(name) {
            None => {
                return Err(EvalError::VocabularyMismatch(format!(
                    "relation `{name}` uninterpreted"
                )))
            }
            Some(r) if r.arity() != arity => {
                return Err(EvalError::VocabularyMismatch(format!(
                    "relation `{name}` has arity {} in the input, expected {arity}",
                    r.arity()
                )))
            }
            Some(_) => {}
        }
    }

    // Compile each disjunct like a rule body with env = args ++ exists.
    struct CompiledDisjunct {
        var_count: usize,
        lits: Vec<CompiledLit>,
    }
    struct CompiledDef {
        relation: Name,
        arity: usize,
        disjuncts: Vec<CompiledDisjunct>,
    }
    let defined_names: std::collections::BTreeSet<Name> = defined.keys().cloned().collect();
    let mut compiled = Vec::new();
    for def in &system.definitions {
        let mut disjuncts = Vec::new();
        for disjunct in &def.disjuncts {
            let mut names: Vec<&str> = def.args.iter().map(|s| s.as_str()).collect();
            names.extend(disjunct.exists.iter().map(|s| s.as_str()));
            let vars: BTreeMap<&str, usize> =
                names.iter().enumerate().map(|(i, v)| (*v, i)).collect();
            let mut lits = Vec::new();
            for lit in &disjunct.literals {
                let compiled_lit = match lit {
                    Literal::Pos(a) => CompiledLit::Pos {
                        rel: a.relation.clone(),
                        intentional: defined_names.contains(&a.relation),
                        args: a
                            .args
                            .iter()
                            .map(|t| term_slot(t, &vars, input))
                            .collect::<Result<_, _>>()?,
                    },
                    Literal::Neg(a) => {
                        if defined_names.contains(&a.relation) {
                            return Err(EvalError::Invalid(format!(
                                "defined relation `{}` occurs negatively",
                                a.relation
                            )));
                        }
                        CompiledLit::Neg {
                            rel: a.relation.clone(),
                            args: a
                                .args
                                .iter()
                                .map(|t| term_slot(t, &vars, input))
                                .collect::<Result<_, _>>()?,
                        }
                    }
                    Literal::Eq(s, t) => {
                        CompiledLit::Eq(term_slot(s, &vars, input)?, term_slot(t, &vars, input)?)
                    }
                    Literal::Neq(s, t) => {
                        CompiledLit::Neq(term_slot(s, &vars, input)?, term_slot(t, &vars, input)?)
                    }
                    Literal::Forall { vars: bound, atom } => {
                        if !defined_names.contains(&atom.relation) {
                            return Err(EvalError::Invalid(format!(
                                "universal subformula over undefined relation `{}`",
                                atom.relation
                            )));
                        }
                        let args = atom
                            .args
                            .iter()
                            .map(|t| match t {
                                Term::Var(v) => {
                                    if let Some(b) = bound.iter().position(|w| w == v) {
                                        Ok(BoundSlot::Bound(b))
                                    } else if let Some(&i) = vars.get(v.as_str()) {
                                        Ok(BoundSlot::Free(i))
                                    } else {
                                        Err(EvalError::Invalid(format!("unbound variable `{v}`")))
                                    }
                                }
                                Term::Const(c) => Ok(BoundSlot::Const(resolve_const(input, c)?)),
                            })
                            .collect::<Result<_, _>>()?;
                        CompiledLit::Forall { rel: atom.relation.clone(), bound: bound.len(), args }
                    }
                };
                lits.push(compiled_lit);
            }
            disjuncts.push(CompiledDisjunct { var_count: names.len(), lits });
        }
        compiled.push(CompiledDef {
            relation: def.relation.clone(),
            arity: def.args.len(),
            disjuncts,
        });
    }

    let mut current: BTreeMap<Name, Relation> = compiled
        .iter()
        .map(|d| (d.relation.clone(), Relation::empty(d.arity)))
        .collect();
    let mut scratch = Vec::new();
    loop {
        let mut next: BTreeMap<Name, Relation> = compiled
            .iter()
            .map(|d| (d.relation.clone(), Relation::empty(d.arity)))
            .collect();
        {
            let db = Db { input, current: &current };
            for def in &compiled {
                for disjunct in &def.disjuncts {
                    for env in all_tuples(n, disjunct.var_count) {
                        if body_satisfied(&disjunct.lits, &env, &db, n, &mut scratch) {
                            next.get_mut(&def.relation)
                                .expect("defined")
                                .insert(env[..def.arity].to_vec())
                                .expect("arity matches");
                        }
                    }
                }
            }
        }
        if next == current {
            break;
        }
        current = next;
    }

    let (goal_name, goal_args) = &system.goal;
    let goal_relation = match current.get(goal_name) {
        Some(r) => r.clone(),
        None => input
            .relation(goal_name)
            .cloned()
            .ok_or_else(|| EvalError::UnknownGoal(goal_name.clone()))?,
    };
    let mut ground = Vec::new();
    let mut all_ground = true;
    for t in goal_args {
        match t {
            Term::Const(c) => ground.push(resolve_const(input, c)?),
            Term::Var(_) => {
                all_ground = false;
                break;
            }
        }
    }
    let goal_holds = if all_ground && ground.len() == goal_relation.arity() {
        Some(goal_relation.contains(&ground))
    } else {
        None
    };
    Ok(SimLfpEval { relations: current, goal_relation, goal_holds })
}
