//! Abstract syntax for the three logics.
//!
//! A [`Program`] is a set of revised Datalog rules: rule bodies may contain
//! positive atoms, negated extensional atoms, (in)equalities, and universally
//! quantified atoms over intentional relations. [`HornSentence`] is an
//! existential second-order Horn sentence whose clause premises may likewise
//! carry universal quantifiers over the relation variables. [`LfpFormula`] is
//! a least-fixed-point formula in normal form: one application of the LFP
//! operator to a prefix-quantified DNF matrix, closed by a single existential.
//!
//! All values are immutable after construction and safe to share between
//! concurrent evaluations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Name = String;

/// Named relations with arities plus a set of constant names.
///
/// Names are unique across relations and constants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    relations: BTreeMap<Name, usize>,
    constants: BTreeSet<Name>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabularyError {
    #[error("name `{0}` is already a constant")]
    NameIsConstant(Name),
    #[error("name `{0}` is already a relation")]
    NameIsRelation(Name),
    #[error("relation `{0}` declared with arity {1} but already has arity {2}")]
    ArityClash(Name, usize, usize),
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<(), VocabularyError> {
        if self.constants.contains(name) {
            return Err(VocabularyError::NameIsConstant(name.to_string()));
        }
        match self.relations.get(name) {
            Some(&a) if a != arity => {
                Err(VocabularyError::ArityClash(name.to_string(), arity, a))
            }
            _ => {
                self.relations.insert(name.to_string(), arity);
                Ok(())
            }
        }
    }

    pub fn add_constant(&mut self, name: &str) -> Result<(), VocabularyError> {
        if self.relations.contains_key(name) {
            return Err(VocabularyError::NameIsRelation(name.to_string()));
        }
        self.constants.insert(name.to_string());
        Ok(())
    }

    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(n, &a)| (n.as_str(), a))
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.constants.iter().map(|n| n.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.relations
            .keys()
            .chain(self.constants.iter())
            .map(|n| n.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Name),
    Const(Name),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n) | Term::Const(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(relation: &str, args: Vec<Term>) -> Self {
        Atom { relation: relation.to_string(), args }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return f.write_str(&self.relation);
        }
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// A body literal.
///
/// `Forall` is the revised part: a universally quantified atom whose bound
/// variables may sit at any argument position. They are listed in `vars` and
/// must be distinct and actually occur among the atom's arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Eq(Term, Term),
    Neq(Term, Term),
    Forall { vars: Vec<Name>, atom: Atom },
}

impl Literal {
    /// Variables occurring free in this literal (bound variables of a
    /// `Forall` excluded), in argument order with duplicates kept.
    pub fn free_var_occurrences(&self) -> Vec<&str> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => {
                a.args.iter().filter_map(Term::as_var).collect()
            }
            Literal::Eq(s, t) | Literal::Neq(s, t) => {
                [s, t].into_iter().filter_map(Term::as_var).collect()
            }
            Literal::Forall { vars, atom } => atom
                .args
                .iter()
                .filter_map(Term::as_var)
                .filter(|v| !vars.iter().any(|b| b == v))
                .collect(),
        }
    }

    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) | Literal::Forall { atom: a, .. } => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "!{a}"),
            Literal::Eq(s, t) => write!(f, "{s} = {t}"),
            Literal::Neq(s, t) => write!(f, "{s} != {t}"),
            Literal::Forall { vars, atom } => {
                f.write_str("forall ")?;
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    f.write_str(v)?;
                }
                write!(f, ": {atom}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        Rule { head, body }
    }

    /// True when all head arguments are pairwise distinct variables.
    pub fn has_normal_head(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.head.args.iter().all(|t| match t {
            Term::Var(v) => seen.insert(v.as_str()),
            Term::Const(_) => false,
        })
    }

    /// Free variables of the whole rule in first-occurrence order, head
    /// arguments first. Universally bound body variables are excluded.
    pub fn free_variables(&self) -> Vec<Name> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut push = |v: &str| {
            if seen.insert(v.to_string()) {
                out.push(v.to_string());
            }
        };
        for t in &self.head.args {
            if let Some(v) = t.as_var() {
                push(v);
            }
        }
        for lit in &self.body {
            for v in lit.free_var_occurrences() {
                push(v);
            }
        }
        out
    }

    pub fn free_variable_count(&self) -> usize {
        self.free_variables().len()
    }

    /// Every name (variable or bound variable) occurring in the rule.
    fn all_names(&self) -> BTreeSet<Name> {
        fn push_term(names: &mut BTreeSet<Name>, t: &Term) {
            match t {
                Term::Var(v) | Term::Const(v) => {
                    names.insert(v.clone());
                }
            }
        }
        let mut names = BTreeSet::new();
        for t in &self.head.args {
            push_term(&mut names, t);
        }
        for lit in &self.body {
            match lit {
                Literal::Pos(a) | Literal::Neg(a) => {
                    a.args.iter().for_each(|t| push_term(&mut names, t))
                }
                Literal::Eq(s, t) | Literal::Neq(s, t) => {
                    push_term(&mut names, s);
                    push_term(&mut names, t);
                }
                Literal::Forall { vars, atom } => {
                    for v in vars {
                        names.insert(v.clone());
                    }
                    atom.args.iter().for_each(|t| push_term(&mut names, t));
                }
            }
        }
        names
    }
}

/// Rewrites a rule so its head arguments become fresh pairwise-distinct
/// variables, appending equality literals for every replaced argument. The
/// defined relation is unchanged under the fixed-point semantics. Rules that
/// already have a normal head are returned as-is, which makes the operation
/// idempotent.
pub fn normalize(rule: &Rule) -> Rule {
    if rule.has_normal_head() {
        return rule.clone();
    }
    let mut fresh = FreshNames::new(rule.all_names());
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut head_args = Vec::with_capacity(rule.head.args.len());
    let mut extra = Vec::new();
    for t in &rule.head.args {
        match t {
            Term::Var(v) if seen.insert(v) => head_args.push(t.clone()),
            _ => {
                let v = fresh.fresh("h");
                extra.push(Literal::Eq(Term::Var(v.clone()), t.clone()));
                head_args.push(Term::Var(v));
            }
        }
    }
    let mut body = rule.body.clone();
    body.extend(extra);
    Rule::new(Atom { relation: rule.head.relation.clone(), args: head_args }, body)
}

/// Generates `$`-prefixed names that avoid a set of taken names.
#[derive(Debug, Clone, Default)]
pub struct FreshNames {
    taken: BTreeSet<Name>,
}

impl FreshNames {
    pub fn new(taken: BTreeSet<Name>) -> Self {
        FreshNames { taken }
    }

    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        FreshNames { taken: names.into_iter().map(str::to_string).collect() }
    }

    pub fn reserve(&mut self, name: &str) {
        self.taken.insert(name.to_string());
    }

    pub fn fresh(&mut self, stem: &str) -> Name {
        let base = format!("${stem}");
        if self.taken.insert(base.clone()) {
            return base;
        }
        for i in 1.. {
            let cand = format!("${stem}{i}");
            if self.taken.insert(cand.clone()) {
                return cand;
            }
        }
        unreachable!()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub vocabulary: Vocabulary,
    pub rules: Vec<Rule>,
}

impl Program {
    /// Builds a program whose vocabulary is inferred from the rules: every
    /// relation symbol with the arity of its first occurrence, plus the given
    /// constants and any constants appearing in terms.
    pub fn infer(rules: Vec<Rule>) -> Self {
        let mut vocab = Vocabulary::new();
        let see_atom = |vocab: &mut Vocabulary, a: &Atom| {
            let _ = vocab.add_relation(&a.relation, a.args.len());
            for t in &a.args {
                if let Term::Const(c) = t {
                    let _ = vocab.add_constant(c);
                }
            }
        };
        let see_term = |vocab: &mut Vocabulary, t: &Term| {
            if let Term::Const(c) = t {
                let _ = vocab.add_constant(c);
            }
        };
        for rule in &rules {
            see_atom(&mut vocab, &rule.head);
            for lit in &rule.body {
                match lit {
                    Literal::Pos(a) | Literal::Neg(a) | Literal::Forall { atom: a, .. } => {
                        see_atom(&mut vocab, a)
                    }
                    Literal::Eq(s, t) | Literal::Neq(s, t) => {
                        see_term(&mut vocab, s);
                        see_term(&mut vocab, t);
                    }
                }
            }
        }
        Program { vocabulary: vocab, rules }
    }

    /// Relation symbols occurring in some rule head.
    pub fn intentional(&self) -> BTreeSet<Name> {
        self.rules.iter().map(|r| r.head.relation.clone()).collect()
    }

    /// The extensional part of the vocabulary: what an input structure has
    /// to interpret.
    pub fn extensional_vocab(&self) -> Vocabulary {
        let int = self.intentional();
        let mut vocab = Vocabulary::new();
        for (name, arity) in self.vocabulary.relations() {
            if !int.contains(name) {
                vocab.add_relation(name, arity).expect("subset of a vocabulary");
            }
        }
        for c in self.vocabulary.constants() {
            vocab.add_constant(c).expect("subset of a vocabulary");
        }
        vocab
    }

    /// Vocabulary relations that never occur in a head.
    pub fn extensional(&self) -> BTreeSet<Name> {
        let int = self.intentional();
        self.vocabulary
            .relations()
            .map(|(n, _)| n.to_string())
            .filter(|n| !int.contains(n))
            .collect()
    }

    pub fn validate(&self) -> Result<(), Vec<ProgramError>> {
        let mut errors = Vec::new();
        let intentional = self.intentional();
        for (idx, rule) in self.rules.iter().enumerate() {
            let check_atom = |errors: &mut Vec<ProgramError>, a: &Atom| {
                match self.vocabulary.relation_arity(&a.relation) {
                    None => errors.push(ProgramError::new(
                        Some(idx),
                        ProgramErrorKind::UnknownSymbol,
                        format!("relation `{}` is not in the vocabulary", a.relation),
                    )),
                    Some(arity) if arity != a.args.len() => errors.push(ProgramError::new(
                        Some(idx),
                        ProgramErrorKind::ArityMismatch,
                        format!(
                            "relation `{}` has arity {arity} but is applied to {} arguments",
                            a.relation,
                            a.args.len()
                        ),
                    )),
                    Some(_) => {}
                }
                for t in &a.args {
                    if let Term::Const(c) = t {
                        if !self.vocabulary.has_constant(c) {
                            errors.push(ProgramError::new(
                                Some(idx),
                                ProgramErrorKind::UnknownSymbol,
                                format!("constant `{c}` is not in the vocabulary"),
                            ));
                        }
                    }
                }
            };
            if !rule.has_normal_head() {
                errors.push(ProgramError::new(
                    Some(idx),
                    ProgramErrorKind::NonNormalHead,
                    format!(
                        "head `{}` must have pairwise distinct variable arguments \
                         (apply normalize first)",
                        rule.head
                    ),
                ));
            }
            check_atom(&mut errors, &rule.head);
            for lit in &rule.body {
                match lit {
                    Literal::Pos(a) => check_atom(&mut errors, a),
                    Literal::Neg(a) => {
                        check_atom(&mut errors, a);
                        if intentional.contains(&a.relation) {
                            errors.push(ProgramError::new(
                                Some(idx),
                                ProgramErrorKind::NegatedIntentional,
                                format!("intentional relation `{}` occurs negated", a.relation),
                            ));
                        }
                    }
                    Literal::Eq(s, t) | Literal::Neq(s, t) => {
                        for term in [s, t] {
                            if let Term::Const(c) = term {
                                if !self.vocabulary.has_constant(c) {
                                    errors.push(ProgramError::new(
                                        Some(idx),
                                        ProgramErrorKind::UnknownSymbol,
                                        format!("constant `{c}` is not in the vocabulary"),
                                    ));
                                }
                            }
                        }
                    }
                    Literal::Forall { vars, atom } => {
                        check_atom(&mut errors, atom);
                        if !intentional.contains(&atom.relation) {
                            errors.push(ProgramError::new(
                                Some(idx),
                                ProgramErrorKind::UniversalOverExtensional,
                                format!(
                                    "universal quantification over `{}`, which is not \
                                     intentional",
                                    atom.relation
                                ),
                            ));
                        }
                        let mut seen = BTreeSet::new();
                        for v in vars {
                            if !seen.insert(v.as_str()) {
                                errors.push(ProgramError::new(
                                    Some(idx),
                                    ProgramErrorKind::BadUniversal,
                                    format!("bound variable `{v}` listed twice"),
                                ));
                            }
                            let occurs = atom
                                .args
                                .iter()
                                .any(|t| t.as_var().is_some_and(|w| w == v));
                            if !occurs {
                                errors.push(ProgramError::new(
                                    Some(idx),
                                    ProgramErrorKind::BadUniversal,
                                    format!(
                                        "bound variable `{v}` does not occur in `{atom}`"
                                    ),
                                ));
                            }
                        }
                        if vars.is_empty() {
                            errors.push(ProgramError::new(
                                Some(idx),
                                ProgramErrorKind::BadUniversal,
                                "universal atom binds no variables".to_string(),
                            ));
                        }
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramErrorKind {
    NegatedIntentional,
    UniversalOverExtensional,
    ArityMismatch,
    UnknownSymbol,
    NonNormalHead,
    BadUniversal,
}

impl fmt::Display for ProgramErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProgramErrorKind::NegatedIntentional => "NegatedIntentional",
            ProgramErrorKind::UniversalOverExtensional => "UniversalOverExtensional",
            ProgramErrorKind::ArityMismatch => "ArityMismatch",
            ProgramErrorKind::UnknownSymbol => "UnknownSymbol",
            ProgramErrorKind::NonNormalHead => "NonNormalHead",
            ProgramErrorKind::BadUniversal => "BadUniversal",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramError {
    pub rule: Option<usize>,
    pub kind: ProgramErrorKind,
    pub message: String,
}

impl ProgramError {
    fn new(rule: Option<usize>, kind: ProgramErrorKind, message: String) -> Self {
        ProgramError { rule, kind, message }
    }
}

impl fmt::Display for ProgramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Some(i) => write!(f, "rule {}: {}: {}", i + 1, self.kind, self.message),
            None => write!(f, "{}: {}", self.kind, self.message),
        }
    }
}

impl std::error::Error for ProgramError {}

/// Head of a Horn clause: an atom over a relation variable, or FALSE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseHead {
    Atom(Atom),
    Bottom,
}

/// One implication of a Horn sentence. `alphas` are the premises over the
/// quantified relation variables (plain or universally quantified atoms),
/// `betas` the extensional premises (possibly negated atoms, (in)equalities).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub alphas: Vec<Literal>,
    pub betas: Vec<Literal>,
    pub head: ClauseHead,
}

/// An existential second-order Horn sentence with revised clause premises.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornSentence {
    /// Existentially quantified relation variables with their arities.
    pub so_vars: Vec<(Name, usize)>,
    /// Universally quantified first-order variables shared by all clauses.
    pub fo_vars: Vec<Name>,
    pub clauses: Vec<Clause>,
    /// Extensional relations and constants.
    pub vocabulary: Vocabulary,
}

impl HornSentence {
    pub fn so_arity(&self, name: &str) -> Option<usize> {
        self.so_vars.iter().find(|(n, _)| n == name).map(|&(_, a)| a)
    }

    pub fn validate(&self) -> Result<(), Vec<ProgramError>> {
        let mut errors = Vec::new();
        let so: BTreeMap<&str, usize> =
            self.so_vars.iter().map(|(n, a)| (n.as_str(), *a)).collect();
        let check_arity =
            |errors: &mut Vec<ProgramError>, clause: usize, a: &Atom, expect: Option<usize>| {
                match expect {
                    None => errors.push(ProgramError::new(
                        Some(clause),
                        ProgramErrorKind::UnknownSymbol,
                        format!("relation `{}` is neither quantified nor extensional", a.relation),
                    )),
                    Some(arity) if arity != a.args.len() => errors.push(ProgramError::new(
                        Some(clause),
                        ProgramErrorKind::ArityMismatch,
                        format!(
                            "relation `{}` has arity {arity} but is applied to {} arguments",
                            a.relation,
                            a.args.len()
                        ),
                    )),
                    Some(_) => {}
                }
            };
        for (idx, clause) in self.clauses.iter().enumerate() {
            for alpha in &clause.alphas {
                let atom = match alpha {
                    Literal::Pos(a) | Literal::Forall { atom: a, .. } => a,
                    other => {
                        errors.push(ProgramError::new(
                            Some(idx),
                            ProgramErrorKind::BadUniversal,
                            format!("premise `{other}` is not an atom over a relation variable"),
                        ));
                        continue;
                    }
                };
                let expect = so.get(atom.relation.as_str()).copied();
                if expect.is_none() {
                    errors.push(ProgramError::new(
                        Some(idx),
                        ProgramErrorKind::UnknownSymbol,
                        format!("`{}` is not a quantified relation variable", atom.relation),
                    ));
                } else {
                    check_arity(&mut errors, idx, atom, expect);
                }
            }
            for beta in &clause.betas {
                match beta {
                    Literal::Pos(a) | Literal::Neg(a) => {
                        if so.contains_key(a.relation.as_str()) {
                            errors.push(ProgramError::new(
                                Some(idx),
                                ProgramErrorKind::NegatedIntentional,
                                format!(
                                    "relation variable `{}` may not occur as an extensional \
                                     premise",
                                    a.relation
                                ),
                            ));
                        } else {
                            check_arity(
                                &mut errors,
                                idx,
                                a,
                                self.vocabulary.relation_arity(&a.relation),
                            );
                        }
                    }
                    Literal::Eq(..) | Literal::Neq(..) => {}
                    Literal::Forall { .. } => errors.push(ProgramError::new(
                        Some(idx),
                        ProgramErrorKind::UniversalOverExtensional,
                        "universal premises are only allowed over relation variables".to_string(),
                    )),
                }
            }
            if let ClauseHead::Atom(a) = &clause.head {
                let expect = so.get(a.relation.as_str()).copied();
                if expect.is_none() {
                    errors.push(ProgramError::new(
                        Some(idx),
                        ProgramErrorKind::UnknownSymbol,
                        format!("clause head `{}` must be a relation variable atom", a.relation),
                    ));
                } else {
                    check_arity(&mut errors, idx, a, expect);
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quant {
    Forall,
    Exists,
}

/// A least-fixed-point formula in normal form:
/// one existential over a single LFP application to a prefix-quantified DNF
/// matrix in which the fixed-point relation occurs only positively, applied
/// to the existential variable repeated to the relation's arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfpFormula {
    pub exist_var: Name,
    pub lfp_vars: Vec<Name>,
    pub lfp_relation: Name,
    pub prefix: Vec<(Quant, Name)>,
    /// DNF matrix: disjunction of conjunctions of literals. `Forall`
    /// literals are not permitted here; the matrix is first-order.
    pub clauses: Vec<Vec<Literal>>,
    pub fixpoint_args: Vec<Term>,
    pub vocabulary: Vocabulary,
}

impl LfpFormula {
    pub fn validate(&self) -> Result<(), Vec<ProgramError>> {
        let mut errors = Vec::new();
        let mut bound: BTreeSet<&str> = self.lfp_vars.iter().map(|s| s.as_str()).collect();
        bound.extend(self.prefix.iter().map(|(_, v)| v.as_str()));
        for (idx, clause) in self.clauses.iter().enumerate() {
            for lit in clause {
                match lit {
                    Literal::Pos(a) => {
                        let expect = if a.relation == self.lfp_relation {
                            Some(self.lfp_vars.len())
                        } else {
                            self.vocabulary.relation_arity(&a.relation)
                        };
                        match expect {
                            None => errors.push(ProgramError::new(
                                Some(idx),
                                ProgramErrorKind::UnknownSymbol,
                                format!("relation `{}` is not in the vocabulary", a.relation),
                            )),
                            Some(arity) if arity != a.args.len() => {
                                errors.push(ProgramError::new(
                                    Some(idx),
                                    ProgramErrorKind::ArityMismatch,
                                    format!(
                                        "relation `{}` has arity {arity} but is applied to {} \
                                         arguments",
                                        a.relation,
                                        a.args.len()
                                    ),
                                ))
                            }
                            Some(_) => {}
                        }
                    }
                    Literal::Neg(a) => {
                        if a.relation == self.lfp_relation {
                            errors.push(ProgramError::new(
                                Some(idx),
                                ProgramErrorKind::NegatedIntentional,
                                format!(
                                    "fixed-point relation `{}` occurs negatively",
                                    a.relation
                                ),
                            ));
                        }
                    }
                    Literal::Eq(..) | Literal::Neq(..) => {}
                    Literal::Forall { .. } => errors.push(ProgramError::new(
                        Some(idx),
                        ProgramErrorKind::BadUniversal,
                        "the matrix must be first-order; use the quantifier prefix".to_string(),
                    )),
                }
            }
        }
        if self.fixpoint_args.len() != self.lfp_vars.len() {
            errors.push(ProgramError::new(
                None,
                ProgramErrorKind::ArityMismatch,
                format!(
                    "fixed point applied to {} terms but has arity {}",
                    self.fixpoint_args.len(),
                    self.lfp_vars.len()
                ),
            ));
        }
        for t in &self.fixpoint_args {
            if t.as_var() != Some(self.exist_var.as_str()) {
                errors.push(ProgramError::new(
                    None,
                    ProgramErrorKind::BadUniversal,
                    format!("fixed-point argument `{t}` must repeat `{}`", self.exist_var),
                ));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

/// One disjunct of a simultaneous fixed-point definition: an existentially
/// closed conjunction of literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimLfpDisjunct {
    pub exists: Vec<Name>,
    pub literals: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimLfpDef {
    pub relation: Name,
    pub args: Vec<Name>,
    pub disjuncts: Vec<SimLfpDisjunct>,
}

/// A simultaneous least-fixed-point system together with a goal relation
/// applied to ground terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimLfpSystem {
    pub vocabulary: Vocabulary,
    pub definitions: Vec<SimLfpDef>,
    pub goal: (Name, Vec<Term>),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    #[test]
    fn normalize_replaces_head_constant() {
        let rule = Rule::new(
            Atom::new("P", vec![c("c")]),
            vec![Literal::Pos(Atom::new("R", vec![c("c")]))],
        );
        let norm = normalize(&rule);
        assert_eq!(norm.head.args.len(), 1);
        let fresh = norm.head.args[0].as_var().expect("fresh head variable");
        assert_eq!(
            norm.body.last(),
            Some(&Literal::Eq(Term::var(fresh), c("c")))
        );
        assert!(norm.has_normal_head());
    }

    #[test]
    fn normalize_keeps_normal_rules() {
        let rule = Rule::new(
            Atom::new("P", vec![v("x"), v("y")]),
            vec![Literal::Pos(Atom::new("E", vec![v("x"), v("y")]))],
        );
        assert_eq!(normalize(&rule), rule);
    }

    #[test]
    fn normalize_splits_repeated_head_variable() {
        let rule = Rule::new(
            Atom::new("P", vec![v("x"), v("x")]),
            vec![Literal::Pos(Atom::new("E", vec![v("x"), v("x")]))],
        );
        let norm = normalize(&rule);
        assert!(norm.has_normal_head());
        assert_eq!(norm.head.args[0], v("x"));
        let fresh = norm.head.args[1].as_var().unwrap();
        assert!(norm.body.contains(&Literal::Eq(Term::var(fresh), v("x"))));
    }

    #[test]
    fn normalize_is_idempotent() {
        let rules = vec![
            Rule::new(Atom::new("P", vec![c("c"), v("x"), v("x")]), vec![]),
            Rule::new(Atom::new("P", vec![v("x"), v("y"), v("z")]), vec![]),
            Rule::new(
                Atom::new("Q", vec![v("x"), v("x")]),
                vec![Literal::Neq(v("x"), c("0"))],
            ),
        ];
        for rule in rules {
            let once = normalize(&rule);
            assert_eq!(normalize(&once), once);
        }
    }

    #[test]
    fn free_variable_count_excludes_bound() {
        // Palt(x,y) :- x = y.
        let r1 = Rule::new(
            Atom::new("Palt", vec![v("x"), v("y")]),
            vec![Literal::Eq(v("x"), v("y"))],
        );
        assert_eq!(r1.free_variable_count(), 2);
        // Palt(x,y) :- Puni(x), forall z: Q(x,z,y).
        let r2 = Rule::new(
            Atom::new("Palt", vec![v("x"), v("y")]),
            vec![
                Literal::Pos(Atom::new("Puni", vec![v("x")])),
                Literal::Forall {
                    vars: vec!["z".to_string()],
                    atom: Atom::new("Q", vec![v("x"), v("z"), v("y")]),
                },
            ],
        );
        assert_eq!(r2.free_variable_count(), 2);
        // Q(x,z,y) :- !E(x,z), y = y.
        let r3 = Rule::new(
            Atom::new("Q", vec![v("x"), v("z"), v("y")]),
            vec![
                Literal::Neg(Atom::new("E", vec![v("x"), v("z")])),
                Literal::Eq(v("y"), v("y")),
            ],
        );
        assert_eq!(r3.free_variable_count(), 3);
    }

    #[test]
    fn validate_rejects_negated_intentional() {
        let program = Program::infer(vec![Rule::new(
            Atom::new("P", vec![v("x")]),
            vec![Literal::Neg(Atom::new("P", vec![v("x")]))],
        )]);
        let errs = program.validate().unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.kind == ProgramErrorKind::NegatedIntentional));
    }

    #[test]
    fn validate_rejects_universal_over_extensional() {
        let program = Program::infer(vec![Rule::new(
            Atom::new("P", vec![v("x")]),
            vec![Literal::Forall {
                vars: vec!["y".to_string()],
                atom: Atom::new("E", vec![v("y"), v("x")]),
            }],
        )]);
        let errs = program.validate().unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.kind == ProgramErrorKind::UniversalOverExtensional));
    }

    #[test]
    fn intentional_extensional_partition() {
        let program = Program::infer(vec![
            Rule::new(
                Atom::new("T", vec![v("x"), v("y")]),
                vec![Literal::Pos(Atom::new("E", vec![v("x"), v("y")]))],
            ),
            Rule::new(
                Atom::new("T", vec![v("x"), v("y")]),
                vec![
                    Literal::Pos(Atom::new("E", vec![v("x"), v("z")])),
                    Literal::Pos(Atom::new("T", vec![v("z"), v("y")])),
                ],
            ),
        ]);
        let int = program.intentional();
        let ext = program.extensional();
        assert!(int.contains("T") && ext.contains("E"));
        assert!(int.intersection(&ext).next().is_none());
        assert!(program.validate().is_ok());
    }

    #[test]
    fn fresh_names_avoid_collisions() {
        let mut fresh = FreshNames::from_names(["$h", "$h1"]);
        assert_eq!(fresh.fresh("h"), "$h2");
        assert_eq!(fresh.fresh("h"), "$h3");
    }

    #[test]
    fn vocabulary_rejects_cross_kind_clash() {
        let mut vocab = Vocabulary::new();
        vocab.add_relation("E", 2).unwrap();
        assert!(vocab.add_constant("E").is_err());
        vocab.add_constant("s").unwrap();
        assert!(vocab.add_relation("s", 1).is_err());
        assert!(matches!(
            vocab.add_relation("E", 3),
            Err(VocabularyError::ArityClash(..))
        ));
    }
}
