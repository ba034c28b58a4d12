//! Abstract syntax for predicates, expressions and generalized substitutions.
//!
//! The types here are produced by the parser and then *resolved* by the
//! typechecker: after resolution every identifier is classified as a state
//! variable or an enumerated-set element, and every named set carries its
//! element list inline, so that downstream consumers (pretty-printer,
//! predicate transformers, evaluator) never need a symbol table.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

/// A set expression: the right-hand side of memberships (`x : S`),
/// nondeterministic choices (`x :: S`) and quantifier domains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetExpr {
    /// The builtin boolean domain with elements `FALSE`, `TRUE`.
    Bool,
    /// A named enumerated set. `elements` is empty right after parsing and
    /// filled in by resolution, so printed output keeps the set name while
    /// evaluation can enumerate without a symbol table.
    Named { name: String, elements: Vec<String> },
    /// An explicit element list `{a, b, c}` (a subset of some enumerated set).
    Literal(Vec<String>),
    /// A bounded integer interval `lo..hi` (empty when `lo > hi`).
    Interval(i64, i64),
}

impl SetExpr {
    /// Elements of this set when they are statically known.
    /// `Named` sets are known only after resolution.
    pub fn known_elements(&self) -> Option<Vec<Value>> {
        match self {
            SetExpr::Bool => Some(vec![
                Value::Elem("FALSE".to_string()),
                Value::Elem("TRUE".to_string()),
            ]),
            SetExpr::Named { elements, .. } => {
                if elements.is_empty() {
                    None
                } else {
                    Some(elements.iter().cloned().map(Value::Elem).collect())
                }
            }
            SetExpr::Literal(es) => Some(es.iter().cloned().map(Value::Elem).collect()),
            SetExpr::Interval(lo, hi) => Some((*lo..=*hi).map(Value::Int).collect()),
        }
    }
}

/// A runtime value: an element of an enumerated domain (including the
/// booleans `TRUE`/`FALSE`) or a bounded integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Elem(String),
    Int(i64),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Elem(e) => write!(f, "{e}"),
            Value::Int(i) => write!(f, "{i}"),
        }
    }
}

/// A scalar expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// Unresolved identifier, only present between parsing and resolution.
    Ident(String),
    /// A state variable (or a quantifier/ANY-bound variable in scope).
    Var(String),
    /// The primed (after-state) copy of a state variable, used in
    /// before-after predicates. Rendered as `x$1`.
    Primed(String),
    /// An element of an enumerated set, e.g. `TRUE` or `ISO_Ok`.
    EnumLit(String),
    /// A bounded integer literal.
    Int(i64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    /// `bool(P)`: the boolean value of a predicate.
    BoolOf(Box<Pred>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn lit(name: impl Into<String>) -> Expr {
        Expr::EnumLit(name.into())
    }
}

/// A first-order predicate over typed finite domains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    True,
    False,
    Not(Box<Pred>),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Implies(Box<Pred>, Box<Pred>),
    Iff(Box<Pred>, Box<Pred>),
    Eq(Expr, Expr),
    Neq(Expr, Expr),
    Member(Expr, SetExpr),
    Less(Expr, Expr),
    Leq(Expr, Expr),
    Greater(Expr, Expr),
    Geq(Expr, Expr),
    Forall {
        var: String,
        domain: SetExpr,
        body: Box<Pred>,
    },
    Exists {
        var: String,
        domain: SetExpr,
        body: Box<Pred>,
    },
}

impl Pred {
    /// N-ary conjunction with the obvious degenerate cases flattened.
    pub fn and(mut ps: Vec<Pred>) -> Pred {
        match ps.len() {
            0 => Pred::True,
            1 => ps.pop().unwrap(),
            _ => Pred::And(ps),
        }
    }

    /// N-ary disjunction with the obvious degenerate cases flattened.
    pub fn or(mut ps: Vec<Pred>) -> Pred {
        match ps.len() {
            0 => Pred::False,
            1 => ps.pop().unwrap(),
            _ => Pred::Or(ps),
        }
    }

    pub fn not(p: Pred) -> Pred {
        Pred::Not(Box::new(p))
    }

    pub fn implies(a: Pred, b: Pred) -> Pred {
        Pred::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Pred, b: Pred) -> Pred {
        Pred::Iff(Box::new(a), Box::new(b))
    }

    pub fn eq(l: Expr, r: Expr) -> Pred {
        Pred::Eq(l, r)
    }

    /// Top-level conjuncts of a predicate (the predicate itself when it is
    /// not a conjunction).
    pub fn conjuncts(&self) -> Vec<&Pred> {
        match self {
            Pred::And(ps) => ps.iter().collect(),
            p => vec![p],
        }
    }

    /// Top-level disjuncts of a predicate.
    pub fn disjuncts(&self) -> Vec<&Pred> {
        match self {
            Pred::Or(ps) => ps.iter().collect(),
            p => vec![p],
        }
    }

    /// Names of free variables, with primed copies reported as `name$1`.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Pred::True | Pred::False => {}
            Pred::Not(p) => p.collect_free(bound, out),
            Pred::And(ps) | Pred::Or(ps) => {
                for p in ps {
                    p.collect_free(bound, out);
                }
            }
            Pred::Implies(a, b) | Pred::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Pred::Eq(l, r)
            | Pred::Neq(l, r)
            | Pred::Less(l, r)
            | Pred::Leq(l, r)
            | Pred::Greater(l, r)
            | Pred::Geq(l, r) => {
                collect_free_expr(l, bound, out);
                collect_free_expr(r, bound, out);
            }
            Pred::Member(e, _) => collect_free_expr(e, bound, out),
            Pred::Forall { var, body, .. } | Pred::Exists { var, body, .. } => {
                bound.push(var.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Simultaneous, capture-avoiding substitution of expressions for free
    /// variable occurrences. Primed variables are never substituted.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Pred {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Pred::True => Pred::True,
            Pred::False => Pred::False,
            Pred::Not(p) => Pred::not(p.substitute(map)),
            Pred::And(ps) => Pred::And(ps.iter().map(|p| p.substitute(map)).collect()),
            Pred::Or(ps) => Pred::Or(ps.iter().map(|p| p.substitute(map)).collect()),
            Pred::Implies(a, b) => Pred::implies(a.substitute(map), b.substitute(map)),
            Pred::Iff(a, b) => Pred::iff(a.substitute(map), b.substitute(map)),
            Pred::Eq(l, r) => Pred::Eq(substitute_expr(l, map), substitute_expr(r, map)),
            Pred::Neq(l, r) => Pred::Neq(substitute_expr(l, map), substitute_expr(r, map)),
            Pred::Less(l, r) => Pred::Less(substitute_expr(l, map), substitute_expr(r, map)),
            Pred::Leq(l, r) => Pred::Leq(substitute_expr(l, map), substitute_expr(r, map)),
            Pred::Greater(l, r) => Pred::Greater(substitute_expr(l, map), substitute_expr(r, map)),
            Pred::Geq(l, r) => Pred::Geq(substitute_expr(l, map), substitute_expr(r, map)),
            Pred::Member(e, s) => Pred::Member(substitute_expr(e, map), s.clone()),
            Pred::Forall { var, domain, body } => {
                let (var, body) = substitute_under_binder(var, body, map);
                Pred::Forall {
                    var,
                    domain: domain.clone(),
                    body: Box::new(body),
                }
            }
            Pred::Exists { var, domain, body } => {
                let (var, body) = substitute_under_binder(var, body, map);
                Pred::Exists {
                    var,
                    domain: domain.clone(),
                    body: Box::new(body),
                }
            }
        }
    }

    /// Renames free variable occurrences according to `renames`
    /// (variable-to-variable only, used when inlining an abstraction whose
    /// variable names clash with the refinement's).
    pub fn rename_vars(&self, renames: &BTreeMap<String, String>) -> Pred {
        let map: BTreeMap<String, Expr> = renames
            .iter()
            .map(|(k, v)| (k.clone(), Expr::Var(v.clone())))
            .collect();
        self.substitute(&map)
    }
}

fn substitute_under_binder(
    var: &str,
    body: &Pred,
    map: &BTreeMap<String, Expr>,
) -> (String, Pred) {
    let mut inner = map.clone();
    inner.remove(var);
    if inner.is_empty() {
        return (var.to_string(), body.as_ref().clone());
    }
    // Rename the binder when any replacement expression would capture it.
    let captures = inner.values().any(|e| expr_free_vars(e).contains(var));
    if captures {
        let mut taken: BTreeSet<String> = body.free_vars();
        for e in inner.values() {
            taken.extend(expr_free_vars(e));
        }
        let fresh = fresh_name(var, &taken);
        let renamed = body.substitute(&BTreeMap::from([(
            var.to_string(),
            Expr::Var(fresh.clone()),
        )]));
        (fresh.clone(), renamed.substitute(&inner))
    } else {
        (var.to_string(), body.substitute(&inner))
    }
}

fn substitute_expr(e: &Expr, map: &BTreeMap<String, Expr>) -> Expr {
    match e {
        Expr::Var(n) => map.get(n).cloned().unwrap_or_else(|| e.clone()),
        Expr::Ident(_) | Expr::Primed(_) | Expr::EnumLit(_) | Expr::Int(_) => e.clone(),
        Expr::Add(l, r) => Expr::Add(
            Box::new(substitute_expr(l, map)),
            Box::new(substitute_expr(r, map)),
        ),
        Expr::Sub(l, r) => Expr::Sub(
            Box::new(substitute_expr(l, map)),
            Box::new(substitute_expr(r, map)),
        ),
        Expr::BoolOf(p) => Expr::BoolOf(Box::new(p.substitute(map))),
    }
}

fn collect_free_expr(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match e {
        Expr::Ident(n) | Expr::Var(n) => {
            if !bound.iter().any(|b| b == n) {
                out.insert(n.clone());
            }
        }
        Expr::Primed(n) => {
            out.insert(format!("{n}$1"));
        }
        Expr::EnumLit(_) | Expr::Int(_) => {}
        Expr::Add(l, r) | Expr::Sub(l, r) => {
            collect_free_expr(l, bound, out);
            collect_free_expr(r, bound, out);
        }
        Expr::BoolOf(p) => p.collect_free(bound, out),
    }
}

/// Free variable names of an expression, primed copies as `name$1`.
pub fn expr_free_vars(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free_expr(e, &mut Vec::new(), &mut out);
    out
}

/// First identifier derived from `base` that is not in `taken`
/// (`base_q0`, `base_q1`, ...).
pub fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    let mut n = 0u32;
    loop {
        let candidate = format!("{base}_q{n}");
        if !taken.contains(&candidate) {
            return candidate;
        }
        n += 1;
    }
}

/// A generalized substitution (the body of an event or initialisation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subst {
    Skip,
    /// `x := E`
    Assign(String, Expr),
    /// `x :: S` — nondeterministic choice from a set.
    ChooseIn(String, SetExpr),
    /// `s1 || s2 || ...` — simultaneous composition over disjoint frames.
    Parallel(Vec<Subst>),
    /// `s1 ; s2 ; ...` — sequential composition.
    Sequence(Vec<Subst>),
    /// `IF c THEN t ELSE e END` (`e` is `Skip` when the ELSE arm is omitted).
    If {
        cond: Pred,
        then: Box<Subst>,
        els: Box<Subst>,
    },
    /// `SELECT g1 THEN s1 WHEN g2 THEN s2 ... END` — guarded choice.
    Select(Vec<(Pred, Subst)>),
    /// `CHOICE s1 OR s2 ... END` — unguarded choice.
    Choice(Vec<Subst>),
    /// `ANY z WHERE P THEN s END`. `domain` is extracted from the leading
    /// typing conjunct of `P` during resolution; `constraint` keeps the full
    /// WHERE predicate.
    Any {
        var: String,
        domain: SetExpr,
        constraint: Pred,
        body: Box<Subst>,
    },
}

impl Subst {
    /// Variables possibly written by this substitution.
    pub fn written_vars(&self) -> BTreeSet<String> {
        match self {
            Subst::Skip => BTreeSet::new(),
            Subst::Assign(x, _) | Subst::ChooseIn(x, _) => BTreeSet::from([x.clone()]),
            Subst::Parallel(ss) | Subst::Sequence(ss) | Subst::Choice(ss) => {
                ss.iter().flat_map(|s| s.written_vars()).collect()
            }
            Subst::If { then, els, .. } => {
                let mut w = then.written_vars();
                w.extend(els.written_vars());
                w
            }
            Subst::Select(branches) => branches
                .iter()
                .flat_map(|(_, s)| s.written_vars())
                .collect(),
            Subst::Any { body, .. } => body.written_vars(),
        }
    }

    /// Variables written on *every* execution path (used to check that an
    /// initialisation assigns the whole state).
    pub fn must_write_vars(&self) -> BTreeSet<String> {
        match self {
            Subst::Skip => BTreeSet::new(),
            Subst::Assign(x, _) | Subst::ChooseIn(x, _) => BTreeSet::from([x.clone()]),
            Subst::Parallel(ss) | Subst::Sequence(ss) => {
                ss.iter().flat_map(|s| s.must_write_vars()).collect()
            }
            Subst::If { then, els, .. } => {
                let t = then.must_write_vars();
                let e = els.must_write_vars();
                t.intersection(&e).cloned().collect()
            }
            Subst::Select(branches) => {
                let mut iter = branches.iter().map(|(_, s)| s.must_write_vars());
                match iter.next() {
                    None => BTreeSet::new(),
                    Some(first) => iter.fold(first, |acc, s| {
                        acc.intersection(&s).cloned().collect()
                    }),
                }
            }
            Subst::Choice(ss) => {
                let mut iter = ss.iter().map(|s| s.must_write_vars());
                match iter.next() {
                    None => BTreeSet::new(),
                    Some(first) => iter.fold(first, |acc, s| {
                        acc.intersection(&s).cloned().collect()
                    }),
                }
            }
            Subst::Any { body, .. } => body.must_write_vars(),
        }
    }

    /// Renames free variable occurrences (reads and assignment targets).
    /// Binder variables of `ANY` are left untouched; renaming a name that
    /// collides with a binder is rejected earlier by the typechecker.
    pub fn rename_vars(&self, renames: &BTreeMap<String, String>) -> Subst {
        let emap: BTreeMap<String, Expr> = renames
            .iter()
            .map(|(k, v)| (k.clone(), Expr::Var(v.clone())))
            .collect();
        match self {
            Subst::Skip => Subst::Skip,
            Subst::Assign(x, e) => Subst::Assign(
                renames.get(x).cloned().unwrap_or_else(|| x.clone()),
                substitute_expr(e, &emap),
            ),
            Subst::ChooseIn(x, s) => Subst::ChooseIn(
                renames.get(x).cloned().unwrap_or_else(|| x.clone()),
                s.clone(),
            ),
            Subst::Parallel(ss) => {
                Subst::Parallel(ss.iter().map(|s| s.rename_vars(renames)).collect())
            }
            Subst::Sequence(ss) => {
                Subst::Sequence(ss.iter().map(|s| s.rename_vars(renames)).collect())
            }
            Subst::Choice(ss) => Subst::Choice(ss.iter().map(|s| s.rename_vars(renames)).collect()),
            Subst::If { cond, then, els } => Subst::If {
                cond: cond.substitute(&emap),
                then: Box::new(then.rename_vars(renames)),
                els: Box::new(els.rename_vars(renames)),
            },
            Subst::Select(branches) => Subst::Select(
                branches
                    .iter()
                    .map(|(g, s)| (g.substitute(&emap), s.rename_vars(renames)))
                    .collect(),
            ),
            Subst::Any {
                var,
                domain,
                constraint,
                body,
            } => {
                let mut inner = renames.clone();
                inner.remove(var);
                Subst::Any {
                    var: var.clone(),
                    domain: domain.clone(),
                    constraint: constraint.substitute(
                        &inner
                            .iter()
                            .map(|(k, v)| (k.clone(), Expr::Var(v.clone())))
                            .collect(),
                    ),
                    body: Box::new(body.rename_vars(&inner)),
                }
            }
        }
    }
}
