//! Predicate-transformer semantics of generalized substitutions.
//!
//! The central operation is the weakest precondition `wp(s, r)` (written
//! `[s]R`): the predicate over before-states guaranteeing that every
//! execution of `s` terminates in a state satisfying `R`. Derived notions:
//!
//! * feasibility `fis(s) = not [s] false` — where `s` has at least one
//!   execution;
//! * the conjugate transformer `<s>R = not [s] not R` — where *some*
//!   execution of `s` reaches `R`;
//! * the before-after predicate `prd(s, vars)` relating a before-state to
//!   an after-state over primed copies of `vars`.
//!
//! All results are simplified with [`simplify`], a syntactic
//! constant-folding pass that is sound (equivalence-preserving) but not
//! complete: a predicate that folds to the `true`/`false` literal is
//! certainly valid/unsatisfiable, while anything else needs the prover.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::bmodel::ast::expr_free_vars;
use crate::bmodel::{fresh_name, Expr, Pred, SetExpr, Subst};

/// An event body in guarded normal form: `guard ==> action`.
///
/// For a body whose outermost construct is a single-branch `SELECT`, the
/// guard is the branch condition conjoined with the action's feasibility
/// and the action is the branch body. Any other body is its own action,
/// guarded by its feasibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedEvent {
    pub guard: Pred,
    pub action: Subst,
}

/// Weakest precondition `[s]R`, simplified.
pub fn wp(s: &Subst, r: &Pred) -> Pred {
    simplify(&wp_raw(s, r))
}

/// Feasibility `fis(s) = not [s] false`, simplified.
pub fn fis(s: &Subst) -> Pred {
    simplify(&Pred::not(wp_raw(s, &Pred::False)))
}

/// Conjugate transformer `<s>R = not [s] not R`, simplified.
pub fn conjugate_wp(s: &Subst, r: &Pred) -> Pred {
    simplify(&Pred::not(wp_raw(s, &Pred::not(r.clone()))))
}

/// Before-after predicate of `s` over `vars`: relates unprimed before
/// variables to primed after variables, as `<s>(x1 = x1$1 & ... )`.
pub fn prd(s: &Subst, vars: &[String]) -> Pred {
    let frame = Pred::and(
        vars.iter()
            .map(|v| Pred::Eq(Expr::Var(v.clone()), Expr::Primed(v.clone())))
            .collect(),
    );
    conjugate_wp(s, &frame)
}

/// Splits an event body into guard and action.
pub fn normalize_event(body: &Subst) -> NormalizedEvent {
    match body {
        Subst::Select(branches) if branches.len() == 1 => {
            let (g, action) = &branches[0];
            NormalizedEvent {
                guard: simplify(&Pred::and(vec![g.clone(), fis(action)])),
                action: action.clone(),
            }
        }
        other => NormalizedEvent {
            guard: fis(other),
            action: other.clone(),
        },
    }
}

// ----------------------------------------------------------------------
// The transformer itself
// ----------------------------------------------------------------------

fn wp_raw(s: &Subst, r: &Pred) -> Pred {
    match s {
        Subst::Skip => r.clone(),
        Subst::Assign(x, e) => {
            r.substitute(&BTreeMap::from([(x.clone(), e.clone())]))
        }
        Subst::ChooseIn(x, set) => {
            let mut taken = r.free_vars();
            taken.insert(x.clone());
            let z = fresh_name(x, &taken);
            let body = r.substitute(&BTreeMap::from([(x.clone(), Expr::Var(z.clone()))]));
            Pred::Forall {
                var: z,
                domain: set.clone(),
                body: Box::new(body),
            }
        }
        Subst::Parallel(parts) => wp_parallel(parts, r),
        Subst::Sequence(parts) => {
            let mut acc = r.clone();
            for part in parts.iter().rev() {
                acc = wp_raw(part, &acc);
            }
            acc
        }
        Subst::If { cond, then, els } => Pred::and(vec![
            Pred::implies(cond.clone(), wp_raw(then, r)),
            Pred::implies(Pred::not(cond.clone()), wp_raw(els, r)),
        ]),
        Subst::Select(branches) => Pred::and(
            branches
                .iter()
                .map(|(g, b)| Pred::implies(g.clone(), wp_raw(b, r)))
                .collect(),
        ),
        Subst::Choice(arms) => Pred::and(arms.iter().map(|a| wp_raw(a, r)).collect()),
        Subst::Any {
            var,
            domain,
            constraint,
            body,
        } => {
            // Rename the binder when it would capture a free variable of R.
            let free = r.free_vars();
            let (var, constraint, body) = if free.contains(var) {
                let mut taken: BTreeSet<String> = free.clone();
                taken.extend(constraint.free_vars());
                taken.insert(var.clone());
                let z = fresh_name(var, &taken);
                let map = BTreeMap::from([(var.clone(), Expr::Var(z.clone()))]);
                let rename = BTreeMap::from([(var.clone(), z.clone())]);
                (z, constraint.substitute(&map), body.rename_vars(&rename))
            } else {
                (var.clone(), constraint.clone(), body.as_ref().clone())
            };
            Pred::Forall {
                var,
                domain: domain.clone(),
                body: Box::new(Pred::implies(constraint, wp_raw(&body, r))),
            }
        }
    }
}

/// `[s1 || s2 || ...]R`. Parallel branches read the same before-state and
/// write disjoint frames. Pure assignments act as one simultaneous
/// substitution; compound branches (IF, SELECT, CHOICE, ANY, `x :: S`) are
/// hoisted out of the composition first, which preserves meaning because
/// the remaining branches cannot observe their writes.
fn wp_parallel(parts: &[Subst], r: &Pred) -> Pred {
    // Find a compound branch to hoist.
    for (i, part) in parts.iter().enumerate() {
        let rest = |replacement: Subst| -> Subst {
            let mut others: Vec<Subst> = Vec::with_capacity(parts.len());
            others.extend_from_slice(&parts[..i]);
            others.push(replacement);
            others.extend_from_slice(&parts[i + 1..]);
            Subst::Parallel(others)
        };
        match part {
            Subst::Skip | Subst::Assign(..) => continue,
            Subst::If { cond, then, els } => {
                return wp_raw(
                    &Subst::If {
                        cond: cond.clone(),
                        then: Box::new(rest(then.as_ref().clone())),
                        els: Box::new(rest(els.as_ref().clone())),
                    },
                    r,
                )
            }
            Subst::Select(branches) => {
                return wp_raw(
                    &Subst::Select(
                        branches
                            .iter()
                            .map(|(g, b)| (g.clone(), rest(b.clone())))
                            .collect(),
                    ),
                    r,
                )
            }
            Subst::Choice(arms) => {
                return wp_raw(
                    &Subst::Choice(arms.iter().map(|a| rest(a.clone())).collect()),
                    r,
                )
            }
            Subst::Any {
                var,
                domain,
                constraint,
                body,
            } => {
                return wp_raw(
                    &Subst::Any {
                        var: var.clone(),
                        domain: domain.clone(),
                        constraint: constraint.clone(),
                        body: Box::new(rest(body.as_ref().clone())),
                    },
                    r,
                )
            }
            Subst::ChooseIn(x, set) => {
                // x :: S  ==  ANY z WHERE z : S THEN x := z END
                let taken: BTreeSet<String> = parts
                    .iter()
                    .flat_map(|p| p.written_vars())
                    .chain(r.free_vars())
                    .collect();
                let z = fresh_name(x, &taken);
                return wp_raw(
                    &Subst::Any {
                        var: z.clone(),
                        domain: set.clone(),
                        constraint: Pred::Member(Expr::Var(z.clone()), set.clone()),
                        body: Box::new(rest(Subst::Assign(x.clone(), Expr::Var(z)))),
                    },
                    r,
                );
            }
            Subst::Parallel(inner) => {
                // Flatten nested parallel composition.
                let mut flat: Vec<Subst> = Vec::new();
                flat.extend_from_slice(&parts[..i]);
                flat.extend_from_slice(inner);
                flat.extend_from_slice(&parts[i + 1..]);
                return wp_parallel(&flat, r);
            }
            Subst::Sequence(_) => {
                unreachable!("`;` under `||` is rejected during resolution")
            }
        }
    }
    // Only skips and assignments remain: one simultaneous substitution.
    let mut map = BTreeMap::new();
    for part in parts {
        if let Subst::Assign(x, e) = part {
            map.insert(x.clone(), e.clone());
        }
    }
    r.substitute(&map)
}

// ----------------------------------------------------------------------
// Simplification
// ----------------------------------------------------------------------

/// Sound syntactic simplification: constant folding over literals and
/// statically-known domains, flattening and absorption for conjunction and
/// disjunction, negation pushed down to atoms, and elimination of
/// quantifiers whose body ignores the bound variable or whose domain is
/// statically empty.
pub fn simplify(p: &Pred) -> Pred {
    match p {
        Pred::True => Pred::True,
        Pred::False => Pred::False,
        Pred::Not(q) => negate(&simplify(q)),
        Pred::And(ps) => {
            let mut flat: Vec<Pred> = Vec::new();
            for q in ps {
                match simplify(q) {
                    Pred::True => {}
                    Pred::False => return Pred::False,
                    Pred::And(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            let mut kept: Vec<Pred> = Vec::new();
            for q in flat {
                if kept.contains(&q) {
                    continue;
                }
                if kept.iter().any(|k| complementary(k, &q)) {
                    return Pred::False;
                }
                kept.push(q);
            }
            Pred::and(kept)
        }
        Pred::Or(ps) => {
            let mut flat: Vec<Pred> = Vec::new();
            for q in ps {
                match simplify(q) {
                    Pred::False => {}
                    Pred::True => return Pred::True,
                    Pred::Or(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            let mut kept: Vec<Pred> = Vec::new();
            for q in flat {
                if kept.contains(&q) {
                    continue;
                }
                if kept.iter().any(|k| complementary(k, &q)) {
                    return Pred::True;
                }
                kept.push(q);
            }
            Pred::or(kept)
        }
        Pred::Implies(a, b) => {
            let a = simplify(a);
            let b = simplify(b);
            match (&a, &b) {
                (Pred::True, _) => b,
                (Pred::False, _) => Pred::True,
                (_, Pred::True) => Pred::True,
                (_, Pred::False) => negate(&a),
                _ if a == b => Pred::True,
                _ => Pred::implies(a, b),
            }
        }
        Pred::Iff(a, b) => {
            let a = simplify(a);
            let b = simplify(b);
            match (&a, &b) {
                (Pred::True, _) => b,
                (_, Pred::True) => a,
                (Pred::False, _) => negate(&b),
                (_, Pred::False) => negate(&a),
                _ if a == b => Pred::True,
                _ => Pred::iff(a, b),
            }
        }
        Pred::Eq(l, r) => {
            let l = simplify_expr(l);
            let r = simplify_expr(r);
            match literal_eq(&l, &r) {
                Some(true) => Pred::True,
                Some(false) => Pred::False,
                None => match (&l, &r) {
                    (Expr::BoolOf(p), other) | (other, Expr::BoolOf(p)) => {
                        match bool_lit(other) {
                            Some(true) => simplify(p),
                            Some(false) => negate(&simplify(p)),
                            None => match (&l, &r) {
                                (Expr::BoolOf(a), Expr::BoolOf(b)) => {
                                    simplify(&Pred::iff(*a.clone(), *b.clone()))
                                }
                                _ => Pred::Eq(l.clone(), r.clone()),
                            },
                        }
                    }
                    _ => Pred::Eq(l, r),
                },
            }
        }
        Pred::Neq(l, r) => {
            let l = simplify_expr(l);
            let r = simplify_expr(r);
            match literal_eq(&l, &r) {
                Some(true) => Pred::False,
                Some(false) => Pred::True,
                None => match (&l, &r) {
                    (Expr::BoolOf(p), other) | (other, Expr::BoolOf(p)) => {
                        match bool_lit(other) {
                            Some(true) => negate(&simplify(p)),
                            Some(false) => simplify(p),
                            None => Pred::Neq(l.clone(), r.clone()),
                        }
                    }
                    _ => Pred::Neq(l, r),
                },
            }
        }
        Pred::Member(e, s) => {
            let e = simplify_expr(e);
            if let (Some(v), Some(elems)) = (literal_value(&e), s.known_elements()) {
                if elems.contains(&v) {
                    Pred::True
                } else {
                    Pred::False
                }
            } else {
                Pred::Member(e, s.clone())
            }
        }
        Pred::Less(l, r) => fold_cmp(l, r, |a, b| a < b, Pred::Less),
        Pred::Leq(l, r) => fold_cmp(l, r, |a, b| a <= b, Pred::Leq),
        Pred::Greater(l, r) => fold_cmp(l, r, |a, b| a > b, Pred::Greater),
        Pred::Geq(l, r) => fold_cmp(l, r, |a, b| a >= b, Pred::Geq),
        Pred::Forall { var, domain, body } => {
            let body = simplify(body);
            let empty = domain.known_elements().map(|e| e.is_empty());
            match (&body, empty) {
                (_, Some(true)) => Pred::True,
                (Pred::True, _) => Pred::True,
                (Pred::False, Some(false)) => Pred::False,
                _ if !body.free_vars().contains(var) && empty == Some(false) => body,
                _ => Pred::Forall {
                    var: var.clone(),
                    domain: domain.clone(),
                    body: Box::new(body),
                },
            }
        }
        Pred::Exists { var, domain, body } => {
            let body = simplify(body);
            let empty = domain.known_elements().map(|e| e.is_empty());
            match (&body, empty) {
                (_, Some(true)) => Pred::False,
                (Pred::False, _) => Pred::False,
                (Pred::True, Some(false)) => Pred::True,
                _ if !body.free_vars().contains(var) && empty == Some(false) => body,
                _ => Pred::Exists {
                    var: var.clone(),
                    domain: domain.clone(),
                    body: Box::new(body),
                },
            }
        }
    }
}

/// Negation of an already-simplified predicate, pushed toward the atoms.
fn negate(p: &Pred) -> Pred {
    match p {
        Pred::True => Pred::False,
        Pred::False => Pred::True,
        Pred::Not(q) => q.as_ref().clone(),
        Pred::And(ps) => simplify(&Pred::Or(ps.iter().map(negate).collect())),
        Pred::Or(ps) => simplify(&Pred::And(ps.iter().map(negate).collect())),
        Pred::Implies(a, b) => simplify(&Pred::And(vec![a.as_ref().clone(), negate(b)])),
        Pred::Iff(a, b) => simplify(&Pred::iff(negate(a), b.as_ref().clone())),
        Pred::Eq(l, r) => Pred::Neq(l.clone(), r.clone()),
        Pred::Neq(l, r) => Pred::Eq(l.clone(), r.clone()),
        Pred::Less(l, r) => Pred::Geq(l.clone(), r.clone()),
        Pred::Leq(l, r) => Pred::Greater(l.clone(), r.clone()),
        Pred::Greater(l, r) => Pred::Leq(l.clone(), r.clone()),
        Pred::Geq(l, r) => Pred::Less(l.clone(), r.clone()),
        Pred::Forall { var, domain, body } => Pred::Exists {
            var: var.clone(),
            domain: domain.clone(),
            body: Box::new(negate(body)),
        },
        Pred::Exists { var, domain, body } => Pred::Forall {
            var: var.clone(),
            domain: domain.clone(),
            body: Box::new(negate(body)),
        },
        other @ Pred::Member(..) => Pred::not(other.clone()),
    }
}

/// Structural complement test used by And/Or folding: `p` and `not p`,
/// or an Eq/Neq pair over identical operands.
fn complementary(a: &Pred, b: &Pred) -> bool {
    match (a, b) {
        (Pred::Not(x), y) | (y, Pred::Not(x)) => x.as_ref() == y,
        (Pred::Eq(l1, r1), Pred::Neq(l2, r2)) | (Pred::Neq(l2, r2), Pred::Eq(l1, r1)) => {
            l1 == l2 && r1 == r2
        }
        (Pred::Less(l1, r1), Pred::Geq(l2, r2)) | (Pred::Geq(l2, r2), Pred::Less(l1, r1)) => {
            l1 == l2 && r1 == r2
        }
        (Pred::Leq(l1, r1), Pred::Greater(l2, r2))
        | (Pred::Greater(l2, r2), Pred::Leq(l1, r1)) => l1 == l2 && r1 == r2,
        _ => false,
    }
}

fn fold_cmp(
    l: &Expr,
    r: &Expr,
    int_op: fn(i64, i64) -> bool,
    ctor: fn(Expr, Expr) -> Pred,
) -> Pred {
    let l = simplify_expr(l);
    let r = simplify_expr(r);
    if let (Expr::Int(a), Expr::Int(b)) = (&l, &r) {
        return if int_op(*a, *b) { Pred::True } else { Pred::False };
    }
    ctor(l, r)
}

fn simplify_expr(e: &Expr) -> Expr {
    match e {
        Expr::Add(l, r) => {
            let l = simplify_expr(l);
            let r = simplify_expr(r);
            if let (Expr::Int(a), Expr::Int(b)) = (&l, &r) {
                Expr::Int(a + b)
            } else {
                Expr::Add(Box::new(l), Box::new(r))
            }
        }
        Expr::Sub(l, r) => {
            let l = simplify_expr(l);
            let r = simplify_expr(r);
            if let (Expr::Int(a), Expr::Int(b)) = (&l, &r) {
                Expr::Int(a - b)
            } else {
                Expr::Sub(Box::new(l), Box::new(r))
            }
        }
        Expr::BoolOf(p) => match simplify(p) {
            Pred::True => Expr::EnumLit("TRUE".to_string()),
            Pred::False => Expr::EnumLit("FALSE".to_string()),
            q => Expr::BoolOf(Box::new(q)),
        },
        other => other.clone(),
    }
}

/// Literal comparison when both sides are literals.
fn literal_eq(l: &Expr, r: &Expr) -> Option<bool> {
    if l == r && expr_free_vars(l).is_empty() && is_literal(l) {
        return Some(true);
    }
    match (literal_value(l), literal_value(r)) {
        (Some(a), Some(b)) => Some(a == b),
        _ => None,
    }
}

fn is_literal(e: &Expr) -> bool {
    matches!(e, Expr::EnumLit(_) | Expr::Int(_))
}

fn literal_value(e: &Expr) -> Option<crate::bmodel::Value> {
    match e {
        Expr::EnumLit(n) => Some(crate::bmodel::Value::Elem(n.clone())),
        Expr::Int(v) => Some(crate::bmodel::Value::Int(*v)),
        _ => None,
    }
}

fn bool_lit(e: &Expr) -> Option<bool> {
    match e {
        Expr::EnumLit(n) if n == "TRUE" => Some(true),
        Expr::EnumLit(n) if n == "FALSE" => Some(false),
        _ => None,
    }
}
