//! Deterministic textual rendering of predicates, expressions and
//! substitutions.
//!
//! Two renderings are provided:
//!
//! * [`canonical`] — the round-trippable form used in dumps and reports:
//!   parsing it and printing the result yields the same text;
//! * [`compact`] — a whitespace-free variant used for symbolic-state names
//!   and graph node identifiers (never parsed back).

use super::ast::{Expr, Pred, SetExpr, Subst};

/// Precedence levels used for minimal parenthesization. Higher binds
/// tighter.
const LVL_IFF: u8 = 1;
const LVL_IMPLIES: u8 = 2;
const LVL_OR: u8 = 3;
const LVL_AND: u8 = 4;
const LVL_ATOM: u8 = 5;

fn level(p: &Pred) -> u8 {
    match p {
        Pred::Iff(..) => LVL_IFF,
        Pred::Implies(..) => LVL_IMPLIES,
        Pred::Or(..) => LVL_OR,
        Pred::And(..) => LVL_AND,
        _ => LVL_ATOM,
    }
}

struct Style {
    and: &'static str,
    or: &'static str,
    iff: &'static str,
    implies: &'static str,
    cmp_pad: &'static str,
    comma: &'static str,
}

const CANONICAL: Style = Style {
    and: " & ",
    or: " or ",
    iff: " <=> ",
    implies: " => ",
    cmp_pad: " ",
    comma: ", ",
};

const COMPACT: Style = Style {
    and: "&",
    or: "|",
    iff: "<=>",
    implies: "=>",
    cmp_pad: "",
    comma: ",",
};

/// Round-trippable rendering: `parse(canonical(p))` re-prints identically.
pub fn canonical(p: &Pred) -> String {
    render(p, LVL_IFF, &CANONICAL)
}

/// Whitespace-free rendering for state names and node identifiers.
pub fn compact(p: &Pred) -> String {
    render(p, LVL_IFF, &COMPACT)
}

/// Round-trippable rendering of an expression.
pub fn canonical_expr(e: &Expr) -> String {
    render_expr(e, &CANONICAL, false)
}

fn render(p: &Pred, min_level: u8, st: &Style) -> String {
    let text = match p {
        Pred::True => "true".to_string(),
        Pred::False => "false".to_string(),
        Pred::Not(q) => format!("not({})", render(q, LVL_IFF, st)),
        Pred::And(ps) => ps
            .iter()
            .map(|q| render(q, LVL_AND, st))
            .collect::<Vec<_>>()
            .join(st.and),
        Pred::Or(ps) => ps
            .iter()
            .map(|q| render(q, LVL_OR, st))
            .collect::<Vec<_>>()
            .join(st.or),
        Pred::Implies(a, b) => format!(
            "{}{}{}",
            render(a, LVL_IMPLIES + 1, st),
            st.implies,
            render(b, LVL_IMPLIES, st)
        ),
        Pred::Iff(a, b) => format!(
            "{}{}{}",
            render(a, LVL_IFF, st),
            st.iff,
            render(b, LVL_IFF + 1, st)
        ),
        Pred::Eq(l, r) => cmp(l, "=", r, st),
        Pred::Neq(l, r) => cmp(l, "/=", r, st),
        Pred::Less(l, r) => cmp(l, "<", r, st),
        Pred::Leq(l, r) => cmp(l, "<=", r, st),
        Pred::Greater(l, r) => cmp(l, ">", r, st),
        Pred::Geq(l, r) => cmp(l, ">=", r, st),
        Pred::Member(e, s) => format!(
            "{}{}:{}{}",
            render_expr(e, st, false),
            st.cmp_pad,
            st.cmp_pad,
            render_set(s, st)
        ),
        Pred::Forall { var, domain, body } => format!(
            "!{var}.({var}{p}:{p}{}{}{})",
            render_set(domain, st),
            st.implies,
            render(body, LVL_IMPLIES, st),
            p = st.cmp_pad,
        ),
        Pred::Exists { var, domain, body } => format!(
            "#{var}.({var}{p}:{p}{}{}{})",
            render_set(domain, st),
            st.and,
            render(body, LVL_AND, st),
            p = st.cmp_pad,
        ),
    };
    if level(p) < min_level {
        format!("({text})")
    } else {
        text
    }
}

fn cmp(l: &Expr, op: &str, r: &Expr, st: &Style) -> String {
    format!(
        "{}{}{op}{}{}",
        render_expr(l, st, false),
        st.cmp_pad,
        st.cmp_pad,
        render_expr(r, st, false)
    )
}

fn render_expr(e: &Expr, st: &Style, operand: bool) -> String {
    match e {
        Expr::Ident(n) | Expr::Var(n) | Expr::EnumLit(n) => n.clone(),
        Expr::Primed(n) => format!("{n}$1"),
        Expr::Int(v) => v.to_string(),
        Expr::Add(l, r) => {
            let text = format!(
                "{}{}+{}{}",
                render_expr(l, st, false),
                st.cmp_pad,
                st.cmp_pad,
                render_expr(r, st, true)
            );
            if operand {
                format!("({text})")
            } else {
                text
            }
        }
        Expr::Sub(l, r) => {
            let text = format!(
                "{}{}-{}{}",
                render_expr(l, st, false),
                st.cmp_pad,
                st.cmp_pad,
                render_expr(r, st, true)
            );
            if operand {
                format!("({text})")
            } else {
                text
            }
        }
        Expr::BoolOf(p) => format!("bool({})", render(p, LVL_IFF, st)),
    }
}

fn render_set(s: &SetExpr, st: &Style) -> String {
    match s {
        SetExpr::Bool => "BOOL".to_string(),
        SetExpr::Named { name, .. } => name.clone(),
        SetExpr::Literal(es) => format!("{{{}}}", es.join(st.comma)),
        SetExpr::Interval(lo, hi) => format!("{lo}..{hi}"),
    }
}

impl std::fmt::Display for Pred {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", canonical(self))
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", canonical_expr(self))
    }
}

impl std::fmt::Display for Subst {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", render_subst(self, false))
    }
}

fn render_subst(s: &Subst, operand: bool) -> String {
    match s {
        Subst::Skip => "skip".to_string(),
        Subst::Assign(x, e) => format!("{x} := {}", render_expr(e, &CANONICAL, false)),
        Subst::ChooseIn(x, set) => format!("{x} :: {}", render_set(set, &CANONICAL)),
        Subst::Parallel(ps) => {
            let text = ps
                .iter()
                .map(|p| render_subst(p, true))
                .collect::<Vec<_>>()
                .join(" || ");
            if operand {
                format!("BEGIN {text} END")
            } else {
                text
            }
        }
        Subst::Sequence(ps) => {
            let text = ps
                .iter()
                .map(|p| render_subst(p, true))
                .collect::<Vec<_>>()
                .join(" ; ");
            if operand {
                format!("BEGIN {text} END")
            } else {
                text
            }
        }
        Subst::If { cond, then, els } => {
            if **els == Subst::Skip {
                format!("IF {cond} THEN {} END", render_subst(then, false))
            } else {
                format!(
                    "IF {cond} THEN {} ELSE {} END",
                    render_subst(then, false),
                    render_subst(els, false)
                )
            }
        }
        Subst::Select(branches) => {
            let mut out = String::new();
            for (i, (g, b)) in branches.iter().enumerate() {
                let kw = if i == 0 { "SELECT" } else { " WHEN" };
                out.push_str(&format!("{kw} {g} THEN {}", render_subst(b, false)));
            }
            out.push_str(" END");
            out
        }
        Subst::Choice(arms) => {
            let text = arms
                .iter()
                .map(|a| render_subst(a, false))
                .collect::<Vec<_>>()
                .join(" OR ");
            format!("CHOICE {text} END")
        }
        Subst::Any {
            var, constraint, body, ..
        } => format!(
            "ANY {var} WHERE {constraint} THEN {} END",
            render_subst(body, false)
        ),
    }
}
