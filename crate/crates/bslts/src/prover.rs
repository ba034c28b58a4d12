//! Finite-domain three-valued prover.
//!
//! Proof obligations are closed first-order formulas over a list of typed
//! variables. The prover decides them by exhaustive enumeration of the
//! product space — unless the space is larger than the caller's budget, in
//! which case the verdict is `Unknown`. Verdicts can also be supplied
//! externally through an assumption table, emulating an interactive proof:
//! an assumed verdict is taken at face value and marked as such.
//!
//! Enumeration is deterministic: variables iterate in declaration order,
//! domain elements in enumeration order, the first variable varying
//! slowest. The reported witness is therefore reproducible and minimal in
//! that ordering.

use std::collections::BTreeMap;

use crate::bmodel::{Domain, Expr, Pred, SetExpr, Value};

/// An assignment of values to variables (primed copies use a `$1` suffix
/// in their key).
pub type Valuation = BTreeMap<String, Value>;

/// Renders a valuation as `x = a, y = b` in key order.
pub fn format_valuation(v: &Valuation) -> String {
    v.iter()
        .map(|(name, value)| format!("{name} = {value}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// What a proof obligation asks of its formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoKind {
    /// Does the formula hold on every valuation? A witness refutes it.
    Validity,
    /// Does the formula hold on some valuation? A witness exhibits it.
    Satisfiability,
}

impl std::fmt::Display for PoKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PoKind::Validity => write!(f, "validity"),
            PoKind::Satisfiability => write!(f, "satisfiability"),
        }
    }
}

/// A closed formula to decide, quantified over `vars`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofObligation {
    /// Stable identifier, also the key in assumption files.
    pub id: String,
    pub kind: PoKind,
    /// Quantification space: variables with their finite domains,
    /// in declaration order.
    pub vars: Vec<(String, Domain)>,
    pub formula: Pred,
}

/// Three-valued outcome of deciding a proof obligation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Validity: holds everywhere. Satisfiability: holds somewhere.
    Valid,
    /// Validity: refuted by a witness. Satisfiability: holds nowhere.
    Invalid,
    /// The product space exceeded the budget.
    Unknown,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Valid => write!(f, "VALID"),
            Outcome::Invalid => write!(f, "INVALID"),
            Outcome::Unknown => write!(f, "UNKNOWN"),
        }
    }
}

/// The decision for one proof obligation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub po_id: String,
    pub outcome: Outcome,
    /// For a refuted validity PO: the first falsifying valuation.
    /// For a satisfied satisfiability PO: the first satisfying valuation.
    pub witness: Option<Valuation>,
    /// Number of valuations evaluated before the verdict.
    pub examined: u64,
    /// True when the outcome came from the assumption table.
    pub assumed: bool,
}

/// Errors from the prover: evaluation of a non-closed or ill-typed formula,
/// or a malformed assumption file.
#[derive(Debug, thiserror::Error)]
pub enum ProverError {
    #[error("evaluation error: unbound variable `{name}`")]
    UnboundVariable { name: String },
    #[error("evaluation error: set `{name}` has no inlined elements (unresolved predicate)")]
    UnresolvedSet { name: String },
    #[error("evaluation error: {detail}")]
    IllTyped { detail: String },
    #[error("assumption file line {line}: {detail}")]
    Assumption { line: usize, detail: String },
}

// ----------------------------------------------------------------------
// Evaluation
// ----------------------------------------------------------------------

/// Evaluates a closed, resolved predicate on a valuation.
pub fn evaluate(p: &Pred, v: &Valuation) -> Result<bool, ProverError> {
    match p {
        Pred::True => Ok(true),
        Pred::False => Ok(false),
        Pred::Not(q) => Ok(!evaluate(q, v)?),
        Pred::And(ps) => {
            for q in ps {
                if !evaluate(q, v)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Pred::Or(ps) => {
            for q in ps {
                if evaluate(q, v)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Pred::Implies(a, b) => Ok(!evaluate(a, v)? || evaluate(b, v)?),
        Pred::Iff(a, b) => Ok(evaluate(a, v)? == evaluate(b, v)?),
        Pred::Eq(l, r) => Ok(eval_expr(l, v)? == eval_expr(r, v)?),
        Pred::Neq(l, r) => Ok(eval_expr(l, v)? != eval_expr(r, v)?),
        Pred::Member(e, s) => {
            let val = eval_expr(e, v)?;
            Ok(set_values(s)?.contains(&val))
        }
        Pred::Less(l, r) => int_cmp(l, r, v, |a, b| a < b),
        Pred::Leq(l, r) => int_cmp(l, r, v, |a, b| a <= b),
        Pred::Greater(l, r) => int_cmp(l, r, v, |a, b| a > b),
        Pred::Geq(l, r) => int_cmp(l, r, v, |a, b| a >= b),
        Pred::Forall { var, domain, body } => {
            for value in set_values(domain)? {
                let mut inner = v.clone();
                inner.insert(var.clone(), value);
                if !evaluate(body, &inner)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Pred::Exists { var, domain, body } => {
            for value in set_values(domain)? {
                let mut inner = v.clone();
                inner.insert(var.clone(), value);
                if evaluate(body, &inner)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

fn int_cmp(
    l: &Expr,
    r: &Expr,
    v: &Valuation,
    op: fn(i64, i64) -> bool,
) -> Result<bool, ProverError> {
    match (eval_expr(l, v)?, eval_expr(r, v)?) {
        (Value::Int(a), Value::Int(b)) => Ok(op(a, b)),
        _ => Err(ProverError::IllTyped {
            detail: "integer comparison over non-integer values".to_string(),
        }),
    }
}

/// Evaluates a resolved expression on a valuation.
pub fn eval_expr(e: &Expr, v: &Valuation) -> Result<Value, ProverError> {
    match e {
        Expr::Var(n) => v
            .get(n)
            .cloned()
            .ok_or_else(|| ProverError::UnboundVariable { name: n.clone() }),
        Expr::Primed(n) => {
            let key = format!("{n}$1");
            v.get(&key)
                .cloned()
                .ok_or(ProverError::UnboundVariable { name: key })
        }
        Expr::Ident(n) => Err(ProverError::UnboundVariable { name: n.clone() }),
        Expr::EnumLit(n) => Ok(Value::Elem(n.clone())),
        Expr::Int(i) => Ok(Value::Int(*i)),
        Expr::Add(l, r) => match (eval_expr(l, v)?, eval_expr(r, v)?) {
            (Value::Int(a), Value::Int(b)) => Ok(Value::Int(a + b)),
            _ => Err(ProverError::IllTyped {
                detail: "`+` over non-integer values".to_string(),
            }),
        },
        Expr::Sub(l, r) => match (eval_expr(l, v)?, eval_expr(r, v)?) {
            (Value::Int(a), Value::Int(b)) => Ok(Value::Int(a - b)),
            _ => Err(ProverError::IllTyped {
                detail: "`-` over non-integer values".to_string(),
            }),
        },
        Expr::BoolOf(p) => Ok(Value::Elem(
            if evaluate(p, v)? { "TRUE" } else { "FALSE" }.to_string(),
        )),
    }
}

fn set_values(s: &SetExpr) -> Result<Vec<Value>, ProverError> {
    s.known_elements().ok_or_else(|| match s {
        SetExpr::Named { name, .. } => ProverError::UnresolvedSet { name: name.clone() },
        _ => ProverError::IllTyped {
            detail: "set expression has no enumerable elements".to_string(),
        },
    })
}

// ----------------------------------------------------------------------
// Decision procedure
// ----------------------------------------------------------------------

/// Decides a proof obligation by exhaustive enumeration within `budget`.
///
/// The budget bounds the size of the product space, not the time spent: if
/// `|D1| * ... * |Dn| > budget` the verdict is `Unknown` with zero
/// valuations examined. Assumed verdicts from `assumptions` short-circuit
/// enumeration entirely. The verdict is monotonic in the budget: raising it
/// can only turn `Unknown` into `Valid`/`Invalid`, never flip a decided
/// outcome.
pub fn decide(
    po: &ProofObligation,
    budget: u64,
    assumptions: &AssumptionTable,
) -> Result<Verdict, ProverError> {
    if let Some(outcome) = assumptions.get(&po.id) {
        return Ok(Verdict {
            po_id: po.id.clone(),
            outcome,
            witness: None,
            examined: 0,
            assumed: true,
        });
    }

    // Product-space size, saturating to avoid overflow on absurd inputs.
    let mut space: u128 = 1;
    for (_, d) in &po.vars {
        space = space.saturating_mul(d.size() as u128);
    }
    if space == 0 {
        // Empty quantification space: a validity claim holds vacuously and
        // a satisfiability claim fails vacuously.
        let outcome = match po.kind {
            PoKind::Validity => Outcome::Valid,
            PoKind::Satisfiability => Outcome::Invalid,
        };
        return Ok(Verdict {
            po_id: po.id.clone(),
            outcome,
            witness: None,
            examined: 0,
            assumed: false,
        });
    }
    if space > budget as u128 {
        return Ok(Verdict {
            po_id: po.id.clone(),
            outcome: Outcome::Unknown,
            witness: None,
            examined: 0,
            assumed: false,
        });
    }

    let domains: Vec<Vec<Value>> = po.vars.iter().map(|(_, d)| d.values()).collect();
    let mut indices = vec![0usize; po.vars.len()];
    let mut examined: u64 = 0;
    loop {
        let valuation: Valuation = po
            .vars
            .iter()
            .enumerate()
            .map(|(pos, (name, _))| (name.clone(), domains[pos][indices[pos]].clone()))
            .collect();
        examined += 1;
        let holds = evaluate(&po.formula, &valuation)?;
        match po.kind {
            PoKind::Validity if !holds => {
                return Ok(Verdict {
                    po_id: po.id.clone(),
                    outcome: Outcome::Invalid,
                    witness: Some(valuation),
                    examined,
                    assumed: false,
                });
            }
            PoKind::Satisfiability if holds => {
                return Ok(Verdict {
                    po_id: po.id.clone(),
                    outcome: Outcome::Valid,
                    witness: Some(valuation),
                    examined,
                    assumed: false,
                });
            }
            _ => {}
        }
        // Odometer step: last variable fastest.
        let mut carry = true;
        for pos in (0..indices.len()).rev() {
            if !carry {
                break;
            }
            indices[pos] += 1;
            if indices[pos] == domains[pos].len() {
                indices[pos] = 0;
            } else {
                carry = false;
            }
        }
        if carry {
            break;
        }
    }

    let outcome = match po.kind {
        PoKind::Validity => Outcome::Valid,
        PoKind::Satisfiability => Outcome::Invalid,
    };
    Ok(Verdict {
        po_id: po.id.clone(),
        outcome,
        witness: None,
        examined,
        assumed: false,
    })
}

// ----------------------------------------------------------------------
// Assumption tables
// ----------------------------------------------------------------------

/// Externally supplied verdicts, keyed by proof-obligation id.
///
/// File format: one `<po-id> <VALID|INVALID>` pair per line; `#` starts a
/// comment; blank lines are ignored.
#[derive(Debug, Clone, Default)]
pub struct AssumptionTable {
    entries: BTreeMap<String, Outcome>,
}

impl AssumptionTable {
    pub fn new() -> AssumptionTable {
        AssumptionTable::default()
    }

    /// Parses the assumption file format.
    pub fn parse(text: &str) -> Result<AssumptionTable, ProverError> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let id = fields.next().unwrap().to_string();
            let verdict = fields.next().ok_or(ProverError::Assumption {
                line: idx + 1,
                detail: "expected `<po-id> <VALID|INVALID>`".to_string(),
            })?;
            if fields.next().is_some() {
                return Err(ProverError::Assumption {
                    line: idx + 1,
                    detail: "too many fields; expected `<po-id> <VALID|INVALID>`".to_string(),
                });
            }
            let outcome = match verdict {
                "VALID" => Outcome::Valid,
                "INVALID" => Outcome::Invalid,
                other => {
                    return Err(ProverError::Assumption {
                        line: idx + 1,
                        detail: format!("unknown verdict `{other}`; expected VALID or INVALID"),
                    })
                }
            };
            if entries.insert(id.clone(), outcome).is_some() {
                return Err(ProverError::Assumption {
                    line: idx + 1,
                    detail: format!("duplicate assumption for `{id}`"),
                });
            }
        }
        Ok(AssumptionTable { entries })
    }

    /// Records one assumption programmatically.
    pub fn insert(&mut self, id: impl Into<String>, outcome: Outcome) {
        self.entries.insert(id.into(), outcome);
    }

    pub fn get(&self, id: &str) -> Option<Outcome> {
        self.entries.get(id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
