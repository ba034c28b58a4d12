//! Resolved machine and refinement models.

use std::collections::BTreeMap;

use super::ast::{Pred, SetExpr, Subst, Value};

/// The finite domain of a state variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    /// `BOOL` with elements `FALSE`, `TRUE` (in that enumeration order).
    Bool,
    /// A declared enumerated set; `elements` keeps declaration order.
    Enum { name: String, elements: Vec<String> },
    /// A bounded integer interval `lo..hi` inclusive.
    Interval(i64, i64),
}

impl Domain {
    /// All values of the domain in enumeration order.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Bool => vec![
                Value::Elem("FALSE".to_string()),
                Value::Elem("TRUE".to_string()),
            ],
            Domain::Enum { elements, .. } => {
                elements.iter().cloned().map(Value::Elem).collect()
            }
            Domain::Interval(lo, hi) => (*lo..=*hi).map(Value::Int).collect(),
        }
    }

    /// Number of values in the domain.
    pub fn size(&self) -> u64 {
        match self {
            Domain::Bool => 2,
            Domain::Enum { elements, .. } => elements.len() as u64,
            Domain::Interval(lo, hi) => {
                if lo > hi {
                    0
                } else {
                    (hi - lo) as u64 + 1
                }
            }
        }
    }

    /// The set expression denoting this domain.
    pub fn to_set_expr(&self) -> SetExpr {
        match self {
            Domain::Bool => SetExpr::Bool,
            Domain::Enum { name, elements } => SetExpr::Named {
                name: name.clone(),
                elements: elements.clone(),
            },
            Domain::Interval(lo, hi) => SetExpr::Interval(*lo, *hi),
        }
    }
}

/// A guarded event: a name and a generalized-substitution body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub body: Subst,
}

/// A fully resolved machine: every identifier classified, every variable
/// typed by a finite domain, the initialisation total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineModel {
    pub name: String,
    /// Declared enumerated sets in declaration order.
    pub sets: Vec<(String, Vec<String>)>,
    /// Variables in declaration order, each with its domain.
    pub variables: Vec<(String, Domain)>,
    /// The whole INVARIANT clause (typing conjuncts included).
    pub invariant: Pred,
    /// The ASSERTIONS clause split on top-level `or`: the state predicates,
    /// in declaration order. Empty when the clause is absent.
    pub assertions: Vec<Pred>,
    pub initialisation: Subst,
    /// Events in declaration order.
    pub events: Vec<Event>,
    /// Non-fatal observations made during resolution (e.g. an `ANY` binder
    /// ranging over an empty interval).
    pub warnings: Vec<String>,
}

impl MachineModel {
    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }

    /// Domain of a declared variable.
    pub fn domain_of(&self, var: &str) -> Option<&Domain> {
        self.variables
            .iter()
            .find(|(n, _)| n == var)
            .map(|(_, d)| d)
    }

    /// Variable names in declaration order.
    pub fn var_names(&self) -> Vec<String> {
        self.variables.iter().map(|(n, _)| n.clone()).collect()
    }
}

/// The set of event names offered by a machine, in declaration order.
pub fn interface_of(m: &MachineModel) -> Vec<String> {
    m.events.iter().map(|e| e.name.clone()).collect()
}

/// One state decomposition taken from a refinement's ASSERTIONS clause:
/// an equivalence `abstract-side <=> (sub1 or sub2 or ...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    /// Left-hand side, a predicate over abstract variables.
    pub abstract_pred: Pred,
    /// Right-hand disjuncts, predicates over concrete variables,
    /// in declaration order.
    pub substates: Vec<Pred>,
}

/// A resolved refinement with its abstraction inlined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementModel {
    pub name: String,
    /// Name of the refined machine, as written after REFINES.
    pub refines: String,
    /// The inlined abstraction. When abstract variable names clashed with
    /// concrete ones they have been renamed here with an `abs_` prefix and
    /// an equality conjunct has been added to the gluing invariant.
    pub abstraction: MachineModel,
    /// The concrete component viewed as a machine of its own: concrete
    /// variables, their typing conjuncts as INVARIANT, concrete events,
    /// and the decompositions' substates flattened into `assertions`.
    pub machine: MachineModel,
    /// The refinement's INVARIANT clause: the gluing predicate over the
    /// joint (abstract + concrete) variables, concrete typing included.
    pub gluing: Pred,
    /// Optional VARIANT expression (required when new events exist).
    pub variant: Option<super::ast::Expr>,
    /// Names of events not present in the abstraction, declaration order.
    pub new_events: Vec<String>,
    /// Parsed ASSERTIONS equivalences describing how abstract states
    /// decompose into concrete substates.
    pub decompositions: Vec<Decomposition>,
    /// Renames applied to clashing abstract variables (original -> abs_*).
    pub renamed_abstract: BTreeMap<String, String>,
}

impl RefinementModel {
    /// Joint variable list: abstract variables first, then concrete, each
    /// in declaration order. This is the quantification space of the
    /// refinement proof obligations.
    pub fn joint_variables(&self) -> Vec<(String, Domain)> {
        let mut vars = self.abstraction.variables.clone();
        vars.extend(self.machine.variables.clone());
        vars
    }
}

/// Result of parsing a single component source.
#[derive(Debug, Clone)]
pub enum Component {
    Machine(MachineModel),
    /// A refinement cannot be resolved without its abstraction; callers pass
    /// this to [`super::link_refinement`] together with the parsed
    /// abstraction (or use [`super::parse_refinement`] directly on sources).
    Refinement(RawRefinement),
}

/// Clause layout shared by machines and refinements before resolution.
#[derive(Debug, Clone)]
pub struct RawComponent {
    pub name: String,
    pub sets: Vec<(String, Vec<String>)>,
    pub variables: Vec<String>,
    pub invariant: Pred,
    pub variant: Option<super::ast::Expr>,
    pub assertions: Option<Pred>,
    pub initialisation: Subst,
    pub events: Vec<Event>,
}

/// A parsed but unresolved refinement.
#[derive(Debug, Clone)]
pub struct RawRefinement {
    pub refines: String,
    pub component: RawComponent,
}
