//! Parsing and resolution of guarded-event components.
//!
//! A component source is either a `MACHINE` or a `REFINEMENT`. Machines
//! resolve on their own via [`parse_component`]; refinements need their
//! abstraction, so they either go through [`parse_refinement`] (both
//! sources at hand) or through [`parse_component`] +
//! [`link_refinement`] (abstraction already parsed).
//!
//! All state is over finite domains: `BOOL`, declared enumerated sets, and
//! bounded integer intervals `lo..hi`. Every variable must be typed by a
//! membership conjunct `v : D` in the INVARIANT clause.

pub mod ast;
pub(crate) mod lexer;
pub mod model;
pub mod parser;
pub mod printer;
pub mod typecheck;

pub use ast::{expr_free_vars, fresh_name, Expr, Pred, SetExpr, Subst, Value};
pub use model::{
    interface_of, Component, Decomposition, Domain, Event, MachineModel, RawComponent,
    RawRefinement, RefinementModel,
};
pub use parser::{parse_component, parse_predicate};
pub use printer::{canonical, canonical_expr, compact};
pub use typecheck::{link_refinement, SymbolTable, Type};

use lexer::Span;

/// Parses a refinement source and links it against its already-resolved
/// abstraction.
pub fn parse_refinement(
    source: &str,
    abstraction: &MachineModel,
) -> Result<RefinementModel, ParseError> {
    match parse_component(source)? {
        Component::Refinement(raw) => link_refinement(raw, abstraction),
        Component::Machine(m) => Err(ParseError::NotARefinement { name: m.name }),
    }
}

/// Errors raised while lexing, parsing or resolving a component.
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("{span}: unexpected character `{ch}`")]
    UnexpectedChar { ch: char, span: Span },
    #[error("{span}: unterminated `/*` comment")]
    UnterminatedComment { span: Span },
    #[error("{span}: integer literal out of range")]
    IntegerOutOfRange { span: Span },
    #[error("{span}: expected {expected}, found {found}")]
    Unexpected {
        expected: String,
        found: String,
        span: Span,
    },
    #[error("{span}: `{word}` is a reserved word and cannot name a {what}")]
    ReservedWord {
        word: String,
        what: String,
        span: Span,
    },
    #[error("{span}: quantifier over `{var}` must open with its typing, as in `!{var}.({var} : D => ...)`")]
    QuantifierShape { var: String, span: Span },
    #[error("{span}: `{name}` is not a finite domain; only BOOL, declared enumerated sets and bounded intervals are supported")]
    NonFiniteDomain { name: String, span: Span },
    #[error("set `{name}` is declared twice")]
    DuplicateSet { name: String },
    #[error("set element `{name}` is declared twice (element names are global)")]
    DuplicateElement { name: String },
    #[error("variable `{name}` is declared twice")]
    DuplicateVariable { name: String },
    #[error("`{name}` is already declared and cannot also name a {role}")]
    Redeclared { name: String, role: String },
    #[error("unknown set `{name}`")]
    UnknownSet { name: String },
    #[error("unknown identifier `{name}` in {context}")]
    UnknownIdentifier { name: String, context: String },
    #[error("set name `{name}` used where a value is expected")]
    SetNameInExpr { name: String },
    #[error("variable `{var}` has no typing conjunct `{var} : D` in the INVARIANT clause")]
    MissingTyping { var: String },
    #[error("the typing conjunct of `{var}` must use BOOL, a declared set or an interval, not a literal subset")]
    TypingShape { var: String },
    #[error("type error in {context}: {detail}")]
    TypeMismatch { context: String, detail: String },
    #[error("INITIALISATION must assign every variable on every path; missing: {missing:?}")]
    InitialisationNotTotal { missing: Vec<String> },
    #[error("parallel branches both assign `{var}`")]
    ParallelClash { var: String },
    #[error("sequential composition `;` is not allowed inside parallel composition `||`")]
    SequenceUnderParallel,
    #[error("bound variable `{var}` shadows an existing declaration")]
    BinderShadows { var: String },
    #[error("bound variable `{var}` cannot be assigned")]
    AssignsBoundVar { var: String },
    #[error("event `{name}` is declared twice")]
    DuplicateEvent { name: String },
    #[error("`{name}` is reserved and cannot name an event")]
    ReservedEventName { name: String },
    #[error("`ANY {var}` needs a leading typing conjunct `{var} : D` in its WHERE predicate")]
    AnyBinderTyping { var: String },
    #[error("refinement refines `{expected}` but the provided abstraction is `{found}`")]
    RefinesMismatch { expected: String, found: String },
    #[error("abstract event `{name}` has no counterpart in the refinement")]
    MissingAbstractEvent { name: String },
    #[error("kept variable `{name}` is redeclared with a different domain")]
    KeptVariableRetyped { name: String },
    #[error("a refinement's ASSERTIONS clause must be a conjunction of equivalences `abstract <=> concrete-disjunction`")]
    AssertionNotEquivalence,
    #[error("the {side} side of a decomposition equivalence must use only {expected} variables")]
    AssertionSides { side: String, expected: String },
    #[error("VARIANT must be an integer expression")]
    VariantNotInt,
    #[error("machine `{name}` cannot declare a VARIANT clause")]
    VariantOnMachine { name: String },
    #[error("concrete initialisation and events cannot reference abstract variable `{name}`")]
    AbstractVarInConcrete { name: String },
    #[error("`{name}` is a machine, not a refinement")]
    NotARefinement { name: String },
}
