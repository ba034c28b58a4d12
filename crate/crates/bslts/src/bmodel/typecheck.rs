//! Identifier resolution and type checking.
//!
//! Resolution turns parser output into a self-contained model: identifiers
//! become variables or enumerated-set elements, named sets get their element
//! lists inlined, `ANY` binders get their domains extracted from the leading
//! typing conjunct of their WHERE predicate, and structural rules (total
//! initialisation, disjoint parallel frames, no sequencing inside parallel
//! composition) are enforced.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use super::ast::{Expr, Pred, SetExpr, Subst};
use super::model::{
    Decomposition, Domain, Event, MachineModel, RawComponent, RawRefinement, RefinementModel,
};
use super::ParseError;

/// The type of an expression: booleans, elements of one named set, or
/// bounded integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Type {
    Bool,
    Enum(String),
    Int,
}

impl std::fmt::Display for Type {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Type::Bool => write!(f, "BOOL"),
            Type::Enum(n) => write!(f, "{n}"),
            Type::Int => write!(f, "INTEGER"),
        }
    }
}

/// Name resolution context: variables with their domains, declared sets,
/// and the owning type of every enumerated element.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    pub vars: BTreeMap<String, Domain>,
    pub sets: BTreeMap<String, Vec<String>>,
    pub elements: BTreeMap<String, Type>,
}

impl SymbolTable {
    /// Builds the resolution context of a resolved machine.
    pub fn from_machine(m: &MachineModel) -> SymbolTable {
        let mut table = SymbolTable::default();
        for (name, elements) in &m.sets {
            table.sets.insert(name.clone(), elements.clone());
            for e in elements {
                table.elements.insert(e.clone(), Type::Enum(name.clone()));
            }
        }
        table.elements.insert("TRUE".into(), Type::Bool);
        table.elements.insert("FALSE".into(), Type::Bool);
        for (v, d) in &m.variables {
            table.vars.insert(v.clone(), d.clone());
        }
        table
    }

    /// Builds a resolution context from explicit variable and set lists
    /// (used when reloading a dumped transition system).
    pub fn from_parts(
        variables: &[(String, Domain)],
        sets: &[(String, Vec<String>)],
    ) -> SymbolTable {
        let mut table = SymbolTable::default();
        for (name, elements) in sets {
            table.sets.insert(name.clone(), elements.clone());
            for e in elements {
                table.elements.insert(e.clone(), Type::Enum(name.clone()));
            }
        }
        table.elements.insert("TRUE".into(), Type::Bool);
        table.elements.insert("FALSE".into(), Type::Bool);
        for (v, d) in variables {
            table.vars.insert(v.clone(), d.clone());
        }
        table
    }

    /// Resolves and type-checks a parsed predicate against this context.
    pub fn resolve_predicate(&self, p: &Pred) -> Result<Pred, ParseError> {
        let mut warnings = Vec::new();
        let mut r = Resolver {
            table: self,
            bound: Vec::new(),
            warnings: &mut warnings,
            context: "predicate".to_string(),
        };
        r.pred(p)
    }
}

/// Resolves a raw machine component into a full model.
pub fn resolve_machine(raw: RawComponent) -> Result<MachineModel, ParseError> {
    let mut warnings = Vec::new();

    let sets = check_set_declarations(&raw.sets, &[])?;
    let mut table = SymbolTable::default();
    for (name, elements) in &sets {
        table.sets.insert(name.clone(), elements.clone());
        for e in elements {
            table.elements.insert(e.clone(), Type::Enum(name.clone()));
        }
    }
    table.elements.insert("TRUE".into(), Type::Bool);
    table.elements.insert("FALSE".into(), Type::Bool);

    let variables = declare_variables(&raw.variables, &table)?;
    for (v, d) in extract_typings(&raw.invariant, &variables, &table)? {
        table.vars.insert(v, d);
    }

    let var_list: Vec<(String, Domain)> = raw
        .variables
        .iter()
        .map(|v| (v.clone(), table.vars[v].clone()))
        .collect();

    let invariant = {
        let mut r = Resolver {
            table: &table,
            bound: Vec::new(),
            warnings: &mut warnings,
            context: "INVARIANT".to_string(),
        };
        r.pred(&raw.invariant)?
    };

    if raw.variant.is_some() {
        return Err(ParseError::VariantOnMachine { name: raw.name });
    }

    let assertions = match &raw.assertions {
        None => Vec::new(),
        Some(p) => {
            let mut r = Resolver {
                table: &table,
                bound: Vec::new(),
                warnings: &mut warnings,
                context: "ASSERTIONS".to_string(),
            };
            let resolved = r.pred(p)?;
            resolved.disjuncts().into_iter().cloned().collect()
        }
    };

    let initialisation = {
        let mut r = Resolver {
            table: &table,
            bound: Vec::new(),
            warnings: &mut warnings,
            context: "INITIALISATION".to_string(),
        };
        r.subst(&raw.initialisation, false)?
    };
    let written = initialisation.must_write_vars();
    let missing: Vec<String> = raw
        .variables
        .iter()
        .filter(|v| !written.contains(*v))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(ParseError::InitialisationNotTotal { missing });
    }

    let mut events = Vec::new();
    let mut seen = BTreeSet::new();
    for ev in &raw.events {
        if ev.name == "INITIALISATION" {
            return Err(ParseError::ReservedEventName {
                name: ev.name.clone(),
            });
        }
        if !seen.insert(ev.name.clone()) {
            return Err(ParseError::DuplicateEvent {
                name: ev.name.clone(),
            });
        }
        if table.vars.contains_key(&ev.name) || table.elements.contains_key(&ev.name) {
            return Err(ParseError::Redeclared {
                name: ev.name.clone(),
                role: "event".to_string(),
            });
        }
        let mut r = Resolver {
            table: &table,
            bound: Vec::new(),
            warnings: &mut warnings,
            context: format!("event {}", ev.name),
        };
        let body = r.subst(&ev.body, false)?;
        events.push(Event {
            name: ev.name.clone(),
            body,
        });
    }

    Ok(MachineModel {
        name: raw.name,
        sets,
        variables: var_list,
        invariant,
        assertions,
        initialisation,
        events,
        warnings,
    })
}

/// Links a parsed refinement against its resolved abstraction.
///
/// Abstract variables whose names clash with concrete ones are renamed with
/// an `abs_` prefix throughout the abstraction, and an equality conjunct
/// between the renamed abstract variable and the concrete one is appended to
/// the gluing invariant (the refinement keeps the variable).
pub fn link_refinement(
    raw: RawRefinement,
    abstraction: &MachineModel,
) -> Result<RefinementModel, ParseError> {
    if raw.refines != abstraction.name {
        return Err(ParseError::RefinesMismatch {
            expected: raw.refines.clone(),
            found: abstraction.name.clone(),
        });
    }
    let rawc = raw.component;
    let mut warnings = Vec::new();

    // Rename clashing abstract variables.
    let concrete_names: BTreeSet<String> = rawc.variables.iter().cloned().collect();
    let mut renames = BTreeMap::new();
    for (v, _) in &abstraction.variables {
        if concrete_names.contains(v) {
            let renamed = format!("abs_{v}");
            if concrete_names.contains(&renamed)
                || abstraction.variables.iter().any(|(n, _)| *n == renamed)
            {
                return Err(ParseError::Redeclared {
                    name: renamed,
                    role: "renamed abstract variable".to_string(),
                });
            }
            renames.insert(v.clone(), renamed);
        }
    }
    let abstraction = rename_machine(abstraction, &renames);

    // Merge set declarations.
    let new_sets = check_set_declarations(&rawc.sets, &abstraction.sets)?;
    let mut sets = abstraction.sets.clone();
    sets.extend(new_sets);

    let mut base = SymbolTable::default();
    for (name, elements) in &sets {
        base.sets.insert(name.clone(), elements.clone());
        for e in elements {
            base.elements.insert(e.clone(), Type::Enum(name.clone()));
        }
    }
    base.elements.insert("TRUE".into(), Type::Bool);
    base.elements.insert("FALSE".into(), Type::Bool);

    declare_variables(&rawc.variables, &base)?;
    let mut concrete_table = base.clone();
    for (v, d) in extract_typings(&rawc.invariant, &rawc.variables, &base)? {
        concrete_table.vars.insert(v, d);
    }
    let concrete_var_list: Vec<(String, Domain)> = rawc
        .variables
        .iter()
        .map(|v| (v.clone(), concrete_table.vars[v].clone()))
        .collect();

    // A kept variable must keep its domain.
    for (orig, renamed) in &renames {
        let abs_domain = abstraction.domain_of(renamed).cloned();
        let conc_domain = concrete_table.vars.get(orig).cloned();
        if abs_domain != conc_domain {
            return Err(ParseError::KeptVariableRetyped { name: orig.clone() });
        }
    }

    let mut joint_table = concrete_table.clone();
    for (v, d) in &abstraction.variables {
        if joint_table.vars.contains_key(v) {
            return Err(ParseError::Redeclared {
                name: v.clone(),
                role: "abstract variable".to_string(),
            });
        }
        joint_table.vars.insert(v.clone(), d.clone());
    }

    // Gluing invariant over the joint space, plus kept-variable equalities.
    let mut gluing = {
        let mut r = Resolver {
            table: &joint_table,
            bound: Vec::new(),
            warnings: &mut warnings,
            context: "INVARIANT".to_string(),
        };
        r.pred(&rawc.invariant)?
    };
    if !renames.is_empty() {
        let mut conjuncts: Vec<Pred> = gluing.conjuncts().into_iter().cloned().collect();
        for (orig, renamed) in &renames {
            conjuncts.push(Pred::Eq(Expr::Var(renamed.clone()), Expr::Var(orig.clone())));
        }
        gluing = Pred::and(conjuncts);
    }

    // Decompositions: a conjunction of equivalences, abstract side on the
    // left, concrete disjunction on the right.
    let abstract_names: BTreeSet<String> =
        abstraction.variables.iter().map(|(n, _)| n.clone()).collect();
    let mut decompositions = Vec::new();
    if let Some(assertions) = &rawc.assertions {
        let resolved = {
            let mut r = Resolver {
                table: &joint_table,
                bound: Vec::new(),
                warnings: &mut warnings,
                context: "ASSERTIONS".to_string(),
            };
            r.pred(assertions)?
        };
        for conjunct in resolved.conjuncts() {
            let Pred::Iff(lhs, rhs) = conjunct else {
                return Err(ParseError::AssertionNotEquivalence);
            };
            let lhs_free = lhs.free_vars();
            let rhs_free = rhs.free_vars();
            if !lhs_free.iter().all(|v| abstract_names.contains(v)) {
                return Err(ParseError::AssertionSides {
                    side: "left".to_string(),
                    expected: "abstract".to_string(),
                });
            }
            if !rhs_free.iter().all(|v| concrete_names.contains(v)) {
                return Err(ParseError::AssertionSides {
                    side: "right".to_string(),
                    expected: "concrete".to_string(),
                });
            }
            decompositions.push(Decomposition {
                abstract_pred: lhs.as_ref().clone(),
                substates: rhs.disjuncts().into_iter().cloned().collect(),
            });
        }
    }

    // Concrete initialisation and events resolve against concrete variables
    // only; referencing an abstract variable is reported specifically.
    let resolve_concrete = |s: &Subst,
                            context: String,
                            warnings: &mut Vec<String>|
     -> Result<Subst, ParseError> {
        let mut r = Resolver {
            table: &concrete_table,
            bound: Vec::new(),
            warnings,
            context,
        };
        r.subst(s, false).map_err(|e| match e {
            ParseError::UnknownIdentifier { ref name, .. }
                if abstract_names.contains(name) || renames.contains_key(name) =>
            {
                ParseError::AbstractVarInConcrete { name: name.clone() }
            }
            other => other,
        })
    };

    let initialisation =
        resolve_concrete(&rawc.initialisation, "INITIALISATION".to_string(), &mut warnings)?;
    let written = initialisation.must_write_vars();
    let missing: Vec<String> = rawc
        .variables
        .iter()
        .filter(|v| !written.contains(*v))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(ParseError::InitialisationNotTotal { missing });
    }

    let mut events = Vec::new();
    let mut seen = BTreeSet::new();
    for ev in &rawc.events {
        if ev.name == "INITIALISATION" {
            return Err(ParseError::ReservedEventName {
                name: ev.name.clone(),
            });
        }
        if !seen.insert(ev.name.clone()) {
            return Err(ParseError::DuplicateEvent {
                name: ev.name.clone(),
            });
        }
        let body = resolve_concrete(&ev.body, format!("event {}", ev.name), &mut warnings)?;
        events.push(Event {
            name: ev.name.clone(),
            body,
        });
    }

    for abs_ev in &abstraction.events {
        if !events.iter().any(|e| e.name == abs_ev.name) {
            return Err(ParseError::MissingAbstractEvent {
                name: abs_ev.name.clone(),
            });
        }
    }
    let new_events: Vec<String> = events
        .iter()
        .filter(|e| abstraction.event(&e.name).is_none())
        .map(|e| e.name.clone())
        .collect();

    let variant = match &rawc.variant {
        None => None,
        Some(v) => {
            let mut r = Resolver {
                table: &concrete_table,
                bound: Vec::new(),
                warnings: &mut warnings,
                context: "VARIANT".to_string(),
            };
            let (e, t) = r.expr(v)?;
            if t != Type::Int {
                return Err(ParseError::VariantNotInt);
            }
            Some(e)
        }
    };

    // The concrete component viewed as a machine of its own. Its INVARIANT
    // field carries only the concrete typing conjuncts: the full concrete
    // invariant is the projection of the joint invariant, which the
    // projection machinery computes by quantifier elimination.
    let typing_invariant = Pred::and(
        concrete_var_list
            .iter()
            .map(|(v, d)| Pred::Member(Expr::Var(v.clone()), d.to_set_expr()))
            .collect(),
    );
    let flat_substates: Vec<Pred> = decompositions
        .iter()
        .flat_map(|d| d.substates.iter().cloned())
        .collect();
    let machine = MachineModel {
        name: rawc.name.clone(),
        sets: sets.clone(),
        variables: concrete_var_list,
        invariant: typing_invariant,
        assertions: flat_substates,
        initialisation,
        events,
        warnings: warnings.clone(),
    };

    Ok(RefinementModel {
        name: rawc.name,
        refines: raw.refines,
        abstraction,
        machine,
        gluing,
        variant,
        new_events,
        decompositions,
        renamed_abstract: renames,
    })
}

fn rename_machine(m: &MachineModel, renames: &BTreeMap<String, String>) -> MachineModel {
    if renames.is_empty() {
        return m.clone();
    }
    MachineModel {
        name: m.name.clone(),
        sets: m.sets.clone(),
        variables: m
            .variables
            .iter()
            .map(|(v, d)| {
                (
                    renames.get(v).cloned().unwrap_or_else(|| v.clone()),
                    d.clone(),
                )
            })
            .collect(),
        invariant: m.invariant.rename_vars(renames),
        assertions: m
            .assertions
            .iter()
            .map(|p| p.rename_vars(renames))
            .collect(),
        initialisation: m.initialisation.rename_vars(renames),
        events: m
            .events
            .iter()
            .map(|e| Event {
                name: e.name.clone(),
                body: e.body.rename_vars(renames),
            })
            .collect(),
        warnings: m.warnings.clone(),
    }
}

fn check_set_declarations(
    declared: &[(String, Vec<String>)],
    existing: &[(String, Vec<String>)],
) -> Result<Vec<(String, Vec<String>)>, ParseError> {
    let mut set_names: BTreeSet<String> =
        existing.iter().map(|(n, _)| n.clone()).collect();
    let mut element_names: BTreeSet<String> = existing
        .iter()
        .flat_map(|(_, es)| es.iter().cloned())
        .collect();
    element_names.insert("TRUE".into());
    element_names.insert("FALSE".into());
    set_names.insert("BOOL".into());

    let mut out = Vec::new();
    for (name, elements) in declared {
        if !set_names.insert(name.clone()) {
            return Err(ParseError::DuplicateSet { name: name.clone() });
        }
        for e in elements {
            if !element_names.insert(e.clone()) {
                return Err(ParseError::DuplicateElement { name: e.clone() });
            }
        }
        out.push((name.clone(), elements.clone()));
    }
    // Set names and element names must not collide either.
    for (name, _) in declared {
        if element_names.contains(name) {
            return Err(ParseError::Redeclared {
                name: name.clone(),
                role: "set".to_string(),
            });
        }
    }
    Ok(out)
}

fn declare_variables(
    variables: &[String],
    table: &SymbolTable,
) -> Result<Vec<String>, ParseError> {
    let mut seen = BTreeSet::new();
    for v in variables {
        if !seen.insert(v.clone()) {
            return Err(ParseError::DuplicateVariable { name: v.clone() });
        }
        if table.sets.contains_key(v) || table.elements.contains_key(v) || v == "BOOL" {
            return Err(ParseError::Redeclared {
                name: v.clone(),
                role: "variable".to_string(),
            });
        }
    }
    Ok(variables.to_vec())
}

/// Scans the top-level conjuncts of an unresolved invariant for typing
/// conjuncts `v : D` and returns the domain of every declared variable.
fn extract_typings(
    invariant: &Pred,
    variables: &[String],
    table: &SymbolTable,
) -> Result<Vec<(String, Domain)>, ParseError> {
    let mut out: BTreeMap<String, Domain> = BTreeMap::new();
    for conjunct in invariant.conjuncts() {
        if let Pred::Member(Expr::Ident(v), s) = conjunct {
            if variables.contains(v) && !out.contains_key(v) {
                let domain = match s {
                    SetExpr::Bool => Domain::Bool,
                    SetExpr::Named { name, .. } => {
                        let elements = table.sets.get(name).ok_or_else(|| {
                            ParseError::UnknownSet { name: name.clone() }
                        })?;
                        Domain::Enum {
                            name: name.clone(),
                            elements: elements.clone(),
                        }
                    }
                    SetExpr::Interval(lo, hi) => Domain::Interval(*lo, *hi),
                    SetExpr::Literal(_) => {
                        return Err(ParseError::TypingShape { var: v.clone() })
                    }
                };
                out.insert(v.clone(), domain);
            }
        }
    }
    let missing: Vec<String> = variables
        .iter()
        .filter(|v| !out.contains_key(*v))
        .cloned()
        .collect();
    if let Some(var) = missing.into_iter().next() {
        return Err(ParseError::MissingTyping { var });
    }
    Ok(out.into_iter().collect())
}

struct Resolver<'a> {
    table: &'a SymbolTable,
    bound: Vec<(String, Type)>,
    warnings: &'a mut Vec<String>,
    context: String,
}

impl<'a> Resolver<'a> {
    fn lookup_bound(&self, name: &str) -> Option<&Type> {
        self.bound
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    fn var_type(&self, domain: &Domain) -> Type {
        match domain {
            Domain::Bool => Type::Bool,
            Domain::Enum { name, .. } => Type::Enum(name.clone()),
            Domain::Interval(..) => Type::Int,
        }
    }

    fn pred(&mut self, p: &Pred) -> Result<Pred, ParseError> {
        match p {
            Pred::True => Ok(Pred::True),
            Pred::False => Ok(Pred::False),
            Pred::Not(q) => Ok(Pred::not(self.pred(q)?)),
            Pred::And(ps) => Ok(Pred::And(
                ps.iter().map(|q| self.pred(q)).collect::<Result<_, _>>()?,
            )),
            Pred::Or(ps) => Ok(Pred::Or(
                ps.iter().map(|q| self.pred(q)).collect::<Result<_, _>>()?,
            )),
            Pred::Implies(a, b) => Ok(Pred::implies(self.pred(a)?, self.pred(b)?)),
            Pred::Iff(a, b) => Ok(Pred::iff(self.pred(a)?, self.pred(b)?)),
            Pred::Eq(l, r) => {
                let (l, r) = self.same_type_pair(l, r, "=")?;
                Ok(Pred::Eq(l, r))
            }
            Pred::Neq(l, r) => {
                let (l, r) = self.same_type_pair(l, r, "/=")?;
                Ok(Pred::Neq(l, r))
            }
            Pred::Less(l, r) => {
                let (l, r) = self.int_pair(l, r, "<")?;
                Ok(Pred::Less(l, r))
            }
            Pred::Leq(l, r) => {
                let (l, r) = self.int_pair(l, r, "<=")?;
                Ok(Pred::Leq(l, r))
            }
            Pred::Greater(l, r) => {
                let (l, r) = self.int_pair(l, r, ">")?;
                Ok(Pred::Greater(l, r))
            }
            Pred::Geq(l, r) => {
                let (l, r) = self.int_pair(l, r, ">=")?;
                Ok(Pred::Geq(l, r))
            }
            Pred::Member(e, s) => {
                let (e, et) = self.expr(e)?;
                let (s, st) = self.set(s)?;
                if et != st {
                    return Err(self.type_mismatch(&format!(
                        "membership `:` relates a {et} expression to a {st} set"
                    )));
                }
                Ok(Pred::Member(e, s))
            }
            Pred::Forall { var, domain, body } => {
                let (domain, body) = self.quantified(var, domain, body)?;
                Ok(Pred::Forall {
                    var: var.clone(),
                    domain,
                    body: Box::new(body),
                })
            }
            Pred::Exists { var, domain, body } => {
                let (domain, body) = self.quantified(var, domain, body)?;
                Ok(Pred::Exists {
                    var: var.clone(),
                    domain,
                    body: Box::new(body),
                })
            }
        }
    }

    fn quantified(
        &mut self,
        var: &str,
        domain: &SetExpr,
        body: &Pred,
    ) -> Result<(SetExpr, Pred), ParseError> {
        self.check_binder(var)?;
        let (domain, dt) = self.set(domain)?;
        if let Some(values) = domain.known_elements() {
            if values.is_empty() {
                self.warnings.push(format!(
                    "{}: bound variable `{var}` ranges over an empty domain",
                    self.context
                ));
            }
        }
        self.bound.push((var.to_string(), dt));
        let body = self.pred(body);
        self.bound.pop();
        Ok((domain, body?))
    }

    fn check_binder(&self, var: &str) -> Result<(), ParseError> {
        if self.table.vars.contains_key(var)
            || self.table.sets.contains_key(var)
            || self.table.elements.contains_key(var)
            || self.lookup_bound(var).is_some()
        {
            return Err(ParseError::BinderShadows {
                var: var.to_string(),
            });
        }
        Ok(())
    }

    fn same_type_pair(
        &mut self,
        l: &Expr,
        r: &Expr,
        op: &str,
    ) -> Result<(Expr, Expr), ParseError> {
        let (l, lt) = self.expr(l)?;
        let (r, rt) = self.expr(r)?;
        if lt != rt {
            return Err(self.type_mismatch(&format!(
                "`{op}` compares a {lt} expression with a {rt} expression"
            )));
        }
        Ok((l, r))
    }

    fn int_pair(&mut self, l: &Expr, r: &Expr, op: &str) -> Result<(Expr, Expr), ParseError> {
        let (l, lt) = self.expr(l)?;
        let (r, rt) = self.expr(r)?;
        if lt != Type::Int || rt != Type::Int {
            return Err(self.type_mismatch(&format!("`{op}` requires integer operands")));
        }
        Ok((l, r))
    }

    fn type_mismatch(&self, detail: &str) -> ParseError {
        ParseError::TypeMismatch {
            context: self.context.clone(),
            detail: detail.to_string(),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<(Expr, Type), ParseError> {
        match e {
            Expr::Ident(n) => {
                if let Some(t) = self.lookup_bound(n) {
                    return Ok((Expr::Var(n.clone()), t.clone()));
                }
                if let Some(d) = self.table.vars.get(n) {
                    return Ok((Expr::Var(n.clone()), self.var_type(d)));
                }
                if let Some(t) = self.table.elements.get(n) {
                    return Ok((Expr::EnumLit(n.clone()), t.clone()));
                }
                if self.table.sets.contains_key(n) || n == "BOOL" {
                    return Err(ParseError::SetNameInExpr { name: n.clone() });
                }
                Err(ParseError::UnknownIdentifier {
                    name: n.clone(),
                    context: self.context.clone(),
                })
            }
            Expr::Var(n) => {
                // Already-resolved input (predicates re-entering resolution).
                if let Some(t) = self.lookup_bound(n) {
                    return Ok((Expr::Var(n.clone()), t.clone()));
                }
                match self.table.vars.get(n) {
                    Some(d) => Ok((Expr::Var(n.clone()), self.var_type(d))),
                    None => Err(ParseError::UnknownIdentifier {
                        name: n.clone(),
                        context: self.context.clone(),
                    }),
                }
            }
            Expr::Primed(n) => match self.table.vars.get(n) {
                Some(d) => Ok((Expr::Primed(n.clone()), self.var_type(d))),
                None => Err(ParseError::UnknownIdentifier {
                    name: format!("{n}$1"),
                    context: self.context.clone(),
                }),
            },
            Expr::EnumLit(n) => match self.table.elements.get(n) {
                Some(t) => Ok((Expr::EnumLit(n.clone()), t.clone())),
                None => Err(ParseError::UnknownIdentifier {
                    name: n.clone(),
                    context: self.context.clone(),
                }),
            },
            Expr::Int(v) => Ok((Expr::Int(*v), Type::Int)),
            Expr::Add(l, r) => {
                let (l, r) = self.int_pair(l, r, "+")?;
                Ok((Expr::Add(Box::new(l), Box::new(r)), Type::Int))
            }
            Expr::Sub(l, r) => {
                let (l, r) = self.int_pair(l, r, "-")?;
                Ok((Expr::Sub(Box::new(l), Box::new(r)), Type::Int))
            }
            Expr::BoolOf(p) => {
                let p = self.pred(p)?;
                Ok((Expr::BoolOf(Box::new(p)), Type::Bool))
            }
        }
    }

    fn set(&mut self, s: &SetExpr) -> Result<(SetExpr, Type), ParseError> {
        match s {
            SetExpr::Bool => Ok((SetExpr::Bool, Type::Bool)),
            SetExpr::Named { name, .. } => {
                let elements = self
                    .table
                    .sets
                    .get(name)
                    .ok_or_else(|| ParseError::UnknownSet { name: name.clone() })?;
                Ok((
                    SetExpr::Named {
                        name: name.clone(),
                        elements: elements.clone(),
                    },
                    Type::Enum(name.clone()),
                ))
            }
            SetExpr::Literal(es) => {
                let mut ty: Option<Type> = None;
                for e in es {
                    let et = self.table.elements.get(e).cloned().ok_or_else(|| {
                        ParseError::UnknownIdentifier {
                            name: e.clone(),
                            context: self.context.clone(),
                        }
                    })?;
                    match &ty {
                        None => ty = Some(et),
                        Some(t) if *t == et => {}
                        Some(t) => {
                            return Err(self.type_mismatch(&format!(
                                "set literal mixes {t} and {et} elements"
                            )))
                        }
                    }
                }
                let ty = ty.ok_or_else(|| {
                    self.type_mismatch("set literal must not be empty")
                })?;
                Ok((SetExpr::Literal(es.clone()), ty))
            }
            SetExpr::Interval(lo, hi) => Ok((SetExpr::Interval(*lo, *hi), Type::Int)),
        }
    }

    fn subst(&mut self, s: &Subst, under_parallel: bool) -> Result<Subst, ParseError> {
        match s {
            Subst::Skip => Ok(Subst::Skip),
            Subst::Assign(x, e) => {
                if self.lookup_bound(x).is_some() {
                    return Err(ParseError::AssignsBoundVar { var: x.clone() });
                }
                let xd = self
                    .table
                    .vars
                    .get(x)
                    .ok_or_else(|| ParseError::UnknownIdentifier {
                        name: x.clone(),
                        context: self.context.clone(),
                    })?
                    .clone();
                let (e, et) = self.expr(e)?;
                let xt = self.var_type(&xd);
                if et != xt {
                    return Err(self.type_mismatch(&format!(
                        "`{x} :=` assigns a {et} expression to a {xt} variable"
                    )));
                }
                Ok(Subst::Assign(x.clone(), e))
            }
            Subst::ChooseIn(x, set) => {
                if self.lookup_bound(x).is_some() {
                    return Err(ParseError::AssignsBoundVar { var: x.clone() });
                }
                let xd = self
                    .table
                    .vars
                    .get(x)
                    .ok_or_else(|| ParseError::UnknownIdentifier {
                        name: x.clone(),
                        context: self.context.clone(),
                    })?
                    .clone();
                let (set, st) = self.set(set)?;
                let xt = self.var_type(&xd);
                if st != xt {
                    return Err(self.type_mismatch(&format!(
                        "`{x} ::` draws from a {st} set for a {xt} variable"
                    )));
                }
                if let Some(values) = set.known_elements() {
                    if values.is_empty() {
                        self.warnings.push(format!(
                            "{}: `{x} ::` draws from an empty set (never feasible)",
                            self.context
                        ));
                    }
                }
                Ok(Subst::ChooseIn(x.clone(), set))
            }
            Subst::Parallel(parts) => {
                let resolved: Vec<Subst> = parts
                    .iter()
                    .map(|p| self.subst(p, true))
                    .collect::<Result<_, _>>()?;
                let mut written = BTreeSet::new();
                for p in &resolved {
                    for v in p.written_vars() {
                        if !written.insert(v.clone()) {
                            return Err(ParseError::ParallelClash { var: v });
                        }
                    }
                }
                Ok(Subst::Parallel(resolved))
            }
            Subst::Sequence(parts) => {
                if under_parallel {
                    return Err(ParseError::SequenceUnderParallel);
                }
                Ok(Subst::Sequence(
                    parts
                        .iter()
                        .map(|p| self.subst(p, false))
                        .collect::<Result<_, _>>()?,
                ))
            }
            Subst::If { cond, then, els } => Ok(Subst::If {
                cond: self.pred(cond)?,
                then: Box::new(self.subst(then, under_parallel)?),
                els: Box::new(self.subst(els, under_parallel)?),
            }),
            Subst::Select(branches) => Ok(Subst::Select(
                branches
                    .iter()
                    .map(|(g, b)| Ok((self.pred(g)?, self.subst(b, under_parallel)?)))
                    .collect::<Result<_, ParseError>>()?,
            )),
            Subst::Choice(arms) => Ok(Subst::Choice(
                arms.iter()
                    .map(|a| self.subst(a, under_parallel))
                    .collect::<Result<_, _>>()?,
            )),
            Subst::Any {
                var,
                constraint,
                body,
                ..
            } => {
                self.check_binder(var)?;
                // The first conjunct of the constraint must type the binder.
                let conjuncts = constraint.conjuncts();
                let domain = match conjuncts.first() {
                    Some(Pred::Member(Expr::Ident(v), s)) if v == var => s.clone(),
                    Some(Pred::Member(Expr::Var(v), s)) if v == var => s.clone(),
                    _ => {
                        return Err(ParseError::AnyBinderTyping { var: var.clone() })
                    }
                };
                let (domain, dt) = self.set(&domain)?;
                if let Some(values) = domain.known_elements() {
                    if values.is_empty() {
                        self.warnings.push(format!(
                            "{}: `ANY {var}` ranges over an empty domain (never feasible)",
                            self.context
                        ));
                    }
                }
                self.bound.push((var.clone(), dt));
                let constraint = self.pred(constraint);
                let body = constraint.and_then(|c| {
                    self.subst(body, under_parallel).map(|b| (c, b))
                });
                self.bound.pop();
                let (constraint, body) = body?;
                Ok(Subst::Any {
                    var: var.clone(),
                    domain,
                    constraint,
                    body: Box::new(body),
                })
            }
        }
    }
}
