//! Brute-force semantic oracle.
//!
//! This module recomputes, by explicit enumeration of concrete states, the
//! two sides of the trace/path correspondence:
//!
//! * **Traces** of a machine — event sequences executable in the relational
//!   semantics of the raw substitutions. Execution here never consults the
//!   predicate-transformer calculus or the prover: an event is enabled at a
//!   state exactly when its body has at least one execution, and blocked
//!   guards simply produce no successors.
//! * **Paths** of a labelled transition system — event sequences realizable
//!   by legal crossings: a crossing of a transition `E -e-> F` with labels
//!   `D`, `A` from concrete `x1` to `x2` requires `x1` to satisfy the source
//!   interpretation together with `D` and `A`, `x2` to be an execution of
//!   the event's action at `x1`, and `x2` to satisfy the target
//!   interpretation.
//!
//! Comparing the two per sequence length gives an independent check of the
//! generator: on a sound and complete system the sets coincide at every
//! depth. Enumeration is exhaustive over the finite domains, so the oracle
//! is only meant for small models.

use std::collections::{BTreeMap, BTreeSet};

use crate::bmodel::{MachineModel, Pred, SetExpr, Subst, Value};
use crate::prover::{evaluate, eval_expr, ProverError, Valuation};
use crate::sltsgen::{Slts, INIT_EVENT};
use crate::wpcalc::normalize_event;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Eval(#[from] ProverError),
    #[error("oracle: set expression has no enumerable elements")]
    UnresolvedSet,
    #[error("oracle: transition system references event `{name}` missing from the machine")]
    UnknownEvent { name: String },
    #[error("oracle: transition system references state `{name}` missing from its state list")]
    UnknownState { name: String },
}

// ----------------------------------------------------------------------
// Relational execution of substitutions
// ----------------------------------------------------------------------

fn set_elements(s: &SetExpr) -> Result<Vec<Value>, OracleError> {
    s.known_elements().ok_or(OracleError::UnresolvedSet)
}

/// Executes a substitution at a pre-state, returning the set of write maps
/// (variable -> new value) of its possible executions. An empty set means
/// the substitution is blocked (infeasible) at this state.
pub fn exec_updates(s: &Subst, pre: &Valuation) -> Result<BTreeSet<Valuation>, OracleError> {
    match s {
        Subst::Skip => Ok(BTreeSet::from([Valuation::new()])),
        Subst::Assign(x, e) => {
            let value = eval_expr(e, pre)?;
            Ok(BTreeSet::from([Valuation::from([(x.clone(), value)])]))
        }
        Subst::ChooseIn(x, dom) => {
            let mut out = BTreeSet::new();
            for value in set_elements(dom)? {
                out.insert(Valuation::from([(x.clone(), value)]));
            }
            Ok(out)
        }
        Subst::Parallel(ss) => {
            // Frames are disjoint (enforced at resolution), so merging the
            // write maps of the operands cannot clash.
            let mut acc: BTreeSet<Valuation> = BTreeSet::from([Valuation::new()]);
            for operand in ss {
                let updates = exec_updates(operand, pre)?;
                let mut next = BTreeSet::new();
                for partial in &acc {
                    for u in &updates {
                        let mut merged = partial.clone();
                        merged.extend(u.clone());
                        next.insert(merged);
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        Subst::Sequence(ss) => {
            // Writes of later operands override earlier ones; intermediate
            // states feed the evaluation of later operands.
            let mut acc: BTreeSet<Valuation> = BTreeSet::from([Valuation::new()]);
            for operand in ss {
                let mut next = BTreeSet::new();
                for partial in &acc {
                    let mut mid = pre.clone();
                    mid.extend(partial.clone());
                    for u in exec_updates(operand, &mid)? {
                        let mut merged = partial.clone();
                        merged.extend(u);
                        next.insert(merged);
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        Subst::If { cond, then, els } => {
            if evaluate(cond, pre)? {
                exec_updates(then, pre)
            } else {
                exec_updates(els, pre)
            }
        }
        Subst::Select(branches) => {
            let mut out = BTreeSet::new();
            for (guard, body) in branches {
                if evaluate(guard, pre)? {
                    out.extend(exec_updates(body, pre)?);
                }
            }
            Ok(out)
        }
        Subst::Choice(branches) => {
            let mut out = BTreeSet::new();
            for body in branches {
                out.extend(exec_updates(body, pre)?);
            }
            Ok(out)
        }
        Subst::Any {
            var,
            domain,
            constraint,
            body,
        } => {
            let mut out = BTreeSet::new();
            for value in set_elements(domain)? {
                let mut extended = pre.clone();
                extended.insert(var.clone(), value);
                if evaluate(constraint, &extended)? {
                    // The binder cannot be written (enforced at resolution),
                    // so the updates never mention it.
                    out.extend(exec_updates(body, &extended)?);
                }
            }
            Ok(out)
        }
    }
}

/// Full post-states of executing a substitution at a pre-state. Empty means
/// blocked: relational non-emptiness is what "the guard holds" means here.
pub fn successors(pre: &Valuation, body: &Subst) -> Result<BTreeSet<Valuation>, OracleError> {
    let mut out = BTreeSet::new();
    for update in exec_updates(body, pre)? {
        let mut post = pre.clone();
        post.extend(update);
        out.insert(post);
    }
    Ok(out)
}

/// Every valuation of the given variables, first variable varying slowest.
pub fn all_valuations(vars: &[(String, crate::bmodel::Domain)]) -> Vec<Valuation> {
    let mut out = vec![Valuation::new()];
    for (name, domain) in vars {
        let mut next = Vec::new();
        for partial in &out {
            for value in domain.values() {
                let mut v = partial.clone();
                v.insert(name.clone(), value);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// All states reachable by the initialisation, from any pre-valuation (the
/// initialisation writes every variable, but enumerating pre-states keeps
/// the semantics honest even where expressions read them).
pub fn initial_states(m: &MachineModel) -> Result<BTreeSet<Valuation>, OracleError> {
    let mut out = BTreeSet::new();
    for pre in all_valuations(&m.variables) {
        out.extend(successors(&pre, &m.initialisation)?);
    }
    Ok(out)
}

// ----------------------------------------------------------------------
// Trace enumeration
// ----------------------------------------------------------------------

/// One concrete run: `events[0]` is always `INITIALISATION`, and `states[i]`
/// is the state reached after `events[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteTrace {
    pub events: Vec<String>,
    pub states: Vec<Valuation>,
}

/// All traces of a machine up to a length, grouped by length. Each sequence
/// maps to one representative concrete run.
#[derive(Debug, Clone, Default)]
pub struct TraceSummary {
    pub per_length: BTreeMap<usize, BTreeMap<Vec<String>, ConcreteTrace>>,
}

impl TraceSummary {
    /// Event sequences of exactly the given length.
    pub fn sequences(&self, len: usize) -> BTreeSet<Vec<String>> {
        self.per_length
            .get(&len)
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default()
    }
}

/// Enumerates every executable event sequence of length `1..=max_len`
/// (length counts the leading `INITIALISATION`).
pub fn enumerate_traces(m: &MachineModel, max_len: usize) -> Result<TraceSummary, OracleError> {
    let mut summary = TraceSummary::default();
    if max_len == 0 {
        return Ok(summary);
    }

    // Sequence -> end state -> a representative run reaching it.
    let mut frontier: BTreeMap<Vec<String>, BTreeMap<Valuation, ConcreteTrace>> = BTreeMap::new();
    let init_seq = vec![INIT_EVENT.to_string()];
    let mut init_ends: BTreeMap<Valuation, ConcreteTrace> = BTreeMap::new();
    for post in initial_states(m)? {
        init_ends.insert(
            post.clone(),
            ConcreteTrace {
                events: init_seq.clone(),
                states: vec![post],
            },
        );
    }
    if !init_ends.is_empty() {
        frontier.insert(init_seq, init_ends);
    }
    summary.per_length.insert(1, representatives(&frontier));

    for depth in 2..=max_len {
        let mut next: BTreeMap<Vec<String>, BTreeMap<Valuation, ConcreteTrace>> = BTreeMap::new();
        for (seq, ends) in &frontier {
            for event in &m.events {
                let mut new_ends: BTreeMap<Valuation, ConcreteTrace> = BTreeMap::new();
                for (end, run) in ends {
                    for post in successors(end, &event.body)? {
                        new_ends.entry(post.clone()).or_insert_with(|| {
                            let mut extended = run.clone();
                            extended.events.push(event.name.clone());
                            extended.states.push(post.clone());
                            extended
                        });
                    }
                }
                if !new_ends.is_empty() {
                    let mut new_seq = seq.clone();
                    new_seq.push(event.name.clone());
                    next.insert(new_seq, new_ends);
                }
            }
        }
        frontier = next;
        summary.per_length.insert(depth, representatives(&frontier));
    }
    Ok(summary)
}

fn representatives<E, W: Clone>(
    frontier: &BTreeMap<Vec<String>, BTreeMap<E, W>>,
) -> BTreeMap<Vec<String>, W> {
    frontier
        .iter()
        .filter_map(|(seq, ends)| {
            ends.values()
                .next()
                .map(|witness| (seq.clone(), witness.clone()))
        })
        .collect()
}

// ----------------------------------------------------------------------
// Path enumeration
// ----------------------------------------------------------------------

/// One realized path: `states[i]` is the symbolic state and `valuations[i]`
/// the concrete state after `events[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicPathWitness {
    pub events: Vec<String>,
    pub states: Vec<String>,
    pub valuations: Vec<Valuation>,
}

/// All realizable paths of a transition system up to a length, grouped by
/// length. Each sequence maps to one representative realization.
#[derive(Debug, Clone, Default)]
pub struct PathSummary {
    pub per_length: BTreeMap<usize, BTreeMap<Vec<String>, SymbolicPathWitness>>,
}

impl PathSummary {
    /// Event sequences of exactly the given length.
    pub fn sequences(&self, len: usize) -> BTreeSet<Vec<String>> {
        self.per_length
            .get(&len)
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default()
    }
}

/// Enumerates every event sequence of length `1..=max_len` realizable as a
/// chain of legal crossings in the transition system. The machine supplies
/// the event bodies; crossings execute the event's action (its normalized
/// body) and check the stored `D`/`A` labels and interpretations.
pub fn enumerate_paths(
    slts: &Slts,
    m: &MachineModel,
    max_len: usize,
) -> Result<PathSummary, OracleError> {
    let mut summary = PathSummary::default();
    if max_len == 0 {
        return Ok(summary);
    }

    // Action of each event. The initialisation acts as a pseudo-event whose
    // action is the raw initialisation body (its guard is `true`).
    let mut actions: BTreeMap<String, Subst> = BTreeMap::new();
    actions.insert(INIT_EVENT.to_string(), m.initialisation.clone());
    for event in &m.events {
        actions.insert(event.name.clone(), normalize_event(&event.body).action);
    }

    let mut interpretation: BTreeMap<&str, &Pred> = BTreeMap::new();
    for state in &slts.states {
        interpretation.insert(state.name.as_str(), &state.interpretation);
    }

    let action_of = |name: &str| -> Result<&Subst, OracleError> {
        actions.get(name).ok_or_else(|| OracleError::UnknownEvent {
            name: name.to_string(),
        })
    };
    let interp_of = |name: &str| -> Result<&Pred, OracleError> {
        interpretation
            .get(name)
            .copied()
            .ok_or_else(|| OracleError::UnknownState {
                name: name.to_string(),
            })
    };

    // Sequence -> (symbolic state, concrete state) -> representative path.
    type Node = (String, Valuation);
    let mut frontier: BTreeMap<Vec<String>, BTreeMap<Node, SymbolicPathWitness>> = BTreeMap::new();

    // First crossing, out of the initial pseudo-state: its interpretation
    // is `true`, so the pre-state ranges over the whole space.
    for t in slts.transitions.iter().filter(|t| t.from == slts.initial) {
        let action = action_of(&t.event)?;
        let target = interp_of(&t.to)?;
        let seq = vec![t.event.clone()];
        for pre in all_valuations(&m.variables) {
            if !(evaluate(&t.d, &pre)? && evaluate(&t.a, &pre)?) {
                continue;
            }
            for post in successors(&pre, action)? {
                if !evaluate(target, &post)? {
                    continue;
                }
                let node = (t.to.clone(), post.clone());
                frontier
                    .entry(seq.clone())
                    .or_default()
                    .entry(node)
                    .or_insert_with(|| SymbolicPathWitness {
                        events: seq.clone(),
                        states: vec![t.to.clone()],
                        valuations: vec![post.clone()],
                    });
            }
        }
    }
    summary.per_length.insert(1, representatives(&frontier));

    for depth in 2..=max_len {
        let mut next: BTreeMap<Vec<String>, BTreeMap<Node, SymbolicPathWitness>> = BTreeMap::new();
        for (seq, nodes) in &frontier {
            for t in &slts.transitions {
                let action = action_of(&t.event)?;
                let target = interp_of(&t.to)?;
                for ((state, x), path) in nodes {
                    if state != &t.from {
                        continue;
                    }
                    // `x` satisfies the source interpretation by
                    // construction; the crossing additionally needs D and A.
                    if !(evaluate(&t.d, x)? && evaluate(&t.a, x)?) {
                        continue;
                    }
                    for post in successors(x, action)? {
                        if !evaluate(target, &post)? {
                            continue;
                        }
                        let mut new_seq = seq.clone();
                        new_seq.push(t.event.clone());
                        let node = (t.to.clone(), post.clone());
                        next.entry(new_seq.clone())
                            .or_default()
                            .entry(node)
                            .or_insert_with(|| {
                                let mut extended = path.clone();
                                extended.events.push(t.event.clone());
                                extended.states.push(t.to.clone());
                                extended.valuations.push(post.clone());
                                extended
                            });
                    }
                }
            }
        }
        frontier = next;
        summary.per_length.insert(depth, representatives(&frontier));
    }
    Ok(summary)
}

// ----------------------------------------------------------------------
// Equality check
// ----------------------------------------------------------------------

/// Which enumeration contains the diverging sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Traces,
    Paths,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Traces => write!(f, "traces"),
            Side::Paths => write!(f, "paths"),
        }
    }
}

/// The smallest witness that the two enumerations differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub depth: usize,
    pub sequence: Vec<String>,
    /// The side the sequence occurs on (it is absent from the other).
    pub present_in: Side,
}

/// Result of comparing traces against paths depth by depth.
#[derive(Debug, Clone)]
pub struct EqualityReport {
    pub depth_checked: usize,
    pub equal: bool,
    /// Smallest depth, then lexicographically smallest sequence, at which
    /// the sides differ.
    pub divergence: Option<Divergence>,
    /// Number of distinct sequences per length, on each side.
    pub trace_counts: BTreeMap<usize, usize>,
    pub path_counts: BTreeMap<usize, usize>,
}

/// Compares the machine's traces with the transition system's paths at
/// every length up to `max_len`.
pub fn check_trace_path_equality(
    m: &MachineModel,
    slts: &Slts,
    max_len: usize,
) -> Result<EqualityReport, OracleError> {
    let traces = enumerate_traces(m, max_len)?;
    let paths = enumerate_paths(slts, m, max_len)?;

    let mut trace_counts = BTreeMap::new();
    let mut path_counts = BTreeMap::new();
    let mut divergence = None;
    for depth in 1..=max_len {
        let t = traces.sequences(depth);
        let p = paths.sequences(depth);
        trace_counts.insert(depth, t.len());
        path_counts.insert(depth, p.len());
        if divergence.is_none() && t != p {
            // The union is sorted, so the first sequence present on exactly
            // one side is the lexicographically smallest difference.
            let diff = t
                .union(&p)
                .find(|seq| t.contains(*seq) != p.contains(*seq))
                .expect("sets differ");
            divergence = Some(Divergence {
                depth,
                sequence: diff.clone(),
                present_in: if t.contains(diff) {
                    Side::Traces
                } else {
                    Side::Paths
                },
            });
        }
    }
    Ok(EqualityReport {
        depth_checked: max_len,
        equal: divergence.is_none(),
        divergence,
        trace_counts,
        path_counts,
    })
}
