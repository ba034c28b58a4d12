//! Symbolic labelled transition system generation.
//!
//! The states come from the machine's ASSERTIONS clause: each disjunct `P_i`
//! becomes a state interpreted as `P_i ∧ I`, plus one initial pseudo-state
//! interpreted as `true`. A completeness obligation `I ⇒ P_1 ∨ … ∨ P_n`
//! guards the construction.
//!
//! Transitions are classified per (source, event, target) triple through a
//! cascade of proof obligations:
//!
//! 1. the guard holds everywhere in the source → `D = true`;
//! 2. the guard holds nowhere in the source → no transition;
//! 3. otherwise `D = Guard(e)`, tagged by-proof when the prover shows the
//!    guard satisfiable in the source (strict mode), by-default otherwise;
//! 4. every guarded source valuation can reach the target → `A = true`;
//! 5. no execution from the source lands in the target → no transition;
//! 6. otherwise `A = ⟨Action(e)⟩𝓘(F)`, tagged by-proof or by-default as
//!    with the guard.
//!
//! `Unknown` verdicts never eliminate: they fall through to the by-default
//! branches, which is what makes the construction sound under any budget.
//! Every decided obligation lands in the ledger, and minimality holds
//! exactly when nothing was labelled by default and no elimination rests on
//! an external assumption.

use std::collections::{BTreeSet, VecDeque};

use crate::bmodel::{compact, interface_of, Domain, Event, MachineModel, Pred};
use crate::prover::{
    decide, format_valuation, AssumptionTable, Outcome, PoKind, ProofObligation, ProverError,
    Valuation, Verdict,
};
use crate::wpcalc::{conjugate_wp, normalize_event, simplify, wp, NormalizedEvent};

/// Name of the initial pseudo-state.
pub const INIT_STATE: &str = "Init";
/// Name of the initialisation pseudo-event.
pub const INIT_EVENT: &str = "INITIALISATION";

/// How inconclusive satisfiability checks are treated during labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Steps 3 and 6 are skipped: computed labels are always by-default.
    Default,
    /// Steps 3 and 6 run: computed labels are by-proof when the prover
    /// confirms them satisfiable.
    #[default]
    Strict,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Default => write!(f, "default"),
            Mode::Strict => write!(f, "strict"),
        }
    }
}

/// How a transition's enabledness label `D` was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DProvenance {
    /// `D = true`, proved (guard holds everywhere in the source).
    ProvedTrue,
    /// `D = Guard(e)`, proved satisfiable in the source.
    GuardByProof,
    /// `D = Guard(e)`, kept without a satisfiability proof.
    GuardByDefault,
    /// The deciding obligation's verdict came from the assumption table.
    Assumed,
}

/// How a transition's reachability label `A` was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AProvenance {
    /// `A = true`, proved (the target is reached from every guarded source
    /// valuation).
    ProvedTrue,
    /// `A = ⟨Action(e)⟩𝓘(F)`, proved satisfiable.
    ReachByProof,
    /// `A = ⟨Action(e)⟩𝓘(F)`, kept without a satisfiability proof.
    ReachByDefault,
    /// The deciding obligation's verdict came from the assumption table.
    Assumed,
}

impl std::fmt::Display for DProvenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DProvenance::ProvedTrue => "ProvedTrue",
            DProvenance::GuardByProof => "GuardByProof",
            DProvenance::GuardByDefault => "GuardByDefault",
            DProvenance::Assumed => "Assumed",
        };
        write!(f, "{s}")
    }
}

impl std::fmt::Display for AProvenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AProvenance::ProvedTrue => "ProvedTrue",
            AProvenance::ReachByProof => "ReachByProof",
            AProvenance::ReachByDefault => "ReachByDefault",
            AProvenance::Assumed => "Assumed",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for DProvenance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ProvedTrue" => Ok(DProvenance::ProvedTrue),
            "GuardByProof" => Ok(DProvenance::GuardByProof),
            "GuardByDefault" => Ok(DProvenance::GuardByDefault),
            "Assumed" => Ok(DProvenance::Assumed),
            other => Err(format!("unknown enabledness provenance `{other}`")),
        }
    }
}

impl std::str::FromStr for AProvenance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ProvedTrue" => Ok(AProvenance::ProvedTrue),
            "ReachByProof" => Ok(AProvenance::ReachByProof),
            "ReachByDefault" => Ok(AProvenance::ReachByDefault),
            "Assumed" => Ok(AProvenance::Assumed),
            other => Err(format!("unknown reachability provenance `{other}`")),
        }
    }
}

/// A state of the transition system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicState {
    /// Stable name: the compact rendering of the state predicate.
    pub name: String,
    /// `P_i ∧ I` for assertion states, `true` for the initial state.
    pub interpretation: Pred,
    pub is_initial: bool,
    /// Set on refinement substates that were declared in the decomposition
    /// but never reached by any transition.
    pub declared_unreached: bool,
}

/// A labelled transition `(from, (D, A, event), to)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SltsTransition {
    pub from: String,
    pub to: String,
    pub event: String,
    /// Enabledness label: `true` or `Guard(e)`.
    pub d: Pred,
    pub d_prov: DProvenance,
    /// Reachability label: `true` or `⟨Action(e)⟩𝓘(F)`.
    pub a: Pred,
    pub a_prov: AProvenance,
}

/// The classification step a proof obligation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PoStage {
    /// `I ⇒ ∨P_i` — the states cover the invariant.
    Completeness,
    /// Step 1: guard holds on the whole source state.
    GuardTotal,
    /// Step 2: guard holds nowhere in the source (eliminates).
    GuardEmpty,
    /// Step 3: guard satisfiable in the source (by-proof tag).
    GuardSat,
    /// Step 4: target reached from every guarded source valuation.
    ReachTotal,
    /// Step 5: target reached from no source valuation (eliminates).
    ReachEmpty,
    /// Step 6: target reachable from some source valuation (by-proof tag).
    ReachSat,
    /// A decomposition equivalence between an abstract state and its
    /// substate disjunction.
    Decomposition,
    /// Equivalence of a computed projection with its quantified form.
    ProjectionEquiv,
    /// Projected transitions only restrict abstract enabledness.
    ProjectionLemma,
    /// Concrete initialisation establishes the gluing invariant.
    RefineInit,
    /// A concrete event simulates its abstract counterpart.
    RefineEvent,
    /// A new event preserves the gluing invariant.
    RefineNew,
    /// The variant is non-negative under the invariants.
    RefineVariantNonneg,
    /// A new event strictly decreases the variant.
    RefineVariantDecrease,
    /// Concrete guards preserve abstract liveness.
    RefineLiveness,
    /// An implication premise for a property-weakening rewrite.
    Implication,
}

impl std::fmt::Display for PoStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PoStage::Completeness => "completeness",
            PoStage::GuardTotal => "guard-total",
            PoStage::GuardEmpty => "guard-empty",
            PoStage::GuardSat => "guard-sat",
            PoStage::ReachTotal => "reach-total",
            PoStage::ReachEmpty => "reach-empty",
            PoStage::ReachSat => "reach-sat",
            PoStage::Decomposition => "decomposition",
            PoStage::ProjectionEquiv => "projection-equivalence",
            PoStage::ProjectionLemma => "projection-lemma",
            PoStage::RefineInit => "refine-init",
            PoStage::RefineEvent => "refine-event",
            PoStage::RefineNew => "refine-new",
            PoStage::RefineVariantNonneg => "refine-variant-nonneg",
            PoStage::RefineVariantDecrease => "refine-variant-decrease",
            PoStage::RefineLiveness => "refine-liveness",
            PoStage::Implication => "implication",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for PoStage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "completeness" => PoStage::Completeness,
            "guard-total" => PoStage::GuardTotal,
            "guard-empty" => PoStage::GuardEmpty,
            "guard-sat" => PoStage::GuardSat,
            "reach-total" => PoStage::ReachTotal,
            "reach-empty" => PoStage::ReachEmpty,
            "reach-sat" => PoStage::ReachSat,
            "decomposition" => PoStage::Decomposition,
            "projection-equivalence" => PoStage::ProjectionEquiv,
            "projection-lemma" => PoStage::ProjectionLemma,
            "refine-init" => PoStage::RefineInit,
            "refine-event" => PoStage::RefineEvent,
            "refine-new" => PoStage::RefineNew,
            "refine-variant-nonneg" => PoStage::RefineVariantNonneg,
            "refine-variant-decrease" => PoStage::RefineVariantDecrease,
            "refine-liveness" => PoStage::RefineLiveness,
            "implication" => PoStage::Implication,
            other => return Err(format!("unknown obligation stage `{other}`")),
        })
    }
}

/// One decided proof obligation, as stored in the ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoRecord {
    /// Stable identifier — the key accepted by assumption files.
    pub id: String,
    pub stage: PoStage,
    /// Source state, for per-transition obligations.
    pub source: Option<String>,
    /// Event name, where one is involved.
    pub event: Option<String>,
    /// Target state, for per-target obligations.
    pub target: Option<String>,
    pub kind: PoKind,
    pub outcome: Outcome,
    pub assumed: bool,
    pub witness: Option<Valuation>,
    pub examined: u64,
}

/// The variable/set/event context a transition system was built over —
/// everything property checking and rendering need without the machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SltsContext {
    pub machine: String,
    pub variables: Vec<(String, Domain)>,
    pub sets: Vec<(String, Vec<String>)>,
    pub events: Vec<String>,
}

/// A hierarchical super-state grouping projected substates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperState {
    /// Name of the abstract state this projection came from.
    pub name: String,
    /// Quantifier-free projection of the abstract interpretation.
    pub projection: Pred,
    /// Names of the substates grouped under this super-state.
    pub substates: Vec<String>,
    /// Whether the decomposition equivalence was proved Valid.
    pub decomposition_proved: bool,
}

/// A symbolic labelled transition system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slts {
    pub context: SltsContext,
    /// Initial state first, then assertion states in declaration order
    /// (reached ones for machines; all declared substates for projections).
    pub states: Vec<SymbolicState>,
    pub initial: String,
    /// Transitions in worklist discovery order.
    pub transitions: Vec<SltsTransition>,
    /// True iff no stored label is by-default and no elimination was
    /// assumed rather than proved.
    pub minimal: bool,
    pub mode: Mode,
    pub budget: u64,
    /// Super-state grouping (projected systems only).
    pub hierarchy: Vec<SuperState>,
    /// Every decided proof obligation, sorted by identifier.
    pub po_ledger: Vec<PoRecord>,
    pub warnings: Vec<String>,
}

impl Slts {
    pub fn state(&self, name: &str) -> Option<&SymbolicState> {
        self.states.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error(
        "machine `{machine}` has no ASSERTIONS clause: no state predicates to build states from"
    )]
    EmptyAssertions { machine: String },
    #[error("two state predicates print as the same name `{name}`")]
    DuplicateStateName { name: String },
    #[error(
        "ASSERTIONS of `{machine}` do not cover the invariant (counterexample: {witness}); \
         pass force to generate anyway"
    )]
    Incomplete { machine: String, witness: String },
    #[error(transparent)]
    Prover(#[from] ProverError),
}

// ----------------------------------------------------------------------
// States and completeness
// ----------------------------------------------------------------------

/// Builds the state list: the initial pseudo-state, then one state per
/// assertion predicate, named by its compact rendering and interpreted as
/// the predicate conjoined with the invariant.
pub fn build_states(m: &MachineModel) -> Result<Vec<SymbolicState>, GenError> {
    if m.assertions.is_empty() {
        return Err(GenError::EmptyAssertions {
            machine: m.name.clone(),
        });
    }
    let mut states = vec![SymbolicState {
        name: INIT_STATE.to_string(),
        interpretation: Pred::True,
        is_initial: true,
        declared_unreached: false,
    }];
    let mut seen = BTreeSet::from([INIT_STATE.to_string()]);
    for p in &m.assertions {
        let name = compact(p);
        if !seen.insert(name.clone()) {
            return Err(GenError::DuplicateStateName { name });
        }
        states.push(SymbolicState {
            name,
            interpretation: simplify(&Pred::and(vec![p.clone(), m.invariant.clone()])),
            is_initial: false,
            declared_unreached: false,
        });
    }
    Ok(states)
}

/// Decides the completeness obligation `I ⇒ P_1 ∨ … ∨ P_n`.
pub fn check_completeness(
    m: &MachineModel,
    budget: u64,
    assumptions: &AssumptionTable,
) -> Result<Verdict, ProverError> {
    let po = ProofObligation {
        id: format!("complete:{}", m.name),
        kind: PoKind::Validity,
        vars: m.variables.clone(),
        formula: Pred::implies(m.invariant.clone(), Pred::or(m.assertions.to_vec())),
    };
    decide(&po, budget, assumptions)
}

/// A transition system is minimal when every stored label was proved and
/// every elimination was proved: nothing by-default, and no guard- or
/// reach-elimination whose verdict was assumed.
pub fn is_minimal(s: &Slts) -> bool {
    let labels_proved = s.transitions.iter().all(|t| {
        t.d_prov != DProvenance::GuardByDefault && t.a_prov != AProvenance::ReachByDefault
    });
    let eliminations_proved = !s.po_ledger.iter().any(|r| {
        r.assumed
            && r.outcome == Outcome::Valid
            && matches!(r.stage, PoStage::GuardEmpty | PoStage::ReachEmpty)
    });
    labels_proved && eliminations_proved
}

// ----------------------------------------------------------------------
// Transition classification
// ----------------------------------------------------------------------

struct Classifier<'a> {
    machine: &'a MachineModel,
    mode: Mode,
    budget: u64,
    assumptions: &'a AssumptionTable,
    ledger: Vec<PoRecord>,
    warnings: Vec<String>,
}

/// Result of the guard half of classification for a (source, event) pair.
struct GuardInfo {
    d: Pred,
    d_prov: DProvenance,
    normalized: NormalizedEvent,
}

impl<'a> Classifier<'a> {
    fn new(
        machine: &'a MachineModel,
        mode: Mode,
        budget: u64,
        assumptions: &'a AssumptionTable,
    ) -> Classifier<'a> {
        Classifier {
            machine,
            mode,
            budget,
            assumptions,
            ledger: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn record(
        &mut self,
        id: String,
        stage: PoStage,
        source: Option<&str>,
        event: Option<&str>,
        target: Option<&str>,
        kind: PoKind,
        formula: Pred,
    ) -> Result<(Outcome, bool), GenError> {
        let po = ProofObligation {
            id: id.clone(),
            kind,
            vars: self.machine.variables.clone(),
            formula,
        };
        let verdict = decide(&po, self.budget, self.assumptions)?;
        self.ledger.push(PoRecord {
            id,
            stage,
            source: source.map(str::to_string),
            event: event.map(str::to_string),
            target: target.map(str::to_string),
            kind,
            outcome: verdict.outcome,
            assumed: verdict.assumed,
            witness: verdict.witness,
            examined: verdict.examined,
        });
        Ok((verdict.outcome, verdict.assumed))
    }

    /// Steps 1–3 for a (source, event) pair. `None` means the pair produces
    /// no transitions at all.
    fn guard_stage(
        &mut self,
        source: &SymbolicState,
        event: &Event,
    ) -> Result<Option<GuardInfo>, GenError> {
        // The initialisation's guard is true by construction: it is total
        // (it writes every variable) and runs from the unconstrained
        // initial pseudo-state.
        if event.name == INIT_EVENT {
            return Ok(Some(GuardInfo {
                d: Pred::True,
                d_prov: DProvenance::ProvedTrue,
                normalized: NormalizedEvent {
                    guard: Pred::True,
                    action: event.body.clone(),
                },
            }));
        }

        let normalized = normalize_event(&event.body);
        let machine = &self.machine.name;

        // Step 1: guard everywhere in the source -> D = true.
        let (outcome, assumed) = self.record(
            format!("po1:{machine}:{}:{}", source.name, event.name),
            PoStage::GuardTotal,
            Some(&source.name),
            Some(&event.name),
            None,
            PoKind::Validity,
            Pred::implies(source.interpretation.clone(), normalized.guard.clone()),
        )?;
        if outcome == Outcome::Valid {
            return Ok(Some(GuardInfo {
                d: Pred::True,
                d_prov: if assumed {
                    DProvenance::Assumed
                } else {
                    DProvenance::ProvedTrue
                },
                normalized,
            }));
        }

        // Step 2: guard nowhere in the source -> eliminated.
        let (outcome, _) = self.record(
            format!("po2:{machine}:{}:{}", source.name, event.name),
            PoStage::GuardEmpty,
            Some(&source.name),
            Some(&event.name),
            None,
            PoKind::Validity,
            Pred::implies(
                source.interpretation.clone(),
                Pred::not(normalized.guard.clone()),
            ),
        )?;
        if outcome == Outcome::Valid {
            return Ok(None);
        }

        // A literally false guard can survive steps 1–2 only under a
        // starved budget; dropping it is sound regardless of proof.
        if normalized.guard == Pred::False {
            self.warnings.push(format!(
                "event `{}` has a syntactically false guard; \
                 transitions from `{}` omitted",
                event.name, source.name
            ));
            return Ok(None);
        }

        // Step 3 (strict mode): satisfiability tags the computed label.
        let d_prov = match self.mode {
            Mode::Default => DProvenance::GuardByDefault,
            Mode::Strict => {
                let (outcome, assumed) = self.record(
                    format!("po3:{machine}:{}:{}", source.name, event.name),
                    PoStage::GuardSat,
                    Some(&source.name),
                    Some(&event.name),
                    None,
                    PoKind::Satisfiability,
                    Pred::and(vec![
                        source.interpretation.clone(),
                        normalized.guard.clone(),
                    ]),
                )?;
                match (outcome, assumed) {
                    (Outcome::Valid, false) => DProvenance::GuardByProof,
                    (Outcome::Valid, true) => DProvenance::Assumed,
                    _ => DProvenance::GuardByDefault,
                }
            }
        };
        Ok(Some(GuardInfo {
            d: normalized.guard.clone(),
            d_prov,
            normalized,
        }))
    }

    /// Steps 4–6 for a (source, event, target) triple. `None` means no
    /// transition to this target.
    fn reach_stage(
        &mut self,
        source: &SymbolicState,
        event_name: &str,
        guard: &GuardInfo,
        target: &SymbolicState,
    ) -> Result<Option<(Pred, AProvenance)>, GenError> {
        let machine = &self.machine.name;
        let premise = simplify(&Pred::and(vec![
            source.interpretation.clone(),
            guard.normalized.guard.clone(),
        ]));
        let reach = conjugate_wp(&guard.normalized.action, &target.interpretation);

        // Step 4: target reached from everywhere -> A = true.
        let (outcome, assumed) = self.record(
            format!(
                "po4:{machine}:{}:{event_name}:{}",
                source.name, target.name
            ),
            PoStage::ReachTotal,
            Some(&source.name),
            Some(event_name),
            Some(&target.name),
            PoKind::Validity,
            Pred::implies(premise.clone(), reach.clone()),
        )?;
        if outcome == Outcome::Valid {
            return Ok(Some((
                Pred::True,
                if assumed {
                    AProvenance::Assumed
                } else {
                    AProvenance::ProvedTrue
                },
            )));
        }

        // Step 5: every execution avoids the target -> eliminated.
        let (outcome, _) = self.record(
            format!(
                "po5:{machine}:{}:{event_name}:{}",
                source.name, target.name
            ),
            PoStage::ReachEmpty,
            Some(&source.name),
            Some(event_name),
            Some(&target.name),
            PoKind::Validity,
            Pred::implies(
                premise.clone(),
                wp(
                    &guard.normalized.action,
                    &Pred::not(target.interpretation.clone()),
                ),
            ),
        )?;
        if outcome == Outcome::Valid {
            return Ok(None);
        }

        // A literally false reachability label cannot be crossed; dropping
        // it is sound even when steps 4–5 were inconclusive.
        if reach == Pred::False {
            self.warnings.push(format!(
                "transition `{} -{event_name}-> {}` has a syntactically false \
                 reachability label; omitted",
                source.name, target.name
            ));
            return Ok(None);
        }

        // Step 6 (strict mode): satisfiability tags the computed label.
        let a_prov = match self.mode {
            Mode::Default => AProvenance::ReachByDefault,
            Mode::Strict => {
                let (outcome, assumed) = self.record(
                    format!(
                        "po6:{machine}:{}:{event_name}:{}",
                        source.name, target.name
                    ),
                    PoStage::ReachSat,
                    Some(&source.name),
                    Some(event_name),
                    Some(&target.name),
                    PoKind::Satisfiability,
                    Pred::and(vec![
                        source.interpretation.clone(),
                        guard.normalized.guard.clone(),
                        reach.clone(),
                    ]),
                )?;
                match (outcome, assumed) {
                    (Outcome::Valid, false) => AProvenance::ReachByProof,
                    (Outcome::Valid, true) => AProvenance::Assumed,
                    _ => AProvenance::ReachByDefault,
                }
            }
        };
        Ok(Some((reach, a_prov)))
    }
}

/// Classifies one (source, event, target) triple in isolation, returning
/// the surviving transition (if any) and the obligations decided along the
/// way. [`generate`] shares the guard work across targets; this entry point
/// exists for callers inspecting a single triple.
pub fn classify_transition(
    m: &MachineModel,
    source: &SymbolicState,
    event: &Event,
    target: &SymbolicState,
    mode: Mode,
    budget: u64,
    assumptions: &AssumptionTable,
) -> Result<(Option<SltsTransition>, Vec<PoRecord>), GenError> {
    let mut classifier = Classifier::new(m, mode, budget, assumptions);
    let transition = match classifier.guard_stage(source, event)? {
        None => None,
        Some(guard) => classifier
            .reach_stage(source, &event.name, &guard, target)?
            .map(|(a, a_prov)| SltsTransition {
                from: source.name.clone(),
                to: target.name.clone(),
                event: event.name.clone(),
                d: guard.d,
                d_prov: guard.d_prov,
                a,
                a_prov,
            }),
    };
    Ok((transition, classifier.ledger))
}

// ----------------------------------------------------------------------
// Generation
// ----------------------------------------------------------------------

/// Builds the transition system for a machine: states from the assertions,
/// completeness check, then a worklist from the initial state classifying
/// every (reached state, event, state) triple. Only reached states are
/// kept; declared-but-unreached ones are reported in the warnings.
///
/// A failed completeness check aborts unless `force` is set (the failure
/// stays visible in the ledger and the warnings). An undecided completeness
/// check proceeds with a warning: generation is sound regardless, it may
/// merely miss states the assertions do not cover.
pub fn generate(
    m: &MachineModel,
    mode: Mode,
    budget: u64,
    assumptions: &AssumptionTable,
    force: bool,
) -> Result<Slts, GenError> {
    let states = build_states(m)?;
    let mut classifier = Classifier::new(m, mode, budget, assumptions);

    // Overlapping state predicates are legal; report definite overlaps so
    // surprising double-memberships are visible. Satisfiability checks here
    // are informational: they go through an empty assumption table and stay
    // out of the ledger.
    let no_assumptions = AssumptionTable::new();
    let non_initial: Vec<&SymbolicState> = states.iter().filter(|s| !s.is_initial).collect();
    for (i, a) in non_initial.iter().enumerate() {
        for b in non_initial.iter().skip(i + 1) {
            let po = ProofObligation {
                id: format!("overlap:{}:{}:{}", m.name, a.name, b.name),
                kind: PoKind::Satisfiability,
                vars: m.variables.clone(),
                formula: Pred::and(vec![a.interpretation.clone(), b.interpretation.clone()]),
            };
            let verdict = decide(&po, budget, &no_assumptions)?;
            if verdict.outcome == Outcome::Valid {
                classifier.warnings.push(format!(
                    "state predicates `{}` and `{}` overlap (e.g. {})",
                    a.name,
                    b.name,
                    verdict
                        .witness
                        .as_ref()
                        .map(format_valuation)
                        .unwrap_or_default()
                ));
            }
        }
    }

    // Completeness: the assertion states must cover the invariant.
    let verdict = check_completeness(m, budget, assumptions)?;
    classifier.ledger.push(PoRecord {
        id: verdict.po_id.clone(),
        stage: PoStage::Completeness,
        source: None,
        event: None,
        target: None,
        kind: PoKind::Validity,
        outcome: verdict.outcome,
        assumed: verdict.assumed,
        witness: verdict.witness.clone(),
        examined: verdict.examined,
    });
    match verdict.outcome {
        Outcome::Valid => {}
        Outcome::Unknown => classifier.warnings.push(
            "completeness of the state predicates is undecided within budget; proceeding"
                .to_string(),
        ),
        Outcome::Invalid => {
            let witness = verdict
                .witness
                .as_ref()
                .map(format_valuation)
                .unwrap_or_default();
            if force {
                classifier.warnings.push(format!(
                    "state predicates do not cover the invariant (counterexample: {witness}); \
                     generation forced"
                ));
            } else {
                return Err(GenError::Incomplete {
                    machine: m.name.clone(),
                    witness,
                });
            }
        }
    }

    // Worklist from the initial state. The initialisation is the only event
    // leaving it; every other state is processed against the whole
    // interface, with targets in declaration order.
    let init_event = Event {
        name: INIT_EVENT.to_string(),
        body: m.initialisation.clone(),
    };
    let mut reached: BTreeSet<String> = BTreeSet::from([INIT_STATE.to_string()]);
    let mut queue: VecDeque<String> = VecDeque::from([INIT_STATE.to_string()]);
    let mut transitions: Vec<SltsTransition> = Vec::new();
    while let Some(source_name) = queue.pop_front() {
        let source = states
            .iter()
            .find(|s| s.name == source_name)
            .expect("worklist names come from the state list")
            .clone();
        let events: Vec<&Event> = if source.is_initial {
            vec![&init_event]
        } else {
            m.events.iter().collect()
        };
        for event in events {
            let Some(guard) = classifier.guard_stage(&source, event)? else {
                continue;
            };
            for target in states.iter().filter(|s| !s.is_initial) {
                let Some((a, a_prov)) =
                    classifier.reach_stage(&source, &event.name, &guard, target)?
                else {
                    continue;
                };
                transitions.push(SltsTransition {
                    from: source.name.clone(),
                    to: target.name.clone(),
                    event: event.name.clone(),
                    d: guard.d.clone(),
                    d_prov: guard.d_prov,
                    a,
                    a_prov,
                });
                if reached.insert(target.name.clone()) {
                    queue.push_back(target.name.clone());
                }
            }
        }
    }

    // Keep reached states only, preserving declaration order.
    let mut kept = Vec::new();
    for state in states {
        if reached.contains(&state.name) {
            kept.push(state);
        } else {
            classifier.warnings.push(format!(
                "state `{}` is declared but not reached; omitted",
                state.name
            ));
        }
    }

    let Classifier {
        mut ledger,
        warnings,
        ..
    } = classifier;
    ledger.sort_by(|a, b| a.id.cmp(&b.id));

    let mut slts = Slts {
        context: SltsContext {
            machine: m.name.clone(),
            variables: m.variables.clone(),
            sets: m.sets.clone(),
            events: interface_of(m),
        },
        states: kept,
        initial: INIT_STATE.to_string(),
        transitions,
        minimal: false,
        mode,
        budget,
        hierarchy: Vec::new(),
        po_ledger: ledger,
        warnings,
    };
    slts.minimal = is_minimal(&slts);
    Ok(slts)
}
