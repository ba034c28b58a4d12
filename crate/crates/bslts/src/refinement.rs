//! Refinement support: state projection through the gluing invariant,
//! projected transition-system generation with hierarchical states, the
//! transition-projection sanity lemma, and the refinement proof
//! obligations.
//!
//! The central construction is the **projection**: an abstract state `E`
//! with interpretation `𝓘(E)` projects to the concrete predicate
//! `∃ abstract · (L ∧ 𝓘(E))` where `L` is the gluing invariant. Because
//! every domain is finite, the existential quantifier is eliminated by
//! enumeration, producing a quantifier-free disjunction of cubes over the
//! concrete variables; the equivalence of the two forms is then re-checked
//! by the prover and recorded.
//!
//! A refinement's ASSERTIONS clause decomposes abstract states into
//! concrete substates. Each decomposition is verified (the substate
//! disjunction must be equivalent to the projection), the substates become
//! the states of a concrete working machine whose invariant is the
//! projected joint invariant, and the ordinary generator runs on it. The
//! abstract states survive as super-states grouping their substates.

use std::collections::{BTreeMap, BTreeSet};

use crate::bmodel::{
    expr_free_vars, fresh_name, Domain, Expr, MachineModel, Pred, RefinementModel, Subst, Value,
};
use crate::oracle::all_valuations;
use crate::prover::{
    decide, evaluate, format_valuation, AssumptionTable, Outcome, PoKind, ProofObligation,
    ProverError, Valuation, Verdict,
};
use crate::sltsgen::{
    generate, GenError, Mode, PoRecord, PoStage, Slts, SuperState, SymbolicState, INIT_EVENT,
};
use crate::wpcalc::{conjugate_wp, normalize_event, simplify, wp};

#[derive(Debug, thiserror::Error)]
pub enum RefError {
    #[error(
        "refinement `{refinement}` introduces new events ({events}) but declares no VARIANT"
    )]
    NewEventsNoVariant {
        refinement: String,
        events: String,
    },
    #[error("decomposition `{lhs}` matches no abstract state predicate")]
    DecompositionUnmatched { lhs: String },
    #[error("decomposition `{lhs}` matches more than one abstract state predicate")]
    DecompositionAmbiguous { lhs: String },
    #[error("abstract state `{state}` has more than one decomposition")]
    DecompositionDuplicate { state: String },
    #[error(
        "decomposition of `{state}` does not match its projection \
         (counterexample: {witness})"
    )]
    DecompositionInvalid { state: String, witness: String },
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Gen(#[from] GenError),
}

// ----------------------------------------------------------------------
// Quantifier elimination by enumeration
// ----------------------------------------------------------------------

type Cube = BTreeMap<String, BTreeSet<Value>>;

/// Eliminates `∃ drop · p`, returning a quantifier-free predicate over the
/// `keep` variables: the disjunction of merged cubes covering exactly the
/// keep-valuations for which some drop-valuation satisfies `p`.
pub fn eliminate_exists(
    keep: &[(String, Domain)],
    drop: &[(String, Domain)],
    p: &Pred,
) -> Result<Pred, ProverError> {
    let mut satisfying: BTreeSet<Valuation> = BTreeSet::new();
    let drop_space = all_valuations(drop);
    for kv in all_valuations(keep) {
        for dv in &drop_space {
            let mut full = kv.clone();
            full.extend(dv.clone());
            if evaluate(p, &full)? {
                satisfying.insert(kv.clone());
                break;
            }
        }
    }
    if satisfying.is_empty() {
        return Ok(Pred::False);
    }

    let domains: BTreeMap<&str, &Domain> =
        keep.iter().map(|(n, d)| (n.as_str(), d)).collect();
    let mut cubes: BTreeSet<Cube> = satisfying
        .into_iter()
        .map(|v| {
            v.into_iter()
                .map(|(name, value)| (name, BTreeSet::from([value])))
                .collect()
        })
        .collect();

    // Merge pairs of cubes identical except in one variable, first pair in
    // set order each round.
    loop {
        let list: Vec<&Cube> = cubes.iter().collect();
        let mut merged: Option<(Cube, Cube, Cube)> = None;
        'search: for (i, a) in list.iter().enumerate() {
            for b in &list[i + 1..] {
                if let Some(m) = merge_cubes(a, b) {
                    merged = Some(((*a).clone(), (*b).clone(), m));
                    break 'search;
                }
            }
        }
        drop(list);
        match merged {
            Some((a, b, m)) => {
                cubes.remove(&a);
                cubes.remove(&b);
                cubes.insert(m);
            }
            None => break,
        }
    }

    // Drop variables that cover their whole domain, then absorb cubes
    // contained in others.
    let cubes: BTreeSet<Cube> = cubes
        .into_iter()
        .map(|cube| {
            cube.into_iter()
                .filter(|(name, values)| values.len() < domains[name.as_str()].size() as usize)
                .collect()
        })
        .collect();
    let cubes: Vec<Cube> = cubes
        .iter()
        .filter(|c| !cubes.iter().any(|other| *other != **c && absorbs(other, c)))
        .cloned()
        .collect();

    let disjuncts: Vec<Pred> = cubes.iter().map(|c| render_cube(c, keep)).collect();
    Ok(Pred::or(disjuncts))
}

/// Merges two cubes differing in exactly one variable's value set.
fn merge_cubes(a: &Cube, b: &Cube) -> Option<Cube> {
    if a.len() != b.len() || !a.keys().eq(b.keys()) {
        return None;
    }
    let mut differing = None;
    for (name, va) in a {
        if va != &b[name] {
            if differing.is_some() {
                return None;
            }
            differing = Some(name.clone());
        }
    }
    let name = differing?;
    let mut merged = a.clone();
    merged
        .get_mut(&name)
        .expect("differing key present")
        .extend(b[&name].iter().cloned());
    Some(merged)
}

/// Does `outer` cover every valuation of `inner`? (Missing keys cover the
/// whole domain.)
fn absorbs(outer: &Cube, inner: &Cube) -> bool {
    outer.iter().all(|(name, outer_values)| {
        inner
            .get(name)
            .is_some_and(|inner_values| inner_values.is_subset(outer_values))
    })
}

/// Renders a cube as a conjunction over the variables in declaration
/// order: one value → equality; all but one value of a larger domain →
/// inequality; otherwise a disjunction of equalities.
fn render_cube(cube: &Cube, keep: &[(String, Domain)]) -> Pred {
    let mut conjuncts = Vec::new();
    for (name, domain) in keep {
        let Some(values) = cube.get(name) else {
            continue;
        };
        let var = Expr::Var(name.clone());
        let domain_values = domain.values();
        let pred = if values.len() == 1 {
            Pred::Eq(var, value_expr(values.iter().next().unwrap()))
        } else if values.len() + 1 == domain_values.len() && domain_values.len() > 2 {
            let missing = domain_values
                .iter()
                .find(|v| !values.contains(v))
                .expect("one value missing");
            Pred::Neq(var, value_expr(missing))
        } else {
            Pred::or(
                domain_values
                    .iter()
                    .filter(|v| values.contains(v))
                    .map(|v| Pred::Eq(var.clone(), value_expr(v)))
                    .collect(),
            )
        };
        conjuncts.push(pred);
    }
    Pred::and(conjuncts)
}

fn value_expr(v: &Value) -> Expr {
    match v {
        Value::Elem(name) => Expr::EnumLit(name.clone()),
        Value::Int(i) => Expr::Int(*i),
    }
}

// ----------------------------------------------------------------------
// State projection
// ----------------------------------------------------------------------

/// The projection of one abstract state into the concrete space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedState {
    /// Named after the abstract state; interpreted as the computed
    /// quantifier-free projection.
    pub state: SymbolicState,
    /// Name of the abstract state this projects.
    pub abstract_source: String,
    /// True when the projection is unsatisfiable: no concrete valuation is
    /// glued to the abstract state.
    pub eliminated: bool,
}

/// Projects an abstract state through the gluing invariant:
/// `∃ abstract · (L ∧ 𝓘(E))`, with the quantifier eliminated by
/// enumeration. The equivalence of the computed predicate with the
/// quantified form is decided and returned alongside.
pub fn project_state(
    abstract_state: &SymbolicState,
    r: &RefinementModel,
    budget: u64,
    assumptions: &AssumptionTable,
) -> Result<(ProjectedState, PoRecord), RefError> {
    let joint = Pred::and(vec![
        r.gluing.clone(),
        abstract_state.interpretation.clone(),
    ]);
    let projection = eliminate_exists(&r.machine.variables, &r.abstraction.variables, &joint)?;

    // Re-check: the computed predicate must match the quantified form on
    // every concrete valuation.
    let quantified = r
        .abstraction
        .variables
        .iter()
        .rev()
        .fold(joint, |body, (name, domain)| Pred::Exists {
            var: name.clone(),
            domain: domain.to_set_expr(),
            body: Box::new(body),
        });
    let po = ProofObligation {
        id: format!("projeq:{}:{}", r.name, abstract_state.name),
        kind: PoKind::Validity,
        vars: r.machine.variables.clone(),
        formula: Pred::iff(projection.clone(), quantified),
    };
    let verdict = decide(&po, budget, assumptions)?;
    let record = PoRecord {
        id: po.id,
        stage: PoStage::ProjectionEquiv,
        source: Some(abstract_state.name.clone()),
        event: None,
        target: None,
        kind: po.kind,
        outcome: verdict.outcome,
        assumed: verdict.assumed,
        witness: verdict.witness,
        examined: verdict.examined,
    };

    let eliminated = projection == Pred::False;
    Ok((
        ProjectedState {
            state: SymbolicState {
                name: abstract_state.name.clone(),
                interpretation: projection,
                is_initial: abstract_state.is_initial,
                declared_unreached: false,
            },
            abstract_source: abstract_state.name.clone(),
            eliminated,
        },
        record,
    ))
}

// ----------------------------------------------------------------------
// Projected generation with hierarchy
// ----------------------------------------------------------------------

/// Builds the projected transition system of a refinement.
///
/// The abstract states are projected through the gluing invariant; each
/// decomposition from the ASSERTIONS clause is matched to its abstract
/// state and verified equivalent to the projection; abstract states
/// without a decomposition keep their projection as a single substate. The
/// substates then drive an ordinary generation run over the concrete
/// machine under the projected invariant, and the result carries the
/// super-state hierarchy. Declared substates that end up unreached stay in
/// the state list, flagged.
pub fn generate_projected(
    r: &RefinementModel,
    decompositions: &[crate::bmodel::Decomposition],
    mode: Mode,
    budget: u64,
    assumptions: &AssumptionTable,
    force: bool,
) -> Result<Slts, RefError> {
    let abstract_states = crate::sltsgen::build_states(&r.abstraction)?;
    let non_initial: Vec<&SymbolicState> =
        abstract_states.iter().filter(|s| !s.is_initial).collect();
    let mut pre_records: Vec<PoRecord> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();

    // Match each decomposition to exactly one abstract state: structural
    // equality against the assertion predicate first, semantic equivalence
    // under the abstract invariant as fallback.
    let no_assumptions = AssumptionTable::new();
    let mut matched: BTreeMap<String, Vec<Pred>> = BTreeMap::new();
    for decomposition in decompositions {
        let lhs = &decomposition.abstract_pred;
        let mut hits: Vec<&SymbolicState> = Vec::new();
        for (state, assertion) in non_initial.iter().zip(&r.abstraction.assertions) {
            if lhs == assertion {
                hits.push(state);
            }
        }
        if hits.is_empty() {
            for (state, assertion) in non_initial.iter().zip(&r.abstraction.assertions) {
                let po = ProofObligation {
                    id: format!("match:{}:{}", r.name, state.name),
                    kind: PoKind::Validity,
                    vars: r.abstraction.variables.clone(),
                    formula: Pred::implies(
                        r.abstraction.invariant.clone(),
                        Pred::iff(lhs.clone(), assertion.clone()),
                    ),
                };
                if decide(&po, budget, &no_assumptions)?.outcome == Outcome::Valid {
                    hits.push(state);
                }
            }
        }
        match hits.len() {
            0 => {
                return Err(RefError::DecompositionUnmatched {
                    lhs: crate::bmodel::canonical(lhs),
                })
            }
            1 => {}
            _ => {
                return Err(RefError::DecompositionAmbiguous {
                    lhs: crate::bmodel::canonical(lhs),
                })
            }
        }
        let state_name = hits[0].name.clone();
        if matched
            .insert(state_name.clone(), decomposition.substates.clone())
            .is_some()
        {
            return Err(RefError::DecompositionDuplicate { state: state_name });
        }
    }

    // Project every abstract state; the projected joint invariant (the
    // projection of the always-true initial state) becomes the concrete
    // working invariant.
    let joint_invariant = Pred::and(vec![r.abstraction.invariant.clone(), r.gluing.clone()]);
    let working_invariant = simplify(&Pred::and(vec![
        r.machine.invariant.clone(),
        eliminate_exists(
            &r.machine.variables,
            &r.abstraction.variables,
            &joint_invariant,
        )?,
    ]));

    let mut projections: BTreeMap<String, ProjectedState> = BTreeMap::new();
    for state in &non_initial {
        let (projected, record) = project_state(state, r, budget, assumptions)?;
        pre_records.push(record);
        projections.insert(state.name.clone(), projected);
    }

    // Verify each decomposition against its projection (Def 7: the
    // substate disjunction must equal the projected super-state) and
    // assemble the substate list — declared decompositions in assertion
    // order, then singleton fallbacks for uncovered abstract states.
    let mut hierarchy: Vec<SuperState> = Vec::new();
    let mut fallback_substates: Vec<Pred> = Vec::new();
    for state in &non_initial {
        let projected = &projections[&state.name];
        let (substates, declared) = match matched.get(&state.name) {
            Some(subs) => (subs.clone(), true),
            None => (vec![projected.state.interpretation.clone()], false),
        };
        let disjunction = Pred::or(
            substates
                .iter()
                .map(|p| Pred::and(vec![p.clone(), working_invariant.clone()]))
                .collect(),
        );
        let po = ProofObligation {
            id: format!("decomp:{}:{}", r.name, state.name),
            kind: PoKind::Validity,
            vars: r.machine.variables.clone(),
            formula: Pred::iff(disjunction, projected.state.interpretation.clone()),
        };
        let verdict = decide(&po, budget, assumptions)?;
        pre_records.push(PoRecord {
            id: po.id,
            stage: PoStage::Decomposition,
            source: Some(state.name.clone()),
            event: None,
            target: None,
            kind: po.kind,
            outcome: verdict.outcome,
            assumed: verdict.assumed,
            witness: verdict.witness.clone(),
            examined: verdict.examined,
        });
        let proved = match verdict.outcome {
            Outcome::Valid => true,
            Outcome::Invalid => {
                return Err(RefError::DecompositionInvalid {
                    state: state.name.clone(),
                    witness: verdict
                        .witness
                        .as_ref()
                        .map(format_valuation)
                        .unwrap_or_default(),
                });
            }
            Outcome::Unknown => {
                warnings.push(format!(
                    "decomposition of `{}` is undecided within budget",
                    state.name
                ));
                false
            }
        };
        hierarchy.push(SuperState {
            name: state.name.clone(),
            projection: projected.state.interpretation.clone(),
            substates: substates.iter().map(crate::bmodel::compact).collect(),
            decomposition_proved: proved,
        });
        if !declared {
            fallback_substates.extend(substates);
        }
    }

    // The concrete working machine: declared substates in assertion order,
    // then the fallbacks.
    let mut working_assertions = r.machine.assertions.clone();
    working_assertions.extend(fallback_substates);
    let working = MachineModel {
        name: r.name.clone(),
        sets: r.machine.sets.clone(),
        variables: r.machine.variables.clone(),
        invariant: working_invariant,
        assertions: working_assertions.clone(),
        initialisation: r.machine.initialisation.clone(),
        events: r.machine.events.clone(),
        warnings: Vec::new(),
    };

    let mut slts = generate(&working, mode, budget, assumptions, force)?;

    // Declared substates stay in the output even when unreached.
    let reached: BTreeSet<String> = slts.states.iter().map(|s| s.name.clone()).collect();
    let mut states = vec![slts
        .state(crate::sltsgen::INIT_STATE)
        .expect("generation keeps the initial state")
        .clone()];
    for predicate in &working_assertions {
        let name = crate::bmodel::compact(predicate);
        if reached.contains(&name) {
            states.push(
                slts.state(&name)
                    .expect("reached states are in the state list")
                    .clone(),
            );
        } else {
            states.push(SymbolicState {
                name,
                interpretation: simplify(&Pred::and(vec![
                    predicate.clone(),
                    working.invariant.clone(),
                ])),
                is_initial: false,
                declared_unreached: true,
            });
        }
    }
    slts.states = states;
    slts.hierarchy = hierarchy;
    slts.po_ledger.extend(pre_records);
    slts.po_ledger.sort_by(|a, b| a.id.cmp(&b.id));
    slts.warnings.extend(warnings);
    slts.minimal = crate::sltsgen::is_minimal(&slts);
    Ok(slts)
}

// ----------------------------------------------------------------------
// Transition projection lemma
// ----------------------------------------------------------------------

/// Outcome of checking the transition-projection lemma.
#[derive(Debug, Clone)]
pub struct ProjectionReport {
    pub records: Vec<PoRecord>,
}

impl ProjectionReport {
    pub fn all_valid(&self) -> bool {
        self.records.iter().all(|r| r.outcome == Outcome::Valid)
    }

    pub fn invalid(&self) -> Vec<&PoRecord> {
        self.records
            .iter()
            .filter(|r| r.outcome == Outcome::Invalid)
            .collect()
    }
}

/// Checks, for every projected transition of an inherited event, that the
/// concrete enabledness only restricts the abstract one:
/// `𝓘(E^S) ∧ L ∧ D' ⇒ D` over the joint variables. `abstract_slts` must be
/// the system generated from `r`'s (possibly renamed) abstraction.
pub fn check_projection_lemma(
    abstract_slts: &Slts,
    projected: &Slts,
    r: &RefinementModel,
    budget: u64,
    assumptions: &AssumptionTable,
) -> Result<ProjectionReport, RefError> {
    let joint = r.joint_variables();
    let mut records = Vec::new();
    for t in &projected.transitions {
        if t.event == INIT_EVENT || r.new_events.contains(&t.event) {
            continue;
        }
        let Some(super_state) = projected
            .hierarchy
            .iter()
            .find(|h| h.substates.contains(&t.from))
        else {
            continue;
        };
        let abstract_state = abstract_slts
            .state(&super_state.name)
            .expect("hierarchy names are abstract states");
        // The abstract enabledness: the stored D if the abstract system
        // kept the transition. With a complete, full-budget abstract
        // system, a (state, event) pair without any stored transition can
        // only mean the guard was eliminated there, so D is false.
        let abstract_d = abstract_slts
            .transitions
            .iter()
            .find(|at| at.from == super_state.name && at.event == t.event)
            .map(|at| at.d.clone())
            .unwrap_or(Pred::False);
        let po = ProofObligation {
            id: format!("projlemma:{}:{}:{}:{}", r.name, t.from, t.event, t.to),
            kind: PoKind::Validity,
            vars: joint.clone(),
            formula: Pred::implies(
                Pred::and(vec![
                    abstract_state.interpretation.clone(),
                    r.gluing.clone(),
                    t.d.clone(),
                ]),
                abstract_d,
            ),
        };
        let verdict = decide(&po, budget, assumptions)?;
        records.push(PoRecord {
            id: po.id,
            stage: PoStage::ProjectionLemma,
            source: Some(t.from.clone()),
            event: Some(t.event.clone()),
            target: Some(t.to.clone()),
            kind: po.kind,
            outcome: verdict.outcome,
            assumed: verdict.assumed,
            witness: verdict.witness,
            examined: verdict.examined,
        });
    }
    Ok(ProjectionReport { records })
}

// ----------------------------------------------------------------------
// Refinement proof obligations
// ----------------------------------------------------------------------

/// Emits and decides the refinement obligations:
///
/// * initialisation — `[Init^R]⟨Init^S⟩J`;
/// * per inherited event — `I ∧ J ⇒ [e^R]⟨e^S⟩J`;
/// * per new event — `I ∧ J ⇒ [ne^R]⟨skip⟩J`;
/// * with new events (variant required): `I ∧ J ⇒ V ≥ 0` and, per new
///   event, `I ∧ J ⇒ [v := V][ne^R](V < v)` for a fresh `v`;
/// * liveness — under `I ∧ J`, some concrete guard holds wherever some
///   abstract guard does.
pub fn gen_refinement_pos(
    r: &RefinementModel,
    budget: u64,
    assumptions: &AssumptionTable,
) -> Result<Vec<(ProofObligation, Verdict)>, RefError> {
    let joint = r.joint_variables();
    let premise = Pred::and(vec![r.abstraction.invariant.clone(), r.gluing.clone()]);
    let mut pos: Vec<ProofObligation> = Vec::new();

    pos.push(ProofObligation {
        id: format!("refinit:{}", r.name),
        kind: PoKind::Validity,
        vars: joint.clone(),
        formula: wp(
            &r.machine.initialisation,
            &conjugate_wp(&r.abstraction.initialisation, &r.gluing),
        ),
    });

    for abstract_event in &r.abstraction.events {
        let concrete_event = r
            .machine
            .event(&abstract_event.name)
            .expect("resolution checked every abstract event is refined");
        pos.push(ProofObligation {
            id: format!("refevent:{}:{}", r.name, abstract_event.name),
            kind: PoKind::Validity,
            vars: joint.clone(),
            formula: Pred::implies(
                premise.clone(),
                wp(
                    &concrete_event.body,
                    &conjugate_wp(&abstract_event.body, &r.gluing),
                ),
            ),
        });
    }

    for name in &r.new_events {
        let event = r.machine.event(name).expect("new events are concrete");
        pos.push(ProofObligation {
            id: format!("refnew:{}:{}", r.name, name),
            kind: PoKind::Validity,
            vars: joint.clone(),
            formula: Pred::implies(
                premise.clone(),
                wp(&event.body, &conjugate_wp(&Subst::Skip, &r.gluing)),
            ),
        });
    }

    if !r.new_events.is_empty() {
        let Some(variant) = &r.variant else {
            return Err(RefError::NewEventsNoVariant {
                refinement: r.name.clone(),
                events: r.new_events.join(", "),
            });
        };
        pos.push(ProofObligation {
            id: format!("refvarnat:{}", r.name),
            kind: PoKind::Validity,
            vars: joint.clone(),
            formula: Pred::implies(
                premise.clone(),
                Pred::Geq(variant.clone(), Expr::Int(0)),
            ),
        });
        for name in &r.new_events {
            let event = r.machine.event(name).expect("new events are concrete");
            let mut taken: BTreeSet<String> =
                joint.iter().map(|(n, _)| n.clone()).collect();
            taken.extend(expr_free_vars(variant));
            let snapshot = fresh_name("v", &taken);
            // [v := V][ne](V < v): execute the event, then compare the new
            // variant value against the snapshot taken before.
            let decreased = wp(
                &Subst::Sequence(vec![
                    Subst::Assign(snapshot.clone(), variant.clone()),
                    event.body.clone(),
                ]),
                &Pred::Less(variant.clone(), Expr::Var(snapshot)),
            );
            pos.push(ProofObligation {
                id: format!("refvardec:{}:{}", r.name, name),
                kind: PoKind::Validity,
                vars: joint.clone(),
                formula: Pred::implies(premise.clone(), decreased),
            });
        }
    }

    let abstract_guards = Pred::or(
        r.abstraction
            .events
            .iter()
            .map(|e| normalize_event(&e.body).guard)
            .collect(),
    );
    let concrete_guards = Pred::or(
        r.machine
            .events
            .iter()
            .map(|e| normalize_event(&e.body).guard)
            .collect(),
    );
    pos.push(ProofObligation {
        id: format!("refliveness:{}", r.name),
        kind: PoKind::Validity,
        vars: joint.clone(),
        formula: Pred::implies(
            premise.clone(),
            Pred::implies(abstract_guards, concrete_guards),
        ),
    });

    let mut out = Vec::new();
    for po in pos {
        let verdict = decide(&po, budget, assumptions)?;
        out.push((po, verdict));
    }
    Ok(out)
}
