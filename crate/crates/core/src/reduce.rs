//! Reduction of the initialized statechart.
//!
//! The AND rule collapses sibling places that share their pre- and
//! post-transition sets, recording the parallelism as an AND state. The OR
//! rule collapses a place/transition/place sequence, merging the two OR
//! states. Both run as long as possible; afterwards a single remaining
//! top-level OR is wrapped in the statechart's top AND and every hyperedge
//! is moved into the nearest compound enclosing all Basics it connects.
//!
//! Rules mutate the Petri net in place. Each pass snapshots the transition
//! ids once and skips those deleted before they are reached.

use std::collections::{BTreeSet, HashSet};

use crate::error::TransformError;
use crate::init::{initialize_statechart, TraceMap};
use crate::model::{ElementId, ElementKind, ModelStore, Slot};

/// Which place set of a transition the AND rule inspects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Pre,
    Post,
}

impl Side {
    fn slot(self) -> Slot {
        match self {
            Side::Pre => Slot::Prep,
            Side::Post => Slot::Postp,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleOutcome {
    pub applied: bool,
}

/// A single rule application, reported to observers right after it took
/// effect.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Firing {
    And {
        transition: ElementId,
        side: Side,
        /// Number of places collapsed into one.
        arity: usize,
    },
    Or {
        transition: ElementId,
        /// False for a self-loop, where only the transition is removed.
        merged: bool,
    },
}

/// Callback invoked after every firing with the current net and statechart.
pub type Observer<'a> = dyn FnMut(&Firing, &ModelStore, &ModelStore) + 'a;

fn no_observer() -> impl FnMut(&Firing, &ModelStore, &ModelStore) {
    |_, _, _| {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    Irreducible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionResult {
    pub status: Status,
    /// The created `Statechart` element on success.
    pub statechart_root: Option<ElementId>,
    /// Container-less ORs found after the fixpoint.
    pub top_ors: usize,
    pub remaining_places: usize,
    pub remaining_transitions: usize,
}

impl ReductionResult {
    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }
}

/// Totals of one fixpoint run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FixpointStats {
    pub rounds: usize,
    pub and_firings: usize,
    pub or_firings: usize,
}

pub fn and_rule(
    pn: &mut ModelStore,
    sc: &mut ModelStore,
    side: Side,
    trace: &mut TraceMap,
) -> Result<RuleOutcome, TransformError> {
    and_rule_observed(pn, sc, side, trace, &mut no_observer())
}

pub fn and_rule_observed(
    pn: &mut ModelStore,
    sc: &mut ModelStore,
    side: Side,
    trace: &mut TraceMap,
    observer: &mut Observer<'_>,
) -> Result<RuleOutcome, TransformError> {
    let mut applied = false;
    for t in pn.all_of_kind(ElementKind::Transition) {
        if !pn.is_live(t) {
            continue;
        }
        let places = pn.refs_as_set(t, side.slot())?;
        if places.len() < 2 {
            continue;
        }
        let mut iter = places.iter().copied();
        let first = iter.next().expect("at least two places");
        let pret = pn.refs_as_set(first, Slot::Pret)?;
        let postt = pn.refs_as_set(first, Slot::Postt)?;
        let mut same = true;
        for q in iter {
            if pn.refs_as_set(q, Slot::Pret)? != pret || pn.refs_as_set(q, Slot::Postt)? != postt {
                same = false;
                break;
            }
        }
        if !same {
            continue;
        }

        let regions = places
            .iter()
            .map(|&p| trace.or_of(p))
            .collect::<Result<Vec<_>, _>>()?;
        let new_or = sc.create(ElementKind::Or, "");
        let new_and = sc.create(ElementKind::And, "");
        sc.set_refs(new_and, Slot::Contains, &regions)?;
        sc.add_ref(new_or, Slot::Contains, new_and)?;
        trace.place_to_or.insert(first, new_or);
        for &q in places.iter().skip(1) {
            pn.delete(q)?;
        }
        applied = true;
        observer(
            &Firing::And {
                transition: t,
                side,
                arity: places.len(),
            },
            pn,
            sc,
        );
    }
    Ok(RuleOutcome { applied })
}

/// Places reachable from `place` by following `first` then `second`.
fn adjacent_places(
    pn: &ModelStore,
    place: ElementId,
    first: Slot,
    second: Slot,
) -> Result<HashSet<ElementId>, TransformError> {
    let mut out = HashSet::new();
    for &t in pn.refs(place, first)? {
        out.extend(pn.refs(t, second)?.iter().copied());
    }
    Ok(out)
}

pub fn or_rule(pn: &mut ModelStore, sc: &mut ModelStore, trace: &mut TraceMap) -> Result<RuleOutcome, TransformError> {
    or_rule_observed(pn, sc, trace, &mut no_observer())
}

pub fn or_rule_observed(
    pn: &mut ModelStore,
    sc: &mut ModelStore,
    trace: &mut TraceMap,
    observer: &mut Observer<'_>,
) -> Result<RuleOutcome, TransformError> {
    let mut applied = false;
    for t in pn.all_of_kind(ElementKind::Transition) {
        if !pn.is_live(t) {
            continue;
        }
        let (&[q], &[r]) = (pn.refs(t, Slot::Prep)?, pn.refs(t, Slot::Postp)?) else {
            continue;
        };
        let matched = q == r
            || (!adjacent_places(pn, q, Slot::Pret, Slot::Postp)?.contains(&r)
                && !adjacent_places(pn, q, Slot::Postt, Slot::Prep)?.contains(&r));
        if !matched {
            continue;
        }
        if q != r {
            let merger = trace.or_of(q)?;
            let mergee = trace.or_of(r)?;
            let r_pret = pn.refs(r, Slot::Pret)?.to_vec();
            let r_postt = pn.refs(r, Slot::Postt)?.to_vec();
            pn.add_all(q, Slot::Pret, &r_pret)?;
            pn.add_all(q, Slot::Postt, &r_postt)?;
            pn.delete(r)?;
            sc.transfer_refs(mergee, Slot::Contains, merger)?;
            sc.delete(mergee)?;
        }
        pn.delete(t)?;
        applied = true;
        observer(&Firing::Or { transition: t, merged: q != r }, pn, sc);
    }
    Ok(RuleOutcome { applied })
}

/// Repeats rounds of AND(pre), AND(post), OR until a round fires nothing.
pub fn fixpoint(pn: &mut ModelStore, sc: &mut ModelStore, trace: &mut TraceMap) -> Result<FixpointStats, TransformError> {
    fixpoint_observed(pn, sc, trace, &mut no_observer())
}

pub fn fixpoint_observed(
    pn: &mut ModelStore,
    sc: &mut ModelStore,
    trace: &mut TraceMap,
    observer: &mut Observer<'_>,
) -> Result<FixpointStats, TransformError> {
    let mut stats = FixpointStats::default();
    let mut counting = |f: &Firing, pn: &ModelStore, sc: &ModelStore| {
        match f {
            Firing::And { .. } => stats.and_firings += 1,
            Firing::Or { .. } => stats.or_firings += 1,
        }
        observer(f, pn, sc);
    };
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut applied = and_rule_observed(pn, sc, Side::Pre, trace, &mut counting)?.applied;
        applied |= and_rule_observed(pn, sc, Side::Post, trace, &mut counting)?.applied;
        applied |= or_rule_observed(pn, sc, trace, &mut counting)?.applied;
        if !applied {
            break;
        }
    }
    stats.rounds = rounds;
    Ok(stats)
}

/// Wraps the single container-less OR in a new `Statechart` with an AND top
/// state. With zero or several such ORs nothing is created.
pub fn create_top(pn: &ModelStore, sc: &mut ModelStore) -> Result<ReductionResult, TransformError> {
    let top_ors: Vec<_> = sc
        .all_of_kind(ElementKind::Or)
        .into_iter()
        .filter(|&o| sc.container(o).is_none())
        .collect();
    let mut result = ReductionResult {
        status: Status::Irreducible,
        statechart_root: None,
        top_ors: top_ors.len(),
        remaining_places: pn.count(ElementKind::Place),
        remaining_transitions: pn.count(ElementKind::Transition),
    };
    if top_ors.len() == 1 {
        let statechart = sc.create(ElementKind::Statechart, "");
        let top = sc.create(ElementKind::And, "");
        sc.set_ref(statechart, Slot::TopState, top)?;
        sc.set_refs(top, Slot::Contains, &top_ors)?;
        result.status = Status::Success;
        result.statechart_root = Some(statechart);
    }
    Ok(result)
}

fn top_state(sc: &ModelStore) -> Result<ElementId, TransformError> {
    match sc.all_of_kind(ElementKind::Statechart)[..] {
        [s] => sc.single(s, Slot::TopState)?.ok_or(TransformError::NotReduced),
        _ => Err(TransformError::NotReduced),
    }
}

/// Nearest compound containing every member of `basics`, following the
/// ancestor chain of the smallest member.
pub fn nearest_common_ancestor(sc: &ModelStore, basics: &BTreeSet<ElementId>) -> Option<ElementId> {
    let mut members = basics.iter();
    let first = members.next()?;
    let others: Vec<HashSet<ElementId>> = members.map(|&b| sc.ancestors(b).into_iter().collect()).collect();
    sc.ancestors(*first)
        .into_iter()
        .find(|a| others.iter().all(|set| set.contains(a)))
}

/// Places every hyperedge in the nearest compound containing all Basics it
/// connects. Hyperedges without any connection go to the top AND.
pub fn assign_hyperedges(sc: &mut ModelStore) -> Result<(), TransformError> {
    let top = top_state(sc)?;
    for he in sc.all_of_kind(ElementKind::HyperEdge) {
        let mut basics = sc.refs_as_set(he, Slot::Next)?;
        basics.extend(sc.refs(he, Slot::Rnext)?.iter().copied());
        let container = if basics.is_empty() {
            top
        } else {
            nearest_common_ancestor(sc, &basics).ok_or(TransformError::NoCommonAncestor(he))?
        };
        sc.set_ref(he, Slot::Rcontains, container)?;
    }
    Ok(())
}

/// The full pipeline: initialize, reduce to a fixpoint, create the top
/// state and, on success, assign hyperedges. The reduction runs on a copy
/// of `pn`.
pub fn create_statechart(pn: &ModelStore) -> Result<(ModelStore, ReductionResult), TransformError> {
    let mut pn = pn.clone();
    let (mut sc, mut trace) = initialize_statechart(&pn)?;
    fixpoint(&mut pn, &mut sc, &mut trace)?;
    let result = create_top(&pn, &mut sc)?;
    if result.is_success() {
        assign_hyperedges(&mut sc)?;
    }
    Ok((sc, result))
}
