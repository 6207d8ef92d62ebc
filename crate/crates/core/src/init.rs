//! Element-wise initialization: every place becomes an OR state wrapping a
//! Basic state, every transition a hyperedge, and the arcs of the net are
//! mirrored as `next`/`rnext` links between Basics and hyperedges.

use std::collections::BTreeMap;

use crate::error::TransformError;
use crate::model::{ElementId, ElementKind, ModelStore, Slot};

/// Correspondence between net elements and the statechart elements created
/// for them. `place_to_or` is rewritten by the reduction rules as ORs are
/// wrapped and merged; entries of deleted places are left in place.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceMap {
    pub place_to_or: BTreeMap<ElementId, ElementId>,
    pub place_to_basic: BTreeMap<ElementId, ElementId>,
    pub transition_to_hyperedge: BTreeMap<ElementId, ElementId>,
}

impl TraceMap {
    pub fn or_of(&self, place: ElementId) -> Result<ElementId, TransformError> {
        self.place_to_or
            .get(&place)
            .copied()
            .ok_or(TransformError::TraceMiss(place))
    }
}

fn expect_kind(pn: &ModelStore, id: ElementId, expected: ElementKind) -> Result<(), TransformError> {
    let found = pn.kind(id)?;
    if found != expected {
        return Err(TransformError::WrongKind { id, expected, found });
    }
    Ok(())
}

/// Creates (or returns the memoized) hyperedge for `transition`.
pub fn rule_transition2hyperedge(
    pn: &ModelStore,
    sc: &mut ModelStore,
    trace: &mut TraceMap,
    transition: ElementId,
) -> Result<ElementId, TransformError> {
    expect_kind(pn, transition, ElementKind::Transition)?;
    if let Some(&he) = trace.transition_to_hyperedge.get(&transition) {
        return Ok(he);
    }
    let he = sc.create(ElementKind::HyperEdge, pn.name(transition)?);
    trace.transition_to_hyperedge.insert(transition, he);
    Ok(he)
}

/// Creates (or returns the memoized) `(OR, Basic)` pair for `place`.
pub fn rule_place2basic_and_or(
    pn: &ModelStore,
    sc: &mut ModelStore,
    trace: &mut TraceMap,
    place: ElementId,
) -> Result<(ElementId, ElementId), TransformError> {
    expect_kind(pn, place, ElementKind::Place)?;
    if let (Some(&o), Some(&b)) = (trace.place_to_or.get(&place), trace.place_to_basic.get(&place)) {
        return Ok((o, b));
    }
    let or = sc.create(ElementKind::Or, "");
    let basic = sc.create(ElementKind::Basic, pn.name(place)?);
    trace.place_to_or.insert(place, or);
    trace.place_to_basic.insert(place, basic);
    sc.set_ref(basic, Slot::Rcontains, or)?;
    for &t in pn.refs(place, Slot::Pret)? {
        let he = rule_transition2hyperedge(pn, sc, trace, t)?;
        sc.add_ref(basic, Slot::Rnext, he)?;
    }
    for &t in pn.refs(place, Slot::Postt)? {
        let he = rule_transition2hyperedge(pn, sc, trace, t)?;
        sc.add_ref(basic, Slot::Next, he)?;
    }
    Ok((or, basic))
}

/// Runs the place rule over every place of `pn` in ascending id order.
pub fn initialize_statechart(pn: &ModelStore) -> Result<(ModelStore, TraceMap), TransformError> {
    let mut sc = ModelStore::new();
    let mut trace = TraceMap::default();
    for p in pn.all_of_kind(ElementKind::Place) {
        rule_place2basic_and_or(pn, &mut sc, &mut trace, p)?;
    }
    // Transitions without any arc are not reached through a place.
    for t in pn.all_of_kind(ElementKind::Transition) {
        rule_transition2hyperedge(pn, &mut sc, &mut trace, t)?;
    }
    Ok((sc, trace))
}
