//! Typed element graph shared by the Petri net and statechart metamodels.
//!
//! A [`ModelStore`] holds elements of every [`ElementKind`] addressed by
//! stable, never-reused [`ElementId`]s. References live in named
//! [`Slot`]s; every slot except `topState` has an opposite slot that is kept
//! consistent on every mutation, and deleting an element removes every
//! reference to it.
//!
//! Iteration is always by ascending id, so any algorithm built on the store
//! is reproducible run to run.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Stable element identity. Ids are handed out in creation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(u32);

impl ElementId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementKind {
    Place,
    Transition,
    Basic,
    Or,
    And,
    HyperEdge,
    Statechart,
}

impl ElementKind {
    pub const ALL: [ElementKind; 7] = [
        ElementKind::Place,
        ElementKind::Transition,
        ElementKind::Basic,
        ElementKind::Or,
        ElementKind::And,
        ElementKind::HyperEdge,
        ElementKind::Statechart,
    ];

    /// The statechart metamodel classes, in reporting order.
    pub const STATECHART: [ElementKind; 5] = [
        ElementKind::Statechart,
        ElementKind::And,
        ElementKind::Or,
        ElementKind::Basic,
        ElementKind::HyperEdge,
    ];

    pub fn is_compound(self) -> bool {
        matches!(self, ElementKind::Or | ElementKind::And)
    }

    pub fn is_state(self) -> bool {
        matches!(self, ElementKind::Basic | ElementKind::Or | ElementKind::And)
    }

    /// Anything that may sit inside a compound state.
    pub fn is_containable(self) -> bool {
        self.is_state() || self == ElementKind::HyperEdge
    }

    pub fn is_petri_net(self) -> bool {
        matches!(self, ElementKind::Place | ElementKind::Transition)
    }

    /// Metamodel class name, as used in serialized statecharts.
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Place => "Place",
            ElementKind::Transition => "Transition",
            ElementKind::Basic => "Basic",
            ElementKind::Or => "OR",
            ElementKind::And => "AND",
            ElementKind::HyperEdge => "HyperEdge",
            ElementKind::Statechart => "Statechart",
        }
    }

    pub fn parse(s: &str) -> Option<ElementKind> {
        ElementKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    fn ordinal(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Named reference slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    /// Transition → pre-places.
    Prep,
    /// Transition → post-places.
    Postp,
    /// Place → pre-transitions.
    Pret,
    /// Place → post-transitions.
    Postt,
    Contains,
    Rcontains,
    Next,
    Rnext,
    TopState,
}

impl Slot {
    pub fn opposite(self) -> Option<Slot> {
        Some(match self {
            Slot::Prep => Slot::Postt,
            Slot::Postt => Slot::Prep,
            Slot::Postp => Slot::Pret,
            Slot::Pret => Slot::Postp,
            Slot::Contains => Slot::Rcontains,
            Slot::Rcontains => Slot::Contains,
            Slot::Next => Slot::Rnext,
            Slot::Rnext => Slot::Next,
            Slot::TopState => return None,
        })
    }

    pub fn is_single_valued(self) -> bool {
        matches!(self, Slot::Rcontains | Slot::TopState)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Slot::Prep => "prep",
            Slot::Postp => "postp",
            Slot::Pret => "pret",
            Slot::Postt => "postt",
            Slot::Contains => "contains",
            Slot::Rcontains => "rcontains",
            Slot::Next => "next",
            Slot::Rnext => "rnext",
            Slot::TopState => "topState",
        }
    }

    /// Whether `owner` may carry this slot.
    pub fn allowed_on(self, owner: ElementKind) -> bool {
        use ElementKind::*;
        match self {
            Slot::Pret | Slot::Postt => owner == Place,
            Slot::Prep | Slot::Postp => owner == Transition,
            Slot::Contains => owner.is_compound(),
            Slot::Rcontains => owner.is_containable(),
            Slot::Next | Slot::Rnext => matches!(owner, Basic | HyperEdge),
            Slot::TopState => owner == Statechart,
        }
    }

    /// Whether `target` is a legal value for this slot on `owner`.
    pub fn accepts(self, owner: ElementKind, target: ElementKind) -> bool {
        use ElementKind::*;
        if !self.allowed_on(owner) {
            return false;
        }
        match self {
            Slot::Pret | Slot::Postt => target == Transition,
            Slot::Prep | Slot::Postp => target == Place,
            Slot::Contains => target.is_containable(),
            Slot::Rcontains => target.is_compound(),
            Slot::Next | Slot::Rnext => match owner {
                Basic => target == HyperEdge,
                _ => target == Basic,
            },
            Slot::TopState => target == And,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("element {0} does not exist")]
    Unknown(ElementId),
    #[error("element {0} has been deleted")]
    Dead(ElementId),
    #[error("{kind} elements have no `{slot}` reference")]
    IllegalSlot { kind: ElementKind, slot: Slot },
    #[error("`{slot}` of a {owner} cannot refer to a {target}")]
    IllegalTarget {
        owner: ElementKind,
        slot: Slot,
        target: ElementKind,
    },
    #[error("`{0}` is single-valued")]
    SingleValued(Slot),
    #[error("containing {child} in {parent} would create a containment cycle")]
    ContainmentCycle { parent: ElementId, child: ElementId },
}

#[derive(Debug, Clone)]
struct Element {
    kind: ElementKind,
    name: String,
    live: bool,
    // Only slots that have ever been populated; at most four per kind.
    slots: Vec<(Slot, Vec<ElementId>)>,
}

impl Element {
    fn refs(&self, slot: Slot) -> &[ElementId] {
        self.slots
            .iter()
            .find(|(s, _)| *s == slot)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }

    fn refs_mut(&mut self, slot: Slot) -> &mut Vec<ElementId> {
        let pos = match self.slots.iter().position(|(s, _)| *s == slot) {
            Some(pos) => pos,
            None => {
                self.slots.push((slot, Vec::new()));
                self.slots.len() - 1
            }
        };
        &mut self.slots[pos].1
    }
}

/// In-memory element graph. See the module docs.
#[derive(Debug, Clone, Default)]
pub struct ModelStore {
    elements: Vec<Element>,
    by_kind: [BTreeSet<ElementId>; 7],
}

impl ModelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&mut self, kind: ElementKind, name: impl Into<String>) -> ElementId {
        let id = ElementId(u32::try_from(self.elements.len()).expect("element id space exhausted"));
        self.elements.push(Element {
            kind,
            name: name.into(),
            live: true,
            slots: Vec::new(),
        });
        self.by_kind[kind.ordinal()].insert(id);
        id
    }

    fn element(&self, id: ElementId) -> Result<&Element, ModelError> {
        match self.elements.get(id.index()) {
            None => Err(ModelError::Unknown(id)),
            Some(e) if !e.live => Err(ModelError::Dead(id)),
            Some(e) => Ok(e),
        }
    }

    fn element_mut(&mut self, id: ElementId) -> Result<&mut Element, ModelError> {
        match self.elements.get_mut(id.index()) {
            None => Err(ModelError::Unknown(id)),
            Some(e) if !e.live => Err(ModelError::Dead(id)),
            Some(e) => Ok(e),
        }
    }

    pub fn is_live(&self, id: ElementId) -> bool {
        self.elements.get(id.index()).is_some_and(|e| e.live)
    }

    pub fn kind(&self, id: ElementId) -> Result<ElementKind, ModelError> {
        self.element(id).map(|e| e.kind)
    }

    pub fn name(&self, id: ElementId) -> Result<&str, ModelError> {
        self.element(id).map(|e| e.name.as_str())
    }

    pub fn set_name(&mut self, id: ElementId, name: impl Into<String>) -> Result<(), ModelError> {
        self.element_mut(id)?.name = name.into();
        Ok(())
    }

    /// Number of live elements.
    pub fn len(&self) -> usize {
        self.by_kind.iter().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self, kind: ElementKind) -> usize {
        self.by_kind[kind.ordinal()].len()
    }

    /// Live elements of `kind`, ascending by id.
    pub fn all_of_kind(&self, kind: ElementKind) -> Vec<ElementId> {
        self.by_kind[kind.ordinal()].iter().copied().collect()
    }

    /// All live elements, ascending by id.
    pub fn live_ids(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, e)| e.live)
            .map(|(i, _)| ElementId(i as u32))
    }

    fn check_slot(&self, owner: ElementId, slot: Slot) -> Result<&Element, ModelError> {
        let e = self.element(owner)?;
        if !slot.allowed_on(e.kind) {
            return Err(ModelError::IllegalSlot { kind: e.kind, slot });
        }
        Ok(e)
    }

    /// Values of `slot` on `owner`, in insertion order.
    pub fn refs(&self, owner: ElementId, slot: Slot) -> Result<&[ElementId], ModelError> {
        Ok(self.check_slot(owner, slot)?.refs(slot))
    }

    pub fn refs_as_set(&self, owner: ElementId, slot: Slot) -> Result<BTreeSet<ElementId>, ModelError> {
        Ok(self.refs(owner, slot)?.iter().copied().collect())
    }

    /// Value of a single-valued slot.
    pub fn single(&self, owner: ElementId, slot: Slot) -> Result<Option<ElementId>, ModelError> {
        Ok(self.refs(owner, slot)?.first().copied())
    }

    /// Containing compound of a containable element, if any.
    pub fn container(&self, id: ElementId) -> Option<ElementId> {
        self.elements
            .get(id.index())
            .filter(|e| e.live)
            .and_then(|e| e.refs(Slot::Rcontains).first().copied())
    }

    /// Ancestor compounds, nearest first.
    pub fn ancestors(&self, id: ElementId) -> Vec<ElementId> {
        let mut out = Vec::new();
        let mut cur = self.container(id);
        while let Some(c) = cur {
            out.push(c);
            cur = self.container(c);
        }
        out
    }

    fn validate_link(&self, owner: ElementId, slot: Slot, target: ElementId) -> Result<(), ModelError> {
        let o = self.check_slot(owner, slot)?;
        let t = self.element(target)?;
        if !slot.accepts(o.kind, t.kind) {
            return Err(ModelError::IllegalTarget {
                owner: o.kind,
                slot,
                target: t.kind,
            });
        }
        let (parent, child) = match slot {
            Slot::Contains => (owner, target),
            Slot::Rcontains => (target, owner),
            _ => return Ok(()),
        };
        if parent == child || self.ancestors(parent).contains(&child) {
            return Err(ModelError::ContainmentCycle { parent, child });
        }
        Ok(())
    }

    fn has_link(&self, owner: ElementId, slot: Slot, target: ElementId) -> bool {
        let mine = self.elements[owner.index()].refs(slot);
        match slot.opposite() {
            Some(opp) => {
                let theirs = self.elements[target.index()].refs(opp);
                if theirs.len() < mine.len() {
                    theirs.contains(&owner)
                } else {
                    mine.contains(&target)
                }
            }
            None => mine.contains(&target),
        }
    }

    fn remove_value(&mut self, owner: ElementId, slot: Slot, target: ElementId) {
        let list = self.elements[owner.index()].refs_mut(slot);
        if let Some(pos) = list.iter().rposition(|&x| x == target) {
            list.remove(pos);
        }
    }

    /// Drop the pair (owner.slot ∋ target) and its opposite half.
    fn unlink(&mut self, owner: ElementId, slot: Slot, target: ElementId) {
        self.remove_value(owner, slot, target);
        if let Some(opp) = slot.opposite() {
            self.remove_value(target, opp, owner);
        }
    }

    /// Append without validation; caller has checked kinds and liveness.
    fn link(&mut self, owner: ElementId, slot: Slot, target: ElementId) {
        if self.has_link(owner, slot, target) {
            return;
        }
        if slot.is_single_valued() {
            if let Some(old) = self.elements[owner.index()].refs(slot).first().copied() {
                self.unlink(owner, slot, old);
            }
        }
        if let Some(opp) = slot.opposite() {
            if opp.is_single_valued() {
                if let Some(old) = self.elements[target.index()].refs(opp).first().copied() {
                    self.unlink(target, opp, old);
                }
            }
            self.elements[target.index()].refs_mut(opp).push(owner);
        }
        self.elements[owner.index()].refs_mut(slot).push(target);
    }

    /// Append `target` to `owner.slot` unless already present, keeping the
    /// opposite slot in sync. On a single-valued slot this replaces the
    /// previous value.
    pub fn add_ref(&mut self, owner: ElementId, slot: Slot, target: ElementId) -> Result<(), ModelError> {
        self.validate_link(owner, slot, target)?;
        self.link(owner, slot, target);
        Ok(())
    }

    pub fn add_all(&mut self, owner: ElementId, slot: Slot, targets: &[ElementId]) -> Result<(), ModelError> {
        for &t in targets {
            self.add_ref(owner, slot, t)?;
        }
        Ok(())
    }

    /// Replace the value of a single-valued slot.
    pub fn set_ref(&mut self, owner: ElementId, slot: Slot, target: ElementId) -> Result<(), ModelError> {
        if !slot.is_single_valued() {
            return Err(ModelError::SingleValued(slot));
        }
        self.add_ref(owner, slot, target)
    }

    /// Replace the whole content of `owner.slot`.
    pub fn set_refs(&mut self, owner: ElementId, slot: Slot, targets: &[ElementId]) -> Result<(), ModelError> {
        for &t in targets {
            self.validate_link(owner, slot, t)?;
        }
        self.clear_slot(owner, slot)?;
        for &t in targets {
            self.link(owner, slot, t);
        }
        Ok(())
    }

    pub fn clear_slot(&mut self, owner: ElementId, slot: Slot) -> Result<(), ModelError> {
        self.check_slot(owner, slot)?;
        let old = std::mem::take(self.elements[owner.index()].refs_mut(slot));
        if let Some(opp) = slot.opposite() {
            for t in old {
                self.remove_value(t, opp, owner);
            }
        }
        Ok(())
    }

    pub fn remove_ref(&mut self, owner: ElementId, slot: Slot, target: ElementId) -> Result<(), ModelError> {
        self.check_slot(owner, slot)?;
        self.element(target)?;
        self.unlink(owner, slot, target);
        Ok(())
    }

    /// Move every value of `from.slot` onto `to.slot`, preserving order.
    /// Used to empty one compound into another without the per-child
    /// detach cost.
    pub fn transfer_refs(&mut self, from: ElementId, slot: Slot, to: ElementId) -> Result<(), ModelError> {
        self.check_slot(from, slot)?;
        self.check_slot(to, slot)?;
        let moved = self.elements[from.index()].refs(slot).to_vec();
        for &t in &moved {
            self.validate_link(to, slot, t)?;
        }
        self.elements[from.index()].refs_mut(slot).clear();
        let opp = slot.opposite();
        for t in moved {
            if let Some(opp) = opp {
                self.remove_value(t, opp, from);
            }
            self.link(to, slot, t);
        }
        Ok(())
    }

    /// Delete an element and every reference to it. Contained elements are
    /// not deleted; they become uncontained.
    pub fn delete(&mut self, id: ElementId) -> Result<(), ModelError> {
        let kind = self.element(id)?.kind;
        let slots = std::mem::take(&mut self.elements[id.index()].slots);
        for (slot, targets) in slots {
            if let Some(opp) = slot.opposite() {
                for t in targets {
                    self.remove_value(t, opp, id);
                }
            }
        }
        if kind == ElementKind::And {
            // topState has no opposite slot.
            for sc in self.all_of_kind(ElementKind::Statechart) {
                self.remove_value(sc, Slot::TopState, id);
            }
        }
        self.elements[id.index()].live = false;
        self.by_kind[kind.ordinal()].remove(&id);
        Ok(())
    }

    /// Full scan of the structural invariants: opposite consistency, no
    /// dangling or duplicate references, single-valued cardinality, legal
    /// kinds, acyclic containment.
    pub fn check_invariants(&self) -> Result<(), String> {
        for id in self.live_ids() {
            let e = &self.elements[id.index()];
            for (slot, values) in &e.slots {
                if values.is_empty() {
                    continue;
                }
                if !slot.allowed_on(e.kind) {
                    return Err(format!("{id} ({}) carries illegal slot {slot}", e.kind));
                }
                if slot.is_single_valued() && values.len() > 1 {
                    return Err(format!("{id}.{slot} holds {} values", values.len()));
                }
                let mut seen = BTreeSet::new();
                for &t in values {
                    if !seen.insert(t) {
                        return Err(format!("{id}.{slot} lists {t} twice"));
                    }
                    let Ok(te) = self.element(t) else {
                        return Err(format!("{id}.{slot} dangles at {t}"));
                    };
                    if !slot.accepts(e.kind, te.kind) {
                        return Err(format!("{id}.{slot} refers to a {}", te.kind));
                    }
                    if let Some(opp) = slot.opposite() {
                        if !te.refs(opp).contains(&id) {
                            return Err(format!("{id}.{slot} ∋ {t} but {t}.{opp} ∌ {id}"));
                        }
                    }
                }
            }
            let mut seen = BTreeSet::from([id]);
            let mut cur = self.container(id);
            while let Some(c) = cur {
                if !seen.insert(c) {
                    return Err(format!("containment cycle through {id}"));
                }
                cur = self.container(c);
            }
        }
        Ok(())
    }
}
