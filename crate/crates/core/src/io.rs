//! JSON documents for Petri nets and statecharts.
//!
//! Petri nets are flat lists of places and transitions whose arcs refer to
//! place ids. Statecharts are written as a containment tree rooted at the
//! `Statechart` node, plus per-class instance counts. Output is canonical:
//! children are ordered by `(kind, name)` with creation order breaking ties,
//! uids are assigned in pre-order, and `next` lists are sorted by uid.
//!
//! Both Basics and hyperedges carry `next`; `rnext` is implied as its
//! opposite and never written.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ElementId, ElementKind, ModelError, ModelStore, Slot};
use crate::reduce::ReductionResult;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("transition `{transition}` refers to unknown place `{place}`")]
    UnresolvedId { transition: String, place: String },
    #[error("transition `{transition}` lists place `{place}` twice in `{list}`")]
    DuplicateArc {
        transition: String,
        place: String,
        list: &'static str,
    },
    #[error("unknown element kind `{0}`")]
    UnknownKind(String),
    #[error("duplicate uid {0}")]
    DuplicateUid(u64),
    #[error("unresolved uid {0} in `next`")]
    UnresolvedUid(u64),
    #[error("malformed statechart: {0}")]
    Structure(String),
    #[error("counts object does not match the tree: declared {declared:?}, found {found:?}")]
    CountsMismatch { declared: Counts, found: Counts },
    #[error("reduction did not succeed ({top_ors} top-level OR states, {places} places and {transitions} transitions remain); no statechart to write")]
    Irreducible {
        top_ors: usize,
        places: usize,
        transitions: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaceEntry {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub id: String,
    pub name: String,
    pub pre: Vec<String>,
    pub post: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PetriNetDocument {
    pub places: Vec<PlaceEntry>,
    pub transitions: Vec<TransitionEntry>,
}

impl PetriNetDocument {
    pub fn from_json(bytes: &[u8]) -> Result<Self, FormatError> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("document serializes");
        out.push(b'\n');
        out
    }

    /// Builds a model: places first, then transitions, each in document order.
    pub fn to_store(&self) -> Result<ModelStore, FormatError> {
        let mut pn = ModelStore::new();
        let mut places = HashMap::with_capacity(self.places.len());
        for p in &self.places {
            let id = pn.create(ElementKind::Place, p.name.as_str());
            if places.insert(p.id.as_str(), id).is_some() {
                return Err(FormatError::DuplicateId(p.id.clone()));
            }
        }
        let mut seen = HashSet::with_capacity(self.transitions.len());
        for t in &self.transitions {
            if places.contains_key(t.id.as_str()) || !seen.insert(t.id.as_str()) {
                return Err(FormatError::DuplicateId(t.id.clone()));
            }
            let tid = pn.create(ElementKind::Transition, t.name.as_str());
            for (list, slot, refs) in [("pre", Slot::Prep, &t.pre), ("post", Slot::Postp, &t.post)] {
                for place in refs {
                    let pid = *places.get(place.as_str()).ok_or_else(|| FormatError::UnresolvedId {
                        transition: t.id.clone(),
                        place: place.clone(),
                    })?;
                    if pn.refs(tid, slot)?.contains(&pid) {
                        return Err(FormatError::DuplicateArc {
                            transition: t.id.clone(),
                            place: place.clone(),
                            list,
                        });
                    }
                    pn.add_ref(tid, slot, pid)?;
                }
            }
        }
        Ok(pn)
    }
}

pub fn read_petri_net(bytes: &[u8]) -> Result<ModelStore, FormatError> {
    PetriNetDocument::from_json(bytes)?.to_store()
}

/// Instance counts of the statechart metamodel classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    pub statechart: usize,
    pub and: usize,
    pub or: usize,
    pub basic: usize,
    pub hyperedge: usize,
}

impl Counts {
    pub fn of(sc: &ModelStore) -> Counts {
        Counts {
            statechart: sc.count(ElementKind::Statechart),
            and: sc.count(ElementKind::And),
            or: sc.count(ElementKind::Or),
            basic: sc.count(ElementKind::Basic),
            hyperedge: sc.count(ElementKind::HyperEdge),
        }
    }

    pub fn get(&self, kind: ElementKind) -> usize {
        match kind {
            ElementKind::Statechart => self.statechart,
            ElementKind::And => self.and,
            ElementKind::Or => self.or,
            ElementKind::Basic => self.basic,
            ElementKind::HyperEdge => self.hyperedge,
            ElementKind::Place | ElementKind::Transition => 0,
        }
    }

    fn bump(&mut self, kind: ElementKind) {
        match kind {
            ElementKind::Statechart => self.statechart += 1,
            ElementKind::And => self.and += 1,
            ElementKind::Or => self.or += 1,
            ElementKind::Basic => self.basic += 1,
            ElementKind::HyperEdge => self.hyperedge += 1,
            ElementKind::Place | ElementKind::Transition => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub uid: u64,
    pub kind: String,
    pub name: String,
    #[serde(default)]
    pub children: Vec<NodeDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatechartDocument {
    pub root: NodeDocument,
    pub counts: Counts,
}

impl StatechartDocument {
    pub fn from_json(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut de = serde_json::Deserializer::from_slice(bytes);
        de.disable_recursion_limit();
        let doc = StatechartDocument::deserialize(&mut de)?;
        de.end()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("document serializes");
        out.push(b'\n');
        out
    }

    /// Canonical document for a model holding exactly one `Statechart`
    /// whose tree covers every live statechart element.
    pub fn from_store(sc: &ModelStore) -> Result<Self, FormatError> {
        let root = match sc.all_of_kind(ElementKind::Statechart)[..] {
            [root] => root,
            ref found => {
                return Err(FormatError::Structure(format!(
                    "expected exactly one Statechart element, found {}",
                    found.len()
                )))
            }
        };

        // Pre-order walk over canonically sorted children.
        let mut order = Vec::new();
        let mut children_of: HashMap<ElementId, Vec<ElementId>> = HashMap::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            order.push(id);
            let kids = sorted_children(sc, id)?;
            stack.extend(kids.iter().rev().copied());
            children_of.insert(id, kids);
        }
        let live = sc.len() - sc.count(ElementKind::Place) - sc.count(ElementKind::Transition);
        if order.len() != live {
            return Err(FormatError::Structure(format!(
                "{} statechart elements are outside the containment tree",
                live - order.len()
            )));
        }
        let uid: HashMap<ElementId, u64> = order.iter().enumerate().map(|(i, &id)| (id, i as u64)).collect();

        fn build(
            sc: &ModelStore,
            id: ElementId,
            uid: &HashMap<ElementId, u64>,
            children_of: &HashMap<ElementId, Vec<ElementId>>,
        ) -> Result<NodeDocument, FormatError> {
            let kind = sc.kind(id)?;
            let next = match kind {
                ElementKind::Basic | ElementKind::HyperEdge => {
                    let mut next: Vec<u64> = sc.refs(id, Slot::Next)?.iter().map(|t| uid[t]).collect();
                    next.sort_unstable();
                    Some(next)
                }
                _ => None,
            };
            let children = children_of[&id]
                .iter()
                .map(|&c| build(sc, c, uid, children_of))
                .collect::<Result<_, _>>()?;
            Ok(NodeDocument {
                uid: uid[&id],
                kind: kind.as_str().to_owned(),
                name: sc.name(id)?.to_owned(),
                children,
                next,
            })
        }

        Ok(StatechartDocument {
            root: build(sc, root, &uid, &children_of)?,
            counts: Counts::of(sc),
        })
    }

    /// Rebuilds a model; elements are created in pre-order.
    pub fn to_store(&self) -> Result<ModelStore, FormatError> {
        let mut sc = ModelStore::new();
        let mut by_uid: BTreeMap<u64, ElementId> = BTreeMap::new();
        let mut pending_next: Vec<(ElementId, &[u64])> = Vec::new();
        let mut found = Counts::default();

        let mut stack: Vec<(&NodeDocument, Option<ElementId>)> = vec![(&self.root, None)];
        while let Some((node, parent)) = stack.pop() {
            let kind = ElementKind::parse(&node.kind)
                .filter(|k| !k.is_petri_net())
                .ok_or_else(|| FormatError::UnknownKind(node.kind.clone()))?;
            let id = sc.create(kind, node.name.as_str());
            if by_uid.insert(node.uid, id).is_some() {
                return Err(FormatError::DuplicateUid(node.uid));
            }
            found.bump(kind);
            match (parent, kind) {
                (None, _) => {}
                (Some(_), ElementKind::Statechart) => {
                    return Err(FormatError::Structure(format!(
                        "Statechart node {} must be the root",
                        node.uid
                    )))
                }
                (Some(p), _) => match sc.kind(p)? {
                    ElementKind::Statechart if kind == ElementKind::And => {
                        if sc.single(p, Slot::TopState)?.is_some() {
                            return Err(FormatError::Structure("Statechart has more than one top state".into()));
                        }
                        sc.set_ref(p, Slot::TopState, id)?;
                    }
                    ElementKind::Statechart => {
                        return Err(FormatError::Structure(format!(
                            "top state {} must be an AND, found {kind}",
                            node.uid
                        )))
                    }
                    pk if pk.is_compound() => sc.add_ref(p, Slot::Contains, id)?,
                    pk => {
                        return Err(FormatError::Structure(format!(
                            "{pk} nodes cannot have children (node {})",
                            node.uid
                        )))
                    }
                },
            }
            match (&node.next, kind) {
                (Some(next), ElementKind::Basic | ElementKind::HyperEdge) => pending_next.push((id, next)),
                (None, _) => {}
                (Some(_), _) => {
                    return Err(FormatError::Structure(format!(
                        "`next` is only allowed on Basic and HyperEdge nodes (node {})",
                        node.uid
                    )))
                }
            }
            stack.extend(node.children.iter().rev().map(|c| (c, Some(id))));
        }

        for (owner, next) in pending_next {
            for uid in next {
                let target = *by_uid.get(uid).ok_or(FormatError::UnresolvedUid(*uid))?;
                sc.add_ref(owner, Slot::Next, target).map_err(|e| match e {
                    ModelError::IllegalTarget { .. } => {
                        FormatError::Structure(format!("`next` entry {uid} has the wrong kind ({e})"))
                    }
                    e => e.into(),
                })?;
            }
        }
        if found != self.counts {
            return Err(FormatError::CountsMismatch {
                declared: self.counts,
                found,
            });
        }
        Ok(sc)
    }
}

fn sorted_children(sc: &ModelStore, id: ElementId) -> Result<Vec<ElementId>, FormatError> {
    let kind = sc.kind(id)?;
    let mut kids: Vec<ElementId> = if kind == ElementKind::Statechart {
        sc.single(id, Slot::TopState)?.into_iter().collect()
    } else if kind.is_compound() {
        sc.refs(id, Slot::Contains)?.to_vec()
    } else {
        Vec::new()
    };
    let mut keyed = Vec::with_capacity(kids.len());
    for k in kids.drain(..) {
        keyed.push((sc.kind(k)?.as_str(), sc.name(k)?, k));
    }
    keyed.sort_unstable();
    Ok(keyed.into_iter().map(|(_, _, k)| k).collect())
}

/// Serializes a successful reduction.
pub fn write_statechart(sc: &ModelStore, result: &ReductionResult) -> Result<Vec<u8>, FormatError> {
    if !result.is_success() {
        return Err(FormatError::Irreducible {
            top_ors: result.top_ors,
            places: result.remaining_places,
            transitions: result.remaining_transitions,
        });
    }
    Ok(StatechartDocument::from_store(sc)?.to_json())
}

pub fn read_statechart(bytes: &[u8]) -> Result<ModelStore, FormatError> {
    StatechartDocument::from_json(bytes)?.to_store()
}
