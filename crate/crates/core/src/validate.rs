//! Structural comparison of a produced statechart against an expected one.
//!
//! [`validate_counts`] compares the number of instances of each statechart
//! class. [`validate_full`] matches the two containment forests node by
//! node and then compares the `next`/`rnext` sets of every matched
//! hyperedge.
//!
//! Matching works on canonical subtree hashes: a node hashes its kind, its
//! name, its children's hashes as a multiset and, for hyperedges, the
//! position of every connected Basic. Siblings with equal hashes are
//! interchangeable and are paired directly. Leftover siblings are paired by
//! kind and name (preferring the candidate with most children in common) and
//! compared recursively. Whatever stays unpaired is reported missing or
//! extra, except that a missing and an extra node with identical subtrees are
//! reported as one element sitting in the wrong container.
//!
//! Connected Basics are identified by position: the chain of link-free
//! subtree hashes from the root down to the Basic. After matching, every
//! matched actual node takes the position of its expected counterpart.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::io::Counts;
use crate::model::{ElementId, ElementKind, ModelStore, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Counts,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiscrepancyKind {
    CountMismatch,
    MissingNode,
    ExtraNode,
    WrongContainer,
    NextSetMismatch,
}

impl DiscrepancyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscrepancyKind::CountMismatch => "count-mismatch",
            DiscrepancyKind::MissingNode => "missing-node",
            DiscrepancyKind::ExtraNode => "extra-node",
            DiscrepancyKind::WrongContainer => "wrong-container",
            DiscrepancyKind::NextSetMismatch => "next-set-mismatch",
        }
    }
}

impl fmt::Display for DiscrepancyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    pub kind: DiscrepancyKind,
    pub detail: String,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub level: Level,
    pub discrepancies: Vec<Discrepancy>,
    pub passed: bool,
}

impl ValidationReport {
    fn new(level: Level, discrepancies: Vec<Discrepancy>) -> Self {
        let passed = discrepancies.is_empty();
        Self {
            level,
            discrepancies,
            passed,
        }
    }

    pub fn has(&self, kind: DiscrepancyKind) -> bool {
        self.discrepancies.iter().any(|d| d.kind == kind)
    }
}

pub fn validate_counts(actual: &ModelStore, expected: &ModelStore) -> ValidationReport {
    let (a, e) = (Counts::of(actual), Counts::of(expected));
    let discrepancies = ElementKind::STATECHART
        .iter()
        .filter(|&&k| a.get(k) != e.get(k))
        .map(|&k| Discrepancy {
            kind: DiscrepancyKind::CountMismatch,
            detail: format!("{k}: expected {}, found {}", e.get(k), a.get(k)),
        })
        .collect();
    ValidationReport::new(Level::Counts, discrepancies)
}

fn hash_of<T: Hash>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

/// Canonical view of one model's containment forest.
struct Forest<'m> {
    sc: &'m ModelStore,
    roots: Vec<ElementId>,
    children: HashMap<ElementId, Vec<ElementId>>,
    parent: HashMap<ElementId, ElementId>,
    /// Subtree hash ignoring hyperedge links.
    plain: HashMap<ElementId, u64>,
    /// Hash of the chain of link-free subtrees from the root down to a node.
    position: HashMap<ElementId, u64>,
    /// Canonical subtree hash including hyperedge links.
    shape: HashMap<ElementId, u64>,
}

impl<'m> Forest<'m> {
    fn new(sc: &'m ModelStore) -> Self {
        let mut children: HashMap<ElementId, Vec<ElementId>> = HashMap::new();
        let mut parent = HashMap::new();
        for id in sc.live_ids() {
            let kind = sc.kind(id).expect("live");
            let kids: Vec<ElementId> = match kind {
                ElementKind::Statechart => sc.single(id, Slot::TopState).expect("slot").into_iter().collect(),
                k if k.is_compound() => sc.refs(id, Slot::Contains).expect("slot").to_vec(),
                _ => Vec::new(),
            };
            for &k in &kids {
                parent.insert(k, id);
            }
            children.insert(id, kids);
        }
        let roots: Vec<ElementId> = sc
            .live_ids()
            .filter(|id| !sc.kind(*id).expect("live").is_petri_net() && !parent.contains_key(id))
            .collect();

        // Pre-order, so reversing it visits children before parents.
        let mut order = Vec::new();
        let mut stack = roots.clone();
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(children[&id].iter().copied());
        }

        let mut plain: HashMap<ElementId, u64> = HashMap::new();
        for &id in order.iter().rev() {
            let mut kids: Vec<u64> = children[&id].iter().map(|c| plain[c]).collect();
            kids.sort_unstable();
            plain.insert(id, hash_of(&(sc.kind(id).expect("live"), sc.name(id).expect("live"), kids)));
        }
        let mut position = HashMap::new();
        for &id in &order {
            let up = parent.get(&id).map_or(0, |p| position[p]);
            position.insert(id, hash_of(&(up, plain[&id])));
        }

        let mut forest = Forest {
            sc,
            roots,
            children,
            parent,
            position,
            plain,
            shape: HashMap::new(),
        };
        for &id in order.iter().rev() {
            let h = forest.compute_shape(id);
            forest.shape.insert(id, h);
        }
        forest
    }

    fn kind(&self, id: ElementId) -> ElementKind {
        self.sc.kind(id).expect("live")
    }

    fn name(&self, id: ElementId) -> &str {
        self.sc.name(id).expect("live")
    }

    fn linked_positions(&self, id: ElementId, slot: Slot, fix: &HashMap<ElementId, u64>) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .sc
            .refs(id, slot)
            .expect("slot")
            .iter()
            .map(|b| fix.get(b).copied().unwrap_or(self.position[b]))
            .collect();
        out.sort_unstable();
        out
    }

    fn compute_shape(&self, id: ElementId) -> u64 {
        let kind = self.kind(id);
        let mut kids: Vec<u64> = self.children[&id].iter().map(|c| self.shape[c]).collect();
        kids.sort_unstable();
        let links = if kind == ElementKind::HyperEdge {
            let none = HashMap::new();
            (
                self.linked_positions(id, Slot::Next, &none),
                self.linked_positions(id, Slot::Rnext, &none),
            )
        } else {
            Default::default()
        };
        hash_of(&(kind, self.name(id), kids, links))
    }

    fn path(&self, id: ElementId) -> String {
        let mut parts = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            let name = self.name(c);
            parts.push(if name.is_empty() {
                self.kind(c).to_string()
            } else {
                format!("{}\"{}\"", self.kind(c), name)
            });
            cur = self.parent.get(&c).copied();
        }
        parts.reverse();
        parts.join("/")
    }

    fn container_path(&self, id: ElementId) -> String {
        self.parent
            .get(&id)
            .map(|&p| self.path(p))
            .unwrap_or_else(|| "<top level>".into())
    }

    fn describe(&self, id: ElementId) -> String {
        let name = self.name(id);
        if name.is_empty() {
            format!("{}", self.kind(id))
        } else {
            format!("{} \"{}\"", self.kind(id), name)
        }
    }

    fn sort_key(&self, id: ElementId) -> (ElementKind, &str, u64, ElementId) {
        (self.kind(id), self.name(id), self.shape[&id], id)
    }

    fn sorted(&self, ids: &[ElementId]) -> Vec<ElementId> {
        let mut v = ids.to_vec();
        v.sort_by(|a, b| self.sort_key(*a).cmp(&self.sort_key(*b)));
        v
    }
}

struct Matcher<'a, 'm> {
    actual: &'a Forest<'m>,
    expected: &'a Forest<'m>,
    missing: Vec<ElementId>,
    extra: Vec<ElementId>,
    hyperedges: Vec<(ElementId, ElementId)>,
    /// Actual element → position of its expected counterpart, where they differ.
    fix: HashMap<ElementId, u64>,
}

impl Matcher<'_, '_> {
    fn common_children(&self, a: ElementId, e: ElementId) -> usize {
        let mut pool: BTreeMap<u64, usize> = BTreeMap::new();
        for c in &self.expected.children[&e] {
            *pool.entry(self.expected.shape[c]).or_default() += 1;
        }
        self.actual.children[&a]
            .iter()
            .filter(|c| match pool.get_mut(&self.actual.shape[c]) {
                Some(n) if *n > 0 => {
                    *n -= 1;
                    true
                }
                _ => false,
            })
            .count()
    }

    /// Pairs two identical subtrees element by element.
    fn align(&mut self, a: ElementId, e: ElementId) {
        let mut stack = vec![(a, e)];
        while let Some((a, e)) = stack.pop() {
            let (pa, pe) = (self.actual.position[&a], self.expected.position[&e]);
            if pa != pe {
                self.fix.insert(a, pe);
            }
            if self.actual.kind(a) == ElementKind::HyperEdge {
                self.hyperedges.push((a, e));
            }
            let ka = self.actual.sorted(&self.actual.children[&a]);
            let ke = self.expected.sorted(&self.expected.children[&e]);
            stack.extend(ka.into_iter().zip(ke));
        }
    }

    fn match_siblings(&mut self, actual: &[ElementId], expected: &[ElementId]) {
        let mut pool: BTreeMap<u64, Vec<ElementId>> = BTreeMap::new();
        for e in self.expected.sorted(expected).into_iter().rev() {
            pool.entry(self.expected.shape[&e]).or_default().push(e);
        }
        let mut rest_a = Vec::new();
        for a in self.actual.sorted(actual) {
            match pool.get_mut(&self.actual.shape[&a]).and_then(Vec::pop) {
                Some(e) => self.align(a, e),
                None => rest_a.push(a),
            }
        }
        let mut rest_e: Vec<ElementId> = self.expected.sorted(&pool.into_values().flatten().collect::<Vec<_>>());

        let mut paired = Vec::new();
        for a in rest_a {
            let (ka, na) = (self.actual.kind(a), self.actual.name(a));
            let best = rest_e
                .iter()
                .enumerate()
                .filter(|(_, &e)| self.expected.kind(e) == ka && self.expected.name(e) == na)
                .max_by_key(|(i, &e)| (self.common_children(a, e), std::cmp::Reverse(*i)))
                .map(|(i, _)| i);
            match best {
                Some(i) => paired.push((a, rest_e.remove(i))),
                None => self.extra.push(a),
            }
        }
        self.missing.extend(rest_e);
        for (a, e) in paired {
            self.descend(a, e);
        }
    }

    fn descend(&mut self, a: ElementId, e: ElementId) {
        let (pa, pe) = (self.actual.position[&a], self.expected.position[&e]);
        if pa != pe {
            self.fix.insert(a, pe);
        }
        if self.actual.kind(a) == ElementKind::HyperEdge {
            self.hyperedges.push((a, e));
        }
        let ka = self.actual.children[&a].clone();
        let ke = self.expected.children[&e].clone();
        self.match_siblings(&ka, &ke);
    }
}

pub fn validate_full(actual: &ModelStore, expected: &ModelStore) -> ValidationReport {
    let fa = Forest::new(actual);
    let fe = Forest::new(expected);
    let mut m = Matcher {
        actual: &fa,
        expected: &fe,
        missing: Vec::new(),
        extra: Vec::new(),
        hyperedges: Vec::new(),
        fix: HashMap::new(),
    };
    m.match_siblings(&fa.roots, &fe.roots);

    let mut out = Vec::new();

    // A node that vanished in one place and appeared unchanged in another was moved.
    let mut extra = std::mem::take(&mut m.extra);
    for e in std::mem::take(&mut m.missing) {
        match extra.iter().position(|&a| fa.plain[&a] == fe.plain[&e]) {
            Some(i) => {
                let a = extra.remove(i);
                out.push(Discrepancy {
                    kind: DiscrepancyKind::WrongContainer,
                    detail: format!(
                        "{} expected in {}, found in {}",
                        fe.describe(e),
                        fe.container_path(e),
                        fa.container_path(a)
                    ),
                });
                m.align(a, e);
            }
            None => out.push(Discrepancy {
                kind: DiscrepancyKind::MissingNode,
                detail: format!("{} missing from {}", fe.describe(e), fe.container_path(e)),
            }),
        }
    }
    for a in extra {
        out.push(Discrepancy {
            kind: DiscrepancyKind::ExtraNode,
            detail: format!("unexpected {} in {}", fa.describe(a), fa.container_path(a)),
        });
    }

    let names = |f: &Forest<'_>, id: ElementId, slot: Slot| {
        let mut v: Vec<&str> = f.sc.refs(id, slot).expect("slot").iter().map(|&b| f.name(b)).collect();
        v.sort_unstable();
        format!("{{{}}}", v.join(", "))
    };
    let mut pairs = std::mem::take(&mut m.hyperedges);
    pairs.sort_unstable();
    for (a, e) in pairs {
        for slot in [Slot::Next, Slot::Rnext] {
            let none = HashMap::new();
            if fa.linked_positions(a, slot, &m.fix) != fe.linked_positions(e, slot, &none) {
                out.push(Discrepancy {
                    kind: DiscrepancyKind::NextSetMismatch,
                    detail: format!(
                        "{} at {}: {slot} is {}, expected {}",
                        fa.describe(a),
                        fa.container_path(a),
                        names(&fa, a, slot),
                        names(&fe, e, slot)
                    ),
                });
            }
        }
    }
    ValidationReport::new(Level::Full, out)
}

pub fn validate(actual: &ModelStore, expected: &ModelStore, level: Level) -> ValidationReport {
    match level {
        Level::Counts => validate_counts(actual, expected),
        Level::Full => validate_full(actual, expected),
    }
}

/// Deliberate corruptions of a statechart, used to check that validation
/// notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Drop one `next` link of a hyperedge.
    RemoveNextLink,
    /// Add a Basic state that has no counterpart.
    AddElement,
    /// Move a Basic state into a different compound.
    WrongContainer,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("mutation {0:?} does not apply to this model")]
pub struct NotApplicable(pub Mutation);

impl Mutation {
    pub const ALL: [Mutation; 3] = [Mutation::RemoveNextLink, Mutation::AddElement, Mutation::WrongContainer];

    /// Applies the mutation at the lowest-id eligible element and describes
    /// what changed.
    pub fn apply(self, sc: &mut ModelStore) -> Result<String, NotApplicable> {
        let na = NotApplicable(self);
        match self {
            Mutation::RemoveNextLink => {
                let (he, target) = sc
                    .all_of_kind(ElementKind::HyperEdge)
                    .into_iter()
                    .find_map(|he| sc.refs(he, Slot::Next).ok()?.first().map(|&b| (he, b)))
                    .ok_or(na.clone())?;
                sc.remove_ref(he, Slot::Next, target).map_err(|_| na)?;
                Ok(format!("removed next link {he} → {target}"))
            }
            Mutation::AddElement => {
                let host = sc
                    .all_of_kind(ElementKind::Or)
                    .into_iter()
                    .chain(sc.all_of_kind(ElementKind::And))
                    .next()
                    .ok_or(na.clone())?;
                let b = sc.create(ElementKind::Basic, "extra");
                sc.add_ref(host, Slot::Contains, b).map_err(|_| na)?;
                Ok(format!("added Basic {b} to {host}"))
            }
            Mutation::WrongContainer => {
                let mut compounds = sc.all_of_kind(ElementKind::Or);
                compounds.extend(sc.all_of_kind(ElementKind::And));
                compounds.sort_unstable();
                let (b, from, to) = sc
                    .all_of_kind(ElementKind::Basic)
                    .into_iter()
                    .find_map(|b| {
                        let from = sc.container(b)?;
                        let to = compounds.iter().copied().find(|&c| c != from)?;
                        Some((b, from, to))
                    })
                    .ok_or(na.clone())?;
                sc.set_ref(b, Slot::Rcontains, to).map_err(|_| na)?;
                Ok(format!("moved Basic {b} from {from} to {to}"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_known_corpus, Expected};

    fn golden(name: &str) -> ModelStore {
        let fixture = generate_known_corpus().into_iter().find(|f| f.name == name).unwrap();
        let Expected::Statechart(doc) = fixture.expected else { panic!() };
        doc.to_store().unwrap()
    }

    #[test]
    fn identical_models_pass() {
        for name in ["chain", "self_loop", "fork_join", "double_arc"] {
            let m = golden(name);
            assert!(validate_full(&m, &m).passed, "{name}");
            assert!(validate_counts(&m, &m).passed, "{name}");
        }
    }

    #[test]
    fn missing_or_is_one_count_mismatch() {
        let expected = golden("fork_join");
        let mut actual = expected.clone();
        let or = actual
            .all_of_kind(ElementKind::Or)
            .into_iter()
            .find(|&o| actual.refs(o, Slot::Contains).unwrap().len() == 1)
            .unwrap();
        actual.delete(or).unwrap();
        let report = validate_counts(&actual, &expected);
        assert!(!report.passed);
        assert_eq!(report.discrepancies.len(), 1);
        assert!(report.discrepancies[0].detail.starts_with("OR"));
    }

    #[test]
    fn removed_next_link() {
        let expected = golden("chain");
        let mut actual = expected.clone();
        Mutation::RemoveNextLink.apply(&mut actual).unwrap();
        let report = validate_full(&actual, &expected);
        assert!(report.has(DiscrepancyKind::NextSetMismatch), "{report:?}");
        // The hyperedge itself is still matched.
        assert!(!report.has(DiscrepancyKind::MissingNode));
    }

    #[test]
    fn moved_basic_is_wrong_container() {
        let expected = golden("fork_join");
        let mut actual = expected.clone();
        // Move P1 into P2's OR (its sibling region).
        let basics = actual.all_of_kind(ElementKind::Basic);
        let p1 = *basics.iter().find(|&&b| actual.name(b).unwrap() == "P1").unwrap();
        let p2 = *basics.iter().find(|&&b| actual.name(b).unwrap() == "P2").unwrap();
        let sibling = actual.container(p2).unwrap();
        actual.set_ref(p1, Slot::Rcontains, sibling).unwrap();
        let report = validate_full(&actual, &expected);
        assert!(report.has(DiscrepancyKind::WrongContainer), "{report:?}");
        assert!(!report.has(DiscrepancyKind::NextSetMismatch), "{report:?}");
        // Counts are unchanged, so only the full check notices.
        assert!(validate_counts(&actual, &expected).passed);
    }

    #[test]
    fn extra_element() {
        let expected = golden("self_loop");
        let mut actual = expected.clone();
        Mutation::AddElement.apply(&mut actual).unwrap();
        let report = validate_full(&actual, &expected);
        assert!(report.has(DiscrepancyKind::ExtraNode), "{report:?}");
        let reverse = validate_full(&expected, &actual);
        assert!(reverse.has(DiscrepancyKind::MissingNode), "{reverse:?}");
    }

    #[test]
    fn uncontained_extra_element_detected() {
        let expected = golden("chain");
        let mut actual = expected.clone();
        actual.create(ElementKind::Or, "");
        assert!(validate_full(&actual, &expected).has(DiscrepancyKind::ExtraNode));
    }

    #[test]
    fn duplicate_names_do_not_confuse_matching() {
        // Two parallel regions whose Basics share a name; links differ by region.
        let build = |swap: bool| {
            let mut sc = ModelStore::new();
            let s = sc.create(ElementKind::Statechart, "");
            let top = sc.create(ElementKind::And, "");
            sc.set_ref(s, Slot::TopState, top).unwrap();
            let outer = sc.create(ElementKind::Or, "");
            sc.add_ref(top, Slot::Contains, outer).unwrap();
            let par = sc.create(ElementKind::And, "");
            sc.add_ref(outer, Slot::Contains, par).unwrap();
            let mut regions = Vec::new();
            for label in ["a", "b"] {
                let r = sc.create(ElementKind::Or, "");
                sc.add_ref(par, Slot::Contains, r).unwrap();
                let x = sc.create(ElementKind::Basic, "x");
                let y = sc.create(ElementKind::Basic, label);
                sc.add_all(r, Slot::Contains, &[x, y]).unwrap();
                regions.push((r, x, y));
            }
            if swap {
                regions.reverse();
            }
            let he = sc.create(ElementKind::HyperEdge, "h");
            sc.add_ref(outer, Slot::Contains, he).unwrap();
            sc.add_ref(he, Slot::Next, regions[0].1).unwrap();
            sc
        };
        let a = build(false);
        assert!(validate_full(&a, &build(false)).passed);
        // `h` now points at the `x` of the other region.
        let report = validate_full(&build(true), &a);
        assert!(report.has(DiscrepancyKind::NextSetMismatch), "{report:?}");
    }

    #[test]
    fn mutations_not_applicable_on_empty() {
        let mut sc = ModelStore::new();
        for m in Mutation::ALL {
            assert_eq!(m.apply(&mut sc), Err(NotApplicable(m)));
        }
    }
}
