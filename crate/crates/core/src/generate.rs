//! Synthetic series-parallel nets and the hand-traced fixture corpus.
//!
//! [`generate_sp_net`] starts from one place and repeatedly expands a
//! randomly chosen place `p` either into a sequence `p → t → p'` or into a
//! parallel block `p → fork → {q1..qk} → join → p'`, where `p'` inherits
//! the post-transitions of `p`. Each branch place of a parallel block gets a
//! local loop transition `qi → li → qi`. Sequences collapse under the OR
//! rule, blocks under the AND rule and loops under the OR rule's identity
//! case, so every generated net reduces to a single OR.
//!
//! Randomness comes from [`SplitMix64`] so any implementation can rebuild
//! the same nets from the same `(target_places, seed, branch_factor_max,
//! parallel_prob)`.

use thiserror::Error;

use crate::io::{Counts, NodeDocument, PetriNetDocument, PlaceEntry, StatechartDocument, TransitionEntry};

/// SplitMix64 (Steele, Lea, Flood 2014).
///
/// `state += 0x9E3779B97F4A7C15`, then the output mix
/// `z = (z ^ z>>30) * 0xBF58476D1CE4E5B9`, `z = (z ^ z>>27) * 0x94D049BB133111EB`,
/// `z ^ z>>31`, all in wrapping 64-bit arithmetic.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Integer in `0..n` as the high word of `next_u64() * n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Float in `[0, 1)` from the top 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("target_places must be at least 1")]
    NoPlaces,
    #[error("branch_factor_max must be at least 2, got {0}")]
    BranchFactor(usize),
    #[error("parallel_prob must lie in [0, 1], got {0}")]
    Probability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub target_places: usize,
    pub seed: u64,
    pub branch_factor_max: usize,
    pub parallel_prob: f64,
}

impl GenSpec {
    pub fn new(target_places: usize, seed: u64) -> Self {
        Self {
            target_places,
            seed,
            branch_factor_max: 4,
            parallel_prob: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.target_places < 1 {
            return Err(GenError::NoPlaces);
        }
        if self.branch_factor_max < 2 {
            return Err(GenError::BranchFactor(self.branch_factor_max));
        }
        if !(0.0..=1.0).contains(&self.parallel_prob) {
            return Err(GenError::Probability(self.parallel_prob));
        }
        Ok(())
    }

    /// Conventional file name, `sp<places>_<seed>.json`.
    pub fn file_name(&self) -> String {
        format!("sp{}_{}.json", self.target_places, self.seed)
    }
}

struct Builder {
    postt: Vec<Vec<usize>>,
    pre: Vec<Vec<usize>>,
    post: Vec<Vec<usize>>,
}

impl Builder {
    fn place(&mut self) -> usize {
        self.postt.push(Vec::new());
        self.postt.len() - 1
    }

    fn transition(&mut self, pre: Vec<usize>, post: Vec<usize>) -> usize {
        for &p in &pre {
            self.postt[p].push(self.pre.len());
        }
        self.pre.push(pre);
        self.post.push(post);
        self.pre.len() - 1
    }

    /// New place taking over the post-transitions of `p`.
    fn split_off(&mut self, p: usize) -> usize {
        let succ = self.place();
        let moved = std::mem::take(&mut self.postt[p]);
        for &t in &moved {
            for x in self.pre[t].iter_mut().filter(|x| **x == p) {
                *x = succ;
            }
        }
        self.postt[succ] = moved;
        succ
    }
}

pub fn generate_sp_net(spec: &GenSpec) -> Result<PetriNetDocument, GenError> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let mut b = Builder {
        postt: Vec::with_capacity(spec.target_places),
        pre: Vec::new(),
        post: Vec::new(),
    };
    b.place();
    while b.postt.len() < spec.target_places {
        let remaining = spec.target_places - b.postt.len();
        let p = rng.below(b.postt.len());
        if remaining >= 3 && rng.unit() < spec.parallel_prob {
            let k = (2 + rng.below(spec.branch_factor_max - 1)).min(remaining - 1);
            let succ = b.split_off(p);
            let branches: Vec<usize> = (0..k).map(|_| b.place()).collect();
            b.transition(vec![p], branches.clone());
            b.transition(branches.clone(), vec![succ]);
            for q in branches {
                b.transition(vec![q], vec![q]);
            }
        } else {
            let succ = b.split_off(p);
            b.transition(vec![p], vec![succ]);
        }
    }

    let place_id = |i: usize| format!("p{i}");
    Ok(PetriNetDocument {
        places: (0..b.postt.len())
            .map(|i| PlaceEntry {
                id: place_id(i),
                name: place_id(i),
            })
            .collect(),
        transitions: b
            .pre
            .iter()
            .zip(&b.post)
            .enumerate()
            .map(|(i, (pre, post))| TransitionEntry {
                id: format!("t{i}"),
                name: format!("t{i}"),
                pre: pre.iter().map(|&p| place_id(p)).collect(),
                post: post.iter().map(|&p| place_id(p)).collect(),
            })
            .collect(),
    })
}

/// What a fixture is expected to reduce to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    Statechart(StatechartDocument),
    Irreducible {
        top_ors: usize,
        places: usize,
        transitions: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub name: &'static str,
    pub net: PetriNetDocument,
    pub expected: Expected,
}

fn net(places: &[&str], transitions: &[(&str, &[&str], &[&str])]) -> PetriNetDocument {
    let strings = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
    PetriNetDocument {
        places: places
            .iter()
            .map(|p| PlaceEntry {
                id: p.to_string(),
                name: p.to_string(),
            })
            .collect(),
        transitions: transitions
            .iter()
            .map(|(t, pre, post)| TransitionEntry {
                id: t.to_string(),
                name: t.to_string(),
                pre: strings(pre),
                post: strings(post),
            })
            .collect(),
    }
}

fn node(uid: u64, kind: &str, name: &str, children: Vec<NodeDocument>) -> NodeDocument {
    NodeDocument {
        uid,
        kind: kind.into(),
        name: name.into(),
        children,
        next: None,
    }
}

fn leaf(uid: u64, kind: &str, name: &str, next: &[u64]) -> NodeDocument {
    NodeDocument {
        next: Some(next.to_vec()),
        ..node(uid, kind, name, Vec::new())
    }
}

/// `Statechart(0) → AND(1) → OR(2) → leaves`
fn single_region(leaves: Vec<NodeDocument>, basic: usize, hyperedge: usize) -> StatechartDocument {
    StatechartDocument {
        root: node(0, "Statechart", "", vec![node(1, "AND", "", vec![node(2, "OR", "", leaves)])]),
        counts: Counts {
            statechart: 1,
            and: 1,
            or: 1,
            basic,
            hyperedge,
        },
    }
}

/// Small nets with hand-traced reductions, in canonical document form.
pub fn generate_known_corpus() -> Vec<Fixture> {
    let chain = Fixture {
        name: "chain",
        net: net(&["P1", "P2"], &[("T1", &["P1"], &["P2"])]),
        expected: Expected::Statechart(single_region(
            vec![
                leaf(3, "Basic", "P1", &[5]),
                leaf(4, "Basic", "P2", &[]),
                leaf(5, "HyperEdge", "T1", &[4]),
            ],
            2,
            1,
        )),
    };

    let self_loop = Fixture {
        name: "self_loop",
        net: net(&["P"], &[("T", &["P"], &["P"])]),
        expected: Expected::Statechart(single_region(
            vec![leaf(3, "Basic", "P", &[4]), leaf(4, "HyperEdge", "T", &[3])],
            1,
            1,
        )),
    };

    // T1 forks P0 into P1 ∥ P2, T2 joins them into P3. The AND rule wraps
    // the ORs of P1 and P2, then two OR firings fold everything into P0's OR.
    let fork_join = Fixture {
        name: "fork_join",
        net: net(
            &["P0", "P1", "P2", "P3"],
            &[("T1", &["P0"], &["P1", "P2"]), ("T2", &["P1", "P2"], &["P3"])],
        ),
        expected: Expected::Statechart(StatechartDocument {
            root: node(
                0,
                "Statechart",
                "",
                vec![node(
                    1,
                    "AND",
                    "",
                    vec![node(
                        2,
                        "OR",
                        "",
                        vec![
                            node(
                                3,
                                "AND",
                                "",
                                vec![
                                    node(4, "OR", "", vec![leaf(5, "Basic", "P1", &[11])]),
                                    node(6, "OR", "", vec![leaf(7, "Basic", "P2", &[11])]),
                                ],
                            ),
                            leaf(8, "Basic", "P0", &[10]),
                            leaf(9, "Basic", "P3", &[]),
                            leaf(10, "HyperEdge", "T1", &[5, 7]),
                            leaf(11, "HyperEdge", "T2", &[9]),
                        ],
                    )],
                )],
            ),
            counts: Counts {
                statechart: 1,
                and: 2,
                or: 3,
                basic: 4,
                hyperedge: 2,
            },
        }),
    };

    // Merging P2 into P1 at T1 turns T2 into a self-loop on P1.
    let double_arc = Fixture {
        name: "double_arc",
        net: net(&["P1", "P2"], &[("T1", &["P1"], &["P2"]), ("T2", &["P1"], &["P2"])]),
        expected: Expected::Statechart(single_region(
            vec![
                leaf(3, "Basic", "P1", &[5, 6]),
                leaf(4, "Basic", "P2", &[]),
                leaf(5, "HyperEdge", "T1", &[4]),
                leaf(6, "HyperEdge", "T2", &[4]),
            ],
            2,
            2,
        )),
    };

    let two_isolated = Fixture {
        name: "two_isolated",
        net: net(&["P1", "P2"], &[]),
        expected: Expected::Irreducible {
            top_ors: 2,
            places: 2,
            transitions: 0,
        },
    };

    vec![chain, self_loop, fork_join, double_arc, two_isolated]
}
