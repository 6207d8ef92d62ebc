//! Transformation of Petri nets into hierarchical statecharts.
//!
//! The pipeline is [`init::initialize_statechart`] followed by
//! [`reduce::fixpoint`], [`reduce::create_top`] and
//! [`reduce::assign_hyperedges`]; [`reduce::create_statechart`] runs all of
//! it. [`io`] reads and writes the JSON documents, [`generate`] builds
//! synthetic series-parallel nets and [`validate`] compares statecharts.

pub mod error;
pub mod generate;
pub mod init;
pub mod io;
pub mod model;
pub mod reduce;
pub mod validate;

pub use error::TransformError;
pub use generate::{generate_known_corpus, generate_sp_net, Expected, Fixture, GenSpec};
pub use init::{initialize_statechart, TraceMap};
pub use io::{read_petri_net, read_statechart, write_statechart, Counts, FormatError, PetriNetDocument, StatechartDocument};
pub use model::{ElementId, ElementKind, ModelError, ModelStore, Slot};
pub use reduce::{create_statechart, ReductionResult, Status};
pub use validate::{validate_counts, validate_full, Level, Mutation, ValidationReport};
