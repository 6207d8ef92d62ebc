use thiserror::Error;

use crate::model::{ElementId, ElementKind, ModelError};

/// Failures of the initialization and reduction transformations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("element {id} is a {found}, expected a {expected}")]
    WrongKind {
        id: ElementId,
        expected: ElementKind,
        found: ElementKind,
    },
    #[error("no OR state is recorded for live place {0}")]
    TraceMiss(ElementId),
    #[error("hyperedges can only be assigned after a successful reduction")]
    NotReduced,
    #[error("the basic states of hyperedge {0} share no common ancestor")]
    NoCommonAncestor(ElementId),
}
