use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("semantic error at {path}: {kind}")]
    Semantic { path: String, kind: SemanticError },
}

impl ScenarioError {
    pub fn semantic(path: impl Into<String>, kind: SemanticError) -> Self {
        ScenarioError::Semantic {
            path: path.into(),
            kind,
        }
    }

    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn semantic_kind(&self) -> Option<&SemanticError> {
        match self {
            ScenarioError::Semantic { kind, .. } => Some(kind),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticError {
    #[error("dangling uid {0:?}")]
    DanglingUid(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("unknown state {state:?} for {uid:?}")]
    UnknownState { uid: String, state: String },
    #[error("goal satisfied initially")]
    GoalSatisfiedInitially,
    #[error("circular transformation: goal restates the initial scene graph with the objects swapped")]
    CircularTransformation,
    #[error("self edge on {0:?}")]
    SelfEdge(String),
    #[error("on/in support cycle through {0:?}")]
    SupportCycle(Vec<String>),
    #[error("duplicate uid {0:?}")]
    DuplicateUid(String),
    #[error("{0}")]
    Invalid(String),
}
