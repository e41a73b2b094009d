//! Transition-based DAG parser with a sparse linear model.

mod decode;
pub mod features;
mod model;
mod oracle;
mod transition;

pub use decode::{completion_cost, completion_step, parse, parse_with_trace, transition_budget};
pub use features::{extract_features, registry_hash, TEMPLATES};
pub use model::{corpus_labels, replay_mistakes, train, ModelError, SparseModel, TrainError, TrainReport};
pub use oracle::{oracle, OracleFailure};
pub use transition::{
    IllegalTransition, NodeKind, StateEdge, StateNode, Transition, TransitionKind, TransitionState,
};
