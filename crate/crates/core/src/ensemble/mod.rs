//! Majority-vote bagging, fusion with frozen external embeddings, and
//! two-stage stacking over out-of-fold predictions.

mod bag;
mod external;
mod stacking;
mod vote;

pub use bag::{
    cnn_bag_fit, model_a_predict, model_b_fit, pool_votes, train_bag, BagSpec, CnnBag, FusionBag,
};
pub use external::{
    read_embeddings, read_external_file, read_predictions, EmbeddingSet, ExternalEmbedding,
    PredictionSet, PredictionVector, VoteTable,
};
pub use stacking::{
    audit_stack, stack_features, stack_fit, stack_predict, InternalBase, MetaRow, Provenance,
    StackAudit, StackConfig, StackModel, Stage1Instance,
};
pub use vote::{hard_vote, majority_vote, vote, VoteOutcome};
