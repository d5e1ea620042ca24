//! Mechanism-level toolkit for interaction-centric open-vocabulary scene
//! graph generation.
//!
//! Everything the training-free desk setup needs lives here: prompt
//! construction (class-name, bidirectional interaction, and decomposed
//! interaction-pair prompts), pseudo-supervision over a mock grounder,
//! interaction-guided query selection, the full loss and distillation
//! stack with analytic gradients, exact bipartite matching, SGDet-style
//! recall evaluation, and a seeded synthetic-scene harness that makes the
//! mechanism-level claims reproducible without any pretrained weights.
//!
//! Start with the runnable programs under `examples/`, one per major
//! capability; the `sgg-mech` binary exposes the same machinery as CLI
//! subcommands for file-based pipelines.

pub mod evaluation;
pub mod geometry;
pub mod grounding;
pub mod harness;
pub mod losses;
pub mod matching;
pub mod selection;
pub mod text;

pub use evaluation::{
    mean_recall_at_k, oracle_recall, recall_at_k, split_filter, triplet_match, RankedPrediction,
    RecallReport, SplitSpec,
};
pub use geometry::{giou_terms, iou, BoundingBox};
pub use grounding::{combine_pairs, Detection, MockGrounder, PseudoLabel};
pub use harness::ExperimentConfig;
pub use losses::{
    bce_relation_loss, build_edge_features, cosine_sim_matrix, focal_loss, giou_loss,
    l1_box_loss, rrd_loss, run_gradient_suite, total_loss, vrd_loss, EdgeFeature,
    LossComponents, LossWeights,
};
pub use matching::{
    brute_force_assignment, cost_matrix, hungarian, pair_cost, GtObject, MatchAssignment,
    MatchWeights, QueryPrediction,
};
pub use selection::{
    interaction_scores, relevance_scores, select_queries, top_k, QueryIndexSet, TokenMatrix,
    TokenRole,
};
pub use text::{
    build_bidirectional_prompt, build_vocab_prompt, counter_action, decompose_triplet,
    parse_caption, BidirectionalPrompt, CounterActionBackend, Triplet, VerbLexicon, Vocabulary,
};
