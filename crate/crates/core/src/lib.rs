//! Propagation probability on undirected scale-free networks.
//!
//! The pipeline is: build or load a [`Graph`](graph::Graph), score its nodes
//! with (personalized) PageRank, turn the scores into per-node state
//! probabilities, then search all cascades from a source to get the
//! probability of reaching at least `n_page` nodes.
//!
//! ```
//! use batprop_core::{fixtures, pagerank, build_all_tables, spread_probability};
//! use batprop_core::{RankConfig, SpreadQuery};
//!
//! let g = fixtures::ba8();
//! let ranks = pagerank(&g, &RankConfig::<f64>::default()).unwrap();
//! let tables = build_all_tables(&g, &ranks).unwrap();
//! let r = spread_probability(&g, &tables, SpreadQuery::new(0, 8)).unwrap();
//! assert!((r.probability - 0.4056).abs() < 1e-3);
//! ```

pub mod check;
pub mod error;
pub mod graph;
pub mod rank;
pub mod report;
pub mod scalar;
pub mod spread;
pub mod states;

pub use error::{Error, Result};
pub use graph::{degree_histogram, fixtures, generate_ba, BaParams, DegreeHistogram, Graph};
pub use rank::{pagerank, personalized_pagerank, solve_rank_direct, RankConfig, RankVector};
pub use scalar::Scalar;
pub use spread::{
    oracle_spread, spread_probability, spread_probability_with, spread_table, SpreadMatrix,
    SpreadOptions, SpreadQuery, SpreadResult,
};
pub use states::{
    bat_enumerate, build_all_tables, build_state_table, format_trace, max_state_pagerank,
    state_members, BinaryVector, NodeStateTable, StateVectorTrace,
};

pub type RankVector64 = RankVector<f64>;
pub type RankVector32 = RankVector<f32>;
pub type NodeStateTable64 = NodeStateTable<f64>;
pub type NodeStateTable32 = NodeStateTable<f32>;
pub type SpreadResult64 = SpreadResult<f64>;
pub type SpreadMatrix64 = SpreadMatrix<f64>;
