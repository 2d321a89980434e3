//! A verification lab for finite Bayesian games.
//!
//! The crate models finite Bayesian games (independent private types, per-type
//! action sets), builds concrete game families on top of that core —
//! simultaneous item auctions with XOS bidders, greedy first-price combinatorial
//! auctions, weighted congestion games with probabilistic demands, and effort
//! market games — and verifies smoothness certificates against them by exhaustive
//! (or seeded-subsampled) enumeration. Pure Bayes-Nash equilibria of the same
//! instances are enumerated directly, so every certificate's price-of-anarchy
//! bound can be compared against the measured worst-equilibrium ratio.
//!
//! Enumerations are data-parallel via rayon when the `parallel` feature is on
//! (the default); results are bit-identical to sequential execution regardless
//! of thread count.

pub mod congestion;
pub mod corpus;
pub mod effort;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod greedy;
pub mod instance;
pub mod item_auction;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod smoothness;
pub mod valuations;

pub use error::LabError;
pub use game::{BayesianGame, Objective, StrategyProfile, TypeDistribution};
