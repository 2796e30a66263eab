//! Closed-loop budget pacing: bid pacing auctions, multiplicative pacing
//! controllers, a seeded auction plant and the pacing quality metrics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the `pacing-lab` crate.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod auction;
pub mod controllers;
pub mod error;
pub mod metrics;
pub mod plant;

pub use auction::{AdLine, AuctionOutcome, Opportunity, PricingRule};
pub use controllers::{
    AveragedFeedback, AveragedUpdate, BandTable, BaselineController, BaselineParams,
    BucketController, ChainMode, ControlInput, Controller, ControllerKind, HoldController,
    PacingController, Tolerance,
};
pub use error::ConfigError;
pub use metrics::{time_to_reenter, MetricDeltas, MetricsReport};
pub use plant::{
    simulate, AuctionPlant, CycleOutcome, CycleRecord, LinearPlant, Plant, ScenarioResult,
    SpendPlan, Telemetry, TrafficModel,
};
