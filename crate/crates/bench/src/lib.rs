//! Benchmark campaigns for the `lago` optimizer: seeded multi-run
//! experiments, persisted traces and summaries, and the two ablations.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ablation;
pub mod artifacts;
pub mod campaign;
pub mod config;
mod error;
pub mod stats;

pub use ablation::{run_conditioning_ablation, run_gamma_ablation, ConditioningReport, GammaRow};
pub use campaign::{execute, run_campaign, write_artifacts, CampaignResult, SeedRun};
pub use config::{parse_seeds, CampaignConfig};
pub use error::{BenchError, Result};
