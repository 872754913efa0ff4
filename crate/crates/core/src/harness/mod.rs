//! Engines, the campaign loop and bug reports.

pub mod campaign;
pub mod engine;
pub mod report;

pub use campaign::{materialize_schema, run_campaign, CampaignConfig, CampaignOutcome, CampaignSummary};
pub use engine::{open_engine, Capabilities, Engine, Fault, MutantEngine, ReferenceEngine};
pub use report::{compare_and_report, differential_report, read_reports, replay, write_reports, BugReport, QueryContext, Reference};
