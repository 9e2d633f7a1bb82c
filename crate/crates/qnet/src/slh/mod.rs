//! SLH triples and the network composition rules.

mod compose;
mod json;
mod triple;

pub use compose::{
    concat, direct_couple, feedback, feedback_multi, pad, permutation_matrix, permute_ports, series, FeedbackResult,
    PadPosition, PortSide,
};
pub use json::{EntriesJson, SlhJson, SpaceJson, SCHEMA_VERSION};
pub use triple::{InvariantReport, SlhTriple};
