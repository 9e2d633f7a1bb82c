//! Component catalog: parameterized SLH building blocks.

mod components;
pub mod envelope;
pub mod params;

pub use components::{
    build_cavity_chain, build_copropagating_pair, build_counterpropagating_pair, circulator_finite_bw,
    circulator_ideal, circulator_nonideal, coherent_drive, instantiate, jaynes_cummings, kind_schema,
    one_sided_cavity, phase_shifter, schema, tla_waveguide,
};
pub use envelope::Envelope;
pub use params::{envelope_from_value, ComponentSpec, KindSchema, ParamSchema, ParamType, Value};

/// The catalog schema as pretty JSON.
pub fn schema_json() -> String {
    serde_json::to_string_pretty(&schema()).expect("schema serializes")
}
