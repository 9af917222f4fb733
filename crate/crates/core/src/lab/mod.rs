//! Experiment tooling: seeded instance generation, JSON documents, the
//! equivalence harness and the command-line front end.

pub mod cli;
pub mod doc;
pub mod equiv;
pub mod gen;

pub use doc::{ExperimentReport, InstanceDocument, PriceSystemDoc};
pub use equiv::{run_equivalence, run_instance, verify_report, EquivConfig};
pub use gen::{generate, GeneratorConfig, Mode};
