//! Experiment runner for `orbit-entropy-core`: a TOML configuration format
//! for actions and schedules, the batch commands behind the `orbit-entropy`
//! binary, and CSV / summary output.
//!
//! ```no_run
//! use orbit_entropy::{config::{ExperimentConfig, Overrides}, report, run};
//!
//! let cfg = ExperimentConfig::load("sft.toml".as_ref(), &Overrides::default()).unwrap();
//! let rep = run::run(&cfg).unwrap();
//! report::emit(&rep, &cfg.out, report::Format::Csv).unwrap();
//! report::emit(&rep, &cfg.out, report::Format::StructuredText).unwrap();
//! std::process::exit(if rep.ok() { 0 } else { 1 });
//! ```

pub mod config;
pub mod report;
pub mod run;

pub use config::{Command, ExperimentConfig, Overrides};
pub use report::{emit, Format, RunReport};
pub use run::run;
