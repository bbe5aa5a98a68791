//! Sweeps, fits and validation runs on top of the `twodisk` library.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod output;

pub use config::{ConfigFile, SourcePreset, SweepSpec};
pub use experiments::Settings;
pub use fit::RateFit;
