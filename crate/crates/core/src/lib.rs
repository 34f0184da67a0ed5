//! Drought presence and intensity prediction for U.S. counties.
//!
//! The pipeline turns daily meteorological records with weekly drought
//! scores into trailing-window samples, trains soft-voting ensembles of
//! random forests, and summarizes county-level drought trends.
//!
//! ```text
//! ingest ─► window ─► preprocess ─► learners ─► metrics
//!                        │                         ▲
//!                        ├────► importance ────────┘
//!                        └────► trends ─► GeoJSON / CSV
//! ```
//!
//! Every stage is deterministic given its inputs and a 64-bit seed. See the
//! crate's `examples/` directory for one runnable program per capability.

pub mod error;
pub mod features;
pub mod importance;
pub mod ingest;
pub mod learners;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod seed;
pub mod synth;
pub mod trends;
pub mod window;

pub use error::{Error, Result};
pub use features::{FEATURE_NAMES, N_FEATURES};
pub use ingest::{CountyCoord, DailyRecord, Fips, FipsEntry};
pub use learners::{Classifier, Matrix, Model};
pub use metrics::ClassReport;
pub use preprocess::{LabeledSample, ScalerParams};
pub use trends::DroughtLabel;
pub use window::WindowSample;
