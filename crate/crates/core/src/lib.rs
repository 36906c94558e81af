//! Quality-of-Coverage analytics: per-cell QoC KPIs from throughput and
//! latency time series, mergeable quantile sketches, synthetic scenario
//! generation, region aggregation and sparsity-sensitivity studies.

pub mod duration;
pub mod error;
pub mod kpi;
pub mod seed;
pub mod sensitivity;
pub mod sketch;
pub mod spatial;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use kpi::{
    classify, fcc_latency_compliant, normalize, profile, Kpi, MetricKind, ProfileReport,
    QocProfile, Sample, TimeSeries, UsabilityConfig,
};
pub use sketch::{QuantileSketch, SketchConfig};
pub use spatial::{
    aggregate, assignments, CellId, KpiMeans, LayoutMode, RegionAssignment, RegionProfile,
};
pub use synth::{generate, ScenarioKind, ScenarioSpec};
