//! Hypersparse traffic-matrix analysis: packet windows, network-quantity
//! distributions, modified Zipf-Mandelbrot fitting and topology breakdowns.

pub mod config;
pub mod generator;
pub mod hypersparse;
pub mod ingest;
pub mod netstats;
pub mod numeric;
pub mod pipeline;
pub mod topology;
pub mod zm;

#[cfg(test)]
mod fixtures;

pub use hypersparse::{AggregateSummary, Axis, DegreeVector, Reduction, TrafficMatrix};
pub use ingest::{PacketRecord, PacketWindow, Windower};
pub use netstats::{PooledDistribution, QuantityKind};
pub use pipeline::{emit_report, run_analyze, InputSource, PipelineError, ReportBundle, RunConfig};
pub use topology::{topology_breakdown, CategoryStats, TopologyBreakdown};
pub use zm::{AlphaGrid, ZmFit, ZmParams};
