//! Configuration-driven pipeline: rCASCI, shot sampling, QDOS/QSCI selection,
//! sCASCI reconstruction and the requested corrections for every input
//! geometry, with CSV/JSON reporting and repeat statistics.

mod config;
mod report;
mod workflow;

pub use config::{CasSpec, InputSpec, Method, OutputConfig, ReportFormat, RunConfig, SamplingConfig, ScasSpec};
pub use report::{deviation_rows, emit_deviations, emit_report, format_sig12, parse_rows_json, DeviationRow};
pub use workflow::{
    load_geometries, repeat_stability, run_geometry, run_workflow, Geometry, ResultRow, RowStatus,
    SpreadSummary, StabilityReport,
};
