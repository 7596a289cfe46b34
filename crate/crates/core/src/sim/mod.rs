//! Scenario configuration, the slot loop, metrics and run artifacts.

pub mod agents;
pub mod artifacts;
pub mod metrics;
pub mod runner;
pub mod scenario;
pub mod scheme;

pub use artifacts::{compare_row, compare_table, plot_runs, run_to_dir, svg_chart, CompareRow, RunInfo, RunRequest, RunResult};
pub use agents::{AgentBundle, BsAgentState, TuAgentState, CHECKPOINT_MAGIC};
pub use metrics::{
    csv_header, final_window_mean, moving_average, read_records, summarize, write_records, RecordWriter, SlotRecord, SlotTiming, Summary,
    DEFAULT_SPAN,
};
pub use runner::{Event, Phase, RunConfig, SlotOutput, Simulation};
pub use scenario::{hex_sites, Scenario};
pub use scheme::{BfScheme, Mode, SchemeSpec, UaScheme};
