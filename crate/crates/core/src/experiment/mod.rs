//! Configuration-driven experiments: success-rate grids over `(d, N, S)`,
//! high-accuracy regions, variance sweeps, oracle validation, and CSV/SVG
//! output.

mod config;
mod emit;
mod grid;
mod region;
mod validate;
mod variance;

pub use config::{ExperimentConfig, Method, OutputPaths, DESK_MAX_D};
pub use emit::{
    heatmap_svg, read_csv, read_csv_file, success_color, to_csv_string, write_csv, write_heatmaps, HeatmapAxis, CSV_HEADER,
};
pub use grid::{
    analytic_swap_tests, cell_seed, run_cell, run_grid, run_grid_with_progress, CellResult, CellSettings, GridResult, GridRow,
    SkippedCell, TrialData, PHASE_SHADOWS,
};
pub use region::{is_strict_subset, pool, success_region, CellSet, PooledCell, Region};
pub use validate::{validate, validate_with, CheckResult, OracleRow, Perturbation, ValidationReport};
pub use variance::{
    log_log_slope, variance_point, variance_sweep, Moments, Quantity, SlopeAxis, SlopeFit, VarianceConfig, VarianceReport,
    VarianceRow,
};
