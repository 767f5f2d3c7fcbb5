//! Configuration loading, CSV export and image rendering.

pub mod config;
pub mod export;
pub mod render;

pub use config::{load_config, load_config_file, RunConfig, SystemConfig};
pub use export::{
    export_atoms_csv, export_cdf_csv, export_samples_csv, format_real, read_atoms_csv, truncation_metadata,
    write_atomic, write_atoms_csv, write_cdf_csv, write_closed_interval_csv, write_escape_csv, write_samples_csv,
};
pub use render::{render_density, DensityImage, Scale};
