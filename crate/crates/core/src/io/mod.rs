pub mod config;
pub mod dataset;
pub mod output;
pub mod svg;

pub use config::{Method, MethodSelector, RunConfig};
pub use dataset::{load_csv, parse_csv, write_csv, Columns, CsvOptions, LoadedDataset};
