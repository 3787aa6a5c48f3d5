//! Dataset ingestion, model persistence, and synthetic data.

mod dataset;
mod mixture;
mod model_io;

pub use dataset::{
    fingerprint, read_csv, read_csv_from, write_csv, write_csv_to, CsvOptions, Dataset, LabelColumn,
};
pub use mixture::{generate_mixture, ComponentList, MixtureComponent, MixtureSpec};
pub use model_io::{model_from_str, model_to_string, read_model, write_model, MODEL_VERSION};
