//! Task generators, load-data ingestion and evaluation metrics.

pub mod csvio;
pub mod electricity;
pub mod metrics;
pub mod polynomial;
pub mod preprocess;

pub use csvio::{load_csv, CsvContents, CsvSchema, LoadCsvOptions, Station};
pub use electricity::{build_electricity_design, ElectricityFeatureSpec, LoadRecord};
pub use metrics::{oracle_predict, rmse};
pub use polynomial::{gen_polynomial_task, PolynomialTask, PolynomialTaskConfig};
pub use preprocess::{detrend, normalize, Preprocessor, ScaleParams, TrendParams};
