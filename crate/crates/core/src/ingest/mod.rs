//! Loading, validation, imputation, encoding and splitting of survey-style
//! categorical tables.

mod dataset;
mod encode;
mod impute;
mod schema;
mod split;
mod thresholds;

pub use dataset::{load_csv, read_csv, Dataset, LoadStats};
pub use encode::{encode, encode_treatment, EncodedColumn, EncodedMatrix, EncodingMode};
pub use impute::impute_column;
pub use schema::{
    DatasetSchema, FeatureKind, FeatureSpec, ImputeRule, LabelKind, NutritionDerivation,
};
pub use split::{stratified_allocation, stratified_split, stratified_split_labels, SplitPlan};
pub use thresholds::{
    derive_nutrition_status, label_from_hemoglobin, AnemiaThresholds, NutritionStatus,
};
