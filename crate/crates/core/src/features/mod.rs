//! Handcrafted 144-value features, z-score normalization, and the four
//! sliding-window representations.

mod extract;
pub mod io;
mod normalize;
pub mod schema;
mod window;

pub use extract::{extract_day, extract_features, DayFeatures, FeatureVector};
pub use normalize::{zscore_apply, zscore_fit, NormalizationStats, ZERO_VARIANCE};
pub use schema::{feature_names, FEATURES, LONG_WINDOW, SHORT_WINDOW};
pub use window::{make_representation, window_mean_into, write_representation, WindowKind, WindowRepresentation, WINDOW};
