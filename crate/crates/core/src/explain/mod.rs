//! Feature attribution: exact Shapley values and k-NN mutual information.

mod mi;
mod shap;

pub use mi::{ksg_mi, mutual_information, MiResult, DEFAULT_K};
pub use shap::{
    coalition_values, mean_abs_ranking, mean_abs_shap, shap_exact, shap_many, shap_summary_points,
    subset_weights, summary_points, write_mean_abs_csv, write_summary_points_csv, BackgroundSet,
    ShapResult, SummaryPoint, DEFAULT_BACKGROUND,
};
