//! Physical-interpretation tools: dimensionless groups, class proximity,
//! attention binning and confusion matrices.

mod attention;
mod confusion;
mod dimensionless;
mod proximity;

pub use attention::{
    attention_image, bin_attention, center_of_mass_radius, grid_center, quantile_bins, radial_attention_profile,
    save_attention_png, AttentionBin, RADIAL_BINS,
};
pub use confusion::{confusion_matrix, ConfusionMatrix};
pub use dimensionless::{dimensionless_numbers, rpm_to_rad_per_s, DimensionlessTriple, GeometrySpec};
pub use proximity::{accuracy_vs_proximity, proximity, LogFit, MIN_PROXIMITY};
