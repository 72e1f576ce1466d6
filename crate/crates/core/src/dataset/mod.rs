//! Data model, fluid properties, target transforms, manifests and splitting.

mod condition;
mod container;
mod fluid;
pub(crate) mod json_f64;
mod manifest;
mod split;
mod transform;

pub use condition::{BasePattern, MixingCondition, PatternId, Source, VideoSample};
pub use container::{decode_video, encode_video, read_video, write_video, VIDEO_MAGIC};
pub use fluid::{fluid_table, log_spaced_levels, nearest_class, FluidSpec, NUM_CLASSES};
pub use manifest::{load_manifest, save_manifest, DatasetManifest, ManifestEntry, Split, VideoConfig};
pub use split::split_dataset;
pub use transform::{target_inverse, target_transform, NormalizationStats, MIN_STD_LOGV};
