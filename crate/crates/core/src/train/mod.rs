//! Curriculum training: classification pretraining, fine-tuning, and
//! mixture-density regression, plus the experiment harnesses built on them.

mod config;
mod data;
mod loss;
mod multipattern;
mod stage;
mod sweep;

pub use config::{Stage, TrainConfig};
pub use data::{epoch_batches, load_split, stratified_subset, Clip};
pub use loss::{cross_entropy, cross_entropy_loss, nll_loss, nll_raw};
pub use multipattern::{closest_classes, multipattern_experiment, ArmResult, MultiPatternConfig, MultiPatternReport};
pub(crate) use stage::argmax;
pub use stage::{
    evaluate_classify, evaluate_regress, init_model, run_stage, train_from_manifest, EpochStats, StageData,
    TrainReport, META_EPOCH, META_NORM_STATS, META_STAGE,
};
pub use sweep::{data_efficiency_sweep, Arm, SweepCell, SweepConfig, SweepRun, SweepTable};
