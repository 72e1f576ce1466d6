//! The viscosity estimator: tubelet tokens, rotation-speed conditioning, a
//! transformer encoder, and classification / mixture-density heads.

mod attention;
mod checkpoint;
mod config;
pub(crate) mod mixture;
mod net;

pub use attention::AttentionRecord;
pub use config::{EncoderKind, InputNorm, ModelConfig, Pooling};
pub use mixture::{predict_viscosity, MixtureParams};
pub use net::{Forward, Tape, TokenSequence, ViscNet};
