//! Element models: MOSFET, RRAM and source waveforms.

mod mosfet;
mod rram;
mod waveform;

pub use mosfet::{
    mirror_ratio_clm, mirror_ratio_ideal, mos_eval, MosEval, MosInstance, MosModelParams, Polarity, Region,
};
pub use rram::{rram_step, RramModelParams, RramState};
pub use waveform::{waveform_value, Pulse, Waveform};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error("non-finite terminal voltage (vgs={vgs}, vds={vds})")]
    NonFiniteInput { vgs: f64, vds: f64 },
    #[error("geometry must be positive, got {0}")]
    InvalidGeometry(f64),
    #[error("1 + lambda*vds0 is zero")]
    DivisionByZero,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
}
