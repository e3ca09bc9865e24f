//! KPM windowing, autoencoder state encoding and trace ingestion.

mod encoder;
mod sample;
mod trace;
mod window;

use thiserror::Error;

use crate::sim::{SimError, SliceKind};

pub use encoder::{
    encode, encode_state, fit_normalization, normalize, train_autoencoder, Autoencoder,
    AutoencoderConfig, AutoencoderFit, EncoderParams, MinMax, CODE_WIDTH, DECODER_SIZES,
    ENCODER_SIZES, INPUT_WIDTH,
};
pub use sample::{KpmSample, METRICS, WINDOW_LEN};
pub use trace::{ingest_reader, ingest_trace, simulate_windows, TRACE_COLUMNS};
pub use window::{KpmCollector, KpmWindow, WindowStream};

#[derive(Debug, Error)]
pub enum KpmError {
    #[error("sample at tti {got} does not follow tti {last}")]
    OutOfOrderSample { last: u64, got: u64 },
    #[error("sample for {got} pushed into a {expected} stream")]
    SliceMismatch { expected: SliceKind, got: SliceKind },
    #[error("window needs 10 samples, got {0}")]
    IncompleteWindow(usize),
    #[error("normalization range of column {column} is empty")]
    DegenerateRange { column: usize },
    #[error("autoencoder dataset is empty")]
    EmptyDataset,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("encoder file: {0}")]
    Format(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}
