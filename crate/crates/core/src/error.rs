use crate::io::FormatError;
use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid network: {}", summarize(.0))]
    InvalidNetwork(Vec<Violation>),
    #[error("invalid stimulus: {}", summarize(.0))]
    InvalidStimulus(Vec<Violation>),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("unit delays required: synapse {synapse} has delay {delay} (lower delays first)")]
    NonUnitDelay { synapse: usize, delay: u32 },
    #[error("axonal delays must be folded away: neuron {neuron} has axonal delay {delay}")]
    AxonalDelay { neuron: usize, delay: u32 },
    #[error("homogeneous backend runs only \"lif\" neurons; neuron {neuron} uses {behavior:?}")]
    NonLifBehavior { neuron: usize, behavior: String },
    #[error("neuron {neuron}: unknown behavior {behavior:?}")]
    UnknownBehavior { neuron: usize, behavior: String },
    #[error("behavior {0:?} is already registered")]
    DuplicateBehavior(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

fn summarize(violations: &[Violation]) -> String {
    match violations {
        [] => "no violations".to_string(),
        [only] => only.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more)", rest.len()),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Format(FormatError::Io(e))
    }
}
