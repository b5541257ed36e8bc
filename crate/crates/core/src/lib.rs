//! Explanation engine for binary Bayesian belief networks.
//!
//! Exact posteriors by enumeration, plus two kinds of explanation: the
//! qualitative sign of an observation's impact traced along a path
//! ([`qual`]), and scenario-based causal stories with verbal probabilities
//! ([`scenario`]). [`describe`] renders the network itself as assertions.

pub mod describe;
pub mod infer;
pub mod network;
pub mod phrase;
pub mod qual;
pub mod scenario;
pub mod session;
pub mod text;

pub use infer::{Evidence, InferenceError, Posterior};
pub use network::{BeliefNetwork, ConditionalModel, NetworkBuilder, NetworkError, VarId, Variable};
pub use phrase::{PhraseError, PhraseOptions, PhraseStyle, ScaleRegistry};
pub use qual::{QualError, QualitativeResult, Sign};
pub use scenario::{explain_why, ExplainParams, ExplanationDocument, ScenarioError, ScenarioParams};
pub use session::Session;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Phrase(#[from] PhraseError),
    #[error(transparent)]
    Qualitative(#[from] QualError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

impl Error {
    /// The conflict behind an impossible-evidence failure, wherever it surfaced.
    pub fn conflict(&self) -> Option<&infer::Conflict> {
        let inner = match self {
            Error::Inference(e) => e,
            Error::Qualitative(QualError::Inference(e)) => e,
            Error::Scenario(ScenarioError::Inference(e)) => e,
            _ => return None,
        };
        match inner {
            InferenceError::ImpossibleEvidence(c) => Some(c),
            _ => None,
        }
    }
}
