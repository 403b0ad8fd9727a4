//! Turn video clips, given as frame feature sequences, into dynamic knowledge graphs.
//!
//! The pipeline per clip:
//!
//! 1. [`captioner`] encodes the frames with an LSTM and greedily decodes an
//!    entity–relation–entity sentence such as `RobotArm pour ColdWater`.
//! 2. [`parser`] tags the sentence against a closed lexicon and extracts
//!    E-R-E tuples.
//! 3. [`ontology`] answers, for every entity, the inherited
//!    entity–attribute–value tuples from a class taxonomy.
//! 4. [`graph`] merges both tuple kinds into a [`graph::KnowledgeGraph`],
//!    exported as canonical JSON or Graphviz DOT.
//!
//! [`pipeline`] wires the steps together and [`metrics`] scores captions with
//! BLEU and ROUGE-L.

pub mod captioner;
pub mod graph;
pub mod metrics;
pub mod ontology;
pub mod parser;
pub mod pipeline;
pub mod tensor;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Caption(#[from] captioner::CaptionError),
    #[error(transparent)]
    Lexicon(#[from] parser::LexiconError),
    #[error(transparent)]
    Ontology(#[from] ontology::OntologyError),
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error("clip `{clip_id}`: {source}")]
    Clip {
        clip_id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        use captioner::CaptionError as C;
        match self {
            Error::Caption(C::Shape { .. }) => "shape",
            Error::Caption(C::InvalidInput(_)) | Error::InvalidInput(_) => "invalid-input",
            Error::Caption(C::UnknownToken(_)) => "unknown-token",
            Error::Caption(C::Parse { .. }) => "parse",
            Error::Caption(C::Checkpoint(_)) => "checkpoint",
            Error::Caption(C::Io(_)) | Error::Io { .. } => "io",
            Error::Lexicon(_) => "lexicon",
            Error::Ontology(_) => "ontology",
            Error::Graph(_) => "graph",
            Error::Metrics(_) => "metrics",
            Error::Clip { source, .. } => source.category(),
        }
    }

    /// Process exit code for [`Error::category`].
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "invalid-input" => 2,
            "io" => 3,
            "parse" => 4,
            "shape" => 5,
            "unknown-token" => 6,
            "checkpoint" => 7,
            "lexicon" => 8,
            "ontology" => 9,
            "graph" => 10,
            "metrics" => 11,
            _ => 1,
        }
    }
}
