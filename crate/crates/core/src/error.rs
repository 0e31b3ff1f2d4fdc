use std::path::PathBuf;

use thiserror::Error;

use crate::artifact::ArtifactError;
use crate::checker::CheckError;
use crate::corpus::CorpusError;
use crate::em::EmError;
use crate::gateway::GatewayError;
use crate::grammar::GrammarError;
use crate::literal::LiteralError;
use crate::ontology::OntologyError;
use crate::program::ProgramError;
use crate::semantic::DpmmError;
use crate::utility::UtilityError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Em(#[from] EmError),
    #[error(transparent)]
    Dpmm(#[from] DpmmError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Literal(#[from] LiteralError),
    #[error("unknown constraint `{0}`")]
    UnknownConstraint(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
