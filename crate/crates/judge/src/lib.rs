//! Judge backends behind the core `Judge` trait: constant mocks, scripted
//! replay, and a remote chat-shaped HTTP judge, plus the stub server the
//! remote backend is tested against.

pub mod mock;
pub mod prompts;
pub mod remote;
pub mod scripted;
pub mod stub;
pub mod wire;

use trajlab_core::config::{JudgeBackendKind, JudgeSpec};
use trajlab_core::judge::Judge;

pub use mock::MockJudge;
pub use remote::RemoteJudge;
pub use scripted::{ScriptFile, ScriptedJudge};

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("invalid judge spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("script parse error in {path}: {source}")]
    Script {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate scripted key: {0}")]
    DuplicateKey(String),
    #[error("token environment variable {var} is not set")]
    MissingToken { var: String },
    #[error("http client: {0}")]
    Client(String),
}

/// Turn a validated spec into a live backend.
pub fn build_judge(spec: &JudgeSpec) -> Result<Box<dyn Judge>, BuildError> {
    match spec.backend {
        JudgeBackendKind::Mock => Ok(Box::new(MockJudge::new(spec.mock))),
        JudgeBackendKind::Scripted => {
            let path = spec.script_path.as_ref().ok_or_else(|| {
                BuildError::Spec("scripted backend requires a script_path".into())
            })?;
            Ok(Box::new(ScriptedJudge::load(path)?))
        }
        JudgeBackendKind::Remote => Ok(Box::new(RemoteJudge::new(spec)?)),
    }
}
