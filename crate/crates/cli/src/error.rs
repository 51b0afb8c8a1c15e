use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or a missing required argument.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Lib(#[from] rdtm::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A self-check ran to completion and found violations.
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Lib(e) if e.is_validation() => 2,
            CliError::Lib(_) | CliError::CheckFailed(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Lib(e) if e.is_validation() => "validation",
            CliError::Lib(_) => "numeric",
            CliError::CheckFailed(_) => "check_failed",
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        let extra = match self {
            CliError::Lib(rdtm::Error::DomainEscape { time, .. })
            | CliError::Lib(rdtm::Error::IntegrationDrift { time, .. })
            | CliError::Lib(rdtm::Error::Stiffness { time, .. })
            | CliError::Lib(rdtm::Error::MaxStepsExceeded { time, .. }) => json!({ "time": time }),
            CliError::Lib(rdtm::Error::Infeasible {
                eta_floor,
                bound_at_floor,
                epsilon,
            }) => json!({ "eta_floor": eta_floor, "bound_at_floor": bound_at_floor, "epsilon": epsilon }),
            _ => json!({}),
        };
        if let (Some(obj), Some(more)) = (v.as_object_mut(), extra.as_object()) {
            obj.extend(more.clone());
        }
        v.to_string()
    }
}
