use std::path::Path;

use thiserror::Error;

use crate::features::FeatureError;
use crate::probekit::ProbeError;
use crate::synth::SynthError;
use crate::treebank::CorpusError;
use crate::treekernel::KernelError;

/// Failures grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    /// Prefixes the message with `context`, keeping the class.
    pub(crate) fn context(self, context: impl std::fmt::Display) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{context}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{context}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{context}: {m}")),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            FeatureError::ZeroVector => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::InvalidLambda(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Feature(f) => f.into(),
            ProbeError::Kernel(k) => k.into(),
            ProbeError::InvalidConfig(_) | ProbeError::UnsupportedFeatureSet(..) => {
                CliError::Usage(e.to_string())
            }
            ProbeError::SingularSystem | ProbeError::NaNInput | ProbeError::ZeroVariance => {
                CliError::Numerical(e.to_string())
            }
            ProbeError::TooFewRows { .. } | ProbeError::Alignment(_) | ProbeError::SplitOverlap => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            SynthError::Feature(f) => f.into(),
            SynthError::Kernel(k) => k.into(),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(CliError::from(ProbeError::SingularSystem).exit_code(), 3);
        assert_eq!(CliError::from(ProbeError::InvalidConfig("x".into())).exit_code(), 1);
        assert_eq!(CliError::from(FeatureError::BadMagic).exit_code(), 2);
        assert_eq!(CliError::from(ProbeError::Feature(FeatureError::ZeroVector)).exit_code(), 3);
        assert_eq!(CliError::Data("x".into()).context("f").to_string(), "f: x");
    }
}
