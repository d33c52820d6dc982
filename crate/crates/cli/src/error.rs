use std::fmt;

use avtorus_core::corenum::{FieldError, IntegrationError};
use avtorus_core::example4d::Example4DError;
use avtorus_core::guiding::CycleError;
use avtorus_core::melnikov::MelnikovError;
use avtorus_core::sysdsl::FileError;
use avtorus_core::toruslab::{DetectError, MapError, RotationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Internal,
    Usage,
    Hypothesis,
    Solver,
    Guard,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Internal => 1,
            Kind::Usage => 2,
            Kind::Hypothesis => 3,
            Kind::Solver => 4,
            Kind::Guard => 5,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub msg: String,
}

impl CliError {
    pub fn new(kind: Kind, msg: impl fmt::Display) -> Self {
        Self {
            kind,
            msg: msg.to_string(),
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        Self::new(Kind::Usage, msg)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            Kind::Internal => "internal error",
            Kind::Usage => "usage error",
            Kind::Hypothesis => "hypothesis violated",
            Kind::Solver => "solver failure",
            Kind::Guard => "validity guard",
        };
        match self.msg.strip_prefix(label) {
            Some(rest) => write!(f, "{label}{rest}"),
            None => write!(f, "{label}: {}", self.msg),
        }
    }
}

fn field_kind(e: &FieldError) -> Kind {
    match e {
        FieldError::Guard(_) => Kind::Guard,
        _ => Kind::Solver,
    }
}

fn integration_kind(e: &IntegrationError) -> Kind {
    match e {
        IntegrationError::Field { source, .. } => field_kind(source),
        IntegrationError::InvalidConfig(_) => Kind::Usage,
        _ => Kind::Solver,
    }
}

fn map_kind(e: &MapError) -> Kind {
    match e {
        MapError::Escape(_) | MapError::NoReturn(_) => Kind::Solver,
        MapError::Dimension { .. } => Kind::Usage,
        MapError::Integration(i) => integration_kind(i),
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Kind::Internal, e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(Kind::Internal, e)
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        Self::usage(e)
    }
}

impl From<MelnikovError> for CliError {
    fn from(e: MelnikovError) -> Self {
        let kind = match &e {
            MelnikovError::Order { .. } | MelnikovError::Dimension { .. } | MelnikovError::SampleBox(_) => Kind::Usage,
            MelnikovError::Hypothesis { .. } => Kind::Hypothesis,
            MelnikovError::Quad(_) => Kind::Solver,
            MelnikovError::Field(f) => field_kind(f),
            MelnikovError::Integration(i) => integration_kind(i),
        };
        Self::new(kind, e)
    }
}

impl From<CycleError> for CliError {
    fn from(e: CycleError) -> Self {
        let kind = match &e {
            CycleError::BadGuess(_) => Kind::Usage,
            CycleError::Field(f) => field_kind(f),
            CycleError::Integration(i) => integration_kind(i),
            _ => Kind::Solver,
        };
        Self::new(kind, e)
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        let kind = match &e {
            DetectError::NoSeeds => Kind::Usage,
            DetectError::Map(m) => map_kind(m),
            _ => Kind::Solver,
        };
        Self::new(kind, e)
    }
}

impl From<RotationError> for CliError {
    fn from(e: RotationError) -> Self {
        Self::new(Kind::Solver, e)
    }
}

impl From<Example4DError> for CliError {
    fn from(e: Example4DError) -> Self {
        let kind = match &e {
            Example4DError::Order(_)
            | Example4DError::Mu(_)
            | Example4DError::Components { .. }
            | Example4DError::Vars { .. }
            | Example4DError::Spec(_) => Kind::Usage,
            Example4DError::Average { .. } => Kind::Hypothesis,
            Example4DError::Field(f) => field_kind(f),
            Example4DError::Cycle(c) => return c.clone().into(),
            Example4DError::Detect(d) => return d.clone().into(),
            _ => Kind::Solver,
        };
        Self::new(kind, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_errors_map_to_five() {
        let e: CliError = Example4DError::Field(FieldError::Guard("theta".into())).into();
        assert_eq!(e.kind.code(), 5);
        let nested = MapError::Integration(IntegrationError::Field {
            t: 0.0,
            source: FieldError::Guard("x".into()),
        });
        let e: CliError = DetectError::Map(nested).into();
        assert_eq!(e.kind.code(), 5);
    }

    #[test]
    fn cycle_errors() {
        let e: CliError = CycleError::Diverged {
            iterations: 3,
            residual: 1.0,
        }
        .into();
        assert_eq!(e.kind.code(), 4);
        let e: CliError = CycleError::BadGuess("x".into()).into();
        assert_eq!(e.kind.code(), 2);
    }
}
