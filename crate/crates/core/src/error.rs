use thiserror::Error;

/// Failure modes of the geometric pipeline.
///
/// Every variant carries enough context to be recorded as a failed check in
/// a verification report rather than aborting a whole run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("metric is not positive definite: {0}")]
    Signature(String),

    #[error("point {point:?} is closer than {required} to the domain boundary")]
    Domain { point: Vec<f64>, required: f64 },

    #[error("orthogonal complement is not timelike (⟨c,c⟩ = {0:e})")]
    NormalDegenerate(f64),

    #[error("B and C do not commute: residual {0:e}")]
    JointDiagonalization(f64),

    #[error("angle branches cannot be continued: {0}")]
    EigenCrossing(String),

    #[error("profile constraint violated: {0}")]
    Constraint(String),

    #[error("profile leaves its validity region: {0}")]
    DegenerateProfile(String),

    #[error("curve is not regular: {0}")]
    Regularity(String),

    #[error("lift is not a unit lift on the quadric: {0}")]
    InvalidLift(String),
}

impl GeomError {
    /// Short machine-readable tag, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            GeomError::Contract(_) => "ContractViolation",
            GeomError::Signature(_) => "SignatureError",
            GeomError::Domain { .. } => "DomainError",
            GeomError::NormalDegenerate(_) => "NormalDegenerateError",
            GeomError::JointDiagonalization(_) => "JointDiagonalizationError",
            GeomError::EigenCrossing(_) => "EigenCrossingError",
            GeomError::Constraint(_) => "ConstraintError",
            GeomError::DegenerateProfile(_) => "DegenerateProfileError",
            GeomError::Regularity(_) => "RegularityError",
            GeomError::InvalidLift(_) => "InvalidLiftError",
        }
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
