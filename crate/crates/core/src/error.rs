use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BolzaError {
    #[error("invalid pair: {0}")]
    InvalidPair(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("model has neither a radial subgradient selection nor a radial derivative")]
    NoStructure,
    #[error("finite-difference probe left the domain at {0}")]
    DomainEdge(String),
    #[error("no radius up to {r_max} certifies the growth condition")]
    NotFound { r_max: f64 },
    #[error("unknown built-in model `{0}`")]
    UnknownName(String),
    #[error("no in-domain sample for {0}")]
    EmptySampleSet(String),
    #[error("variant not applicable: {0}")]
    VariantInapplicable(String),
    #[error("mu infeasible: c_delta(B)/c = {ratio} >= 1")]
    MuInfeasible { ratio: f64 },
    #[error("rho search failed: measure {measure} of the well-inside set stays below {required}")]
    RhoSearchFailed { measure: f64, required: f64 },
    #[error("a growth certificate with verdict Holds (H or M) is required: {0}")]
    CertificateRequired(String),
    #[error("insufficient room for the compensating set: need {need}, have {have}")]
    InsufficientRoom { need: f64, have: f64 },
    #[error("nonpositive slope in the change of variable: {0}")]
    SlopeNonpositive(String),
    #[error("reparametrized control leaves the control cone at cell {0}")]
    ConeViolation(usize),
    #[error("cost increased: before {before}, after {after}, allowed {allowed}")]
    CostRegression { before: f64, after: f64, allowed: f64 },
    #[error("every start has infinite cost")]
    NoAdmissiblePoint,
    #[error("expression error: {0}")]
    Expr(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

impl BolzaError {
    /// Stable machine-readable tag used in JSON error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            BolzaError::InvalidPair(_) => "InvalidPair",
            BolzaError::PreconditionViolated(_) => "PreconditionViolated",
            BolzaError::NoStructure => "NoStructure",
            BolzaError::DomainEdge(_) => "DomainEdge",
            BolzaError::NotFound { .. } => "NotFound",
            BolzaError::UnknownName(_) => "UnknownName",
            BolzaError::EmptySampleSet(_) => "EmptySampleSet",
            BolzaError::VariantInapplicable(_) => "VariantInapplicable",
            BolzaError::MuInfeasible { .. } => "MuInfeasible",
            BolzaError::RhoSearchFailed { .. } => "RhoSearchFailed",
            BolzaError::CertificateRequired(_) => "CertificateRequired",
            BolzaError::InsufficientRoom { .. } => "InsufficientRoom",
            BolzaError::SlopeNonpositive(_) => "SlopeNonpositive",
            BolzaError::ConeViolation(_) => "ConeViolation",
            BolzaError::CostRegression { .. } => "CostRegression",
            BolzaError::NoAdmissiblePoint => "NoAdmissiblePoint",
            BolzaError::Expr(_) => "Expr",
            BolzaError::Io(_) => "Io",
            BolzaError::Format(_) => "Format",
        }
    }
}

impl From<std::io::Error> for BolzaError {
    fn from(e: std::io::Error) -> Self {
        BolzaError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for BolzaError {
    fn from(e: serde_json::Error) -> Self {
        BolzaError::Format(e.to_string())
    }
}

impl From<csv::Error> for BolzaError {
    fn from(e: csv::Error) -> Self {
        BolzaError::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BolzaError>;
