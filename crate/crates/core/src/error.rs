use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain: {0}")]
    Domain(String),
    #[error("width: {0}")]
    Width(String),
    #[error("complexity budget: {0}")]
    Budget(String),
    #[error("cfl: {0}")]
    Cfl(String),
    #[error("time: {0}")]
    Time(String),
    #[error("reflection: {0}")]
    Reflection(String),
    #[error("support: {0}")]
    Support(String),
    #[error("nonconservative: {0}")]
    Nonconservative(String),
    #[error("slab: {0}")]
    Slab(String),
    #[error("vacuum guard: {0}")]
    Vacuum(String),
    #[error("locus: {0}")]
    Locus(String),
    #[error("admissibility: {0}")]
    Admissibility(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad input or an unusable environment rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Width(_)
                | Error::Time(_)
                | Error::Slab(_)
                | Error::Vacuum(_)
                | Error::Invalid(_)
                | Error::Config(_)
                | Error::Cfl(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
