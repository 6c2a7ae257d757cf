use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("eigensolver did not converge: {0}")]
    Solver(String),

    #[error("domain is disconnected (no spectral gap): lambda_1 = {lambda1:e}")]
    Connectivity { lambda1: f64 },

    #[error("index error: {0}")]
    Index(String),

    #[error("degenerate subset family: {0}")]
    DegenerateFamily(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("replay link {link} failed: {source}")]
    Replay {
        link: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::InvalidGeometry(msg.into())
    }
}
