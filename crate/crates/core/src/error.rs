use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A Hamiltonian or graph fails the structural requirements of the
    /// supported families.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A lifted search needed more sheets than the window cap allows.
    #[error("sheet window exhausted after {doublings} doublings (radius {radius}): {detail}")]
    WindowExhausted {
        radius: usize,
        doublings: usize,
        detail: String,
    },

    #[error("subcover map is not surjective onto Z^{rank}: {detail}")]
    NotSurjective { rank: usize, detail: String },

    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn model(msg: impl Into<String>) -> Self {
        Error::InvalidModel(msg.into())
    }

    /// Prefixes the message with `ctx`, keeping the variant.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::InvalidModel(m) => Error::InvalidModel(format!("{ctx}: {m}")),
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{ctx}: {m}")),
            Error::WindowExhausted {
                radius,
                doublings,
                detail,
            } => Error::WindowExhausted {
                radius,
                doublings,
                detail: format!("{ctx}: {detail}"),
            },
            Error::NotSurjective { rank, detail } => Error::NotSurjective {
                rank,
                detail: format!("{ctx}: {detail}"),
            },
            Error::Solver(m) => Error::Solver(format!("{ctx}: {m}")),
        }
    }
}
