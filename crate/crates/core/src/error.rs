use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A search or enumeration ran past its node budget.
    ///
    /// `partial` is set when the caller still received a usable (but
    /// incomplete or non-optimal) result alongside the error.
    #[error("budget exceeded in {task}: {detail}")]
    Resource {
        task: String,
        detail: String,
        partial: bool,
    },

    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub(crate) fn budget(task: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Resource {
            task: task.into(),
            detail: detail.into(),
            partial: false,
        }
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
