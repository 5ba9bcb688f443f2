use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Core(#[from] kaonlab::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn kind(&self) -> &'static str {
        use kaonlab::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                E::InvalidArgument(_) => "invalid-argument",
                E::ModelPathology { .. } => "model-pathology",
                E::DegenerateState(_) => "degenerate-state",
                E::Unsupported(_) => "unsupported",
                E::FitFailure(_) => "fit-failure",
                E::Numerical(_) => "numerical",
                E::Io(_) => "io",
            },
        }
    }

    /// 2 usage, 3 model pathology, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "model-pathology" => 3,
            "degenerate-state" | "fit-failure" | "numerical" => 4,
            _ => 2,
        }
    }

    /// `error[kind]: message` on one line.
    pub fn line(&self) -> String {
        let msg = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error[{}]: {msg}", self.kind())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(kaonlab::Error::Io(e.to_string()))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
