use std::path::PathBuf;

pub type Result<T, E = SweepError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("config: {0}")]
    Config(String),

    #[error("unknown parameter `{name}`{}", suggestion_suffix(.suggestions))]
    UnknownParameter {
        name: String,
        suggestions: Vec<String>,
    },

    #[error("unknown scenario `{name}`{}", suggestion_suffix(.suggestions))]
    UnknownScenario {
        name: String,
        suggestions: Vec<String>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Numeric(#[from] rbxe::Error),
}

fn suggestion_suffix(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("; did you mean {}?", s.join(", "))
    }
}

impl SweepError {
    /// 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Numeric(e) => e.exit_code(),
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SweepError::Io {
            path: path.into(),
            source,
        }
    }
}
