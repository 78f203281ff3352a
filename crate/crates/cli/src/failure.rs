use std::fmt;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_COMPLIANCE: i32 = 4;

#[derive(Debug)]
pub enum Failure {
    /// Bad or missing options.
    Usage(String),
    /// Unreadable, missing or malformed inputs, or a failed computation.
    Data(String),
    /// The pipeline was checked and does not meet the limits.
    Compliance(Box<crate::Outcome>),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Compliance(_) => EXIT_COMPLIANCE,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Data(m) => f.write_str(m),
            Failure::Compliance(o) => f.write_str(&o.summary),
        }
    }
}

impl std::error::Error for Failure {}

impl From<aeckit::Error> for Failure {
    fn from(e: aeckit::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}
