//! Failures of a CLI run and their exit codes.

use longgreeks::Error;
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_SELFTEST: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("IoError: {0}")]
    Io(String),
    #[error("SelftestFailed: {0}")]
    Selftest(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }

    /// Machine-readable error name.
    pub fn name(&self) -> &'static str {
        match self {
            Failure::Core(e) => e.name(),
            Failure::Config(_) => "ConfigError",
            Failure::Io(_) => "IoError",
            Failure::Selftest(_) => "SelftestFailed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(e) if e.is_validation() => EXIT_VALIDATION,
            Failure::Core(_) => EXIT_NUMERICAL,
            Failure::Config(_) | Failure::Io(_) => EXIT_VALIDATION,
            Failure::Selftest(_) => EXIT_SELFTEST,
        }
    }

    /// The single-line JSON written to stderr.
    pub fn to_json(&self) -> String {
        json!({
            "error": self.name(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(Failure::from(Error::FellerViolation("x".into())).exit_code(), 2);
        assert_eq!(Failure::from(Error::NotInCatalog("x".into())).exit_code(), 2);
        assert_eq!(Failure::from(Error::SingularP11("x".into())).exit_code(), 3);
        assert_eq!(Failure::from(Error::NumericalBlowup { step: 1, path: 2 }).exit_code(), 3);
        assert_eq!(Failure::config("x").exit_code(), 2);
        assert_eq!(Failure::Selftest("1".into()).exit_code(), 4);
    }

    #[test]
    fn error_json_names_the_variant() {
        let v: serde_json::Value =
            serde_json::from_str(&Failure::from(Error::FellerViolation("2θ ≤ σ²".into())).to_json()).unwrap();
        assert_eq!(v["error"], "FellerViolation");
        assert_eq!(v["exit_code"], 2);
        assert!(v["message"].as_str().unwrap().contains("2θ ≤ σ²"));
    }
}
