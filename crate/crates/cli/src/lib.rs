//! Library side of the `tcsl` command-line tool: report assembly,
//! deterministic SVG rendering, and the command implementations. The
//! binary in `main.rs` is a thin argument-parsing shell over
//! [`commands`].

// `!(x > 0.0)` is used deliberately in validation code: unlike the
// suggested `x <= 0.0`, it also rejects NaN, which is the semantics
// every one of those checks needs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod commands;
pub mod svg;

use std::fmt;

/// Command errors, split by exit code: bad input (2) versus failed
/// computation (3).
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Compute(m) => write!(f, "computation error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tcsl_core::IngestError> for CliError {
    fn from(e: tcsl_core::IngestError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<tcsl_core::DomainError> for CliError {
    fn from(e: tcsl_core::DomainError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<tcsl_core::FitError> for CliError {
    fn from(e: tcsl_core::FitError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<tcsl_core::BudgetError> for CliError {
    fn from(e: tcsl_core::BudgetError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<tcsl_core::HardwareError> for CliError {
    fn from(e: tcsl_core::HardwareError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<tcsl_core::PlanError> for CliError {
    fn from(e: tcsl_core::PlanError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<tcsl_core::SimError> for CliError {
    fn from(e: tcsl_core::SimError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Parse a wall-clock budget: plain minutes ("1440"), or a number with an
/// `m`/`h` suffix ("30m", "4h", "1.5h").
pub fn parse_budget(s: &str) -> Result<f64, CliError> {
    let trimmed = s.trim();
    let (digits, scale) = if let Some(rest) = trimmed.strip_suffix(['h', 'H']) {
        (rest, 60.0)
    } else if let Some(rest) = trimmed.strip_suffix(['m', 'M']) {
        (rest, 1.0)
    } else {
        (trimmed, 1.0)
    };
    let value: f64 = digits.trim().parse().map_err(|_| {
        CliError::Input(format!(
            "invalid budget '{s}': pass minutes (e.g. 1440) or a suffixed value (30m, 4h)"
        ))
    })?;
    if !(value > 0.0) || !value.is_finite() {
        return Err(CliError::Input(format!(
            "budget must be positive, got '{s}'"
        )));
    }
    Ok(value * scale)
}

/// Render minutes compactly: whole hours as "Nh", otherwise "Nm".
pub fn fmt_budget(minutes: f64) -> String {
    if minutes >= 60.0 && minutes % 60.0 == 0.0 {
        format!("{}h", minutes / 60.0)
    } else {
        format!("{minutes}m")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_strings() {
        assert_eq!(parse_budget("1440").unwrap(), 1440.0);
        assert_eq!(parse_budget("30m").unwrap(), 30.0);
        assert_eq!(parse_budget("4h").unwrap(), 240.0);
        assert_eq!(parse_budget("1.5h").unwrap(), 90.0);
        assert_eq!(parse_budget(" 8H ").unwrap(), 480.0);
        for bad in ["", "h", "-4h", "0", "4x", "nan"] {
            assert!(parse_budget(bad).is_err(), "{bad}");
        }
        let err = parse_budget("oops").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn budget_formatting() {
        assert_eq!(fmt_budget(5.0), "5m");
        assert_eq!(fmt_budget(90.0), "90m");
        assert_eq!(fmt_budget(60.0), "1h");
        assert_eq!(fmt_budget(1440.0), "24h");
    }
}
