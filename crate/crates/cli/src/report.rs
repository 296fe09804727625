//! Run reports: named checks with tolerances, warnings, and the config echo.
//!
//! A report separates two severities. *Checks* are assertions a correct run
//! must satisfy; any failed check makes the run exit nonzero. *Warnings*
//! carry resolution diagnostics (eigenpair residuals, operator asymmetry,
//! skipped trials) that inform without failing the run. Every numeric
//! entry records the tolerance it was compared against, so a report can be
//! audited without consulting the source.

use serde::Serialize;
use serde_json::Value;

/// One hard assertion: `value` compared against `tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured value (a magnitude for bound checks).
    pub value: f64,
    /// Bound the value was held to.
    pub tolerance: f64,
    /// Direction of the comparison, e.g. "<=", ">".
    pub relation: &'static str,
}

impl CheckResult {
    /// `value <= tolerance` check.
    pub fn bound(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            relation: "<=",
        }
    }

    /// `value > tolerance` check (lower bounds, e.g. window maxima).
    pub fn floor(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: value > tolerance,
            value,
            tolerance,
            relation: ">",
        }
    }
}

/// A diagnostic that never changes the exit status.
#[derive(Debug, Clone, Serialize)]
pub struct Warning {
    pub name: String,
    pub message: String,
    pub value: f64,
    pub threshold: f64,
}

/// Full record of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub toolkit_version: &'static str,
    pub experiment: String,
    /// Normalized config; rerunning it reproduces the data files exactly.
    pub config: Value,
    /// Wall time lives only here, never in data files, so data files stay
    /// byte-identical across reruns.
    pub wall_time_ms: u64,
    pub checks: Vec<CheckResult>,
    pub warnings: Vec<Warning>,
    /// Computation error, if the experiment could not finish.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Experiment-specific summary payload.
    pub outcome: Value,
}

impl RunReport {
    pub fn all_checks_passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    /// Human-readable lines for the terminal (one per check, then warnings).
    pub fn console_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for c in &self.checks {
            lines.push(format!(
                "{} {} ({:.3e} {} {:.3e})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.relation,
                c.tolerance,
            ));
        }
        for w in &self.warnings {
            lines.push(format!(
                "WARN {}: {} ({:.3e} vs {:.3e})",
                w.name, w.message, w.value, w.threshold
            ));
        }
        if let Some(err) = &self.error {
            lines.push(format!("ERROR {err}"));
        }
        lines
    }
}

/// Render any serializable value as pretty JSON bytes with a trailing
/// newline; `serde_json` float formatting is shortest-round-trip and stable,
/// which the byte-determinism contract relies on.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize infallibly");
    bytes.push(b'\n');
    bytes
}

/// One JSON document per line (trial logs).
pub fn to_jsonl_bytes<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut bytes = Vec::new();
    for item in items {
        bytes.extend_from_slice(&serde_json::to_vec(item).expect("trial types serialize"));
        bytes.push(b'\n');
    }
    bytes
}
