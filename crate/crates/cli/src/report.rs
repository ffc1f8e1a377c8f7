use kapranov_core::graded::format_scalar;
use kapranov_core::report::CheckReport;
use kapranov_core::Scalar;
use serde::Serialize;
use serde_json::{Map, Value};

/// At most this many failures are listed per check.
pub const MAX_LISTED_FAILURES: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct FailureJson {
    pub location: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckJson {
    pub name: String,
    pub status: &'static str,
    pub cases: usize,
    pub failure_count: usize,
    pub failures: Vec<FailureJson>,
}

/// Keys of `results` are kept sorted, so the serialized report depends only
/// on the input.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub instance: String,
    pub passed: bool,
    pub checks: Vec<CheckJson>,
    pub results: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl Report {
    pub fn new(command: &str, instance: &str) -> Self {
        Report {
            command: command.into(),
            instance: instance.into(),
            passed: true,
            checks: Vec::new(),
            results: Map::new(),
            timing_ms: None,
        }
    }

    pub fn check(&mut self, r: CheckReport) {
        let passed = r.passed();
        self.passed &= passed;
        self.checks.push(CheckJson {
            name: r.name,
            status: if passed { "pass" } else { "fail" },
            cases: r.cases,
            failure_count: r.failures.len(),
            failures: r
                .failures
                .into_iter()
                .take(MAX_LISTED_FAILURES)
                .map(|f| FailureJson { location: f.location, detail: f.detail })
                .collect(),
        });
    }

    pub fn result(&mut self, key: &str, v: Value) {
        self.results.insert(key.into(), v);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn scalar_string(c: &Scalar) -> String {
    format_scalar(c)
}
