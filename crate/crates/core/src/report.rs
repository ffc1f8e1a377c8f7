//! Pass/fail records shared by the validators and identity checkers.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub location: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub name: String,
    /// Number of individual cases evaluated.
    pub cases: usize,
    pub failures: Vec<Failure>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport { name: name.into(), cases: 0, failures: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn fail(&mut self, location: impl Into<String>, detail: impl Into<String>) {
        self.failures.push(Failure { location: location.into(), detail: detail.into() });
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.cases += other.cases;
        self.failures.extend(other.failures);
    }

    pub fn first_failure(&self) -> Option<&Failure> {
        self.failures.first()
    }
}
