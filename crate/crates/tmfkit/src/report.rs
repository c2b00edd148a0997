//! Machine-readable check reports.

use serde::{Deserialize, Serialize};

/// Matrix convention embedded in every report.
pub const CONVENTION: &str =
    "row index = source generator; (phi, psi) satisfies psi*phi = f*I and sigma^-1(phi)*psi = f*I";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    pub millis: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub convention: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(title: impl Into<String>, seed: u64) -> Report {
        Report { title: title.into(), convention: CONVENTION.into(), seed, checks: Vec::new(), notes: Vec::new() }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>, millis: u64) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into(), millis });
    }

    /// Run `f`, timing it, and record its outcome.
    pub fn run(&mut self, name: impl Into<String>, f: impl FnOnce() -> Result<String, String>) -> bool {
        let start = std::time::Instant::now();
        let out = f();
        let millis = start.elapsed().as_millis() as u64;
        let pass = out.is_ok();
        let detail = match out {
            Ok(s) | Err(s) => s,
        };
        self.push(name, pass, detail, millis);
        pass
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\nconvention: {}\nseed: {}\n", self.title, self.convention, self.seed);
        for c in &self.checks {
            s.push_str(&format!("[{}] {} ({} ms)", if c.pass { "PASS" } else { "FAIL" }, c.name, c.millis));
            if !c.detail.is_empty() {
                s.push_str(&format!(": {}", c.detail));
            }
            s.push('\n');
        }
        for n in &self.notes {
            s.push_str(&format!("note: {}\n", n));
        }
        s
    }
}
