//! Report types shared by the verification surfaces: named checks with exact
//! or numeric residuals, serialized with a stable schema.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub identity: String,
    pub status: String,
    pub residual: String,
    pub runtime_ms: u64,
}

impl CheckEntry {
    pub fn exact(name: &str, identity: &str, ok: bool, residual: String) -> Self {
        CheckEntry {
            name: name.into(),
            identity: identity.into(),
            status: if ok { "exact-pass" } else { "fail" }.into(),
            residual,
            runtime_ms: 0,
        }
    }

    pub fn numeric(name: &str, identity: &str, value: f64, tolerance: f64) -> Self {
        CheckEntry {
            name: name.into(),
            identity: identity.into(),
            status: if value.abs() <= tolerance {
                "numeric-pass".into()
            } else {
                "fail".into()
            },
            residual: format!("{:.3e} (tol {:.1e})", value, tolerance),
            runtime_ms: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != "fail"
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub subject: String,
    pub seed: u64,
    pub conventions: Vec<String>,
    pub checks: Vec<CheckEntry>,
    pub overall: String,
}

impl VerificationReport {
    pub fn new(subject: String, seed: u64) -> Self {
        VerificationReport {
            schema: SCHEMA_VERSION,
            subject,
            seed,
            conventions: vec![
                "dtheta == i h_[ab] theta^a ^ theta^b-bar".into(),
                "dtheta^b == theta^a ^ omega_a^b + A^b_s theta ^ theta^s-bar".into(),
                "dh_[ab] == omega_a^g h_[gb] + conj(omega_b^g h_[ga])".into(),
                "scalar == h^[ab] ric_[ab] (no dimensional factor)".into(),
                "signature evaluated at the origin".into(),
                "adapted coframe theta^a + c Ups^a theta, c fixed by admissibility".into(),
            ],
            checks: Vec::new(),
            overall: "pass".into(),
        }
    }

    pub fn push(&mut self, entry: CheckEntry) {
        if !entry.passed() {
            self.overall = "fail".into();
        }
        self.checks.push(entry);
    }

    pub fn passed(&self) -> bool {
        self.overall == "pass"
    }
}
