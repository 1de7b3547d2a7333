//! Structured outcome of a verification run.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Result of a check over one or more cases.
///
/// `pass` holds iff every residual is at most `tolerance` and no sample
/// failed to evaluate; `reason` records the first such failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check_name: String,
    pub n_cases: usize,
    pub n_samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub max_rel_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub pole_distance_min: Option<f64>,
    pub wall_time_ms: u64,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl Report {
    /// Aggregates several reports of the same check.
    pub fn combine(name: &str, reports: &[Report], tolerance: f64) -> Report {
        let mut log = ResidualLog::new(name, tolerance);
        for r in reports {
            log.residuals.extend(&r.residuals);
            log.rel_max = log.rel_max.max(r.max_rel_residual);
            if let Some(d) = r.pole_distance_min {
                log.pole(d);
            }
            if log.reason.is_none() {
                log.reason = r.reason.clone();
            }
        }
        let mut out = log.finish(reports.iter().map(|r| r.n_cases).sum());
        out.wall_time_ms = reports.iter().map(|r| r.wall_time_ms).sum();
        out
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        format!(
            "{} {}: cases={} samples={} max={:.3e} mean={:.3e} tol={:.1e}{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check_name,
            self.n_cases,
            self.n_samples,
            self.max_residual,
            self.mean_residual,
            self.tolerance,
            self.reason
                .as_ref()
                .map(|r| format!(" ({r})"))
                .unwrap_or_default()
        )
    }
}

/// Accumulates residuals while a check runs.
#[derive(Debug)]
pub struct ResidualLog {
    name: String,
    tolerance: f64,
    residuals: Vec<f64>,
    rel_max: f64,
    pole_min: Option<f64>,
    reason: Option<String>,
    start: Instant,
}

impl ResidualLog {
    pub fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            tolerance,
            residuals: Vec::new(),
            rel_max: 0.0,
            pole_min: None,
            reason: None,
            start: Instant::now(),
        }
    }

    /// Records `|lhs - rhs|` with the relative residual against `|rhs|`.
    pub fn push(&mut self, residual: f64, scale: f64) {
        self.residuals.push(residual);
        let rel = if scale > 0.0 {
            residual / scale
        } else {
            residual
        };
        self.rel_max = self
            .rel_max
            .max(if rel.is_nan() { f64::INFINITY } else { rel });
    }

    pub fn pole(&mut self, distance: f64) {
        self.pole_min = Some(self.pole_min.map_or(distance, |d| d.min(distance)));
    }

    /// Marks a sample that could not be evaluated.
    pub fn fail(&mut self, err: &Error) {
        self.residuals.push(f64::INFINITY);
        if self.reason.is_none() {
            self.reason = Some(err.to_string());
        }
    }

    pub fn record<T>(&mut self, r: Result<T, Error>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(&e);
                None
            }
        }
    }

    pub fn finish(self, n_cases: usize) -> Report {
        let n = self.residuals.len();
        let max = self.residuals.iter().copied().fold(0.0f64, |m, r| {
            if r.is_nan() {
                f64::INFINITY
            } else {
                m.max(r)
            }
        });
        let mean = if n == 0 {
            0.0
        } else {
            self.residuals.iter().sum::<f64>() / n as f64
        };
        Report {
            check_name: self.name,
            n_cases,
            n_samples: n,
            max_residual: max,
            mean_residual: mean,
            max_rel_residual: self.rel_max,
            tolerance: self.tolerance,
            pass: self.reason.is_none() && max <= self.tolerance,
            pole_distance_min: self.pole_min,
            wall_time_ms: self.start.elapsed().as_millis() as u64,
            seed: None,
            reason: self.reason,
            residuals: self.residuals,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_within_tolerance() {
        let mut log = ResidualLog::new("x", 1e-6);
        log.push(1e-7, 1.0);
        log.push(5e-7, 1.0);
        let r = log.finish(1);
        assert!(r.pass);
        assert_eq!(r.max_residual, 5e-7);
        let mut log = ResidualLog::new("x", 1e-6);
        log.push(2e-6, 1.0);
        assert!(!log.finish(1).pass);
    }

    #[test]
    fn failures_flag_reason() {
        let mut log = ResidualLog::new("x", 1.0);
        log.fail(&Error::ModeMismatch);
        let r = log.finish(1);
        assert!(!r.pass);
        assert!(r.reason.is_some());
    }

    #[test]
    fn nan_residual_fails() {
        let mut log = ResidualLog::new("x", 1.0);
        log.push(f64::NAN, 1.0);
        assert!(!log.finish(1).pass);
    }
}
