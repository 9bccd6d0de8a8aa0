//! Clock and space metrics over recorded traces: per-step dilation factors,
//! footprint ratios, and empirical local-vs-global complexity profiles.
//!
//! These are pure functions over immutable traces. The space recount in
//! `space_used` deliberately ignores the trace's own online counters and
//! re-derives the footprint from the per-step log, so the two routes check
//! each other.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{OpKind, Trace};

/// An exact ratio; space dilation factors are rationals with the oracle
/// output length as denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: i64,
    pub den: u64,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("local step {0} is out of range for this trace")]
    TauOutOfRange(u64),
    #[error("output length must be at least one bit")]
    ZeroOutputLength,
    #[error(
        "summary-mode trace lacks per-step records; re-run the simulation with full snapshots"
    )]
    SummaryMode,
    #[error("oracle local cost is not constant across sizes: {0:?}")]
    NonConstantLocalCost(Vec<u64>),
    #[error("trace records no completed local steps")]
    EmptyTrace,
}

/// Time-dilation factor for local step `tau` (1-based): the number of
/// global steps between updates `tau` and `tau + 1`.
pub fn lorentz_time(trace: &Trace, tau: u64) -> Result<u64, MetricsError> {
    if tau < 1 || tau as usize >= trace.k.len().max(1) {
        return Err(MetricsError::TauOutOfRange(tau));
    }
    Ok(trace.k[tau as usize] - trace.k[tau as usize - 1])
}

/// All time-dilation factors of a trace: entry `j` covers updates
/// `j + 1 → j + 2`.
pub fn lorentz_time_series(trace: &Trace) -> Vec<u64> {
    trace.k.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Space-dilation factor for local step `tau` (1-based): the footprint
/// difference between consecutive intervals divided by the oracle output
/// length. Zero growth reports zero rather than being undefined.
pub fn lorentz_space(trace: &Trace, tau: u64, output_length: u64) -> Result<Ratio, MetricsError> {
    if output_length == 0 {
        return Err(MetricsError::ZeroOutputLength);
    }
    if tau < 1 || (tau as usize) >= trace.space_per_tau.len().max(1) {
        return Err(MetricsError::TauOutOfRange(tau));
    }
    let g_next = trace.space_per_tau[tau as usize] as i64;
    let g = trace.space_per_tau[tau as usize - 1] as i64;
    Ok(Ratio {
        num: g_next - g,
        den: output_length,
    })
}

/// Independent recount of g_τ (1-based) from the per-step log: distinct
/// scrap cells touched plus distinct local cells written during the
/// interval `(k_{τ-1}, k_τ]`. The reference interpreter only ever reads
/// scrap cells it first wrote, so counting writes is exact.
pub fn space_used(trace: &Trace, tau: u64) -> Result<u64, MetricsError> {
    if tau < 1 || tau as usize > trace.k.len() {
        return Err(MetricsError::TauOutOfRange(tau));
    }
    if trace.step_log.is_empty() {
        return Err(MetricsError::SummaryMode);
    }
    let end = trace.k[tau as usize - 1];
    let start = if tau == 1 {
        0
    } else {
        trace.k[tau as usize - 2]
    };
    let mut scrap = BTreeSet::new();
    let mut local = BTreeSet::new();
    for step in &trace.step_log {
        if step.t <= start || step.t > end {
            continue;
        }
        match step.op {
            OpKind::WriteScrap | OpKind::Pad => {
                scrap.insert(step.cell);
            }
            OpKind::WriteLocal | OpKind::Apply => {
                local.insert(step.cell);
            }
            OpKind::Read => {}
        }
    }
    Ok(scrap.len() as u64 + local.len() as u64)
}

/// One measured point of a local-vs-global complexity profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: u64,
    pub local_steps: u64,
    pub global_steps: u64,
    pub scrap_cells: u64,
}

/// Empirical complexity profile of one oracle across input sizes, with a
/// fitted log-log slope of global steps against size. Tables and a slope,
/// never formal asymptotic claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub oracle: String,
    pub rows: Vec<ProfileRow>,
    pub slope_estimate: f64,
}

/// Assemble a profile from per-size measurements, checking that the local
/// cost is the same at every size.
pub fn complexity_profile(
    oracle: impl Into<String>,
    rows: Vec<ProfileRow>,
) -> Result<ComplexityProfile, MetricsError> {
    let locals: Vec<u64> = rows.iter().map(|r| r.local_steps).collect();
    if locals.windows(2).any(|w| w[0] != w[1]) {
        return Err(MetricsError::NonConstantLocalCost(locals));
    }
    for r in &rows {
        debug_assert!(r.local_steps <= r.global_steps);
    }
    Ok(ComplexityProfile {
        oracle: oracle.into(),
        slope_estimate: log_log_slope(&rows),
        rows,
    })
}

fn log_log_slope(rows: &[ProfileRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n > 0 && r.global_steps > 0)
        .map(|r| ((r.n as f64).ln(), (r.global_steps as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        0.0
    } else {
        (n * sxy - sx * sy) / denom
    }
}

/// Per-τ metrics row of the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauMetricsRow {
    pub tau: u64,
    pub k_tau: u64,
    pub gamma_t: Option<u64>,
    pub g_tau: u64,
    pub gamma_g: Option<f64>,
}

/// The full metrics report: per-τ series plus optional complexity profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_tau: Vec<TauMetricsRow>,
    pub profile: Vec<ProfileRow>,
    pub slope_estimate: Option<f64>,
}

impl MetricsReport {
    /// Build the per-τ report from a trace. `gamma_g` uses output length 1
    /// when `output_length` is absent (raw footprint growth).
    pub fn from_trace(
        trace: &Trace,
        output_length: Option<u64>,
    ) -> Result<MetricsReport, MetricsError> {
        if trace.k.is_empty() {
            return Err(MetricsError::EmptyTrace);
        }
        let den = output_length.unwrap_or(1);
        if den == 0 {
            return Err(MetricsError::ZeroOutputLength);
        }
        let mut per_tau = Vec::new();
        for j in 0..trace.k.len() {
            let tau = j as u64 + 1;
            let gamma_t = (j + 1 < trace.k.len()).then(|| trace.k[j + 1] - trace.k[j]);
            let gamma_g = (j + 1 < trace.space_per_tau.len()).then(|| {
                (trace.space_per_tau[j + 1] as i64 - trace.space_per_tau[j] as i64) as f64
                    / den as f64
            });
            per_tau.push(TauMetricsRow {
                tau,
                k_tau: trace.k[j],
                gamma_t,
                g_tau: trace.space_per_tau[j],
                gamma_g,
            });
        }
        Ok(MetricsReport {
            per_tau,
            profile: Vec::new(),
            slope_estimate: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics report serializes")
    }

    /// CSV with the same values as the JSON: a per-τ table, then (when
    /// present) a profile table, separated by comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,k_tau,gamma_t,g_tau,gamma_g\n");
        for row in &self.per_tau {
            let gamma_t = row.gamma_t.map(|v| v.to_string()).unwrap_or_default();
            let gamma_g = row.gamma_g.map(|v| format!("{v}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.tau, row.k_tau, gamma_t, row.g_tau, gamma_g
            ));
        }
        if !self.profile.is_empty() {
            out.push_str("# profile\nn,local,global,scrap\n");
            for r in &self.profile {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.n, r.local_steps, r.global_steps, r.scrap_cells
                ));
            }
            if let Some(slope) = self.slope_estimate {
                out.push_str(&format!("# slope_estimate,{slope}\n"));
            }
        }
        out
    }
}
