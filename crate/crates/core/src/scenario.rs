//! Scenario files, sniffer traces and CSV tables.
//!
//! Scenario document (JSON):
//!
//! ```json
//! {"pus": [[1, 270], [2, 230]], "nbc": 1,
//!  "latency": {"transit": 1.0, "pu_proc": 0.5, "su_proc": 0.5},
//!  "payment_mode": "unit", "seed": 0}
//! ```
//!
//! Each `pus` entry is `[free_channels, unit_price]`; the k-th entry is PU k.
//! `latency`, `payment_mode` and `seed` are optional.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acl::{AgentId, ChannelCount, Price};
use crate::agents::{PaymentMode, PuProfile, SuDemand};
use crate::engine::{LatencyModel, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub pus: Vec<PuProfile>,
    pub demand: SuDemand,
    pub latency: LatencyModel,
    pub payment_mode: PaymentMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Semantic(String),
}

impl Scenario {
    /// Scenario with default latency, unit-price payment and seed 0. `pus`
    /// holds `(free_channels, unit_price)` for PU1, PU2, ...
    pub fn from_pairs(
        pus: &[(ChannelCount, Price)],
        nbc: ChannelCount,
    ) -> Result<Self, ScenarioError> {
        let demand = SuDemand::new(nbc).ok_or_else(|| semantic("nbc must be >= 1"))?;
        let scenario = Scenario {
            pus: pus
                .iter()
                .zip(1u32..)
                .map(|(&(free, price), k)| PuProfile::new(k, free, price))
                .collect(),
            demand,
            latency: LatencyModel::default(),
            payment_mode: PaymentMode::UnitPrice,
            seed: 0,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn with_payment_mode(mut self, mode: PaymentMode) -> Self {
        self.payment_mode = mode;
        self
    }

    pub fn with_latency(mut self, latency: LatencyModel) -> Self {
        self.latency = latency;
        self
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.pus.is_empty() {
            return Err(semantic("empty pus"));
        }
        for (pu, k) in self.pus.iter().zip(1u32..) {
            if pu.id != AgentId::Pu(k) {
                return Err(semantic(format!(
                    "PU indices must be contiguous from 1: entry {k} is {}",
                    pu.id
                )));
            }
            if pu.unit_price == 0 {
                return Err(semantic(format!("{}: unit price must be > 0", pu.id)));
            }
        }
        self.latency.validate()
    }

    /// The first `n` PUs of this scenario.
    pub fn prefix(&self, n: usize) -> Scenario {
        Scenario {
            pus: self.pus[..n.min(self.pus.len())].to_vec(),
            ..self.clone()
        }
    }
}

fn semantic(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Semantic(msg.into())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    pus: Vec<(i64, i64)>,
    nbc: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    latency: Option<RawLatency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payment_mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLatency {
    #[serde(default = "default_transit")]
    transit: f64,
    #[serde(default = "default_proc")]
    pu_proc: f64,
    #[serde(default = "default_proc")]
    su_proc: f64,
}

fn default_transit() -> f64 {
    LatencyModel::default().transit.as_units()
}

fn default_proc() -> f64 {
    LatencyModel::default().pu_proc.as_units()
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let raw: RawScenario =
        serde_json::from_value(value).map_err(|e| ScenarioError::Semantic(e.to_string()))?;

    if raw.pus.is_empty() {
        return Err(semantic("empty pus"));
    }
    let nbc = u32::try_from(raw.nbc)
        .ok()
        .and_then(SuDemand::new)
        .ok_or_else(|| semantic(format!("nbc must be >= 1 (got {})", raw.nbc)))?;
    let mut pus = Vec::with_capacity(raw.pus.len());
    for ((free, price), k) in raw.pus.into_iter().zip(1u32..) {
        let free = u32::try_from(free)
            .map_err(|_| semantic(format!("PU{k}: free channels must be >= 0 (got {free})")))?;
        let price = u64::try_from(price)
            .ok()
            .filter(|&p| p > 0)
            .ok_or_else(|| semantic(format!("PU{k}: unit price must be > 0 (got {price})")))?;
        pus.push(PuProfile::new(k, free, price));
    }
    let latency = match raw.latency {
        None => LatencyModel::default(),
        Some(l) => LatencyModel::from_units(l.transit, l.pu_proc, l.su_proc)?,
    };
    let payment_mode = match raw.payment_mode.as_deref() {
        None | Some("unit") => PaymentMode::UnitPrice,
        Some("total") => PaymentMode::TotalPrice,
        Some(other) => {
            return Err(semantic(format!(
                "payment_mode must be \"unit\" or \"total\" (got {other:?})"
            )))
        }
    };
    let scenario = Scenario {
        pus,
        demand: nbc,
        latency,
        payment_mode,
        seed: raw.seed.unwrap_or(0),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Writes a scenario in the same format [`parse_scenario`] reads. All
/// optional fields are written out.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let raw = RawScenario {
        pus: scenario
            .pus
            .iter()
            .map(|p| (i64::from(p.free_channels), p.unit_price as i64))
            .collect(),
        nbc: i64::from(scenario.demand.nbc()),
        latency: Some(RawLatency {
            transit: scenario.latency.transit.as_units(),
            pu_proc: scenario.latency.pu_proc.as_units(),
            su_proc: scenario.latency.su_proc.as_units(),
        }),
        payment_mode: Some(
            match scenario.payment_mode {
                PaymentMode::UnitPrice => "unit",
                PaymentMode::TotalPrice => "total",
            }
            .to_owned(),
        ),
        seed: Some(scenario.seed),
    };
    serde_json::to_string(&raw).expect("scenario serialization cannot fail")
}

/// Renders one trace record as a JSON object with keys in fixed order.
pub fn trace_line(record: &TraceRecord) -> String {
    let body = serde_json::to_string(&record.body_summary).expect("string serialization");
    format!(
        "{{\"t\":\"{}\",\"from\":\"{}\",\"to\":\"{}\",\"perf\":\"{}\",\"body\":{}}}\n",
        record.time, record.from, record.to, record.performative, body
    )
}

/// Writes records as JSON Lines and returns the number of bytes written.
pub fn write_trace<W: Write>(records: &[TraceRecord], mut sink: W) -> io::Result<usize> {
    let mut written = 0;
    for record in records {
        let line = trace_line(record);
        sink.write_all(line.as_bytes())?;
        written += line.len();
    }
    sink.flush()?;
    Ok(written)
}

/// A CSV cell. Integers print bare; reals print with three fractional digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("row {row} has {got} cells, header has {expected}")]
pub struct ArityMismatch {
    pub row: usize,
    pub expected: usize,
    pub got: usize,
}

fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

pub fn write_csv<S: AsRef<str>>(header: &[S], rows: &[Vec<Cell>]) -> Result<String, ArityMismatch> {
    let mut out = String::new();
    let names: Vec<String> = header.iter().map(|h| csv_field(h.as_ref())).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(ArityMismatch {
                row: i,
                expected: header.len(),
                got: row.len(),
            });
        }
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Int(v) => v.to_string(),
                Cell::Real(v) => format!("{v:.3}"),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}
