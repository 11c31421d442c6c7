//! Experiments: response time against PU count, SU spend against
//! negotiation success rate, and classification of whether a negotiation
//! paid off.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::acl::{ChannelCount, Price};
use crate::agents::{PaymentMode, PuProfile, SuDemand};
use crate::engine::{
    run_negotiation, EngineError, LatencyModel, NegotiationOutcome, OutcomeStatus,
};
use crate::scenario::{write_csv, Cell, Scenario};
use crate::time::SimTime;

/// Whether polling every PU changed what the SU got.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NegotiationValue {
    /// Someone other than the first PU won.
    Useful,
    /// The first PU won; asking the others bought nothing.
    Redundant,
    Failed,
}

/// Redundant when the award went to the first PU asked (PU1), i.e. the
/// SU would have paid the same by taking the first offer without
/// negotiating.
pub fn classify(outcome: &NegotiationOutcome, scenario: &Scenario) -> NegotiationValue {
    match outcome.status {
        OutcomeStatus::Failure => NegotiationValue::Failed,
        OutcomeStatus::Success { winner, .. } => {
            if scenario.pus.first().map(|p| p.id) == Some(winner) {
                NegotiationValue::Redundant
            } else {
                NegotiationValue::Useful
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CostRow {
    pub success_rate: u32,
    pub total_cost: Price,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{rate}% of {runs} runs is not a whole number of runs")]
    NonIntegralSuccessCount { rate: u32, runs: u64 },
    #[error("success rate {0}% is outside 0..=100")]
    RateOutOfRange(u32),
    #[error("sweep needs {requested} PUs but the scenario has {available}")]
    TooFewPus { requested: usize, available: usize },
    #[error("sweep must cover at least one PU")]
    EmptySweep,
    #[error("cost overflows")]
    Overflow,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// `k·p_success + (runs − k)·p_fail` where `k = runs·rate/100`.
pub fn expected_total_cost(
    rate: u32,
    p_success: Price,
    p_fail: Price,
    runs: u64,
) -> Result<Price, EvalError> {
    if rate > 100 {
        return Err(EvalError::RateOutOfRange(rate));
    }
    let scaled = runs
        .checked_mul(u64::from(rate))
        .ok_or(EvalError::Overflow)?;
    if scaled % 100 != 0 {
        return Err(EvalError::NonIntegralSuccessCount { rate, runs });
    }
    let k = scaled / 100;
    p_success
        .checked_mul(k)
        .and_then(|s| p_fail.checked_mul(runs - k).and_then(|f| s.checked_add(f)))
        .ok_or(EvalError::Overflow)
}

/// Cost at rates 0, 10, ..., 100.
pub fn sweep_success_rate(
    p_success: Price,
    p_fail: Price,
    runs: u64,
) -> Result<Vec<CostRow>, EvalError> {
    (0..=10)
        .map(|step| {
            let rate = step * 10;
            Ok(CostRow {
                success_rate: rate,
                total_cost: expected_total_cost(rate, p_success, p_fail, runs)?,
            })
        })
        .collect()
}

/// Runs the negotiation on the first 1, 2, ..., `n_max` PUs of `base` and
/// reports the SU's decision time for each.
pub fn sweep_num_pus(base: &Scenario, n_max: usize) -> Result<Vec<(usize, SimTime)>, EvalError> {
    if n_max == 0 {
        return Err(EvalError::EmptySweep);
    }
    if n_max > base.pus.len() {
        return Err(EvalError::TooFewPus {
            requested: n_max,
            available: base.pus.len(),
        });
    }
    (1..=n_max)
        .map(|n| {
            let run = run_negotiation(&base.prefix(n))?;
            Ok((n, run.outcome.elapsed))
        })
        .collect()
}

pub fn cost_csv(rows: &[CostRow]) -> String {
    let rows: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::Int(i64::from(r.success_rate)),
                Cell::from(r.total_cost),
            ]
        })
        .collect();
    write_csv(&["rate", "cost"], &rows).expect("rows match header")
}

pub fn elapsed_csv(rows: &[(usize, SimTime)]) -> String {
    let rows: Vec<Vec<Cell>> = rows
        .iter()
        .map(|&(n, t)| vec![Cell::Int(n as i64), Cell::Real(t.as_units())])
        .collect();
    write_csv(&["n_pus", "elapsed"], &rows).expect("rows match header")
}

/// Bounds for randomly generated scenarios. Every bound is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSampler {
    pub min_pus: usize,
    pub max_pus: usize,
    pub max_free: ChannelCount,
    pub max_price: Price,
    pub max_nbc: ChannelCount,
    pub latency: LatencyModel,
    pub payment_mode: PaymentMode,
}

impl Default for ScenarioSampler {
    fn default() -> Self {
        Self {
            min_pus: 1,
            max_pus: 20,
            max_free: 8,
            max_price: 1000,
            max_nbc: 8,
            latency: LatencyModel::default(),
            payment_mode: PaymentMode::UnitPrice,
        }
    }
}

impl ScenarioSampler {
    /// Draws one scenario. The same seed always yields the same scenario, and
    /// the seed is stored in it.
    pub fn sample(&self, seed: u64) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(self.min_pus.max(1)..=self.max_pus.max(1));
        let pus = (1..=n as u32)
            .map(|k| {
                PuProfile::new(
                    k,
                    rng.gen_range(0..=self.max_free),
                    rng.gen_range(1..=self.max_price.max(1)),
                )
            })
            .collect();
        let nbc = rng.gen_range(1..=self.max_nbc.max(1));
        Scenario {
            pus,
            demand: SuDemand::new(nbc).expect("nbc drawn from 1.."),
            latency: self.latency,
            payment_mode: self.payment_mode,
            seed,
        }
    }
}
