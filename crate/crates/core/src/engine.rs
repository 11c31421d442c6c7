//! Discrete-event driver for one negotiation.
//!
//! The SU broadcasts at t = 0. Each hop costs `transit`. A PU answers
//! `pu_proc` after receiving a message. The SU handles replies one at a time,
//! and each reply costs `su_proc`. The decision is taken once the last reply
//! has been processed. Events fire in `(time, seq)` order. `seq` is assigned
//! when the event is scheduled, so replies that arrive together are handled
//! in the order their PUs were asked.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::acl::{AclMessage, AgentId, ConversationCounter, MessageIdCounter, Performative, Price};
use crate::agents::{self, AgentError, Decision, Phase, PuProfile};
use crate::scenario::{Scenario, ScenarioError};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatencyModel {
    pub transit: SimTime,
    pub pu_proc: SimTime,
    pub su_proc: SimTime,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            transit: SimTime::from_ticks(1000),
            pu_proc: SimTime::from_ticks(500),
            su_proc: SimTime::from_ticks(500),
        }
    }
}

impl LatencyModel {
    /// Builds a model from delays in time-units.
    pub fn from_units(transit: f64, pu_proc: f64, su_proc: f64) -> Result<Self, ScenarioError> {
        let conv = |name: &'static str, v: f64| {
            SimTime::from_units(v).ok_or(ScenarioError::Semantic(format!(
                "latency.{name} must be finite and >= 0"
            )))
        };
        let model = Self {
            transit: conv("transit", transit)?,
            pu_proc: conv("pu_proc", pu_proc)?,
            su_proc: conv("su_proc", su_proc)?,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.transit == SimTime::ZERO {
            return Err(ScenarioError::Semantic(
                "latency.transit must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub time: SimTime,
    pub from: AgentId,
    pub to: AgentId,
    pub performative: Performative,
    pub body_summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeStatus {
    Success {
        winner: AgentId,
        unit_price: Price,
        amount_paid: Price,
    },
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NegotiationOutcome {
    pub status: OutcomeStatus,
    /// Number of PU replies the SU processed.
    pub responses: usize,
    /// Time from the first REQUEST to the SU's decision.
    pub elapsed: SimTime,
    pub message_count: usize,
}

impl NegotiationOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self.status, OutcomeStatus::Success { .. })
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegotiationRun {
    pub outcome: NegotiationOutcome,
    pub trace: Vec<TraceRecord>,
    /// Delivered messages, in delivery order.
    pub messages: Vec<AclMessage>,
    /// PU profiles after the run (the winner's channels are committed).
    pub final_pus: Vec<PuProfile>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(#[from] ScenarioError),
    #[error("agent rejected a message: {0}")]
    Agent(#[from] AgentError),
    #[error("event queue drained before the SU decided")]
    Stalled,
}

#[derive(Debug)]
struct SimEvent {
    time: SimTime,
    seq: u64,
    msg: AclMessage,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for SimEvent {}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// reversed: BinaryHeap is a max-heap
impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Default)]
struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
}

impl EventQueue {
    fn schedule(&mut self, time: SimTime, msg: AclMessage) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent { time, seq, msg });
    }

    fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop()
    }
}

/// Runs the full protocol for one scenario.
pub fn run_negotiation(scenario: &Scenario) -> Result<NegotiationRun, EngineError> {
    scenario.validate()?;
    let lat = scenario.latency;
    let demand = scenario.demand;

    let mut conversations = ConversationCounter::new();
    let mut ids = MessageIdCounter::new();
    let mut queue = EventQueue::default();
    let mut pus: BTreeMap<AgentId, PuProfile> = scenario.pus.iter().map(|p| (p.id, *p)).collect();
    let pu_ids: Vec<AgentId> = pus.keys().copied().collect();

    let conv = conversations.next_conversation_id();
    let (mut su, requests) = agents::su_init(demand, &pu_ids, conv, &mut ids, SimTime::ZERO)?;
    for req in requests {
        queue.schedule(req.send_time() + lat.transit, req);
    }

    let mut trace = Vec::new();
    let mut delivered = Vec::new();
    let mut su_busy_until = SimTime::ZERO;
    let mut responses = 0usize;
    let mut decision: Option<(Decision, SimTime)> = None;

    while let Some(SimEvent { time: now, msg, .. }) = queue.pop() {
        trace.push(TraceRecord {
            time: now,
            from: msg.sender(),
            to: msg.receiver(),
            performative: msg.performative(),
            body_summary: msg.body().summary(),
        });
        match msg.performative() {
            Performative::Request => {
                let profile = pu_profile(&pus, msg.receiver())?;
                let reply = agents::pu_handle_request(profile, &msg, &mut ids, now + lat.pu_proc)?;
                queue.schedule(reply.send_time() + lat.transit, reply);
            }
            Performative::Inform | Performative::Refuse => {
                su_busy_until = su_busy_until.max(now) + lat.su_proc;
                su = agents::su_handle_reply(&su, &msg)?;
                responses += 1;
                if su.phase == Phase::Decided {
                    let (dec, confirms) =
                        agents::su_decide(&su, scenario.payment_mode, &mut ids, su_busy_until)?;
                    decision = Some((dec, su_busy_until));
                    for c in confirms {
                        queue.schedule(c.send_time() + lat.transit, c);
                    }
                }
            }
            Performative::Confirm => {
                let profile = pu_profile(&pus, msg.receiver())?;
                let (updated, ack) =
                    agents::pu_handle_confirm(profile, demand, &msg, &mut ids, now + lat.pu_proc)?;
                pus.insert(updated.id, updated);
                queue.schedule(ack.send_time() + lat.transit, ack);
            }
            Performative::AcceptProposal => {}
        }
        delivered.push(msg);
    }

    let (decision, elapsed) = decision.ok_or(EngineError::Stalled)?;
    let status = match decision {
        Decision::Award {
            winner,
            unit_price,
            amount,
        } => OutcomeStatus::Success {
            winner,
            unit_price,
            amount_paid: amount,
        },
        Decision::NoDeal => OutcomeStatus::Failure,
    };
    Ok(NegotiationRun {
        outcome: NegotiationOutcome {
            status,
            responses,
            elapsed,
            message_count: delivered.len(),
        },
        trace,
        messages: delivered,
        final_pus: pus.into_values().collect(),
    })
}

fn pu_profile(pus: &BTreeMap<AgentId, PuProfile>, id: AgentId) -> Result<&PuProfile, EngineError> {
    pus.get(&id)
        .ok_or(EngineError::Agent(AgentError::UnknownPu(id)))
}

/// Closed-form decision time: `2·transit + pu_proc + n·su_proc`.
pub fn elapsed_formula(n_pus: usize, lat: &LatencyModel) -> SimTime {
    lat.transit * 2 + lat.pu_proc + lat.su_proc * n_pus as u64
}
