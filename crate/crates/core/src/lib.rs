//! Deterministic simulator of one-to-many spectrum negotiation in a
//! cognitive radio network.
//!
//! One secondary user (SU) asks N primary users (PUs) for a number of
//! channels. Each PU quotes a unit price or refuses. The SU awards the
//! cheapest feasible offer (the lowest PU index wins ties) and confirms it.
//!
//! - [`acl`]: performatives, message bodies, well-formedness rules
//! - [`agents`]: pure SU / PU state machines
//! - [`engine`]: discrete-event run with a latency model and sniffer trace
//! - [`scenario`]: scenario JSON, trace JSON Lines, CSV output
//! - [`evaluation`]: sweeps, cost model, negotiation classifier
//! - [`cli`]: the `crn-sim` command

pub mod acl;
pub mod agents;
pub mod cli;
pub mod engine;
pub mod evaluation;
pub mod scenario;
pub mod time;

pub use acl::{AclMessage, AgentId, MessageBody, Performative};
pub use agents::{Decision, PaymentMode, PuProfile, SuDemand};
pub use engine::{
    run_negotiation, LatencyModel, NegotiationOutcome, NegotiationRun, OutcomeStatus,
};
pub use scenario::{parse_scenario, Scenario};
pub use time::SimTime;
