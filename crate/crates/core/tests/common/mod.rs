#![allow(dead_code)]

use crn_negotiation::{AgentId, Scenario};

/// Brute-force reference: walk the PUs in index order and keep the first
/// strictly cheaper feasible one.
pub fn oracle_winner(pus: &[(u32, u64)], nbc: u32) -> Option<(u32, u64)> {
    let mut best: Option<(u32, u64)> = None;
    for (i, &(free, price)) in pus.iter().enumerate() {
        if free < nbc {
            continue;
        }
        let idx = i as u32 + 1;
        match best {
            Some((_, p)) if p <= price => {}
            _ => best = Some((idx, price)),
        }
    }
    best
}

pub fn pairs(s: &Scenario) -> Vec<(u32, u64)> {
    s.pus
        .iter()
        .map(|p| (p.free_channels, p.unit_price))
        .collect()
}

pub fn pu(k: u32) -> AgentId {
    AgentId::Pu(k)
}

pub const PAPER_DATASET: [(u32, u64); 5] = [(1, 270), (2, 230), (3, 320), (4, 250), (3, 340)];
pub const FAILURE_DATASET: [(u32, u64); 5] = [(2, 500), (1, 400), (1, 240), (1, 220), (1, 120)];
pub const SUCCESS_DATASET: [(u32, u64); 5] = [(1, 500), (1, 120), (1, 300), (1, 320), (2, 100)];
