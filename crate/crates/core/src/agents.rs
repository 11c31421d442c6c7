//! State machines for the secondary user (buyer) and primary users (sellers).
//!
//! Every function here is pure: it takes the current state plus an incoming
//! message and returns the next state and the messages to send. Message ids
//! come from the caller's [`MessageIdCounter`], so two calls with equal
//! inputs (counter included) produce equal outputs.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::acl::{
    AclMessage, AgentId, ChannelCount, ConversationId, MessageBody, MessageIdCounter, Performative,
    Price, ProtocolViolation,
};
use crate::time::SimTime;

/// A primary user's free channels and the unit price it asks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PuProfile {
    pub id: AgentId,
    pub free_channels: ChannelCount,
    pub unit_price: Price,
}

impl PuProfile {
    pub fn new(index: u32, free_channels: ChannelCount, unit_price: Price) -> Self {
        Self {
            id: AgentId::Pu(index),
            free_channels,
            unit_price,
        }
    }

    pub fn can_serve(&self, demand: SuDemand) -> bool {
        demand.nbc() <= self.free_channels
    }
}

/// Number of channels the SU wants. Always at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SuDemand(ChannelCount);

impl SuDemand {
    pub fn new(nbc: ChannelCount) -> Option<Self> {
        (nbc >= 1).then_some(SuDemand(nbc))
    }

    pub fn nbc(self) -> ChannelCount {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Offer {
    pub pu: AgentId,
    pub unit_price: Price,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PaymentMode {
    /// The SU pays the quoted value once, whatever the channel count.
    #[default]
    UnitPrice,
    /// The SU pays quoted price times channel count.
    TotalPrice,
}

impl PaymentMode {
    pub fn amount(self, unit_price: Price, demand: SuDemand) -> Option<Price> {
        match self {
            PaymentMode::UnitPrice => Some(unit_price),
            PaymentMode::TotalPrice => unit_price.checked_mul(Price::from(demand.nbc())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Collecting,
    Decided,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuState {
    pub demand: SuDemand,
    pub conversation: ConversationId,
    /// Every PU the request went out to.
    pub pus: BTreeSet<AgentId>,
    pub expected_replies: BTreeSet<AgentId>,
    /// Quotes in arrival order.
    pub offers: Vec<Offer>,
    pub refusals: BTreeSet<AgentId>,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Award {
        winner: AgentId,
        unit_price: Price,
        amount: Price,
    },
    NoDeal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("the SU must contact at least one PU")]
    EmptyPuSet,
    #[error("{0} is not a valid, distinct PU")]
    InvalidPu(AgentId),
    #[error("message addressed to {receiver}, not {agent}")]
    NotAddressee { agent: AgentId, receiver: AgentId },
    #[error("{0} already replied")]
    DuplicateReply(AgentId),
    #[error("{0} is not part of this conversation")]
    UnknownPu(AgentId),
    #[error("conversation {got} does not match {expected}")]
    WrongConversation {
        expected: ConversationId,
        got: ConversationId,
    },
    #[error("{performative} is not expected here")]
    UnexpectedMessage { performative: Performative },
    #[error("the SU is still waiting for replies")]
    NotReady,
    #[error("{pu} has {free} free channels, cannot grant {requested}")]
    Oversubscribed {
        pu: AgentId,
        free: ChannelCount,
        requested: ChannelCount,
    },
    #[error("payment amount overflows")]
    AmountOverflow,
    #[error(transparent)]
    Protocol(#[from] ProtocolViolation),
}

/// Starts a negotiation: one REQUEST per PU, in ascending PU index order.
pub fn su_init(
    demand: SuDemand,
    pus: &[AgentId],
    conversation: ConversationId,
    ids: &mut MessageIdCounter,
    now: SimTime,
) -> Result<(SuState, Vec<AclMessage>), AgentError> {
    if pus.is_empty() {
        return Err(AgentError::EmptyPuSet);
    }
    let mut set = BTreeSet::new();
    for &pu in pus {
        if !matches!(pu, AgentId::Pu(k) if k >= 1) || !set.insert(pu) {
            return Err(AgentError::InvalidPu(pu));
        }
    }
    let mut messages = Vec::with_capacity(set.len());
    for &pu in &set {
        messages.push(AclMessage::new(
            ids.next_id(),
            conversation,
            AgentId::Su,
            pu,
            Performative::Request,
            MessageBody::ChannelRequest { nbc: demand.nbc() },
            now,
        )?);
    }
    let state = SuState {
        demand,
        conversation,
        expected_replies: set.clone(),
        pus: set,
        offers: Vec::new(),
        refusals: BTreeSet::new(),
        phase: Phase::Collecting,
    };
    Ok((state, messages))
}

fn ensure_addressed(agent: AgentId, msg: &AclMessage) -> Result<(), AgentError> {
    if msg.receiver() != agent {
        return Err(AgentError::NotAddressee {
            agent,
            receiver: msg.receiver(),
        });
    }
    Ok(())
}

/// A PU answers a REQUEST with a quote if it has enough free channels and a
/// refusal carrying its free count otherwise.
pub fn pu_handle_request(
    profile: &PuProfile,
    msg: &AclMessage,
    ids: &mut MessageIdCounter,
    now: SimTime,
) -> Result<AclMessage, AgentError> {
    ensure_addressed(profile.id, msg)?;
    let MessageBody::ChannelRequest { nbc } = *msg.body() else {
        return Err(AgentError::UnexpectedMessage {
            performative: msg.performative(),
        });
    };
    let (performative, body) = if nbc <= profile.free_channels {
        (
            Performative::Inform,
            MessageBody::PriceQuote {
                unit_price: profile.unit_price,
            },
        )
    } else {
        (
            Performative::Refuse,
            MessageBody::Refusal {
                available: profile.free_channels,
            },
        )
    };
    Ok(AclMessage::new(
        ids.next_id(),
        msg.conversation_id(),
        profile.id,
        msg.sender(),
        performative,
        body,
        now,
    )?)
}

/// Records one INFORM or REFUSE. The state moves to `Decided` once every PU
/// has answered.
pub fn su_handle_reply(state: &SuState, msg: &AclMessage) -> Result<SuState, AgentError> {
    ensure_addressed(AgentId::Su, msg)?;
    if msg.conversation_id() != state.conversation {
        return Err(AgentError::WrongConversation {
            expected: state.conversation,
            got: msg.conversation_id(),
        });
    }
    let sender = msg.sender();
    if !state.pus.contains(&sender) {
        return Err(AgentError::UnknownPu(sender));
    }
    if !state.expected_replies.contains(&sender) {
        return Err(AgentError::DuplicateReply(sender));
    }
    let mut next = state.clone();
    match *msg.body() {
        MessageBody::PriceQuote { unit_price } => next.offers.push(Offer {
            pu: sender,
            unit_price,
        }),
        MessageBody::Refusal { .. } => {
            next.refusals.insert(sender);
        }
        _ => {
            return Err(AgentError::UnexpectedMessage {
                performative: msg.performative(),
            })
        }
    }
    next.expected_replies.remove(&sender);
    if next.expected_replies.is_empty() {
        next.phase = Phase::Decided;
    }
    Ok(next)
}

/// Cheapest quote; on equal prices the lowest PU index wins.
pub fn select_best_offer(offers: &[Offer]) -> Option<Offer> {
    offers
        .iter()
        .copied()
        .min_by_key(|o| (o.unit_price, o.pu.index()))
}

/// Picks the winner once all replies are in. An award produces a single
/// CONFIRM to the winner; no deal produces nothing.
pub fn su_decide(
    state: &SuState,
    payment_mode: PaymentMode,
    ids: &mut MessageIdCounter,
    now: SimTime,
) -> Result<(Decision, Vec<AclMessage>), AgentError> {
    if state.phase != Phase::Decided {
        return Err(AgentError::NotReady);
    }
    let Some(best) = select_best_offer(&state.offers) else {
        return Ok((Decision::NoDeal, Vec::new()));
    };
    let amount = payment_mode
        .amount(best.unit_price, state.demand)
        .ok_or(AgentError::AmountOverflow)?;
    let confirm = AclMessage::new(
        ids.next_id(),
        state.conversation,
        AgentId::Su,
        best.pu,
        Performative::Confirm,
        MessageBody::Confirmation { amount },
        now,
    )?;
    Ok((
        Decision::Award {
            winner: best.pu,
            unit_price: best.unit_price,
            amount,
        },
        vec![confirm],
    ))
}

/// The winning PU commits the channels and acknowledges with ACCEPT_PROPOSAL.
pub fn pu_handle_confirm(
    profile: &PuProfile,
    demand: SuDemand,
    msg: &AclMessage,
    ids: &mut MessageIdCounter,
    now: SimTime,
) -> Result<(PuProfile, AclMessage), AgentError> {
    ensure_addressed(profile.id, msg)?;
    if msg.performative() != Performative::Confirm {
        return Err(AgentError::UnexpectedMessage {
            performative: msg.performative(),
        });
    }
    if profile.free_channels < demand.nbc() {
        return Err(AgentError::Oversubscribed {
            pu: profile.id,
            free: profile.free_channels,
            requested: demand.nbc(),
        });
    }
    let updated = PuProfile {
        free_channels: profile.free_channels - demand.nbc(),
        ..*profile
    };
    let ack = AclMessage::new(
        ids.next_id(),
        msg.conversation_id(),
        profile.id,
        msg.sender(),
        Performative::AcceptProposal,
        MessageBody::Acceptance,
        now,
    )?;
    Ok((updated, ack))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONV: ConversationId = ConversationId(1);

    fn demand(n: u32) -> SuDemand {
        SuDemand::new(n).unwrap()
    }

    fn pus(n: u32) -> Vec<AgentId> {
        (1..=n).map(AgentId::Pu).collect()
    }

    fn request_to(pu: u32, nbc: u32) -> AclMessage {
        let mut ids = MessageIdCounter::new();
        AclMessage::new(
            ids.next_id(),
            CONV,
            AgentId::Su,
            AgentId::Pu(pu),
            Performative::Request,
            MessageBody::ChannelRequest { nbc },
            SimTime::ZERO,
        )
        .unwrap()
    }

    fn reply(pu: u32, body: MessageBody) -> AclMessage {
        AclMessage::new(
            crate::acl::MessageId(99),
            CONV,
            AgentId::Pu(pu),
            AgentId::Su,
            body.performative(),
            body,
            SimTime::ZERO,
        )
        .unwrap()
    }

    fn offers(pairs: &[(u32, Price)]) -> Vec<Offer> {
        pairs
            .iter()
            .map(|&(k, p)| Offer {
                pu: AgentId::Pu(k),
                unit_price: p,
            })
            .collect()
    }

    fn decided_with(nbc: u32, quotes: &[(u32, Price)], refused: &[u32]) -> SuState {
        let all: Vec<u32> = quotes
            .iter()
            .map(|q| q.0)
            .chain(refused.iter().copied())
            .collect();
        let ids: Vec<AgentId> = all.iter().map(|&k| AgentId::Pu(k)).collect();
        let (mut st, _) = su_init(
            demand(nbc),
            &ids,
            CONV,
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        for &(k, p) in quotes {
            st =
                su_handle_reply(&st, &reply(k, MessageBody::PriceQuote { unit_price: p })).unwrap();
        }
        for &k in refused {
            st = su_handle_reply(&st, &reply(k, MessageBody::Refusal { available: 0 })).unwrap();
        }
        st
    }

    #[test]
    fn init_broadcasts_one_request_per_pu() {
        let mut ids = MessageIdCounter::new();
        let (st, msgs) = su_init(demand(2), &pus(5), CONV, &mut ids, SimTime::ZERO).unwrap();
        assert_eq!(msgs.len(), 5);
        for (i, m) in msgs.iter().enumerate() {
            assert_eq!(m.receiver(), AgentId::Pu(i as u32 + 1));
            assert_eq!(m.performative(), Performative::Request);
            assert_eq!(*m.body(), MessageBody::ChannelRequest { nbc: 2 });
        }
        assert_eq!(st.phase, Phase::Collecting);
        assert_eq!(st.expected_replies.len(), 5);
    }

    #[test]
    fn init_single_pu() {
        let (_, msgs) = su_init(
            demand(1),
            &pus(1),
            CONV,
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].receiver(), AgentId::Pu(1));
    }

    #[test]
    fn init_rejects_empty_and_bad_sets() {
        let mut ids = MessageIdCounter::new();
        assert_eq!(
            su_init(demand(3), &[], CONV, &mut ids, SimTime::ZERO).unwrap_err(),
            AgentError::EmptyPuSet
        );
        assert!(matches!(
            su_init(
                demand(3),
                &[AgentId::Pu(1), AgentId::Pu(1)],
                CONV,
                &mut ids,
                SimTime::ZERO
            ),
            Err(AgentError::InvalidPu(_))
        ));
        assert!(matches!(
            su_init(demand(3), &[AgentId::Su], CONV, &mut ids, SimTime::ZERO),
            Err(AgentError::InvalidPu(_))
        ));
    }

    #[test]
    fn zero_demand_is_unrepresentable() {
        assert!(SuDemand::new(0).is_none());
    }

    #[test]
    fn pu_quotes_when_it_has_enough_channels() {
        let pu2 = PuProfile::new(2, 2, 230);
        let out = pu_handle_request(
            &pu2,
            &request_to(2, 1),
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(out.performative(), Performative::Inform);
        assert_eq!(*out.body(), MessageBody::PriceQuote { unit_price: 230 });
        assert_eq!(out.receiver(), AgentId::Su);
    }

    #[test]
    fn pu_refuses_when_short() {
        let pu1 = PuProfile::new(1, 1, 270);
        let out = pu_handle_request(
            &pu1,
            &request_to(1, 3),
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(out.performative(), Performative::Refuse);
        assert_eq!(*out.body(), MessageBody::Refusal { available: 1 });
    }

    #[test]
    fn pu_boundary_equal_counts_is_feasible() {
        let pu3 = PuProfile::new(3, 3, 320);
        let out = pu_handle_request(
            &pu3,
            &request_to(3, 3),
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(*out.body(), MessageBody::PriceQuote { unit_price: 320 });
    }

    #[test]
    fn pu_rejects_misaddressed_request() {
        let pu3 = PuProfile::new(3, 3, 320);
        assert!(matches!(
            pu_handle_request(
                &pu3,
                &request_to(2, 1),
                &mut MessageIdCounter::new(),
                SimTime::ZERO
            ),
            Err(AgentError::NotAddressee { .. })
        ));
    }

    #[test]
    fn reply_bookkeeping() {
        let (st, _) = su_init(
            demand(1),
            &pus(5),
            CONV,
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        let st =
            su_handle_reply(&st, &reply(1, MessageBody::PriceQuote { unit_price: 270 })).unwrap();
        assert_eq!(st.expected_replies.len(), 4);
        let st =
            su_handle_reply(&st, &reply(2, MessageBody::PriceQuote { unit_price: 230 })).unwrap();
        assert_eq!(st.expected_replies.len(), 3);
        assert_eq!(
            st.offers.last(),
            Some(&Offer {
                pu: AgentId::Pu(2),
                unit_price: 230
            })
        );
        assert_eq!(st.phase, Phase::Collecting);
    }

    #[test]
    fn last_reply_completes_collection() {
        let st = decided_with(3, &[(3, 320), (4, 250)], &[1, 2, 5]);
        assert_eq!(st.phase, Phase::Decided);
        assert!(st.expected_replies.is_empty());
    }

    #[test]
    fn duplicate_and_unknown_replies() {
        let st = decided_with(1, &[(1, 270), (2, 230)], &[]);
        assert_eq!(
            su_handle_reply(&st, &reply(2, MessageBody::PriceQuote { unit_price: 230 }))
                .unwrap_err(),
            AgentError::DuplicateReply(AgentId::Pu(2))
        );
        assert_eq!(
            su_handle_reply(&st, &reply(7, MessageBody::PriceQuote { unit_price: 10 }))
                .unwrap_err(),
            AgentError::UnknownPu(AgentId::Pu(7))
        );
    }

    #[test]
    fn best_offer_examples() {
        let first = offers(&[(1, 270), (2, 230), (3, 320), (4, 250), (5, 340)]);
        assert_eq!(select_best_offer(&first).unwrap().pu, AgentId::Pu(2));
        let second = offers(&[(3, 320), (4, 250), (5, 340)]);
        assert_eq!(
            select_best_offer(&second),
            Some(Offer {
                pu: AgentId::Pu(4),
                unit_price: 250
            })
        );
        assert_eq!(select_best_offer(&[]), None);
        // tie goes to the lower index regardless of arrival order
        let tie = offers(&[(3, 100), (1, 100)]);
        assert_eq!(select_best_offer(&tie).unwrap().pu, AgentId::Pu(1));
    }

    #[test]
    fn decide_unit_price_first_dataset() {
        let st = decided_with(1, &[(1, 270), (2, 230), (3, 320), (4, 250), (5, 340)], &[]);
        let (dec, msgs) = su_decide(
            &st,
            PaymentMode::UnitPrice,
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(
            dec,
            Decision::Award {
                winner: AgentId::Pu(2),
                unit_price: 230,
                amount: 230
            }
        );
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].receiver(), AgentId::Pu(2));
        assert_eq!(*msgs[0].body(), MessageBody::Confirmation { amount: 230 });
    }

    #[test]
    fn decide_total_price_second_dataset() {
        let st = decided_with(3, &[(3, 320), (4, 250), (5, 340)], &[1, 2]);
        let (dec, _) = su_decide(
            &st,
            PaymentMode::TotalPrice,
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        // 250 * 3
        assert_eq!(
            dec,
            Decision::Award {
                winner: AgentId::Pu(4),
                unit_price: 250,
                amount: 750
            }
        );
    }

    #[test]
    fn decide_no_offers_sends_nothing() {
        let st = decided_with(5, &[], &[1, 2, 3, 4, 5]);
        let (dec, msgs) = su_decide(
            &st,
            PaymentMode::UnitPrice,
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(dec, Decision::NoDeal);
        assert!(msgs.is_empty());
    }

    #[test]
    fn decide_before_all_replies_is_not_ready() {
        let (st, _) = su_init(
            demand(1),
            &pus(2),
            CONV,
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(
            su_decide(
                &st,
                PaymentMode::UnitPrice,
                &mut MessageIdCounter::new(),
                SimTime::ZERO
            )
            .unwrap_err(),
            AgentError::NotReady
        );
    }

    fn confirm_to(pu: u32, amount: Price) -> AclMessage {
        AclMessage::new(
            crate::acl::MessageId(7),
            CONV,
            AgentId::Su,
            AgentId::Pu(pu),
            Performative::Confirm,
            MessageBody::Confirmation { amount },
            SimTime::ZERO,
        )
        .unwrap()
    }

    #[test]
    fn confirm_decrements_channels() {
        let pu2 = PuProfile::new(2, 2, 230);
        let (after, ack) = pu_handle_confirm(
            &pu2,
            demand(1),
            &confirm_to(2, 230),
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(after.free_channels, 1);
        assert_eq!(after.unit_price, 230);
        assert_eq!(ack.performative(), Performative::AcceptProposal);
        assert_eq!(ack.receiver(), AgentId::Su);

        let pu4 = PuProfile::new(4, 4, 250);
        let (after, _) = pu_handle_confirm(
            &pu4,
            demand(4),
            &confirm_to(4, 250),
            &mut MessageIdCounter::new(),
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(after.free_channels, 0);
    }

    #[test]
    fn confirm_oversubscribed() {
        let pu1 = PuProfile::new(1, 1, 270);
        assert!(matches!(
            pu_handle_confirm(
                &pu1,
                demand(3),
                &confirm_to(1, 270),
                &mut MessageIdCounter::new(),
                SimTime::ZERO
            ),
            Err(AgentError::Oversubscribed {
                free: 1,
                requested: 3,
                ..
            })
        ));
    }

    #[test]
    fn operations_are_pure() {
        let pu = PuProfile::new(2, 2, 230);
        let req = request_to(2, 1);
        let ids = MessageIdCounter::new();
        let a = pu_handle_request(&pu, &req, &mut ids.clone(), SimTime::ZERO).unwrap();
        let b = pu_handle_request(&pu, &req, &mut ids.clone(), SimTime::ZERO).unwrap();
        assert_eq!(a, b);
    }
}
