//! Message vocabulary for the negotiation protocol.
//!
//! Five performatives are used. Each one is tied to exactly one body variant
//! and one direction of travel:
//!
//! | performative      | body            | direction |
//! |-------------------|-----------------|-----------|
//! | `REQUEST`         | `ChannelRequest`| SU → PU   |
//! | `INFORM`          | `PriceQuote`    | PU → SU   |
//! | `REFUSE`          | `Refusal`       | PU → SU   |
//! | `CONFIRM`         | `Confirmation`  | SU → PU   |
//! | `ACCEPT_PROPOSAL` | `Acceptance`    | PU → SU   |
//!
//! [`AclMessage::new`] refuses any combination outside this table, so a
//! constructed message is always well-formed.

use std::fmt;

use thiserror::Error;

use crate::time::SimTime;

/// Number of channels requested or held.
pub type ChannelCount = u32;

/// Monetary amount in whole currency units.
pub type Price = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Performative {
    Request,
    Inform,
    Refuse,
    Confirm,
    AcceptProposal,
}

impl Performative {
    pub const ALL: [Performative; 5] = [
        Performative::Request,
        Performative::Inform,
        Performative::Refuse,
        Performative::Confirm,
        Performative::AcceptProposal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Performative::Request => "REQUEST",
            Performative::Inform => "INFORM",
            Performative::Refuse => "REFUSE",
            Performative::Confirm => "CONFIRM",
            Performative::AcceptProposal => "ACCEPT_PROPOSAL",
        }
    }

    /// Whether this performative is sent by the secondary user.
    pub fn flows_from_su(self) -> bool {
        matches!(self, Performative::Request | Performative::Confirm)
    }
}

impl fmt::Display for Performative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identity of a negotiating agent. The SU is implicitly index 0; PU indices
/// start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentId {
    Su,
    Pu(u32),
}

impl AgentId {
    pub fn index(self) -> u32 {
        match self {
            AgentId::Su => 0,
            AgentId::Pu(k) => k,
        }
    }

    pub fn is_su(self) -> bool {
        matches!(self, AgentId::Su)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Su => f.write_str("SU"),
            AgentId::Pu(k) => write!(f, "PU{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageBody {
    ChannelRequest { nbc: ChannelCount },
    PriceQuote { unit_price: Price },
    Refusal { available: ChannelCount },
    Confirmation { amount: Price },
    Acceptance,
}

impl MessageBody {
    /// The only performative this body may travel under.
    pub fn performative(&self) -> Performative {
        match self {
            MessageBody::ChannelRequest { .. } => Performative::Request,
            MessageBody::PriceQuote { .. } => Performative::Inform,
            MessageBody::Refusal { .. } => Performative::Refuse,
            MessageBody::Confirmation { .. } => Performative::Confirm,
            MessageBody::Acceptance => Performative::AcceptProposal,
        }
    }

    /// Short `key=value` rendering used in sniffer traces.
    pub fn summary(&self) -> String {
        match self {
            MessageBody::ChannelRequest { nbc } => format!("nbc={nbc}"),
            MessageBody::PriceQuote { unit_price } => format!("price={unit_price}"),
            MessageBody::Refusal { available } => format!("available={available}"),
            MessageBody::Confirmation { amount } => format!("amount={amount}"),
            MessageBody::Acceptance => String::new(),
        }
    }

    fn check_values(&self) -> Result<(), ProtocolViolation> {
        match *self {
            MessageBody::ChannelRequest { nbc: 0 } => Err(ProtocolViolation::InvalidBody(
                "ChannelRequest.nbc must be >= 1",
            )),
            MessageBody::PriceQuote { unit_price: 0 } => Err(ProtocolViolation::InvalidBody(
                "PriceQuote.unit_price must be > 0",
            )),
            MessageBody::Confirmation { amount: 0 } => Err(ProtocolViolation::InvalidBody(
                "Confirmation.amount must be > 0",
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolViolation {
    #[error("body {body:?} cannot travel under performative {performative}")]
    BodyMismatch {
        performative: Performative,
        body: MessageBody,
    },
    #[error("{performative} cannot be sent from {sender} to {receiver}")]
    WrongDirection {
        performative: Performative,
        sender: AgentId,
        receiver: AgentId,
    },
    #[error("invalid message body: {0}")]
    InvalidBody(&'static str),
    #[error("invalid PU index 0")]
    InvalidAgent,
}

/// Checks a candidate message against the pairing and direction rules.
pub fn check_message(
    sender: AgentId,
    receiver: AgentId,
    performative: Performative,
    body: &MessageBody,
) -> Result<(), ProtocolViolation> {
    if body.performative() != performative {
        return Err(ProtocolViolation::BodyMismatch {
            performative,
            body: *body,
        });
    }
    if matches!(sender, AgentId::Pu(0)) || matches!(receiver, AgentId::Pu(0)) {
        return Err(ProtocolViolation::InvalidAgent);
    }
    let expected = if performative.flows_from_su() {
        sender.is_su() && !receiver.is_su()
    } else {
        !sender.is_su() && receiver.is_su()
    };
    if !expected {
        return Err(ProtocolViolation::WrongDirection {
            performative,
            sender,
            receiver,
        });
    }
    body.check_values()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MessageId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConversationId(pub u64);

impl fmt::Display for ConversationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One negotiation step between two agents. Fields are read-only; the only
/// way to build one is [`AclMessage::new`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AclMessage {
    msg_id: MessageId,
    conversation_id: ConversationId,
    sender: AgentId,
    receiver: AgentId,
    performative: Performative,
    body: MessageBody,
    send_time: SimTime,
}

impl AclMessage {
    pub fn new(
        msg_id: MessageId,
        conversation_id: ConversationId,
        sender: AgentId,
        receiver: AgentId,
        performative: Performative,
        body: MessageBody,
        send_time: SimTime,
    ) -> Result<Self, ProtocolViolation> {
        check_message(sender, receiver, performative, &body)?;
        Ok(Self {
            msg_id,
            conversation_id,
            sender,
            receiver,
            performative,
            body,
            send_time,
        })
    }

    pub fn msg_id(&self) -> MessageId {
        self.msg_id
    }

    pub fn conversation_id(&self) -> ConversationId {
        self.conversation_id
    }

    pub fn sender(&self) -> AgentId {
        self.sender
    }

    pub fn receiver(&self) -> AgentId {
        self.receiver
    }

    pub fn performative(&self) -> Performative {
        self.performative
    }

    pub fn body(&self) -> &MessageBody {
        &self.body
    }

    pub fn send_time(&self) -> SimTime {
        self.send_time
    }
}

/// Re-checks a message. Always `Ok` for values built through
/// [`AclMessage::new`].
pub fn validate_message(msg: &AclMessage) -> Result<(), ProtocolViolation> {
    check_message(msg.sender, msg.receiver, msg.performative, &msg.body)
}

/// Issues conversation ids starting at 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConversationCounter {
    last: u64,
}

impl ConversationCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_conversation_id(&mut self) -> ConversationId {
        self.last += 1;
        ConversationId(self.last)
    }
}

/// Issues message ids in creation order, starting at 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MessageIdCounter {
    last: u64,
}

impl MessageIdCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&mut self) -> MessageId {
        self.last += 1;
        MessageId(self.last)
    }

    pub fn issued(&self) -> u64 {
        self.last
    }
}
