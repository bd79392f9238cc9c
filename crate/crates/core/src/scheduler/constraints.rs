//! Schedule constraint checker with witnesses.

use std::fmt;

use serde::Serialize;

use super::{Schedule, SchedulerConfig};
use crate::ids::{ChannelId, SlotId, UserId};
use crate::scenario::Geometry;

/// The constraint families of the joint scheduling problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Constraint {
    /// No two transmitters of a slot within range of each other.
    HalfDuplex,
    /// At most `K_max` sub-channels per transmitter per slot.
    ChannelsPerTx,
    /// Every vehicle transmits in `1..=T_max` slots.
    TxSlots,
    /// Each receiver hears at most `K_u` co-channel transmitters.
    Overlap,
    /// Known users, sub-channel ids in range, no duplicates.
    Structure,
}

impl Constraint {
    pub const ALL: [Constraint; 5] = [
        Constraint::HalfDuplex,
        Constraint::ChannelsPerTx,
        Constraint::TxSlots,
        Constraint::Overlap,
        Constraint::Structure,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Constraint::HalfDuplex => "half-duplex",
            Constraint::ChannelsPerTx => "channels-per-tx",
            Constraint::TxSlots => "tx-slots",
            Constraint::Overlap => "overlap",
            Constraint::Structure => "structure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    InRangePair {
        slot: SlotId,
        a: UserId,
        b: UserId,
        distance_m: f64,
    },
    TooManyChannels {
        slot: SlotId,
        user: UserId,
        channels: usize,
        limit: usize,
    },
    SlotCount {
        user: UserId,
        slots: usize,
        limit: usize,
    },
    Overheard {
        slot: SlotId,
        channel: ChannelId,
        receiver: UserId,
        transmitters: Vec<UserId>,
        limit: usize,
    },
    UnknownUser {
        slot: SlotId,
        user: UserId,
    },
    BadChannel {
        slot: SlotId,
        user: UserId,
        channel: ChannelId,
    },
    EmptyChannelSet {
        slot: SlotId,
        user: UserId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintViolation {
    pub constraint: Constraint,
    pub witness: Witness,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] ", self.constraint.label())?;
        match &self.witness {
            Witness::InRangePair {
                slot,
                a,
                b,
                distance_m,
            } => write!(
                f,
                "slot {slot}: transmitters {a} and {b} are {distance_m:.1} m apart"
            ),
            Witness::TooManyChannels {
                slot,
                user,
                channels,
                limit,
            } => write!(
                f,
                "slot {slot}: user {user} holds {channels} sub-channels (limit {limit})"
            ),
            Witness::SlotCount { user, slots, limit } => write!(
                f,
                "vehicle {user} transmits in {slots} slots (allowed 1..={limit})"
            ),
            Witness::Overheard {
                slot,
                channel,
                receiver,
                transmitters,
                limit,
            } => write!(
                f,
                "slot {slot}, sub-channel {channel}: receiver {receiver} hears {} \
                 transmitters (limit {limit})",
                transmitters.len()
            ),
            Witness::UnknownUser { slot, user } => {
                write!(f, "slot {slot}: unknown user {user}")
            }
            Witness::BadChannel {
                slot,
                user,
                channel,
            } => write!(f, "slot {slot}: user {user} uses invalid sub-channel {channel}"),
            Witness::EmptyChannelSet { slot, user } => {
                write!(f, "slot {slot}: transmitter {user} holds no sub-channel")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub violations: Vec<ConstraintViolation>,
}

impl ConstraintReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, constraint: Constraint) -> usize {
        self.violations
            .iter()
            .filter(|v| v.constraint == constraint)
            .count()
    }
}

/// Limits a schedule is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub channels: usize,
    pub max_channels_per_tx: usize,
    pub max_tx_slots: usize,
    pub max_overlap: usize,
}

impl Limits {
    /// Limits of the NOMA schemes.
    pub fn noma(config: &SchedulerConfig) -> Self {
        Limits {
            channels: config.channels,
            max_channels_per_tx: config.max_channels_per_tx,
            max_tx_slots: config.max_tx_slots,
            max_overlap: config.max_overlap,
        }
    }

    /// Limits of the orthogonal baseline: one sub-channel per transmitter.
    pub fn oma(config: &SchedulerConfig) -> Self {
        Limits {
            channels: config.oma_channels,
            max_channels_per_tx: 1,
            max_tx_slots: config.max_tx_slots,
            max_overlap: config.max_overlap,
        }
    }
}

/// Checks every constraint of `schedule`. Slot counts apply to `vehicles`
/// only; pedestrians never transmit.
pub fn check_schedule(
    geometry: &Geometry,
    schedule: &Schedule,
    vehicles: &[UserId],
    limits: &Limits,
) -> ConstraintReport {
    let mut out = Vec::new();
    let mut push = |constraint, witness| out.push(ConstraintViolation { constraint, witness });
    let n = geometry.users();
    let slots = schedule.slots().min(geometry.slots());
    for s in 0..schedule.slots() {
        let slot = SlotId::from_index(s);
        let map = schedule.assignments(slot);
        for (&user, chs) in map {
            if user.0 >= n || s >= geometry.slots() {
                push(Constraint::Structure, Witness::UnknownUser { slot, user });
                continue;
            }
            if chs.is_empty() {
                push(Constraint::Structure, Witness::EmptyChannelSet { slot, user });
            }
            for &c in chs {
                if c.index() >= limits.channels {
                    push(
                        Constraint::Structure,
                        Witness::BadChannel {
                            slot,
                            user,
                            channel: c,
                        },
                    );
                }
            }
            if chs.len() > limits.max_channels_per_tx {
                push(
                    Constraint::ChannelsPerTx,
                    Witness::TooManyChannels {
                        slot,
                        user,
                        channels: chs.len(),
                        limit: limits.max_channels_per_tx,
                    },
                );
            }
        }
    }
    for s in 0..slots {
        let slot = SlotId::from_index(s);
        let txs: Vec<UserId> = schedule.transmitters(slot).filter(|u| u.0 < n).collect();
        for (i, &a) in txs.iter().enumerate() {
            for &b in &txs[i + 1..] {
                if geometry.in_range(a, b, slot) {
                    push(
                        Constraint::HalfDuplex,
                        Witness::InRangePair {
                            slot,
                            a,
                            b,
                            distance_m: geometry.distance(a, b, slot),
                        },
                    );
                }
            }
        }
        for k in 0..limits.channels {
            let channel = ChannelId::from_index(k);
            let on: Vec<UserId> = schedule
                .on_channel(slot, channel)
                .into_iter()
                .filter(|u| u.0 < n)
                .collect();
            if on.len() <= limits.max_overlap {
                continue;
            }
            for rx in 0..n {
                let receiver = UserId(rx);
                if on.contains(&receiver) {
                    continue;
                }
                let heard: Vec<UserId> = on
                    .iter()
                    .copied()
                    .filter(|&tx| geometry.in_range(tx, receiver, slot))
                    .collect();
                if heard.len() > limits.max_overlap {
                    push(
                        Constraint::Overlap,
                        Witness::Overheard {
                            slot,
                            channel,
                            receiver,
                            transmitters: heard,
                            limit: limits.max_overlap,
                        },
                    );
                }
            }
        }
    }
    for &user in vehicles {
        let held = schedule.tx_slots(user).len();
        if held == 0 || held > limits.max_tx_slots {
            push(
                Constraint::TxSlots,
                Witness::SlotCount {
                    user,
                    slots: held,
                    limit: limits.max_tx_slots,
                },
            );
        }
    }
    ConstraintReport { violations: out }
}
