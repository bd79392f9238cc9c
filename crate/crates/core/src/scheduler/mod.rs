//! Centralized scheduling: who transmits in which slot, on which sub-channels.

pub mod baselines;
pub mod constraints;
pub mod feasibility;
pub mod influence;
pub mod rmsa;
pub mod utsa;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::Rng;

use crate::channel::{ChannelError, LinkModel};
use crate::ids::{ChannelId, SlotId, UserId};
use crate::matching::{MatchingError, ResourceId};
use influence::CrossInfluence;
use rmsa::{rmsa, LinkParams};
use utsa::utsa;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("invalid scheduler config: {0}")]
    InvalidConfig(String),
    #[error(
        "user {user} has a forbidden partner in every one of the {slots} slots \
         (feasibility bound {bound})"
    )]
    Infeasible {
        user: UserId,
        bound: usize,
        slots: usize,
    },
    #[error(
        "slot {slot}: no random channel assignment in {retries} draws keeps every \
         receiver under K_u = {max_overlap}"
    )]
    InitialDraw {
        slot: SlotId,
        retries: usize,
        max_overlap: usize,
    },
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    /// Sub-channels available to the NOMA schemes (`K`).
    pub channels: usize,
    /// Sub-channels per transmitter per slot (`K_max`).
    pub max_channels_per_tx: usize,
    /// Transmission slots per user per period (`T_max`).
    pub max_tx_slots: usize,
    /// In-range co-channel transmitters a receiver may hear (`K_u`).
    pub max_overlap: usize,
    /// Longest rotation considered.
    pub q_max: usize,
    /// Cross influence of non-overlapping disks; in (-0.1, 0).
    pub epsilon: f64,
    /// Random subset draws before each deterministic sweep; 0 means one per
    /// rotation member.
    pub random_draws_per_round: usize,
    pub max_rounds: usize,
    /// Redraws allowed for the random initial channel assignment.
    pub initial_draw_retries: usize,
    /// Sub-channels of the orthogonal baseline.
    pub oma_channels: usize,
    /// Rejects rotations that co-match forbidden pairs. Turning it off is a
    /// fault-injection hook.
    pub check_validity: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            channels: 5,
            max_channels_per_tx: 2,
            max_tx_slots: 1,
            max_overlap: 3,
            q_max: 4,
            epsilon: -0.05,
            random_draws_per_round: 0,
            max_rounds: 10_000,
            initial_draw_retries: 1000,
            oma_channels: 10,
            check_validity: true,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self, slots: usize) -> Result<(), SchedulerError> {
        let bad = |m: String| Err(SchedulerError::InvalidConfig(m));
        if self.channels == 0 || self.oma_channels == 0 {
            return bad("channel counts must be at least 1".into());
        }
        if self.max_channels_per_tx == 0 || self.max_channels_per_tx > self.channels {
            return bad(format!(
                "max_channels_per_tx must lie in 1..={}, got {}",
                self.channels, self.max_channels_per_tx
            ));
        }
        if self.max_tx_slots == 0 || self.max_tx_slots > slots {
            return bad(format!(
                "max_tx_slots must lie in 1..={slots}, got {}",
                self.max_tx_slots
            ));
        }
        if self.max_overlap == 0 {
            return bad("max_overlap must be at least 1".into());
        }
        if self.q_max < 2 {
            return bad("q_max must be at least 2".into());
        }
        if !(self.epsilon > -0.1 && self.epsilon < 0.0) {
            return bad(format!("epsilon must lie in (-0.1, 0), got {}", self.epsilon));
        }
        Ok(())
    }
}

/// Transmitter role of every user in every slot, with sub-channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    channels: usize,
    per_slot: Vec<BTreeMap<UserId, Vec<ChannelId>>>,
}

impl Schedule {
    pub fn new(slots: usize, channels: usize) -> Self {
        Schedule {
            channels,
            per_slot: vec![BTreeMap::new(); slots],
        }
    }

    pub fn slots(&self) -> usize {
        self.per_slot.len()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn slot_ids(&self) -> impl Iterator<Item = SlotId> {
        (0..self.per_slot.len()).map(SlotId::from_index)
    }

    /// Makes `user` a transmitter in `slot`, with the given sub-channels
    /// (sorted and deduplicated).
    pub fn set_channels(&mut self, slot: SlotId, user: UserId, mut channels: Vec<ChannelId>) {
        channels.sort_unstable();
        channels.dedup();
        self.per_slot[slot.index()].insert(user, channels);
    }

    pub fn remove_transmitter(&mut self, slot: SlotId, user: UserId) {
        self.per_slot[slot.index()].remove(&user);
    }

    pub fn transmitters(&self, slot: SlotId) -> impl Iterator<Item = UserId> + '_ {
        self.per_slot[slot.index()].keys().copied()
    }

    pub fn assignments(&self, slot: SlotId) -> &BTreeMap<UserId, Vec<ChannelId>> {
        &self.per_slot[slot.index()]
    }

    pub fn is_transmitter(&self, slot: SlotId, user: UserId) -> bool {
        self.per_slot[slot.index()].contains_key(&user)
    }

    pub fn channels_of(&self, slot: SlotId, user: UserId) -> &[ChannelId] {
        self.per_slot[slot.index()]
            .get(&user)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn on_channel(&self, slot: SlotId, channel: ChannelId) -> Vec<UserId> {
        self.per_slot[slot.index()]
            .iter()
            .filter(|(_, chs)| chs.contains(&channel))
            .map(|(&u, _)| u)
            .collect()
    }

    pub fn tx_slots(&self, user: UserId) -> Vec<SlotId> {
        self.slot_ids()
            .filter(|&s| self.is_transmitter(s, user))
            .collect()
    }

    /// Scheduled `(slot, tx, channel)` transmissions.
    pub fn transmissions(&self) -> impl Iterator<Item = (SlotId, UserId, ChannelId)> + '_ {
        self.per_slot.iter().enumerate().flat_map(|(s, map)| {
            map.iter().flat_map(move |(&u, chs)| {
                chs.iter().map(move |&c| (SlotId::from_index(s), u, c))
            })
        })
    }
}

/// Output of one scheduling scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    pub schedule: Schedule,
    /// Rotations executed by the time-slot matching.
    pub time_rotations: Vec<crate::matching::RotationRecord>,
    /// Rotations executed by the sub-channel matching, per slot.
    pub channel_rotations: Vec<Vec<crate::matching::RotationRecord>>,
    /// Transmitters left without a sub-channel, with the slot they were
    /// assigned; their receivers count as failed deliveries.
    pub silenced: Vec<(SlotId, UserId)>,
}

/// Slot matching followed by per-slot sub-channel matching.
pub fn noma_schedule<R: Rng + ?Sized>(
    link: &LinkModel<'_>,
    influence: &CrossInfluence,
    vehicles: &[UserId],
    params: LinkParams,
    config: &SchedulerConfig,
    rng: &mut R,
) -> Result<ScheduleOutcome, SchedulerError> {
    let geometry = link.geometry();
    config.validate(geometry.slots())?;
    let time = utsa(geometry, influence, vehicles, config, rng)?;
    let mut schedule = Schedule::new(geometry.slots(), config.channels);
    let mut channel_rotations = Vec::with_capacity(geometry.slots());
    for s in 0..geometry.slots() {
        let slot = SlotId::from_index(s);
        let txs: Vec<UserId> = time
            .matching
            .players_on(ResourceId(s))
            .iter()
            .map(|p| UserId(p.0))
            .collect();
        let out = rmsa(link, slot, &txs, params, config, rng)?;
        for (tx, chs) in out.channels {
            schedule.set_channels(slot, tx, chs);
        }
        channel_rotations.push(out.rotations);
    }
    Ok(ScheduleOutcome {
        schedule,
        time_rotations: time.rotations,
        channel_rotations,
        silenced: Vec::new(),
    })
}
