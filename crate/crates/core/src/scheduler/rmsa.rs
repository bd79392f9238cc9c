//! Sub-channel allocation within one slot.
//!
//! Every transmitter owns `K_max` seats, each holding at most one
//! sub-channel; seats of the same transmitter may not share a sub-channel.
//! Rotations run over the seats plus one dummy per sub-channel (a seat picks
//! up a fresh sub-channel) and an empty sentinel (a seat gives its
//! sub-channel up), at most one dummy per rotation. The objective is the sum
//! of decode probabilities over every in-range receiver of every
//! transmission, with full power and path-loss-only gains.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use super::{SchedulerConfig, SchedulerError};
use crate::channel::{CoChannelTx, CsiView, LinkModel, SicReception};
use crate::ids::{ChannelId, SlotId, UserId};
use crate::matching::{
    local_search, Matching, Member, Objective, PlayerId, ResourceId, RotationRecord, RotationSpace,
    Scope, Sense,
};

/// Link parameters the channel objective needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Transmit power in watts.
    pub power: f64,
    pub rate_threshold: f64,
    pub logistic_slope: f64,
}

/// Seat matching of the transmitters of one slot.
pub fn seat_matching(transmitters: usize, seats_per_tx: usize, channels: usize) -> Matching {
    let mut m = Matching::new(transmitters * seats_per_tx, channels);
    for p in 0..transmitters * seats_per_tx {
        m.set_player_capacity(PlayerId(p), 1).expect("seat in range");
    }
    for t in 0..transmitters {
        for a in 0..seats_per_tx {
            for b in (a + 1)..seats_per_tx {
                for k in 0..channels {
                    m.forbid(
                        PlayerId(t * seats_per_tx + a),
                        PlayerId(t * seats_per_tx + b),
                        ResourceId(k),
                    )
                    .expect("ids in range");
                }
            }
        }
    }
    m
}

/// Seats, one dummy per sub-channel and the empty sentinel.
pub fn channel_space(seats: usize, channels: usize, q_max: usize) -> RotationSpace {
    let mut members: Vec<Member> = (0..seats).map(|p| Member::Player(PlayerId(p))).collect();
    members.extend((0..channels).map(|k| Member::Dummy(Some(ResourceId(k)))));
    members.push(Member::Dummy(None));
    RotationSpace::new(members, q_max, 1)
}

/// Sum of decode probabilities on the sub-channels a rotation touches.
pub struct ChannelObjective<'a> {
    link: &'a LinkModel<'a>,
    slot: SlotId,
    transmitters: &'a [UserId],
    seats_per_tx: usize,
    params: LinkParams,
    max_overlap: usize,
}

impl<'a> ChannelObjective<'a> {
    pub fn new(
        link: &'a LinkModel<'a>,
        slot: SlotId,
        transmitters: &'a [UserId],
        seats_per_tx: usize,
        params: LinkParams,
        max_overlap: usize,
    ) -> Self {
        ChannelObjective {
            link,
            slot,
            transmitters,
            seats_per_tx,
            params,
            max_overlap,
        }
    }

    fn owner(&self, seat: PlayerId) -> usize {
        seat.0 / self.seats_per_tx
    }

    fn on_channel(&self, matching: &Matching, k: ResourceId) -> Vec<UserId> {
        let mut txs: Vec<UserId> = matching
            .players_on(k)
            .iter()
            .map(|&p| self.transmitters[self.owner(p)])
            .collect();
        txs.sort_unstable();
        txs.dedup();
        txs
    }

    /// Each receiver in range of a transmitter on `k`, with the transmitters
    /// it hears.
    fn receivers(&self, txs: &[UserId]) -> BTreeMap<UserId, Vec<UserId>> {
        let geometry = self.link.geometry();
        let mut out: BTreeMap<UserId, Vec<UserId>> = BTreeMap::new();
        for &tx in txs {
            for &rx in geometry.neighbors(tx, self.slot) {
                if !txs.contains(&rx) {
                    out.entry(rx).or_default().push(tx);
                }
            }
        }
        out
    }

    /// Utility of sub-channel `k` given its transmitters.
    pub fn channel_utility(&self, k: ChannelId, txs: &[UserId]) -> f64 {
        let mut total = 0.0;
        for (rx, heard) in self.receivers(txs) {
            let co: Vec<CoChannelTx> = heard
                .iter()
                .map(|&tx| CoChannelTx {
                    user: tx,
                    power: self.params.power,
                    snr: self.link.snr(CsiView::Partial, tx, rx, k, self.slot),
                })
                .collect();
            let reception = SicReception::new(&co, self.params.rate_threshold)
                .expect("powers are finite and nonnegative");
            total += heard
                .iter()
                .map(|&tx| reception.decode_probability(tx, self.params.logistic_slope))
                .sum::<f64>();
        }
        total
    }

    fn overlap_ok(&self, txs: &[UserId]) -> bool {
        self.receivers(txs)
            .values()
            .all(|heard| heard.len() <= self.max_overlap)
    }
}

impl Objective for ChannelObjective<'_> {
    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn evaluate(&self, matching: &Matching, scope: &Scope) -> f64 {
        scope
            .resources
            .iter()
            .map(|&k| self.channel_utility(ChannelId::from_index(k.0), &self.on_channel(matching, k)))
            .sum()
    }

    fn admissible(&self, matching: &Matching, scope: &Scope) -> bool {
        let served = scope.players.iter().all(|&seat| {
            let t = self.owner(seat);
            (0..self.seats_per_tx)
                .any(|j| !matching.resources_of(PlayerId(t * self.seats_per_tx + j)).is_empty())
        });
        served
            && scope
                .resources
                .iter()
                .all(|&k| self.overlap_ok(&self.on_channel(matching, k)))
    }
}

/// Random initial seat matching: each transmitter draws a size in
/// `1..=K_max` and that many distinct sub-channels. Redrawn until every
/// receiver hears at most `K_u` co-channel transmitters.
pub fn initial_channels<R: Rng + ?Sized>(
    objective: &ChannelObjective<'_>,
    channels: usize,
    config: &SchedulerConfig,
    rng: &mut R,
) -> Result<Matching, SchedulerError> {
    let n = objective.transmitters.len();
    let seats = objective.seats_per_tx;
    let top = seats.min(channels);
    for _ in 0..config.initial_draw_retries.max(1) {
        let mut m = seat_matching(n, seats, channels);
        for t in 0..n {
            let size = rng.random_range(1..=top);
            for (j, k) in sample(rng, channels, size).into_iter().enumerate() {
                m.assign(PlayerId(t * seats + j), ResourceId(k))?;
            }
        }
        if (0..channels).all(|k| objective.overlap_ok(&objective.on_channel(&m, ResourceId(k)))) {
            return Ok(m);
        }
    }
    Err(SchedulerError::InitialDraw {
        slot: objective.slot,
        retries: config.initial_draw_retries,
        max_overlap: config.max_overlap,
    })
}

/// Sub-channels per transmitter read off a seat matching.
pub fn channels_by_tx(
    matching: &Matching,
    transmitters: &[UserId],
    seats_per_tx: usize,
) -> BTreeMap<UserId, Vec<ChannelId>> {
    transmitters
        .iter()
        .enumerate()
        .map(|(t, &tx)| {
            let mut chs: Vec<ChannelId> = (0..seats_per_tx)
                .flat_map(|j| matching.resources_of(PlayerId(t * seats_per_tx + j)).to_vec())
                .map(|r| ChannelId::from_index(r.0))
                .collect();
            chs.sort_unstable();
            chs.dedup();
            (tx, chs)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RmsaOutcome {
    /// Final seat matching.
    pub matching: Matching,
    pub channels: BTreeMap<UserId, Vec<ChannelId>>,
    pub rotations: Vec<RotationRecord>,
    pub utility: f64,
}

/// Allocates sub-channels to `transmitters` (the slot's transmitters,
/// sorted) in `slot`.
pub fn rmsa<R: Rng + ?Sized>(
    link: &LinkModel<'_>,
    slot: SlotId,
    transmitters: &[UserId],
    params: LinkParams,
    config: &SchedulerConfig,
    rng: &mut R,
) -> Result<RmsaOutcome, SchedulerError> {
    if transmitters.is_empty() {
        return Ok(RmsaOutcome {
            matching: seat_matching(0, config.max_channels_per_tx, config.channels),
            channels: BTreeMap::new(),
            rotations: Vec::new(),
            utility: 0.0,
        });
    }
    let seats = config.max_channels_per_tx;
    let objective =
        ChannelObjective::new(link, slot, transmitters, seats, params, config.max_overlap);
    let mut matching = initial_channels(&objective, config.channels, config, rng)?;
    let space = channel_space(transmitters.len() * seats, config.channels, config.q_max);
    let search = super::utsa::search_config(config, space.members().len());
    let rotations = local_search(&mut matching, &space, &objective, &search, rng)?;
    Ok(RmsaOutcome {
        channels: channels_by_tx(&matching, transmitters, seats),
        utility: objective.total(&matching),
        rotations,
        matching,
    })
}
