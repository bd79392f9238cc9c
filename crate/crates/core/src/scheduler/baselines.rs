//! Baseline schedulers: greedy NOMA and orthogonal access.
//!
//! Both reuse the greedy slot assignment of the matching scheme without
//! rotations. The greedy NOMA baseline then lets each transmitter join the
//! already used sub-channel where it adds the least cross influence, opening
//! a fresh sub-channel only when none is admissible. The orthogonal baseline
//! colors each slot's conflict graph greedily, one sub-channel per
//! transmitter, highest degree first.

use super::influence::CrossInfluence;
use super::rmsa::LinkParams;
use super::utsa::utsa_phase1;
use super::{Schedule, ScheduleOutcome, SchedulerConfig, SchedulerError};
use crate::channel::{rates_interference_as_noise, CoChannelTx, CsiView, LinkModel};
use crate::ids::{ChannelId, SlotId, UserId};
use crate::matching::{PlayerId, ResourceId};
use crate::scenario::Geometry;

/// Transmitters per slot from the greedy slot assignment.
fn greedy_slots(
    geometry: &Geometry,
    influence: &CrossInfluence,
    vehicles: &[UserId],
    config: &SchedulerConfig,
) -> Result<Vec<Vec<UserId>>, SchedulerError> {
    let (matching, _) = utsa_phase1(geometry, influence, vehicles, config)?;
    Ok((0..geometry.slots())
        .map(|s| {
            matching
                .players_on(ResourceId(s))
                .iter()
                .map(|p: &PlayerId| UserId(p.0))
                .collect()
        })
        .collect())
}

/// True when adding `tx` to `on` keeps every receiver of `tx` at or under
/// `limit` in-range co-channel transmitters.
fn overlap_allows(
    geometry: &Geometry,
    slot: SlotId,
    tx: UserId,
    on: &[UserId],
    limit: usize,
) -> bool {
    geometry.neighbors(tx, slot).iter().all(|&rx| {
        on.contains(&rx)
            || on
                .iter()
                .filter(|&&other| geometry.in_range(other, rx, slot))
                .count()
                < limit
    })
}

pub fn noma_gga(
    geometry: &Geometry,
    influence: &CrossInfluence,
    vehicles: &[UserId],
    config: &SchedulerConfig,
) -> Result<ScheduleOutcome, SchedulerError> {
    let per_slot = greedy_slots(geometry, influence, vehicles, config)?;
    let mut schedule = Schedule::new(geometry.slots(), config.channels);
    for (s, txs) in per_slot.iter().enumerate() {
        let slot = SlotId::from_index(s);
        let mut on: Vec<Vec<UserId>> = vec![Vec::new(); config.channels];
        for &tx in txs {
            let mut held = Vec::new();
            for _ in 0..config.max_channels_per_tx {
                let mut best: Option<(f64, usize)> = None;
                for (k, peers) in on.iter().enumerate() {
                    if peers.is_empty()
                        || held.contains(&k)
                        || !overlap_allows(geometry, slot, tx, peers, config.max_overlap)
                    {
                        continue;
                    }
                    let q = influence.user(tx, slot, peers);
                    if best.is_none_or(|(b, _)| q < b) {
                        best = Some((q, k));
                    }
                }
                let pick = best
                    .map(|(_, k)| k)
                    .or_else(|| on.iter().position(Vec::is_empty));
                match pick {
                    Some(k) => {
                        on[k].push(tx);
                        held.push(k);
                    }
                    None => break,
                }
            }
            schedule.set_channels(
                slot,
                tx,
                held.into_iter().map(ChannelId::from_index).collect(),
            );
        }
    }
    Ok(ScheduleOutcome {
        schedule,
        time_rotations: Vec::new(),
        channel_rotations: vec![Vec::new(); geometry.slots()],
        silenced: Vec::new(),
    })
}

/// Conflict test of the orthogonal baseline: two transmitters conflict when
/// they are in range of each other, or when at some receiver hearing both
/// either one falls below the rate threshold with the other as noise.
struct ConflictGraph<'a> {
    link: &'a LinkModel<'a>,
    slot: SlotId,
    params: LinkParams,
    max_overlap: usize,
}

impl ConflictGraph<'_> {
    fn geometry(&self) -> &Geometry {
        self.link.geometry()
    }

    fn conflicts(&self, a: UserId, b: UserId) -> bool {
        let geometry = self.geometry();
        if geometry.in_range(a, b, self.slot) {
            return true;
        }
        let k = ChannelId::from_index(0);
        geometry.neighbors(a, self.slot).iter().any(|&rx| {
            if rx == b || !geometry.in_range(b, rx, self.slot) {
                return false;
            }
            let pair = [a, b].map(|tx| CoChannelTx {
                user: tx,
                power: self.params.power,
                snr: self.link.snr(CsiView::Partial, tx, rx, k, self.slot),
            });
            rates_interference_as_noise(&pair)
                .map(|rates| rates.iter().any(|&r| r < self.params.rate_threshold))
                .unwrap_or(true)
        })
    }

    /// Admissible color for `tx` that leaves the fewest of its receivers
    /// hearing another transmitter on it; ties go to the lowest color.
    fn color(&self, tx: UserId, colored: &[(UserId, usize)], colors: usize) -> Option<usize> {
        let geometry = self.geometry();
        let mut best: Option<(usize, usize)> = None;
        for c in 0..colors {
            let same: Vec<UserId> = colored
                .iter()
                .filter(|&&(_, oc)| oc == c)
                .map(|&(o, _)| o)
                .collect();
            if same.iter().any(|&o| self.conflicts(tx, o))
                || !overlap_allows(geometry, self.slot, tx, &same, self.max_overlap)
            {
                continue;
            }
            let conflicting = geometry
                .neighbors(tx, self.slot)
                .iter()
                .filter(|&&rx| same.iter().any(|&o| geometry.in_range(o, rx, self.slot)))
                .count();
            if best.is_none_or(|(b, _)| conflicting < b) {
                best = Some((conflicting, c));
            }
        }
        best.map(|(_, c)| c)
    }
}

/// Orthogonal baseline at full power. A transmitter left without a color
/// moves to the first slot where it has no in-range transmitter and an
/// admissible color; when there is none it stays silent.
pub fn oma(
    link: &LinkModel<'_>,
    influence: &CrossInfluence,
    vehicles: &[UserId],
    params: LinkParams,
    config: &SchedulerConfig,
) -> Result<ScheduleOutcome, SchedulerError> {
    let geometry = link.geometry();
    let per_slot = greedy_slots(geometry, influence, vehicles, config)?;
    let colors = config.oma_channels;
    let graph = |s: usize| ConflictGraph {
        link,
        slot: SlotId::from_index(s),
        params,
        max_overlap: config.max_overlap,
    };
    let mut colored: Vec<Vec<(UserId, usize)>> = vec![Vec::new(); geometry.slots()];
    let mut left = Vec::new();
    for (s, txs) in per_slot.iter().enumerate() {
        let g = graph(s);
        let degree = |tx: UserId| txs.iter().filter(|&&o| o != tx && g.conflicts(tx, o)).count();
        let mut order: Vec<(usize, UserId)> = txs.iter().map(|&tx| (degree(tx), tx)).collect();
        order.sort_by_key(|&(d, tx)| (std::cmp::Reverse(d), tx));
        for (_, tx) in order {
            match g.color(tx, &colored[s], colors) {
                Some(c) => colored[s].push((tx, c)),
                None => left.push((s, tx)),
            }
        }
    }
    let mut silenced = Vec::new();
    for (home, tx) in left {
        let target = (0..geometry.slots()).find_map(|s| {
            let slot = SlotId::from_index(s);
            let clear = colored[s]
                .iter()
                .all(|&(o, _)| !geometry.in_range(tx, o, slot));
            if !clear {
                return None;
            }
            graph(s).color(tx, &colored[s], colors).map(|c| (s, c))
        });
        match target {
            Some((s, c)) => colored[s].push((tx, c)),
            None => {
                log::debug!("orthogonal baseline silences transmitter {tx}");
                silenced.push((SlotId::from_index(home), tx));
            }
        }
    }
    let mut schedule = Schedule::new(geometry.slots(), colors);
    for (s, list) in colored.iter().enumerate() {
        for &(tx, c) in list {
            schedule.set_channels(SlotId::from_index(s), tx, vec![ChannelId::from_index(c)]);
        }
    }
    Ok(ScheduleOutcome {
        schedule,
        time_rotations: Vec::new(),
        channel_rotations: vec![Vec::new(); geometry.slots()],
        silenced,
    })
}
