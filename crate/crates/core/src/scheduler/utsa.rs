//! Transmitter selection and time-slot allocation.
//!
//! Phase 1 hands every vehicle one slot greedily: it joins the occupied slot
//! (without a forbidden partner) where it causes the least cross influence,
//! or opens the lowest empty slot when every occupied one is blocked.
//! Vehicles are visited in reverse peeling order of the conflict graph, the
//! order under which the degeneracy bound guarantees success.
//!
//! Phase 2 runs rotation local search over the vehicles plus one dummy per
//! slot (at most one dummy per rotation, so a vehicle can move into any
//! slot), minimizing the network cross influence of the slots involved.

use rand::Rng;

use super::feasibility::{assignment_order, feasibility_bound};
use super::influence::{CrossInfluence, TimeObjective};
use super::{SchedulerConfig, SchedulerError};
use crate::ids::{SlotId, UserId};
use crate::matching::{
    local_search, LocalSearchConfig, Matching, Member, PlayerId, ResourceId, RotationRecord,
    RotationSpace, SearchOptions,
};
use crate::scenario::Geometry;

/// Users as players, slots as resources, in-range pairs forbidden per slot.
pub fn time_matching(geometry: &Geometry, max_tx_slots: usize) -> Matching {
    let n = geometry.users();
    let mut m = Matching::new(n, geometry.slots());
    for p in 0..n {
        m.set_player_capacity(PlayerId(p), max_tx_slots)
            .expect("player in range");
    }
    for s in 0..geometry.slots() {
        let slot = SlotId::from_index(s);
        for a in 0..n {
            for &b in geometry.neighbors(UserId(a), slot) {
                m.forbid(PlayerId(a), PlayerId(b.0), ResourceId(s))
                    .expect("ids in range");
            }
        }
    }
    m
}

/// One greedy assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase1Step {
    pub user: UserId,
    pub slot: SlotId,
    /// Cross influence caused on joining an occupied slot; `None` when the
    /// user opened an empty one.
    pub influence: Option<f64>,
}

pub fn utsa_phase1(
    geometry: &Geometry,
    influence: &CrossInfluence,
    vehicles: &[UserId],
    config: &SchedulerConfig,
) -> Result<(Matching, Vec<Phase1Step>), SchedulerError> {
    let mut matching = time_matching(geometry, config.max_tx_slots);
    let mut steps = Vec::with_capacity(vehicles.len());
    for user in assignment_order(geometry, vehicles) {
        let mut best: Option<(f64, usize)> = None;
        let mut empty: Option<usize> = None;
        for s in 0..geometry.slots() {
            let occupants = matching.players_on(ResourceId(s));
            if occupants.is_empty() {
                empty = empty.or(Some(s));
                continue;
            }
            let blocked = occupants
                .iter()
                .any(|&q| matching.is_forbidden(PlayerId(user.0), q, ResourceId(s)));
            if blocked {
                continue;
            }
            let peers: Vec<UserId> = occupants.iter().map(|q| UserId(q.0)).collect();
            let q = influence.user(user, SlotId::from_index(s), &peers);
            if best.is_none_or(|(b, _)| q < b) {
                best = Some((q, s));
            }
        }
        let (slot, q) = match (best, empty) {
            (Some((q, s)), _) => (s, Some(q)),
            (None, Some(s)) => (s, None),
            (None, None) => {
                return Err(SchedulerError::Infeasible {
                    user,
                    bound: feasibility_bound(geometry, vehicles).bound,
                    slots: geometry.slots(),
                })
            }
        };
        matching.assign(PlayerId(user.0), ResourceId(slot))?;
        steps.push(Phase1Step {
            user,
            slot: SlotId::from_index(slot),
            influence: q,
        });
    }
    Ok((matching, steps))
}

/// Vehicles plus one dummy per slot, at most one dummy per rotation.
pub fn time_space(vehicles: &[UserId], slots: usize, q_max: usize) -> RotationSpace {
    let mut members: Vec<Member> = vehicles.iter().map(|u| Member::Player(PlayerId(u.0))).collect();
    members.extend((0..slots).map(|s| Member::Dummy(Some(ResourceId(s)))));
    RotationSpace::new(members, q_max, 1)
}

pub fn search_config(config: &SchedulerConfig, members: usize) -> LocalSearchConfig {
    LocalSearchConfig {
        random_draws_per_round: if config.random_draws_per_round == 0 {
            members
        } else {
            config.random_draws_per_round
        },
        max_rounds: config.max_rounds,
        search: SearchOptions {
            check_validity: config.check_validity,
            ..SearchOptions::default()
        },
    }
}

#[derive(Debug, Clone)]
pub struct UtsaOutcome {
    pub matching: Matching,
    pub phase1: Vec<Phase1Step>,
    pub rotations: Vec<RotationRecord>,
}

impl UtsaOutcome {
    /// Slot of every matched user.
    pub fn slots_of(&self, user: UserId) -> Vec<SlotId> {
        self.matching
            .resources_of(PlayerId(user.0))
            .iter()
            .map(|r| SlotId::from_index(r.0))
            .collect()
    }
}

pub fn utsa<R: Rng + ?Sized>(
    geometry: &Geometry,
    influence: &CrossInfluence,
    vehicles: &[UserId],
    config: &SchedulerConfig,
    rng: &mut R,
) -> Result<UtsaOutcome, SchedulerError> {
    let (mut matching, phase1) = utsa_phase1(geometry, influence, vehicles, config)?;
    let space = time_space(vehicles, geometry.slots(), config.q_max);
    let objective = TimeObjective { influence };
    let search = search_config(config, space.members().len());
    let rotations = local_search(&mut matching, &space, &objective, &search, rng)?;
    Ok(UtsaOutcome {
        matching,
        phase1,
        rotations,
    })
}
