//! Geometric cross influence between co-slot transmitters.
//!
//! Two transmitters `d` apart with range `r` overlap in `(2r - d)^2` when
//! `d < 2r`, otherwise in `epsilon < 0`. A user joining slot `i` with peers
//! `Psi(i)` causes `sum_peers I / (|Psi(i)| + 1)`, or `epsilon` alone. The
//! slot total is the sum over its occupants, which for `n >= 2` equals
//! `(2 / n) * sum_pairs I`.

use crate::ids::{SlotId, UserId};
use crate::matching::{Matching, Objective, PlayerId, ResourceId, Scope, Sense};
use crate::scenario::Geometry;

pub fn cross_influence_pair(distance: f64, range: f64, epsilon: f64) -> f64 {
    if distance < 2.0 * range {
        (2.0 * range - distance).powi(2)
    } else {
        epsilon
    }
}

/// Pairwise cross influence for every slot.
#[derive(Debug, Clone)]
pub struct CrossInfluence {
    n: usize,
    epsilon: f64,
    table: Vec<f64>,
}

impl CrossInfluence {
    pub fn new(geometry: &Geometry, epsilon: f64) -> Self {
        let n = geometry.users();
        let range = geometry.range();
        let mut table = vec![0.0; geometry.slots() * n * n];
        for s in 0..geometry.slots() {
            let slot = SlotId::from_index(s);
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        let d = geometry.distance(UserId(a), UserId(b), slot);
                        table[(s * n + a) * n + b] = cross_influence_pair(d, range, epsilon);
                    }
                }
            }
        }
        CrossInfluence { n, epsilon, table }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn pair(&self, a: UserId, b: UserId, slot: SlotId) -> f64 {
        self.table[(slot.index() * self.n + a.0) * self.n + b.0]
    }

    /// Influence of `user` in `slot` next to `peers` (which must not
    /// contain `user`).
    pub fn user(&self, user: UserId, slot: SlotId, peers: &[UserId]) -> f64 {
        if peers.is_empty() {
            return self.epsilon;
        }
        let sum: f64 = peers.iter().map(|&p| self.pair(user, p, slot)).sum();
        sum / (peers.len() as f64 + 1.0)
    }

    /// Sum of every occupant's influence; zero for an empty slot.
    pub fn slot_total(&self, slot: SlotId, occupants: &[UserId]) -> f64 {
        self.slot_total_by_index(slot, occupants, |u| u.0)
    }

    fn slot_total_by_index<T>(&self, slot: SlotId, occupants: &[T], index: impl Fn(&T) -> usize) -> f64 {
        match occupants.len() {
            0 => 0.0,
            1 => self.epsilon,
            n => {
                let base = slot.index() * self.n;
                let mut sum = 0.0;
                for (i, a) in occupants.iter().enumerate() {
                    let row = (base + index(a)) * self.n;
                    for b in &occupants[i + 1..] {
                        sum += self.table[row + index(b)];
                    }
                }
                2.0 * sum / n as f64
            }
        }
    }
}

/// Network cross influence over the slots a rotation touches; minimized.
pub struct TimeObjective<'a> {
    pub influence: &'a CrossInfluence,
}

impl TimeObjective<'_> {
    fn slot_value(&self, matching: &Matching, r: ResourceId) -> f64 {
        self.influence
            .slot_total_by_index(SlotId::from_index(r.0), matching.players_on(r), |p| p.0)
    }
}

impl Objective for TimeObjective<'_> {
    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn evaluate(&self, matching: &Matching, scope: &Scope) -> f64 {
        scope
            .resources
            .iter()
            .map(|&r| self.slot_value(matching, r))
            .sum()
    }
}

/// Sum over the rotated users of their influence in each held slot: the
/// subset-restricted objective of the rotation optimality rule, kept for
/// comparison with [`TimeObjective`].
pub struct SubsetTimeObjective<'a> {
    pub influence: &'a CrossInfluence,
}

impl Objective for SubsetTimeObjective<'_> {
    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn evaluate(&self, matching: &Matching, scope: &Scope) -> f64 {
        let mut total = 0.0;
        for &p in &scope.players {
            for &r in matching.resources_of(p) {
                let peers: Vec<UserId> = matching
                    .players_on(r)
                    .iter()
                    .filter(|&&q| q != p)
                    .map(|q| UserId(q.0))
                    .collect();
                total += self
                    .influence
                    .user(UserId(p.0), SlotId::from_index(r.0), &peers);
            }
        }
        total
    }
}

/// Total network cross influence of a time matching.
pub fn network_cross_influence(influence: &CrossInfluence, matching: &Matching) -> f64 {
    (0..matching.resource_count())
        .map(|r| {
            let occupants: Vec<UserId> = matching
                .players_on(ResourceId(r))
                .iter()
                .map(|p: &PlayerId| UserId(p.0))
                .collect();
            influence.slot_total(SlotId::from_index(r), &occupants)
        })
        .sum()
}
