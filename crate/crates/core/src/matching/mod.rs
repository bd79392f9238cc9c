//! Many-to-many matchings with forbidden pairs, and rotation local search.
//!
//! Players (users, or channel seats) are matched to sets of resources (time
//! slots or sub-channels). A rotation over an ordered member list
//! `N_s(1..=L)` with shift `l` hands member `t` the old match of member
//! `t + l (mod L)`; `l = L` is the identity. Members may be dummies: a dummy
//! seated on resource `r` offers `{r}` and a sentinel dummy offers the empty
//! set. Whatever a dummy receives is discarded, so dummies let a player move
//! into a resource, or drop out, without a partner taking its place.

pub mod counting;

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlayerId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResourceId(pub usize);

/// One position in a rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Member {
    Player(PlayerId),
    /// `Some(r)` offers `{r}`; `None` is the unmatched sentinel.
    Dummy(Option<ResourceId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    PlayerCapacity {
        player: PlayerId,
        holds: usize,
        capacity: usize,
    },
    ResourceCapacity {
        resource: ResourceId,
        holds: usize,
        capacity: usize,
    },
    ForbiddenPair {
        resource: ResourceId,
        a: PlayerId,
        b: PlayerId,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::PlayerCapacity {
                player,
                holds,
                capacity,
            } => write!(f, "player {} holds {holds} resources, capacity {capacity}", player.0),
            Violation::ResourceCapacity {
                resource,
                holds,
                capacity,
            } => write!(f, "resource {} holds {holds} players, capacity {capacity}", resource.0),
            Violation::ForbiddenPair { resource, a, b } => {
                write!(f, "forbidden pair ({}, {}) on resource {}", a.0, b.0, resource.0)
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchingError {
    #[error("player {} is out of range", .0.0)]
    UnknownPlayer(PlayerId),
    #[error("resource {} is out of range", .0.0)]
    UnknownResource(ResourceId),
    #[error("capacity violated: {0}")]
    Capacity(Violation),
    #[error("rotation shift {shift} outside 1..={len}")]
    BadShift { shift: usize, len: usize },
    #[error("rotation needs at least one member")]
    EmptyRotation,
    #[error("member {0:?} appears twice in a rotation")]
    DuplicateMember(Member),
    #[error("local search did not settle within {0} rounds")]
    NoConvergence(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    of_player: Vec<Vec<ResourceId>>,
    of_resource: Vec<Vec<PlayerId>>,
    player_capacity: Vec<usize>,
    resource_capacity: Vec<Option<usize>>,
    /// `(resource * n + a) * n + b`
    forbidden: Vec<bool>,
}

impl Matching {
    /// Empty matching; players have unlimited capacity, resources none.
    pub fn new(players: usize, resources: usize) -> Self {
        Matching {
            of_player: vec![Vec::new(); players],
            of_resource: vec![Vec::new(); resources],
            player_capacity: vec![usize::MAX; players],
            resource_capacity: vec![None; resources],
            forbidden: vec![false; resources * players * players],
        }
    }

    pub fn player_count(&self) -> usize {
        self.of_player.len()
    }

    pub fn resource_count(&self) -> usize {
        self.of_resource.len()
    }

    fn check_player(&self, p: PlayerId) -> Result<(), MatchingError> {
        if p.0 < self.of_player.len() {
            Ok(())
        } else {
            Err(MatchingError::UnknownPlayer(p))
        }
    }

    fn check_resource(&self, r: ResourceId) -> Result<(), MatchingError> {
        if r.0 < self.of_resource.len() {
            Ok(())
        } else {
            Err(MatchingError::UnknownResource(r))
        }
    }

    pub fn set_player_capacity(&mut self, p: PlayerId, capacity: usize) -> Result<(), MatchingError> {
        self.check_player(p)?;
        self.player_capacity[p.0] = capacity;
        Ok(())
    }

    pub fn set_resource_capacity(
        &mut self,
        r: ResourceId,
        capacity: Option<usize>,
    ) -> Result<(), MatchingError> {
        self.check_resource(r)?;
        self.resource_capacity[r.0] = capacity;
        Ok(())
    }

    pub fn player_capacity(&self, p: PlayerId) -> usize {
        self.player_capacity[p.0]
    }

    pub fn resource_capacity(&self, r: ResourceId) -> Option<usize> {
        self.resource_capacity[r.0]
    }

    /// Marks `a` and `b` as unable to share `r` (symmetric).
    pub fn forbid(&mut self, a: PlayerId, b: PlayerId, r: ResourceId) -> Result<(), MatchingError> {
        self.check_player(a)?;
        self.check_player(b)?;
        self.check_resource(r)?;
        let n = self.of_player.len();
        self.forbidden[(r.0 * n + a.0) * n + b.0] = true;
        self.forbidden[(r.0 * n + b.0) * n + a.0] = true;
        Ok(())
    }

    #[inline]
    pub fn is_forbidden(&self, a: PlayerId, b: PlayerId, r: ResourceId) -> bool {
        let n = self.of_player.len();
        self.forbidden[(r.0 * n + a.0) * n + b.0]
    }

    /// Number of unordered forbidden pairs summed over resources.
    pub fn forbidden_pair_count(&self) -> usize {
        let n = self.of_player.len();
        (0..self.of_resource.len())
            .map(|r| {
                (0..n)
                    .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
                    .filter(|&(a, b)| self.forbidden[(r * n + a) * n + b])
                    .count()
            })
            .sum()
    }

    pub fn resources_of(&self, p: PlayerId) -> &[ResourceId] {
        &self.of_player[p.0]
    }

    pub fn players_on(&self, r: ResourceId) -> &[PlayerId] {
        &self.of_resource[r.0]
    }

    pub fn is_matched(&self, p: PlayerId, r: ResourceId) -> bool {
        self.of_player[p.0].binary_search(&r).is_ok()
    }

    /// Adds `(p, r)`, enforcing both capacities. Forbidden pairs are not
    /// checked here; see [`Matching::violations`].
    pub fn assign(&mut self, p: PlayerId, r: ResourceId) -> Result<(), MatchingError> {
        self.check_player(p)?;
        self.check_resource(r)?;
        if self.is_matched(p, r) {
            return Ok(());
        }
        let holds = self.of_player[p.0].len() + 1;
        if holds > self.player_capacity[p.0] {
            return Err(MatchingError::Capacity(Violation::PlayerCapacity {
                player: p,
                holds,
                capacity: self.player_capacity[p.0],
            }));
        }
        if let Some(cap) = self.resource_capacity[r.0] {
            let holds = self.of_resource[r.0].len() + 1;
            if holds > cap {
                return Err(MatchingError::Capacity(Violation::ResourceCapacity {
                    resource: r,
                    holds,
                    capacity: cap,
                }));
            }
        }
        insert_sorted(&mut self.of_player[p.0], r);
        insert_sorted(&mut self.of_resource[r.0], p);
        Ok(())
    }

    pub fn unassign(&mut self, p: PlayerId, r: ResourceId) -> Result<(), MatchingError> {
        self.check_player(p)?;
        self.check_resource(r)?;
        remove_sorted(&mut self.of_player[p.0], r);
        remove_sorted(&mut self.of_resource[r.0], p);
        Ok(())
    }

    /// Every capacity excess and co-matched forbidden pair.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (p, set) in self.of_player.iter().enumerate() {
            if set.len() > self.player_capacity[p] {
                out.push(Violation::PlayerCapacity {
                    player: PlayerId(p),
                    holds: set.len(),
                    capacity: self.player_capacity[p],
                });
            }
        }
        for (r, occupants) in self.of_resource.iter().enumerate() {
            if let Some(cap) = self.resource_capacity[r] {
                if occupants.len() > cap {
                    out.push(Violation::ResourceCapacity {
                        resource: ResourceId(r),
                        holds: occupants.len(),
                        capacity: cap,
                    });
                }
            }
            for (i, &a) in occupants.iter().enumerate() {
                for &b in &occupants[i + 1..] {
                    if self.is_forbidden(a, b, ResourceId(r)) {
                        out.push(Violation::ForbiddenPair {
                            resource: ResourceId(r),
                            a,
                            b,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn is_feasible(&self) -> bool {
        self.violations().is_empty()
    }

    /// Flat `(player, resource)` table, sorted.
    pub fn pairs(&self) -> Vec<(PlayerId, ResourceId)> {
        self.of_player
            .iter()
            .enumerate()
            .flat_map(|(p, set)| set.iter().map(move |&r| (PlayerId(p), r)))
            .collect()
    }

    pub fn match_of(&self, member: Member) -> Vec<ResourceId> {
        match member {
            Member::Player(p) => self.of_player[p.0].clone(),
            Member::Dummy(Some(r)) => vec![r],
            Member::Dummy(None) => Vec::new(),
        }
    }

    fn check_sequence(&self, seq: &RotationSequence) -> Result<(), MatchingError> {
        for m in &seq.members {
            match *m {
                Member::Player(p) => self.check_player(p)?,
                Member::Dummy(Some(r)) => self.check_resource(r)?,
                Member::Dummy(None) => {}
            }
        }
        Ok(())
    }

    /// Applies `seq` in place and returns the previous matches of its members.
    fn rotate_in_place(&mut self, seq: &RotationSequence) -> Vec<Vec<ResourceId>> {
        let old: Vec<Vec<ResourceId>> = seq.members.iter().map(|&m| self.match_of(m)).collect();
        self.rotate_from(seq, &old);
        old
    }

    /// Applies `seq` given the current matches `old` of its members.
    fn rotate_from(&mut self, seq: &RotationSequence, old: &[Vec<ResourceId>]) {
        let len = seq.members.len();
        for (t, m) in seq.members.iter().enumerate() {
            if let Member::Player(p) = *m {
                for &r in &old[t] {
                    remove_sorted(&mut self.of_resource[r.0], p);
                }
            }
        }
        for (t, m) in seq.members.iter().enumerate() {
            if let Member::Player(p) = *m {
                let new = &old[(t + seq.shift) % len];
                for &r in new {
                    insert_sorted(&mut self.of_resource[r.0], p);
                }
                self.of_player[p.0].clone_from(new);
            }
        }
    }

    /// Puts the members of `seq` back on their matches `old`.
    fn restore(&mut self, seq: &RotationSequence, old: &[Vec<ResourceId>]) {
        for m in &seq.members {
            if let Member::Player(p) = *m {
                for &r in &self.of_player[p.0] {
                    remove_sorted(&mut self.of_resource[r.0], p);
                }
            }
        }
        for (t, m) in seq.members.iter().enumerate() {
            if let Member::Player(p) = *m {
                for &r in &old[t] {
                    insert_sorted(&mut self.of_resource[r.0], p);
                }
                self.of_player[p.0].clone_from(&old[t]);
            }
        }
    }

    /// Capacity excess among the rotated players and the resources they touch.
    fn capacity_violation(&self, seq: &RotationSequence, scope: &Scope) -> Option<Violation> {
        for m in &seq.members {
            if let Member::Player(p) = *m {
                let holds = self.of_player[p.0].len();
                if holds > self.player_capacity[p.0] {
                    return Some(Violation::PlayerCapacity {
                        player: p,
                        holds,
                        capacity: self.player_capacity[p.0],
                    });
                }
            }
        }
        for &r in &scope.resources {
            if let Some(cap) = self.resource_capacity[r.0] {
                let holds = self.of_resource[r.0].len();
                if holds > cap {
                    return Some(Violation::ResourceCapacity {
                        resource: r,
                        holds,
                        capacity: cap,
                    });
                }
            }
        }
        None
    }

    /// Forbidden-pair test of the current state for every rotated player.
    fn rotated_players_clear(&self, seq: &RotationSequence) -> bool {
        seq.members.iter().all(|m| match *m {
            Member::Player(p) => self.of_player[p.0].iter().all(|&r| {
                self.of_resource[r.0]
                    .iter()
                    .all(|&q| q == p || !self.is_forbidden(p, q, r))
            }),
            Member::Dummy(_) => true,
        })
    }
}

fn insert_sorted<T: Ord + Copy>(v: &mut Vec<T>, x: T) {
    if let Err(pos) = v.binary_search(&x) {
        v.insert(pos, x);
    }
}

fn remove_sorted<T: Ord + Copy>(v: &mut Vec<T>, x: T) {
    if let Ok(pos) = v.binary_search(&x) {
        v.remove(pos);
    }
}

/// Ordered members and a cyclic shift.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RotationSequence {
    members: Vec<Member>,
    shift: usize,
}

impl RotationSequence {
    pub fn new(members: Vec<Member>, shift: usize) -> Result<Self, MatchingError> {
        if members.is_empty() {
            return Err(MatchingError::EmptyRotation);
        }
        if shift == 0 || shift > members.len() {
            return Err(MatchingError::BadShift {
                shift,
                len: members.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for m in &members {
            if !seen.insert(*m) {
                return Err(MatchingError::DuplicateMember(*m));
            }
        }
        Ok(RotationSequence { members, shift })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.shift == self.members.len()
    }

    /// The shift that undoes this one over the same members.
    pub fn inverse(&self) -> RotationSequence {
        let len = self.members.len();
        RotationSequence {
            members: self.members.clone(),
            shift: if self.shift == len { len } else { len - self.shift },
        }
    }

    /// `(member, match it receives)` pairs against `matching`.
    pub fn reassignment(&self, matching: &Matching) -> Vec<(Member, Vec<ResourceId>)> {
        let len = self.members.len();
        (0..len)
            .map(|t| {
                (
                    self.members[t],
                    matching.match_of(self.members[(t + self.shift) % len]),
                )
            })
            .collect()
    }
}

/// The players and resources a rotation can change.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scope {
    pub players: Vec<PlayerId>,
    pub resources: Vec<ResourceId>,
}

impl Scope {
    pub fn of(matching: &Matching, members: &[Member]) -> Scope {
        let mut players: Vec<PlayerId> = members
            .iter()
            .filter_map(|m| match *m {
                Member::Player(p) => Some(p),
                Member::Dummy(_) => None,
            })
            .collect();
        players.sort_unstable();
        let mut resources: Vec<ResourceId> = Vec::new();
        for m in members {
            match *m {
                Member::Player(p) => resources.extend_from_slice(&matching.of_player[p.0]),
                Member::Dummy(Some(r)) => resources.push(r),
                Member::Dummy(None) => {}
            }
        }
        resources.sort_unstable();
        resources.dedup();
        Scope { players, resources }
    }

    pub fn full(matching: &Matching) -> Scope {
        Scope {
            players: (0..matching.player_count()).map(PlayerId).collect(),
            resources: (0..matching.resource_count()).map(ResourceId).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Scalar objective over the part of a matching a rotation can change.
pub trait Objective {
    fn sense(&self) -> Sense;

    /// Value restricted to `scope`. Must depend only on the matches of the
    /// scope's players and the occupants of its resources, so that values
    /// before and after a rotation are comparable.
    fn evaluate(&self, matching: &Matching, scope: &Scope) -> f64;

    /// Problem constraints beyond forbidden pairs and capacities, checked on
    /// the post-rotation state.
    fn admissible(&self, _matching: &Matching, _scope: &Scope) -> bool {
        true
    }

    fn total(&self, matching: &Matching) -> f64 {
        self.evaluate(matching, &Scope::full(matching))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Reject rotations that co-match a forbidden pair. Disabling it is a
    /// fault-injection hook for the self-verification suite.
    pub check_validity: bool,
    /// Relative margin an objective change must exceed to count as strict.
    pub tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            check_validity: true,
            tolerance: 1e-9,
        }
    }
}

/// True when `new` beats `old` by more than the relative tolerance.
pub fn improves(sense: Sense, new: f64, old: f64, tolerance: f64) -> bool {
    let margin = tolerance * old.abs().max(new.abs()) + 1e-12;
    match sense {
        Sense::Minimize => new < old - margin,
        Sense::Maximize => new > old + margin,
    }
}

/// Builds the post-rotation matching, rejecting capacity excess.
pub fn apply_rotation(matching: &Matching, seq: &RotationSequence) -> Result<Matching, MatchingError> {
    matching.check_sequence(seq)?;
    let mut out = matching.clone();
    let scope = Scope::of(matching, &seq.members);
    out.rotate_in_place(seq);
    match out.capacity_violation(seq, &scope) {
        Some(v) => Err(MatchingError::Capacity(v)),
        None => Ok(out),
    }
}

/// No rotated player ends up beside a forbidden partner, and no capacity is
/// exceeded.
pub fn is_valid(matching: &Matching, seq: &RotationSequence) -> Result<bool, MatchingError> {
    matching.check_sequence(seq)?;
    let mut work = matching.clone();
    let scope = Scope::of(matching, &seq.members);
    work.rotate_in_place(seq);
    Ok(work.capacity_violation(seq, &scope).is_none() && work.rotated_players_clear(seq))
}

/// Outcome of evaluating one rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub shift: usize,
    /// Scope objective before the rotation.
    pub before: f64,
    /// Scope objective after it.
    pub after: f64,
}

/// Evaluates one shift in place and restores the matching. `None` when the
/// shift is invalid or inadmissible.
fn try_shift(
    matching: &mut Matching,
    seq: &RotationSequence,
    old: &[Vec<ResourceId>],
    scope: &Scope,
    objective: &dyn Objective,
    options: &SearchOptions,
) -> Option<f64> {
    matching.rotate_from(seq, old);
    let ok = matching.capacity_violation(seq, scope).is_none()
        && (!options.check_validity || matching.rotated_players_clear(seq))
        && objective.admissible(matching, scope);
    let value = ok.then(|| objective.evaluate(matching, scope));
    matching.restore(seq, old);
    value
}

/// A shift only permutes equal sets among members when it maps every member
/// onto one holding the same match; such shifts change nothing.
fn is_noop(olds: &[Vec<ResourceId>], members: &[Member], shift: usize) -> bool {
    let len = olds.len();
    (0..len).all(|t| {
        matches!(members[t], Member::Dummy(_)) || olds[t] == olds[(t + shift) % len]
    })
}

/// Best valid shift for `members` in their given order, or `None` if the
/// status quo (`l = L`) is at least as good. Ties go to the lowest shift.
/// The matching is left unchanged.
pub fn optimal_shift(
    matching: &mut Matching,
    members: &[Member],
    objective: &dyn Objective,
    options: &SearchOptions,
) -> Result<Option<Candidate>, MatchingError> {
    let len = members.len();
    let mut seq = RotationSequence::new(members.to_vec(), len)?;
    matching.check_sequence(&seq)?;
    let scope = Scope::of(matching, members);
    let olds: Vec<Vec<ResourceId>> = members.iter().map(|&m| matching.match_of(m)).collect();
    let before = objective.evaluate(matching, &scope);
    let sense = objective.sense();
    let mut best: Option<Candidate> = None;
    for shift in 1..len {
        if is_noop(&olds, members, shift) {
            continue;
        }
        seq.shift = shift;
        if let Some(after) = try_shift(matching, &seq, &olds, &scope, objective, options) {
            let beats_best = match best {
                None => true,
                Some(b) => improves(sense, after, b.after, 0.0),
            };
            if beats_best && improves(sense, after, before, options.tolerance) {
                best = Some(Candidate {
                    shift,
                    before,
                    after,
                });
            }
        }
    }
    Ok(best)
}

/// The member universe searched for rotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationSpace {
    members: Vec<Member>,
    q_max: usize,
    max_dummies: usize,
}

impl RotationSpace {
    /// Members are sorted (players by id, then dummies) and deduplicated.
    pub fn new(mut members: Vec<Member>, q_max: usize, max_dummies: usize) -> Self {
        members.sort_unstable();
        members.dedup();
        RotationSpace {
            members,
            q_max,
            max_dummies,
        }
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    pub fn max_dummies(&self) -> usize {
        self.max_dummies
    }

    fn admits(&self, subset: &[Member]) -> bool {
        subset.iter().filter(|m| matches!(m, Member::Dummy(_))).count() <= self.max_dummies
    }

    /// Subsets of size `2..=q_max` in lexicographic order, sizes ascending.
    pub fn subsets(&self) -> impl Iterator<Item = Vec<Member>> + '_ {
        let top = self.q_max.min(self.members.len());
        (2..=top).flat_map(move |size| {
            self.members
                .iter()
                .copied()
                .combinations(size)
                .filter(move |s| self.admits(s))
        })
    }

    fn random_subset<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<Member>> {
        let n = self.members.len();
        let top = self.q_max.min(n);
        if top < 2 {
            return None;
        }
        let size = rng.random_range(2..=top);
        let mut idx = sample(rng, n, size).into_vec();
        idx.sort_unstable();
        let subset: Vec<Member> = idx.into_iter().map(|i| self.members[i]).collect();
        self.admits(&subset).then_some(subset)
    }
}

/// Every `(subset, shift)` pair over `members` for subset sizes
/// `1..=q_max` and shifts `1..=L`, the identity included. The count is
/// `sum_q q * C(N, q)`.
pub fn enumerate_rotations(
    members: &[Member],
    q_max: usize,
) -> impl Iterator<Item = RotationSequence> + '_ {
    let top = q_max.min(members.len());
    (1..=top).flat_map(move |size| {
        members
            .iter()
            .copied()
            .combinations(size)
            .flat_map(move |subset| {
                (1..=size).map(move |shift| RotationSequence {
                    members: subset.clone(),
                    shift,
                })
            })
    })
}

/// First strictly improving valid rotation in enumeration order, scanning
/// every shift of every subset independently.
pub fn find_improving_rotation(
    matching: &mut Matching,
    space: &RotationSpace,
    objective: &dyn Objective,
    options: &SearchOptions,
) -> Result<Option<(RotationSequence, Candidate)>, MatchingError> {
    let sense = objective.sense();
    for subset in space.subsets() {
        let len = subset.len();
        let mut seq = RotationSequence::new(subset, len)?;
        matching.check_sequence(&seq)?;
        let scope = Scope::of(matching, &seq.members);
        let olds: Vec<Vec<ResourceId>> = seq.members.iter().map(|&m| matching.match_of(m)).collect();
        let before = objective.evaluate(matching, &scope);
        for shift in 1..len {
            seq.shift = shift;
            if let Some(after) = try_shift(matching, &seq, &olds, &scope, objective, options) {
                if improves(sense, after, before, options.tolerance) {
                    return Ok(Some((
                        seq,
                        Candidate {
                            shift,
                            before,
                            after,
                        },
                    )));
                }
            }
        }
    }
    Ok(None)
}

/// No valid rotation of at most `q_max` members improves the objective.
pub fn is_q_exchange_stable(
    matching: &mut Matching,
    space: &RotationSpace,
    objective: &dyn Objective,
    options: &SearchOptions,
) -> Result<bool, MatchingError> {
    Ok(find_improving_rotation(matching, space, objective, options)?.is_none())
}

/// One executed rotation with the network objective around it.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationRecord {
    pub sequence: RotationSequence,
    pub total_before: f64,
    pub total_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSearchConfig {
    /// Random subset draws before each deterministic sweep.
    pub random_draws_per_round: usize,
    pub max_rounds: usize,
    pub search: SearchOptions,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        LocalSearchConfig {
            random_draws_per_round: 64,
            max_rounds: 10_000,
            search: SearchOptions::default(),
        }
    }
}

/// Rotation local search. Each round applies the optimal shift of a batch
/// of random subsets, then sweeps every subset in lexicographic order,
/// applying improvements as found. A sweep that executes nothing certifies
/// q-exchange stability and ends the search.
pub fn local_search<R: Rng + ?Sized>(
    matching: &mut Matching,
    space: &RotationSpace,
    objective: &dyn Objective,
    config: &LocalSearchConfig,
    rng: &mut R,
) -> Result<Vec<RotationRecord>, MatchingError> {
    let mut records = Vec::new();
    let mut total = objective.total(matching);
    let mut execute = |matching: &mut Matching, members: Vec<Member>, c: Candidate| {
        let seq = RotationSequence {
            members,
            shift: c.shift,
        };
        matching.rotate_in_place(&seq);
        let after = total + (c.after - c.before);
        records.push(RotationRecord {
            sequence: seq,
            total_before: total,
            total_after: after,
        });
        total = after;
    };
    for _ in 0..config.max_rounds {
        for _ in 0..config.random_draws_per_round {
            if let Some(subset) = space.random_subset(rng) {
                if let Some(c) = optimal_shift(matching, &subset, objective, &config.search)? {
                    execute(matching, subset, c);
                }
            }
        }
        let mut executed = 0usize;
        for subset in space.subsets() {
            if let Some(c) = optimal_shift(matching, &subset, objective, &config.search)? {
                execute(matching, subset, c);
                executed += 1;
            }
        }
        if executed == 0 {
            return Ok(records);
        }
    }
    Err(MatchingError::NoConvergence(config.max_rounds))
}
