//! Slot-count feasibility from conflict-graph degeneracy.
//!
//! Transmitters within range of each other conflict. Peeling a minimum
//! degree vertex until the graph is empty yields the degeneracy `q` (the
//! largest degree seen at removal) and an order in which every vertex has at
//! most `q` conflicting predecessors when the removal order is reversed. A
//! greedy slot assignment in that order never needs more than `q + 1`
//! slots.

use crate::ids::{SlotId, UserId};
use crate::scenario::Geometry;

/// Degeneracy and removal order of an undirected graph given as adjacency
/// lists over `0..n`. Ties between equal degrees go to the lowest vertex.
pub fn degeneracy(adjacency: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let n = adjacency.len();
    let mut degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut worst = 0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("a vertex remains");
        worst = worst.max(degree[v]);
        removed[v] = true;
        order.push(v);
        for &w in &adjacency[v] {
            if !removed[w] {
                degree[w] -= 1;
            }
        }
    }
    (worst, order)
}

/// Conflict graph among `users` in `slot`, indexed by position in `users`.
pub fn conflict_graph(geometry: &Geometry, users: &[UserId], slot: SlotId) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); users.len()];
    for a in 0..users.len() {
        for b in (a + 1)..users.len() {
            if geometry.in_range(users[a], users[b], slot) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    adj
}

/// Union of the conflict graphs of every slot.
pub fn union_conflict_graph(geometry: &Geometry, users: &[UserId]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); users.len()];
    for a in 0..users.len() {
        for b in (a + 1)..users.len() {
            let any = (0..geometry.slots())
                .any(|s| geometry.in_range(users[a], users[b], SlotId::from_index(s)));
            if any {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    adj
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    /// Max over slots of degeneracy + 1.
    pub bound: usize,
    pub feasible: bool,
    pub per_slot: Vec<usize>,
}

/// Slots needed for a forbidden-pair-free assignment of `users`.
pub fn feasibility_bound(geometry: &Geometry, users: &[UserId]) -> FeasibilityReport {
    let per_slot: Vec<usize> = (0..geometry.slots())
        .map(|s| {
            let adj = conflict_graph(geometry, users, SlotId::from_index(s));
            if users.is_empty() {
                0
            } else {
                degeneracy(&adj).0 + 1
            }
        })
        .collect();
    let bound = per_slot.iter().copied().max().unwrap_or(0);
    FeasibilityReport {
        bound,
        feasible: bound <= geometry.slots(),
        per_slot,
    }
}

/// `users` in reverse peeling order of their union conflict graph: each has
/// at most `degeneracy` conflicting predecessors.
pub fn assignment_order(geometry: &Geometry, users: &[UserId]) -> Vec<UserId> {
    let adj = union_conflict_graph(geometry, users);
    let (_, order) = degeneracy(&adj);
    order.into_iter().rev().map(|i| users[i]).collect()
}
