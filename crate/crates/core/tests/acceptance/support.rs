//! Verdict printing and independent oracles shared by the acceptance checks.

use std::io::Write;

use noma_v2x::ids::{SlotId, UserId};
use noma_v2x::matching::{Matching, Member, Objective, PlayerId, ResourceId, Scope, Sense};
use noma_v2x::scenario::Geometry;

/// Prints `PASS name: detail` or `FAIL name: detail` past the test harness
/// capture, then fails the test on `FAIL`.
pub fn verdict(name: &str, ok: bool, detail: &str) {
    let line = format!("{} {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(ok, "{name}: {detail}");
}

/// Subsets of `items` with sizes in `2..=max`, at most `max_dummies`
/// dummies each, in lexicographic index order.
pub fn subsets(items: &[Member], max: usize, max_dummies: usize) -> Vec<Vec<Member>> {
    fn grow(
        items: &[Member],
        start: usize,
        max: usize,
        dummies_left: usize,
        current: &mut Vec<Member>,
        out: &mut Vec<Vec<Member>>,
    ) {
        if current.len() >= 2 {
            out.push(current.clone());
        }
        if current.len() == max {
            return;
        }
        for i in start..items.len() {
            let dummy = matches!(items[i], Member::Dummy(_));
            if dummy && dummies_left == 0 {
                continue;
            }
            current.push(items[i]);
            grow(items, i + 1, max, dummies_left - usize::from(dummy), current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    grow(items, 0, max, max_dummies, &mut Vec::new(), &mut out);
    out
}

/// Squared overlap proxy of two disks `d` apart, or `epsilon` when apart.
pub fn pair_influence(d: f64, range: f64, epsilon: f64) -> f64 {
    if d < 2.0 * range {
        (2.0 * range - d) * (2.0 * range - d)
    } else {
        epsilon
    }
}

/// Network cross influence of a time matching, from pairwise distances.
pub fn network_influence(geometry: &Geometry, matching: &Matching, epsilon: f64) -> f64 {
    (0..matching.resource_count())
        .map(|s| {
            let users: Vec<UserId> = matching
                .players_on(ResourceId(s))
                .iter()
                .map(|p| UserId(p.0))
                .collect();
            slot_influence(geometry, SlotId::from_index(s), &users, epsilon)
        })
        .sum()
}

/// Sum over `users` of the mean pair influence each causes in `slot`.
pub fn slot_influence(geometry: &Geometry, slot: SlotId, users: &[UserId], epsilon: f64) -> f64 {
    let range = geometry.range();
    users
        .iter()
        .map(|&u| {
            let peers: Vec<UserId> = users.iter().copied().filter(|&o| o != u).collect();
            if peers.is_empty() {
                epsilon
            } else {
                let sum: f64 = peers
                    .iter()
                    .map(|&o| pair_influence(geometry.distance(u, o, slot), range, epsilon))
                    .sum();
                sum / (peers.len() as f64 + 1.0)
            }
        })
        .sum()
}

/// Co-slot pairs of matched users within range of each other.
pub fn forbidden_co_matches(geometry: &Geometry, matching: &Matching) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for s in 0..matching.resource_count() {
        let on = matching.players_on(ResourceId(s));
        for (i, a) in on.iter().enumerate() {
            for b in &on[i + 1..] {
                let d = geometry.distance(UserId(a.0), UserId(b.0), SlotId::from_index(s));
                if d <= geometry.range() {
                    out.push((s, a.0, b.0));
                }
            }
        }
    }
    out
}

/// Rotated players that share a resource with a forbidden partner.
pub fn rotated_forbidden(matching: &Matching, members: &[Member]) -> bool {
    members.iter().any(|m| match *m {
        Member::Player(p) => matching.resources_of(p).iter().any(|&r| {
            matching
                .players_on(r)
                .iter()
                .any(|&q| q != p && matching.is_forbidden(p, q, r))
        }),
        Member::Dummy(_) => false,
    })
}

/// Max over nonempty vertex subsets of the induced minimum degree.
pub fn brute_max_min_degree(edges: &[(usize, usize)], n: usize) -> usize {
    let mut best = 0;
    for mask in 1u32..(1u32 << n) {
        let inside = |v: usize| mask & (1 << v) != 0;
        let min = (0..n)
            .filter(|&v| inside(v))
            .map(|v| {
                edges
                    .iter()
                    .filter(|&&(a, b)| (a == v && inside(b)) || (b == v && inside(a)))
                    .count()
            })
            .min()
            .unwrap_or(0);
        best = best.max(min);
    }
    best
}

/// A player member.
pub fn player(i: usize) -> Member {
    Member::Player(PlayerId(i))
}

/// Sum of a fixed cost per matched pair, minimized.
pub struct CostTable(pub Vec<Vec<f64>>);

impl Objective for CostTable {
    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn evaluate(&self, matching: &Matching, _scope: &Scope) -> f64 {
        matching
            .pairs()
            .iter()
            .map(|(p, r)| self.0[p.0][r.0])
            .sum()
    }
}
