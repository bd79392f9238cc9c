//! Randomized invariants.

use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use noma_v2x::harness::Estimate;
use noma_v2x::ids::{ChannelId, SlotId, UserId};
use noma_v2x::matching::counting::{
    count_rotation_sequences, invalid_rotation_lower_bound, valid_rotation_upper_bound,
};
use noma_v2x::matching::{
    apply_rotation, improves, is_q_exchange_stable, is_valid, optimal_shift, Matching, Member,
    Objective, PlayerId, ResourceId, RotationSequence, RotationSpace, SearchOptions, Sense,
};
use noma_v2x::powerctrl::{solve_power, FeedbackRow};
use noma_v2x::verify::random_instance;

use crate::support::{rotated_forbidden, subsets, CostTable};

#[derive(Debug, Clone)]
struct Setup {
    players: usize,
    resources: usize,
    slots: Vec<Option<usize>>,
    forbidden: Vec<(usize, usize, usize)>,
    costs: Vec<Vec<f64>>,
}

impl Setup {
    fn matching(&self) -> Matching {
        let mut m = Matching::new(self.players, self.resources);
        for (p, slot) in self.slots.iter().enumerate() {
            m.set_player_capacity(PlayerId(p), 1).unwrap();
            if let Some(r) = slot {
                m.assign(PlayerId(p), ResourceId(*r)).unwrap();
            }
        }
        for &(a, b, r) in &self.forbidden {
            if a != b {
                m.forbid(PlayerId(a), PlayerId(b), ResourceId(r)).unwrap();
            }
        }
        m
    }

    fn members(&self) -> Vec<Member> {
        (0..self.players)
            .map(|p| Member::Player(PlayerId(p)))
            .chain((0..self.resources).map(|r| Member::Dummy(Some(ResourceId(r)))))
            .chain([Member::Dummy(None)])
            .collect()
    }
}

fn setup() -> impl Strategy<Value = Setup> {
    (2..=6usize, 2..=4usize).prop_flat_map(|(players, resources)| {
        (
            prop::collection::vec(prop::option::weighted(0.8, 0..resources), players),
            prop::collection::vec((0..players, 0..players, 0..resources), 0..6),
            prop::collection::vec(prop::collection::vec(0..10u8, resources), players),
        )
            .prop_map(move |(slots, forbidden, costs)| Setup {
                players,
                resources,
                slots,
                forbidden,
                costs: costs
                    .into_iter()
                    .map(|row| row.into_iter().map(f64::from).collect())
                    .collect(),
            })
    })
}

/// A subset of the setup's members (at most one dummy) and a shift.
fn rotation_of(setup: &Setup, pick: &[bool], shift: usize) -> Option<RotationSequence> {
    let mut dummy_seen = false;
    let members: Vec<Member> = setup
        .members()
        .into_iter()
        .zip(pick.iter().cycle())
        .filter(|(_, &take)| take)
        .map(|(m, _)| m)
        .filter(|m| match m {
            Member::Dummy(_) if dummy_seen => false,
            Member::Dummy(_) => {
                dummy_seen = true;
                true
            }
            Member::Player(_) => true,
        })
        .collect();
    if members.len() < 2 {
        return None;
    }
    let shift = 1 + shift % members.len();
    RotationSequence::new(members, shift).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_rotation_restores(s in setup(), pick in prop::collection::vec(any::<bool>(), 1..12), shift in 0..8usize) {
        let Some(seq) = rotation_of(&s, &pick, shift) else { return Ok(()) };
        // Dummies re-offer a fixed match, so only player cycles invert.
        if seq.members().iter().any(|m| matches!(m, Member::Dummy(_))) {
            return Ok(());
        }
        let m = s.matching();
        if let Ok(after) = apply_rotation(&m, &seq) {
            let back = apply_rotation(&after, &seq.inverse()).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn rotation_leaves_others_alone(s in setup(), pick in prop::collection::vec(any::<bool>(), 1..12), shift in 0..8usize) {
        let Some(seq) = rotation_of(&s, &pick, shift) else { return Ok(()) };
        let m = s.matching();
        if let Ok(after) = apply_rotation(&m, &seq) {
            let len = seq.len();
            for (t, member) in seq.members().iter().enumerate() {
                if let Member::Player(p) = member {
                    let source = seq.members()[(t + seq.shift()) % len];
                    prop_assert_eq!(after.match_of(*member), m.match_of(source), "{:?}", p);
                }
            }
            for p in 0..s.players {
                let id = PlayerId(p);
                if !seq.members().contains(&Member::Player(id)) {
                    prop_assert_eq!(after.resources_of(id), m.resources_of(id));
                }
            }
        }
    }

    #[test]
    fn validity_matches_a_direct_scan(s in setup(), pick in prop::collection::vec(any::<bool>(), 1..12), shift in 0..8usize) {
        let Some(seq) = rotation_of(&s, &pick, shift) else { return Ok(()) };
        let m = s.matching();
        let scanned = match apply_rotation(&m, &seq) {
            Ok(after) => !rotated_forbidden(&after, seq.members()),
            Err(_) => false,
        };
        prop_assert_eq!(is_valid(&m, &seq).unwrap(), scanned);
    }

    #[test]
    fn stability_agrees_with_exhaustive_search(s in setup(), q_max in 2..=4usize) {
        let m = s.matching();
        let costs = CostTable(s.costs.clone());
        let options = SearchOptions::default();
        let space = RotationSpace::new(s.members(), q_max, 1);
        let before = costs.total(&m);
        let mut exhaustive = false;
        let mut by_shift = false;
        let mut work = m.clone();
        for subset in subsets(space.members(), q_max, 1) {
            for shift in 1..subset.len() {
                let seq = RotationSequence::new(subset.clone(), shift).unwrap();
                if let Ok(after) = apply_rotation(&m, &seq) {
                    if !rotated_forbidden(&after, &subset)
                        && improves(Sense::Minimize, costs.total(&after), before, options.tolerance)
                    {
                        exhaustive = true;
                    }
                }
            }
            by_shift |= optimal_shift(&mut work, &subset, &costs, &options).unwrap().is_some();
        }
        prop_assert_eq!(&work, &m);
        let stable = is_q_exchange_stable(&mut work, &space, &costs, &options).unwrap();
        prop_assert_eq!(stable, !exhaustive);
        prop_assert_eq!(stable, !by_shift);
    }

    #[test]
    fn rotation_counts_and_complement(n in 1..=30u64, f in 0..=40u64) {
        prop_assert_eq!(count_rotation_sequences(n, n), n as u128 * (1u128 << (n - 1)));
        let total = Ratio::from_integer(n as i128 * (1i128 << (n - 1)));
        prop_assert_eq!(invalid_rotation_lower_bound(n, f) + valid_rotation_upper_bound(n, f), total);
    }

    #[test]
    fn power_grows_with_the_decode_fraction(
        links in prop::collection::vec((0.0..100.0f64, -1.0..5.0f64), 1..10),
        low in 0.05..1.0f64,
        high in 0.05..1.0f64,
        rate in 0.5..3.0f64,
    ) {
        let rows: Vec<FeedbackRow> = links
            .iter()
            .enumerate()
            .map(|(i, &(interference, snr_exp))| FeedbackRow {
                rx: UserId(i + 1),
                tx: UserId(0),
                channel: ChannelId::from_index(0),
                interference,
                snr: 10f64.powf(snr_exp),
            })
            .collect();
        let (low, high) = if low <= high { (low, high) } else { (high, low) };
        let max_power = 0.2;
        let a = solve_power(&rows, low, rate, max_power, 1e-9).unwrap();
        let b = solve_power(&rows, high, rate, max_power, 1e-9).unwrap();
        prop_assert!(a.power <= b.power + 2e-9 * max_power, "{} > {}", a.power, b.power);
        prop_assert!(!b.satisfied || a.satisfied, "meeting the larger fraction implies the smaller");
    }

    #[test]
    fn distances_are_symmetric(seed in any::<u64>(), users in 2..=10usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(users, 0, &mut rng);
        let g = &inst.geometry;
        for s in 0..g.slots() {
            let slot = SlotId::from_index(s);
            for a in 0..users {
                let a = UserId(a);
                prop_assert!(!g.neighbors(a, slot).contains(&a));
                for b in 0..users {
                    let b = UserId(b);
                    prop_assert_eq!(g.distance(a, b, slot), g.distance(b, a, slot));
                    let listed = g.neighbors(a, slot).contains(&b);
                    prop_assert_eq!(listed, a != b && g.distance(a, b, slot) <= g.range());
                    prop_assert_eq!(listed, g.neighbors(b, slot).contains(&a));
                }
            }
        }
    }

    #[test]
    fn estimates_stay_inside_the_sample(sample in prop::collection::vec(0.0..=1.0f64, 0..60)) {
        let e = Estimate::of(&sample);
        prop_assert_eq!(e.n, sample.len());
        match e.mean {
            None => prop_assert!(sample.is_empty()),
            Some(mean) => {
                let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(mean >= lo - 1e-12 && mean <= hi + 1e-12);
            }
        }
        prop_assert_eq!(e.ci95.is_some(), sample.len() > 1);
        if let Some(ci) = e.ci95 {
            prop_assert!(ci >= 0.0);
        }
    }
}
