//! Small worked cases checked against hand computation or exhaustive search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use noma_v2x::channel::{LinkModel, RadioConfig};
use noma_v2x::ids::{ChannelId, SlotId, UserId};
use noma_v2x::matching::{
    apply_rotation, optimal_shift, Matching, Member, Objective, PlayerId, ResourceId,
    RotationSequence, RotationSpace, SearchOptions,
};
use noma_v2x::scheduler::influence::CrossInfluence;
use noma_v2x::scheduler::rmsa::{rmsa, ChannelObjective};
use noma_v2x::scheduler::utsa::{utsa, utsa_phase1};
use noma_v2x::scheduler::SchedulerConfig;
use noma_v2x::sim::link_params;
use noma_v2x::verify::{random_channel_instance, random_instance};

use crate::support::{network_influence, pair_influence, player, CostTable};

fn three_by_three() -> Matching {
    let mut m = Matching::new(3, 3);
    for p in 0..3 {
        m.set_player_capacity(PlayerId(p), 1).unwrap();
        m.assign(PlayerId(p), ResourceId(p)).unwrap();
    }
    m
}

#[test]
fn optimal_shift_of_three_players() {
    let costs = CostTable(vec![
        vec![5.0, 1.0, 9.0],
        vec![4.0, 6.0, 2.0],
        vec![3.0, 8.0, 7.0],
    ]);
    let members = [player(0), player(1), player(2)];
    let mut m = three_by_three();
    // Shift 1 moves player t onto the resource of member t + 1.
    let by_hand = [(1, 1.0 + 2.0 + 3.0), (2, 9.0 + 4.0 + 8.0)];
    for (shift, expected) in by_hand {
        let seq = RotationSequence::new(members.to_vec(), shift).unwrap();
        let after = apply_rotation(&m, &seq).unwrap();
        assert_eq!(costs.total(&after), expected);
    }
    let best = optimal_shift(&mut m, &members, &costs, &SearchOptions::default())
        .unwrap()
        .expect("shift 1 improves");
    assert_eq!(best.shift, 1);
    assert_eq!(best.before, 18.0);
    assert_eq!(best.after, 6.0);
    assert_eq!(m, three_by_three());
}

#[test]
fn optimal_shift_keeps_a_better_status_quo() {
    let costs = CostTable(vec![
        vec![1.0, 5.0, 5.0],
        vec![5.0, 1.0, 5.0],
        vec![5.0, 5.0, 1.0],
    ]);
    let mut m = three_by_three();
    let found = optimal_shift(
        &mut m,
        &[player(0), player(1), player(2)],
        &costs,
        &SearchOptions::default(),
    )
    .unwrap();
    assert_eq!(found, None);
}

#[test]
fn optimal_shift_skips_forbidden_shifts() {
    let costs = CostTable(vec![
        vec![5.0, 1.0, 9.0],
        vec![4.0, 6.0, 2.0],
        vec![3.0, 8.0, 7.0],
    ]);
    let mut m = Matching::new(4, 3);
    for p in 0..3 {
        m.set_player_capacity(PlayerId(p), 1).unwrap();
        m.assign(PlayerId(p), ResourceId(p)).unwrap();
    }
    // A bystander on resource 1 that player 0 may not join.
    m.set_player_capacity(PlayerId(3), 1).unwrap();
    m.assign(PlayerId(3), ResourceId(1)).unwrap();
    m.forbid(PlayerId(0), PlayerId(3), ResourceId(1)).unwrap();
    let padded = CostTable(costs.0.iter().cloned().chain([vec![0.0; 3]]).collect());
    let best = optimal_shift(
        &mut m,
        &[player(0), player(1), player(2)],
        &padded,
        &SearchOptions::default(),
    )
    .unwrap();
    assert_eq!(best, None, "shift 1 is forbidden and shift 2 costs more");
}

#[test]
fn phase1_replays_as_least_influence_choices() {
    let config = SchedulerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..20 {
        let inst = random_instance(6, 1, &mut rng);
        let geometry = &inst.geometry;
        let influence = CrossInfluence::new(geometry, config.epsilon);
        let (matching, steps) = utsa_phase1(geometry, &influence, &inst.vehicles, &config).unwrap();
        assert_eq!(steps.len(), inst.vehicles.len());
        let mut placed: Vec<Vec<UserId>> = vec![Vec::new(); geometry.slots()];
        for step in &steps {
            let user = step.user;
            let cost = |s: usize| -> Option<f64> {
                let slot = SlotId::from_index(s);
                let peers = &placed[s];
                if peers.is_empty() || peers.iter().any(|&o| geometry.in_range(user, o, slot)) {
                    return None;
                }
                let sum: f64 = peers
                    .iter()
                    .map(|&o| pair_influence(geometry.distance(user, o, slot), geometry.range(), config.epsilon))
                    .sum();
                Some(sum / (peers.len() as f64 + 1.0))
            };
            let options: Vec<(usize, f64)> = (0..geometry.slots())
                .filter_map(|s| cost(s).map(|c| (s, c)))
                .collect();
            let chosen = step.slot.index();
            match options.iter().map(|&(_, c)| c).reduce(f64::min) {
                Some(min) => {
                    let own = cost(chosen).expect("joined an occupied admissible slot");
                    assert!(own <= min + 1e-9, "{user} took {own}, best {min}");
                    assert!((step.influence.unwrap() - own).abs() <= 1e-9 * own.abs().max(1.0));
                }
                None => {
                    let first_empty = placed.iter().position(Vec::is_empty).unwrap();
                    assert_eq!(chosen, first_empty);
                    assert_eq!(step.influence, None);
                }
            }
            placed[chosen].push(user);
        }
        for (s, users) in placed.iter().enumerate() {
            let mut on: Vec<usize> = matching
                .players_on(ResourceId(s))
                .iter()
                .map(|p| p.0)
                .collect();
            on.sort_unstable();
            let mut expected: Vec<usize> = users.iter().map(|u| u.0).collect();
            expected.sort_unstable();
            assert_eq!(on, expected);
        }
    }
}

#[test]
fn utsa_never_ends_above_its_greedy_start() {
    let config = SchedulerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    for _ in 0..20 {
        let users = rng.random_range(4..=12usize);
        let inst = random_instance(users, 1, &mut rng);
        let influence = CrossInfluence::new(&inst.geometry, config.epsilon);
        let (greedy, _) = utsa_phase1(&inst.geometry, &influence, &inst.vehicles, &config).unwrap();
        let out = utsa(&inst.geometry, &influence, &inst.vehicles, &config, &mut rng).unwrap();
        assert_eq!(out.phase1.len(), inst.vehicles.len());
        let start = network_influence(&inst.geometry, &greedy, config.epsilon);
        let end = network_influence(&inst.geometry, &out.matching, config.epsilon);
        assert!(end <= start + 1e-9 * start.abs(), "{end} > {start}");
        if out.rotations.is_empty() {
            assert_eq!(out.matching, greedy);
        }
    }
}

#[test]
fn single_transmitter_takes_its_best_channels() {
    let radio = RadioConfig::default();
    let params = link_params(&radio);
    let slot = SlotId::from_index(0);
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    for _ in 0..20 {
        let (geometry, txs) = random_channel_instance(6, 1, &mut rng);
        let link = LinkModel::new(&geometry, &radio, rng.random());
        let config = SchedulerConfig::default();
        let out = rmsa(&link, slot, &txs, params, &config, &mut rng).unwrap();
        let objective = ChannelObjective::new(
            &link,
            slot,
            &txs,
            config.max_channels_per_tx,
            params,
            config.max_overlap,
        );
        let mut utilities: Vec<f64> = (0..config.channels)
            .map(|k| objective.channel_utility(ChannelId::from_index(k), &txs))
            .collect();
        utilities.sort_by(|a, b| b.total_cmp(a));
        let best: f64 = utilities.iter().take(config.max_channels_per_tx).sum();
        assert!(
            (out.utility - best).abs() <= 1e-9 * best.abs().max(1.0),
            "{} vs exhaustive {best}",
            out.utility
        );
    }
}

#[test]
fn pair_swaps_only_when_rotations_are_capped_at_two() {
    let members: Vec<Member> = (0..5)
        .map(player)
        .chain([Member::Dummy(Some(ResourceId(0))), Member::Dummy(None)])
        .collect();
    let space = RotationSpace::new(members, 2, 1);
    let all: Vec<Vec<Member>> = space.subsets().collect();
    assert!(all.iter().all(|s| s.len() == 2));
    // C(5, 2) player pairs plus 5 * 2 player-dummy pairs.
    assert_eq!(all.len(), 10 + 10);
}
