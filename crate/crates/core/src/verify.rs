//! Self-verification: invariant suites over random small instances.
//!
//! Each check is named after the invariant it exercises. `Fast` runs a few
//! instances per check; `Full` adds exhaustive stability certification for
//! up to 12 users, the counting cross-checks up to 8 users and bisection
//! minimality witnesses.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{LinkModel, RadioConfig};
use crate::config::{Config, Scheme};
use crate::ids::{SlotId, UserId};
use crate::matching::counting::{
    count_invalid_rotations, count_rotation_sequences, invalid_rotation_lower_bound,
    valid_rotation_upper_bound,
};
use crate::matching::{
    enumerate_rotations, is_q_exchange_stable, is_valid, local_search, LocalSearchConfig, Matching,
    Member, Objective, PlayerId, ResourceId, RotationRecord, RotationSpace, Scope, SearchOptions,
    Sense,
};
use crate::powerctrl::{required_receivers, solve_power, solve_power_closed_form, FeedbackRow};
use crate::scenario::{Geometry, KinematicState, Role, Scenario, ScenarioConfig};
use crate::scheduler::feasibility::{conflict_graph, feasibility_bound};
use crate::scheduler::influence::{network_cross_influence, CrossInfluence, TimeObjective};
use crate::scheduler::rmsa::{channel_space, rmsa, ChannelObjective, LinkParams};
use crate::scheduler::utsa::{time_space, utsa, utsa_phase1};
use crate::scheduler::SchedulerConfig;
use crate::ids::ChannelId;
use crate::sim::{link_params, run_scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    /// Disables the rotation validity check inside every search.
    pub planted_bug: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            write!(f, "PASS {} ({} cases)", self.name, self.cases)
        } else {
            write!(
                f,
                "FAIL {} ({} of {} cases): {}",
                self.name,
                self.failures.len(),
                self.cases,
                self.failures[0]
            )
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failed_names(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.name)
            .collect()
    }
}

/// Collects cases and failure messages for one named check.
struct Tally {
    name: &'static str,
    cases: usize,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            cases: 0,
            failures: Vec::new(),
        }
    }

    fn case(&mut self, ok: bool, message: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(message());
        }
    }

    fn done(self) -> CheckResult {
        CheckResult {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
        }
    }
}

/// A random small road instance with enough slots for a forbidden-pair-free
/// time assignment.
#[derive(Debug, Clone)]
pub struct Instance {
    pub scenario: Scenario,
    pub geometry: Geometry,
    pub vehicles: Vec<UserId>,
}

/// `users` vehicles on a two-way road stretch sized so neighbourhoods
/// overlap, with `extra_slots` slots beyond the feasibility bound.
pub fn random_instance<R: Rng + ?Sized>(users: usize, extra_slots: usize, rng: &mut R) -> Instance {
    let range = 150.0;
    let length = (users as f64 * 60.0).max(200.0);
    let states: Vec<KinematicState> = (0..users)
        .map(|_| {
            let lane = rng.random_range(0..4usize);
            let dir = if lane < 2 { 1.0 } else { -1.0 };
            KinematicState {
                position: [rng.random_range(0.0..length), 3.5 * lane as f64],
                velocity: [dir * rng.random_range(4.0..17.0), 0.0],
                role: Role::Vehicle,
            }
        })
        .collect();
    let mut slots = 1;
    loop {
        let scenario = Scenario::from_users(
            ScenarioConfig {
                n_users: users,
                slots,
                range_m: range,
                ..Default::default()
            },
            states.clone(),
        );
        let geometry = Geometry::new(&scenario, range);
        let vehicles = scenario.vehicles();
        let bound = feasibility_bound(&geometry, &vehicles).bound.max(1);
        if bound <= slots {
            if extra_slots == 0 {
                return Instance {
                    scenario,
                    geometry,
                    vehicles,
                };
            }
            let scenario = Scenario::from_users(
                ScenarioConfig {
                    n_users: users,
                    slots: slots + extra_slots,
                    range_m: range,
                    ..Default::default()
                },
                states,
            );
            let geometry = Geometry::new(&scenario, range);
            return Instance {
                scenario,
                geometry,
                vehicles,
            };
        }
        slots = bound;
    }
}

/// Max over nonempty vertex subsets of the induced minimum degree.
pub fn max_min_degree(adjacency: &[Vec<usize>]) -> usize {
    let n = adjacency.len();
    assert!(n <= 20, "exhaustive subset scan");
    let mut best = 0;
    for mask in 1u32..(1u32 << n) {
        let min_degree = (0..n)
            .filter(|&v| mask & (1 << v) != 0)
            .map(|v| adjacency[v].iter().filter(|&&w| mask & (1 << w) != 0).count())
            .min()
            .unwrap_or(0);
        best = best.max(min_degree);
    }
    best
}

/// Replays `records` from `initial`, checking each is valid and that the
/// result equals `last`. Returns the first problem found.
pub fn replay_rotations(
    initial: &Matching,
    records: &[RotationRecord],
    last: &Matching,
) -> Result<(), String> {
    let mut m = initial.clone();
    for (i, r) in records.iter().enumerate() {
        match is_valid(&m, &r.sequence) {
            Ok(true) => {}
            Ok(false) => return Err(format!("rotation {i} {:?} is not valid", r.sequence)),
            Err(e) => return Err(format!("rotation {i}: {e}")),
        }
        m = crate::matching::apply_rotation(&m, &r.sequence).map_err(|e| e.to_string())?;
    }
    if &m == last {
        Ok(())
    } else {
        Err("replayed matching differs from the search result".into())
    }
}

/// First record whose objective does not move strictly in `sense`.
pub fn first_non_monotone(records: &[RotationRecord], sense: Sense) -> Option<usize> {
    records.iter().position(|r| match sense {
        Sense::Minimize => !(r.total_after < r.total_before),
        Sense::Maximize => !(r.total_after > r.total_before),
    })
}

fn scheduler_config(options: &VerifyOptions) -> SchedulerConfig {
    SchedulerConfig {
        check_validity: !options.planted_bug,
        ..SchedulerConfig::default()
    }
}

/// Objective that rewards crowding, so the only improving rotations put a
/// forbidden pair together.
struct Crowding;

impl Objective for Crowding {
    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn evaluate(&self, matching: &Matching, scope: &Scope) -> f64 {
        scope
            .resources
            .iter()
            .map(|&r| (matching.players_on(r).len() as f64).powi(2))
            .sum()
    }
}

fn crowding_trap(options: &VerifyOptions) -> Result<(), String> {
    let mut m = Matching::new(3, 2);
    for p in 0..3 {
        m.set_player_capacity(PlayerId(p), 1).map_err(|e| e.to_string())?;
    }
    m.assign(PlayerId(0), ResourceId(0)).map_err(|e| e.to_string())?;
    m.assign(PlayerId(1), ResourceId(0)).map_err(|e| e.to_string())?;
    m.assign(PlayerId(2), ResourceId(1)).map_err(|e| e.to_string())?;
    m.forbid(PlayerId(0), PlayerId(2), ResourceId(0))
        .map_err(|e| e.to_string())?;
    let initial = m.clone();
    let members = vec![
        Member::Player(PlayerId(0)),
        Member::Player(PlayerId(1)),
        Member::Player(PlayerId(2)),
        Member::Dummy(Some(ResourceId(0))),
        Member::Dummy(Some(ResourceId(1))),
    ];
    let space = RotationSpace::new(members, 4, 1);
    let config = LocalSearchConfig {
        random_draws_per_round: 0,
        max_rounds: 100,
        search: SearchOptions {
            check_validity: !options.planted_bug,
            ..SearchOptions::default()
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let records =
        local_search(&mut m, &space, &Crowding, &config, &mut rng).map_err(|e| e.to_string())?;
    replay_rotations(&initial, &records, &m)
}

struct TimeChecks {
    valid: Tally,
    stable: Tally,
    monotone: Tally,
    phase1: Tally,
}

fn time_checks(options: &VerifyOptions, instances: usize, max_users: usize, out: &mut TimeChecks) {
    let config = scheduler_config(options);
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(options.seed, &[1]));
    for i in 0..instances {
        let users = rng.random_range(2..=max_users);
        let extra = rng.random_range(0..3usize);
        let inst = random_instance(users, extra, &mut rng);
        let influence = CrossInfluence::new(&inst.geometry, config.epsilon);
        let label = format!("instance {i} (N={users}, T={})", inst.geometry.slots());
        let (initial, _) = match utsa_phase1(&inst.geometry, &influence, &inst.vehicles, &config) {
            Ok(x) => x,
            Err(e) => {
                out.phase1.case(false, || format!("{label}: {e}"));
                continue;
            }
        };
        out.phase1.case(initial.is_feasible(), || {
            format!("{label}: phase 1 left {:?}", initial.violations())
        });
        let mut search_rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(options.seed, &[2, i as u64]));
        let outcome = match utsa(&inst.geometry, &influence, &inst.vehicles, &config, &mut search_rng) {
            Ok(x) => x,
            Err(e) => {
                out.stable.case(false, || format!("{label}: {e}"));
                continue;
            }
        };
        let replay = replay_rotations(&initial, &outcome.rotations, &outcome.matching);
        out.valid.case(replay.is_ok(), || format!("{label}: {}", replay.unwrap_err()));
        let end = network_cross_influence(&influence, &outcome.matching);
        let logged = outcome.rotations.last().map(|r| r.total_after);
        let drift_ok = logged.is_none_or(|t| (t - end).abs() <= 1e-6 * end.abs().max(1.0));
        let bad = first_non_monotone(&outcome.rotations, Sense::Minimize);
        out.monotone.case(bad.is_none() && drift_ok, || {
            format!("{label}: rotation {bad:?} not decreasing or total drifted")
        });
        let space = time_space(&inst.vehicles, inst.geometry.slots(), config.q_max);
        let objective = TimeObjective {
            influence: &influence,
        };
        let mut m = outcome.matching.clone();
        let stable = is_q_exchange_stable(&mut m, &space, &objective, &SearchOptions::default());
        out.stable.case(matches!(stable, Ok(true)), || {
            format!("{label}: UTSA output admits an improving rotation")
        });
    }
}

/// A one-slot channel instance: `tx` transmitters among `users` vehicles.
pub fn random_channel_instance<R: Rng + ?Sized>(
    users: usize,
    tx: usize,
    rng: &mut R,
) -> (Geometry, Vec<UserId>) {
    let states: Vec<KinematicState> = (0..users)
        .map(|_| KinematicState {
            position: [rng.random_range(0.0..500.0), 3.5 * rng.random_range(0..4usize) as f64],
            velocity: [0.0, 0.0],
            role: Role::Vehicle,
        })
        .collect();
    let scenario = Scenario::from_users(
        ScenarioConfig {
            n_users: users,
            slots: 1,
            ..Default::default()
        },
        states,
    );
    let geometry = Geometry::new(&scenario, 150.0);
    (geometry, (0..tx).map(UserId).collect())
}

fn channel_checks(options: &VerifyOptions, instances: usize, max_tx: usize, out: &mut TimeChecks) {
    let radio = RadioConfig::default();
    let params: LinkParams = link_params(&radio);
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(options.seed, &[3]));
    let slot = SlotId::from_index(0);
    let mut done = 0;
    let mut attempt = 0u64;
    while done < instances && attempt < 20 * instances as u64 {
        attempt += 1;
        let tx = rng.random_range(1..=max_tx);
        let users = tx + rng.random_range(1..=6usize);
        let config = SchedulerConfig {
            channels: rng.random_range(2..=5usize),
            max_channels_per_tx: rng.random_range(1..=2usize),
            ..scheduler_config(options)
        };
        let (geometry, txs) = random_channel_instance(users, tx, &mut rng);
        let link = LinkModel::new(&geometry, &radio, rng.random());
        let mut search_rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(options.seed, &[4, attempt]));
        let Ok(outcome) = rmsa(&link, slot, &txs, params, &config, &mut search_rng) else {
            continue;
        };
        done += 1;
        let label = format!("channel instance {attempt} (N_tx={tx}, K={})", config.channels);
        let bad = first_non_monotone(&outcome.rotations, Sense::Maximize);
        out.monotone.case(bad.is_none(), || format!("{label}: rotation {bad:?} not increasing"));
        let seats = config.max_channels_per_tx;
        let objective =
            ChannelObjective::new(&link, slot, &txs, seats, params, config.max_overlap);
        let space = channel_space(txs.len() * seats, config.channels, config.q_max);
        let mut m = outcome.matching.clone();
        let stable = is_q_exchange_stable(&mut m, &space, &objective, &SearchOptions::default());
        out.stable.case(matches!(stable, Ok(true)), || {
            format!("{label}: RMSA output admits an improving rotation")
        });
        let violations = outcome.matching.violations();
        out.valid.case(violations.is_empty(), || format!("{label}: {violations:?}"));
    }
}

fn feasibility_check(options: &VerifyOptions, instances: usize) -> CheckResult {
    let mut t = Tally::new("feasibility_bound");
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(options.seed, &[5]));
    for i in 0..instances {
        let users = rng.random_range(1..=10usize);
        let inst = random_instance(users, 0, &mut rng);
        let report = feasibility_bound(&inst.geometry, &inst.vehicles);
        let oracle = (0..inst.geometry.slots())
            .map(|s| {
                let adj = conflict_graph(&inst.geometry, &inst.vehicles, SlotId::from_index(s));
                max_min_degree(&adj) + 1
            })
            .max()
            .unwrap_or(0);
        t.case(report.bound == oracle, || {
            format!("instance {i}: bound {} against exhaustive {oracle}", report.bound)
        });
    }
    t.done()
}

/// Matchings of `n` single-slot players over set partitions, with the pair
/// (0, 1) forbidden everywhere and never co-matched.
fn planted_partitions(n: usize) -> Vec<Matching> {
    fn partitions(n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![0]];
        for _ in 1..n {
            let mut next = Vec::new();
            for p in out {
                let blocks = p.iter().max().map_or(0, |m| m + 1);
                for b in 0..=blocks {
                    let mut q = p.clone();
                    q.push(b);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }
    partitions(n)
        .into_iter()
        .filter(|p| p[0] != p[1])
        .map(|p| {
            let mut m = Matching::new(n, n);
            for (player, &r) in p.iter().enumerate() {
                m.set_player_capacity(PlayerId(player), 1).expect("player");
                m.assign(PlayerId(player), ResourceId(r)).expect("assign");
            }
            for r in 0..n {
                m.forbid(PlayerId(0), PlayerId(1), ResourceId(r)).expect("ids");
            }
            m
        })
        .collect()
}

/// Largest invalid-rotation count over every feasible planting of one
/// forbidden pair among `n` players, with `q_max = n`.
pub fn max_invalid_rotations(n: usize) -> usize {
    let players: Vec<PlayerId> = (0..n).map(PlayerId).collect();
    planted_partitions(n)
        .iter()
        .map(|m| count_invalid_rotations(m, &players, n))
        .max()
        .unwrap_or(0)
}

fn counting_checks(max_n: usize, bound_range: std::ops::RangeInclusive<usize>) -> Vec<CheckResult> {
    let mut count = Tally::new("rotation_count");
    for n in 1..=max_n {
        let members: Vec<Member> = (0..n).map(|p| Member::Player(PlayerId(p))).collect();
        let enumerated = enumerate_rotations(&members, n).count() as u128;
        let closed = n as u128 * (1u128 << (n - 1));
        count.case(
            enumerated == closed && count_rotation_sequences(n as u64, n as u64) == closed,
            || format!("N={n}: enumerated {enumerated}, formula {closed}"),
        );
        if n >= 2 {
            for f in 0..=3u64 {
                let sum = invalid_rotation_lower_bound(n as u64, f)
                    + valid_rotation_upper_bound(n as u64, f);
                count.case(sum == num_rational::Ratio::from_integer(closed as i128), || {
                    format!("N={n}, F={f}: bounds sum to {sum}")
                });
            }
        }
    }
    let mut bound = Tally::new("invalid_rotation_bound");
    for n in bound_range {
        let found = max_invalid_rotations(n);
        let claimed = invalid_rotation_lower_bound(n as u64, 1);
        bound.case(
            num_rational::Ratio::from_integer(found as i128) >= claimed,
            || format!("N={n}: at most {found} invalid rotations, bound {claimed}"),
        );
    }
    vec![count.done(), bound.done()]
}

/// Random feedback rows for one link.
pub fn random_feedback<R: Rng + ?Sized>(rng: &mut R) -> Vec<FeedbackRow> {
    let n = rng.random_range(1..=12usize);
    (0..n)
        .map(|i| FeedbackRow {
            rx: UserId(i + 1),
            tx: UserId(0),
            channel: ChannelId::from_index(0),
            interference: if rng.random_bool(0.3) {
                0.0
            } else {
                10f64.powf(rng.random_range(-2.0..3.0))
            },
            snr: 10f64.powf(rng.random_range(-1.0..5.0)),
        })
        .collect()
}

fn served(rows: &[FeedbackRow], power: f64, threshold: f64) -> usize {
    rows.iter()
        .filter(|r| (1.0 + power * r.snr / (1.0 + r.interference)).log2() >= threshold)
        .count()
}

fn power_checks(options: &VerifyOptions, instances: usize, minimality: bool) -> Vec<CheckResult> {
    let mut closed = Tally::new("power_closed_form");
    let mut minimal = Tally::new("power_minimality");
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(options.seed, &[6]));
    let max_power = RadioConfig::default().max_power_w();
    let tol = 1e-6;
    for i in 0..instances {
        let rows = random_feedback(&mut rng);
        let w = rng.random_range(0.05..=1.0);
        let rth = rng.random_range(0.5..3.0);
        let Ok(bisect) = solve_power(&rows, w, rth, max_power, tol) else {
            closed.case(false, || format!("instance {i}: solver error"));
            continue;
        };
        let exact = solve_power_closed_form(&rows, w, rth, max_power);
        let need = required_receivers(rows.len(), w);
        let agree = bisect.satisfied == exact.satisfied
            && (bisect.power - exact.power).abs() <= tol * max_power
            && (!bisect.satisfied || served(&rows, bisect.power, rth) >= need)
            && (0.0..=max_power).contains(&bisect.power);
        closed.case(agree, || {
            format!(
                "instance {i}: bisection {:?} against closed form {:?}",
                bisect, exact
            )
        });
        if minimality && bisect.satisfied && bisect.power > 0.0 {
            let below = (bisect.power - 1e-5 * max_power).max(0.0);
            minimal.case(served(&rows, below, rth) < need, || {
                format!("instance {i}: power {below} still serves {need}")
            });
        }
    }
    let mut out = vec![closed.done()];
    if minimality {
        out.push(minimal.done());
    }
    out
}

fn schedule_check(options: &VerifyOptions, runs: usize) -> CheckResult {
    let mut t = Tally::new("schedule_constraints");
    let mut config = Config::default();
    config.scenario.n_users = 12;
    config.scenario.slots = 12;
    config.scheduler.check_validity = !options.planted_bug;
    for i in 0..runs {
        let seed = crate::seed::mix(options.seed, &[7, i as u64]);
        for scheme in Scheme::ALL {
            match run_scheme(&config, scheme, seed) {
                Ok(out) => t.case(out.report.is_ok(), || {
                    format!("{scheme} seed {seed}: {}", out.report.violations[0])
                }),
                Err(e) => t.case(false, || format!("{scheme} seed {seed}: {e}")),
            }
        }
    }
    t.done()
}

/// Runs the suite at `options.level`.
pub fn verify(options: &VerifyOptions) -> VerifyReport {
    let full = options.level == Level::Full;
    let mut checks = Vec::new();
    let mut time = TimeChecks {
        valid: Tally::new("is_valid"),
        stable: Tally::new("is_q_exchange_stable"),
        monotone: Tally::new("monotone_rotations"),
        phase1: Tally::new("phase1_forbidden_free"),
    };
    let trap = crowding_trap(options);
    time.valid
        .case(trap.is_ok(), || format!("crowding trap: {}", trap.unwrap_err()));
    let (instances, max_users) = if full { (20, 12) } else { (5, 8) };
    time_checks(options, instances, max_users, &mut time);
    channel_checks(options, if full { 20 } else { 5 }, if full { 8 } else { 4 }, &mut time);
    checks.extend([
        time.valid.done(),
        time.stable.done(),
        time.monotone.done(),
        time.phase1.done(),
    ]);
    checks.push(feasibility_check(options, if full { 100 } else { 20 }));
    checks.extend(if full {
        counting_checks(8, 4..=6)
    } else {
        counting_checks(6, 4..=5)
    });
    checks.extend(power_checks(options, if full { 1000 } else { 100 }, full));
    checks.push(schedule_check(options, if full { 20 } else { 3 }));
    VerifyReport { checks }
}
