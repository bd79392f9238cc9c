//! One verdict line per acceptance criterion.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use noma_v2x::channel::{LinkModel, RadioConfig};
use noma_v2x::config::{Config, Scheme, Sweep, SweepVar};
use noma_v2x::harness::{execute, summarize, write_outputs, Plan, PointSummary, RunStatus, Summary};
use noma_v2x::ids::{ChannelId, SlotId, UserId};
use noma_v2x::matching::counting::{
    count_invalid_rotations, count_rotation_sequences, invalid_rotation_lower_bound,
    valid_rotation_upper_bound,
};
use noma_v2x::matching::{
    apply_rotation, enumerate_rotations, is_q_exchange_stable, Matching, Member, Objective,
    PlayerId, ResourceId, RotationRecord, RotationSequence, RotationSpace, SearchOptions,
};
use noma_v2x::metrics::latency_required_rate;
use noma_v2x::powerctrl::{solve_power, solve_power_closed_form, FeedbackRow};
use noma_v2x::scheduler::feasibility::feasibility_bound;
use noma_v2x::scheduler::influence::{CrossInfluence, TimeObjective};
use noma_v2x::scheduler::rmsa::{channel_space, rmsa, ChannelObjective};
use noma_v2x::scheduler::utsa::{time_space, utsa, utsa_phase1};
use noma_v2x::scheduler::SchedulerConfig;
use noma_v2x::sim::{link_params, run_scheme};
use noma_v2x::verify::{random_channel_instance, random_instance};

use crate::support::{
    brute_max_min_degree, forbidden_co_matches, network_influence, rotated_forbidden, subsets,
    verdict,
};

const Q_MAX: usize = 4;

/// True when some valid rotation of `space` strictly improves `objective`
/// on the whole matching; `admissible` adds the problem constraints.
fn exhaustive_improvement(
    matching: &Matching,
    space: &RotationSpace,
    total: &dyn Fn(&Matching) -> f64,
    admissible: &dyn Fn(&Matching, &[Member]) -> bool,
    minimize: bool,
) -> Option<RotationSequence> {
    let before = total(matching);
    for subset in subsets(space.members(), space.q_max(), space.max_dummies()) {
        for shift in 1..subset.len() {
            let seq = RotationSequence::new(subset.clone(), shift).expect("well-formed");
            let Ok(after_matching) = apply_rotation(matching, &seq) else {
                continue;
            };
            if rotated_forbidden(&after_matching, &subset) || !admissible(&after_matching, &subset) {
                continue;
            }
            let after = total(&after_matching);
            let margin = 1e-9 * before.abs().max(after.abs()) + 1e-12;
            let better = if minimize {
                after < before - margin
            } else {
                after > before + margin
            };
            if better {
                return Some(seq);
            }
        }
    }
    None
}

#[test]
fn stability() {
    let start = Instant::now();
    let config = SchedulerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut problems = Vec::new();
    let mut largest = 0;
    for i in 0..50 {
        let users = rng.random_range(2..=12usize);
        let extra = rng.random_range(0..=2usize);
        let inst = random_instance(users, extra, &mut rng);
        largest = largest.max(users);
        let influence = CrossInfluence::new(&inst.geometry, config.epsilon);
        let out = match utsa(&inst.geometry, &influence, &inst.vehicles, &config, &mut rng) {
            Ok(o) => o,
            Err(e) => {
                problems.push(format!("time instance {i}: {e}"));
                continue;
            }
        };
        let space = time_space(&inst.vehicles, inst.geometry.slots(), Q_MAX);
        let objective = TimeObjective {
            influence: &influence,
        };
        let mut m = out.matching.clone();
        let certified = is_q_exchange_stable(&mut m, &space, &objective, &SearchOptions::default());
        let epsilon = config.epsilon;
        let geometry = &inst.geometry;
        let oracle = exhaustive_improvement(
            &out.matching,
            &space,
            &|m| network_influence(geometry, m, epsilon),
            &|_, _| true,
            true,
        );
        if !matches!(certified, Ok(true)) || oracle.is_some() {
            problems.push(format!(
                "time instance {i} (N={users}): certified {certified:?}, oracle found {oracle:?}"
            ));
        }
    }
    let radio = RadioConfig::default();
    let params = link_params(&radio);
    let slot = SlotId::from_index(0);
    let mut channel_done = 0;
    let mut attempt = 0u64;
    while channel_done < 50 && attempt < 1000 {
        attempt += 1;
        let tx = rng.random_range(1..=8usize);
        let users = tx + rng.random_range(1..=6usize);
        let channels = rng.random_range(2..=5usize);
        let config = SchedulerConfig {
            channels,
            max_channels_per_tx: rng.random_range(1..=2usize),
            ..SchedulerConfig::default()
        };
        let (geometry, txs) = random_channel_instance(users, tx, &mut rng);
        let link = LinkModel::new(&geometry, &radio, rng.random());
        let Ok(out) = rmsa(&link, slot, &txs, params, &config, &mut rng) else {
            continue;
        };
        channel_done += 1;
        let seats = config.max_channels_per_tx;
        let objective = ChannelObjective::new(&link, slot, &txs, seats, params, config.max_overlap);
        let space = channel_space(txs.len() * seats, channels, Q_MAX);
        let mut m = out.matching.clone();
        let certified = is_q_exchange_stable(&mut m, &space, &objective, &SearchOptions::default());
        let admissible = |m: &Matching, _: &[Member]| {
            channel_constraints_hold(&geometry, m, &txs, seats, channels, config.max_overlap)
        };
        let oracle = exhaustive_improvement(
            &out.matching,
            &space,
            &|m| objective.total(m),
            &admissible,
            false,
        );
        if !matches!(certified, Ok(true)) || oracle.is_some() {
            problems.push(format!(
                "channel instance {attempt} (N_tx={tx}, K={channels}): certified {certified:?}, oracle found {oracle:?}"
            ));
        }
    }
    let elapsed = start.elapsed();
    let ok = problems.is_empty() && channel_done == 50 && elapsed < Duration::from_secs(300);
    verdict(
        "stability",
        ok,
        &format!(
            "50 time instances (N <= {largest}) and {channel_done} channel instances certified, q_max = {Q_MAX}, {:.1} s{}",
            elapsed.as_secs_f64(),
            problems.first().map_or(String::new(), |p| format!("; {p}"))
        ),
    );
}

/// Every transmitter keeps a sub-channel and every receiver hears at most
/// `max_overlap` co-channel transmitters, from the seat table alone.
fn channel_constraints_hold(
    geometry: &noma_v2x::scenario::Geometry,
    m: &Matching,
    txs: &[UserId],
    seats: usize,
    channels: usize,
    max_overlap: usize,
) -> bool {
    let slot = SlotId::from_index(0);
    let held = |t: usize| -> Vec<usize> {
        (0..seats)
            .flat_map(|j| m.resources_of(PlayerId(t * seats + j)).iter().map(|r| r.0))
            .collect()
    };
    for t in 0..txs.len() {
        let h = held(t);
        let mut distinct = h.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if h.is_empty() || distinct.len() != h.len() {
            return false;
        }
    }
    for k in 0..channels {
        let on: Vec<UserId> = (0..txs.len())
            .filter(|&t| held(t).contains(&k))
            .map(|t| txs[t])
            .collect();
        for rx in 0..geometry.users() {
            let rx = UserId(rx);
            if on.contains(&rx) {
                continue;
            }
            let heard = on
                .iter()
                .filter(|&&tx| geometry.distance(tx, rx, slot) <= geometry.range())
                .count();
            if heard > max_overlap {
                return false;
            }
        }
    }
    true
}

fn small_config() -> Config {
    let mut c = Config::preset("desk").expect("preset");
    c.scenario.n_users = 20;
    c
}

/// First index where `records` stop moving strictly in the given direction
/// or stop chaining.
fn broken_chain(records: &[RotationRecord], decreasing: bool) -> Option<usize> {
    records.iter().enumerate().position(|(i, r)| {
        let strict = if decreasing {
            r.total_after < r.total_before
        } else {
            r.total_after > r.total_before
        };
        let chained = i == 0 || records[i - 1].total_after == r.total_before;
        !strict || !chained
    })
}

#[test]
fn convergence() {
    let config = small_config();
    let mut problems = Vec::new();
    let (mut time_rotations, mut channel_rotations) = (0usize, 0usize);
    let floor = config.scenario.slots as f64 * config.scheduler.epsilon;
    for seed in 0..200u64 {
        let out = match run_scheme(&config, Scheme::NomaMcd, seed) {
            Ok(o) => o,
            Err(e) => {
                problems.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let time = &out.outcome.time_rotations;
        time_rotations += time.len();
        if let Some(i) = broken_chain(time, true) {
            problems.push(format!("seed {seed}: time rotation {i} not strictly decreasing"));
        }
        if time.iter().any(|r| r.total_after < floor) {
            problems.push(format!("seed {seed}: total below T_v * epsilon"));
        }
        if let Some(last) = time.last() {
            let geometry = noma_v2x::scenario::Geometry::new(&out.scenario, config.scenario.range_m);
            let mut m = Matching::new(geometry.users(), geometry.slots());
            for (slot, tx, _) in out.outcome.schedule.transmissions() {
                m.assign(PlayerId(tx.0), ResourceId(slot.index())).expect("ids");
            }
            let recomputed = network_influence(&geometry, &m, config.scheduler.epsilon);
            if (recomputed - last.total_after).abs() > 1e-6 * recomputed.abs().max(1.0) {
                problems.push(format!(
                    "seed {seed}: logged total {} but schedule gives {recomputed}",
                    last.total_after
                ));
            }
        }
        for (s, records) in out.outcome.channel_rotations.iter().enumerate() {
            channel_rotations += records.len();
            if let Some(i) = broken_chain(records, false) {
                problems.push(format!("seed {seed} slot {s}: channel rotation {i} not strictly increasing"));
            }
        }
    }
    verdict(
        "convergence",
        problems.is_empty() && time_rotations > 0 && channel_rotations > 0,
        &format!(
            "200 runs, {time_rotations} time rotations strictly decreasing, {channel_rotations} channel rotations strictly increasing{}",
            problems.first().map_or(String::new(), |p| format!("; {p}"))
        ),
    );
}

#[test]
fn feasibility() {
    let config = SchedulerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut problems = Vec::new();
    let mut phase1_runs = 0;
    for i in 0..100 {
        let users = rng.random_range(1..=10usize);
        let extra = if i % 2 == 0 { 0 } else { rng.random_range(1..=2usize) };
        let inst = random_instance(users, extra, &mut rng);
        let geometry = &inst.geometry;
        let report = feasibility_bound(geometry, &inst.vehicles);
        let oracle = (0..geometry.slots())
            .map(|s| {
                let slot = SlotId::from_index(s);
                let n = inst.vehicles.len();
                let mut edges = Vec::new();
                for a in 0..n {
                    for b in a + 1..n {
                        let d = geometry.distance(inst.vehicles[a], inst.vehicles[b], slot);
                        if d <= geometry.range() {
                            edges.push((a, b));
                        }
                    }
                }
                brute_max_min_degree(&edges, n) + 1
            })
            .max()
            .unwrap_or(0);
        if report.bound != oracle {
            problems.push(format!("instance {i}: bound {} but exhaustive {oracle}", report.bound));
        }
        if report.bound <= geometry.slots() {
            phase1_runs += 1;
            let influence = CrossInfluence::new(geometry, config.epsilon);
            match utsa_phase1(geometry, &influence, &inst.vehicles, &config) {
                Ok((m, _)) => {
                    let clashes = forbidden_co_matches(geometry, &m);
                    let all_once = inst
                        .vehicles
                        .iter()
                        .all(|u| m.resources_of(PlayerId(u.0)).len() == 1);
                    if !clashes.is_empty() || !all_once {
                        problems.push(format!("instance {i}: phase 1 clashes {clashes:?}"));
                    }
                }
                Err(e) => problems.push(format!("instance {i}: phase 1 failed: {e}")),
            }
        }
    }
    verdict(
        "feasibility",
        problems.is_empty(),
        &format!(
            "100 instances (N <= 10): bound equals exhaustive degeneracy + 1; {phase1_runs} phase-1 runs forbidden-pair free{}",
            problems.first().map_or(String::new(), |p| format!("; {p}"))
        ),
    );
}

/// Set partitions of `n` players as block labels, with players 0 and 1 in
/// different blocks.
fn plantings(n: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = vec![vec![0]];
    for _ in 1..n {
        let mut next = Vec::new();
        for p in &all {
            let blocks = p.iter().max().map_or(0, |m| m + 1);
            for b in 0..=blocks {
                let mut q = p.clone();
                q.push(b);
                next.push(q);
            }
        }
        all = next;
    }
    all.into_iter().filter(|p| p.len() < 2 || p[0] != p[1]).collect()
}

/// Rotations (every subset, every shift up to the identity) after which
/// players 0 and 1 share a slot.
fn invalid_by_hand(slots: &[usize]) -> usize {
    let n = slots.len();
    let mut count = 0;
    for mask in 1u32..(1u32 << n) {
        let members: Vec<usize> = (0..n).filter(|&p| mask & (1 << p) != 0).collect();
        let len = members.len();
        for shift in 1..=len {
            let mut after = slots.to_vec();
            for (t, &p) in members.iter().enumerate() {
                after[p] = slots[members[(t + shift) % len]];
            }
            if n >= 2 && after[0] == after[1] {
                count += 1;
            }
        }
    }
    count
}

fn planted_matching(slots: &[usize]) -> Matching {
    let n = slots.len();
    let mut m = Matching::new(n, n);
    for (p, &s) in slots.iter().enumerate() {
        m.set_player_capacity(PlayerId(p), 1).expect("player");
        m.assign(PlayerId(p), ResourceId(s)).expect("assign");
    }
    for r in 0..n {
        m.forbid(PlayerId(0), PlayerId(1), ResourceId(r)).expect("ids");
    }
    m
}

#[test]
fn counting() {
    let mut problems = Vec::new();
    for n in 1..=8usize {
        let members: Vec<Member> = (0..n).map(|p| Member::Player(PlayerId(p))).collect();
        let enumerated = enumerate_rotations(&members, n).count() as u128;
        let series: u128 = (1..=n)
            .map(|q| {
                let c = (0..q).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128);
                q as u128 * c
            })
            .sum();
        let closed = n as u128 * (1u128 << (n - 1));
        let library = count_rotation_sequences(n as u64, n as u64);
        if enumerated != closed || series != closed || library != closed {
            problems.push(format!(
                "N={n}: enumerated {enumerated}, series {series}, library {library}, N*2^(N-1) {closed}"
            ));
        }
        if n >= 2 {
            for f in 0..=(n * (n - 1) / 2) as u64 {
                let sum = invalid_rotation_lower_bound(n as u64, f) + valid_rotation_upper_bound(n as u64, f);
                if sum != Ratio::from_integer(closed as i128) {
                    problems.push(format!("N={n}, F={f}: lower + upper = {sum}"));
                }
            }
        }
    }
    let mut bound_lines = Vec::new();
    for n in 2..=6usize {
        let mut best = 0;
        for planting in plantings(n) {
            let by_hand = invalid_by_hand(&planting);
            let players: Vec<PlayerId> = (0..n).map(PlayerId).collect();
            let library = count_invalid_rotations(&planted_matching(&planting), &players, n);
            if by_hand != library {
                problems.push(format!("N={n} planting {planting:?}: {by_hand} by hand, {library} counted"));
            }
            best = best.max(by_hand);
        }
        let bound = invalid_rotation_lower_bound(n as u64, 1);
        bound_lines.push(format!("N={n}: {best} vs {bound}"));
        if Ratio::from_integer(best as i128) < bound {
            problems.push(format!(
                "N={n}: at most {best} invalid rotations over every planting, bound {bound}"
            ));
        }
    }
    verdict(
        "counting",
        problems.is_empty(),
        &format!(
            "counts equal N*2^(N-1) for N <= 8; lower + upper = total; invalid rotations with one forbidden pair (max enumerated vs bound) {}{}",
            bound_lines.join(", "),
            if problems.is_empty() {
                String::new()
            } else {
                format!("; {}", problems.join("; "))
            }
        ),
    );
}

fn served(rows: &[FeedbackRow], power: f64, threshold: f64) -> usize {
    rows.iter()
        .filter(|r| (1.0 + power * r.snr / (1.0 + r.interference)).log2() >= threshold)
        .count()
}

#[test]
fn power_control() {
    let max_power = RadioConfig::default().max_power_w();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut problems = Vec::new();
    let (mut feasible, mut minimality) = (0, 0);
    for i in 0..1000 {
        let n = rng.random_range(1..=12usize);
        let rows: Vec<FeedbackRow> = (0..n)
            .map(|m| FeedbackRow {
                rx: UserId(m + 1),
                tx: UserId(0),
                channel: ChannelId::from_index(0),
                interference: if rng.random_bool(0.3) {
                    0.0
                } else {
                    10f64.powf(rng.random_range(-2.0..3.0))
                },
                snr: 10f64.powf(rng.random_range(-1.0..5.0)),
            })
            .collect();
        let w = rng.random_range(0.05..=1.0);
        let rate = rng.random_range(0.5..3.0);
        let need = ((w * n as f64).ceil() as usize).clamp(1, n);
        let mut thresholds: Vec<f64> = rows
            .iter()
            .map(|r| (2f64.powf(rate) - 1.0) * (1.0 + r.interference) / r.snr)
            .collect();
        thresholds.sort_by(f64::total_cmp);
        let oracle = thresholds[need - 1];
        let exact = solve_power_closed_form(&rows, w, rate, max_power);
        let bisect = match solve_power(&rows, w, rate, max_power, 1e-6) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("instance {i}: {e}"));
                continue;
            }
        };
        if oracle > max_power {
            if bisect.satisfied || exact.satisfied {
                problems.push(format!("instance {i}: infeasible link reported satisfied"));
            }
            continue;
        }
        feasible += 1;
        let ok = bisect.satisfied
            && (bisect.power - oracle).abs() <= 1e-6 * max_power
            && (exact.power - oracle).abs() <= 1e-12 * max_power
            && served(&rows, bisect.power, rate) >= need
            && (0.0..=max_power).contains(&bisect.power);
        if !ok {
            problems.push(format!(
                "instance {i}: bisection {} closed form {} oracle {oracle}",
                bisect.power, exact.power
            ));
        }
        if bisect.power > 0.0 {
            minimality += 1;
            let below = (bisect.power - 1e-5 * max_power).max(0.0);
            if served(&rows, below, rate) >= need {
                problems.push(format!("instance {i}: {below} W still serves {need}"));
            }
        }
    }
    verdict(
        "power_control",
        problems.is_empty(),
        &format!(
            "1000 instances ({feasible} feasible): bisection within 1e-6*P of the order statistic, rate and power limits hold, {minimality} minimality witnesses{}",
            problems.first().map_or(String::new(), |p| format!("; {p}"))
        ),
    );
}

#[test]
fn constraint_compliance() {
    let config = small_config();
    let mut problems = Vec::new();
    let mut runs = 0;
    for seed in 0..200u64 {
        for scheme in Scheme::ALL {
            let out = match run_scheme(&config, scheme, seed) {
                Ok(o) => o,
                Err(e) => {
                    problems.push(format!("{scheme} seed {seed}: {e}"));
                    continue;
                }
            };
            runs += 1;
            if !out.report.is_ok() {
                problems.push(format!("{scheme} seed {seed}: {}", out.report.violations[0]));
            }
            let geometry = noma_v2x::scenario::Geometry::new(&out.scenario, config.scenario.range_m);
            let schedule = &out.outcome.schedule;
            let k_max = match scheme {
                Scheme::Oma => 1,
                _ => config.scheduler.max_channels_per_tx,
            };
            let mut slots_used: BTreeMap<UserId, usize> = BTreeMap::new();
            for slot in schedule.slot_ids() {
                let txs: Vec<UserId> = schedule.transmitters(slot).collect();
                for (i, &a) in txs.iter().enumerate() {
                    *slots_used.entry(a).or_default() += 1;
                    let chs = schedule.channels_of(slot, a);
                    if chs.is_empty() || chs.len() > k_max {
                        problems.push(format!("{scheme} seed {seed}: {a} holds {} channels", chs.len()));
                    }
                    for &b in &txs[i + 1..] {
                        if geometry.distance(a, b, slot) <= geometry.range() {
                            problems.push(format!("{scheme} seed {seed}: {a} and {b} share {slot}"));
                        }
                    }
                }
            }
            if slots_used.values().any(|&n| n > config.scheduler.max_tx_slots) {
                problems.push(format!("{scheme} seed {seed}: a vehicle exceeds its slot budget"));
            }
        }
    }
    verdict(
        "constraint_compliance",
        problems.is_empty(),
        &format!(
            "{runs} schedules from 200 seeds of every scheme pass the validator and an independent scan{}",
            problems.first().map_or(String::new(), |p| format!("; {p}"))
        ),
    );
}

struct SweepResult {
    summary: Summary,
    elapsed: Duration,
    failed: usize,
}

impl SweepResult {
    fn series(&self, scheme: Scheme) -> Vec<&PointSummary> {
        self.summary.points.iter().filter(|p| p.scheme == scheme).collect()
    }

    fn prp(&self, scheme: Scheme) -> Vec<f64> {
        self.series(scheme)
            .iter()
            .map(|p| p.prp.mean.unwrap_or(f64::NAN))
            .collect()
    }

    fn latency(&self, scheme: Scheme) -> Vec<f64> {
        self.series(scheme)
            .iter()
            .map(|p| p.latency_ratio.mean.unwrap_or(f64::NAN))
            .collect()
    }

    fn table(&self, metric: fn(&PointSummary) -> (Option<f64>, Option<f64>)) -> String {
        Scheme::ALL
            .iter()
            .map(|&s| {
                let cells: Vec<String> = self
                    .series(s)
                    .iter()
                    .map(|p| match metric(p) {
                        (Some(m), Some(c)) => format!("{m:.4}±{c:.4}"),
                        (Some(m), None) => format!("{m:.4}"),
                        _ => "-".into(),
                    })
                    .collect();
                format!("{s} [{}]", cells.join(", "))
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn budget_ok(&self) -> bool {
        self.failed == 0 && self.elapsed < Duration::from_secs(30 * 60)
    }

    fn footer(&self) -> String {
        format!(
            "{} seeds/point, {} failed runs, {:.0} s",
            self.summary.seeds_per_point,
            self.failed,
            self.elapsed.as_secs_f64()
        )
    }
}

fn run_sweep(var: SweepVar, values: &[f64]) -> SweepResult {
    let mut config = Config::preset("desk").expect("preset");
    config.experiment.sweep = Some(Sweep {
        var,
        values: values.to_vec(),
    });
    let plan = Plan::new(config).expect("plan");
    let start = Instant::now();
    let rows = execute(&plan, plan.base.experiment.jobs).expect("runs");
    let elapsed = start.elapsed();
    SweepResult {
        summary: summarize(&plan, &rows),
        elapsed,
        failed: rows.iter().filter(|r| r.status == RunStatus::Failed).count(),
    }
}

fn nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

fn nondecreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0])
}

fn prp_cells(p: &PointSummary) -> (Option<f64>, Option<f64>) {
    (p.prp.mean, p.prp.ci95)
}

fn latency_cells(p: &PointSummary) -> (Option<f64>, Option<f64>) {
    (p.latency_ratio.mean, p.latency_ratio.ci95)
}

#[test]
fn trend_velocity() {
    let result = run_sweep(SweepVar::Velocity, &[15.0, 30.0, 45.0, 60.0]);
    let mcd = result.prp(Scheme::NomaMcd);
    let oma = result.prp(Scheme::Oma);
    let gga = result.prp(Scheme::NomaGga);
    let dominates = (0..mcd.len()).all(|i| mcd[i] >= oma[i] && mcd[i] >= gga[i]);
    let gap: Vec<f64> = mcd.iter().zip(&oma).map(|(a, b)| a - b).collect();
    let shrinking = nonincreasing(&gap) && gap.last() < gap.first();
    let gap_text: Vec<String> = gap.iter().map(|g| format!("{g:+.4}")).collect();
    verdict(
        "trend_velocity",
        dominates && shrinking && result.budget_ok(),
        &format!(
            "v = 15..60 km/h; MCD >= OMA and GGA at every point: {dominates}; MCD-OMA gap [{}] shrinking: {shrinking}; PRP {}; {}",
            gap_text.join(", "),
            result.table(prp_cells),
            result.footer()
        ),
    );
}

#[test]
fn trend_range() {
    let result = run_sweep(SweepVar::Range, &[100.0, 150.0, 200.0, 250.0]);
    let monotone: Vec<(Scheme, bool)> = Scheme::ALL
        .iter()
        .map(|&s| (s, nonincreasing(&result.prp(s))))
        .collect();
    let ok = monotone.iter().all(|&(_, m)| m);
    verdict(
        "trend_range",
        ok && result.budget_ok(),
        &format!(
            "r = 100..250 m; PRP nonincreasing {monotone:?}; PRP {}; {}",
            result.table(prp_cells),
            result.footer()
        ),
    );
}

#[test]
fn trend_rate_threshold() {
    let thresholds = [1.0, 1.5, 2.0, 2.5];
    let result = run_sweep(SweepVar::RateThreshold, &thresholds);
    let config = Config::preset("desk").expect("preset");
    let mut checks = Vec::new();
    for s in Scheme::ALL {
        let ratio = result.latency(s);
        let required = config.required_rate(s);
        let saturated = thresholds
            .iter()
            .zip(&ratio)
            .filter(|(&t, _)| t >= required)
            .all(|(_, &r)| r == 1.0);
        checks.push((s, nondecreasing(&ratio), saturated));
    }
    let ok = checks.iter().all(|&(_, a, b)| a && b);
    verdict(
        "trend_rate_threshold",
        ok && result.budget_ok(),
        &format!(
            "R_th = 1.0..2.5; (scheme, nondecreasing, 1.0 once R_th >= required) {checks:?}; latency {}; {}",
            result.table(latency_cells),
            result.footer()
        ),
    );
}

#[test]
fn trend_k_max() {
    let result = run_sweep(SweepVar::MaxChannelsPerTx, &[1.0, 2.0, 3.0, 4.0]);
    let mut checks = Vec::new();
    for s in [Scheme::NomaMcd, Scheme::NomaGga] {
        let prp = result.prp(s);
        let steps: Vec<f64> = prp.windows(2).map(|w| w[1] - w[0]).collect();
        let saturating = steps.windows(2).all(|w| w[1] <= w[0]);
        checks.push((s, nondecreasing(&prp), saturating));
    }
    let ok = checks.iter().all(|&(_, a, b)| a && b);
    verdict(
        "trend_k_max",
        ok && result.budget_ok(),
        &format!(
            "K_max = 1..4; (scheme, nondecreasing, shrinking increments) {checks:?}; PRP {}; {}",
            result.table(prp_cells),
            result.footer()
        ),
    );
}

/// `x` rounded to three significant figures, as printed.
fn three_figures(x: f64) -> String {
    let decimals = (2 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

#[test]
fn latency_thresholds() {
    let config = Config::preset("full").expect("preset");
    let slot = config.scenario.slot_duration_s;
    let bits = config.latency.packet_bits;
    let noma_hand = bits / ((1.0 - config.latency.control_fraction) * slot * config.radio.subchannel_bandwidth_hz);
    let oma_hand = bits / (slot * config.oma.subchannel_bandwidth_hz);
    let noma = config.required_rate(Scheme::NomaMcd);
    let oma = config.required_rate(Scheme::Oma);
    let direct = latency_required_rate(bits, config.latency.control_fraction, slot, config.radio.subchannel_bandwidth_hz);
    let ok = three_figures(noma) == "1.41"
        && three_figures(oma) == "2.40"
        && (noma - noma_hand).abs() < 1e-12
        && (oma - oma_hand).abs() < 1e-12
        && (direct - noma).abs() < 1e-12;
    verdict(
        "latency_thresholds",
        ok,
        &format!(
            "NOMA {} ({noma:.5}) and OMA {} ({oma:.5}) bits/s/Hz",
            three_figures(noma),
            three_figures(oma)
        ),
    );
}

#[test]
fn determinism() {
    let mut config = Config::preset("desk").expect("preset");
    config.experiment.seeds_per_point = 3;
    config.experiment.sweep = Some(Sweep {
        var: SweepVar::Velocity,
        values: vec![15.0, 60.0],
    });
    let plan = Plan::new(config).expect("plan");
    let dirs = [tempfile::tempdir().expect("dir"), tempfile::tempdir().expect("dir")];
    let mut contents = Vec::new();
    for (i, dir) in dirs.iter().enumerate() {
        let rows = execute(&plan, if i == 0 { 1 } else { 0 }).expect("runs");
        let files = write_outputs(dir.path(), &rows, &summarize(&plan, &rows)).expect("write");
        contents.push((
            std::fs::read(&files.runs).expect("runs.csv"),
            std::fs::read(&files.summary).expect("summary.json"),
        ));
    }
    let same = contents[0] == contents[1];
    verdict(
        "determinism",
        same && !contents[0].0.is_empty(),
        &format!(
            "two executions of the same plan: runs.csv {} bytes, summary.json {} bytes, identical: {same}",
            contents[0].0.len(),
            contents[0].1.len()
        ),
    );
}
