//! Control-portion power adaptation.
//!
//! Each slot opens with `T_c` transmit/receive block pairs. In a transmit
//! block every scheduled transmitter announces its power per sub-channel;
//! the first block uses `p0`. In the following receive block every receiver
//! reports, for each co-channel transmitter whose stronger peers it can all
//! decode, the interference it would still see after cancelling them. Each
//! transmitter then picks the least power at which at least `ceil(w * |B|)`
//! of its reporting receivers reach the rate threshold, interference held
//! at the reported values. The powers of the last transmit block are used
//! for data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{achievable_rate, CoChannelTx, CsiView, LinkModel, SicReception};
use crate::ids::{ChannelId, SlotId, UserId};
use crate::scheduler::Schedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("invalid power config: {0}")]
    InvalidConfig(String),
    #[error("no receiver feedback to solve against")]
    EmptyFeedback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    /// Transmit/receive block pairs in the control portion (`T_c`).
    pub control_blocks: usize,
    /// First-block power as a fraction of the maximum.
    pub initial_power_fraction: f64,
    /// Fraction of reporting receivers that must reach the threshold (`w`).
    pub decode_fraction: f64,
    /// Bisection tolerance relative to the maximum power.
    pub tolerance: f64,
    /// Skip control and transmit at maximum power.
    pub disabled: bool,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            control_blocks: 3,
            initial_power_fraction: 0.5,
            decode_fraction: 0.9,
            tolerance: 1e-6,
            disabled: false,
        }
    }
}

impl PowerConfig {
    pub fn validate(&self) -> Result<(), PowerError> {
        let bad = |m: String| Err(PowerError::InvalidConfig(m));
        if self.control_blocks == 0 {
            return bad("control_blocks must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.initial_power_fraction) {
            return bad(format!(
                "initial_power_fraction must lie in [0, 1], got {}",
                self.initial_power_fraction
            ));
        }
        if !(self.decode_fraction > 0.0 && self.decode_fraction <= 1.0) {
            return bad(format!(
                "decode_fraction must lie in (0, 1], got {}",
                self.decode_fraction
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return bad(format!("tolerance must lie in (0, 1), got {}", self.tolerance));
        }
        Ok(())
    }
}

/// One receiver report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackRow {
    pub rx: UserId,
    pub tx: UserId,
    pub channel: ChannelId,
    /// Noise-normalised interference left after cancelling stronger signals.
    pub interference: f64,
    /// Noise-normalised gain from `tx` to `rx` as measured by `rx`.
    pub snr: f64,
}

/// Reports of one receive block.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeedbackMatrix {
    pub rows: Vec<FeedbackRow>,
}

impl FeedbackMatrix {
    pub fn for_link(&self, tx: UserId, channel: ChannelId) -> Vec<FeedbackRow> {
        self.rows
            .iter()
            .filter(|r| r.tx == tx && r.channel == channel)
            .copied()
            .collect()
    }
}

/// A receiver reports `tx` when it can decode every signal ahead of `tx` in
/// its cancellation order. This covers both receivers that can decode `tx`
/// itself and those where only `tx` falls short.
pub fn decode_eligibility(reception: &SicReception, tx: UserId) -> bool {
    let threshold = reception.threshold();
    match reception.ordered().iter().position(|t| t.user == tx) {
        Some(p) => reception.rates()[..p].iter().all(|&r| r >= threshold),
        None => false,
    }
}

/// Power at which one receiver just reaches the threshold.
pub fn threshold_power(snr: f64, interference: f64, rate_threshold: f64) -> f64 {
    (rate_threshold.exp2() - 1.0) * (1.0 + interference) / snr
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSolution {
    pub power: f64,
    /// False when even the maximum power serves too few receivers.
    pub satisfied: bool,
}

/// Receivers the solution must serve.
pub fn required_receivers(reporting: usize, decode_fraction: f64) -> usize {
    ((decode_fraction * reporting as f64).ceil() as usize).clamp(1, reporting.max(1))
}

fn served(rows: &[FeedbackRow], power: f64, rate_threshold: f64) -> usize {
    rows.iter()
        .filter(|r| {
            achievable_rate(power * r.snr, r.interference).is_ok_and(|rate| rate >= rate_threshold)
        })
        .count()
}

/// Least power in `[0, max_power]`, to within `tolerance * max_power`, at
/// which enough reporting receivers reach `rate_threshold`, found by
/// bisection on the served count.
pub fn solve_power(
    rows: &[FeedbackRow],
    decode_fraction: f64,
    rate_threshold: f64,
    max_power: f64,
    tolerance: f64,
) -> Result<PowerSolution, PowerError> {
    let Some(first) = rows.first() else {
        return Err(PowerError::EmptyFeedback);
    };
    if rows.iter().any(|r| r.tx != first.tx || r.channel != first.channel) {
        return Err(PowerError::InvalidConfig(
            "feedback rows for more than one link".into(),
        ));
    }
    let need = required_receivers(rows.len(), decode_fraction);
    if served(rows, max_power, rate_threshold) < need {
        return Ok(PowerSolution {
            power: max_power,
            satisfied: false,
        });
    }
    if served(rows, 0.0, rate_threshold) >= need {
        return Ok(PowerSolution {
            power: 0.0,
            satisfied: true,
        });
    }
    let (mut lo, mut hi) = (0.0, max_power);
    while hi - lo > tolerance * max_power {
        let mid = 0.5 * (lo + hi);
        if served(rows, mid, rate_threshold) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PowerSolution {
        power: hi,
        satisfied: true,
    })
}

/// The `ceil(w * |B|)`-th smallest per-receiver threshold power, capped at
/// `max_power`.
pub fn solve_power_closed_form(
    rows: &[FeedbackRow],
    decode_fraction: f64,
    rate_threshold: f64,
    max_power: f64,
) -> PowerSolution {
    let mut needed: Vec<f64> = rows
        .iter()
        .map(|r| threshold_power(r.snr, r.interference, rate_threshold))
        .collect();
    needed.sort_by(f64::total_cmp);
    let need = required_receivers(rows.len(), decode_fraction);
    match needed.get(need - 1) {
        Some(&p) if p <= max_power => PowerSolution {
            power: p.max(0.0),
            satisfied: true,
        },
        _ => PowerSolution {
            power: max_power,
            satisfied: false,
        },
    }
}

type LinkPowers = BTreeMap<(UserId, ChannelId), f64>;

/// Data-portion powers of one slot with the control trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotPower {
    /// Powers announced in each transmit block; the last is used for data.
    pub blocks: Vec<LinkPowers>,
    /// Links that could not serve enough receivers at the last solve.
    pub unsatisfied: Vec<(UserId, ChannelId)>,
}

impl SlotPower {
    pub fn final_powers(&self) -> &LinkPowers {
        self.blocks.last().expect("at least one block")
    }
}

/// Reports every receiver of `slot` would send given announced `powers`.
pub fn receive_block(
    link: &LinkModel<'_>,
    slot: SlotId,
    assignments: &BTreeMap<UserId, Vec<ChannelId>>,
    powers: &LinkPowers,
    rate_threshold: f64,
) -> FeedbackMatrix {
    let geometry = link.geometry();
    let mut by_channel: BTreeMap<ChannelId, Vec<UserId>> = BTreeMap::new();
    for (&tx, chs) in assignments {
        for &k in chs {
            by_channel.entry(k).or_default().push(tx);
        }
    }
    let mut rows = Vec::new();
    for (&k, txs) in &by_channel {
        let mut receivers: Vec<UserId> = txs
            .iter()
            .flat_map(|&tx| geometry.neighbors(tx, slot).iter().copied())
            .filter(|rx| !assignments.contains_key(rx))
            .collect();
        receivers.sort_unstable();
        receivers.dedup();
        for rx in receivers {
            let heard: Vec<CoChannelTx> = txs
                .iter()
                .filter(|&&tx| geometry.in_range(tx, rx, slot))
                .map(|&tx| CoChannelTx {
                    user: tx,
                    power: powers[&(tx, k)],
                    snr: link.snr(CsiView::Full, tx, rx, k, slot),
                })
                .collect();
            let reception = SicReception::new(&heard, rate_threshold)
                .expect("announced powers are finite and nonnegative");
            for t in &heard {
                if decode_eligibility(&reception, t.user) {
                    rows.push(FeedbackRow {
                        rx,
                        tx: t.user,
                        channel: k,
                        interference: reception
                            .residual_interference(t.user)
                            .expect("tx is heard"),
                        snr: t.snr,
                    });
                }
            }
        }
    }
    FeedbackMatrix { rows }
}

/// Runs the control portion of `slot` and returns the data powers.
pub fn run_control_portion(
    link: &LinkModel<'_>,
    slot: SlotId,
    assignments: &BTreeMap<UserId, Vec<ChannelId>>,
    rate_threshold: f64,
    max_power: f64,
    config: &PowerConfig,
) -> Result<SlotPower, PowerError> {
    config.validate()?;
    let mut powers: LinkPowers = assignments
        .iter()
        .flat_map(|(&tx, chs)| chs.iter().map(move |&k| (tx, k)))
        .map(|key| {
            let p = if config.disabled {
                max_power
            } else {
                config.initial_power_fraction * max_power
            };
            (key, p)
        })
        .collect();
    let mut blocks = vec![powers.clone()];
    let mut unsatisfied = Vec::new();
    if config.disabled {
        return Ok(SlotPower {
            blocks,
            unsatisfied,
        });
    }
    for _ in 1..config.control_blocks {
        let feedback = receive_block(link, slot, assignments, &powers, rate_threshold);
        unsatisfied.clear();
        let mut next = powers.clone();
        for (&(tx, k), p) in next.iter_mut() {
            let rows = feedback.for_link(tx, k);
            if rows.is_empty() {
                continue;
            }
            let sol = solve_power(
                &rows,
                config.decode_fraction,
                rate_threshold,
                max_power,
                config.tolerance,
            )?;
            *p = sol.power;
            if !sol.satisfied {
                unsatisfied.push((tx, k));
            }
        }
        powers = next;
        blocks.push(powers.clone());
    }
    Ok(SlotPower {
        blocks,
        unsatisfied,
    })
}

/// Data powers of every scheduled transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    per_slot: Vec<BTreeMap<UserId, BTreeMap<ChannelId, f64>>>,
}

impl PowerTable {
    pub fn new(slots: usize) -> Self {
        PowerTable {
            per_slot: vec![BTreeMap::new(); slots],
        }
    }

    /// Every transmission of `schedule` at `power`.
    pub fn uniform(schedule: &Schedule, power: f64) -> Self {
        let mut t = PowerTable::new(schedule.slots());
        for (slot, tx, k) in schedule.transmissions() {
            t.set(slot, tx, k, power);
        }
        t
    }

    pub fn slots(&self) -> usize {
        self.per_slot.len()
    }

    pub fn set(&mut self, slot: SlotId, tx: UserId, channel: ChannelId, power: f64) {
        self.per_slot[slot.index()]
            .entry(tx)
            .or_default()
            .insert(channel, power);
    }

    pub fn get(&self, slot: SlotId, tx: UserId, channel: ChannelId) -> Option<f64> {
        self.per_slot
            .get(slot.index())?
            .get(&tx)?
            .get(&channel)
            .copied()
    }

    /// `(slot, tx, channel, watts)` rows in order.
    pub fn rows(&self) -> impl Iterator<Item = (SlotId, UserId, ChannelId, f64)> + '_ {
        self.per_slot.iter().enumerate().flat_map(|(s, map)| {
            map.iter().flat_map(move |(&tx, chs)| {
                chs.iter()
                    .map(move |(&k, &p)| (SlotId::from_index(s), tx, k, p))
            })
        })
    }
}

/// Power-control outcome over a whole period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodPower {
    pub table: PowerTable,
    pub per_slot: Vec<SlotPower>,
}

impl PeriodPower {
    pub fn unsatisfied(&self) -> usize {
        self.per_slot.iter().map(|s| s.unsatisfied.len()).sum()
    }
}

/// Runs the control portion of every slot of `schedule`.
pub fn control_period(
    link: &LinkModel<'_>,
    schedule: &Schedule,
    rate_threshold: f64,
    max_power: f64,
    config: &PowerConfig,
) -> Result<PeriodPower, PowerError> {
    let mut table = PowerTable::new(schedule.slots());
    let mut per_slot = Vec::with_capacity(schedule.slots());
    for slot in schedule.slot_ids() {
        let sp = run_control_portion(
            link,
            slot,
            schedule.assignments(slot),
            rate_threshold,
            max_power,
            config,
        )?;
        for (&(tx, k), &p) in sp.final_powers() {
            table.set(slot, tx, k, p);
        }
        per_slot.push(sp);
    }
    Ok(PeriodPower { table, per_slot })
}
