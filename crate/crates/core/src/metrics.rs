//! Ground-truth evaluation of a scheduled period and its metrics.
//!
//! Every scheduled transmission is heard by every user within range that is
//! not itself transmitting in the slot. A delivery `(slot, tx, rx)` is
//! decoded when some sub-channel of `tx` is decoded at `rx` under full CSI
//! and the data powers, and it meets latency when the rate on that
//! sub-channel also reaches the rate the packet size demands.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{
    rates_interference_as_noise, ChannelError, CoChannelTx, CsiView, LinkModel, SicReception,
};
use crate::ids::{ChannelId, SlotId, UserId};
use crate::powerctrl::PowerTable;
use crate::scheduler::Schedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no power for transmitter {tx} on sub-channel {channel} in slot {slot}")]
    MissingPower {
        slot: SlotId,
        tx: UserId,
        channel: ChannelId,
    },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// How a receiver separates co-channel signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// Successive interference cancellation, strongest gain first.
    Sic,
    /// Every other co-channel signal counts as noise.
    InterferenceAsNoise,
}

/// One transmitter heard by one receiver on one sub-channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkOutcome {
    pub slot: SlotId,
    pub channel: ChannelId,
    pub tx: UserId,
    pub rx: UserId,
    /// Achieved rate; zero when the receiver is transmitting.
    pub rate: f64,
    pub success: bool,
}

/// One intended `(slot, tx, rx)` delivery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Delivery {
    pub slot: SlotId,
    pub tx: UserId,
    pub rx: UserId,
    pub decoded: bool,
    /// Highest rate over the sub-channels on which the packet was decoded.
    pub best_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PeriodOutcome {
    pub links: Vec<LinkOutcome>,
    pub deliveries: Vec<Delivery>,
}

/// Decodes every scheduled transmission at every in-range receiver.
pub fn evaluate_period(
    link: &LinkModel<'_>,
    schedule: &Schedule,
    powers: &PowerTable,
    decoder: Decoder,
    rate_threshold: f64,
) -> Result<PeriodOutcome, MetricsError> {
    let geometry = link.geometry();
    let mut out = PeriodOutcome::default();
    for slot in schedule.slot_ids() {
        let assignments = schedule.assignments(slot);
        let mut by_channel: BTreeMap<ChannelId, Vec<UserId>> = BTreeMap::new();
        for (&tx, chs) in assignments {
            for &k in chs {
                by_channel.entry(k).or_default().push(tx);
            }
        }
        let mut best: BTreeMap<(UserId, UserId), Option<f64>> = BTreeMap::new();
        for (&k, txs) in &by_channel {
            let mut receivers: Vec<UserId> = txs
                .iter()
                .flat_map(|&tx| geometry.neighbors(tx, slot).iter().copied())
                .collect();
            receivers.sort_unstable();
            receivers.dedup();
            for rx in receivers {
                let heard: Vec<UserId> = txs
                    .iter()
                    .copied()
                    .filter(|&tx| geometry.in_range(tx, rx, slot))
                    .collect();
                if assignments.contains_key(&rx) {
                    for &tx in &heard {
                        out.links.push(LinkOutcome {
                            slot,
                            channel: k,
                            tx,
                            rx,
                            rate: 0.0,
                            success: false,
                        });
                    }
                    continue;
                }
                let mut co = Vec::with_capacity(heard.len());
                for &tx in &heard {
                    let power = powers.get(slot, tx, k).ok_or(MetricsError::MissingPower {
                        slot,
                        tx,
                        channel: k,
                    })?;
                    co.push(CoChannelTx {
                        user: tx,
                        power,
                        snr: link.snr(CsiView::Full, tx, rx, k, slot),
                    });
                }
                let results: Vec<(f64, bool)> = match decoder {
                    Decoder::Sic => {
                        let reception = SicReception::new(&co, rate_threshold)?;
                        heard
                            .iter()
                            .map(|&tx| {
                                (
                                    reception.rate(tx).expect("tx is heard"),
                                    reception.decode_success(tx),
                                )
                            })
                            .collect()
                    }
                    Decoder::InterferenceAsNoise => rates_interference_as_noise(&co)?
                        .into_iter()
                        .map(|r| (r, r >= rate_threshold))
                        .collect(),
                };
                for (&tx, (rate, success)) in heard.iter().zip(results) {
                    out.links.push(LinkOutcome {
                        slot,
                        channel: k,
                        tx,
                        rx,
                        rate,
                        success,
                    });
                    if success {
                        let entry = best.entry((tx, rx)).or_insert(None);
                        *entry = Some(entry.map_or(rate, |b: f64| b.max(rate)));
                    }
                }
            }
        }
        for (&tx, chs) in assignments {
            if chs.is_empty() {
                continue;
            }
            for &rx in geometry.neighbors(tx, slot) {
                let best_rate = best.get(&(tx, rx)).copied().flatten();
                out.deliveries.push(Delivery {
                    slot,
                    tx,
                    rx,
                    decoded: best_rate.is_some(),
                    best_rate,
                });
            }
        }
    }
    Ok(out)
}

/// Spectral efficiency a packet needs to fit the data portion of a slot.
pub fn latency_required_rate(
    packet_bits: f64,
    control_fraction: f64,
    slot_duration_s: f64,
    bandwidth_hz: f64,
) -> f64 {
    packet_bits / ((1.0 - control_fraction) * slot_duration_s * bandwidth_hz)
}

pub fn count_decoded(outcome: &PeriodOutcome) -> usize {
    outcome.deliveries.iter().filter(|d| d.decoded).count()
}

/// Decoded deliveries that also meet the latency rate, over intended
/// deliveries; `None` with nothing intended.
pub fn packet_reception_probability(outcome: &PeriodOutcome, required_rate: f64) -> Option<f64> {
    let intended = outcome.deliveries.len();
    if intended == 0 {
        return None;
    }
    let ok = outcome
        .deliveries
        .iter()
        .filter(|d| d.best_rate.is_some_and(|r| r >= required_rate))
        .count();
    Some(ok as f64 / intended as f64)
}

/// Decoded deliveries reaching `max(rate_threshold, required_rate)`, over
/// decoded deliveries; `None` when nothing was decoded.
pub fn latency_satisfaction_ratio(
    outcome: &PeriodOutcome,
    rate_threshold: f64,
    required_rate: f64,
) -> Option<f64> {
    let decoded = count_decoded(outcome);
    if decoded == 0 {
        return None;
    }
    let bar = rate_threshold.max(required_rate);
    let ok = outcome
        .deliveries
        .iter()
        .filter(|d| d.best_rate.is_some_and(|r| r >= bar))
        .count();
    Some(ok as f64 / decoded as f64)
}

/// Empirical distribution function of a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut sample: Vec<f64>) -> Self {
        sample.retain(|x| !x.is_nan());
        sample.sort_by(f64::total_cmp);
        EmpiricalCdf { sorted: sample }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of the sample at or below `x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        let at_or_below = self.sorted.partition_point(|&v| v <= x);
        at_or_below as f64 / self.sorted.len() as f64
    }

    /// Distinct sample values with the distribution function at each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let n = self.sorted.len() as f64;
        for (i, &v) in self.sorted.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = (i + 1) as f64 / n,
                _ => out.push((v, (i + 1) as f64 / n)),
            }
        }
        out
    }
}

/// Rotation counts of one scheme across seeds.
pub fn rotation_count_cdf(counts: &[usize]) -> EmpiricalCdf {
    EmpiricalCdf::new(counts.iter().map(|&c| c as f64).collect())
}
