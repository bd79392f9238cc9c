//! Link budget, SIC reception and decode utilities.
//!
//! A receiver hearing several co-channel transmitters decodes them in
//! descending order of channel gain `|H|^2` (ties by ascending user id),
//! cancelling each decoded signal before the next. Transmitter `t` in that
//! order sees only the weaker signals as interference:
//!
//! ```text
//! R_t = log2(1 + p_t rho_t / (1 + sum_{s after t} p_s rho_s))
//! ```
//!
//! with `rho = |H|^2 / sigma_n^2`, so the noise term is normalised to one.
//! Signal `t` is decoded only if every signal up to and including it clears
//! the rate threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ChannelId, SlotId, UserId};
use crate::scenario::Geometry;
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid radio config: {0}")]
    InvalidConfig(String),
    #[error("transmit power must be non-negative and finite, got {0}")]
    NegativePower(f64),
    #[error("distance must be non-negative and finite, got {0}")]
    InvalidDistance(f64),
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Peak transmit power per sub-channel, dBm.
    pub max_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub subchannel_bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub pathloss_exponent: f64,
    /// Linear path-loss constant; when absent it is calibrated from the
    /// carrier to the urban-micro NLOS intercept `22.7 + 26 log10(f_GHz)` dB.
    pub pathloss_constant: Option<f64>,
    /// Decode threshold, bits/s/Hz.
    pub rate_threshold: f64,
    /// Slope of the logistic decode utility.
    pub logistic_slope: f64,
    /// Distances below this are clamped before the path-loss law.
    pub min_distance_m: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            max_power_dbm: 23.0,
            noise_psd_dbm_hz: -174.0,
            subchannel_bandwidth_hz: 2e6,
            carrier_hz: 2e9,
            pathloss_exponent: 3.67,
            pathloss_constant: None,
            rate_threshold: 2.0,
            logistic_slope: 4.0,
            min_distance_m: 1.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |m: &str| Err(ChannelError::InvalidConfig(m.to_string()));
        if !self.max_power_dbm.is_finite() {
            return bad("max_power_dbm must be finite");
        }
        if !(self.pathloss_exponent > 0.0) {
            return bad("pathloss_exponent must be positive");
        }
        if !(self.rate_threshold > 0.0) {
            return bad("rate_threshold must be positive");
        }
        if !(self.logistic_slope > 0.0) {
            return bad("logistic_slope must be positive");
        }
        if !(self.subchannel_bandwidth_hz > 0.0) || !(self.carrier_hz > 0.0) {
            return bad("bandwidth and carrier must be positive");
        }
        if !(self.min_distance_m > 0.0) {
            return bad("min_distance_m must be positive");
        }
        if let Some(b) = self.pathloss_constant {
            if !(b > 0.0) {
                return bad("pathloss_constant must be positive");
            }
        }
        Ok(())
    }

    pub fn max_power_w(&self) -> f64 {
        dbm_to_watts(self.max_power_dbm)
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz) * self.subchannel_bandwidth_hz
    }

    pub fn pathloss_constant(&self) -> f64 {
        self.pathloss_constant.unwrap_or_else(|| {
            let intercept_db = 22.7 + 26.0 * (self.carrier_hz / 1e9).log10();
            10f64.powf(-intercept_db / 10.0)
        })
    }

    pub fn power_law(&self) -> PowerLaw {
        PowerLaw {
            exponent: self.pathloss_exponent,
            constant: self.pathloss_constant(),
            min_distance_m: self.min_distance_m,
        }
    }
}

/// `beta * d^-alpha`, as a linear power gain. Distances below `d_min` are
/// clamped to `d_min`.
pub fn pathloss(d: f64, alpha: f64, beta: f64, d_min: f64) -> Result<f64, ChannelError> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(ChannelError::InvalidDistance(d));
    }
    let d = if d < d_min {
        log::debug!("distance {d} m below {d_min} m; clamped");
        d_min
    } else {
        d
    };
    Ok(beta * d.powf(-alpha))
}

/// Distance to linear power gain.
pub trait PathLossModel: Send + Sync {
    fn gain(&self, distance_m: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub exponent: f64,
    pub constant: f64,
    pub min_distance_m: f64,
}

impl PathLossModel for PowerLaw {
    fn gain(&self, distance_m: f64) -> f64 {
        pathloss(distance_m, self.exponent, self.constant, self.min_distance_m)
            .unwrap_or(0.0)
    }
}

/// Rayleigh small-scale power gain `|h|^2 ~ Exp(1)`, a pure function of the
/// link, sub-channel and slot.
pub fn fading_power(seed: u64, tx: UserId, rx: UserId, channel: ChannelId, slot: SlotId) -> f64 {
    let h = seed::mix(
        seed,
        &[
            seed::label("fading"),
            tx.0 as u64,
            rx.0 as u64,
            channel.number() as u64,
            slot.number() as u64,
        ],
    );
    -seed::unit_open(h).ln()
}

/// Which channel knowledge a rate evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiView {
    /// Path loss only, as available at the base station.
    Partial,
    /// Path loss times Rayleigh fading, the ground truth.
    Full,
}

/// Noise-normalised link gains `rho` for one scenario geometry.
pub struct LinkModel<'a> {
    geometry: &'a Geometry,
    fading_seed: u64,
    noise_w: f64,
    /// Partial-CSI `rho` per (slot, tx, rx).
    partial: Vec<f64>,
}

impl<'a> LinkModel<'a> {
    pub fn new(geometry: &'a Geometry, radio: &RadioConfig, fading_seed: u64) -> Self {
        Self::with_pathloss(geometry, radio, fading_seed, &radio.power_law())
    }

    pub fn with_pathloss(
        geometry: &'a Geometry,
        radio: &RadioConfig,
        fading_seed: u64,
        model: &dyn PathLossModel,
    ) -> Self {
        let n = geometry.users();
        let noise_w = radio.noise_power_w();
        let mut partial = vec![0.0; geometry.slots() * n * n];
        for s in 0..geometry.slots() {
            let slot = SlotId::from_index(s);
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        let d = geometry.distance(UserId(a), UserId(b), slot);
                        partial[(s * n + a) * n + b] = model.gain(d) / noise_w;
                    }
                }
            }
        }
        LinkModel {
            geometry,
            fading_seed,
            noise_w,
            partial,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        self.geometry
    }

    pub fn noise_power_w(&self) -> f64 {
        self.noise_w
    }

    #[inline]
    pub fn snr(&self, view: CsiView, tx: UserId, rx: UserId, channel: ChannelId, slot: SlotId) -> f64 {
        let n = self.geometry.users();
        let base = self.partial[(slot.index() * n + tx.0) * n + rx.0];
        match view {
            CsiView::Partial => base,
            CsiView::Full => base * fading_power(self.fading_seed, tx, rx, channel, slot),
        }
    }
}

/// One transmitter as heard by a receiver on a sub-channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoChannelTx {
    pub user: UserId,
    /// Watts.
    pub power: f64,
    /// Noise-normalised gain `rho`; proportional to `|H|^2`.
    pub snr: f64,
}

/// Indices of `txs` in SIC decode order.
pub fn sic_order(txs: &[CoChannelTx]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..txs.len()).collect();
    order.sort_by(|&a, &b| {
        txs[b]
            .snr
            .total_cmp(&txs[a].snr)
            .then(txs[a].user.cmp(&txs[b].user))
    });
    order
}

/// `log2(1 + signal / (1 + interference))` with both terms noise-normalised.
pub fn achievable_rate(signal: f64, interference: f64) -> Result<f64, ChannelError> {
    if !(signal >= 0.0) || !signal.is_finite() {
        return Err(ChannelError::NegativePower(signal));
    }
    if !(interference >= 0.0) || !interference.is_finite() {
        return Err(ChannelError::NegativePower(interference));
    }
    Ok((signal / (1.0 + interference)).ln_1p() / std::f64::consts::LN_2)
}

/// Numerically stable `1 / (1 + exp(-slope * (rate - threshold)))`.
pub fn logistic(rate: f64, threshold: f64, slope: f64) -> f64 {
    let z = slope * (rate - threshold);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// SIC reception of all co-channel transmitters in range of one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SicReception {
    /// Transmitters in decode order.
    ordered: Vec<CoChannelTx>,
    /// Rate of each ordered transmitter.
    rates: Vec<f64>,
    /// Length of the decodable prefix.
    decodable: usize,
    threshold: f64,
}

impl SicReception {
    pub fn new(txs: &[CoChannelTx], threshold: f64) -> Result<Self, ChannelError> {
        if let Some(bad) = txs.iter().find(|t| !(t.power >= 0.0) || !t.power.is_finite()) {
            return Err(ChannelError::NegativePower(bad.power));
        }
        let ordered: Vec<CoChannelTx> = sic_order(txs).into_iter().map(|i| txs[i]).collect();
        let mut rates = vec![0.0; ordered.len()];
        let mut below = 0.0;
        for t in (0..ordered.len()).rev() {
            let signal = ordered[t].power * ordered[t].snr;
            rates[t] = achievable_rate(signal, below)?;
            below += signal;
        }
        let decodable = rates.iter().take_while(|&&r| r >= threshold).count();
        Ok(SicReception {
            ordered,
            rates,
            decodable,
            threshold,
        })
    }

    pub fn ordered(&self) -> &[CoChannelTx] {
        &self.ordered
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn position(&self, user: UserId) -> Option<usize> {
        self.ordered.iter().position(|t| t.user == user)
    }

    pub fn rate(&self, user: UserId) -> Option<f64> {
        self.position(user).map(|p| self.rates[p])
    }

    /// Noise-normalised interference left when `user` is decoded.
    pub fn residual_interference(&self, user: UserId) -> Option<f64> {
        self.position(user).map(|p| {
            self.ordered[p + 1..]
                .iter()
                .map(|t| t.power * t.snr)
                .sum()
        })
    }

    /// Users with strictly lower gain than `user` (decoded after it).
    pub fn weaker_than(&self, user: UserId) -> Vec<UserId> {
        match self.position(user) {
            Some(p) => self.ordered[p + 1..].iter().map(|t| t.user).collect(),
            None => Vec::new(),
        }
    }

    /// True iff `user` and every signal decoded before it clear the threshold.
    pub fn decode_success(&self, user: UserId) -> bool {
        self.position(user).is_some_and(|p| p < self.decodable)
    }

    /// Product of logistic factors over `user` and every stronger signal.
    pub fn decode_probability(&self, user: UserId, slope: f64) -> f64 {
        match self.position(user) {
            Some(p) => self.rates[..=p]
                .iter()
                .map(|&r| logistic(r, self.threshold, slope))
                .product(),
            None => 0.0,
        }
    }
}

/// Gated utility: zero when `tx` is idle on the channel or the receiver
/// itself transmits on it.
pub fn decode_probability(
    reception: &SicReception,
    tx: UserId,
    tx_active: bool,
    rx_transmits: bool,
    slope: f64,
) -> f64 {
    if !tx_active || rx_transmits {
        return 0.0;
    }
    reception.decode_probability(tx, slope)
}

/// Rates when every other co-channel signal is treated as noise.
pub fn rates_interference_as_noise(txs: &[CoChannelTx]) -> Result<Vec<f64>, ChannelError> {
    let signals: Vec<f64> = txs.iter().map(|t| t.power * t.snr).collect();
    let total: f64 = signals.iter().sum();
    signals
        .iter()
        .map(|&s| achievable_rate(s, (total - s).max(0.0)))
        .collect()
}
