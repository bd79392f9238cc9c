//! Flat-table import and export of schedules, powers and scenarios.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ChannelId, SlotId, UserId};
use crate::powerctrl::PowerTable;
use crate::scenario::{Role, Scenario};
use crate::scheduler::Schedule;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Invalid { line: u64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScheduleRow {
    slot: usize,
    user: usize,
    role: String,
    /// Sub-channel numbers joined by `;`.
    channels: String,
}

/// One row per user and slot: `slot,user,role,channels` with 1-based slots
/// and sub-channels, `role` either `tx` or `rx`.
pub fn write_schedule<W: Write>(
    schedule: &Schedule,
    users: usize,
    writer: W,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    for slot in schedule.slot_ids() {
        for u in 0..users {
            let user = UserId(u);
            let tx = schedule.is_transmitter(slot, user);
            let channels = schedule
                .channels_of(slot, user)
                .iter()
                .map(|c| c.number().to_string())
                .collect::<Vec<_>>()
                .join(";");
            w.serialize(ScheduleRow {
                slot: slot.number(),
                user: u,
                role: if tx { "tx" } else { "rx" }.to_string(),
                channels,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a schedule table. Rows with role `rx` must have no sub-channels.
pub fn read_schedule<R: Read>(reader: R, slots: usize, channels: usize) -> Result<Schedule, IoError> {
    let mut schedule = Schedule::new(slots, channels);
    for (line, row) in rows::<_, ScheduleRow>(reader)? {
        let invalid = |message: String| IoError::Invalid { line, message };
        let slot = SlotId::new(row.slot)
            .filter(|s| s.index() < slots)
            .ok_or_else(|| invalid(format!("slot {} outside 1..={slots}", row.slot)))?;
        let chs = parse_channels(&row.channels).map_err(invalid)?;
        match row.role.as_str() {
            "tx" => schedule.set_channels(slot, UserId(row.user), chs),
            "rx" if chs.is_empty() => {}
            "rx" => return Err(invalid(format!("receiver {} lists sub-channels", row.user))),
            other => return Err(invalid(format!("role must be tx or rx, got {other:?}"))),
        }
    }
    Ok(schedule)
}

/// Deserialized rows with their line numbers.
fn rows<R: Read, T: serde::de::DeserializeOwned>(reader: R) -> Result<Vec<(u64, T)>, IoError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .deserialize(Some(&headers))
            .map_err(|e| IoError::Invalid {
                line,
                message: match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                },
            })?;
        out.push((line, row));
    }
    Ok(out)
}

fn parse_channels(text: &str) -> Result<Vec<ChannelId>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .ok()
                .and_then(ChannelId::new)
                .ok_or_else(|| format!("bad sub-channel {s:?}"))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PowerRow {
    slot: usize,
    tx: usize,
    channel: usize,
    power_w: f64,
}

pub fn write_powers<W: Write>(table: &PowerTable, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    for (slot, tx, k, p) in table.rows() {
        w.serialize(PowerRow {
            slot: slot.number(),
            tx: tx.0,
            channel: k.number(),
            power_w: p,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_powers<R: Read>(reader: R, slots: usize) -> Result<PowerTable, IoError> {
    let mut table = PowerTable::new(slots);
    for (line, row) in rows::<_, PowerRow>(reader)? {
        let invalid = |message: String| IoError::Invalid { line, message };
        let slot = SlotId::new(row.slot)
            .filter(|s| s.index() < slots)
            .ok_or_else(|| invalid(format!("slot {} outside 1..={slots}", row.slot)))?;
        let k = ChannelId::new(row.channel)
            .ok_or_else(|| invalid(format!("bad sub-channel {}", row.channel)))?;
        if !(row.power_w >= 0.0) || !row.power_w.is_finite() {
            return Err(invalid(format!("bad power {}", row.power_w)));
        }
        table.set(slot, UserId(row.tx), k, row.power_w);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct UserRow {
    user: usize,
    role: Role,
    x_m: f64,
    y_m: f64,
    vx_mps: f64,
    vy_mps: f64,
}

/// Scenario snapshot as JSON (configuration and user states).
pub fn write_scenario<W: Write>(scenario: &Scenario, writer: W) -> Result<(), IoError> {
    serde_json::to_writer_pretty(writer, scenario)?;
    Ok(())
}

pub fn read_scenario<R: Read>(reader: R) -> Result<Scenario, IoError> {
    Ok(serde_json::from_reader(reader)?)
}

/// User states as a table: `user,role,x_m,y_m,vx_mps,vy_mps`.
pub fn write_users<W: Write>(scenario: &Scenario, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    for (u, s) in scenario.users().iter().enumerate() {
        w.serialize(UserRow {
            user: u,
            role: s.role,
            x_m: s.position[0],
            y_m: s.position[1],
            vx_mps: s.velocity[0],
            vy_mps: s.velocity[1],
        })?;
    }
    w.flush()?;
    Ok(())
}
