//! Identifiers for users, time slots and sub-channels.
//!
//! Users are indexed from zero. Slots and sub-channels carry the 1-based
//! numbering used in exported tables (`1..=T_v`, `1..=K`); `index()` gives the
//! zero-based position for array access.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub usize);

impl UserId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Time slot within one transmission period, `1..=T_v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotId(usize);

impl SlotId {
    /// Returns `None` for slot 0.
    pub fn new(number: usize) -> Option<Self> {
        (number >= 1).then_some(SlotId(number))
    }

    pub fn from_index(index: usize) -> Self {
        SlotId(index + 1)
    }

    #[inline]
    pub fn number(self) -> usize {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Sub-channel, `1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId(usize);

impl ChannelId {
    pub fn new(number: usize) -> Option<Self> {
        (number >= 1).then_some(ChannelId(number))
    }

    pub fn from_index(index: usize) -> Self {
        ChannelId(index + 1)
    }

    #[inline]
    pub fn number(self) -> usize {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
