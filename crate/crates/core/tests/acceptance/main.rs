//! Acceptance checks. Each criterion prints one `PASS` or `FAIL` line.

mod criteria;
mod examples;
mod properties;
mod support;
