//! Rotation counts and the forbidden-pair bounds.
//!
//! With subsets of every size up to `q_max` and all `L` shifts of a size-`L`
//! subset (identity included) there are `sum_q q * C(N, q)` rotation
//! sequences, which is `N * 2^(N-1)` when `q_max = N`. Excluding the
//! identity gives `sum_q (q - 1) * C(N, q)` proper rotations; both are
//! exposed. For `F` forbidden pairs and `q_max = N`, at least
//! `F * (2^(N-1) - 2 + 1/floor(N/2))` rotations are claimed invalid and the
//! complement bounds the valid ones.

use num_rational::Ratio;

use super::{Matching, Member, PlayerId, RotationSequence};

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `sum_{q=1}^{q_max} q * C(N, q)`, identity shifts included.
pub fn count_rotation_sequences(n: u64, q_max: u64) -> u128 {
    (1..=q_max.min(n)).map(|q| q as u128 * binomial(n, q)).sum()
}

/// `sum_{q=2}^{q_max} (q - 1) * C(N, q)`, identity shifts excluded.
pub fn count_proper_rotations(n: u64, q_max: u64) -> u128 {
    (2..=q_max.min(n)).map(|q| (q - 1) as u128 * binomial(n, q)).sum()
}

fn half_floor(n: u64) -> i128 {
    (n / 2).max(1) as i128
}

/// `F * (2^(N-1) - 2 + 1/floor(N/2))`, exact. Requires `N >= 2`.
pub fn invalid_rotation_lower_bound(n: u64, forbidden_pairs: u64) -> Ratio<i128> {
    let f = Ratio::from_integer(forbidden_pairs as i128);
    let pow = Ratio::from_integer(1i128 << (n - 1));
    f * (pow - Ratio::from_integer(2) + Ratio::new(1, half_floor(n)))
}

/// `(N - F) * 2^(N-1) + 2F - F/floor(N/2)`, exact. Requires `N >= 2`.
pub fn valid_rotation_upper_bound(n: u64, forbidden_pairs: u64) -> Ratio<i128> {
    let f = forbidden_pairs as i128;
    Ratio::from_integer((n as i128 - f) * (1i128 << (n - 1)) + 2 * f)
        - Ratio::new(f, half_floor(n))
}

/// The middle line of the lower-bound derivation, evaluated term by term:
/// `F * [C(N-2, 1) + sum_{m=1}^{floor((N-1)/2)-1} 2/(2m+2) C(N-1, 2m+1)
/// + C(N-2, N-2)/floor(N/2)]`. It does not equal the closed form in general.
pub fn invalid_rotation_series(n: u64, forbidden_pairs: u64) -> Ratio<i128> {
    let f = Ratio::from_integer(forbidden_pairs as i128);
    let mut sum = Ratio::from_integer(binomial(n - 2, 1) as i128);
    let top = ((n - 1) / 2).saturating_sub(1);
    for m in 1..=top {
        let c = binomial(n - 1, 2 * m + 1) as i128;
        sum += Ratio::new(2 * c, 2 * m as i128 + 2);
    }
    sum += Ratio::new(1, half_floor(n));
    f * sum
}

/// Proper rotations over `players` (all subset sizes up to `q_max`) that
/// violate validity against `matching`.
pub fn count_invalid_rotations(matching: &Matching, players: &[PlayerId], q_max: usize) -> usize {
    let members: Vec<Member> = players.iter().map(|&p| Member::Player(p)).collect();
    super::enumerate_rotations(&members, q_max)
        .filter(|s: &RotationSequence| !s.is_identity())
        .filter(|s| !super::is_valid(matching, s).unwrap_or(false))
        .count()
}
