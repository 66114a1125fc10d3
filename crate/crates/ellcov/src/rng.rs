//! Counter-based seed derivation.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream whose
//! seed is derived by mixing a master seed with a fixed role tag and any
//! number of counters (stream step, trial index, ...). Derivation is pure
//! arithmetic, so trials can be generated in any order — or skipped — without
//! disturbing each other's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Role tags keeping independent consumers of the same master seed disjoint.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum SeedRole {
    /// Monte-Carlo evaluation of the normalized-covariance expectation.
    AnscmMc = 1,
    /// Training batches of a sequential estimator stream.
    StreamBatch = 2,
    /// Outlier placement and replacement draws when contaminating a batch.
    Contaminate = 3,
    /// Null-hypothesis cells for threshold calibration.
    CalibrationTrial = 4,
    /// Null-hypothesis cells for re-testing a calibrated threshold.
    RetestTrial = 5,
    /// Target-present cells for detection-probability measurement.
    DetectionTrial = 6,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a bijective avalanche mix of 64 bits.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `(master, role, counters...)`.
pub(crate) fn derive_seed(master: u64, role: SeedRole, counters: &[u64]) -> u64 {
    let mut s = mix64(master.wrapping_add(GOLDEN.wrapping_mul(role as u64 + 1)));
    for &c in counters {
        s = mix64(s ^ c.wrapping_add(GOLDEN));
    }
    s
}

/// Deterministic generator for a derived seed.
pub(crate) fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
