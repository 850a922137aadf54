//! Deterministic seed derivation for independent random streams.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of the stream addressed by `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Named stream tags so unrelated stages never share a seed.
pub mod stream {
    pub const DIAGONAL: u64 = 1;
    pub const OFFDIAGONAL: u64 = 2;
    pub const CALIBRATION: u64 = 3;
    pub const REFERENCE_SEARCH: u64 = 4;
    pub const REPEAT: u64 = 5;
    pub const SCAN_POINT: u64 = 6;
}
