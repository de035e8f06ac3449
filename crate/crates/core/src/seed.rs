//! Deterministic derivation of independent seed streams.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for item `index` of stream `stream` under `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index)
}

/// Named streams so call sites cannot collide.
pub mod streams {
    pub const PARAMS: u64 = 1;
    pub const ACTIONS: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const TRAIN_EPISODES: u64 = 4;
    pub const EVAL_EPISODES: u64 = 5;
}
