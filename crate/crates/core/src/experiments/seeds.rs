/// Independent random streams drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Paths = 1,
    Pilots = 2,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(master ^ stream << 56) + index)`. Depends only on
/// its arguments, so trials can run in any order.
pub fn trial_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ ((stream as u64) << 56)).wrapping_add(index))
}
