//! Deterministic seed derivation so that independent streams (folds,
//! subjects, stimuli) never share random numbers.

/// One round of SplitMix64.
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(base: u64, salt: u64) -> u64 {
    splitmix(splitmix(base) ^ salt)
}

/// Stable seed from a string label (FNV-1a).
pub fn from_label(base: u64, label: &str) -> u64 {
    let h = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    });
    derive(base, h)
}
