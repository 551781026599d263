//! Finite-field geometry over F_q^n: radial projections, quotient
//! projections, Grassmannian enumeration and sampling, and executable
//! checks of counting bounds on point sets, at scales where exhaustive
//! or seeded Monte-Carlo verification is practical on one machine.

pub mod ambient;
pub mod gf;
pub mod grassmann;
pub mod projections;
pub mod theorems;

/// The deterministic generator used everywhere randomness is needed.
/// Seeded runs are reproducible across platforms and thread counts.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Derives an independent stream seed from a master seed and two counters
/// (SplitMix64-style mixing), so experiment cells are reorderable without
/// changing their results.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z = master
        .wrapping_add(a.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(b.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_per_counter() {
        let s = derive_seed(42, 0, 0);
        assert_ne!(s, derive_seed(42, 0, 1));
        assert_ne!(s, derive_seed(42, 1, 0));
        assert_eq!(s, derive_seed(42, 0, 0));
    }
}
