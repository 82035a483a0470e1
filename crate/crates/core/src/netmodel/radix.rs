//! Mixed-radix indexing, first digit most significant.

/// Combines digits into a single index. Empty input maps to 0.
pub fn compose(digits: &[usize], radices: &[usize]) -> usize {
    debug_assert_eq!(digits.len(), radices.len());
    let mut index = 0;
    for (&d, &r) in digits.iter().zip(radices) {
        debug_assert!(d < r);
        index = index * r + d;
    }
    index
}

/// Splits an index back into digits.
pub fn decompose(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (slot, &r) in digits.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    debug_assert_eq!(index, 0);
    digits
}

/// Product of radices, saturating at `u128::MAX`.
pub fn cardinality(radices: &[usize]) -> u128 {
    radices
        .iter()
        .fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
}
