//! GPS L1 C/A Gold codes and normalized circular correlation.

use crate::error::{domain, Error, Result};

/// Chips per C/A code period.
pub const CODE_LENGTH: usize = 1023;

/// Chip rate of the C/A code in chips per second.
pub const CHIP_RATE_HZ: f64 = 1.023e6;

/// G2 phase-selector taps (1-based register stages) for PRN 1..=32.
const G2_TAPS: [(usize, usize); 32] = [
    (2, 6), (3, 7), (4, 8), (5, 9), (1, 9), (2, 10), (1, 8), (2, 9),
    (3, 10), (2, 3), (3, 4), (5, 6), (6, 7), (7, 8), (8, 9), (9, 10),
    (1, 4), (2, 5), (3, 6), (4, 7), (5, 8), (6, 9), (1, 3), (4, 6),
    (5, 7), (6, 8), (7, 9), (8, 10), (1, 6), (2, 7), (3, 8), (4, 9),
];

/// One period of a C/A code as ±1 chips.
///
/// Binary 0 maps to `+1` and binary 1 to `-1`, so the XOR of the two
/// generator outputs becomes a product of chips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaCode {
    prn: u8,
    chips: Vec<i8>,
}

impl CaCode {
    pub fn prn(&self) -> u8 {
        self.prn
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    /// Chip at index `i`, wrapping modulo the code length.
    #[inline]
    pub fn chip(&self, i: isize) -> i8 {
        self.chips[i.rem_euclid(CODE_LENGTH as isize) as usize]
    }
}

/// Generates the C/A code for `prn` from the two ten-stage LFSRs
/// G1 = 1 + x³ + x¹⁰ and G2 = 1 + x² + x³ + x⁶ + x⁸ + x⁹ + x¹⁰, both seeded
/// with all ones.
pub fn generate_ca_code(prn: u8) -> Result<CaCode> {
    if !(1..=32).contains(&prn) {
        return Err(domain("generate_ca_code", format!("PRN {prn} outside 1..=32")));
    }
    let (t1, t2) = G2_TAPS[prn as usize - 1];
    // stage k lives at index k - 1
    let mut g1 = [1u8; 10];
    let mut g2 = [1u8; 10];
    let mut chips = Vec::with_capacity(CODE_LENGTH);
    for _ in 0..CODE_LENGTH {
        let bit = g1[9] ^ g2[t1 - 1] ^ g2[t2 - 1];
        chips.push(if bit == 0 { 1 } else { -1 });
        let fb1 = g1[2] ^ g1[9];
        let fb2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
        g1.rotate_right(1);
        g2.rotate_right(1);
        g1[0] = fb1;
        g2[0] = fb2;
    }
    Ok(CaCode { prn, chips })
}

/// `(1/N) Σ_n a[n]·b[(n − lag) mod N]`; the autocorrelation peak is 1.
pub fn circular_correlation(a: &[i8], b: &[i8], lag: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n == 0 || lag >= n {
        return Err(domain("circular_correlation", format!("lag {lag} outside [0, {n})")));
    }
    let mut acc: i64 = 0;
    for (i, &x) in a.iter().enumerate() {
        let j = (i + n - lag) % n;
        acc += i64::from(x) * i64::from(b[j]);
    }
    Ok(acc as f64 / n as f64)
}
