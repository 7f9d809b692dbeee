//! Error counting and binomial confidence intervals.

/// Two-sided 95% standard-normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Symbol and bit error tallies for one simulation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub symbols: u64,
    pub symbol_errors: u64,
    pub bits: u64,
    pub bit_errors: u64,
}

impl ErrorCounts {
    /// Tallies one decided symbol against the sent one. Bits use the Gray
    /// label of the level index.
    pub fn record(&mut self, sent: usize, decided: usize, bits_per_symbol: u32) {
        self.symbols += 1;
        self.bits += u64::from(bits_per_symbol);
        if sent != decided {
            self.symbol_errors += 1;
            self.bit_errors += u64::from((gray(sent) ^ gray(decided)).count_ones());
        }
    }

    /// Counts a symbol that could not be decided as wrong in every bit.
    pub fn record_erasure(&mut self, bits_per_symbol: u32) {
        self.symbols += 1;
        self.symbol_errors += 1;
        self.bits += u64::from(bits_per_symbol);
        self.bit_errors += u64::from(bits_per_symbol);
    }

    pub fn merge(&mut self, other: &ErrorCounts) {
        self.symbols += other.symbols;
        self.symbol_errors += other.symbol_errors;
        self.bits += other.bits;
        self.bit_errors += other.bit_errors;
    }

    pub fn ser(&self) -> f64 {
        ratio(self.symbol_errors, self.symbols)
    }

    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.bits)
    }

    pub fn ser_interval(&self) -> (f64, f64) {
        wilson_interval(self.symbol_errors, self.symbols, Z_95)
    }

    pub fn ber_interval(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.bits, Z_95)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Binary-reflected Gray code.
pub fn gray(index: usize) -> usize {
    index ^ (index >> 1)
}

/// Bits carried by one symbol of an `order`-level alphabet.
pub fn bits_per_symbol(order: usize) -> u32 {
    usize::BITS - (order.max(2) - 1).leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_estimate() {
        let (lo, hi) = wilson_interval(10, 100, Z_95);
        assert!(lo < 0.1 && 0.1 < hi);
        let (lo, hi) = wilson_interval(0, 1000, Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for i in 0..63 {
            assert_eq!((gray(i) ^ gray(i + 1)).count_ones(), 1);
        }
        assert_eq!(bits_per_symbol(2), 1);
        assert_eq!(bits_per_symbol(4), 2);
        assert_eq!(bits_per_symbol(5), 3);
    }

    #[test]
    fn counts_bits_through_gray_labels() {
        let mut c = ErrorCounts::default();
        c.record(0, 0, 2);
        c.record(1, 2, 2);
        c.record_erasure(2);
        assert_eq!(c.symbols, 3);
        assert_eq!(c.symbol_errors, 2);
        assert_eq!(c.bit_errors, 1 + 2);
        assert_eq!(c.bits, 6);
    }
}
