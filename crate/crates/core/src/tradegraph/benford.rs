//! First-digit (Benford) goodness-of-fit screen for transaction prices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chi-square critical value at the 95% level with 8 degrees of freedom.
pub const BENFORD_CRITICAL_95: f64 = 15.507;

/// Expected share of leading digit `d` (1..=9): `log10(1 + 1/d)`.
pub fn benford_expected(d: u8) -> f64 {
    assert!((1..=9).contains(&d), "digit out of range: {d}");
    (1.0 + 1.0 / d as f64).log10()
}

/// Leading significant digit of a positive finite number.
pub fn first_significant_digit(x: f64) -> Option<u8> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    // shortest round-trip scientific form, e.g. "4.2e-3"
    let sci = format!("{x:e}");
    sci.bytes().next().map(|b| b - b'0')
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenfordResult {
    /// Counts for digits 1..=9.
    pub observed: [u64; 9],
    pub expected: [f64; 9],
    pub chi_square: f64,
    pub n: u64,
}

impl BenfordResult {
    pub fn conforms_at_95(&self) -> bool {
        self.chi_square < BENFORD_CRITICAL_95
    }
}

/// `sum_d (O_d - n p_d)^2 / (n p_d)` with `n = sum_d O_d`. Counts may be
/// fractional.
pub fn benford_chi_square(observed: &[f64; 9]) -> f64 {
    let n: f64 = observed.iter().sum();
    observed
        .iter()
        .zip(1u8..)
        .map(|(&o, d)| {
            let e = n * benford_expected(d);
            (o - e) * (o - e) / e
        })
        .sum()
}

pub fn benford_test(prices: &[f64]) -> Result<BenfordResult> {
    if prices.is_empty() {
        return Err(Error::InsufficientData(
            "benford test needs at least one price".into(),
        ));
    }
    let mut observed = [0u64; 9];
    for (index, &value) in prices.iter().enumerate() {
        let d = first_significant_digit(value).ok_or(Error::NonPositiveValue { index, value })?;
        observed[usize::from(d - 1)] += 1;
    }
    let counts = observed.map(|c| c as f64);
    Ok(BenfordResult {
        observed,
        expected: std::array::from_fn(|i| benford_expected(i as u8 + 1)),
        chi_square: benford_chi_square(&counts),
        n: prices.len() as u64,
    })
}
