//! Gamma-family special functions for the evidential losses.
//!
//! All three functions shift the argument upward with the recurrence
//! `f(x + 1) = f(x) + g(x)` until `x >= 10` and then apply an asymptotic
//! series in `1 / x^2`. Only positive arguments are supported.

use crate::error::{Error, Result};

const SHIFT_THRESHOLD: f64 = 10.0;

/// B_{2k} / (2k) for k = 1..8.
const DIGAMMA_SERIES: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

/// B_{2k} for k = 1..8.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// B_{2k} / (2k (2k - 1)) for k = 1..8.
const STIRLING_SERIES: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

fn check_positive(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} requires a finite x > 0, got {x}"
        )))
    }
}

/// Digamma ψ(x) = d/dx ln Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive(x, "digamma")?;
    Ok(digamma_unchecked(x))
}

/// Trigamma ψ'(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive(x, "trigamma")?;
    Ok(trigamma_unchecked(x))
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive(x, "ln_gamma")?;
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < SHIFT_THRESHOLD {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    for c in DIGAMMA_SERIES.iter().rev() {
        series = series * inv2 + c;
    }
    acc + x.ln() - 0.5 / x - series * inv2
}

pub(crate) fn trigamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < SHIFT_THRESHOLD {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    // ψ'(x) ~ 1/x + 1/(2x²) + Σ B_{2k} / x^{2k+1}
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for b in BERNOULLI.iter().rev() {
        series = series * inv2 + b;
    }
    acc + inv + 0.5 * inv2 + series * inv2 * inv
}

pub(crate) fn ln_gamma_unchecked(mut x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let mut shift = 1.0;
    let mut shifted = false;
    while x < SHIFT_THRESHOLD {
        shift *= x;
        x += 1.0;
        shifted = true;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in STIRLING_SERIES.iter().rev() {
        series = series * inv2 + c;
    }
    let stirling = (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series * inv;
    if shifted {
        stirling - shift.ln()
    } else {
        stirling
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_identities() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
        let step = digamma(2.0).unwrap() - digamma(1.0).unwrap();
        assert!((step - 1.0).abs() < 1e-14);
        let half = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        assert!((digamma(0.5).unwrap() - half).abs() < 1e-13);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        assert!(trigamma(0.0).is_err());
        assert!(ln_gamma(f64::NAN).is_err());
    }

    #[test]
    fn trigamma_reference() {
        // Reference values computed with mpmath at 40 digits.
        let table = [
            (0.1, 101.433_299_150_792_76),
            (0.5, 4.934_802_200_544_679),
            (1.0, 1.644_934_066_848_226_4),
            (2.5, 0.490_357_756_100_234_86),
            (6.0, 0.181_322_955_737_115_33),
            (10.0, 0.105_166_335_681_685_75),
            (100.0, 0.010_050_166_663_333_571),
        ];
        for (x, want) in table {
            let got = trigamma(x).unwrap();
            assert!(
                (got - want).abs() < 1e-12 * want.max(1.0),
                "trigamma({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn ln_gamma_reference() {
        let table = [
            (0.1, 2.252_712_651_734_206),
            (0.5, 0.572_364_942_924_700_1),
            (1.0, 0.0),
            (1.5, -0.120_782_237_635_245_22),
            (2.0, 0.0),
            (3.3, 0.987_098_577_894_734_6),
            (7.0, 6.579_251_212_010_101),
            (10.5, 13.940_625_219_403_764),
            (50.0, 144.565_743_946_344_9),
            (200.0, 857.933_669_825_857_4),
        ];
        for (x, want) in table {
            let got = ln_gamma(x).unwrap();
            assert!(
                (got - want).abs() < 1e-12 * want.abs().max(1.0),
                "ln_gamma({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn trigamma_is_derivative_of_digamma() {
        for &x in &[0.3, 1.7, 4.4, 12.0, 75.0] {
            let h = 1e-5 * x;
            let fd = (digamma(x + h).unwrap() - digamma(x - h).unwrap()) / (2.0 * h);
            let an = trigamma(x).unwrap();
            assert!((fd - an).abs() / an < 1e-7);
        }
    }
}
