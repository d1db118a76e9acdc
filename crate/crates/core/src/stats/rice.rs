//! Ricean and Rayleigh envelope densities.

/// Switch from the power series to the asymptotic expansion of `ln I0`.
const ASYMPTOTIC_FROM: f64 = 30.0;

/// Natural log of the modified Bessel function `I0(x)`, finite for any
/// finite `x`.
pub fn ln_bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < ASYMPTOTIC_FROM {
        // sum_k (x^2/4)^k / (k!)^2
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > sum * 1e-17 {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum.ln()
    } else {
        // I0(x) ~ e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..100 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0).powi(2) / (kf * 8.0 * x);
            if next > term || next < 1e-17 {
                break;
            }
            term = next;
            sum += term;
        }
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
    }
}

pub fn bessel_i0(x: f64) -> f64 {
    ln_bessel_i0(x).exp()
}

/// Rayleigh density of envelope `r` for per-quadrature noise `sigma`.
pub fn rayleigh_pdf(r: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    r / s2 * (-r * r / (2.0 * s2)).exp()
}

/// Ricean density of envelope `r` for a signal of amplitude `s`.
pub fn rice_pdf(r: f64, s: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    (r.ln() - s2.ln() - (r * r + s * s) / (2.0 * s2) + ln_bessel_i0(r * s / s2)).exp()
}

/// Ratio of the Ricean to the Rayleigh density at envelope `r`:
/// `exp(-s^2 / 2 sigma^2) I0(r s / sigma^2)`.
pub fn rice_rayleigh_ratio(r: f64, s: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0 && r >= 0.0 && s >= 0.0);
    if s == 0.0 {
        return 1.0;
    }
    let s2 = sigma * sigma;
    (-s * s / (2.0 * s2) + ln_bessel_i0(r * s / s2)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bessel_reference_values() {
        // Abramowitz & Stegun table 9.8.
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008).abs() < 1e-13);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_44).abs() < 1e-11);
        assert!((bessel_i0(20.0) / 4.355_828_255_955_353e7 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_and_asymptotic_agree_at_switch() {
        // ln I0 from 30-digit arbitrary precision.
        for (x, want) in [
            (29.5, 26.893_178_122_058_44),
            (29.999, 27.383_718_243_899_23),
            (30.001, 27.385_684_623_009_95),
            (45.0, 42.180_539_604_307_14),
        ] {
            let got = ln_bessel_i0(x);
            assert!((got - want).abs() < 1e-12 * want, "{x}: {got} vs {want}");
        }
    }

    #[test]
    fn large_argument_is_finite() {
        let v = ln_bessel_i0(1e6);
        assert!(v.is_finite());
        assert!((v - (1e6 - 0.5 * (2.0 * std::f64::consts::PI * 1e6).ln())).abs() < 1e-6);
    }

    #[test]
    fn ratio_matches_density_quotient() {
        let (r, s, sigma) = (2.3, 1.1, 0.9);
        let q = rice_pdf(r, s, sigma) / rayleigh_pdf(r, sigma);
        assert!((q / rice_rayleigh_ratio(r, s, sigma) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_signal_ratio_is_one() {
        assert_eq!(rice_rayleigh_ratio(5.0, 0.0, 1.0), 1.0);
    }

    #[test]
    fn ratio_peaks_just_below_envelope() {
        // d/ds ln ratio = -s + r I1(rs)/I0(rs), negative at s = r.
        assert!(rice_rayleigh_ratio(5.0, 5.0, 1.0) < rice_rayleigh_ratio(5.0, 4.8, 1.0));
        // Below r = sqrt 2 the ratio falls with s.
        assert!(rice_rayleigh_ratio(1.0, 0.5, 1.0) < 1.0);
    }

    proptest! {
        // Holds for envelopes of at least 3 sigma and signals a sigma below.
        #[test]
        fn ratio_increases_with_signal(r in 3.0f64..20.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let top = r - 1.0;
            let (lo, hi) = if a < b { (a * top, b * top) } else { (b * top, a * top) };
            prop_assume!(hi - lo > 1e-6);
            prop_assert!(rice_rayleigh_ratio(r, hi, 1.0) > rice_rayleigh_ratio(r, lo, 1.0));
        }
    }
}
