use super::NumericsError;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest |x| accepted by [`exp_integral_ei`]; `Ei(700)` is about 1.4e301.
pub const EI_ARGUMENT_LIMIT: f64 = 700.0;

/// Positive arguments up to this value use the power series, beyond it the
/// asymptotic expansion. Both agree to better than 1e-15 relative here.
pub const EI_SERIES_LIMIT: f64 = 40.0;

// Below this, the alternating series for negative x loses too many digits
// to cancellation, so the E1 continued fraction takes over.
const NEGATIVE_SERIES_LIMIT: f64 = -1.0;

const MAX_TERMS: usize = 500;

/// Exponential integral `Ei(x) = −∫_{−x}^{∞} e^{−u}/u du` (principal value).
///
/// Positive arguments use the convergent power series up to
/// [`EI_SERIES_LIMIT`] and the asymptotic expansion beyond. Negative
/// arguments below −1 go through `Ei(x) = −E1(−x)` with `E1` evaluated by
/// its continued fraction.
pub fn exp_integral_ei(x: f64) -> Result<f64, NumericsError> {
    if x == 0.0 {
        return Err(NumericsError::Domain(
            "Ei has a logarithmic singularity at x = 0".into(),
        ));
    }
    if x.is_nan() {
        return Err(NumericsError::Domain("Ei(NaN)".into()));
    }
    if x.abs() > EI_ARGUMENT_LIMIT {
        return Err(NumericsError::Overflow(x.abs()));
    }
    Ok(if x > EI_SERIES_LIMIT {
        ei_asymptotic(x)
    } else if x >= NEGATIVE_SERIES_LIMIT {
        ei_series(x)
    } else {
        -e1_continued_fraction(-x)
    })
}

/// `γ + ln|x| + Σ_{k≥1} xᵏ/(k·k!)`, summed until the terms stop mattering.
///
/// Accurate for positive x of any size it is asked about here, and for
/// moderate negative x; for x ≪ 0 the alternating terms cancel.
pub fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        term *= x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum
}

/// `eˣ/x · Σ k!/xᵏ` truncated just before the smallest term.
pub fn ei_asymptotic(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=MAX_TERMS {
        let next = term * k as f64 / x;
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term <= f64::EPSILON * 0.25 * sum {
            break;
        }
    }
    x.exp() / x * sum
}

/// `E1(x)` for x > 1 via the modified Lentz evaluation of its continued
/// fraction.
fn e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_TERMS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h * (-x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Values from a 40-digit evaluation of the defining series.
    const EI_1: f64 = 1.895_117_816_355_936_8;
    const EI_02: f64 = -0.821_760_587_902_400_3;
    const EI_M1: f64 = -0.219_383_934_395_520_27;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn spot_values() {
        assert!((exp_integral_ei(1.0).unwrap() - 1.895_117_816_355_936_8).abs() <= 1e-12);
        assert!((exp_integral_ei(0.2).unwrap() - (-0.821_760_6)).abs() <= 1e-6);
        assert!((exp_integral_ei(-1.0).unwrap() - (-0.219_383_93)).abs() <= 1e-7);
        assert!(rel(exp_integral_ei(1.0).unwrap(), EI_1) < 1e-15);
        assert!(rel(exp_integral_ei(0.2).unwrap(), EI_02) < 1e-14);
        assert!(rel(exp_integral_ei(-1.0).unwrap(), EI_M1) < 1e-14);
    }

    #[test]
    fn zero_is_a_domain_error() {
        assert!(matches!(exp_integral_ei(0.0), Err(NumericsError::Domain(_))));
        assert!(matches!(exp_integral_ei(-0.0), Err(NumericsError::Domain(_))));
        assert!(matches!(exp_integral_ei(f64::NAN), Err(NumericsError::Domain(_))));
    }

    #[test]
    fn overflow_guard() {
        assert!(exp_integral_ei(700.0).unwrap().is_finite());
        assert!(exp_integral_ei(-700.0).unwrap() < 0.0);
        assert!(matches!(exp_integral_ei(700.5), Err(NumericsError::Overflow(_))));
        assert!(matches!(exp_integral_ei(-701.0), Err(NumericsError::Overflow(_))));
        assert!(matches!(exp_integral_ei(f64::INFINITY), Err(NumericsError::Overflow(_))));
    }

    #[test]
    fn series_and_asymptotic_agree_at_crossover() {
        let x = EI_SERIES_LIMIT;
        assert!(rel(ei_series(x), ei_asymptotic(x)) <= 1e-10);
        // Continuity across the switch.
        let below = exp_integral_ei(x).unwrap();
        let above = exp_integral_ei(x + 1e-9).unwrap();
        assert!(above > below);
        assert!(rel(above, below) < 1e-8);
    }

    #[test]
    fn negative_branch_switch_is_continuous() {
        let s = ei_series(-1.0);
        let cf = -e1_continued_fraction(1.0);
        assert!(rel(s, cf) < 1e-13, "{s} vs {cf}");
    }

    #[test]
    fn asymptotic_consistency_where_expansion_is_accurate() {
        // Truncated at its smallest term the expansion carries a relative
        // error of roughly sqrt(2π/x)·e^{−x}, which only drops below 1e-8 from
        // x ≈ 21 on.
        let mut x = 22.0;
        while x <= 30.0 {
            let got = exp_integral_ei(x).unwrap();
            assert!(rel(got, ei_asymptotic(x)) <= 1e-8, "x = {x}");
            x += 0.25;
        }
        assert!(rel(ei_series(10.0), ei_asymptotic(10.0)) > 1e-8);
    }

    #[test]
    fn sign_structure() {
        for &x in &[-600.0, -30.0, -5.0, -1.0, -0.5, -1e-3, -1e-12] {
            assert!(exp_integral_ei(x).unwrap() < 0.0, "x = {x}");
        }
        // Ei changes sign once on the positive axis, near 0.3725.
        assert!(exp_integral_ei(0.372).unwrap() < 0.0);
        assert!(exp_integral_ei(0.373).unwrap() > 0.0);
    }

    proptest! {
        #[test]
        fn strictly_increasing_on_positive_axis(mut xs in prop::collection::vec(1e-6f64..650.0, 2..40)) {
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            for w in xs.windows(2) {
                let (a, b) = (exp_integral_ei(w[0]).unwrap(), exp_integral_ei(w[1]).unwrap());
                prop_assert!(a < b, "Ei({}) = {} !< Ei({}) = {}", w[0], a, w[1], b);
            }
        }

        #[test]
        fn strictly_decreasing_on_negative_axis(mut xs in prop::collection::vec(-650.0f64..-1e-6, 2..40)) {
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            for w in xs.windows(2) {
                prop_assert!(exp_integral_ei(w[0]).unwrap() > exp_integral_ei(w[1]).unwrap());
            }
        }
    }
}
