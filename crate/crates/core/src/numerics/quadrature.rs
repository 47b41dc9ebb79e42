use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{NumericsError, RealInterval};

pub const DEFAULT_MAX_EVALUATIONS: usize = 1_000_000;

// 15-point Kronrod nodes on [-1, 1] (non-negative half), with the embedded
// 7-point Gauss rule on the odd-indexed nodes plus the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// Absolute error estimate, the sum of per-panel |K15 − G7| differences.
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Globally adaptive Gauss–Kronrod (G7/K15) integration.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate satisfies `error ≤ max(tol, tol·|value|)`. Panels are processed
/// in a fixed order, so a given integrand and tolerance always produce the
/// same result.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveQuadrature {
    pub max_evaluations: usize,
}

impl Default for AdaptiveQuadrature {
    fn default() -> Self {
        Self {
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Ties broken on position so the heap order is total.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

impl AdaptiveQuadrature {
    pub fn integrate<F>(&self, f: F, interval: RealInterval, tol: f64) -> Result<QuadratureResult, NumericsError>
    where
        F: Fn(f64) -> f64,
    {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(NumericsError::InvalidTolerance(tol));
        }
        let mut evaluations = 0usize;
        let first = kronrod_panel(&f, interval.lo(), interval.hi(), &mut evaluations)?;
        let mut value = first.value;
        let mut error = first.error;
        let mut heap = BinaryHeap::from([first]);

        loop {
            if error <= tol.max(tol * value.abs()) {
                break;
            }
            if evaluations + 30 > self.max_evaluations {
                return Err(NumericsError::NonConvergence {
                    value,
                    error_estimate: error,
                    evaluations,
                });
            }
            let worst = heap.pop().expect("heap holds at least one panel");
            let mid = 0.5 * (worst.lo + worst.hi);
            if !(worst.lo < mid && mid < worst.hi) {
                // Panel can no longer be split in floating point.
                return Err(NumericsError::NonConvergence {
                    value,
                    error_estimate: error,
                    evaluations,
                });
            }
            let left = kronrod_panel(&f, worst.lo, mid, &mut evaluations)?;
            let right = kronrod_panel(&f, mid, worst.hi, &mut evaluations)?;
            heap.push(left);
            heap.push(right);
            // Re-sum instead of updating incrementally so cancellation in the
            // running totals cannot leave a stale estimate.
            value = 0.0;
            error = 0.0;
            for p in heap.iter() {
                value += p.value;
                error += p.error;
            }
        }

        Ok(QuadratureResult {
            value,
            error_estimate: error,
            evaluations,
        })
    }
}

/// [`AdaptiveQuadrature::integrate`] with the default evaluation limit.
pub fn integrate_adaptive<F>(f: F, interval: RealInterval, tol: f64) -> Result<QuadratureResult, NumericsError>
where
    F: Fn(f64) -> f64,
{
    AdaptiveQuadrature::default().integrate(f, interval, tol)
}

fn kronrod_panel<F>(f: &F, lo: f64, hi: f64, evaluations: &mut usize) -> Result<Panel, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |t: f64| -> Result<f64, NumericsError> {
        let y = f(t);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(NumericsError::NonFiniteIntegrand(t))
        }
    };

    let fc = eval(centre)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = eval(centre - dx)? + eval(centre + dx)?;
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    *evaluations += 15;

    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok(Panel { lo, hi, value, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::exp_integral_ei;

    fn iv(lo: f64, hi: f64) -> RealInterval {
        RealInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn polynomial_exactness() {
        let r = integrate_adaptive(|t| t, iv(0.0, 1.0), 1e-10).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        assert!(r.evaluations >= 3);
        assert!(r.error_estimate >= 0.0);
        // K15 integrates degree-22 polynomials exactly.
        let r = integrate_adaptive(|t| t.powi(20), iv(0.0, 1.0), 1e-12).unwrap();
        assert!((r.value - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn zero_integrand() {
        let r = integrate_adaptive(|_| 0.0, iv(5.0, 105.0), 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn antiderivative_identity_for_ei() {
        let c = 1.0;
        let tol = 1e-10;
        let r = integrate_adaptive(|t| (c / t).exp() / t, iv(5.0, 105.0), tol).unwrap();
        let expected = exp_integral_ei(c / 5.0).unwrap() - exp_integral_ei(c / 105.0).unwrap();
        assert!((r.value - expected).abs() <= 10.0 * tol * expected.abs().max(1.0));
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(
            integrate_adaptive(|t| t, iv(0.0, 1.0), 0.0),
            Err(NumericsError::InvalidTolerance(_))
        ));
        assert!(integrate_adaptive(|t| t, iv(0.0, 1.0), f64::NAN).is_err());
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = integrate_adaptive(|t| 1.0 / (t - 0.5), iv(0.0, 1.0), 1e-8);
        // The centre node of the first panel lands on the pole.
        assert!(matches!(r, Err(NumericsError::NonFiniteIntegrand(_))));
    }

    #[test]
    fn evaluation_limit_yields_non_convergence() {
        let q = AdaptiveQuadrature { max_evaluations: 200 };
        let r = q.integrate(|t| (1.0 / t).sin(), iv(1e-4, 1.0), 1e-12);
        assert!(matches!(r, Err(NumericsError::NonConvergence { .. })));
    }

    #[test]
    fn deterministic() {
        let f = |t: f64| (3.0 * t).sin() * (-t).exp();
        let a = integrate_adaptive(f, iv(0.0, 10.0), 1e-12).unwrap();
        let b = integrate_adaptive(f, iv(0.0, 10.0), 1e-12).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn halving_tolerance_never_worsens_accuracy() {
        // (integrand, interval, exact value)
        let panel: Vec<(Box<dyn Fn(f64) -> f64>, RealInterval, f64)> = vec![
            (Box::new(|t: f64| t.exp()), iv(0.0, 3.0), 3f64.exp() - 1.0),
            (Box::new(|t: f64| 1.0 / (1.0 + t * t)), iv(-4.0, 4.0), 2.0 * 4f64.atan()),
            (Box::new(|t: f64| t.sqrt()), iv(0.0, 2.0), 2.0 / 3.0 * 2f64.powf(1.5)),
            (
                Box::new(|t: f64| (1.0 / t).exp() / t),
                iv(5.0, 105.0),
                exp_integral_ei(0.2).unwrap() - exp_integral_ei(1.0 / 105.0).unwrap(),
            ),
            (Box::new(|t: f64| (-t * t).exp()), iv(-3.0, 5.0), 1.772_434_273_710_916_7),
        ];
        for (f, interval, exact) in &panel {
            let mut tol = 1e-3;
            let mut previous = f64::INFINITY;
            while tol >= 1e-12 {
                let r = integrate_adaptive(f, *interval, tol).unwrap();
                let err = (r.value - exact).abs();
                assert!(
                    err <= previous + 4.0 * f64::EPSILON * exact.abs(),
                    "tol {tol}: error {err:e} grew from {previous:e}"
                );
                assert!(err <= tol.max(tol * r.value.abs()));
                previous = err;
                tol *= 0.5;
            }
        }
    }
}
