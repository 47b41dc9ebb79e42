//! Independent reference evaluations used only to validate the fast paths.
//!
//! None of these share code with [`super::exp_integral_ei`] or
//! [`super::integrate_adaptive`]: the exponential integral is evaluated
//! through Ramanujan's rearranged series, or through a fixed composite
//! Gauss–Legendre rule on the Laplace-type representation of `E1`.

use super::EULER_GAMMA;

/// Ramanujan's series
/// `Ei(x) = γ + ln|x| + e^{x/2} Σ_{n≥1} (−1)^{n−1} xⁿ / (n!·2^{n−1}) · Σ_{k=0}^{⌊(n−1)/2⌋} 1/(2k+1)`.
///
/// Converges for every real x ≠ 0; loses accuracy for x ≪ 0 where the
/// result is exponentially small next to `γ + ln|x|`.
pub fn ei_ramanujan(x: f64) -> f64 {
    let mut outer = 0.0;
    let mut inner = 0.0; // Σ_{k ≤ (n−1)/2} 1/(2k+1)
    let mut coeff = 1.0; // (−1)^{n−1} xⁿ / (n! 2^{n−1}), built incrementally
    let limit = (3.0 * x.abs()) as usize + 60;
    for n in 1..=limit {
        if n == 1 {
            coeff = x;
        } else {
            coeff *= -x / (2.0 * n as f64);
        }
        if n % 2 == 1 {
            inner += 1.0 / n as f64;
        }
        let term = coeff * inner;
        outer += term;
        if n as f64 > x.abs() && term.abs() < 1e-18 * outer.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + (0.5 * x).exp() * outer
}

/// `E1(x) = e^{−x} ∫_0^∞ e^{−u}/(x+u) du` for x ≥ 1, by composite
/// 16-point Gauss–Legendre over `u ∈ [0, 60]`.
pub fn e1_laplace_quadrature(x: f64) -> f64 {
    assert!(x >= 1.0, "reference E1 quadrature needs x ≥ 1");
    let (nodes, weights) = gauss_legendre(16);
    let panels = 240;
    let upper = 60.0;
    let h = upper / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        let mid = a + 0.5 * h;
        let mut s = 0.0;
        for (&z, &w) in nodes.iter().zip(&weights) {
            let u = mid + 0.5 * h * z;
            s += w * (-u).exp() / (x + u);
        }
        total += 0.5 * h * s;
    }
    (-x).exp() * total
}

/// Reference `Ei` on `0 < |x| ≤ 40`.
pub fn ei_reference(x: f64) -> f64 {
    assert!(x != 0.0 && x.abs() <= 40.0, "reference Ei covers 0 < |x| ≤ 40");
    if x >= -5.0 {
        ei_ramanujan(x)
    } else {
        -e1_laplace_quadrature(-x)
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on Pₙ.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
