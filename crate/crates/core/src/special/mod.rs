//! Special functions: first-order Marcum Q, the distribution of a positive
//! weighted sum of chi-square variates, and integer-shape incomplete gamma.

mod cf;
mod marcum;
mod wcs;

use std::sync::OnceLock;

pub use marcum::marcum_q1;
pub use wcs::{wcs_cdf, wcs_cdf_detailed, wcs_pdf, CdfMethod, WcsEvaluation};

const FACTORIAL_TABLE: usize = 256;

fn factorial_table() -> &'static [f64; FACTORIAL_TABLE] {
    static TABLE: OnceLock<[f64; FACTORIAL_TABLE]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; FACTORIAL_TABLE];
        for n in 1..FACTORIAL_TABLE {
            t[n] = t[n - 1] + (n as f64).ln();
        }
        t
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < FACTORIAL_TABLE {
        return factorial_table()[n];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Regularized lower incomplete gamma `P(n, y)` for integer shape `n >= 1`.
pub fn gamma_p_int(n: usize, y: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if y <= 0.0 {
        return 0.0;
    }
    if y.is_infinite() {
        return 1.0;
    }
    if y < n as f64 + 1.0 {
        lower_series(n, y)
    } else {
        1.0 - upper_sum(n, y)
    }
}

/// Regularized upper incomplete gamma `Q(n, y) = e^{-y} sum_{u<n} y^u / u!`.
pub fn gamma_q_int(n: usize, y: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    if y.is_infinite() {
        return 0.0;
    }
    if y < n as f64 + 1.0 {
        1.0 - lower_series(n, y)
    } else {
        upper_sum(n, y)
    }
}

/// `e^{-y} y^n / n! * sum_k y^k / ((n+1)...(n+k))`, all terms positive.
fn lower_series(n: usize, y: f64) -> f64 {
    let log_pref = n as f64 * y.ln() - y - ln_factorial(n);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1usize;
    loop {
        term *= y / (n + k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1;
    }
    (log_pref.exp() * sum).min(1.0)
}

/// `e^{-y} sum_{u<n} y^u / u!` summed from the largest term downwards (`y > n - 1`).
fn upper_sum(n: usize, y: f64) -> f64 {
    let top = n - 1;
    let mut term = (top as f64 * y.ln() - y - ln_factorial(top)).exp();
    let mut sum = term;
    for u in (1..=top).rev() {
        term *= u as f64 / y;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum.min(1.0)
}

/// Density of a Gamma(shape `n`, scale `scale`) variate at `x`.
pub fn gamma_pdf_int(n: usize, scale: f64, x: f64) -> f64 {
    if x < 0.0 || n == 0 {
        return 0.0;
    }
    if x == 0.0 {
        return if n == 1 { 1.0 / scale } else { 0.0 };
    }
    let z = x / scale;
    (((n - 1) as f64) * z.ln() - z - ln_factorial(n - 1)).exp() / scale
}

/// Exponentially scaled modified Bessel function `e^{-x} I_0(x)`, `x >= 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    if x <= 30.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let odd = (2 * k - 1) as f64;
            let next = term * odd * odd / (8.0 * k as f64 * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p_reference(n: usize, y: f64) -> f64 {
        // Direct finite sum, fine for small arguments.
        let mut term = (-y).exp();
        let mut s = 0.0;
        for u in 0..n {
            if u > 0 {
                term *= y / u as f64;
            }
            s += term;
        }
        1.0 - s
    }

    #[test]
    fn factorial_logs() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
        let direct: f64 = (1..=300).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(300) - direct).abs() < 1e-10);
        assert!((ln_factorial(255) + (256f64).ln() - ln_factorial(256)).abs() < 1e-10);
    }

    #[test]
    fn incomplete_gamma_matches_finite_sum() {
        for &n in &[1usize, 2, 3, 7, 20] {
            for &y in &[0.01, 0.5, 1.0, 3.0, 7.5, 19.0, 25.0, 40.0] {
                let got = gamma_p_int(n, y);
                let want = p_reference(n, y);
                assert!((got - want).abs() < 1e-13, "n={n} y={y} got={got} want={want}");
                assert!((got + gamma_q_int(n, y) - 1.0).abs() < 1e-14);
            }
        }
        assert!((gamma_p_int(1, 2.0) - (1.0 - (-2f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn incomplete_gamma_tails() {
        // Tiny lower tail keeps relative accuracy.
        let p = gamma_p_int(10, 1e-3);
        let want = (10.0 * 1e-3f64.ln() - 1e-3 - ln_factorial(10)).exp() * (1.0 + 1e-3 / 11.0);
        assert!((p / want - 1.0).abs() < 1e-6);
        assert_eq!(gamma_p_int(3, 0.0), 0.0);
        assert!(gamma_q_int(5, 900.0) < 1e-300);
        assert!((gamma_p_int(5, 900.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_density() {
        assert_eq!(gamma_pdf_int(1, 1.0, 0.0), 1.0);
        assert!((gamma_pdf_int(1, 2.0, 1.0) - 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((gamma_pdf_int(3, 1.0, 2.0) - 2.0 * (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn scaled_bessel_branches_agree() {
        assert!((bessel_i0e(0.0) - 1.0).abs() < 1e-16);
        // I0(1) = 1.2660658777520082
        assert!((bessel_i0e(1.0) - 1.2660658777520082 * (-1f64).exp()).abs() < 1e-15);
        let below = bessel_i0e(30.0);
        let above = bessel_i0e(30.0 + 1e-12);
        assert!((below - above).abs() < 1e-14);
        // Asymptotic leading behaviour.
        let x = 1e6;
        assert!((bessel_i0e(x) * (2.0 * std::f64::consts::PI * x).sqrt() - 1.0 - 1.0 / (8.0 * x)).abs() < 1e-12);
    }
}
