use super::{cf, gamma_p_int, gamma_pdf_int};
use crate::spectra::EigenvalueGroups;

/// Partial-fraction sums whose absolute terms exceed this lose more than
/// about 1e-11 to cancellation and are recomputed by inversion.
const CANCELLATION_LIMIT: f64 = 1e5;
/// Tolerated excursion of the closed form outside `[0, 1]`.
const BOX_TOLERANCE: f64 = 1e-6;

/// How a weighted chi-square probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfMethod {
    ClosedForm,
    CharacteristicFunction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WcsEvaluation {
    pub value: f64,
    pub method: CdfMethod,
    /// Sum of absolute partial-fraction terms; a conditioning indicator.
    pub term_magnitude: f64,
}

/// `Pr(sum_t delta_t G_t < x)` with `G_t ~ Gamma(r_t, 1)`, i.e. the CDF of the
/// squared norm of a complex Gaussian vector with the given spectrum.
pub fn wcs_cdf(groups: &EigenvalueGroups, x: f64) -> f64 {
    wcs_cdf_detailed(groups, x).value
}

pub fn wcs_cdf_detailed(groups: &EigenvalueGroups, x: f64) -> WcsEvaluation {
    if groups.is_empty() || x <= 0.0 {
        return WcsEvaluation { value: 0.0, method: CdfMethod::ClosedForm, term_magnitude: 0.0 };
    }
    if x.is_infinite() {
        return WcsEvaluation { value: 1.0, method: CdfMethod::ClosedForm, term_magnitude: 1.0 };
    }
    let (value, magnitude) = partial_fractions(groups, |shape, scale| gamma_p_int(shape, x / scale));
    let well_conditioned = value.is_finite()
        && magnitude < CANCELLATION_LIMIT
        && value > -BOX_TOLERANCE
        && value < 1.0 + BOX_TOLERANCE;
    if well_conditioned {
        WcsEvaluation { value: value.clamp(0.0, 1.0), method: CdfMethod::ClosedForm, term_magnitude: magnitude }
    } else {
        WcsEvaluation {
            value: cf::cdf(groups, x).clamp(0.0, 1.0),
            method: CdfMethod::CharacteristicFunction,
            term_magnitude: magnitude,
        }
    }
}

/// Density of the same weighted sum.
pub fn wcs_pdf(groups: &EigenvalueGroups, x: f64) -> f64 {
    if groups.is_empty() || x < 0.0 || x.is_infinite() {
        return 0.0;
    }
    let (value, magnitude) = partial_fractions(groups, |shape, scale| gamma_pdf_int(shape, scale, x));
    let scale = groups.values().iter().fold(f64::INFINITY, |m, &v| m.min(v)).recip();
    let bad = !value.is_finite() || magnitude > CANCELLATION_LIMIT * scale.max(1.0) || value < -BOX_TOLERANCE;
    if bad && groups.total_degrees() > 1 {
        cf::pdf(groups, x).max(0.0)
    } else {
        value.max(0.0)
    }
}

/// Expands the Laplace transform `prod_t (1 + u delta_t)^{-r_t}` in partial
/// fractions. For each group `k` the factor
/// `prod_{n != k} (1 - delta_n/delta_k)^{-r_n}` multiplies the coefficients of
/// `prod_{n != k} (1 + w/e_n)^{-r_n}`, `e_n = delta_k/delta_n - 1`, truncated at
/// degree `r_k - 1` (the sum over compositions of the degree). Each coefficient
/// pairs with a gamma law of shape `r_k - q` and scale `delta_k`, evaluated by
/// `kernel(shape, scale)`. Returns the sum and the sum of absolute terms.
fn partial_fractions(groups: &EigenvalueGroups, kernel: impl Fn(usize, f64) -> f64) -> (f64, f64) {
    let values = groups.values();
    let mults = groups.multiplicities();
    let mut sum = 0.0;
    let mut compensation = 0.0;
    let mut magnitude = 0.0;
    let mut coeffs = Vec::new();
    let mut factor = Vec::new();
    for (k, (&dk, &rk)) in values.iter().zip(mults).enumerate() {
        let mut log_base = 0.0;
        let mut negative = false;
        coeffs.clear();
        coeffs.resize(rk, 0.0);
        coeffs[0] = 1.0;
        for (n, (&dn, &rn)) in values.iter().zip(mults).enumerate() {
            if n == k {
                continue;
            }
            let ratio = 1.0 - dn / dk;
            log_base -= rn as f64 * ratio.abs().ln();
            if ratio < 0.0 && rn % 2 == 1 {
                negative = !negative;
            }
            if rk == 1 {
                continue;
            }
            let e = dk / dn - 1.0;
            factor.clear();
            factor.push(1.0);
            for i in 1..rk {
                let prev = factor[i - 1];
                factor.push(-prev * (rn + i - 1) as f64 / (i as f64 * e));
            }
            for q in (1..rk).rev() {
                let mut acc = 0.0;
                for i in 0..=q {
                    acc += coeffs[q - i] * factor[i];
                }
                coeffs[q] = acc;
            }
        }
        let sign = if negative { -1.0 } else { 1.0 };
        for (q, &c) in coeffs.iter().enumerate() {
            let g = kernel(rk - q, dk);
            let prod = c * g;
            if prod == 0.0 {
                continue;
            }
            let term = sign * prod.signum() * (log_base + prod.abs().ln()).exp();
            magnitude += term.abs();
            // Neumaier summation.
            let t = sum + term;
            if sum.abs() >= term.abs() {
                compensation += (sum - t) + term;
            } else {
                compensation += (term - t) + sum;
            }
            sum = t;
        }
    }
    (sum + compensation, magnitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma_p_int;

    fn groups(values: &[f64], mults: &[usize]) -> EigenvalueGroups {
        EigenvalueGroups::new(values.to_vec(), mults.to_vec()).unwrap()
    }

    #[test]
    fn single_exponential() {
        let g = groups(&[2.5], &[1]);
        for &x in &[0.1, 1.0, 4.0, 30.0] {
            assert!((wcs_cdf(&g, x) - (1.0 - (-x / 2.5f64).exp())).abs() < 1e-15);
            assert!((wcs_pdf(&g, x) - (-x / 2.5f64).exp() / 2.5).abs() < 1e-15);
        }
        assert_eq!(wcs_pdf(&groups(&[1.0], &[1]), 0.0), 1.0);
    }

    #[test]
    fn single_group_is_gamma() {
        let g = groups(&[1.0], &[6]);
        for &x in &[0.5, 3.0, 6.0, 15.0] {
            assert!((wcs_cdf(&g, x) - gamma_p_int(6, x)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_distinct_values() {
        let g = groups(&[3.0, 1.0], &[1, 1]);
        let x = 2.0f64;
        let want = 1.0 - (3.0 * (-x / 3.0).exp() - (-x).exp()) / 2.0;
        assert!((wcs_cdf(&g, x) - want).abs() < 1e-15);
        let dens = ((-x / 3.0).exp() - (-x).exp()) / 2.0;
        assert!((wcs_pdf(&g, x) - dens).abs() < 1e-15);
    }

    #[test]
    fn mixed_multiplicity_closed_form() {
        // X = 2 E1 + Gamma(2,1): CDF by direct convolution
        // F(x) = int_0^x P(2, x - s) (1/2) e^{-s/2} ds.
        let g = groups(&[2.0, 1.0], &[1, 2]);
        let x = 1.5f64;
        let rule = crate::quadrature::GaussLegendre::new(64);
        let want = rule.integrate(0.0, x, |s| gamma_p_int(2, x - s) * 0.5 * (-s / 2.0).exp());
        assert!((wcs_cdf(&g, x) - want).abs() < 1e-13);
    }

    #[test]
    fn ill_conditioned_spectrum_uses_inversion_and_stays_accurate() {
        // Eigenvalues of a 64-antenna exponential correlation with r = 0.8.
        let r = crate::channel_models::build_exponential_covariance(64, num_complex::Complex64::new(0.8, 0.0)).unwrap();
        let all: Vec<usize> = (0..64).collect();
        let g = crate::spectra::prefix_spectrum(&r, &all).unwrap();
        let eval = wcs_cdf_detailed(&g, 31.0);
        assert_eq!(eval.method, CdfMethod::CharacteristicFunction);
        let (closed, _) = partial_fractions(&g, |s, d| gamma_p_int(s, 31.0 / d));
        assert!((eval.value - closed).abs() < 1e-8);
    }

    #[test]
    fn inversion_agrees_with_closed_form_on_benign_spectra() {
        let g = groups(&[3.0, 1.7, 0.4], &[2, 1, 3]);
        for &x in &[0.3, 2.0, 6.0, 14.0] {
            let (closed, _) = partial_fractions(&g, |s, d| gamma_p_int(s, x / d));
            assert!((cf::cdf(&g, x) - closed).abs() < 1e-11, "x={x}");
            let (dens, _) = partial_fractions(&g, |s, d| gamma_pdf_int(s, d, x));
            assert!((cf::pdf(&g, x) - dens).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn boundary_values() {
        let g = groups(&[1.0, 0.5], &[2, 1]);
        assert_eq!(wcs_cdf(&g, 0.0), 0.0);
        assert!((wcs_cdf(&g, 200.0) - 1.0).abs() < 1e-15);
        assert_eq!(wcs_cdf(&EigenvalueGroups::empty(), 3.0), 0.0);
    }
}
