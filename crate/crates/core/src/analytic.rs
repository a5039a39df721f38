//! Closed-form and asymptotic average training lengths.
//!
//! Every expression has the form `L_t = 1 + sum_b Pr(||h_b||^2 < alpha)` where
//! `h_b` collects the first `b` trained entries; the summands are the per-step
//! continuation probabilities kept in [`TrainingLengthResult::step_cdfs`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel_models::CovarianceMatrix;
use crate::error::{invalid, Error, Result};
use crate::special::{gamma_p_int, wcs_cdf};
use crate::spectra::{
    check_simple_positive, compact_eig, exp_eig_approx_full, exp_eig_approx_prefix, group_eigenvalues,
    prefix_spectrum, EigenvalueGroups, DEFAULT_GROUP_TOL, DEFAULT_RANK_TOL,
};

pub const EULER_GAMMA: f64 = 0.5772156649;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthMethod {
    Exact,
    Approximation,
    BoundPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLengthResult {
    pub value: f64,
    pub method: LengthMethod,
    /// `Pr(||h_b||^2 < alpha)` for `b = 1 .. B-1`.
    pub step_cdfs: Vec<f64>,
}

impl TrainingLengthResult {
    fn from_steps(step_cdfs: Vec<f64>, method: LengthMethod) -> Self {
        // Smallest terms first keeps the rounding below the last ulp of the total.
        let mut sum = 0.0;
        let mut comp = 0.0;
        for &p in step_cdfs.iter().rev() {
            let t = sum + p;
            comp += if sum.abs() >= p.abs() { (sum - t) + p } else { (p - t) + sum };
            sum = t;
        }
        Self { value: 1.0 + (sum + comp), method, step_cdfs }
    }
}

fn check_alpha(alpha_th: f64) -> Result<()> {
    if !(alpha_th >= 0.0) || alpha_th.is_infinite() {
        return Err(invalid(format!("threshold must be finite and non-negative, got {alpha_th}")));
    }
    Ok(())
}

fn check_codebook(codebook: &DMatrix<Complex64>, antennas: usize) -> Result<()> {
    if codebook.nrows() != antennas {
        return Err(invalid(format!("codebook has {} rows, expected {antennas}", codebook.nrows())));
    }
    if codebook.ncols() == 0 || codebook.ncols() > antennas {
        return Err(invalid(format!("codebook must have between 1 and {antennas} beams")));
    }
    for (b, col) in codebook.column_iter().enumerate() {
        if (col.norm() - 1.0).abs() > 1e-8 {
            return Err(invalid(format!("beam {} is not unit-norm", b + 1)));
        }
    }
    Ok(())
}

/// Beam-domain scheme with an arbitrary codebook.
pub fn lt_beam_general(
    r: &CovarianceMatrix,
    codebook: &DMatrix<Complex64>,
    alpha_th: f64,
) -> Result<TrainingLengthResult> {
    check_alpha(alpha_th)?;
    check_codebook(codebook, r.dim())?;
    let beam = r.transformed(codebook)?;
    let beams = codebook.ncols();
    let order: Vec<usize> = (0..beams).collect();
    let mut steps = Vec::with_capacity(beams.saturating_sub(1));
    for b in 1..beams {
        steps.push(wcs_cdf(&prefix_spectrum(&beam, &order[..b])?, alpha_th));
    }
    Ok(TrainingLengthResult::from_steps(steps, LengthMethod::Exact))
}

/// Beam-domain scheme with the eigenvector codebook; only the `rank(R)`
/// nonzero-gain beams are trained.
pub fn lt_beam_modified(r: &CovarianceMatrix, alpha_th: f64) -> Result<TrainingLengthResult> {
    check_alpha(alpha_th)?;
    let eig = compact_eig(r, DEFAULT_RANK_TOL);
    let steps = (1..eig.rank())
        .map(|b| wcs_cdf(&group_eigenvalues(&eig.eigenvalues[..b], DEFAULT_GROUP_TOL), alpha_th))
        .collect();
    Ok(TrainingLengthResult::from_steps(steps, LengthMethod::Exact))
}

/// `sum_j l_j(0) (1 - e^{-alpha/delta_j})`, `l_j(0) = prod_{k != j} delta_j / (delta_j - delta_k)`:
/// the CDF of a sum of exponentials with distinct means, evaluated by the
/// weighted chi-square routine (which falls back to inversion when the
/// alternating weights cancel badly).
fn distinct_exponential_cdf(values: &[f64], alpha_th: f64) -> Result<f64> {
    let groups = EigenvalueGroups::singletons(values)?;
    Ok(wcs_cdf(&groups, alpha_th))
}

/// Large-`M` approximation of [`lt_beam_modified`] for exponential correlation
/// of magnitude `r`.
pub fn lt_beam_modified_exp_approx(antennas: usize, r: f64, alpha_th: f64) -> Result<TrainingLengthResult> {
    check_alpha(alpha_th)?;
    if r == 0.0 {
        let mut res = lt_iid(antennas, alpha_th)?;
        res.method = LengthMethod::Approximation;
        return Ok(res);
    }
    let values = exp_eig_approx_full(antennas, r)?;
    check_simple_positive(&values, 1e-12)?;
    let steps = (1..antennas)
        .map(|b| distinct_exponential_cdf(&values[..b], alpha_th))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainingLengthResult::from_steps(steps, LengthMethod::Approximation))
}

/// Basic antenna-domain scheme: antennas trained in index order.
pub fn lt_antenna_basic(r: &CovarianceMatrix, alpha_th: f64) -> Result<TrainingLengthResult> {
    check_alpha(alpha_th)?;
    let order: Vec<usize> = (0..r.dim()).collect();
    let mut steps = Vec::with_capacity(r.dim().saturating_sub(1));
    for m in 1..r.dim() {
        let groups: EigenvalueGroups = prefix_spectrum(r, &order[..m])?;
        steps.push(wcs_cdf(&groups, alpha_th));
    }
    Ok(TrainingLengthResult::from_steps(steps, LengthMethod::Exact))
}

/// Approximation of [`lt_antenna_basic`] for exponential correlation using
/// the asymptotic eigenvalues of each leading block.
pub fn lt_antenna_basic_exp_approx(antennas: usize, r: f64, alpha_th: f64) -> Result<TrainingLengthResult> {
    check_alpha(alpha_th)?;
    if antennas == 0 {
        return Err(invalid("array needs at least one antenna"));
    }
    if r == 0.0 {
        let mut res = lt_iid(antennas, alpha_th)?;
        res.method = LengthMethod::Approximation;
        return Ok(res);
    }
    let mut steps = Vec::with_capacity(antennas.saturating_sub(1));
    for m in 1..antennas {
        let values = exp_eig_approx_prefix(m, r)?;
        steps.push(distinct_exponential_cdf(&values, alpha_th)?);
    }
    Ok(TrainingLengthResult::from_steps(steps, LengthMethod::Approximation))
}

/// Independent channels: `1 + sum_{m<M} P(m, alpha)`.
pub fn lt_iid(antennas: usize, alpha_th: f64) -> Result<TrainingLengthResult> {
    check_alpha(alpha_th)?;
    if antennas == 0 {
        return Err(invalid("array needs at least one antenna"));
    }
    let steps = (1..antennas).map(|m| gamma_p_int(m, alpha_th)).collect();
    Ok(TrainingLengthResult::from_steps(steps, LengthMethod::Exact))
}

/// Fully correlated channels: `1 + sum_{m<M} (1 - e^{-alpha/m})`.
pub fn lt_fully_correlated(antennas: usize, alpha_th: f64) -> Result<TrainingLengthResult> {
    check_alpha(alpha_th)?;
    if antennas == 0 {
        return Err(invalid("array needs at least one antenna"));
    }
    let steps = (1..antennas).map(|m| -(-alpha_th / m as f64).exp_m1()).collect();
    Ok(TrainingLengthResult::from_steps(steps, LengthMethod::Exact))
}

/// Large-`M` sandwich for the fully correlated training length.
pub fn fc_asymptotic_bounds(antennas: usize, alpha_th: f64) -> Result<(f64, f64)> {
    check_alpha(alpha_th)?;
    if antennas < 2 {
        return Err(invalid("bounds need at least two antennas"));
    }
    let upper = alpha_th * (antennas as f64).ln() + 1.0 + alpha_th * EULER_GAMMA;
    let lower = upper - std::f64::consts::PI.powi(2) * alpha_th * alpha_th / 12.0;
    Ok((lower, upper))
}

/// Exact path for exponential correlation, used when an approximation hits an
/// excluded correlation value.
pub fn exact_or_approx_antenna(antennas: usize, r: f64, alpha_th: f64) -> Result<TrainingLengthResult> {
    match lt_antenna_basic_exp_approx(antennas, r, alpha_th) {
        Err(Error::DegenerateSpectrum(_)) => {
            let cov = crate::channel_models::build_exponential_covariance(antennas, Complex64::new(r, 0.0))?;
            lt_antenna_basic(&cov, alpha_th)
        }
        other => other,
    }
}
