//! Eigendecompositions, spectra of trained prefixes, eigenvalue grouping and
//! the closed-form eigenvalue approximations for exponential correlation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel_models::CovarianceMatrix;
use crate::error::{invalid, Error, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Eigenvalues closer than this relative gap are merged into one group.
pub const DEFAULT_GROUP_TOL: f64 = 1e-9;

/// Correlation thresholds selecting the branch of the prefix approximation.
pub const SMALL_CORRELATION_LIMIT: f64 = 0.2;
pub const NEAR_UNIT_CORRELATION_LIMIT: f64 = 0.9;

/// Compact eigendecomposition `R = U diag(eigenvalues) U^H`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Descending, strictly positive.
    pub eigenvalues: Vec<f64>,
    /// `M x rank`, columns orthonormal, first significant entry real-positive.
    pub eigenvectors: DMatrix<Complex64>,
}

impl EigenSystem {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// `U diag(sqrt(eigenvalues))`, the colouring transform for sampling.
    pub fn sqrt_factor(&self) -> DMatrix<Complex64> {
        let mut f = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = lambda.sqrt();
            f.column_mut(k).iter_mut().for_each(|z| *z *= s);
        }
        f
    }

    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let f = self.sqrt_factor();
        &f * f.adjoint()
    }
}

/// Distinct eigenvalues with multiplicities, the parameter of a weighted sum
/// of chi-square variates.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueGroups {
    values: Vec<f64>,
    multiplicities: Vec<usize>,
}

impl EigenvalueGroups {
    pub fn new(values: Vec<f64>, multiplicities: Vec<usize>) -> Result<Self> {
        if values.len() != multiplicities.len() {
            return Err(invalid("values and multiplicities differ in length"));
        }
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(invalid("group values must be positive and finite"));
        }
        if multiplicities.contains(&0) {
            return Err(invalid("multiplicities must be positive"));
        }
        Ok(Self { values, multiplicities })
    }

    /// Each value its own group.
    pub fn singletons(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), vec![1; values.len()])
    }

    pub fn empty() -> Self {
        Self { values: Vec::new(), multiplicities: Vec::new() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_degrees(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.values.iter().copied().zip(self.multiplicities.iter().copied())
    }

    /// Mean of the weighted sum.
    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, r)| v * r as f64).sum()
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending with
/// eigenvectors phase-normalized.
pub(crate) fn hermitian_eig(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let peak = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lead = col.iter().find(|z| z.norm() > 1e-8 * peak).copied().unwrap_or(Complex64::new(1.0, 0.0));
        let phase = lead.conj() / lead.norm();
        for r in 0..n {
            vectors[(r, dst)] = col[r] * phase;
        }
    }
    (values, vectors)
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Compact eigendecomposition; eigenvalues below `rank_tol * lambda_max` are dropped.
pub fn compact_eig(r: &CovarianceMatrix, rank_tol: f64) -> EigenSystem {
    let (values, vectors) = hermitian_eig(r.entries());
    let max = values.first().copied().unwrap_or(0.0);
    let rank = values.iter().take_while(|&&v| v > rank_tol * max && v > 0.0).count();
    EigenSystem {
        eigenvalues: values[..rank].to_vec(),
        eigenvectors: vectors.columns(0, rank).into_owned(),
    }
}

/// Merges consecutive values of a descending sequence whose relative gap is
/// below `group_tol` into one group at their arithmetic mean.
pub fn group_eigenvalues(raw: &[f64], group_tol: f64) -> EigenvalueGroups {
    let mut values = Vec::new();
    let mut multiplicities = Vec::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut prev = f64::NAN;
    for &v in raw.iter().filter(|&&v| v > 0.0) {
        if count > 0 && (prev - v).abs() <= group_tol * prev.abs().max(v.abs()) {
            sum += v;
            count += 1;
        } else {
            if count > 0 {
                values.push(sum / count as f64);
                multiplicities.push(count);
            }
            sum = v;
            count = 1;
        }
        prev = v;
    }
    if count > 0 {
        values.push(sum / count as f64);
        multiplicities.push(count);
    }
    EigenvalueGroups { values, multiplicities }
}

/// Spectrum of the trained channel power on the (0-based) index set. The
/// nonzero eigenvalues of `[R]_{A,A}` coincide with those of the row-selected
/// square root Gram matrix.
pub fn prefix_spectrum(r: &CovarianceMatrix, indices: &[usize]) -> Result<EigenvalueGroups> {
    prefix_spectrum_with(r, indices, DEFAULT_RANK_TOL, DEFAULT_GROUP_TOL)
}

pub fn prefix_spectrum_with(
    r: &CovarianceMatrix,
    indices: &[usize],
    rank_tol: f64,
    group_tol: f64,
) -> Result<EigenvalueGroups> {
    if indices.is_empty() {
        return Err(invalid("prefix index set is empty"));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= r.dim()) {
        return Err(invalid(format!("index {bad} out of range for {} antennas", r.dim())));
    }
    let sub = r.principal_submatrix(indices);
    let raw = hermitian_eigenvalues(&sub);
    let diag_scale = (0..r.dim()).map(|i| r.get(i, i).re).fold(0.0, f64::max);
    let floor = rank_tol * raw[0].max(diag_scale);
    let kept: Vec<f64> = raw.into_iter().filter(|&v| v > floor).collect();
    Ok(group_eigenvalues(&kept, group_tol))
}

/// Large-`M` eigenvalue approximation of the `M x M` exponential correlation
/// matrix, descending.
pub fn exp_eig_approx_full(antennas: usize, r: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&r) {
        return Err(invalid(format!("correlation magnitude must lie in [0, 1), got {r}")));
    }
    if antennas == 0 {
        return Err(invalid("array needs at least one antenna"));
    }
    let m = antennas as f64;
    Ok((1..=antennas)
        .map(|j| {
            let angle = (m + r) * (m + 1.0 - j as f64) * PI / (m * (m + 1.0));
            (1.0 - r * r) / (1.0 + r * r + 2.0 * r * angle.cos())
        })
        .collect())
}

/// Asymptotic regime used for the eigenvalues of an `m x m` exponential block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefixRegime {
    SmallCorrelation,
    NearUnitCorrelation,
    Intermediate,
}

impl PrefixRegime {
    pub fn for_correlation(r: f64) -> Self {
        if r < SMALL_CORRELATION_LIMIT {
            PrefixRegime::SmallCorrelation
        } else if r > NEAR_UNIT_CORRELATION_LIMIT {
            PrefixRegime::NearUnitCorrelation
        } else {
            PrefixRegime::Intermediate
        }
    }
}

/// `Phi(r, m, i)`, the intermediate-regime eigenvalue approximation.
fn phi(r: f64, m: usize, i: usize) -> f64 {
    let (mf, i) = (m as f64, i as f64);
    (1.0 - r * r)
        / (1.0 + r * r + 2.0 * r * r * (i * PI / mf).cos() + 2.0 * r * (1.0 - r) * (i * PI / (mf + 1.0)).cos())
}

/// Approximate eigenvalues of the leading `m x m` exponential block
/// (descending), with the regime chosen from `r`.
pub fn exp_eig_approx_prefix(m: usize, r: f64) -> Result<Vec<f64>> {
    exp_eig_approx_prefix_with(m, r, PrefixRegime::for_correlation(r))
}

pub fn exp_eig_approx_prefix_with(m: usize, r: f64, regime: PrefixRegime) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(invalid("prefix size must be at least one"));
    }
    if m == 1 {
        return Ok(vec![1.0]);
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(format!("correlation magnitude must lie in (0, 1), got {r}")));
    }
    const EQUALITY_TOL: f64 = 1e-9;
    let mf = m as f64;
    let mut values = match regime {
        PrefixRegime::SmallCorrelation => {
            (1..=m).map(|j| 1.0 - 2.0 * r * (j as f64 * PI / (mf + 1.0)).cos()).collect::<Vec<_>>()
        }
        PrefixRegime::NearUnitCorrelation => {
            let mut v = Vec::with_capacity(m);
            for j in 1..m {
                let sec2 = 1.0 / (j as f64 * PI / (2.0 * mf)).cos().powi(2);
                let excluded = 1.0 - 6.0 * mf / (3.0 * sec2 + 2.0 * (mf * mf - 1.0));
                if (r - excluded).abs() < EQUALITY_TOL {
                    return Err(Error::DegenerateSpectrum(format!(
                        "r = {r} hits the excluded value {excluded} for m = {m}, j = {j}"
                    )));
                }
                v.push(0.5 * (1.0 - r) * sec2);
            }
            v.push(mf - (mf * mf - 1.0) * (1.0 - r) / 3.0);
            v
        }
        PrefixRegime::Intermediate => {
            let mut v: Vec<f64> = (1..m).map(|j| phi(r, m, j)).collect();
            let last = mf - v.iter().sum::<f64>();
            if let Some(j) = v.iter().position(|&p| (p - last).abs() < EQUALITY_TOL) {
                return Err(Error::DegenerateSpectrum(format!(
                    "m - sum(Phi) equals Phi(r, m, {}) for r = {r}, m = {m}",
                    j + 1
                )));
            }
            v.push(last);
            v
        }
    };
    values.sort_by(|a, b| b.total_cmp(a));
    check_simple_positive(&values, 1e-12)?;
    Ok(values)
}

/// Fails unless the descending values are positive and pairwise distinct.
pub(crate) fn check_simple_positive(values: &[f64], rel_tol: f64) -> Result<()> {
    if let Some(v) = values.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateSpectrum(format!("non-positive approximate eigenvalue {v}")));
    }
    for w in values.windows(2) {
        if (w[0] - w[1]).abs() <= rel_tol * w[0].abs() {
            return Err(Error::DegenerateSpectrum(format!("eigenvalues {} and {} collide", w[0], w[1])));
        }
    }
    Ok(())
}
