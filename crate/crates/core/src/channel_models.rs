//! Channel covariance models for a uniform linear array: exponential
//! correlation and the one-ring model with a uniform power angle spectrum.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;

/// Default quadrature order for the one-ring integral.
pub const DEFAULT_ONE_RING_NODES: usize = 2048;

/// Eigenvalues below this fraction of the largest one are clamped to zero
/// when a covariance is repaired after numerical construction.
const PSD_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    /// Number of antennas.
    pub antennas: usize,
    /// Antenna spacing in wavelengths.
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn new(antennas: usize, spacing: f64) -> Result<Self> {
        if antennas == 0 {
            return Err(invalid("array needs at least one antenna"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(format!("antenna spacing must be positive, got {spacing}")));
        }
        Ok(Self { antennas, spacing })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialModel {
    pub rho: Complex64,
}

impl ExponentialModel {
    pub fn new(rho: Complex64) -> Result<Self> {
        if !(rho.norm() < 1.0) {
            return Err(invalid(format!("|rho| must be below 1, got {}", rho.norm())));
        }
        Ok(Self { rho })
    }

    pub fn magnitude(&self) -> f64 {
        self.rho.norm()
    }
}

/// Uniform power angle spectrum on `[theta_bar - delta_theta, theta_bar + delta_theta]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneRingModel {
    /// Mean angle of departure, radians.
    pub theta_bar: f64,
    /// Half-width of the angle interval, radians.
    pub delta_theta: f64,
}

impl OneRingModel {
    pub fn new(theta_bar: f64, delta_theta: f64) -> Result<Self> {
        let model = Self { theta_bar, delta_theta };
        model.validate()?;
        Ok(model)
    }

    /// Builds the model from the angular spread (standard deviation of the
    /// uniform spectrum), `delta_theta = sqrt(3) * sigma_a`.
    pub fn from_angular_spread(theta_bar: f64, sigma_a: f64) -> Result<Self> {
        Self::new(theta_bar, 3f64.sqrt() * sigma_a)
    }

    pub fn angular_spread(&self) -> f64 {
        self.delta_theta / 3f64.sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta_theta > 0.0) {
            return Err(invalid("one-ring half-width must be positive"));
        }
        let lo = self.theta_bar - self.delta_theta;
        let hi = self.theta_bar + self.delta_theta;
        if !(lo > -PI / 2.0 && hi < PI / 2.0) {
            return Err(invalid(format!(
                "one-ring interval [{lo:.6}, {hi:.6}] rad leaves (-pi/2, pi/2)"
            )));
        }
        Ok(())
    }
}

/// Where a covariance matrix came from. The exponential tag enables the
/// nearest-neighbour conditioning fast path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovarianceModel {
    Exponential(ExponentialModel),
    OneRing { geometry: ArrayGeometry, model: OneRingModel },
    General,
}

/// Hermitian positive semi-definite channel covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<Complex64>,
    model: CovarianceModel,
}

impl CovarianceMatrix {
    /// Validates an arbitrary matrix as a covariance: square, Hermitian to
    /// 1e-12 relative, PSD after clamping round-off eigenvalues.
    pub fn from_entries(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(invalid("covariance must be a non-empty square matrix"));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("covariance has non-finite entries"));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let n = entries.nrows();
        for i in 0..n {
            for j in 0..=i {
                let d = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if d > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                    return Err(invalid(format!("covariance not Hermitian at ({i}, {j})")));
                }
            }
        }
        let entries = repair_psd(hermitian_part(&entries))?;
        Ok(Self { entries, model: CovarianceModel::General })
    }

    pub fn identity(antennas: usize) -> Result<Self> {
        if antennas == 0 {
            return Err(invalid("array needs at least one antenna"));
        }
        Ok(Self {
            entries: DMatrix::identity(antennas, antennas),
            model: CovarianceModel::Exponential(ExponentialModel { rho: Complex64::new(0.0, 0.0) }),
        })
    }

    /// Fully correlated channel: every entry equals one (rank one).
    pub fn fully_correlated(antennas: usize) -> Result<Self> {
        if antennas == 0 {
            return Err(invalid("array needs at least one antenna"));
        }
        Ok(Self {
            entries: DMatrix::from_element(antennas, antennas, Complex64::new(1.0, 0.0)),
            model: CovarianceModel::General,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn model(&self) -> CovarianceModel {
        self.model
    }

    /// Correlation coefficient when the matrix carries the exponential tag.
    pub fn exponential_rho(&self) -> Option<Complex64> {
        match self.model {
            CovarianceModel::Exponential(m) => Some(m.rho),
            _ => None,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    /// Principal submatrix on the given (0-based) index set.
    pub fn principal_submatrix(&self, indices: &[usize]) -> DMatrix<Complex64> {
        let k = indices.len();
        DMatrix::from_fn(k, k, |i, j| self.entries[(indices[i], indices[j])])
    }

    /// Leading `m x m` block, which is the covariance of the first `m`
    /// antennas. Keeps the model tag.
    pub fn leading(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.dim() {
            return Err(invalid(format!("leading block size {m} out of range")));
        }
        let model = match self.model {
            CovarianceModel::OneRing { geometry, model } => CovarianceModel::OneRing {
                geometry: ArrayGeometry { antennas: m, ..geometry },
                model,
            },
            other => other,
        };
        Ok(Self { entries: self.entries.view((0, 0), (m, m)).into_owned(), model })
    }

    /// Covariance of the beam-domain channel `W^H h`.
    pub fn transformed(&self, codebook: &DMatrix<Complex64>) -> Result<Self> {
        if codebook.nrows() != self.dim() {
            return Err(invalid("codebook row count must equal the antenna count"));
        }
        let m = codebook.adjoint() * &self.entries * codebook;
        Ok(Self { entries: hermitian_part(&m), model: CovarianceModel::General })
    }
}

/// `[R]_{m,n} = rho^(m-n)` for `m >= n`, Hermitian above the diagonal.
pub fn build_exponential_covariance(antennas: usize, rho: Complex64) -> Result<CovarianceMatrix> {
    let model = ExponentialModel::new(rho)?;
    if antennas == 0 {
        return Err(invalid("array needs at least one antenna"));
    }
    let mut powers = Vec::with_capacity(antennas);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..antennas {
        powers.push(p);
        p *= rho;
    }
    let entries = DMatrix::from_fn(antennas, antennas, |m, n| {
        if m >= n {
            powers[m - n]
        } else {
            powers[n - m].conj()
        }
    });
    Ok(CovarianceMatrix { entries, model: CovarianceModel::Exponential(model) })
}

/// One-ring covariance `int g(theta) a(theta) a(theta)^H dtheta` with a uniform
/// spectrum, evaluated by Gauss-Legendre quadrature with `nodes` points.
pub fn build_one_ring_covariance(
    geometry: ArrayGeometry,
    model: OneRingModel,
    nodes: usize,
) -> Result<CovarianceMatrix> {
    model.validate()?;
    if nodes < 64 {
        return Err(invalid(format!("one-ring quadrature needs at least 64 nodes, got {nodes}")));
    }
    let m = geometry.antennas;
    let rule = GaussLegendre::new(nodes);
    let lo = model.theta_bar - model.delta_theta;
    let hi = model.theta_bar + model.delta_theta;
    let norm = 1.0 / (2.0 * model.delta_theta);
    // Toeplitz: only the lags 0..m are needed.
    let mut lags = vec![Complex64::new(0.0, 0.0); m];
    for (theta, w) in rule.mapped(lo, hi) {
        let phase = -2.0 * PI * geometry.spacing * theta.sin();
        for (k, lag) in lags.iter_mut().enumerate() {
            *lag += Complex64::from_polar(w * norm, phase * k as f64);
        }
    }
    lags[0] = Complex64::new(lags[0].re, 0.0);
    let entries = DMatrix::from_fn(m, m, |r, c| if r >= c { lags[r - c] } else { lags[c - r].conj() });
    let entries = repair_psd(entries)?;
    Ok(CovarianceMatrix { entries, model: CovarianceModel::OneRing { geometry, model } })
}

/// ULA response `[1, e^{-j 2 pi D sin(theta)}, ..., e^{-j 2 pi D sin(theta) (M-1)}]`.
pub fn steering_vector(geometry: ArrayGeometry, theta: f64) -> DVector<Complex64> {
    let phase = -2.0 * PI * geometry.spacing * theta.sin();
    DVector::from_fn(geometry.antennas, |m, _| Complex64::from_polar(1.0, phase * m as f64))
}

/// Normalized receive SNR threshold `(2^R_th - 1) / P`.
pub fn snr_threshold(rate: f64, power: f64) -> Result<f64> {
    if !(power > 0.0) {
        return Err(invalid(format!("transmit power must be positive, got {power}")));
    }
    if !(rate >= 0.0) {
        return Err(invalid(format!("target rate must be non-negative, got {rate}")));
    }
    Ok((2f64.powf(rate) - 1.0) / power)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Normalized DFT codebook, `[D]_{m,n} = e^{j 2 pi (m-1)(n-1) / M} / sqrt(M)`.
pub fn dft_codebook(antennas: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (antennas as f64).sqrt();
    DMatrix::from_fn(antennas, antennas, |m, n| {
        let k = (m * n) % antennas;
        Complex64::from_polar(scale, 2.0 * PI * k as f64 / antennas as f64)
    })
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }
    })
}

fn repair_psd(m: DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        return Err(invalid("covariance has no positive eigenvalue"));
    }
    if min < -1e-10 * max {
        return Err(invalid(format!("covariance is not PSD: eigenvalue {min:e} vs max {max:e}")));
    }
    if min >= PSD_CLAMP * max {
        return Ok(m);
    }
    let n = m.nrows();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < PSD_CLAMP * max {
            continue;
        }
        let u = eig.eigenvectors.column(k);
        for c in 0..n {
            let uc = u[c].conj() * lambda;
            for r in 0..n {
                out[(r, c)] += u[r] * uc;
            }
        }
    }
    Ok(hermitian_part(&out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_zero_rho_is_identity() {
        let r = build_exponential_covariance(3, c(0.0, 0.0)).unwrap();
        assert_eq!(r.entries(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn exponential_entries_follow_powers() {
        let r = build_exponential_covariance(3, c(0.8, 0.0)).unwrap();
        assert!((r.get(2, 0) - c(0.64, 0.0)).norm() < 1e-15);
        assert!((r.get(0, 2) - c(0.64, 0.0)).norm() < 1e-15);
        assert!((r.trace() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_complex_rho_is_hermitian() {
        let r = build_exponential_covariance(2, c(0.0, 0.5)).unwrap();
        assert_eq!(r.get(1, 0), c(0.0, 0.5));
        assert_eq!(r.get(0, 1), c(0.0, -0.5));
    }

    #[test]
    fn exponential_rejects_unit_magnitude() {
        assert!(build_exponential_covariance(4, c(1.0, 0.0)).is_err());
        assert!(build_exponential_covariance(4, c(0.6, 0.8)).is_err());
    }

    #[test]
    fn steering_vector_broadside_and_endfire() {
        let g = ArrayGeometry::new(4, 0.5).unwrap();
        let a = steering_vector(g, 0.0);
        assert!(a.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));

        let g = ArrayGeometry::new(2, 0.5).unwrap();
        let a = steering_vector(g, PI / 2.0);
        assert!((a[1] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_vector_thirty_degrees() {
        let g = ArrayGeometry::new(3, 0.5).unwrap();
        let a = steering_vector(g, PI / 6.0);
        let expected = [c(1.0, 0.0), Complex64::from_polar(1.0, -PI / 2.0), Complex64::from_polar(1.0, -PI)];
        for (got, want) in a.iter().zip(expected) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn snr_threshold_values() {
        assert_eq!(snr_threshold(5.0, 1.0).unwrap(), 31.0);
        assert_eq!(snr_threshold(3.0, 1.0).unwrap(), 7.0);
        assert_eq!(snr_threshold(0.0, 0.3).unwrap(), 0.0);
        assert!(snr_threshold(3.0, 0.0).is_err());
        assert!(snr_threshold(3.0, -1.0).is_err());
        let a = snr_threshold(3.0, db_to_linear(-3.0)).unwrap();
        assert!((a - 13.97).abs() < 5e-3);
    }

    #[test]
    fn one_ring_unit_diagonal_small_array() {
        let g = ArrayGeometry::new(2, 0.5).unwrap();
        let m = OneRingModel::from_angular_spread(0.0, 20f64.to_radians()).unwrap();
        let r = build_one_ring_covariance(g, m, 2048).unwrap();
        assert!((r.get(0, 0).re - 1.0).abs() < 1e-9);
        assert!((r.get(1, 1).re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn one_ring_narrow_interval_is_rank_one() {
        let g = ArrayGeometry::new(8, 0.5).unwrap();
        let theta = 0.3;
        let m = OneRingModel::new(theta, 1e-6).unwrap();
        let r = build_one_ring_covariance(g, m, 64).unwrap();
        let a = steering_vector(g, theta);
        let outer = &a * a.adjoint();
        assert!((r.entries() - outer).norm() < 1e-8);
        for i in 0..8 {
            assert!((r.get(i, i).re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn one_ring_rejects_bad_interval_and_nodes() {
        assert!(OneRingModel::new(80f64.to_radians(), 15f64.to_radians()).is_err());
        assert!(OneRingModel::new(0.0, 0.0).is_err());
        let g = ArrayGeometry::new(4, 0.5).unwrap();
        let m = OneRingModel::new(0.2, 0.1).unwrap();
        assert!(build_one_ring_covariance(g, m, 32).is_err());
    }

    #[test]
    fn one_ring_converges_in_node_count() {
        let g = ArrayGeometry::new(32, 0.5).unwrap();
        for sigma in [5.0f64, 10.0, 20.0] {
            let m = OneRingModel::from_angular_spread(45f64.to_radians(), sigma.to_radians()).unwrap();
            let a = build_one_ring_covariance(g, m, 2048).unwrap();
            let b = build_one_ring_covariance(g, m, 4096).unwrap();
            let diff = (a.entries() - b.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-8, "sigma={sigma} diff={diff:e}");
            assert!((a.trace() - 32.0).abs() < 1e-9);
        }
    }

    #[test]
    fn from_entries_rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.1, 0.0), c(1.0, 0.0)]);
        assert!(CovarianceMatrix::from_entries(m).is_err());
    }

    #[test]
    fn dft_codebook_is_unitary() {
        let d = dft_codebook(8);
        let g = d.adjoint() * &d;
        assert!((g - DMatrix::<Complex64>::identity(8, 8)).norm() < 1e-12);
    }
}
