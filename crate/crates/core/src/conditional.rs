//! Conditional law of untrained channels given the trained ones, and the
//! greedy antenna-selection rule of the modified antenna-domain scheme.
//!
//! Antenna indices are 0-based throughout.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::channel_models::CovarianceMatrix;
use crate::error::{invalid, Error, Result};
use crate::special::marcum_q1;

/// Trained antennas in increasing index order with their channel values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainedSet {
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl TrainedSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(usize, Complex64)]) -> Result<Self> {
        let mut set = Self::new();
        for &(i, v) in pairs {
            set.insert(i, v)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, index: usize, value: Complex64) -> Result<()> {
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(invalid(format!("channel value at antenna {index} is not finite")));
        }
        match self.indices.binary_search(&index) {
            Ok(_) => Err(invalid(format!("antenna {index} is already trained"))),
            Err(pos) => {
                self.indices.insert(pos, index);
                self.values.insert(pos, value);
                Ok(())
            }
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// `||h_A||^2`.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Same indices, values multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { indices: self.indices.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// `h_n | h_A ~ CN(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalGaussian {
    pub mean: Complex64,
    pub variance: f64,
}

/// Factorization of `[R]_{A,A}` reused for every untrained antenna.
pub struct ConditionalSolver<'a> {
    r: &'a CovarianceMatrix,
    indices: Vec<usize>,
    chol: Cholesky<Complex64, Dyn>,
    weights: DVector<Complex64>,
}

impl<'a> ConditionalSolver<'a> {
    pub fn new(r: &'a CovarianceMatrix, trained: &TrainedSet) -> Result<Self> {
        if trained.is_empty() {
            return Err(invalid("trained set is empty"));
        }
        if let Some(&bad) = trained.indices().iter().find(|&&i| i >= r.dim()) {
            return Err(invalid(format!("trained antenna {bad} out of range")));
        }
        let sub = r.principal_submatrix(trained.indices());
        let chol = match Cholesky::new(sub.clone()) {
            Some(c) => c,
            None => {
                let size = trained.len();
                let ridge = 1e-12 * sub.diagonal().iter().map(|z| z.re).sum::<f64>() / size as f64;
                let regularized = sub + DMatrix::from_diagonal_element(size, size, Complex64::new(ridge, 0.0));
                Cholesky::new(regularized).ok_or(Error::SingularConditioning)?
            }
        };
        let h = DVector::from_column_slice(trained.values());
        let weights = chol.solve(&h);
        Ok(Self { r, indices: trained.indices().to_vec(), chol, weights })
    }

    pub fn at(&self, n: usize) -> Result<ConditionalGaussian> {
        if n >= self.r.dim() {
            return Err(invalid(format!("antenna {n} out of range")));
        }
        if self.indices.binary_search(&n).is_ok() {
            return Err(invalid(format!("antenna {n} is already trained")));
        }
        // Column r_{A,n}; the row r_{n,A} is its adjoint.
        let col = DVector::from_iterator(self.indices.len(), self.indices.iter().map(|&a| self.r.get(a, n)));
        let mean = col.iter().zip(self.weights.iter()).map(|(c, w)| c.conj() * w).sum::<Complex64>();
        let mut z = col;
        self.chol.l_dirty().solve_lower_triangular_mut(&mut z);
        let explained: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let variance = (self.r.get(n, n).re - explained).max(0.0);
        Ok(ConditionalGaussian { mean, variance })
    }
}

/// Conditional mean and variance for an arbitrary covariance.
pub fn conditional_general(r: &CovarianceMatrix, trained: &TrainedSet, n: usize) -> Result<ConditionalGaussian> {
    ConditionalSolver::new(r, trained)?.at(n)
}

/// Closed form for exponential correlation: only the nearest trained
/// neighbour on each side matters.
pub fn conditional_gaussian_exponential(rho: Complex64, trained: &TrainedSet, n: usize) -> Result<ConditionalGaussian> {
    let r = rho.norm();
    if r >= 1.0 || !r.is_finite() {
        return Err(invalid(format!("|rho| must be below 1, got {r}")));
    }
    if trained.is_empty() {
        return Err(invalid("trained set is empty"));
    }
    let idx = trained.indices();
    let vals = trained.values();
    let pos = match idx.binary_search(&n) {
        Ok(_) => return Err(invalid(format!("antenna {n} is already trained"))),
        Err(p) => p,
    };
    let r2 = r * r;
    let cond = if pos == 0 {
        let d = (idx[0] - n) as i32;
        ConditionalGaussian { mean: rho.conj().powi(d) * vals[0], variance: 1.0 - r2.powi(d) }
    } else if pos == idx.len() {
        let last = idx.len() - 1;
        let d = (n - idx[last]) as i32;
        ConditionalGaussian { mean: rho.powi(d) * vals[last], variance: 1.0 - r2.powi(d) }
    } else {
        let x1 = (n - idx[pos - 1]) as i32;
        let x2 = (idx[pos] - n) as i32;
        let (p1, p2) = (r2.powi(x1), r2.powi(x2));
        let denom = 1.0 - p1 * p2;
        let mean = (rho.powi(x1) * (1.0 - p2) * vals[pos - 1] + rho.conj().powi(x2) * (1.0 - p1) * vals[pos]) / denom;
        ConditionalGaussian { mean, variance: (1.0 - p1) * (1.0 - p2) / denom }
    };
    Ok(cond)
}

fn q1_arguments(cond: &ConditionalGaussian, x: f64) -> (f64, f64) {
    let sigma = cond.variance.sqrt();
    (std::f64::consts::SQRT_2 * cond.mean.norm() / sigma, std::f64::consts::SQRT_2 * x.sqrt() / sigma)
}

/// `Pr(|h_n|^2 < x | h_A)`.
pub fn channel_power_cdf(cond: &ConditionalGaussian, x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(invalid(format!("power level must be non-negative, got {x}")));
    }
    if !(cond.variance > 0.0) {
        return Err(Error::DeterministicChannel);
    }
    let (a, b) = q1_arguments(cond, x);
    Ok(1.0 - marcum_q1(a, b))
}

/// `Pr(|h_n|^2 >= deficit | h_A)`, the chance that antenna `n` ends training.
pub fn success_probability(cond: &ConditionalGaussian, deficit: f64) -> Result<f64> {
    if deficit < 0.0 || deficit.is_nan() {
        return Err(invalid(format!("deficit must be non-negative, got {deficit}")));
    }
    if !(cond.variance > 0.0) {
        return Err(Error::DeterministicChannel);
    }
    let (a, b) = q1_arguments(cond, deficit);
    Ok(marcum_q1(a, b))
}

/// Success probability with a zero-variance channel resolved by comparing
/// its known power to the deficit.
fn selection_score(cond: &ConditionalGaussian, deficit: f64) -> f64 {
    if cond.variance > 0.0 {
        let (a, b) = q1_arguments(cond, deficit);
        marcum_q1(a, b)
    } else if cond.mean.norm_sqr() >= deficit {
        1.0
    } else {
        0.0
    }
}

/// Where the correlation comes from when conditioning.
#[derive(Debug, Clone, Copy)]
pub enum Correlation<'a> {
    Exponential(Complex64),
    General(&'a CovarianceMatrix),
}

impl<'a> Correlation<'a> {
    /// Exponential models use the closed form even when given as a matrix.
    pub fn from_covariance(r: &'a CovarianceMatrix) -> Self {
        match r.exponential_rho() {
            Some(rho) => Correlation::Exponential(rho),
            None => Correlation::General(r),
        }
    }
}

/// Untrained antenna with the largest conditional success probability; ties
/// go to the lowest index.
pub fn select_next_antenna(
    correlation: Correlation<'_>,
    trained: &TrainedSet,
    alpha_th: f64,
    antennas: usize,
) -> Result<usize> {
    if trained.is_empty() {
        return Err(invalid("trained set is empty"));
    }
    if trained.len() >= antennas {
        return Err(invalid("every antenna is already trained"));
    }
    let deficit = (alpha_th - trained.power()).max(0.0);
    let mut best: Option<(usize, f64)> = None;
    let mut consider = |n: usize, cond: ConditionalGaussian| {
        let score = selection_score(&cond, deficit);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((n, score));
        }
    };
    match correlation {
        Correlation::Exponential(rho) => {
            for n in (0..antennas).filter(|&n| !trained.contains(n)) {
                consider(n, conditional_gaussian_exponential(rho, trained, n)?);
            }
        }
        Correlation::General(r) => {
            if r.dim() != antennas {
                return Err(invalid("covariance size does not match the antenna count"));
            }
            let solver = ConditionalSolver::new(r, trained)?;
            for n in (0..antennas).filter(|&n| !trained.contains(n)) {
                consider(n, solver.at(n)?);
            }
        }
    }
    Ok(best.map(|(n, _)| n).expect("at least one untrained antenna"))
}

/// Antenna trained first: the one leaving the least total conditional
/// variance on the others.
pub fn first_antenna(antennas: usize, correlation: Correlation<'_>) -> Result<usize> {
    if antennas == 0 {
        return Err(invalid("array needs at least one antenna"));
    }
    match correlation {
        Correlation::Exponential(_) => Ok(antennas.div_ceil(2) - 1),
        Correlation::General(r) => {
            if r.dim() != antennas {
                return Err(invalid("covariance size does not match the antenna count"));
            }
            let mut best = (0usize, f64::INFINITY);
            for m in 0..antennas {
                let rmm = r.get(m, m).re;
                let residual: f64 = (0..antennas)
                    .filter(|&n| n != m)
                    .map(|n| {
                        let c = r.get(n, m);
                        if rmm > 0.0 { r.get(n, n).re - c.norm_sqr() / rmm } else { r.get(n, n).re }
                    })
                    .sum();
                if residual < best.1 {
                    best = (m, residual);
                }
            }
            Ok(best.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_models::build_exponential_covariance;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_gives_prior() {
        let id = CovarianceMatrix::identity(6).unwrap();
        let t = TrainedSet::from_pairs(&[(1, c(0.4, -2.0)), (4, c(1.0, 1.0))]).unwrap();
        let g = conditional_general(&id, &t, 2).unwrap();
        assert!(g.mean.norm() < 1e-15 && (g.variance - 1.0).abs() < 1e-15);
        let e = conditional_gaussian_exponential(c(0.0, 0.0), &t, 2).unwrap();
        assert!(e.mean.norm() < 1e-15 && (e.variance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_example() {
        let t = TrainedSet::from_pairs(&[(0, c(1.0, 0.0)), (2, c(1.0, 0.0))]).unwrap();
        let e = conditional_gaussian_exponential(c(0.5, 0.0), &t, 1).unwrap();
        assert!((e.mean - c(0.8, 0.0)).norm() < 1e-15);
        assert!((e.variance - 0.6).abs() < 1e-15);
        let r = build_exponential_covariance(3, c(0.5, 0.0)).unwrap();
        let g = conditional_general(&r, &t, 1).unwrap();
        assert!((g.mean - e.mean).norm() < 1e-12 && (g.variance - e.variance).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_and_decorrelation() {
        let rho = c(0.8, 0.0);
        let t = TrainedSet::from_pairs(&[(3, c(1.5, 0.5))]).unwrap();
        let e = conditional_gaussian_exponential(rho, &t, 6).unwrap();
        assert!((e.mean - rho.powi(3) * c(1.5, 0.5)).norm() < 1e-15);
        assert!((e.variance - (1.0 - 0.64f64.powi(3))).abs() < 1e-15);
        let far = TrainedSet::from_pairs(&[(120, c(1.0, 0.0))]).unwrap();
        for n in [70usize, 170] {
            let g = conditional_gaussian_exponential(rho, &far, n).unwrap();
            assert!((g.mean.norm() - 0.8f64.powi(50)).abs() < 1e-15);
            assert!((1.0 - g.variance - 0.64f64.powi(50)).abs() < 1e-15);
        }
        for n in [0usize, 240] {
            let g = conditional_gaussian_exponential(rho, &far, n).unwrap();
            assert!(g.mean.norm() < 1e-10 && (1.0 - g.variance) < 1e-10);
        }
        assert!(conditional_gaussian_exponential(rho, &t, 3).is_err());
    }

    #[test]
    fn complex_rho_fast_path_matches_general() {
        let rho = Complex64::from_polar(0.7, 0.6);
        let r = build_exponential_covariance(12, rho).unwrap();
        let t = TrainedSet::from_pairs(&[(2, c(0.3, 1.1)), (5, c(-0.7, 0.2)), (9, c(1.4, -0.4))]).unwrap();
        let solver = ConditionalSolver::new(&r, &t).unwrap();
        for n in (0..12).filter(|n| !t.contains(*n)) {
            let g = solver.at(n).unwrap();
            let e = conditional_gaussian_exponential(rho, &t, n).unwrap();
            assert!((g.mean - e.mean).norm() < 1e-9, "n={n}");
            assert!((g.variance - e.variance).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn power_cdf_and_success_complement() {
        let central = ConditionalGaussian { mean: c(0.0, 0.0), variance: 1.0 };
        assert!((channel_power_cdf(&central, 1.3).unwrap() - (1.0 - (-1.3f64).exp())).abs() < 1e-12);
        assert!((success_probability(&central, 2f64.ln()).unwrap() - 0.5).abs() < 1e-12);
        let g = ConditionalGaussian { mean: c(0.8, 0.0), variance: 0.6 };
        assert_eq!(channel_power_cdf(&g, 0.0).unwrap(), 0.0);
        assert_eq!(success_probability(&g, 0.0).unwrap(), 1.0);
        let sum = success_probability(&g, 1.0).unwrap() + channel_power_cdf(&g, 1.0).unwrap();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(success_probability(&g, -0.1).is_err());
        let det = ConditionalGaussian { mean: c(1.0, 0.0), variance: 0.0 };
        assert_eq!(channel_power_cdf(&det, 1.0).unwrap_err(), Error::DeterministicChannel);
    }

    #[test]
    fn selection_examples() {
        let t = TrainedSet::from_pairs(&[(4, c(0.3, 0.0)), (7, c(-1.0, 0.2))]).unwrap();
        assert_eq!(select_next_antenna(Correlation::Exponential(c(0.0, 0.0)), &t, 10.0, 10).unwrap(), 0);

        // Strong trained value: the adjacent antennas tie, lower index wins.
        let t = TrainedSet::from_pairs(&[(15, c(2.5, 0.0))]).unwrap();
        assert_eq!(select_next_antenna(Correlation::Exponential(c(0.8, 0.0)), &t, 10.0, 32).unwrap(), 14);

        // Zero trained value: the farthest antenna has the largest variance.
        let t = TrainedSet::from_pairs(&[(15, c(0.0, 0.0))]).unwrap();
        assert_eq!(select_next_antenna(Correlation::Exponential(c(0.8, 0.0)), &t, 10.0, 32).unwrap(), 31);
    }

    #[test]
    fn selection_general_matches_exponential() {
        let rho = c(0.8, 0.0);
        let r = build_exponential_covariance(16, rho).unwrap();
        let t = TrainedSet::from_pairs(&[(3, c(0.4, 0.1)), (8, c(-1.2, 0.9))]).unwrap();
        let fast = select_next_antenna(Correlation::Exponential(rho), &t, 6.0, 16).unwrap();
        let general = select_next_antenna(Correlation::General(&r), &t, 6.0, 16).unwrap();
        assert_eq!(fast, general);
    }

    #[test]
    fn first_antenna_rules() {
        assert_eq!(first_antenna(32, Correlation::Exponential(c(0.8, 0.0))).unwrap(), 15);
        assert_eq!(first_antenna(1, Correlation::Exponential(c(0.8, 0.0))).unwrap(), 0);
        let r = build_exponential_covariance(5, c(0.6, 0.0)).unwrap();
        let mut general = r.clone();
        // Strip the exponential tag to force the brute-force rule.
        general = CovarianceMatrix::from_entries(general.entries().clone()).unwrap();
        assert_eq!(first_antenna(5, Correlation::General(&general)).unwrap(), 2);
    }
}
