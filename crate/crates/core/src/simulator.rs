//! Channel sampling, the four interleaved training schemes and Monte Carlo
//! estimation of their average training length.
//!
//! Every trial draws `g ~ CN(0, I_r)` from a stream keyed by
//! `(master_seed, trial index)` and reveals `h = U diag(sqrt(delta)) g` (or its
//! beam-domain image) one entry at a time, so different schemes run on common
//! random numbers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel_models::CovarianceMatrix;
use crate::conditional::{first_antenna, select_next_antenna, Correlation, TrainedSet};
use crate::error::{invalid, Error, Result};
use crate::spectra::{compact_eig, EigenSystem, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    BasicAntenna,
    /// Columns are the beams, trained in column order.
    BasicBeam(DMatrix<Complex64>),
    ModifiedBeam,
    ModifiedAntenna,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::BasicAntenna => "basic-antenna",
            SchemeKind::BasicBeam(_) => "basic-beam",
            SchemeKind::ModifiedBeam => "modified-beam",
            SchemeKind::ModifiedAntenna => "modified-antenna",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub training_length: usize,
    pub outage: bool,
    /// Antenna or beam indices (0-based) in training order.
    pub trained_indices: Vec<usize>,
    /// Channel values revealed at `trained_indices`.
    pub trained_values: Vec<Complex64>,
    /// `P ||h_A||^2` when training stopped.
    pub achieved_snr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean_length: f64,
    pub std_error: f64,
    pub outage_rate: f64,
    pub trials: usize,
    pub master_seed: u64,
}

/// Stream for one trial; independent of execution order.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// `r` independent `CN(0, 1)` draws, real part first.
pub fn standard_complex_gaussian<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_iterator(
        len,
        (0..len).map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(s * re, s * im)
        }),
    )
}

/// `h = U diag(sqrt(delta)) g`.
pub fn sample_channel<R: Rng + ?Sized>(eig: &EigenSystem, rng: &mut R) -> DVector<Complex64> {
    let g = standard_complex_gaussian(eig.rank(), rng);
    eig.sqrt_factor() * g
}

/// Maximum-ratio beamformer on the trained entries: `w_n = h_n / ||h_A||` on
/// `trained`, zero elsewhere. Returns `w` and `|h^H w|^2 = ||h_A||^2`.
pub fn partial_beamformer(h: &DVector<Complex64>, trained: &[usize]) -> Result<(DVector<Complex64>, f64)> {
    if trained.is_empty() {
        return Err(invalid("no trained antennas"));
    }
    if let Some(&bad) = trained.iter().find(|&&i| i >= h.len()) {
        return Err(invalid(format!("trained index {bad} out of range")));
    }
    let power: f64 = trained.iter().map(|&i| h[i].norm_sqr()).sum();
    if !(power > 0.0) {
        return Err(Error::UndefinedBeamformer);
    }
    let norm = power.sqrt();
    let mut w = DVector::zeros(h.len());
    for &i in trained {
        w[i] = h[i] / norm;
    }
    let gain = h.dotc(&w).norm_sqr();
    Ok((w, gain))
}

/// A scheme bound to a covariance and threshold, with the per-trial
/// transforms precomputed.
pub struct Simulation<'a> {
    scheme: SchemeKind,
    covariance: &'a CovarianceMatrix,
    alpha_th: f64,
    power: f64,
    rank: usize,
    /// Row `l` maps `g` to the `l`-th trainable entry.
    transform: DMatrix<Complex64>,
    first: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(scheme: SchemeKind, covariance: &'a CovarianceMatrix, alpha_th: f64) -> Result<Self> {
        if alpha_th.is_nan() || alpha_th < 0.0 {
            return Err(invalid(format!("threshold must be non-negative, got {alpha_th}")));
        }
        let eig = compact_eig(covariance, DEFAULT_RANK_TOL);
        let factor = eig.sqrt_factor();
        let rank = eig.rank();
        let mut first = 0;
        let transform = match &scheme {
            SchemeKind::BasicAntenna => factor,
            SchemeKind::ModifiedAntenna => {
                first = first_antenna(covariance.dim(), Correlation::from_covariance(covariance))?;
                factor
            }
            SchemeKind::BasicBeam(codebook) => {
                if codebook.nrows() != covariance.dim() || codebook.ncols() == 0 {
                    return Err(invalid("codebook does not match the array size"));
                }
                if codebook.column_iter().any(|c| (c.norm() - 1.0).abs() > 1e-8) {
                    return Err(invalid("codebook columns must be unit-norm"));
                }
                codebook.adjoint() * factor
            }
            SchemeKind::ModifiedBeam => {
                DMatrix::from_diagonal(&DVector::from_iterator(
                    rank,
                    eig.eigenvalues.iter().map(|d| Complex64::new(d.sqrt(), 0.0)),
                ))
            }
        };
        Ok(Self { scheme, covariance, alpha_th, power: 1.0, rank, transform, first })
    }

    /// Transmit power used for `achieved_snr`.
    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    /// Number of trainable antennas or beams.
    pub fn steps(&self) -> usize {
        self.transform.nrows()
    }

    pub fn scheme(&self) -> &SchemeKind {
        &self.scheme
    }

    fn entry(&self, l: usize, g: &DVector<Complex64>) -> Complex64 {
        let row = self.transform.row(l);
        row.iter().zip(g.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn run_trial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome> {
        let g = standard_complex_gaussian(self.rank, rng);
        self.run_with(&g)
    }

    /// Replays the training loop for one latent draw `g`.
    pub fn run_with(&self, g: &DVector<Complex64>) -> Result<TrialOutcome> {
        let steps = self.steps();
        let mut indices = Vec::with_capacity(steps);
        let mut values = Vec::with_capacity(steps);
        let mut power = 0.0;
        match self.scheme {
            SchemeKind::ModifiedAntenna => {
                let correlation = Correlation::from_covariance(self.covariance);
                let mut trained = TrainedSet::new();
                let mut next = self.first;
                loop {
                    let v = self.entry(next, g);
                    trained.insert(next, v)?;
                    indices.push(next);
                    values.push(v);
                    power += v.norm_sqr();
                    if power >= self.alpha_th || indices.len() == steps {
                        break;
                    }
                    next = select_next_antenna(correlation, &trained, self.alpha_th, steps)?;
                }
            }
            _ => {
                for l in 0..steps {
                    let v = self.entry(l, g);
                    indices.push(l);
                    values.push(v);
                    power += v.norm_sqr();
                    if power >= self.alpha_th {
                        break;
                    }
                }
            }
        }
        Ok(TrialOutcome {
            training_length: indices.len(),
            outage: power < self.alpha_th,
            trained_indices: indices,
            trained_values: values,
            achieved_snr: self.power * power,
        })
    }

    pub fn monte_carlo(&self, trials: usize, master_seed: u64) -> Result<MCEstimate> {
        if trials == 0 {
            return Err(invalid("at least one trial is required"));
        }
        let outcomes: Vec<(usize, bool)> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(master_seed, t);
                self.run_trial(&mut rng).map(|o| (o.training_length, o.outage))
            })
            .collect::<Result<_>>()?;
        Ok(summarize(&outcomes, master_seed))
    }
}

/// Sequential reduction in trial order, so the estimate does not depend on
/// the thread count.
fn summarize(outcomes: &[(usize, bool)], master_seed: u64) -> MCEstimate {
    let n = outcomes.len() as f64;
    let total: u64 = outcomes.iter().map(|&(l, _)| l as u64).sum();
    let mean = total as f64 / n;
    let sq: f64 = outcomes.iter().map(|&(l, _)| (l as f64 - mean).powi(2)).sum();
    let std_error = if outcomes.len() > 1 { (sq / (n - 1.0)).sqrt() / n.sqrt() } else { 0.0 };
    let outages = outcomes.iter().filter(|&&(_, o)| o).count();
    MCEstimate {
        mean_length: mean,
        std_error,
        outage_rate: outages as f64 / n,
        trials: outcomes.len(),
        master_seed,
    }
}

/// One trial of `scheme`.
pub fn run_trial<R: Rng + ?Sized>(
    scheme: &SchemeKind,
    covariance: &CovarianceMatrix,
    alpha_th: f64,
    rng: &mut R,
) -> Result<TrialOutcome> {
    Simulation::new(scheme.clone(), covariance, alpha_th)?.run_trial(rng)
}

/// Monte Carlo estimate of the average training length of `scheme`.
pub fn monte_carlo(
    scheme: &SchemeKind,
    covariance: &CovarianceMatrix,
    alpha_th: f64,
    trials: usize,
    master_seed: u64,
) -> Result<MCEstimate> {
    Simulation::new(scheme.clone(), covariance, alpha_th)?.monte_carlo(trials, master_seed)
}
