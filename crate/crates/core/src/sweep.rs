//! Runs a [`SweepConfig`] and renders the CSV table.

use num_complex::Complex64;

use crate::analytic::{
    lt_antenna_basic, lt_antenna_basic_exp_approx, lt_beam_general, lt_beam_modified, lt_beam_modified_exp_approx,
};
use crate::channel_models::{
    build_exponential_covariance, build_one_ring_covariance, dft_codebook, ArrayGeometry, CovarianceMatrix,
    OneRingModel,
};
use crate::config::{ModelSpec, SchemeSpec, SweepConfig};
use crate::error::{Error, Result};
use crate::simulator::{MCEstimate, SchemeKind, Simulation};

pub const CSV_HEADER: &str = "model,rho_or_AS,M,scheme,alpha_th,analytic_Lt,mc_mean,mc_stderr,outage_rate,trials,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: &'static str,
    /// Correlation coefficient, or angular spread in degrees.
    pub parameter: f64,
    pub antennas: usize,
    pub scheme: SchemeSpec,
    pub alpha_th: f64,
    pub analytic: Option<f64>,
    pub monte_carlo: Option<MCEstimate>,
}

/// Covariance for one sweep point.
pub fn covariance_for(model: &ModelSpec, parameter: f64, antennas: usize) -> Result<CovarianceMatrix> {
    match model {
        ModelSpec::Exponential { .. } => build_exponential_covariance(antennas, Complex64::new(parameter, 0.0)),
        ModelSpec::OneRing { theta_bar_deg, spacing, nodes, .. } => {
            let ring = OneRingModel::from_angular_spread(theta_bar_deg.to_radians(), parameter.to_radians())?;
            build_one_ring_covariance(ArrayGeometry::new(antennas, *spacing)?, ring, *nodes)
        }
    }
}

/// Closed form for `scheme`, or `None` where none exists (modified antenna).
/// Approximations hitting an excluded correlation value fall back to the
/// exact expression they approximate.
pub fn analytic_value(scheme: SchemeSpec, cov: &CovarianceMatrix, parameter: f64, alpha_th: f64) -> Result<Option<f64>> {
    let m = cov.dim();
    let value = match scheme {
        SchemeSpec::BasicAntenna => lt_antenna_basic(cov, alpha_th)?.value,
        SchemeSpec::BasicBeam => lt_beam_general(cov, &dft_codebook(m), alpha_th)?.value,
        SchemeSpec::ModifiedBeam => lt_beam_modified(cov, alpha_th)?.value,
        SchemeSpec::ModifiedAntenna => return Ok(None),
        SchemeSpec::ModifiedBeamApprox => match lt_beam_modified_exp_approx(m, parameter, alpha_th) {
            Err(Error::DegenerateSpectrum(_)) => lt_beam_modified(cov, alpha_th)?.value,
            other => other?.value,
        },
        SchemeSpec::BasicAntennaApprox => match lt_antenna_basic_exp_approx(m, parameter, alpha_th) {
            Err(Error::DegenerateSpectrum(_)) => lt_antenna_basic(cov, alpha_th)?.value,
            other => other?.value,
        },
    };
    Ok(Some(value))
}

fn simulated_scheme(scheme: SchemeSpec, antennas: usize) -> Option<SchemeKind> {
    match scheme {
        SchemeSpec::BasicAntenna => Some(SchemeKind::BasicAntenna),
        SchemeSpec::BasicBeam => Some(SchemeKind::BasicBeam(dft_codebook(antennas))),
        SchemeSpec::ModifiedBeam => Some(SchemeKind::ModifiedBeam),
        SchemeSpec::ModifiedAntenna => Some(SchemeKind::ModifiedAntenna),
        SchemeSpec::ModifiedBeamApprox | SchemeSpec::BasicAntennaApprox => None,
    }
}

/// Rows ordered by model point, array size, scheme, then threshold, as listed
/// in the configuration. All Monte Carlo runs share the master seed.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let alphas = config.alpha.thresholds();
    let mut rows = Vec::new();
    for &parameter in config.model.points() {
        for &antennas in &config.antennas {
            let cov = covariance_for(&config.model, parameter, antennas)?;
            for &scheme in &config.schemes {
                let sim = match simulated_scheme(scheme, antennas) {
                    Some(kind) if config.mode.simulate() => Some(kind),
                    _ => None,
                };
                for &alpha_th in &alphas {
                    let analytic = if config.mode.analytic() { analytic_value(scheme, &cov, parameter, alpha_th)? } else { None };
                    let monte_carlo = match &sim {
                        Some(kind) => Some(Simulation::new(kind.clone(), &cov, alpha_th)?.monte_carlo(config.trials, config.seed)?),
                        None => None,
                    };
                    rows.push(SweepRow {
                        model: config.model.name(),
                        parameter,
                        antennas,
                        scheme,
                        alpha_th,
                        analytic,
                        monte_carlo,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// `%.{sig}g`-style formatting.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exponent.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { s }
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let g = |x: f64| format_sig(x, 10);
    for r in rows {
        let analytic = r.analytic.map(g).unwrap_or_default();
        let (mean, se, outage, trials, seed) = match &r.monte_carlo {
            Some(mc) => (g(mc.mean_length), g(mc.std_error), g(mc.outage_rate), mc.trials.to_string(), mc.master_seed.to_string()),
            None => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.model,
            g(r.parameter),
            r.antennas,
            r.scheme.token(),
            g(r.alpha_th),
            analytic,
            mean,
            se,
            outage,
            trials,
            seed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(1.0, 10), "1");
        assert_eq!(format_sig(13.967452300785, 10), "13.9674523");
        assert_eq!(format_sig(0.00012345, 10), "0.00012345");
        assert_eq!(format_sig(1.5e-7, 10), "1.5e-07");
        assert_eq!(format_sig(12345678901.0, 10), "1.23456789e+10");
        assert_eq!(format_sig(-2.5, 10), "-2.5");
        assert_eq!(format_sig(0.0, 10), "0");
    }

    #[test]
    fn zero_threshold_rows_are_one() {
        let cfg = parse_config(
            "model = exponential\nrho = 0.5\nantennas = 6\nschemes = basic-antenna, modified-beam, modified-antenna\nalpha = 0\ntrials = 50\n",
        )
        .unwrap();
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert_eq!(r.monte_carlo.unwrap().mean_length, 1.0);
            if r.scheme != SchemeSpec::ModifiedAntenna {
                assert_eq!(r.analytic, Some(1.0));
            } else {
                assert_eq!(r.analytic, None);
            }
        }
        let csv = to_csv(&rows);
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.contains("exponential,0.5,6,modified-antenna,0,,1,0,0,50,42\n"));
    }

    #[test]
    fn analytic_mode_leaves_simulation_columns_empty() {
        let cfg = parse_config("model = exponential\nrho = 0.3\nantennas = 4\nschemes = basic-antenna-approx\nalpha = 2\nmode = analytic\n").unwrap();
        let csv = to_csv(&run_sweep(&cfg).unwrap());
        let line = csv.lines().nth(1).unwrap();
        assert!(line.ends_with(",,,,,"), "{line}");
    }
}
