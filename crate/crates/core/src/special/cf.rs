//! Gil-Pelaez inversion of the characteristic function
//! `phi(w) = prod_t (1 - i w delta_t)^{-r_t}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::quadrature::GaussLegendre;
use crate::spectra::EigenvalueGroups;

const TAIL_TOLERANCE: f64 = 1e-12;
const MAX_PANELS: usize = 200_000;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

/// Phase and log-modulus of `e^{-iwx} phi(w)`.
fn phase_and_log_modulus(groups: &EigenvalueGroups, w: f64, x: f64) -> (f64, f64) {
    let mut theta = -w * x;
    let mut log_rho = 0.0;
    for (d, r) in groups.iter() {
        let wd = w * d;
        theta += r as f64 * wd.atan();
        log_rho += 0.5 * r as f64 * (wd * wd).ln_1p();
    }
    (theta, log_rho)
}

/// Truncation point where the modulus tail falls below the tolerance.
/// `extra` is 1 for the density (integrand without the `1/w` factor).
fn cutoff(groups: &EigenvalueGroups, extra: i32) -> f64 {
    let dmax = groups.values().iter().copied().fold(0.0, f64::max);
    let mut omega = 1.0 / dmax;
    for _ in 0..400 {
        let mut log_bound = 0.0;
        let mut p = 0usize;
        for (d, r) in groups.iter() {
            if omega * d >= 1.0 {
                log_bound -= r as f64 * (omega * d).ln();
                p += r;
            }
        }
        let denom = p as f64 - extra as f64;
        if denom > 0.0 {
            let bound = (log_bound + extra as f64 * omega.ln()).exp() / denom;
            if bound / PI < TAIL_TOLERANCE {
                break;
            }
        }
        omega *= 1.5;
    }
    omega
}

fn integrate(groups: &EigenvalueGroups, x: f64, extra: i32, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let omega = cutoff(groups, extra);
    let width = 0.5 * PI / x.max(groups.mean());
    let panels = ((omega / width).ceil() as usize).clamp(1, MAX_PANELS);
    let width = omega / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = p as f64 * width;
        total += rule().integrate(a, a + width, |w| {
            let (theta, log_rho) = phase_and_log_modulus(groups, w, x);
            f(w, theta, log_rho)
        });
    }
    total
}

pub(super) fn cdf(groups: &EigenvalueGroups, x: f64) -> f64 {
    let integral = integrate(groups, x, 0, |w, theta, log_rho| theta.sin() * (-log_rho).exp() / w);
    0.5 - integral / PI
}

pub(super) fn pdf(groups: &EigenvalueGroups, x: f64) -> f64 {
    let integral = integrate(groups, x, 1, |_, theta, log_rho| theta.cos() * (-log_rho).exp());
    integral / PI
}
