//! C ABI over the `interleave` crate.
//!
//! Every fallible call returns an [`IlStatus`] and writes its result through an
//! out-pointer. The message for the last failure on the calling thread is
//! available from [`il_last_error_message`]. Covariances and regressors are
//! opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use interleave::analytic::{lt_antenna_basic, lt_beam_general, lt_beam_modified, lt_fully_correlated, lt_iid};
use interleave::channel_models::{
    build_exponential_covariance, build_one_ring_covariance, dft_codebook, ArrayGeometry, CovarianceMatrix,
    OneRingModel,
};
use interleave::simulator::{monte_carlo, SchemeKind};
use interleave::spectra::EigenvalueGroups;
use interleave::special::{marcum_q1, wcs_cdf};
use interleave::surrogate::RegressorModel;
use interleave::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    DegenerateSpectrum = 3,
    SingularConditioning = 4,
    TrainingFailure = 5,
    ModelFormat = 6,
    Io = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlScheme {
    BasicAntenna = 0,
    /// Basic beam-domain training with the DFT codebook.
    BasicBeam = 1,
    ModifiedBeam = 2,
    ModifiedAntenna = 3,
}

/// Monte Carlo summary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IlEstimate {
    pub mean_length: f64,
    pub std_error: f64,
    pub outage_rate: f64,
    pub trials: usize,
}

/// Opaque channel covariance.
pub struct IlCovariance(CovarianceMatrix);

/// Opaque fitted regressor.
pub struct IlRegressor(RegressorModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> IlStatus {
    match err {
        Error::InvalidParameter(_) | Error::Config { .. } => IlStatus::InvalidParameter,
        Error::DegenerateSpectrum(_) => IlStatus::DegenerateSpectrum,
        Error::SingularConditioning => IlStatus::SingularConditioning,
        Error::TrainingFailure { .. } => IlStatus::TrainingFailure,
        Error::ModelFormat(_) => IlStatus::ModelFormat,
        Error::Io(_) => IlStatus::Io,
        Error::DeterministicChannel | Error::UndefinedBeamformer => IlStatus::Other,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IlStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            IlStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            IlStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(ptr: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or(Failure::Null(name))
}

unsafe fn handle<'a, T>(ptr: *const T, name: &'static str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or(Failure::Null(name))
}

fn boxed<T>(value: T, slot: &mut *mut T) {
    *slot = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn il_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Exponential correlation `[R]_{ij} = rho^{j-i}` for `j >= i`.
///
/// # Safety
/// `out_handle` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn il_covariance_exponential(
    antennas: usize,
    rho_re: f64,
    rho_im: f64,
    out_handle: *mut *mut IlCovariance,
) -> IlStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let cov = build_exponential_covariance(antennas, Complex64::new(rho_re, rho_im))?;
        boxed(IlCovariance(cov), slot);
        Ok(())
    })
}

/// One-ring covariance for a uniform linear array. Angles in degrees.
///
/// # Safety
/// `out_handle` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn il_covariance_one_ring(
    antennas: usize,
    spacing: f64,
    theta_bar_deg: f64,
    angular_spread_deg: f64,
    nodes: usize,
    out_handle: *mut *mut IlCovariance,
) -> IlStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let model = OneRingModel::from_angular_spread(theta_bar_deg.to_radians(), angular_spread_deg.to_radians())?;
        let cov = build_one_ring_covariance(ArrayGeometry::new(antennas, spacing)?, model, nodes)?;
        boxed(IlCovariance(cov), slot);
        Ok(())
    })
}

/// Number of antennas, or 0 for NULL.
///
/// # Safety
/// `cov` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn il_covariance_dim(cov: *const IlCovariance) -> usize {
    cov.as_ref().map_or(0, |c| c.0.dim())
}

/// # Safety
/// `cov` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn il_covariance_free(cov: *mut IlCovariance) {
    if !cov.is_null() {
        drop(Box::from_raw(cov));
    }
}

unsafe fn length_with(
    cov: *const IlCovariance,
    out_value: *mut f64,
    f: impl FnOnce(&CovarianceMatrix) -> interleave::Result<f64>,
) -> IlStatus {
    guard(|| {
        let cov = handle(cov, "cov")?;
        let slot = out(out_value, "out_value")?;
        *slot = f(&cov.0)?;
        Ok(())
    })
}

/// Closed-form average training length of basic antenna-domain training.
///
/// # Safety
/// `cov` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn il_lt_antenna_basic(cov: *const IlCovariance, alpha_th: f64, out_value: *mut f64) -> IlStatus {
    length_with(cov, out_value, |c| Ok(lt_antenna_basic(c, alpha_th)?.value))
}

/// Closed-form average training length of basic beam-domain training with the DFT codebook.
///
/// # Safety
/// `cov` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn il_lt_beam_dft(cov: *const IlCovariance, alpha_th: f64, out_value: *mut f64) -> IlStatus {
    length_with(cov, out_value, |c| Ok(lt_beam_general(c, &dft_codebook(c.dim()), alpha_th)?.value))
}

/// Closed-form average training length of modified beam-domain training.
///
/// # Safety
/// `cov` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn il_lt_beam_modified(cov: *const IlCovariance, alpha_th: f64, out_value: *mut f64) -> IlStatus {
    length_with(cov, out_value, |c| Ok(lt_beam_modified(c, alpha_th)?.value))
}

/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_lt_iid(antennas: usize, alpha_th: f64, out_value: *mut f64) -> IlStatus {
    guard(|| {
        *out(out_value, "out_value")? = lt_iid(antennas, alpha_th)?.value;
        Ok(())
    })
}

/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_lt_fully_correlated(antennas: usize, alpha_th: f64, out_value: *mut f64) -> IlStatus {
    guard(|| {
        *out(out_value, "out_value")? = lt_fully_correlated(antennas, alpha_th)?.value;
        Ok(())
    })
}

/// Monte Carlo estimate; results depend only on the inputs and `seed`.
///
/// # Safety
/// `cov` must be a live handle and `out_estimate` writable.
#[no_mangle]
pub unsafe extern "C" fn il_monte_carlo(
    cov: *const IlCovariance,
    scheme: IlScheme,
    alpha_th: f64,
    trials: usize,
    seed: u64,
    out_estimate: *mut IlEstimate,
) -> IlStatus {
    guard(|| {
        let cov = handle(cov, "cov")?;
        let slot = out(out_estimate, "out_estimate")?;
        let kind = match scheme {
            IlScheme::BasicAntenna => SchemeKind::BasicAntenna,
            IlScheme::BasicBeam => SchemeKind::BasicBeam(dft_codebook(cov.0.dim())),
            IlScheme::ModifiedBeam => SchemeKind::ModifiedBeam,
            IlScheme::ModifiedAntenna => SchemeKind::ModifiedAntenna,
        };
        let e = monte_carlo(&kind, &cov.0, alpha_th, trials, seed)?;
        *slot = IlEstimate { mean_length: e.mean_length, std_error: e.std_error, outage_rate: e.outage_rate, trials: e.trials };
        Ok(())
    })
}

/// First-order Marcum Q function; NaN if either argument is NaN.
#[no_mangle]
pub extern "C" fn il_marcum_q1(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        return f64::NAN;
    }
    catch_unwind(|| marcum_q1(a, b)).unwrap_or(f64::NAN)
}

/// CDF at `x` of `sum_t values[t] * Exp-sum of multiplicities[t] unit exponentials`.
///
/// # Safety
/// `values` and `multiplicities` must point to `len` readable elements; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_wcs_cdf(
    values: *const f64,
    multiplicities: *const usize,
    len: usize,
    x: f64,
    out_value: *mut f64,
) -> IlStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let groups = if len == 0 {
            EigenvalueGroups::empty()
        } else {
            if values.is_null() {
                return Err(Failure::Null("values"));
            }
            if multiplicities.is_null() {
                return Err(Failure::Null("multiplicities"));
            }
            let v = std::slice::from_raw_parts(values, len).to_vec();
            let m = std::slice::from_raw_parts(multiplicities, len).to_vec();
            EigenvalueGroups::new(v, m)?
        };
        *slot = wcs_cdf(&groups, x);
        Ok(())
    })
}

/// Load a regressor written by `fit-surrogate`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_handle` writable.
#[no_mangle]
pub unsafe extern "C" fn il_regressor_load(path: *const c_char, out_handle: *mut *mut IlRegressor) -> IlStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        let slot = out(out_handle, "out_handle")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::InvalidParameter("path is not valid UTF-8".into()))?;
        boxed(IlRegressor(RegressorModel::load(Path::new(path))?), slot);
        Ok(())
    })
}

/// Predicted training length; `out_in_domain` (may be NULL) reports whether
/// the inputs lie inside the training domain.
///
/// # Safety
/// `model` must be a live handle, `out_value` writable, `out_in_domain` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn il_regressor_predict(
    model: *const IlRegressor,
    rho: f64,
    alpha_th: f64,
    out_value: *mut f64,
    out_in_domain: *mut bool,
) -> IlStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let slot = out(out_value, "out_value")?;
        if !rho.is_finite() || !alpha_th.is_finite() {
            return Err(Error::InvalidParameter("inputs must be finite".into()).into());
        }
        *slot = model.0.predict(rho, alpha_th);
        if let Some(flag) = out_in_domain.as_mut() {
            *flag = model.0.in_domain(rho, alpha_th);
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn il_regressor_free(model: *mut IlRegressor) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
