//! C ABI over `gauss-rdp`.
//!
//! Every fallible function returns a [`GrdpStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! read with [`grdp_last_error`]. Queries, mixtures and quantizers are opaque
//! handles owned by the caller and released with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gauss_rdp::bounds::{self, BoundResult};
use gauss_rdp::ecsq::{self, Quantizer};
use gauss_rdp::talagrand::{self, ScalarDistribution};
use gauss_rdp::{Error, ExtReal, GaussianSource, Measure, RdpQuery};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrdpStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Usage = 3,
    State = 4,
    Numerical = 5,
    Precondition = 6,
    /// Caller buffer too small; the required length was written.
    BufferTooSmall = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrdpMeasure {
    Kl = 0,
    W2 = 1,
}

/// A bound value. Optimisers that do not apply are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrdpBound {
    pub value: f64,
    pub minimizer_sigma: f64,
    pub maximizer_alpha: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrdpTalagrandReport {
    pub w2sq: f64,
    pub w2sq_error: f64,
    pub kl: f64,
    pub kl_error: f64,
    pub rhs_refined: f64,
    pub rhs_original: f64,
    pub holds_refined: bool,
    pub holds_original: bool,
    pub slack: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrdpQuantizerMetrics {
    pub distortion: f64,
    pub entropy: f64,
    pub lagrangian_cost: f64,
}

/// Opaque rate-distortion-perception query.
pub struct GrdpQuery(RdpQuery);

/// Opaque finite Gaussian mixture.
pub struct GrdpMixture(ScalarDistribution);

/// Opaque scalar quantizer.
pub struct GrdpQuantizer(Quantizer);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GrdpStatus {
    match e {
        Error::Domain(_) => GrdpStatus::Domain,
        Error::Usage(_) => GrdpStatus::Usage,
        Error::State(_) => GrdpStatus::State,
        Error::Numerical(_) => GrdpStatus::Numerical,
        Error::Precondition(_) => GrdpStatus::Precondition,
    }
}

/// Runs `f` behind the boundary: clears the last error, maps errors and
/// panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (GrdpStatus, String)>) -> GrdpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GrdpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("panic: {msg}"));
            GrdpStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (GrdpStatus, String)>;
}

impl<T> IntoFfi<T> for gauss_rdp::Result<T> {
    fn ffi(self) -> Result<T, (GrdpStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (GrdpStatus, String) {
    (GrdpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (GrdpStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (GrdpStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

// taken as an integer so that out-of-range values from C are an error, not UB
fn measure(m: i32) -> Result<Measure, (GrdpStatus, String)> {
    match m {
        x if x == GrdpMeasure::Kl as i32 => Ok(Measure::Kl),
        x if x == GrdpMeasure::W2 as i32 => Ok(Measure::W2Sq),
        _ => Err((GrdpStatus::Usage, format!("unknown measure {m}"))),
    }
}

fn source(mean: f64, variance: f64) -> Result<GaussianSource, (GrdpStatus, String)> {
    GaussianSource::new(mean, variance).ffi()
}

fn ext(x: f64) -> Result<ExtReal, (GrdpStatus, String)> {
    ExtReal::new(x).ffi()
}

fn bound(b: BoundResult) -> GrdpBound {
    GrdpBound {
        value: b.value,
        minimizer_sigma: b.minimizer_sigma.unwrap_or(f64::NAN),
        maximizer_alpha: b.maximizer_alpha.unwrap_or(f64::NAN),
    }
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> Result<(), (GrdpStatus, String)> {
    *out_ref(len, "len")? = src.len();
    if cap < src.len() {
        return Err((
            GrdpStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn grdp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn grdp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a query. Rates and perception may be `INFINITY`; `measure_kind`
/// is a [`GrdpMeasure`] value.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_query_new(
    mean: f64,
    variance: f64,
    rate: f64,
    common: f64,
    perception: f64,
    measure_kind: i32,
    out: *mut *mut GrdpQuery,
) -> GrdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let q = RdpQuery::new(
            source(mean, variance)?,
            ext(rate)?,
            ext(common)?,
            ext(perception)?,
            measure(measure_kind)?,
        );
        *out = Box::into_raw(Box::new(GrdpQuery(q)));
        Ok(())
    })
}

/// # Safety
/// `q` must come from [`grdp_query_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn grdp_query_free(q: *mut GrdpQuery) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// # Safety
/// `q` must be a live query handle.
#[no_mangle]
pub unsafe extern "C" fn grdp_query_set_rate(q: *mut GrdpQuery, rate: f64) -> GrdpStatus {
    guard(|| {
        let q = out_ref(q, "query")?;
        q.0 = q.0.with_rate(ext(rate)?);
        Ok(())
    })
}

/// # Safety
/// `q` must be a live query handle.
#[no_mangle]
pub unsafe extern "C" fn grdp_query_set_common(q: *mut GrdpQuery, common: f64) -> GrdpStatus {
    guard(|| {
        let q = out_ref(q, "query")?;
        q.0 = q.0.with_common_randomness(ext(common)?);
        Ok(())
    })
}

/// # Safety
/// `q` must be a live query handle.
#[no_mangle]
pub unsafe extern "C" fn grdp_query_set_perception(q: *mut GrdpQuery, perception: f64) -> GrdpStatus {
    guard(|| {
        let q = out_ref(q, "query")?;
        q.0 = q.0.with_perception(ext(perception)?);
        Ok(())
    })
}

/// # Safety
/// `q` must be a live query handle.
#[no_mangle]
pub unsafe extern "C" fn grdp_query_set_measure(q: *mut GrdpQuery, measure_kind: i32) -> GrdpStatus {
    guard(|| {
        let q = out_ref(q, "query")?;
        q.0 = q.0.with_measure(measure(measure_kind)?);
        Ok(())
    })
}

unsafe fn eval(
    q: *const GrdpQuery,
    out: *mut GrdpBound,
    f: fn(&RdpQuery) -> gauss_rdp::Result<BoundResult>,
) -> GrdpStatus {
    guard(|| {
        let q = in_ref(q, "query")?;
        let out = out_ref(out, "out")?;
        *out = bound(f(&q.0).ffi()?);
        Ok(())
    })
}

/// Lower bound for the query's measure.
///
/// # Safety
/// `q` must be a live query handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_lower(q: *const GrdpQuery, out: *mut GrdpBound) -> GrdpStatus {
    eval(q, out, bounds::lower)
}

/// Improved lower bound; W2 queries only.
///
/// # Safety
/// `q` must be a live query handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_improved_lower(q: *const GrdpQuery, out: *mut GrdpBound) -> GrdpStatus {
    eval(q, out, bounds::improved_lower_w2)
}

/// # Safety
/// `q` must be a live query handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_upper(q: *const GrdpQuery, out: *mut GrdpBound) -> GrdpStatus {
    eval(q, out, bounds::upper)
}

/// Bound induced from the other measure: a lower bound for KL queries, an
/// upper bound for W2 queries.
///
/// # Safety
/// `q` must be a live query handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_induced(q: *const GrdpQuery, out: *mut GrdpBound) -> GrdpStatus {
    eval(q, out, bounds::induced)
}

/// Perception level above which the improved W2 lower bound stops helping.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_threshold_perception(
    mean: f64,
    variance: f64,
    rate: f64,
    common: f64,
    out: *mut f64,
) -> GrdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = bounds::strictness_threshold_p(rate, common, &source(mean, variance)?)
            .ffi()?
            .threshold
            .get();
        Ok(())
    })
}

/// Rate above which the improved W2 lower bound stops helping. May be `INFINITY`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_threshold_rate(
    mean: f64,
    variance: f64,
    common: f64,
    perception: f64,
    out: *mut f64,
) -> GrdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = bounds::strictness_threshold_r(common, ext(perception)?, &source(mean, variance)?)
            .ffi()?
            .threshold
            .get();
        Ok(())
    })
}

/// Rate and distortion of the symmetric binary quantizer with threshold `theta`
/// in standard units.
///
/// # Safety
/// `rate` and `distortion` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_binary_point(
    mean: f64,
    variance: f64,
    theta: f64,
    rate: *mut f64,
    distortion: *mut f64,
) -> GrdpStatus {
    guard(|| {
        let rate = out_ref(rate, "rate")?;
        let distortion = out_ref(distortion, "distortion")?;
        let (_, r, d) = ecsq::binary_quantizer(theta, &source(mean, variance)?).ffi()?;
        *rate = r;
        *distortion = d;
        Ok(())
    })
}

/// Distortion of the binary construction at a rate in `(0, log 2]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_binary_at_rate(mean: f64, variance: f64, rate: f64, out: *mut f64) -> GrdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ecsq::binary_bound_at_rate(rate, &source(mean, variance)?).ffi()?;
        Ok(())
    })
}

/// Builds a mixture from `n` components given as parallel arrays.
///
/// # Safety
/// The three arrays must hold `n` values each; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_mixture_new(
    weights: *const f64,
    means: *const f64,
    stds: *const f64,
    n: usize,
    out: *mut *mut GrdpMixture,
) -> GrdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if n > 0 && (weights.is_null() || means.is_null() || stds.is_null()) {
            return Err(null("component array"));
        }
        let triples: Vec<(f64, f64, f64)> = (0..n).map(|i| (*weights.add(i), *means.add(i), *stds.add(i))).collect();
        let d = ScalarDistribution::from_triples(&triples).ffi()?;
        *out = Box::into_raw(Box::new(GrdpMixture(d)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`grdp_mixture_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn grdp_mixture_free(m: *mut GrdpMixture) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Mean and variance of the mixture.
///
/// # Safety
/// `m` must be a live mixture handle; `mean` and `variance` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_mixture_moments(m: *const GrdpMixture, mean: *mut f64, variance: *mut f64) -> GrdpStatus {
    guard(|| {
        let m = in_ref(m, "mixture")?;
        let (mu, var) = m.0.moments();
        *out_ref(mean, "mean")? = mu;
        *out_ref(variance, "variance")? = var;
        Ok(())
    })
}

/// Checks the refined transportation inequality between the mixture and the
/// Gaussian source. The mixture must match the source mean and have no larger
/// deviation, otherwise `Precondition` is returned.
///
/// # Safety
/// `m` must be a live mixture handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_talagrand_check(
    m: *const GrdpMixture,
    mean: f64,
    variance: f64,
    out: *mut GrdpTalagrandReport,
) -> GrdpStatus {
    guard(|| {
        let m = in_ref(m, "mixture")?;
        let out = out_ref(out, "out")?;
        let r = talagrand::check_refined_talagrand(&m.0, &source(mean, variance)?).ffi()?;
        *out = GrdpTalagrandReport {
            w2sq: r.w2sq.value,
            w2sq_error: r.w2sq.abs_error_bound,
            kl: r.kl.value,
            kl_error: r.kl.abs_error_bound,
            rhs_refined: r.rhs_refined,
            rhs_original: r.rhs_original,
            holds_refined: r.holds_refined,
            holds_original: r.holds_original,
            slack: r.slack,
        };
        Ok(())
    })
}

/// Designs an entropy-constrained scalar quantizer with at most `n_max` cells
/// for multiplier `lambda`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_ecsq_design(
    mean: f64,
    variance: f64,
    lambda: f64,
    n_max: usize,
    seed: u64,
    out: *mut *mut GrdpQuantizer,
) -> GrdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let d = ecsq::design_ecsq(&source(mean, variance)?, lambda, n_max, seed).ffi()?;
        *out = Box::into_raw(Box::new(GrdpQuantizer(d.quantizer)));
        Ok(())
    })
}

/// # Safety
/// `q` must come from [`grdp_ecsq_design`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn grdp_quantizer_free(q: *mut GrdpQuantizer) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Number of cells, or 0 for a null handle.
///
/// # Safety
/// `q` must be null or a live quantizer handle.
#[no_mangle]
pub unsafe extern "C" fn grdp_quantizer_len(q: *const GrdpQuantizer) -> usize {
    q.as_ref().map_or(0, |q| q.0.len())
}

/// Copies the reconstruction levels into `buf`. `len` receives the count even
/// when `cap` is too small.
///
/// # Safety
/// `q` must be a live handle, `buf` valid for `cap` writes, `len` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_quantizer_levels(
    q: *const GrdpQuantizer,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> GrdpStatus {
    guard(|| copy_out(in_ref(q, "quantizer")?.0.levels(), buf, cap, len))
}

/// Copies the cell boundaries (one fewer than the levels).
///
/// # Safety
/// As for [`grdp_quantizer_levels`].
#[no_mangle]
pub unsafe extern "C" fn grdp_quantizer_boundaries(
    q: *const GrdpQuantizer,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> GrdpStatus {
    guard(|| copy_out(in_ref(q, "quantizer")?.0.boundaries(), buf, cap, len))
}

/// Copies the cell probabilities under the design source.
///
/// # Safety
/// As for [`grdp_quantizer_levels`].
#[no_mangle]
pub unsafe extern "C" fn grdp_quantizer_probabilities(
    q: *const GrdpQuantizer,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> GrdpStatus {
    guard(|| copy_out(in_ref(q, "quantizer")?.0.probabilities(), buf, cap, len))
}

/// Reconstruction of `x`, or NaN for a null handle.
///
/// # Safety
/// `q` must be null or a live quantizer handle.
#[no_mangle]
pub unsafe extern "C" fn grdp_quantizer_apply(q: *const GrdpQuantizer, x: f64) -> f64 {
    q.as_ref().map_or(f64::NAN, |q| q.0.quantize(x))
}

/// Distortion, output entropy and Lagrangian cost against a Gaussian source.
///
/// # Safety
/// `q` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn grdp_quantizer_metrics(
    q: *const GrdpQuantizer,
    mean: f64,
    variance: f64,
    lambda: f64,
    out: *mut GrdpQuantizerMetrics,
) -> GrdpStatus {
    guard(|| {
        let q = in_ref(q, "quantizer")?;
        let out = out_ref(out, "out")?;
        let m = q.0.metrics(&source(mean, variance)?, lambda);
        *out = GrdpQuantizerMetrics {
            distortion: m.distortion,
            entropy: m.entropy,
            lagrangian_cost: m.lagrangian_cost,
        };
        Ok(())
    })
}
