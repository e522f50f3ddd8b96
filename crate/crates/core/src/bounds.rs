//! Closed-form and numerically optimised distortion bounds for a Gaussian
//! source under a KL or squared-W2 perception constraint, together with the
//! improved W2 lower bound and the thresholds where it stops improving.
//!
//! All distortions are in absolute source units squared.

use crate::error::{Error, Result};
use crate::optimize::scan_then_refine;
use crate::scalar::{nu_of_p, pos, psi, sigma_of_p, xi, ExtReal, GaussianSource, Measure, RdpQuery};

/// Grid size of the scan preceding golden-section refinement.
pub const SCAN_POINTS: usize = 4097;

/// Golden-section stopping width, relative to `σ_X`.
const REFINE_TOL: f64 = 1e-10;

/// A bound value with the optimisers that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub value: f64,
    /// Optimising reconstruction standard deviation, when the bound is a
    /// minimisation over it.
    pub minimizer_sigma: Option<f64>,
    /// Optimising `α` of the inner supremum of the improved lower bound.
    pub maximizer_alpha: Option<f64>,
}

impl BoundResult {
    fn plain(value: f64) -> Self {
        BoundResult {
            value,
            minimizer_sigma: None,
            maximizer_alpha: None,
        }
    }

    fn at(value: f64, sigma: f64) -> Self {
        BoundResult {
            value,
            minimizer_sigma: Some(sigma),
            maximizer_alpha: None,
        }
    }
}

/// Which branch of a threshold formula produced the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRegime {
    /// Single closed form (perception threshold).
    ClosedForm,
    /// `P ≥ σ²_X`: every rate is above the threshold.
    PerceptionAtLeastVariance,
    /// `R_c = log 2`: the quadratic degenerates to a linear equation.
    LinearAtLog2,
    /// Smaller root of the quadratic in `e^{-2R}`.
    QuadraticRoot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub threshold: ExtReal,
    pub regime: ThresholdRegime,
}

// ---------------------------------------------------------------------------
// KL perception
// ---------------------------------------------------------------------------

/// Objective of the KL lower bound at reconstruction deviation `s`.
pub fn lower_kl_objective(s: f64, q: &RdpQuery) -> f64 {
    let src = &q.source;
    let sd = src.std_dev();
    let one_minus_z = -(-2.0 * q.rate.get()).exp_m1();
    let inner = if (q.rate + q.common_randomness + q.perception).is_infinite() {
        1.0
    } else if s <= 0.0 {
        0.0
    } else {
        let slack = pos(q.perception.get() - psi(s, src).unwrap_or(f64::INFINITY));
        let expo = q.rate.get() + q.common_randomness.get() + slack;
        -(-2.0 * expo).exp_m1()
    };
    src.variance() + s * s - 2.0 * sd * s * (one_minus_z * pos(inner)).sqrt()
}

/// Lower bound on the distortion under a KL perception budget, minimised
/// over `σ_X̂ ∈ [σ(P), σ_X]` by a grid scan and golden-section refinement.
pub fn lower_kl(q: &RdpQuery) -> Result<BoundResult> {
    q.require(Measure::Kl, "lower_kl")?;
    let sd = q.source.std_dev();
    let var = q.source.variance();
    if q.rate.is_infinite() {
        return Ok(BoundResult::at(0.0, sd));
    }
    if q.perception.is_infinite() {
        let z = q.z();
        return Ok(BoundResult::at(var * z, sd * (1.0 - z).sqrt()));
    }
    let lo = sigma_of_p(q.perception, &q.source);
    let f = |s: f64| lower_kl_objective(s, q);
    let (s, v) = scan_then_refine(&f, lo, sd, SCAN_POINTS, REFINE_TOL * sd);
    Ok(BoundResult::at(v, s))
}

/// Upper bound `σ²_X − σ²_X ξ² + (σ(P) − σ_X ξ)²₊` under a KL budget.
pub fn upper_kl(q: &RdpQuery) -> Result<BoundResult> {
    q.require(Measure::Kl, "upper_kl")?;
    let sd = q.source.std_dev();
    let var = q.source.variance();
    let x = xi(q.rate, q.common_randomness);
    let gap = pos(sigma_of_p(q.perception, &q.source) - sd * x);
    Ok(BoundResult::plain(var - var * x * x + gap * gap))
}

// ---------------------------------------------------------------------------
// W2 perception
// ---------------------------------------------------------------------------

/// `(σ_X e^{-(R+R_c)} − √P)₊`.
fn w2_offset(q: &RdpQuery) -> f64 {
    pos(q.source.std_dev() * q.e_total() - q.perception.get().sqrt())
}

/// Objective of the W2 lower bound at reconstruction deviation `s`.
pub fn lower_w2_objective(s: f64, q: &RdpQuery) -> f64 {
    let d = w2_offset(q);
    w2_objective_with_offset(s, d, q)
}

fn w2_objective_with_offset(s: f64, offset: f64, q: &RdpQuery) -> f64 {
    let sd = q.source.std_dev();
    let one_minus_z = -(-2.0 * q.rate.get()).exp_m1();
    q.source.variance() + s * s - 2.0 * sd * (one_minus_z * pos(s * s - offset * offset)).sqrt()
}

/// Closed-form minimiser of the W2 lower-bound objective (four cases).
pub fn w2_sigma_hat(q: &RdpQuery) -> f64 {
    let sd = q.source.std_dev();
    let sqrt_p = q.perception.get().sqrt();
    if q.rate.is_infinite() {
        return sd;
    }
    if q.rate.is_zero() {
        return pos(sd - sqrt_p);
    }
    let z = q.z();
    let e = q.e_total();
    let one_minus_z = -(-2.0 * q.rate.get()).exp_m1();
    let ratio = sqrt_p / sd;
    let nu = (z - e * e) / (2.0 - 2.0 * e);
    let knee = 1.0 - one_minus_z.sqrt();
    if ratio >= knee.max(e) {
        sd * one_minus_z.sqrt()
    } else if ratio >= e {
        sd - sqrt_p
    } else if ratio >= nu {
        let off = sd * e - sqrt_p;
        (q.source.variance() * one_minus_z + off * off).sqrt()
    } else {
        sd - sqrt_p
    }
}

/// Lower bound under a W2² budget, evaluated at the closed-form minimiser.
pub fn lower_w2(q: &RdpQuery) -> Result<BoundResult> {
    q.require(Measure::W2Sq, "lower_w2")?;
    let sd = q.source.std_dev();
    if q.rate.is_infinite() {
        return Ok(BoundResult::at(0.0, sd));
    }
    let s = w2_sigma_hat(q);
    Ok(BoundResult::at(lower_w2_objective(s, q), s))
}

/// Upper bound `σ²_X − σ²_X ξ² + (σ_X − √P − σ_X ξ)²₊` under a W2² budget.
pub fn upper_w2(q: &RdpQuery) -> Result<BoundResult> {
    q.require(Measure::W2Sq, "upper_w2")?;
    let sd = q.source.std_dev();
    let var = q.source.variance();
    let x = xi(q.rate, q.common_randomness);
    let gap = pos(sd - q.perception.get().sqrt() - sd * x);
    Ok(BoundResult::plain(var - var * x * x + gap * gap))
}

/// `δ₊(σ_X̂, α)`, the clamped lower bound on the distortion of compressing a
/// reconstruction of deviation `σ_X̂` at rate `R + R_c`, indexed by `α > 0`.
///
/// A negative radicand (only possible for `σ_X̂ < σ_X − √P`) is clamped to 0.
pub fn delta_plus(sigma_hat: f64, alpha: f64, q: &RdpQuery) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    if sigma_hat.is_nan() || sigma_hat < 0.0 {
        return Err(Error::domain(format!("sigma_hat must be nonnegative, got {sigma_hat}")));
    }
    Ok(delta_plus_unchecked(sigma_hat, alpha, q))
}

fn delta_plus_unchecked(s: f64, alpha: f64, q: &RdpQuery) -> f64 {
    if q.perception.is_infinite() {
        return 0.0;
    }
    let sd = q.source.std_dev();
    // σ² − αA + α²s² regrouped as (σ − αs)² + α(P − (σ − s)²) so that the
    // radicand vanishes exactly at s = σ − √P, α = σ/s
    let sqrt_p = q.perception.get().sqrt();
    let gap = sd - s;
    let lin = (sqrt_p - gap) * (sqrt_p + gap);
    let radicand = (sd - alpha * s).powi(2) + alpha * lin;
    pos(sd * q.e_total() - pos(radicand).sqrt()) / alpha
}

/// Whether `sup_{α>0} δ₊(σ_X̂, α) > 0`, i.e.
/// `P < σ²_X + σ²_X̂ − 2σ_Xσ_X̂ √(1 − e^{−2(R+R_c)})`.
pub fn sup_delta_positive(s: f64, q: &RdpQuery) -> bool {
    if q.perception.is_infinite() {
        return false;
    }
    let sd = q.source.std_dev();
    let one_minus_e2 = -(-2.0 * (q.rate + q.common_randomness).get()).exp_m1();
    let rhs = q.source.variance() + s * s - 2.0 * sd * s * one_minus_e2.sqrt();
    q.perception.get() < rhs
}

/// Closed-form maximiser `α̂` of `α ↦ δ₊(σ_X̂, α)`.
///
/// Only defined where the supremum is positive; elsewhere every `α` is a
/// maximiser and a state error is returned.
pub fn alpha_hat(sigma_hat: f64, q: &RdpQuery) -> Result<f64> {
    if !(sigma_hat > 0.0) {
        return Err(Error::domain(format!("sigma_hat must be positive, got {sigma_hat}")));
    }
    if !sup_delta_positive(sigma_hat, q) {
        return Err(Error::state(format!(
            "sup over alpha of delta_+ is zero at sigma_hat={sigma_hat}; alpha_hat is undefined"
        )));
    }
    if (q.rate + q.common_randomness).is_zero() {
        return Err(Error::state(
            "R + R_c = 0: the supremum over alpha is approached only as alpha -> 0",
        ));
    }
    let sd = q.source.std_dev();
    let var = q.source.variance();
    let s = sigma_hat;
    let sqrt_p = q.perception.get().sqrt();
    if (s - (sd - sqrt_p)).abs() <= 1e-12 * sd {
        return Ok(sd / s);
    }
    let e = q.e_total();
    let a = var + s * s - q.perception.get();
    let lead = a * a - 4.0 * var * s * s * e * e;
    if lead.abs() <= 1e-12 * var * var {
        return Ok(var / a);
    }
    let one_minus_e2 = -(-2.0 * (q.rate + q.common_randomness).get()).exp_m1();
    let disc = (4.0 * var * s * s - a * a) * one_minus_e2;
    if disc < -1e-12 * var * var {
        return Err(Error::numerical(format!(
            "negative discriminant {disc} in alpha_hat at sigma_hat={s}: case dispatch reached an invalid branch"
        )));
    }
    Ok(alpha_root(a, pos(disc), e, one_minus_e2, var))
}

// Smaller root of the quadratic, in the cancellation-free form
// 2c / (b + √(b² − 4ac)).
fn alpha_root(a: f64, disc: f64, e: f64, one_minus_e2: f64, var: f64) -> f64 {
    2.0 * var * one_minus_e2 / (a * one_minus_e2 + e * disc.sqrt())
}

/// `sup_{α>0} δ₊(σ_X̂, α)` and the maximiser when the supremum is positive.
pub fn sup_delta(s: f64, q: &RdpQuery) -> (f64, Option<f64>) {
    if s <= 0.0 || !sup_delta_positive(s, q) || (q.rate + q.common_randomness).is_zero() {
        return (0.0, None);
    }
    let alpha = match alpha_hat(s, q) {
        Ok(a) => a,
        Err(_) => {
            let var = q.source.variance();
            let e = q.e_total();
            let a = var + s * s - q.perception.get();
            let one_minus_e2 = -(-2.0 * (q.rate + q.common_randomness).get()).exp_m1();
            alpha_root(a, pos((4.0 * var * s * s - a * a) * one_minus_e2), e, one_minus_e2, var)
        }
    };
    (delta_plus_unchecked(s, alpha, q), Some(alpha))
}

/// Objective of the improved lower bound after the inner supremum.
pub fn improved_lower_w2_objective(s: f64, q: &RdpQuery) -> f64 {
    let (d, _) = sup_delta(s, q);
    w2_objective_with_offset(s, d, q)
}

/// Improved lower bound under a W2² budget: minimum over `σ_X̂` of the
/// supremum over `α` (closed form `α̂`), by scan + golden-section refinement.
/// The closed-form minimiser of [`lower_w2`] is always tried as a candidate.
pub fn improved_lower_w2(q: &RdpQuery) -> Result<BoundResult> {
    q.require(Measure::W2Sq, "improved_lower_w2")?;
    let sd = q.source.std_dev();
    if q.rate.is_infinite() {
        return Ok(BoundResult::at(0.0, sd));
    }
    if q.rate.is_zero() || q.perception.is_infinite() {
        return lower_w2(q);
    }
    let lo = pos(sd - q.perception.get().sqrt());
    let f = |s: f64| improved_lower_w2_objective(s, q);
    let (mut s, mut v) = scan_then_refine(&f, lo, sd, SCAN_POINTS, REFINE_TOL * sd);
    let cand = w2_sigma_hat(q);
    let vc = f(cand);
    if vc <= v {
        s = cand;
        v = vc;
    }
    let (_, alpha) = sup_delta(s, q);
    Ok(BoundResult {
        value: v,
        minimizer_sigma: Some(s),
        maximizer_alpha: alpha,
    })
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

/// `P*(R, R_c) = σ²_X (2 − e^{−2R} − 2ξ(R, R_c))`: the improved bound
/// coincides with [`lower_w2`] iff `P ≥ P*`.
pub fn strictness_threshold_p(rate: f64, common: f64, source: &GaussianSource) -> Result<ThresholdResult> {
    let r = ExtReal::new(rate)?;
    let rc = ExtReal::new(common)?;
    let z = r.exp_neg(2.0);
    let p = source.variance() * pos(2.0 - z - 2.0 * xi(r, rc));
    Ok(ThresholdResult {
        threshold: ExtReal::new(p)?,
        regime: ThresholdRegime::ClosedForm,
    })
}

/// The same threshold expressed in the rate: the improved bound coincides
/// with [`lower_w2`] iff `R ≥ R*(R_c, P)`.
pub fn strictness_threshold_r(common: f64, perception: ExtReal, source: &GaussianSource) -> Result<ThresholdResult> {
    if !(common > 0.0 && common.is_finite()) {
        return Err(Error::domain(format!(
            "common randomness rate must lie in (0, inf), got {common}"
        )));
    }
    if perception.is_zero() {
        return Err(Error::domain("perception budget must be positive"));
    }
    let var = source.variance();
    if perception.get() >= var {
        return Ok(ThresholdResult {
            threshold: ExtReal::ZERO,
            regime: ThresholdRegime::PerceptionAtLeastVariance,
        });
    }
    let p = perception.get();
    let four_ec = 4.0 * (-2.0 * common).exp();
    let zeta1 = four_ec - 1.0;
    let zeta2 = four_ec + 2.0 * p / var;
    let zeta3 = (4.0 * var - p) * p / (var * var);
    let (z_hat, regime) = if zeta1.abs() <= 1e-12 * four_ec {
        (zeta3 / zeta2, ThresholdRegime::LinearAtLog2)
    } else {
        let disc = pos(zeta2 * zeta2 - 4.0 * zeta1 * zeta3);
        (2.0 * zeta3 / (zeta2 + disc.sqrt()), ThresholdRegime::QuadraticRoot)
    };
    Ok(ThresholdResult {
        threshold: ExtReal::new(pos(-0.5 * z_hat.ln()))?,
        regime,
    })
}

// ---------------------------------------------------------------------------
// Induced bounds
// ---------------------------------------------------------------------------

/// KL lower bound induced by the W2 lower bound at budget `2σ²_X(1 − e^{−P})`.
pub fn induced_lower_kl(q: &RdpQuery) -> Result<BoundResult> {
    q.require(Measure::Kl, "induced_lower_kl")?;
    let p = 2.0 * q.source.variance() * -(-q.perception.get()).exp_m1();
    let wq = q.with_measure(Measure::W2Sq).with_perception(ExtReal::new(p)?);
    lower_w2(&wq)
}

/// W2 upper bound induced by the KL upper bound at budget `ν(P)`.
pub fn induced_upper_w2(q: &RdpQuery) -> Result<BoundResult> {
    q.require(Measure::W2Sq, "induced_upper_w2")?;
    let nu = if q.perception.is_infinite() {
        ExtReal::INFINITY
    } else {
        nu_of_p(q.perception.get(), &q.source)?
    };
    let kq = q.with_measure(Measure::Kl).with_perception(nu);
    upper_kl(&kq)
}

/// Lower bound for the query's measure.
pub fn lower(q: &RdpQuery) -> Result<BoundResult> {
    match q.measure {
        Measure::Kl => lower_kl(q),
        Measure::W2Sq => lower_w2(q),
    }
}

/// Upper bound for the query's measure.
pub fn upper(q: &RdpQuery) -> Result<BoundResult> {
    match q.measure {
        Measure::Kl => upper_kl(q),
        Measure::W2Sq => upper_w2(q),
    }
}

/// The bound induced from the other measure: a lower bound for KL queries,
/// an upper bound for W2 queries.
pub fn induced(q: &RdpQuery) -> Result<BoundResult> {
    match q.measure {
        Measure::Kl => induced_lower_kl(q),
        Measure::W2Sq => induced_upper_w2(q),
    }
}
