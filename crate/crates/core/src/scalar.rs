//! Gaussian source model, extended-real rates and the scalar special
//! functions shared by every bound.
//!
//! Rates are in nats. Quantities carrying a `+∞` value (rate, common
//! randomness, perception budget) are held in [`ExtReal`] so that terms such
//! as `e^{-2R}` evaluate to exactly zero at `R = ∞`.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Positive part `max(x, 0)`.
#[inline]
pub fn pos(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// A nonnegative real or `+∞`. Never negative and never NaN.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::domain(format!(
                "extended real must be a nonnegative number or +inf, got {value}"
            )));
        }
        // normalise -0.0
        Ok(ExtReal(value + 0.0))
    }

    /// The underlying value; `f64::INFINITY` for `+∞`.
    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// `e^{-k x}` for `k > 0`, exactly `0` at `x = ∞`.
    #[inline]
    pub fn exp_neg(self, k: f64) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            (-k * self.0).exp()
        }
    }
}

impl std::ops::Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        ExtReal(self.0 + rhs.0)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" | "∞" => Ok(ExtReal::INFINITY),
            _ => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::domain(format!("cannot parse '{s}' as a number")))?;
                ExtReal::new(v)
            }
        }
    }
}

impl TryFrom<f64> for ExtReal {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        ExtReal::new(value)
    }
}

/// The source law `N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSource {
    mean: f64,
    variance: f64,
}

impl GaussianSource {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::domain(format!("source mean must be finite, got {mean}")));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::domain(format!(
                "source variance must be positive and finite, got {variance}"
            )));
        }
        Ok(GaussianSource { mean, variance })
    }

    /// `N(0, 1)`.
    pub fn standard() -> Self {
        GaussianSource {
            mean: 0.0,
            variance: 1.0,
        }
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    #[inline]
    pub fn variance(&self) -> f64 {
        self.variance
    }

    #[inline]
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Perception measure between source and reconstruction laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    /// Kullback-Leibler divergence of the reconstruction from the source (nats).
    Kl,
    /// Squared Wasserstein-2 distance (source units squared).
    W2Sq,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Kl => f.write_str("kl"),
            Measure::W2Sq => f.write_str("w2"),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kl" => Ok(Measure::Kl),
            "w2" | "w2sq" | "w2^2" => Ok(Measure::W2Sq),
            other => Err(Error::usage(format!("unknown measure '{other}'"))),
        }
    }
}

/// The argument of every bound: source, rate, common-randomness rate,
/// perception budget and the measure the budget is expressed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdpQuery {
    pub source: GaussianSource,
    pub rate: ExtReal,
    pub common_randomness: ExtReal,
    pub perception: ExtReal,
    pub measure: Measure,
}

impl RdpQuery {
    pub fn new(
        source: GaussianSource,
        rate: ExtReal,
        common_randomness: ExtReal,
        perception: ExtReal,
        measure: Measure,
    ) -> Self {
        RdpQuery {
            source,
            rate,
            common_randomness,
            perception,
            measure,
        }
    }

    /// Convenience constructor from raw floats; `f64::INFINITY` is accepted.
    pub fn from_f64(
        source: GaussianSource,
        rate: f64,
        common_randomness: f64,
        perception: f64,
        measure: Measure,
    ) -> Result<Self> {
        Ok(RdpQuery::new(
            source,
            ExtReal::new(rate)?,
            ExtReal::new(common_randomness)?,
            ExtReal::new(perception)?,
            measure,
        ))
    }

    pub fn with_perception(mut self, perception: ExtReal) -> Self {
        self.perception = perception;
        self
    }

    pub fn with_rate(mut self, rate: ExtReal) -> Self {
        self.rate = rate;
        self
    }

    pub fn with_common_randomness(mut self, common_randomness: ExtReal) -> Self {
        self.common_randomness = common_randomness;
        self
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    /// `e^{-2R}`.
    #[inline]
    pub(crate) fn z(&self) -> f64 {
        self.rate.exp_neg(2.0)
    }

    /// `e^{-(R + R_c)}`.
    #[inline]
    pub(crate) fn e_total(&self) -> f64 {
        (self.rate + self.common_randomness).exp_neg(1.0)
    }

    pub(crate) fn require(&self, measure: Measure, op: &str) -> Result<()> {
        if self.measure != measure {
            return Err(Error::usage(format!(
                "{op} requires the {measure} measure but the query uses {}",
                self.measure
            )));
        }
        Ok(())
    }
}

/// KL divergence of `N(σ_X̂·, σ_X̂²)` with matched mean from the source as a
/// function of the reconstruction standard deviation.
pub fn psi(sigma_hat: f64, source: &GaussianSource) -> Result<f64> {
    if !(sigma_hat > 0.0) {
        return Err(Error::domain(format!(
            "psi needs a positive standard deviation, got {sigma_hat}"
        )));
    }
    let var = source.variance();
    Ok((source.std_dev() / sigma_hat).ln() + (sigma_hat * sigma_hat - var) / (2.0 * var))
}

fn psi_unchecked(sigma_hat: f64, source: &GaussianSource) -> f64 {
    let var = source.variance();
    (source.std_dev() / sigma_hat).ln() + (sigma_hat * sigma_hat - var) / (2.0 * var)
}

const SIGMA_OF_P_FLOOR: f64 = 1e-15;
const SIGMA_OF_P_MAX_ITERS: usize = 200;
const SIGMA_OF_P_TOL: f64 = 1e-12;

/// The unique `σ ∈ [0, σ_X]` with `psi(σ) = P`, found by bisection.
///
/// Returns `σ_X` at `P = 0` and `0` at `P = ∞` (or once the root lies below
/// `1e-15 σ_X`).
pub fn sigma_of_p(perception: ExtReal, source: &GaussianSource) -> f64 {
    let sd = source.std_dev();
    if perception.is_zero() {
        return sd;
    }
    if perception.is_infinite() {
        return 0.0;
    }
    let p = perception.get();
    let mut lo = SIGMA_OF_P_FLOOR * sd;
    let mut hi = sd;
    if psi_unchecked(lo, source) <= p {
        return 0.0;
    }
    // psi is decreasing on (0, σ_X]: psi(lo) > p >= psi(hi) = 0
    for _ in 0..SIGMA_OF_P_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if psi_unchecked(mid, source) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= SIGMA_OF_P_TOL * sd {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `√((1 − e^{−2R})(1 − e^{−2(R+R_c)}))`.
pub fn xi(rate: ExtReal, common_randomness: ExtReal) -> f64 {
    let a = -(-2.0 * rate.get()).exp_m1();
    let b = -(-2.0 * (rate + common_randomness).get()).exp_m1();
    (a * b).sqrt()
}

/// `log(2σ²_X / (2σ²_X − P)₊)`: the KL budget induced by a W2² budget.
pub fn nu_of_p(perception: f64, source: &GaussianSource) -> Result<ExtReal> {
    if perception.is_nan() || perception < 0.0 {
        return Err(Error::domain(format!(
            "perception budget must be nonnegative, got {perception}"
        )));
    }
    let two_var = 2.0 * source.variance();
    let denom = pos(two_var - perception);
    if denom == 0.0 {
        return Ok(ExtReal::INFINITY);
    }
    ExtReal::new(pos(-(-perception / two_var).ln_1p()))
}

/// KL divergence of `N(mean2, std2²)` from the source.
pub fn gaussian_kl(source: &GaussianSource, mean2: f64, std2: f64) -> Result<f64> {
    if !(std2 > 0.0) {
        return Err(Error::domain(format!(
            "reconstruction standard deviation must be positive, got {std2}"
        )));
    }
    let var = source.variance();
    let dm = source.mean() - mean2;
    Ok((source.std_dev() / std2).ln() + (dm * dm + std2 * std2 - var) / (2.0 * var))
}

/// Squared W2 distance between the source and `N(mean2, std2²)`.
pub fn gaussian_w2sq(source: &GaussianSource, mean2: f64, std2: f64) -> Result<f64> {
    if std2.is_nan() || std2 < 0.0 {
        return Err(Error::domain(format!(
            "reconstruction standard deviation must be nonnegative, got {std2}"
        )));
    }
    let dm = source.mean() - mean2;
    let ds = source.std_dev() - std2;
    Ok(dm * dm + ds * ds)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF `Q(θ)`, through `Q(θ) = erfc(−θ/√2)/2`.
///
/// `erfc` is the musl rational-approximation implementation (via `libm`),
/// which keeps full relative precision deep into the lower tail.
#[inline]
pub fn std_normal_cdf(theta: f64) -> f64 {
    0.5 * libm::erfc(-theta * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Q(θ)` without cancellation.
#[inline]
pub fn std_normal_sf(theta: f64) -> f64 {
    0.5 * libm::erfc(theta * FRAC_1_SQRT_2)
}

/// Inverse of [`std_normal_cdf`].
///
/// Rational initial guess refined by Halley steps on the `erfc` based CDF.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

/// The `x` with `1 − Q(x) = q`, accurate for tiny `q`.
pub fn std_normal_upper_quantile(q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return f64::NEG_INFINITY;
    }
    if q > 0.5 {
        return lower_quantile(1.0 - q);
    }
    -lower_quantile(q)
}

// p in (0, 0.5]
fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        let e = std_normal_cdf(x) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Binary entropy in nats, `0` at the endpoints.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_term(p) + entropy_term(1.0 - p)
}

/// `−p log p` with `0 log 0 = 0`.
#[inline]
pub fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// `log 2`, the entropy of a fair binary split.
pub const LOG_2: f64 = LN_2;

#[cfg(test)]
mod tests {
    use super::*;

    fn n01() -> GaussianSource {
        GaussianSource::standard()
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(1.0, &n01()).unwrap(), 0.0);
        let v = psi(0.5, &n01()).unwrap();
        assert!((v - (2f64.ln() - 0.375)).abs() < 1e-15);
        assert!((v - 0.318_147).abs() < 1e-6);
        assert!(psi(1e-300, &n01()).unwrap() > 600.0);
        assert!(matches!(psi(0.0, &n01()), Err(Error::Domain(_))));
        assert!(matches!(psi(-1.0, &n01()), Err(Error::Domain(_))));
    }

    #[test]
    fn sigma_of_p_examples() {
        assert_eq!(sigma_of_p(ExtReal::ZERO, &n01()), 1.0);
        assert_eq!(sigma_of_p(ExtReal::INFINITY, &n01()), 0.0);
        let p = ExtReal::new(2f64.ln() - 0.375).unwrap();
        assert!((sigma_of_p(p, &n01()) - 0.5).abs() < 1e-11);
        // huge budgets fall below the bisection floor
        assert_eq!(sigma_of_p(ExtReal::new(100.0).unwrap(), &n01()), 0.0);
    }

    #[test]
    fn sigma_of_p_scales_with_source() {
        let src = GaussianSource::new(3.0, 4.0).unwrap();
        let p = ExtReal::new(2f64.ln() - 0.375).unwrap();
        assert!((sigma_of_p(p, &src) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi(ExtReal::ZERO, ExtReal::new(3.0).unwrap()), 0.0);
        assert_eq!(xi(ExtReal::ZERO, ExtReal::INFINITY), 0.0);
        assert_eq!(xi(ExtReal::INFINITY, ExtReal::ZERO), 1.0);
        let a = 1.0 - (-0.2f64).exp();
        let b = 1.0 - (-0.4f64).exp();
        let v = xi(ExtReal::new(0.1).unwrap(), ExtReal::new(0.1).unwrap());
        assert!((v - (a * b).sqrt()).abs() < 1e-15);
        assert!((v - 0.244_46).abs() < 1e-5);
    }

    #[test]
    fn nu_examples() {
        let src = n01();
        assert_eq!(nu_of_p(0.0, &src).unwrap(), ExtReal::ZERO);
        assert!((nu_of_p(1.0, &src).unwrap().get() - LOG_2).abs() < 1e-15);
        assert!(nu_of_p(2.0, &src).unwrap().is_infinite());
        assert!(nu_of_p(5.0, &src).unwrap().is_infinite());
        assert!(nu_of_p(-1.0, &src).is_err());
    }

    #[test]
    fn gaussian_closed_forms() {
        let src = n01();
        assert_eq!(gaussian_kl(&src, 0.0, 1.0).unwrap(), 0.0);
        assert!((gaussian_kl(&src, 0.0, 0.5).unwrap() - psi(0.5, &src).unwrap()).abs() < 1e-15);
        assert!((gaussian_kl(&src, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(gaussian_kl(&src, 0.0, 0.0).is_err());
        assert_eq!(gaussian_w2sq(&src, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(gaussian_w2sq(&src, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(gaussian_w2sq(&src, 0.0, 0.5).unwrap(), 0.25);
        assert_eq!(gaussian_w2sq(&src, 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((std_normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        // deep tail keeps relative precision: Q(-10) = 7.619853024160527e-24
        let t = std_normal_cdf(-10.0);
        assert!(((t - 7.619_853_024_160_527e-24) / t).abs() < 1e-13);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-300, 1e-20, 1e-9, 0.01, 0.3, 0.5, 0.7, 0.99] {
            let x = std_normal_quantile(p);
            assert!(((std_normal_cdf(x) - p) / p).abs() < 1e-13, "p={p}");
        }
        for &q in &[1e-18, 1e-9, 0.2] {
            let x = std_normal_upper_quantile(q);
            assert!(((std_normal_sf(x) - q) / q).abs() < 1e-13, "q={q}");
        }
        assert_eq!(std_normal_quantile(0.5), 0.0);
    }

    #[test]
    fn ext_real_rules() {
        assert!(ExtReal::new(-1.0).is_err());
        assert!(ExtReal::new(f64::NAN).is_err());
        assert_eq!(ExtReal::INFINITY.exp_neg(2.0), 0.0);
        assert!((ExtReal::new(1.0).unwrap() + ExtReal::INFINITY).is_infinite());
        assert_eq!("inf".parse::<ExtReal>().unwrap(), ExtReal::INFINITY);
        assert_eq!("0.5".parse::<ExtReal>().unwrap().get(), 0.5);
        assert!("-0.5".parse::<ExtReal>().is_err());
        assert_eq!(ExtReal::INFINITY.to_string(), "inf");
    }

    #[test]
    fn source_validation() {
        assert!(GaussianSource::new(0.0, 0.0).is_err());
        assert!(GaussianSource::new(f64::INFINITY, 1.0).is_err());
        assert!(GaussianSource::new(0.0, f64::INFINITY).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn psi_strictly_decreasing(a in 1e-6f64..1.0, b in 1e-6f64..1.0) {
                prop_assume!((a - b).abs() > 1e-9);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let src = GaussianSource::standard();
                prop_assert!(psi(lo, &src).unwrap() > psi(hi, &src).unwrap());
            }

            #[test]
            fn sigma_of_p_inverts_psi(s in 1e-6f64..1.0, var in 0.1f64..10.0) {
                let src = GaussianSource::new(0.0, var).unwrap();
                let sd = src.std_dev();
                let p = psi(s * sd, &src).unwrap();
                let back = sigma_of_p(ExtReal::new(p).unwrap(), &src);
                prop_assert!((back - s * sd).abs() <= 1e-10 * sd);
            }

            #[test]
            fn xi_monotone(r in 0f64..5.0, rc in 0f64..5.0, dr in 0f64..1.0, drc in 0f64..1.0) {
                let e = |x: f64| ExtReal::new(x).unwrap();
                let lo = xi(e(r), e(rc));
                prop_assert!((0.0..=1.0).contains(&lo));
                prop_assert!(lo <= xi(e(r + dr), e(rc + drc)));
            }

            #[test]
            fn closed_forms_nonnegative(m in -3f64..3.0, s in 0.01f64..3.0) {
                let src = GaussianSource::standard();
                prop_assert!(gaussian_kl(&src, m, s).unwrap() >= 0.0);
                prop_assert!(gaussian_w2sq(&src, m, s).unwrap() >= 0.0);
            }

            #[test]
            fn cdf_symmetry(t in -30f64..30.0) {
                prop_assert!((std_normal_cdf(t) + std_normal_cdf(-t) - 1.0).abs() <= 1e-14);
            }
        }
    }
}
