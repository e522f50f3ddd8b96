//! Property and oracle suites run by `gauss-rdp verify`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{
    alpha_hat, improved_lower_w2, induced_lower_kl, induced_upper_w2, lower_kl, lower_w2, lower_w2_objective,
    strictness_threshold_p, strictness_threshold_r, sup_delta_positive, upper_kl, upper_w2, w2_sigma_hat,
};
use crate::ecsq::{binary_bound_at_rate, design_ecsq, shannon_dr, trace_de_curve};
use crate::error::{Error, Result};
use crate::oracle::{grid_min_sigma, grid_sup_alpha, GridSpec};
use crate::scalar::{xi, ExtReal, GaussianSource, Measure, RdpQuery, LOG_2};
use crate::talagrand::{
    check_original_talagrand, gap_relation_check, random_mixture, refined_talagrand_sweep, trial_rng,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Bounds,
    Talagrand,
    Ecsq,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounds" => Ok(Suite::Bounds),
            "talagrand" => Ok(Suite::Talagrand),
            "ecsq" => Ok(Suite::Ecsq),
            "all" => Ok(Suite::All),
            other => Err(Error::usage(format!(
                "unknown suite '{other}' (expected bounds, talagrand, ecsq or all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Bounds => "bounds",
            Suite::Talagrand => "talagrand",
            Suite::Ecsq => "ecsq",
            Suite::All => "all",
        })
    }
}

/// One named check and its result.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(suite: &'static str, name: &'static str, failures: usize, total: usize, worst: f64) -> Self {
        CheckOutcome {
            suite,
            name,
            passed: failures == 0,
            detail: format!("{}/{} ok, worst margin {:.3e}", total - failures, total, worst),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, trials: 1000 }
    }
}

pub fn run_suite(suite: Suite, opts: VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Bounds | Suite::All) {
        out.extend(bounds_suite(opts)?);
    }
    if matches!(suite, Suite::Talagrand | Suite::All) {
        out.extend(talagrand_suite(opts)?);
    }
    if matches!(suite, Suite::Ecsq | Suite::All) {
        out.extend(ecsq_suite()?);
    }
    Ok(out)
}

// Tally of a property over many points: failures and the smallest margin
// (negative margins are violations).
struct Tally {
    failures: usize,
    total: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Tally {
            failures: 0,
            total: 0,
            worst: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64, tol: f64) {
        self.total += 1;
        self.worst = self.worst.min(margin);
        if !(margin >= -tol) {
            self.failures += 1;
        }
    }

    fn outcome(&self, suite: &'static str, name: &'static str) -> CheckOutcome {
        CheckOutcome::new(suite, name, self.failures, self.total, self.worst)
    }
}

const RATES: [f64; 8] = [0.0, 0.02, 0.1, 0.3, 0.6, 1.0, 2.0, f64::INFINITY];
const COMMONS: [f64; 5] = [0.0, 0.1, 0.5, 1.0, f64::INFINITY];
const PERCEPTIONS: [f64; 8] = [0.0, 0.01, 0.1, 0.3, 0.7, 1.0, 1.5, f64::INFINITY];

fn bounds_suite(opts: VerifyOptions) -> Result<Vec<CheckOutcome>> {
    const S: &str = "bounds";
    let src = GaussianSource::new(0.3, 1.7)?;
    let var = src.variance();
    let mut out = Vec::new();

    // sandwich
    let mut sandwich = Tally::new();
    let mut improved_between = Tally::new();
    for &r in &RATES {
        for &rc in &COMMONS {
            for &p in &PERCEPTIONS {
                let kq = RdpQuery::from_f64(src, r, rc, p, Measure::Kl)?;
                let wq = kq.with_measure(Measure::W2Sq);
                let (lk, uk) = (lower_kl(&kq)?.value, upper_kl(&kq)?.value);
                let (lw, uw) = (lower_w2(&wq)?.value, upper_w2(&wq)?.value);
                let iw = improved_lower_w2(&wq)?.value;
                sandwich.record(uk - lk, 1e-12 * var);
                sandwich.record(uw - lw, 1e-12 * var);
                sandwich.record(2.0 * var - uk, 1e-12 * var);
                sandwich.record(2.0 * var - uw, 1e-12 * var);
                sandwich.record(lk, 0.0);
                sandwich.record(lw, 0.0);
                improved_between.record(iw - lw, 1e-12 * var);
                improved_between.record(uw - iw, 1e-12 * var);
            }
        }
    }
    out.push(sandwich.outcome(S, "0 <= lower <= upper <= 2 var"));
    out.push(improved_between.outcome(S, "lower <= improved <= upper"));

    // monotonicity along each axis
    let mut mono = Tally::new();
    let axis: Vec<f64> = (0..=40).map(|i| 0.05 * i as f64).collect();
    for &measure in &[Measure::Kl, Measure::W2Sq] {
        for &(a, b) in &[(0.1, 0.1), (0.5, 0.0), (1.0, 0.3)] {
            let mut prev: Option<[f64; 6]> = None;
            for &t in &axis {
                let qs = [
                    RdpQuery::from_f64(src, t, a, b, measure)?,
                    RdpQuery::from_f64(src, a, t, b, measure)?,
                    RdpQuery::from_f64(src, a, b, t, measure)?,
                ];
                let mut cur = [0.0; 6];
                for (k, q) in qs.iter().enumerate() {
                    cur[2 * k] = crate::bounds::lower(q)?.value;
                    cur[2 * k + 1] = crate::bounds::upper(q)?.value;
                }
                if let Some(p) = prev {
                    for k in 0..6 {
                        mono.record(p[k] - cur[k], 1e-10 * var);
                    }
                }
                prev = Some(cur);
            }
        }
    }
    out.push(mono.outcome(S, "bounds nonincreasing in R, Rc, P"));

    // induced bounds are looser
    let mut induced = Tally::new();
    for i in 0..10 {
        for j in 0..5 {
            for k in 0..10 {
                let (r, rc, p) = (0.2 * i as f64, 0.25 * j as f64, 0.01 + 0.2 * k as f64);
                let kq = RdpQuery::from_f64(src, r, rc, p, Measure::Kl)?;
                let wq = kq.with_measure(Measure::W2Sq);
                induced.record(lower_kl(&kq)?.value - induced_lower_kl(&kq)?.value, 1e-12 * var);
                induced.record(induced_upper_w2(&wq)?.value - upper_w2(&wq)?.value, 1e-12 * var);
            }
        }
    }
    out.push(induced.outcome(S, "induced bounds are looser"));

    // strictness region in P and in R
    let mut strict = Tally::new();
    for &(r, rc) in &[(0.1, 0.1), (0.3, 0.2), (0.05, 1.0), (0.8, 0.5)] {
        let p_star = strictness_threshold_p(r, rc, &src)?.threshold.get();
        for k in 1..10 {
            let below = RdpQuery::from_f64(src, r, rc, p_star * k as f64 / 10.0, Measure::W2Sq)?;
            strict.record(gap(&below)? - 1e-10 * var, 0.0);
            let above = RdpQuery::from_f64(src, r, rc, p_star * (1.0 + k as f64 / 10.0), Measure::W2Sq)?;
            strict.record(-gap(&above)?, 1e-12 * var);
        }
    }
    for &(rc, p) in &[(0.1, 0.1), (0.5, 0.2), (1.0, 0.05)] {
        let r_star = strictness_threshold_r(rc, ExtReal::new(p * var)?, &src)?
            .threshold
            .get();
        for k in 1..10 {
            let below = RdpQuery::from_f64(src, r_star * k as f64 / 10.0, rc, p * var, Measure::W2Sq)?;
            strict.record(gap(&below)? - 1e-10 * var, 0.0);
            let above = RdpQuery::from_f64(src, r_star * (1.0 + k as f64 / 10.0), rc, p * var, Measure::W2Sq)?;
            strict.record(-gap(&above)?, 1e-12 * var);
        }
    }
    out.push(strict.outcome(S, "improvement exactly below the thresholds"));

    // unlimited perception
    let mut collapse = Tally::new();
    for i in 0..20 {
        for j in 0..20 {
            let (r, rc) = (0.1 * i as f64, 0.1 * j as f64);
            let kq = RdpQuery::from_f64(src, r, rc, f64::INFINITY, Measure::Kl)?;
            let wq = kq.with_measure(Measure::W2Sq);
            let low = shannon_dr(kq.rate, &src);
            let x = xi(kq.rate, kq.common_randomness);
            let up = var * (1.0 - x * x);
            for v in [
                lower_kl(&kq)?.value,
                lower_w2(&wq)?.value,
                improved_lower_w2(&wq)?.value,
            ] {
                collapse.record(-(v - low).abs(), 1e-12);
            }
            for v in [upper_kl(&kq)?.value, upper_w2(&wq)?.value] {
                collapse.record(-(v - up).abs(), 1e-12);
            }
        }
    }
    out.push(collapse.outcome(S, "P = inf closed forms"));

    out.push(oracle_agreement(opts.seed, 100)?);
    Ok(out)
}

fn gap(q: &RdpQuery) -> Result<f64> {
    Ok(improved_lower_w2(q)?.value - lower_w2(q)?.value)
}

/// Random W2 query for the oracle comparisons.
pub fn random_w2_query(rng: &mut impl Rng) -> Result<RdpQuery> {
    let src = GaussianSource::new(rng.random_range(-2.0..2.0), rng.random_range(0.25..4.0))?;
    let var = src.variance();
    RdpQuery::from_f64(
        src,
        rng.random_range(0.01..2.0),
        rng.random_range(0.0..1.5),
        var * rng.random_range(0.0..1.2),
        Measure::W2Sq,
    )
}

/// Closed-form `σ̂` and `α̂` against grid oracles on random queries:
/// `1e-4` (relative to `σ_X`) in the argument and `1e-8 σ²_X` in value.
pub fn oracle_agreement(seed: u64, count: usize) -> Result<CheckOutcome> {
    let results: Vec<Result<(bool, f64)>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed ^ 0x5eed_0a11, i);
            let q = random_w2_query(&mut rng)?;
            oracle_point(&q)
        })
        .collect();
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for r in results {
        let (ok, dev) = r?;
        if !ok {
            failures += 1;
        }
        worst = worst.max(dev);
    }
    Ok(CheckOutcome {
        suite: "bounds",
        name: "closed-form optimisers match grid oracles",
        passed: failures == 0,
        detail: format!(
            "{}/{} ok, largest scaled deviation {:.3e}",
            count - failures,
            count,
            worst
        ),
    })
}

/// Compares one query; returns whether it agrees and the largest deviation
/// in units of its tolerance.
pub fn oracle_point(q: &RdpQuery) -> Result<(bool, f64)> {
    let sd = q.source.std_dev();
    let var = q.source.variance();
    let lo = (sd - q.perception.get().sqrt()).max(0.0);
    let s_hat = w2_sigma_hat(q);
    let f = |s: f64| lower_w2_objective(s, q);
    let (s_grid, v_grid) = grid_min_sigma(&f, GridSpec::new(lo, sd, 20_001)?, 200);
    let mut dev = ((f(s_hat) - v_grid).abs() / (1e-8 * var)).max((s_hat - s_grid).abs() / (1e-4 * sd));
    if sup_delta_positive(s_hat, q) && !(q.rate + q.common_randomness).is_zero() {
        let a_hat = alpha_hat(s_hat, q)?;
        let (a_grid, d_grid) = grid_sup_alpha(s_hat, q, GridSpec::new(1e-4, 1e4, 40_001)?)?;
        let d_hat = crate::bounds::delta_plus(s_hat, a_hat, q)?;
        dev = dev
            .max((d_grid - d_hat).abs() / (1e-8 * sd))
            .max((a_hat - a_grid).abs() / (1e-4 * a_hat.max(1.0)));
    }
    Ok((dev <= 1.0, dev))
}

fn talagrand_suite(opts: VerifyOptions) -> Result<Vec<CheckOutcome>> {
    const S: &str = "talagrand";
    let src = GaussianSource::standard();
    let reports = refined_talagrand_sweep(&src, opts.trials, opts.seed)?;
    let mut refined = Tally::new();
    let mut ordering = Tally::new();
    for (_, r) in &reports {
        let tol = r.w2sq.abs_error_bound + 2.0 * r.kl.abs_error_bound + 1e-12;
        refined.record(r.slack, tol);
        ordering.record(r.rhs_original - r.rhs_refined, 0.0);
    }
    let mut out = vec![
        refined.outcome(S, "refined inequality on constrained mixtures"),
        ordering.outcome(S, "refined right side below the original"),
    ];

    let n = opts.trials.min(200);
    let extra: Vec<Result<(f64, f64, f64, f64)>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(opts.seed.wrapping_add(1), i);
            let d = random_mixture(&src, &mut rng);
            let o = check_original_talagrand(&d, &src)?;
            let mut rng = trial_rng(opts.seed.wrapping_add(2), i);
            let c = crate::talagrand::random_constrained_mixture(&src, &mut rng);
            let l = gap_relation_check(&c, &src)?;
            let tol_o = o.w2sq.abs_error_bound + 2.0 * o.kl.abs_error_bound + 1e-12;
            Ok((o.rhs_original - o.w2sq.value, tol_o, l.rhs - l.lhs, l.tolerance))
        })
        .collect();
    let mut original = Tally::new();
    let mut gap = Tally::new();
    for e in extra {
        let (mo, to, ml, tl) = e?;
        original.record(mo, to);
        gap.record(ml, tl);
    }
    out.push(original.outcome(S, "original inequality on unconstrained mixtures"));
    out.push(gap.outcome(S, "gap relation against the matched Gaussian"));
    Ok(out)
}

fn ecsq_suite() -> Result<Vec<CheckOutcome>> {
    const S: &str = "ecsq";
    let src = GaussianSource::new(-0.4, 2.5)?;
    let var = src.variance();
    let jobs: Vec<(f64, u64)> = [0.0, 0.01, 0.05, 0.2, 0.5, 1.0, 3.0]
        .iter()
        .flat_map(|&l| (0..3u64).map(move |s| (l * var, s)))
        .collect();
    let designs: Vec<_> = jobs
        .par_iter()
        .map(|&(l, s)| design_ecsq(&src, l, 8, s))
        .collect::<Result<_>>()?;
    let mut centroid = Tally::new();
    let mut masses = Tally::new();
    let mut descent = Tally::new();
    for d in &designs {
        let (m, o) = d.quantizer.centroid_residuals(&src);
        centroid.record(-m.abs(), 1e-8);
        centroid.record(-o.abs(), 1e-8);
        masses.record(-d.quantizer.probability_mismatch(&src), 1e-12);
        for w in d.cost_trace.windows(2) {
            descent.record(w[0] - w[1], 1e-14 * var);
        }
    }
    let mut out = vec![
        centroid.outcome(S, "centroid and orthogonality conditions"),
        masses.outcome(S, "probabilities equal cell masses"),
        descent.outcome(S, "Lagrangian cost nonincreasing"),
    ];

    let sched: Vec<f64> = (0..16).map(|i| var * 0.01 * 1.5f64.powi(i)).collect();
    let hull = trace_de_curve(&src, &sched, 8)?;
    let mut shannon = Tally::new();
    for &(h, d) in &hull {
        shannon.record(d - shannon_dr(ExtReal::new(h)?, &src), 1e-10);
    }
    let mut binary = Tally::new();
    let mut fig6 = Tally::new();
    for k in 1..=50 {
        let r = LOG_2 * k as f64 / 50.0;
        let b = binary_bound_at_rate(r, &src)?;
        binary.record(b - shannon_dr(ExtReal::new(r)?, &src), 0.0);
        let up = upper_kl(&RdpQuery::from_f64(src, r, 0.0, f64::INFINITY, Measure::Kl)?)?.value;
        fig6.record(up - b - 1e-6, 0.0);
    }
    out.push(shannon.outcome(S, "traced hull above the Shannon bound"));
    out.push(binary.outcome(S, "binary construction above the Shannon bound"));
    out.push(fig6.outcome(S, "binary construction below the unlimited-perception upper bound"));
    Ok(out)
}

/// Seeded generator for ad-hoc checks.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
