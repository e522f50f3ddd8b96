//! Brute-force verifiers for the closed-form optimisers and numerical
//! estimates elsewhere in the crate.
//!
//! Nothing here calls into the optimisation paths it is meant to check: the
//! scans, the golden-section loop and the quadrature are self-contained.

use crate::bounds::delta_plus;
use crate::error::{Error, Result};
use crate::scalar::{entropy_term, std_normal_cdf, std_normal_pdf, std_normal_sf, GaussianSource, RdpQuery};

/// A closed interval sampled at `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::usage(format!("grid needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if points < 3 {
            return Err(Error::usage(format!("grid needs at least 3 points, got {points}")));
        }
        Ok(GridSpec { lo, hi, points })
    }

    /// The `i`-th node; the last node is exactly `hi`.
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |i| self.node(i))
    }
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

// Golden section on [a, b] for `iters` steps; returns the best point seen.
fn golden_refine(f: &dyn Fn(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut x1 = a + GOLDEN * (b - a);
    let mut x2 = b - GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + GOLDEN * (b - a);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - GOLDEN * (b - a);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

/// Grid scan followed by golden-section refinement around the best node.
///
/// Ties in the scan go to the first node; the refined point is only taken
/// when strictly better, so refinement never worsens the result.
pub fn grid_min_sigma(objective: &dyn Fn(f64) -> f64, interval: GridSpec, refine_iters: usize) -> (f64, f64) {
    let mut best_i = 0;
    let mut best_v = objective(interval.node(0));
    for i in 1..interval.points {
        let v = objective(interval.node(i));
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let a = interval.node(best_i.saturating_sub(1));
    let b = interval.node((best_i + 1).min(interval.points - 1));
    let (x, v) = golden_refine(objective, a, b, refine_iters);
    if v < best_v {
        (x, v)
    } else {
        (interval.node(best_i), best_v)
    }
}

/// Maximise `α ↦ δ₊(σ_X̂, α)` over a log-spaced grid on `[grid.lo, grid.hi]`
/// with golden refinement in `log α`.
pub fn grid_sup_alpha(sigma_hat: f64, q: &RdpQuery, grid: GridSpec) -> Result<(f64, f64)> {
    if !(grid.lo > 0.0) {
        return Err(Error::usage("alpha grid must start above zero"));
    }
    let log_grid = GridSpec::new(grid.lo.ln(), grid.hi.ln(), grid.points)?;
    let neg = |t: f64| -delta_plus(sigma_hat, t.exp(), q).unwrap_or(0.0);
    let (t, v) = grid_min_sigma(&neg, log_grid, 200);
    Ok((t.exp(), -v))
}

/// Default α grid, `[1e-3, 1e3]` with 20001 log-spaced nodes.
pub fn default_alpha_grid() -> GridSpec {
    GridSpec {
        lo: 1e-3,
        hi: 1e3,
        points: 20_001,
    }
}

/// `(entropy, distortion)` of the regular quantizer with the given interior
/// boundaries and centroid levels; boundaries in standard units.
fn centroid_quantizer_metrics(bounds: &[f64]) -> (f64, f64) {
    let mut edges = Vec::with_capacity(bounds.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend_from_slice(bounds);
    edges.push(f64::INFINITY);
    let mut h = 0.0;
    let mut captured = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mass = if a >= 0.0 {
            std_normal_sf(a) - std_normal_sf(b)
        } else {
            std_normal_cdf(b) - std_normal_cdf(a)
        };
        if mass <= 0.0 {
            continue;
        }
        let first = std_normal_pdf(a) - std_normal_pdf(b);
        h += entropy_term(mass);
        captured += first * first / mass;
    }
    (h, 1.0 - captured)
}

/// Exhaustive scan over boundary placements of an `n`-cell regular quantizer
/// with centroid levels, returning the Pareto-minimal `(entropy, distortion)`
/// pairs sorted by entropy. Boundaries may coincide, which empties a cell.
pub fn brute_quantizer_search(source: &GaussianSource, n: usize, boundary_grid: GridSpec) -> Result<Vec<(f64, f64)>> {
    const BUDGET: u128 = 10_000_000;
    if !(n == 2 || n == 3) {
        return Err(Error::usage(format!(
            "brute-force search supports 2 or 3 cells, got {n}"
        )));
    }
    let g = boundary_grid.points as u128;
    let evals = if n == 2 { g } else { g * (g + 1) / 2 };
    if evals > BUDGET {
        return Err(Error::usage(format!(
            "{evals} boundary tuples exceed the budget of {BUDGET}"
        )));
    }
    let sd = source.std_dev();
    let var = source.variance();
    let z: Vec<f64> = boundary_grid.nodes().map(|b| (b - source.mean()) / sd).collect();
    let mut pts = Vec::new();
    if n == 2 {
        for &b in &z {
            pts.push(centroid_quantizer_metrics(&[b]));
        }
    } else {
        for i in 0..z.len() {
            for j in i..z.len() {
                pts.push(centroid_quantizer_metrics(&[z[i], z[j]]));
            }
        }
    }
    let mut front = pareto_front(pts);
    for p in &mut front {
        p.1 *= var;
    }
    Ok(front)
}

fn pareto_front(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut front: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if front.last().is_none_or(|l| p.1 < l.1) {
            front.push(p);
        }
    }
    front
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with error estimate.
pub fn adaptive_quadrature(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    const MAX_DEPTH: u32 = 50;
    if !(tol > 0.0) {
        return Err(Error::usage("quadrature tolerance must be positive"));
    }
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err = 0.0;
    let v = simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut err)?;
    Ok((v, err))
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err: &mut f64,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::numerical(format!(
            "adaptive quadrature exhausted its depth on [{a}, {b}] (local error {:.3e}, tol {tol:.3e})",
            delta.abs() / 15.0
        )));
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err)?;
    Ok(l + r)
}
