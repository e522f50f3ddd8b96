//! Entropy-constrained scalar quantizers for a Gaussian source: the binary
//! threshold construction, Lagrangian (entropy-penalised Lloyd) design and
//! the traced operational distortion-rate hull.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optimize::bisect_decreasing;
use crate::scalar::{
    binary_entropy, entropy_term, std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf, xi, ExtReal,
    GaussianSource, LOG_2,
};

/// Cells lighter than this are dropped during design.
pub const PRUNE_MASS: f64 = 1e-12;
/// Design stops once the Lagrangian cost (in units of `σ²_X`) drops by less
/// than this between iterations.
pub const COST_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;

/// A deterministic scalar quantizer: `N − 1` ascending boundaries, `N`
/// reproduction levels and the `N` cell masses under the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    boundaries: Vec<f64>,
    levels: Vec<f64>,
    probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerMetrics {
    pub distortion: f64,
    /// Output entropy in nats.
    pub entropy: f64,
    /// `distortion + λ · entropy`.
    pub lagrangian_cost: f64,
}

impl Quantizer {
    pub fn new(boundaries: Vec<f64>, levels: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        let n = levels.len();
        if n == 0 {
            return Err(Error::domain("a quantizer needs at least one level"));
        }
        if boundaries.len() + 1 != n || probabilities.len() != n {
            return Err(Error::domain(format!(
                "{} levels need {} boundaries and {} probabilities, got {} and {}",
                n,
                n - 1,
                n,
                boundaries.len(),
                probabilities.len()
            )));
        }
        if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("boundaries must be finite and strictly ascending"));
        }
        if levels.iter().any(|y| !y.is_finite()) {
            return Err(Error::domain("levels must be finite"));
        }
        if probabilities.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::domain("cell probabilities must be positive"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("cell probabilities sum to {total}")));
        }
        Ok(Quantizer {
            boundaries,
            levels,
            probabilities,
        })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Index of the cell containing `x`; boundary points go to the upper cell.
    pub fn cell_index(&self, x: f64) -> usize {
        self.boundaries.partition_point(|b| *b <= x)
    }

    pub fn quantize(&self, x: f64) -> f64 {
        self.levels[self.cell_index(x)]
    }

    fn standard_cells(&self, source: &GaussianSource) -> Vec<CellMoments> {
        let z: Vec<f64> = self
            .boundaries
            .iter()
            .map(|b| (b - source.mean()) / source.std_dev())
            .collect();
        cells_from_edges(&z)
    }

    /// Distortion and entropy under `source`, from closed-form truncated
    /// Gaussian moments of each cell.
    pub fn metrics(&self, source: &GaussianSource, lambda: f64) -> QuantizerMetrics {
        let cells = self.standard_cells(source);
        let ys: Vec<f64> = self
            .levels
            .iter()
            .map(|y| (y - source.mean()) / source.std_dev())
            .collect();
        let d = standard_distortion(&cells, &ys);
        let h: f64 = cells.iter().map(|c| entropy_term(c.mass)).sum();
        let distortion = source.variance() * d;
        QuantizerMetrics {
            distortion,
            entropy: h,
            lagrangian_cost: distortion + lambda * h,
        }
    }

    /// `(E[X̂] − μ_X, E[(X − X̂)X̂])` under `source`.
    pub fn centroid_residuals(&self, source: &GaussianSource) -> (f64, f64) {
        let cells = self.standard_cells(source);
        let (mu, sd) = (source.mean(), source.std_dev());
        let mut mean_err = 0.0;
        let mut orth = 0.0;
        for (c, y) in cells.iter().zip(&self.levels) {
            // E[(X − y)·1{cell}] with X = μ + σZ
            let first = mu * c.mass + sd * c.first - y * c.mass;
            mean_err += y * c.mass;
            orth += y * first;
        }
        (mean_err - mu, orth)
    }

    /// Largest gap between the stored probabilities and the source cell masses.
    pub fn probability_mismatch(&self, source: &GaussianSource) -> f64 {
        self.standard_cells(source)
            .iter()
            .zip(&self.probabilities)
            .map(|(c, p)| (c.mass - p).abs())
            .fold(0.0, f64::max)
    }
}

// Truncated moments of Z ~ N(0, 1) on one cell: mass and E[Z; cell].
#[derive(Debug, Clone, Copy)]
struct CellMoments {
    mass: f64,
    first: f64,
}

fn cell_moments(a: f64, b: f64) -> CellMoments {
    let mass = if a >= 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else {
        std_normal_cdf(b) - std_normal_cdf(a)
    };
    CellMoments {
        mass,
        first: std_normal_pdf(a) - std_normal_pdf(b),
    }
}

fn cells_from_edges(interior: &[f64]) -> Vec<CellMoments> {
    let mut cells = Vec::with_capacity(interior.len() + 1);
    let mut a = f64::NEG_INFINITY;
    for &b in interior.iter().chain(std::iter::once(&f64::INFINITY)) {
        cells.push(cell_moments(a, b));
        a = b;
    }
    cells
}

// E[(Z − Ẑ)²] written as 1 − Σ y(2E[Z; cell] − y·mass) to avoid summing
// per-cell second moments.
fn standard_distortion(cells: &[CellMoments], ys: &[f64]) -> f64 {
    let captured: f64 = cells
        .iter()
        .zip(ys)
        .map(|(c, y)| y * (2.0 * c.first - y * c.mass))
        .sum();
    (1.0 - captured).max(0.0)
}

/// The two-cell quantizer thresholding at `μ_X + θσ_X` with conditional-mean
/// levels, returned with its rate (nats) and distortion.
pub fn binary_quantizer(theta: f64, source: &GaussianSource) -> Result<(Quantizer, f64, f64)> {
    if !(theta >= 0.0) || theta.is_infinite() {
        return Err(Error::domain(format!(
            "theta must be finite and nonnegative, got {theta}"
        )));
    }
    let (mu, sd, var) = (source.mean(), source.std_dev(), source.variance());
    let q = std_normal_sf(theta);
    if q <= 0.0 {
        let single = Quantizer::new(vec![], vec![mu], vec![1.0])?;
        return Ok((single, 0.0, var));
    }
    let dens = std_normal_pdf(theta);
    let rate = binary_entropy(q);
    let distortion = var - var * (-theta * theta).exp() / (2.0 * std::f64::consts::PI * q * (1.0 - q));
    let quantizer = Quantizer::new(
        vec![mu + theta * sd],
        vec![mu - sd * dens / (1.0 - q), mu + sd * dens / q],
        vec![1.0 - q, q],
    )?;
    Ok((quantizer, rate, distortion))
}

/// Distortion of the binary construction at rate `R ∈ (0, log 2]`, found by
/// bisection on the threshold.
pub fn binary_bound_at_rate(rate: f64, source: &GaussianSource) -> Result<f64> {
    Ok(binary_threshold_at_rate(rate, source)?.1)
}

/// `(θ, D)` with `R(θ) = rate`.
pub fn binary_threshold_at_rate(rate: f64, source: &GaussianSource) -> Result<(f64, f64)> {
    if !(rate > 0.0 && rate <= LOG_2) {
        return Err(Error::domain(format!("rate must lie in (0, log 2], got {rate}")));
    }
    let theta = if rate == LOG_2 {
        0.0
    } else {
        bisect_decreasing(&|t: f64| binary_entropy(std_normal_sf(t)), rate, 0.0, 40.0, 200)
    };
    let (_, _, d) = binary_quantizer(theta, source)?;
    Ok((theta, d))
}

/// Result of one Lagrangian design run.
#[derive(Debug, Clone, PartialEq)]
pub struct EcsqDesign {
    pub quantizer: Quantizer,
    pub metrics: QuantizerMetrics,
    /// Lagrangian cost after each iteration, in source units.
    pub cost_trace: Vec<f64>,
}

// Lower envelope of the lines −2y·x + (y² − λ log p), y ascending. Returns the
// indices of the lines that own a nonempty interval and the interval breaks.
fn lower_envelope(ys: &[f64], intercepts: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let cross = |i: usize, j: usize| (intercepts[j] - intercepts[i]) / (2.0 * (ys[j] - ys[i]));
    let mut stack: Vec<usize> = Vec::with_capacity(ys.len());
    for k in 0..ys.len() {
        if let Some(&top) = stack.last() {
            if ys[k] == ys[top] {
                if intercepts[k] < intercepts[top] {
                    stack.pop();
                } else {
                    continue;
                }
            }
        }
        while stack.len() >= 2 {
            let (a, b) = (stack[stack.len() - 2], stack[stack.len() - 1]);
            if cross(a, k) <= cross(a, b) {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(k);
    }
    let breaks = stack.windows(2).map(|w| cross(w[0], w[1])).collect();
    (stack, breaks)
}

struct Partition {
    breaks: Vec<f64>,
    cells: Vec<CellMoments>,
}

// Optimal cells for fixed levels and probabilities, with light cells removed
// and the partition recomputed until every cell has mass ≥ PRUNE_MASS.
fn assign(ys: &[f64], ps: &[f64], lam: f64) -> Partition {
    let mut ys = ys.to_vec();
    let mut ps = ps.to_vec();
    loop {
        let intercepts: Vec<f64> = ys.iter().zip(&ps).map(|(y, p)| y * y - lam * p.ln()).collect();
        let (kept, breaks) = lower_envelope(&ys, &intercepts);
        let cells = cells_from_edges(&breaks);
        let light: Vec<bool> = cells.iter().map(|c| c.mass < PRUNE_MASS).collect();
        if !light.iter().any(|&l| l) || cells.len() == 1 {
            return Partition { breaks, cells };
        }
        let (ny, np): (Vec<f64>, Vec<f64>) = kept
            .iter()
            .zip(&light)
            .filter(|(_, l)| !**l)
            .map(|(&i, _)| (ys[i], ps[i]))
            .unzip();
        ys = ny;
        ps = np;
    }
}

fn initial_levels(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ys: Vec<f64> = (1..=n)
        .map(|k| std_normal_quantile(k as f64 / (n + 1) as f64) + rng.random_range(-0.1..=0.1))
        .collect();
    ys.sort_by(f64::total_cmp);
    ys
}

/// Entropy-penalised Lloyd design minimising `E[(X − X̂)²] + λH(X̂)` from a
/// seeded start with `n_max` levels.
///
/// Each iteration re-partitions the line given the current levels and
/// probabilities, moves every level to its cell centroid and resets the
/// probabilities to the cell masses; the cost never increases.
pub fn design_ecsq(source: &GaussianSource, lambda: f64, n_max: usize, seed: u64) -> Result<EcsqDesign> {
    if !(lambda >= 0.0) || lambda.is_infinite() {
        return Err(Error::domain(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    if n_max == 0 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    let var = source.variance();
    let lam = lambda / var;
    let mut state = lloyd_step(&initial_levels(n_max, seed), &vec![1.0 / n_max as f64; n_max], lam);
    let mut trace = vec![var * state.cost];
    loop {
        let prev = state.cost;
        let plain = lloyd_step(&state.ys, &state.ps, lam);
        let next = extrapolate(&state, plain, lam);
        let decrease = prev - next.cost;
        // a step can only raise the cost through rounding
        if next.cost <= prev {
            state = next;
        }
        trace.push(var * state.cost);
        if decrease < COST_TOL {
            break;
        }
        if trace.len() >= MAX_ITERATIONS {
            let tail: Vec<String> = trace[trace.len() - 5..].iter().map(|c| format!("{c:.3e}")).collect();
            return Err(Error::numerical(format!(
                "ECSQ design did not converge in {MAX_ITERATIONS} iterations (lambda {lambda}, seed {seed}); last costs [{}]",
                tail.join(", ")
            )));
        }
    }
    let (mu, sd) = (source.mean(), source.std_dev());
    let total: f64 = state.ps.iter().sum();
    let quantizer = Quantizer::new(
        state.breaks.iter().map(|b| mu + sd * b).collect(),
        state.ys.iter().map(|y| mu + sd * y).collect(),
        state.ps.iter().map(|p| p / total).collect(),
    )?;
    let metrics = QuantizerMetrics {
        distortion: var * state.distortion,
        entropy: state.entropy,
        lagrangian_cost: var * state.distortion + lambda * state.entropy,
    };
    Ok(EcsqDesign {
        quantizer,
        metrics,
        cost_trace: trace,
    })
}

// Quantizer state in standard units after one assignment/centroid/probability
// pass; levels are the centroids of `breaks` and `ps` their masses.
struct LloydState {
    ys: Vec<f64>,
    ps: Vec<f64>,
    breaks: Vec<f64>,
    distortion: f64,
    entropy: f64,
    cost: f64,
}

fn lloyd_step(ys: &[f64], ps: &[f64], lam: f64) -> LloydState {
    let part = assign(ys, ps, lam);
    let ys: Vec<f64> = part.cells.iter().map(|c| c.first / c.mass).collect();
    let ps: Vec<f64> = part.cells.iter().map(|c| c.mass).collect();
    let distortion = standard_distortion(&part.cells, &ys);
    let entropy: f64 = ps.iter().map(|&p| entropy_term(p)).sum();
    LloydState {
        ys,
        ps,
        breaks: part.breaks,
        distortion,
        entropy,
        cost: distortion + lam * entropy,
    }
}

// Near flat directions the plain iteration creeps. Push further along the
// last step (doubling the stride) and keep the best full pass that follows;
// every candidate is itself the output of a pass, so descent is preserved.
fn extrapolate(from: &LloydState, plain: LloydState, lam: f64) -> LloydState {
    if plain.ys.len() != from.ys.len() {
        return plain;
    }
    let mut best = plain;
    let dy: Vec<f64> = best.ys.iter().zip(&from.ys).map(|(a, b)| a - b).collect();
    let dp: Vec<f64> = best.ps.iter().zip(&from.ps).map(|(a, b)| a - b).collect();
    let mut stride = 2.0;
    while stride <= 1024.0 {
        let ys: Vec<f64> = from.ys.iter().zip(&dy).map(|(y, d)| y + stride * d).collect();
        let ps: Vec<f64> = from.ps.iter().zip(&dp).map(|(p, d)| p + stride * d).collect();
        if ys.windows(2).any(|w| !(w[0] < w[1])) || ps.iter().any(|p| !(*p > 0.0)) {
            break;
        }
        let cand = lloyd_step(&ys, &ps, lam);
        if cand.cost < best.cost {
            best = cand;
            stride *= 2.0;
        } else {
            break;
        }
    }
    best
}

/// Seeds used per Lagrange multiplier when tracing the hull.
pub const STARTS_PER_LAMBDA: u64 = 3;

/// Traces the operational entropy-distortion curve: every `(λ, seed)` design
/// is run, the point `(0, σ²_X)` is added, and the lower convex hull is
/// returned sorted by entropy.
pub fn trace_de_curve(source: &GaussianSource, lambda_schedule: &[f64], n_max: usize) -> Result<Vec<(f64, f64)>> {
    if lambda_schedule.is_empty() {
        return Err(Error::domain("lambda schedule is empty"));
    }
    if let Some(l) = lambda_schedule.iter().find(|l| !(**l > 0.0) || l.is_infinite()) {
        return Err(Error::domain(format!(
            "lambda values must be positive and finite, got {l}"
        )));
    }
    let jobs: Vec<(f64, u64)> = lambda_schedule
        .iter()
        .flat_map(|&l| (0..STARTS_PER_LAMBDA).map(move |s| (l, s)))
        .collect();
    let mut pts: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(l, s)| design_ecsq(source, l, n_max, s).map(|d| (d.metrics.entropy, d.metrics.distortion)))
        .collect::<Result<_>>()?;
    pts.push((0.0, source.variance()));
    Ok(lower_hull(pts))
}

/// Lower convex hull of `(H, D)` points, keeping only the decreasing part.
pub fn lower_hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    while hull.len() >= 2 && hull[hull.len() - 1].1 >= hull[hull.len() - 2].1 {
        hull.pop();
    }
    hull
}

/// Piecewise-linear hull value at entropy `h`, `None` outside its range.
pub fn hull_at(hull: &[(f64, f64)], h: f64) -> Option<f64> {
    let first = hull.first()?;
    let last = hull.last()?;
    if h < first.0 || h > last.0 {
        return None;
    }
    let i = hull.partition_point(|p| p.0 < h);
    if i == 0 {
        return Some(first.1);
    }
    let (a, b) = (hull[i - 1], hull[i]);
    Some(a.1 + (b.1 - a.1) * (h - a.0) / (b.0 - a.0))
}

/// Classical Gaussian distortion-rate function `σ²_X e^{−2R}`.
pub fn shannon_dr(rate: ExtReal, source: &GaussianSource) -> f64 {
    source.variance() * rate.exp_neg(2.0)
}

/// Low-rate linearisation `σ²_X(1 − 2R + 2Re^{−2R_c})` of the unlimited
/// perception upper bound.
pub fn overline_de_expansion(rate: f64, common: f64, source: &GaussianSource) -> Result<f64> {
    if !(rate >= 0.0 && rate.is_finite() && common >= 0.0 && common.is_finite()) {
        return Err(Error::domain(format!(
            "rate and common randomness must be finite and nonnegative, got {rate}, {common}"
        )));
    }
    Ok(source.variance() * (1.0 - 2.0 * rate + 2.0 * rate * (-2.0 * common).exp()))
}

/// Smallest entropy on a 10⁴-point grid where the traced hull reaches the
/// unlimited-perception upper bound `σ²_X(1 − ξ²)` at the given common
/// randomness. Purely empirical.
pub fn empirical_crossing_rate(hull: &[(f64, f64)], common: f64, source: &GaussianSource) -> Option<f64> {
    let h_max = hull.last()?.0;
    let rc = ExtReal::new(common).ok()?;
    (1..=10_000).map(|i| h_max * i as f64 / 10_000.0).find(|&h| {
        let x = xi(ExtReal::new(h).expect("finite grid"), rc);
        hull_at(hull, h).is_some_and(|d| d >= source.variance() * (1.0 - x * x))
    })
}
