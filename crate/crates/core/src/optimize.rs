//! One-dimensional minimisation used by the bound evaluators.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns the best point seen (including the bracket ends), so the result is
/// never worse than `f(a)` or `f(b)`.
pub(crate) fn golden_section_min<F>(f: &F, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= x_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Uniform scan with `points` nodes followed by golden-section refinement in
/// the bracket around the best node. Ties go to the lowest index.
pub(crate) fn scan_then_refine<F>(f: &F, lo: f64, hi: f64, points: usize, x_tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    if hi <= lo {
        return (lo, f(lo));
    }
    let n = points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let node = |i: usize| if i == n - 1 { hi } else { lo + step * i as f64 };
    let mut best_i = 0;
    let mut best_v = f(lo);
    for i in 1..n {
        let v = f(node(i));
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = node(best_i.saturating_sub(1));
    let b = node((best_i + 1).min(n - 1));
    let (x, v) = golden_section_min(f, a, b, x_tol);
    if v < best_v {
        (x, v)
    } else {
        (node(best_i), best_v)
    }
}

/// Bisection for `g(x) = target` where `g` is decreasing on `[lo, hi]`.
pub(crate) fn bisect_decreasing<G>(g: &G, target: f64, mut lo: f64, mut hi: f64, iters: usize) -> f64
where
    G: Fn(f64) -> f64,
{
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
