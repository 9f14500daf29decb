//! Small one-dimensional numerical routines shared by the other modules:
//! log-spaced grids, golden-section search, monotone bisection and
//! composite Simpson quadrature, plus a handful of vector helpers.

/// `1 / φ` where `φ` is the golden ratio.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `count` points spaced uniformly in log scale over `[lo, hi]`.
///
/// Both ends are included exactly. `lo` and `hi` must be positive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo, "logspace needs 0 < lo <= hi");
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (count - 1) as f64;
            let mut out: Vec<f64> = (0..count).map(|i| (a + step * i as f64).exp()).collect();
            out[0] = lo;
            out[count - 1] = hi;
            out
        }
    }
}

/// `count` points spaced uniformly over `[lo, hi]`, ends included exactly.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            let mut out: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
            out[count - 1] = hi;
            out
        }
    }
}

/// Maximizes a unimodal `f` on `[a, b]` by golden-section search.
///
/// Stops when the bracket is narrower than `tol` or after `max_iter`
/// iterations. Returns the best abscissa seen together with its value,
/// which also covers the endpoints.
pub fn golden_section_max<F>(f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut best = (lo, f(lo));
    let fhi = f(hi);
    if fhi > best.1 {
        best = (hi, fhi);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Minimizing counterpart of [`golden_section_max`].
pub fn golden_section_min<F>(f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (x, v) = golden_section_max(|t| -f(t), a, b, tol, max_iter);
    (x, -v)
}

/// Maximizes `f` over a sampled grid, then refines the bracket around the
/// best sample by golden-section search. Returns `(argmax, max)`.
pub fn grid_then_golden_max<F>(f: F, grid: &[f64], tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    assert!(!grid.is_empty());
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    let (x, v) = golden_section_max(&f, lo, hi, tol, 200);
    if v >= best_v {
        (x, v)
    } else {
        (grid[best_i], best_v)
    }
}

/// Finds `x` in `[lo, hi]` with `f(x) = target` for a non-increasing `f`,
/// bisecting geometrically (both ends must be positive).
///
/// Values outside the bracket are clamped to the nearest end.
pub fn bisect_decreasing_geometric<F>(f: F, target: f64, lo: f64, hi: f64, iterations: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    if f(lo) <= target {
        return lo;
    }
    if f(hi) >= target {
        return hi;
    }
    for _ in 0..iterations {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Composite Simpson quadrature of `f` over `[a, b]`, doubling the panel
/// count until two successive estimates differ by less than
/// `rel_tol * max(1, |estimate|)`.
pub fn simpson<F>(f: F, a: f64, b: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let mut panels = 2usize;
    let mut prev = composite_simpson(&f, a, b, panels);
    // 2^22 panels is far beyond what any integrand here needs.
    for _ in 0..21 {
        panels *= 2;
        let next = composite_simpson(&f, a, b, panels);
        if (next - prev).abs() < rel_tol * next.abs().max(1.0) {
            return next;
        }
        prev = next;
    }
    prev
}

fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Solves the dense square system `a x = b` in place by Gaussian
/// elimination with partial pivoting. `a` is row-major `n x n`.
/// Returns `None` when a pivot falls below `1e-14` times the largest entry.
pub(crate) fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[pivot * n + col].abs() < 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let p = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}
