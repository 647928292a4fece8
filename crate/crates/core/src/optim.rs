//! Small deterministic optimizers used by both exponent forms: Euclidean
//! projection onto the simplex, projected gradient descent with a
//! Frank–Wolfe gap certificate, golden-section search and bracketed root
//! finding.

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut p: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let s: f64 = p.iter().sum();
    for x in &mut p {
        *x /= s;
    }
    p
}

/// Frank–Wolfe gap `<g, p> - min_i g_i`: an upper bound on `f(p) - min f`
/// when `f` is convex and `g` is its gradient at `p`.
pub fn frank_wolfe_gap(p: &[f64], g: &[f64]) -> f64 {
    let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = dot - min;
    if gap.is_nan() {
        f64::INFINITY
    } else {
        gap.max(0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PgdConfig {
    pub max_iter: usize,
    /// Stop once the Frank–Wolfe gap falls below this.
    pub gap_tol: f64,
    /// Stop after two consecutive improvements smaller than this.
    pub ftol: f64,
}

impl Default for PgdConfig {
    fn default() -> Self {
        PgdConfig {
            max_iter: 2000,
            gap_tol: 1e-11,
            ftol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PgdResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub certified: bool,
}

/// Minimizes `f` over the simplex by projected gradient descent with
/// Barzilai–Borwein steps and Armijo backtracking.
///
/// `f` returns the objective and its gradient. The iteration stops when the
/// Frank–Wolfe gap is below `gap_tol` (`certified = true`), when progress
/// stalls, or after `max_iter` steps.
pub fn minimize_on_simplex<F>(mut f: F, start: &[f64], cfg: &PgdConfig) -> PgdResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = project_simplex(start);
    let (mut fx, mut g) = f(&x);
    let mut step = 1.0 / g.iter().map(|v| v.abs()).fold(1e-12, f64::max);
    let mut stalls = 0;
    let mut iterations = 0;
    let mut gap = frank_wolfe_gap(&x, &g);
    while iterations < cfg.max_iter {
        if gap <= cfg.gap_tol {
            break;
        }
        iterations += 1;
        let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let y = project_simplex(&trial);
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            // Projected step vanished: the step is too short to move.
            step *= 4.0;
            if step > 1e12 {
                break;
            }
            continue;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| (a + t * b).max(0.0)).collect();
            let (fn_, gn) = f(&xn);
            if fn_ <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (step * 2.0).min(1e12) };
        let improvement = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        gap = frank_wolfe_gap(&x, &g);
        if improvement < cfg.ftol {
            stalls += 1;
            if stalls >= 2 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    PgdResult {
        certified: gap <= cfg.gap_tol,
        point: x,
        value: fx,
        gradient: g,
        gap,
        iterations,
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
/// Returns the best abscissa seen and its value.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
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
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` over a sorted grid, then refines the best cell by golden
/// section. Grid values are passed in so callers can cache them.
pub fn grid_then_golden<F: FnMut(f64) -> f64>(
    grid: &[f64],
    values: &[f64],
    mut f: F,
    tol: f64,
) -> (f64, f64) {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if hi - lo <= tol {
        return (grid[best], values[best]);
    }
    let (x, fx) = golden_max(&mut f, lo, hi, tol);
    if fx > values[best] {
        (x, fx)
    } else {
        (grid[best], values[best])
    }
}

/// Brent's method for a root of `f` in `[a, b]`, given `f(a)` and `f(b)` of
/// opposite sign (or zero).
pub fn brent_root<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
    max_iter: usize,
) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa * fb < 0.0, "root not bracketed");
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    b
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Numerically stable `ln Σ exp(v_i)`; `-∞` for an empty or all `-∞` input.
pub fn log_sum_exp(v: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.into_iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// All integer vectors of length `dim` with nonnegative entries summing to
/// `m`, in lexicographic order, scaled by `1/m`.
pub fn simplex_lattice(dim: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(dim, left - k, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 || m == 0 {
        return out;
    }
    rec(dim, m, m, &mut Vec::with_capacity(dim), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn lattice_counts_and_order() {
        let g = simplex_lattice(2, 4);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], vec![0.0, 1.0]);
        assert_eq!(g[4], vec![1.0, 0.0]);
        assert_eq!(simplex_lattice(3, 2).len(), 6);
        assert_eq!(simplex_lattice(1, 7), vec![vec![1.0]]);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[1.0, 1.0, 1.0]);
        for x in p {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn pgd_minimizes_a_quadratic_with_boundary_solution() {
        // min (p0 - 0.9)^2 + (p1 + 0.5)^2 + p2^2 over the simplex → (1, 0, 0)
        let target = [1.5, -0.5, 0.0];
        let res = minimize_on_simplex(
            |p| {
                let v = p.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum();
                let g = p.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
                (v, g)
            },
            &[1.0 / 3.0; 3],
            &PgdConfig::default(),
        );
        assert!(res.certified);
        assert_abs_diff_eq!(res.point[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn golden_and_brent() {
        let (x, fx) = golden_max(|x| -(x - 0.3f64).powi(2), -1.0, 1.0, 1e-9);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(fx, 0.0, epsilon = 1e-15);
        let f = |x: f64| x.powi(3) - 2.0;
        let r = brent_root(f, 0.0, 2.0, f(0.0), f(2.0), 1e-14, 200);
        assert_abs_diff_eq!(r, 2f64.cbrt(), epsilon = 1e-12);
    }

    #[test]
    fn grid_refinement_finds_interior_peak() {
        let f = |x: f64| -(x + 0.37f64).powi(2);
        let grid = linspace(-1.0, 0.0, 51);
        let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let (x, _) = grid_then_golden(&grid, &vals, f, 1e-8);
        assert_abs_diff_eq!(x, -0.37, epsilon = 1e-7);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert_abs_diff_eq!(log_sum_exp([1000.0, 1000.0]), 1000.0 + 2f64.ln(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn projection_lands_on_simplex(v in prop::collection::vec(-5.0f64..5.0, 1..6)) {
            let p = project_simplex(&v);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // idempotent
            let pp = project_simplex(&p);
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
