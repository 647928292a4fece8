//! Gallager-form exponents.
//!
//! `J_δ(P|W) = -ln Σ_y [Σ_x P(x) W(y|x)^{1/(1+δ)}]^{1+δ}` and the rate-shifted
//! objective `F_δ(R, P|W) = -δR + J_δ(P|W)`. The strong-converse exponent is
//! `G(R|W) = max_{δ ∈ [-1,0]} min_P F_δ` and the error exponent is
//! `E(R|W) = max_{δ ≥ 0} max_P F_δ`.
//!
//! For `δ ∈ [-1, 0]` the map `P ↦ J_δ` is convex, and for `δ ≥ 0` maximizing
//! `J_δ` is minimizing the convex `Σ_y [·]^{1+δ}`, so the inner problems are
//! solved by projected gradient descent with a Frank–Wolfe certificate.
//! `δ ↦ min_P J_δ` is concave, which makes the outer golden search exact.

use crate::channel::{Channel, Distribution};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::optim::{self, grid_then_golden, log_sum_exp, minimize_on_simplex, PgdConfig};
use crate::params::{DeltaParam, RatePoint};
use crate::support::support_game;

pub const DEFAULT_DELTA_CAP: f64 = 64.0;
/// Outer δ-search tolerance.
pub const DELTA_TOL: f64 = 1e-6;
/// Step of the coarse δ grid on `[-1, 0]`.
pub const CONVERSE_GRID_STEP: f64 = 0.02;
/// Largest cap reached when the error-side maximizer keeps sitting at the cap.
const MAX_DELTA_CAP: f64 = 1_048_576.0;
const GRAD_CLAMP: f64 = 1e6;
/// Accepted Frank–Wolfe gap before an inner solve is reported as failed.
const ACCEPT_GAP: f64 = 1e-7;

fn check_dims(p: &[f64], w: &Channel) -> Result<()> {
    if p.len() != w.inputs() {
        return Err(Error::DimensionMismatch {
            what: "input distribution length vs channel inputs",
            expected: w.inputs(),
            got: p.len(),
        });
    }
    Ok(())
}

/// `J_{-1}(P|W) = -ln Σ_y max_{x ∈ supp P} W(y|x)`.
fn j_minus_one(p: &[f64], w: &Channel) -> f64 {
    let total: f64 = (0..w.outputs())
        .map(|y| {
            (0..w.inputs())
                .filter(|&x| p[x] > 0.0)
                .map(|x| w.get(x, y))
                .fold(0.0, f64::max)
        })
        .sum();
    -total.ln()
}

/// `J_δ` and its gradient in `P`, for `δ > -1`.
fn j_and_grad(delta: f64, p: &[f64], w: &Channel) -> (f64, Vec<f64>) {
    let nx = w.inputs();
    let ny = w.outputs();
    let s = 1.0 / (1.0 + delta);
    let lw = |x: usize, y: usize| w.get(x, y).ln();
    let ln_a: Vec<f64> = (0..ny)
        .map(|y| {
            log_sum_exp(
                (0..nx)
                    .filter(|&x| p[x] > 0.0 && w.get(x, y) > 0.0)
                    .map(|x| p[x].ln() + s * lw(x, y)),
            )
        })
        .collect();
    let ln_b: Vec<f64> = ln_a.iter().map(|&a| (1.0 + delta) * a).collect();
    let ln_total = log_sum_exp(ln_b.iter().copied());
    let j = -ln_total;
    let mut grad = vec![0.0; nx];
    for (x, gx) in grad.iter_mut().enumerate() {
        let mut acc = 0.0;
        for y in 0..ny {
            if w.get(x, y) <= 0.0 {
                continue;
            }
            if ln_a[y] == f64::NEG_INFINITY {
                // d/dA of A^{1+δ} at A = 0 is infinite for δ < 0, zero for δ > 0
                if delta < 0.0 {
                    acc = f64::INFINITY;
                }
                continue;
            }
            let e = (ln_b[y] - ln_total) + s * lw(x, y) - ln_a[y];
            acc += (1.0 + delta) * e.min(700.0).exp();
        }
        *gx = (-acc).clamp(-GRAD_CLAMP, GRAD_CLAMP);
    }
    (j, grad)
}

/// Evaluates `J_δ(P|W)`.
///
/// `δ = 0` returns exactly zero and `δ = -1` uses the limit
/// `-ln Σ_y max_{x ∈ supp P} W(y|x)`.
pub fn gallager_j(delta: DeltaParam, p: &Distribution, w: &Channel) -> Result<f64> {
    check_dims(p.as_slice(), w)?;
    let d = delta.value();
    Ok(if d == 0.0 {
        0.0
    } else if d == -1.0 {
        j_minus_one(p.as_slice(), w)
    } else {
        j_and_grad(d, p.as_slice(), w).0
    })
}

/// `F_δ(R, P|W) = -δR + J_δ(P|W)`.
pub fn f_delta(delta: DeltaParam, rate: RatePoint, p: &Distribution, w: &Channel) -> Result<f64> {
    let j = gallager_j(delta, p, w)?;
    if delta.value() == 0.0 {
        return Ok(0.0);
    }
    Ok(-delta.value() * rate.value() + j)
}

/// `G_δ(R|W) = min_P F_δ(R, P|W)` for `δ ∈ [-1, 0]`.
pub fn g_delta(delta: DeltaParam, rate: RatePoint, w: &Channel) -> Result<f64> {
    let d = delta.require_converse_side()?;
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok(-d * rate.value() + GallagerSolver::new(w).min_j(d)?)
}

/// `E_δ(R|W) = max_P F_δ(R, P|W)` for `δ ≥ 0`.
pub fn e_delta(delta: DeltaParam, rate: RatePoint, w: &Channel) -> Result<f64> {
    let d = delta.require_error_side()?;
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok(-d * rate.value() + GallagerSolver::new(w).max_j(d)?)
}

/// `G(R|W) = max_{δ ∈ [-1,0]} G_δ(R|W)`.
pub fn strong_converse_exponent(rate: RatePoint, w: &Channel) -> Result<f64> {
    GallagerSolver::new(w).strong_converse(rate.value())
}

/// `E(R|W) = max_{δ ≥ 0} E_δ(R|W)`, `+∞` below the zero-error threshold.
pub fn error_exponent(rate: RatePoint, w: &Channel, delta_cap: f64) -> Result<ExtReal> {
    GallagerSolver::new(w).error_exponent(rate.value(), delta_cap)
}

#[derive(Debug, Clone)]
struct Solved {
    delta: f64,
    value: f64,
    input: Vec<f64>,
}

/// Evaluates Gallager-form quantities for one channel, memoizing the
/// rate-independent inner optima `min_P J_δ` and `max_P J_δ` per δ so that
/// whole curves reuse them.
#[derive(Debug, Clone)]
pub struct GallagerSolver<'w> {
    w: &'w Channel,
    min_cache: Vec<Solved>,
    max_cache: Vec<Solved>,
    pgd: PgdConfig,
    divergence_rate: Option<f64>,
}

impl<'w> GallagerSolver<'w> {
    pub fn new(w: &'w Channel) -> Self {
        GallagerSolver {
            w,
            min_cache: Vec::new(),
            max_cache: Vec::new(),
            pgd: PgdConfig::default(),
            divergence_rate: None,
        }
    }

    fn lookup(cache: &[Solved], delta: f64) -> Option<&Solved> {
        cache.iter().find(|s| s.delta == delta)
    }

    fn nearest_start(cache: &[Solved], delta: f64, n: usize) -> Vec<f64> {
        cache
            .iter()
            .min_by(|a, b| (a.delta - delta).abs().total_cmp(&(b.delta - delta).abs()))
            .map(|s| s.input.clone())
            .unwrap_or_else(|| vec![1.0 / n as f64; n])
    }

    /// Runs the inner solve from the warm start; if the certificate fails,
    /// retries from the uniform law and from each vertex-leaning mixture.
    /// The accepted gap grows with `1 + |δ|`, the scale of the gradient.
    fn solve_inner<F>(&self, f: F, delta: f64, warm: Vec<f64>, solver: &'static str) -> Result<(f64, Vec<f64>, f64)>
    where
        F: Fn(&[f64]) -> (f64, Vec<f64>),
    {
        let n = self.w.inputs();
        let mut starts = vec![warm, vec![1.0 / n as f64; n]];
        for x in 0..n {
            let mut s = vec![0.5 / n as f64; n];
            s[x] += 0.5;
            starts.push(s);
        }
        let mut best: Option<optim::PgdResult> = None;
        for start in starts {
            let res = minimize_on_simplex(&f, &start, &self.pgd);
            let better = best.as_ref().is_none_or(|b| res.value < b.value);
            let certified = res.certified;
            if better {
                best = Some(res);
            }
            if certified {
                break;
            }
        }
        let best = best.expect("at least one start");
        if !(best.gap <= ACCEPT_GAP * (1.0 + delta.abs())) {
            return Err(Error::NonConvergence {
                solver,
                iterations: best.iterations,
                best: best.value,
                lower: best.value - best.gap,
                upper: best.value,
            });
        }
        Ok((best.value, best.point, best.gap))
    }

    /// `min_P J_δ(P|W)` for `δ ∈ [-1, 0]`.
    pub fn min_j(&mut self, delta: f64) -> Result<f64> {
        if delta == 0.0 {
            return Ok(0.0);
        }
        if delta == -1.0 {
            // support only grows the sum, so any full-support law is optimal
            return Ok(j_minus_one(&vec![1.0; self.w.inputs()], self.w));
        }
        if let Some(s) = Self::lookup(&self.min_cache, delta) {
            return Ok(s.value);
        }
        let warm = Self::nearest_start(&self.min_cache, delta, self.w.inputs());
        let w = self.w;
        let (value, input, _) =
            self.solve_inner(|p| j_and_grad(delta, p, w), delta, warm, "gallager min over inputs")?;
        self.min_cache.push(Solved { delta, value, input });
        Ok(value)
    }

    /// `max_P J_δ(P|W)` for `δ ≥ 0` (Gallager's `E_0`).
    pub fn max_j(&mut self, delta: f64) -> Result<f64> {
        if delta == 0.0 {
            return Ok(0.0);
        }
        if let Some(s) = Self::lookup(&self.max_cache, delta) {
            return Ok(s.value);
        }
        let warm = Self::nearest_start(&self.max_cache, delta, self.w.inputs());
        let w = self.w;
        let (neg, input, _) = self.solve_inner(
            |p| {
                let (j, g) = j_and_grad(delta, p, w);
                (-j, g.into_iter().map(|v| -v).collect())
            },
            delta,
            warm,
            "gallager max over inputs",
        )?;
        self.max_cache.push(Solved {
            delta,
            value: -neg,
            input,
        });
        Ok(-neg)
    }

    /// Maximizer of `min_P J_δ` found by the last solve at exactly `delta`.
    pub fn min_j_input(&self, delta: f64) -> Option<&[f64]> {
        Self::lookup(&self.min_cache, delta).map(|s| s.input.as_slice())
    }

    /// `G(R|W)` together with the maximizing δ.
    pub fn strong_converse_with_delta(&mut self, rate: f64) -> Result<(f64, f64)> {
        let steps = (1.0 / CONVERSE_GRID_STEP).round() as usize;
        let grid: Vec<f64> = (0..=steps).map(|k| -1.0 + k as f64 * CONVERSE_GRID_STEP).collect();
        let mut values = Vec::with_capacity(grid.len());
        for &d in &grid {
            let d = if d.abs() < 1e-12 { 0.0 } else { d };
            values.push(-d * rate + self.min_j(d)?);
        }
        let mut err = None;
        let (d, v) = grid_then_golden(
            &grid,
            &values,
            |d| match self.min_j(d) {
                Ok(m) => -d * rate + m,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            DELTA_TOL,
        );
        if let Some(e) = err {
            return Err(e);
        }
        Ok((v.max(0.0), d))
    }

    pub fn strong_converse(&mut self, rate: f64) -> Result<f64> {
        Ok(self.strong_converse_with_delta(rate)?.0)
    }

    /// Rate below which `E(R|W)` is infinite: the slope of `max_P J_δ` as
    /// `δ → ∞`, which is `-ln` of the support game value.
    pub fn divergence_rate(&mut self) -> f64 {
        *self
            .divergence_rate
            .get_or_insert_with(|| -support_game(self.w).value.ln())
    }

    fn error_grid(cap: f64) -> Vec<f64> {
        if cap <= 1.0 {
            return optim::linspace(0.0, cap, 51);
        }
        let mut grid: Vec<f64> = (0..=50).map(|k| k as f64 * 0.02).collect();
        let mut d = 1.0;
        while d * 1.1 < cap {
            d *= 1.1;
            grid.push(d);
        }
        grid.push(cap);
        grid
    }

    /// `E(R|W)` together with the maximizing δ (`None` when infinite).
    pub fn error_exponent_with_delta(&mut self, rate: f64, delta_cap: f64) -> Result<(ExtReal, Option<f64>)> {
        if !(delta_cap > 0.0) {
            return Err(Error::Validation(format!("delta cap {delta_cap} must be positive")));
        }
        if rate < self.divergence_rate() {
            return Ok((ExtReal::Infinite, None));
        }
        let mut cap = delta_cap;
        loop {
            let grid = Self::error_grid(cap);
            let mut values = Vec::with_capacity(grid.len());
            for &d in &grid {
                values.push(-d * rate + self.max_j(d)?);
            }
            let best = values
                .iter()
                .enumerate()
                .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
            if best + 1 == grid.len() && cap < MAX_DELTA_CAP {
                cap *= 2.0;
                continue;
            }
            let mut err = None;
            let (d, v) = grid_then_golden(
                &grid,
                &values,
                |d| match self.max_j(d) {
                    Ok(m) => -d * rate + m,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NEG_INFINITY
                    }
                },
                DELTA_TOL * d_scale(grid[best]),
            );
            if let Some(e) = err {
                return Err(e);
            }
            return Ok((ExtReal::Finite(v.max(0.0)), Some(d)));
        }
    }

    pub fn error_exponent(&mut self, rate: f64, delta_cap: f64) -> Result<ExtReal> {
        Ok(self.error_exponent_with_delta(rate, delta_cap)?.0)
    }
}

fn d_scale(d: f64) -> f64 {
    d.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_channel, mutual_information};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dp(d: f64) -> DeltaParam {
        DeltaParam::new(d).unwrap()
    }

    fn rp(r: f64) -> RatePoint {
        RatePoint::new(r).unwrap()
    }

    #[test]
    fn j_examples() {
        let u = Distribution::uniform(2);
        let bsc = Channel::bsc(0.1).unwrap();
        assert_eq!(gallager_j(dp(0.0), &u, &bsc).unwrap(), 0.0);
        // direct evaluation of the defining sum
        let inner: f64 = 0.5 * 0.81 + 0.5 * 0.01;
        let oracle = -(2.0 * inner.sqrt()).ln();
        let j = gallager_j(dp(-0.5), &u, &bsc).unwrap();
        assert_abs_diff_eq!(j, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(j, -0.247348, epsilon = 1e-6);
        let id = Channel::identity(2).unwrap();
        assert_abs_diff_eq!(gallager_j(dp(-1.0), &u, &id).unwrap(), -(2f64.ln()), epsilon = 1e-15);
    }

    #[test]
    fn f_examples() {
        let u = Distribution::uniform(2);
        let id = Channel::identity(2).unwrap();
        let ln2 = 2f64.ln();
        assert_abs_diff_eq!(f_delta(dp(-1.0), rp(ln2), &u, &id).unwrap(), 0.0, epsilon = 1e-15);
        let bsc = Channel::bsc(0.1).unwrap();
        let f = f_delta(dp(-0.5), rp(1.0), &u, &bsc).unwrap();
        assert_abs_diff_eq!(f, 0.252652, epsilon = 1e-6);
        assert_eq!(f_delta(dp(0.0), rp(3.0), &u, &bsc).unwrap(), 0.0);
    }

    #[test]
    fn g_delta_examples() {
        let id = Channel::identity(2).unwrap();
        assert_abs_diff_eq!(g_delta(dp(-1.0), rp(0.0), &id).unwrap(), -(2f64.ln()), epsilon = 1e-15);
        let bsc = Channel::bsc(0.1).unwrap();
        let g = g_delta(dp(-0.5), rp(0.0), &bsc).unwrap();
        assert_abs_diff_eq!(g, -0.24734812, epsilon = 1e-8);
        assert_eq!(g_delta(dp(0.0), rp(1.0), &bsc).unwrap(), 0.0);
        assert!(g_delta(dp(0.5), rp(1.0), &bsc).is_err());
    }

    #[test]
    fn e_delta_examples() {
        let bsc = Channel::bsc(0.1).unwrap();
        let e = e_delta(dp(1.0), rp(0.0), &bsc).unwrap();
        let oracle = -((0.9f64.sqrt() + 0.1f64.sqrt()).powi(2) / 2.0).ln();
        assert_abs_diff_eq!(e, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(e, 0.223144, epsilon = 1e-6);
        // identity: max_P J_2 = ln 2 at the uniform law
        let id = Channel::identity(2).unwrap();
        let e = e_delta(dp(2.0), rp(1.0), &id).unwrap();
        assert_abs_diff_eq!(e, -2.0 + 2.0 * 2f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn strong_converse_examples() {
        let id = Channel::identity(2).unwrap();
        let g = strong_converse_exponent(rp(1.0), &id).unwrap();
        assert_abs_diff_eq!(g, 1.0 - 2f64.ln(), epsilon = 1e-9);
        assert_eq!(strong_converse_exponent(rp(0.5), &id).unwrap(), 0.0);
        let bsc = Channel::bsc(0.1).unwrap();
        let c = mutual_information(&Distribution::uniform(2), &bsc).unwrap();
        assert!(strong_converse_exponent(rp(c - 0.01), &bsc).unwrap() < 1e-12);
        assert!(strong_converse_exponent(rp(0.6), &bsc).unwrap() > 0.0);
    }

    #[test]
    fn error_exponent_examples() {
        let id = Channel::identity(2).unwrap();
        assert_eq!(error_exponent(rp(0.5), &id, 64.0).unwrap(), ExtReal::Infinite);
        assert_eq!(error_exponent(rp(0.7), &id, 64.0).unwrap(), ExtReal::Finite(0.0));
        let bsc = Channel::bsc(0.1).unwrap();
        let e = error_exponent(rp(0.3), &bsc, 64.0).unwrap().finite().unwrap();
        assert!(e > 0.0);
        assert_eq!(error_exponent(rp(0.4), &bsc, 64.0).unwrap(), ExtReal::Finite(0.0));
    }

    #[test]
    fn z_channel_boundary_optimum() {
        // Z channel capacity-achieving input is not uniform; E_δ solve must still certify
        let z = make_channel(&[vec![1.0, 0.0], vec![0.4, 0.6]]).unwrap();
        let mut s = GallagerSolver::new(&z);
        for d in [0.1, 1.0, 10.0, 100.0] {
            s.max_j(d).unwrap();
        }
        for d in [-0.999, -0.5, -0.01] {
            s.min_j(d).unwrap();
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn j_is_nondecreasing_in_delta(seed in any::<u64>(), nx in 1usize..4, ny in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = Distribution::random(nx, &mut rng);
            let w = Channel::random(nx, ny, &mut rng);
            let mut prev = gallager_j(dp(-1.0), &p, &w).unwrap();
            prop_assert!(prev <= 1e-12);
            for k in 1..=60 {
                let d = -1.0 + k as f64 * 0.05;
                let j = gallager_j(dp(d), &p, &w).unwrap();
                prop_assert!(j >= prev - 1e-12, "J decreased at δ={}: {} < {}", d, j, prev);
                if d < 0.0 { prop_assert!(j <= 1e-12); }
                if d > 0.0 { prop_assert!(j >= -1e-12); }
                prev = j;
            }
        }

        #[test]
        fn gradient_matches_finite_differences(seed in any::<u64>(), d in -0.95f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = Channel::random(3, 3, &mut rng);
            let p = Distribution::random(3, &mut rng);
            let (_, g) = j_and_grad(d, p.as_slice(), &w);
            let h = 1e-6;
            for x in 0..3 {
                let mut pp = p.as_slice().to_vec();
                pp[x] += h;
                let mut pm = p.as_slice().to_vec();
                pm[x] -= h;
                let fd = (j_and_grad(d, &pp, &w).0 - j_and_grad(d, &pm, &w).0) / (2.0 * h);
                prop_assert!((fd - g[x]).abs() < 1e-5 * (1.0 + g[x].abs()));
            }
        }
    }
}
