//! Divergence-form exponents.
//!
//! For an input law `P` and `δ ≥ -1`,
//! `F̃_δ(R, P|W) = min_V δ[I(P;V) - R] + D(V||W|P)`. The strong-converse side
//! uses `F̃⁺_{-1}(R, P|W) = min_V [R - I(P;V)]⁺ + D(V||W|P)`, minimized over
//! `P`, and the sphere-packing forms constrain the mutual information
//! instead of penalizing it. Nothing here calls the Gallager-form solvers:
//! the inner problems are solved through tilted channels
//! `V(y|x) ∝ W(y|x)^{1/(1+δ)} q(y)^{δ/(1+δ)}` and a joint ascent over
//! `(P, V)`.

mod ascent;
pub mod capacity;
pub(crate) mod tilt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{Channel, Distribution};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::optim::{brent_root, minimize_on_simplex, simplex_lattice, PgdConfig, PgdResult};
use crate::params::{DeltaParam, RatePoint};

use ascent::{ascend, AscentPoint};
pub use capacity::{capacity, capacity_with_input, zero_rate_threshold};
use tilt::{Tilt, TiltPoint};

pub const DEFAULT_CAPACITY_TOL: f64 = 1e-10;

/// Stand-in for `ε = 1 + δ = 0`; the `δ = -1` value is extrapolated from it.
const LIMIT_EPS: f64 = 1e-8;
const PROBE_EPS: f64 = 1e-3;
const ROOT_XTOL: f64 = 1e-12;
const ROOT_ITER: usize = 200;
const MAX_LAMBDA_DOUBLINGS: i32 = 20;
/// Rates this close below `ln ν` use the largest-λ dual value.
const BOUNDARY_SLACK: f64 = 1e-9;
/// `λR - K(λ)` is stationary at the root, so a coarse `λ` suffices.
const LAMBDA_XTOL: f64 = 1e-6;
/// Accepted Frank–Wolfe gap of an outer minimization over input laws.
const ACCEPT_GAP: f64 = 1e-7;
const ASCENT_TOL: f64 = 1e-11;
const ASCENT_ACCEPT: f64 = 1e-8;
const ASCENT_MAX_ITER: usize = 500_000;
/// Sweep budget from a warm start before falling back to a cold start.
const ASCENT_WARM_ITER: usize = 20_000;
/// Sweep budget for refining the best seed when `λ > 1`.
const ASCENT_REFINE_ITER: usize = 50_000;
/// Sweeps spent on each seed before the best one is refined (`λ > 1`).
const SEED_SWEEPS: usize = 300;
/// Largest number of deterministic-map seeds tried for `λ > 1`.
const MAX_MAP_SEEDS: usize = 256;

/// Knobs for the divergence-form solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VSolverConfig {
    /// Seeded random starts tried when the deterministic starts of an outer
    /// minimization fail to certify.
    pub restarts: usize,
    /// Newton iterations per tilted-channel solve.
    pub tilt_iterations: usize,
    /// Target duality gap of the tilted-channel solves.
    pub convergence_tol: f64,
    /// Denominator of the coarse input-law lattice that seeds the
    /// sphere-packing error maximization.
    pub grid_fallback_resolution: usize,
    /// Seeded random input laws added to that seeding.
    pub p_restarts: usize,
    pub seed: u64,
}

impl Default for VSolverConfig {
    fn default() -> Self {
        VSolverConfig {
            restarts: 16,
            tilt_iterations: 300,
            convergence_tol: 1e-12,
            grid_fallback_resolution: 6,
            p_restarts: 8,
            seed: 0,
        }
    }
}

impl VSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.tilt_iterations == 0 || self.grid_fallback_resolution == 0 {
            return Err(Error::Validation("solver counts must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Validation(format!(
                "convergence tolerance {} must be positive",
                self.convergence_tol
            )));
        }
        Ok(())
    }
}

/// Which optimization over input laws defines `Ẽ_δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EVariant {
    MinOverInputs,
    MaxOverInputs,
}

/// `F̃_δ(R, P|W)`.
pub fn tilde_f_delta(
    delta: DeltaParam,
    rate: RatePoint,
    p: &Distribution,
    w: &Channel,
    cfg: &VSolverConfig,
) -> Result<f64> {
    KlSolver::new(w, *cfg)?.tilde_f(delta.value(), rate.value(), p)
}

/// `F̃⁺_{-1}(R, P|W) = min_V [R - I(P;V)]⁺ + D(V||W|P)`.
pub fn dk_pointwise(rate: RatePoint, p: &Distribution, w: &Channel, cfg: &VSolverConfig) -> Result<f64> {
    KlSolver::new(w, *cfg)?.dk_pointwise(rate.value(), p)
}

/// `G̃⁺_{-1}(R|W) = min_P F̃⁺_{-1}(R, P|W)`.
pub fn dk_exponent(rate: RatePoint, w: &Channel, cfg: &VSolverConfig) -> Result<f64> {
    KlSolver::new(w, *cfg)?.dk_exponent(rate.value())
}

/// `G̃_sp(R|W) = min_P min_{V: I(P;V) ≥ R} D(V||W|P)` for `R ≤ ln|X|`.
pub fn sphere_packing_sc(rate: RatePoint, w: &Channel, cfg: &VSolverConfig) -> Result<ExtReal> {
    KlSolver::new(w, *cfg)?.sphere_packing_sc(rate.value())
}

/// `K_δ(W) = max_P max_V {-δ I(P;V) - D(V||W|P)}` for `δ ∈ [-1, 0]`.
pub fn k_delta(delta: DeltaParam, w: &Channel, cfg: &VSolverConfig) -> Result<f64> {
    KlSolver::new(w, *cfg)?.k_delta(delta.require_converse_side()?)
}

/// `G̃_δ(R|W) = min_P F̃_δ(R, P|W)` for `δ ∈ [-1, 0]`.
pub fn tilde_g_delta(delta: DeltaParam, rate: RatePoint, w: &Channel, cfg: &VSolverConfig) -> Result<f64> {
    KlSolver::new(w, *cfg)?.tilde_g(delta.require_converse_side()?, rate.value())
}

/// `Ẽ_sp(R|W) = max_P min_{V: I(P;V) ≤ R} D(V||W|P)`.
pub fn sphere_packing_err(rate: RatePoint, w: &Channel, cfg: &VSolverConfig) -> Result<ExtReal> {
    KlSolver::new(w, *cfg)?.sphere_packing_err(rate.value())
}

/// `Ẽ_δ(R|W)`, optimizing `F̃_δ` over input laws as selected by `variant`.
pub fn tilde_e_delta(
    delta: DeltaParam,
    rate: RatePoint,
    w: &Channel,
    variant: EVariant,
    cfg: &VSolverConfig,
) -> Result<f64> {
    KlSolver::new(w, *cfg)?.tilde_e(delta.require_error_side()?, rate.value(), variant)
}

/// Warm start carried between tilted-channel solves for nearby input laws.
#[derive(Debug, Clone)]
struct Warm {
    eps: f64,
    q: Vec<f64>,
}

#[derive(Debug, Clone)]
struct InnerPoint {
    value: ExtReal,
    /// `δ` at the optimum of the Lagrangian
    delta: f64,
    grad: Vec<f64>,
    warm: Option<Warm>,
}

impl InnerPoint {
    fn zero(n: usize) -> Self {
        InnerPoint {
            value: ExtReal::ZERO,
            delta: 0.0,
            grad: vec![0.0; n],
            warm: None,
        }
    }
}

/// Minimizer of a divergence-form objective over input laws.
#[derive(Debug, Clone)]
pub struct InputSolution {
    pub value: ExtReal,
    pub input: Vec<f64>,
    /// Optimal Lagrange parameter `δ` at the returned input law.
    pub delta: f64,
}

#[derive(Debug, Clone)]
struct Cached {
    eps: f64,
    value: f64,
    input: Vec<f64>,
}

/// Evaluates divergence-form quantities for one channel, caching the
/// capacity, the rate-independent optima over input laws and warm starts.
#[derive(Debug, Clone)]
pub struct KlSolver<'w> {
    w: &'w Channel,
    cfg: VSolverConfig,
    pgd: PgdConfig,
    capacity: Option<(f64, Vec<f64>)>,
    zero_rate: Option<f64>,
    min_phi: Vec<Cached>,
    max_phi: Vec<Cached>,
    ascents: Vec<AscentPoint>,
    dk_warm: Option<Vec<f64>>,
    err_warm: Option<Vec<f64>>,
}

/// Starting points near channels that send each input to a single output
/// `f(x)` with `W(f(x)|x) > 0`, uniform inputs; at most `MAX_MAP_SEEDS`
/// maps spread evenly over the lexicographic enumeration.
fn map_seeds(w: &Channel) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (nx, ny) = (w.inputs(), w.outputs());
    let choices: Vec<Vec<usize>> = (0..nx)
        .map(|x| (0..ny).filter(|&y| w.get(x, y) > 0.0).collect())
        .collect();
    let total = choices.iter().map(|c| c.len() as u128).product::<u128>();
    let take = total.min(MAX_MAP_SEEDS as u128);
    let p = vec![1.0 / nx as f64; nx];
    (0..take)
        .map(|k| {
            let mut code = k * total / take;
            let mut v = Vec::with_capacity(nx * ny);
            for x in (0..nx).rev() {
                let c = &choices[x];
                let y0 = c[(code % c.len() as u128) as usize];
                code /= c.len() as u128;
                let row: Vec<f64> = (0..ny)
                    .map(|y| 0.05 * w.get(x, y) + if y == y0 { 0.95 } else { 0.0 })
                    .collect();
                v.splice(0..0, row);
            }
            (p.clone(), v)
        })
        .collect()
}

fn nonconvergence(solver: &'static str, res: &PgdResult, sign: f64) -> Error {
    let best = sign * res.value;
    let (lower, upper) = if sign > 0.0 {
        (best - res.gap, best)
    } else {
        (best, best + res.gap)
    };
    Error::NonConvergence {
        solver,
        iterations: res.iterations,
        best,
        lower,
        upper,
    }
}

impl<'w> KlSolver<'w> {
    pub fn new(w: &'w Channel, cfg: VSolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(KlSolver {
            w,
            cfg,
            pgd: PgdConfig {
                max_iter: 1000,
                gap_tol: 1e-10,
                ftol: 1e-15,
            },
            capacity: None,
            zero_rate: None,
            min_phi: Vec::new(),
            max_phi: Vec::new(),
            ascents: Vec::new(),
            dk_warm: None,
            err_warm: None,
        })
    }

    pub fn channel(&self) -> &'w Channel {
        self.w
    }

    pub fn config(&self) -> &VSolverConfig {
        &self.cfg
    }

    fn capacity_solution(&mut self) -> &(f64, Vec<f64>) {
        let w = self.w;
        self.capacity
            .get_or_insert_with(|| capacity_with_input(w, DEFAULT_CAPACITY_TOL))
    }

    pub fn capacity(&mut self) -> f64 {
        self.capacity_solution().0
    }

    pub fn capacity_input(&mut self) -> Vec<f64> {
        self.capacity_solution().1.clone()
    }

    pub fn zero_rate_threshold(&mut self) -> f64 {
        let w = self.w;
        *self.zero_rate.get_or_insert_with(|| zero_rate_threshold(w))
    }

    fn check_input(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.w.inputs() {
            return Err(Error::DimensionMismatch {
                what: "input distribution length vs channel inputs",
                expected: self.w.inputs(),
                got: p.len(),
            });
        }
        Ok(())
    }

    fn tilt(&self, p: &[f64]) -> Tilt<'w> {
        Tilt::new(p, self.w).with_iterations(self.cfg.tilt_iterations)
    }

    /// Solves the tilted problem at `eps`, warm-started from the closest
    /// solved point, and rejects uncertified answers.
    fn solve_tilt(&self, t: &Tilt, eps: f64, solved: &[TiltPoint]) -> Result<TiltPoint> {
        let warm = solved
            .iter()
            .min_by(|a, b| (a.eps.ln() - eps.ln()).abs().total_cmp(&(b.eps.ln() - eps.ln()).abs()));
        let pt = t.solve_from(eps, warm, self.cfg.convergence_tol);
        let accept = 1e-9 + 1e-14 / eps.min(1.0);
        if !(pt.gap <= accept) || !pt.value.is_finite() {
            let (lower, upper) = if eps < 1.0 {
                (pt.value, pt.value + pt.gap)
            } else {
                (pt.value - pt.gap, pt.value)
            };
            return Err(Error::NonConvergence {
                solver: "tilted channel",
                iterations: self.cfg.tilt_iterations,
                best: pt.value,
                lower,
                upper,
            });
        }
        Ok(pt)
    }

    fn find_solved(solved: &[TiltPoint], eps: f64) -> Option<TiltPoint> {
        solved.iter().find(|s| s.eps == eps && !s.gap.is_nan()).cloned()
    }

    /// Placeholder points (NaN values) that only seed the next solve.
    fn warm_points(t: &Tilt, warm: Option<&Warm>) -> Vec<TiltPoint> {
        warm.map(|w| TiltPoint {
            eps: w.eps,
            q: t.reduce_q(&w.q),
            value: f64::NAN,
            info: f64::NAN,
            div: f64::NAN,
            gap: f64::NAN,
        })
        .into_iter()
        .collect()
    }

    /// `min_V δ I(P;V) + D(V||W|P)` with `ε = 1 + δ`, its `P`-gradient and
    /// the dual point. `ε = 0` is extrapolated from `LIMIT_EPS`.
    fn phi(&self, t: &Tilt, eps: f64, warm: Option<&Warm>) -> Result<(f64, Vec<f64>, Warm)> {
        let solved = Self::warm_points(t, warm);
        let target = eps.max(LIMIT_EPS);
        let pt = self.solve_tilt(t, target, &solved)?;
        let value = if eps < LIMIT_EPS {
            pt.value - pt.eps * pt.info
        } else {
            pt.value
        };
        let grad = t.h_full(target, &pt.q);
        Ok((value, grad, Warm { eps: target, q: t.lift_q(&pt.q) }))
    }

    /// `F̃_δ(R, P|W)`.
    pub fn tilde_f(&self, delta: f64, rate: f64, p: &Distribution) -> Result<f64> {
        self.check_input(p.as_slice())?;
        DeltaParam::new(delta)?;
        if delta == 0.0 {
            return Ok(0.0);
        }
        let t = self.tilt(p.as_slice());
        Ok(-delta * rate + self.phi(&t, 1.0 + delta, None)?.0)
    }

    /// Finds the `δ` at which the Lagrangian `max_δ F̃_δ(R, P|W)` is stationary
    /// over `δ ∈ [-1, 0]`.
    fn converse_point(&self, rate: f64, p: &[f64], warm: Option<&Warm>) -> Result<InnerPoint> {
        let n = self.w.inputs();
        let t = self.tilt(p);
        let base = t.solve(1.0, &t.natural_q(), self.cfg.convergence_tol);
        if base.info >= rate {
            return Ok(InnerPoint::zero(n));
        }
        let mut solved = Self::warm_points(&t, warm);
        let probe = self.solve_tilt(&t, PROBE_EPS, &solved)?;
        solved.push(probe.clone());
        let log_scale = probe.info < rate;
        let (a, b, fa, fb) = if log_scale {
            let lim = self.solve_tilt(&t, LIMIT_EPS, &solved)?;
            if lim.info <= rate {
                let value = rate + lim.value - lim.eps * lim.info;
                return Ok(InnerPoint {
                    value: ExtReal::Finite(value),
                    delta: -1.0,
                    grad: t.h_full(lim.eps, &lim.q),
                    warm: Some(Warm { eps: lim.eps, q: t.lift_q(&lim.q) }),
                });
            }
            let fa = lim.info - rate;
            solved.push(lim);
            (LIMIT_EPS.ln(), PROBE_EPS.ln(), fa, probe.info - rate)
        } else {
            (PROBE_EPS, 1.0, probe.info - rate, base.info - rate)
        };
        let to_eps = |v: f64| if log_scale { v.exp() } else { v };
        let mut err = None;
        let root = brent_root(
            |v| {
                let eps = to_eps(v);
                match self.solve_tilt(&t, eps, &solved) {
                    Ok(pt) => {
                        let f = pt.info - rate;
                        solved.push(pt);
                        f
                    }
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            },
            a,
            b,
            fa,
            fb,
            ROOT_XTOL,
            ROOT_ITER,
        );
        if let Some(e) = err {
            return Err(e);
        }
        let eps = to_eps(root);
        let pt = match Self::find_solved(&solved, eps) {
            Some(pt) => pt,
            None => self.solve_tilt(&t, eps, &solved)?,
        };
        let delta = eps - 1.0;
        Ok(InnerPoint {
            value: ExtReal::Finite((-delta * rate + pt.value).max(0.0)),
            delta,
            grad: t.h_full(eps, &pt.q),
            warm: Some(Warm { eps, q: t.lift_q(&pt.q) }),
        })
    }

    /// `F̃⁺_{-1}(R, P|W)`.
    pub fn dk_pointwise(&self, rate: f64, p: &Distribution) -> Result<f64> {
        self.check_input(p.as_slice())?;
        Ok(self.converse_point(rate, p.as_slice(), None)?.value.to_f64())
    }

    /// Minimizes a convex objective over input laws from each start in turn,
    /// then from seeded random starts, until the Frank–Wolfe gap certifies.
    /// A run is accepted once its gap is below `accept`.
    fn minimize_inputs<F>(
        &self,
        mut f: F,
        starts: Vec<Vec<f64>>,
        salt: u64,
        accept: f64,
        solver: &'static str,
    ) -> Result<PgdResult>
    where
        F: FnMut(&[f64]) -> (f64, Vec<f64>),
    {
        let n = self.w.inputs();
        let mut best: Option<PgdResult> = None;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ salt);
        let random = (0..self.cfg.restarts).map(|_| Distribution::random(n, &mut rng).into_vec());
        for (k, start) in starts.into_iter().chain(random).enumerate() {
            let res = minimize_on_simplex(&mut f, &start, &self.pgd);
            let done = res.certified;
            if best.as_ref().is_none_or(|b| res.value < b.value) {
                best = Some(res);
            }
            let b = best.as_ref().expect("best set");
            if done || (k >= 1 && b.gap <= accept) {
                break;
            }
        }
        let best = best.expect("at least one start");
        if !(best.gap <= accept) {
            return Err(nonconvergence(solver, &best, 1.0));
        }
        Ok(best)
    }

    /// `G̃⁺_{-1}(R|W)` with its minimizing input law and supporting `δ`.
    pub fn dk_exponent_with_input(&mut self, rate: f64) -> Result<InputSolution> {
        let (c, pc) = self.capacity_solution().clone();
        if rate <= c {
            return Ok(InputSolution {
                value: ExtReal::ZERO,
                input: pc,
                delta: 0.0,
            });
        }
        let n = self.w.inputs();
        let mut starts = Vec::new();
        if let Some(wp) = &self.dk_warm {
            starts.push(wp.clone());
        }
        starts.push(pc);
        starts.push(vec![1.0 / n as f64; n]);
        let mut warm: Option<Warm> = None;
        let res = {
            let this = &*self;
            this.minimize_inputs(
                |p| match this.converse_point(rate, p, warm.as_ref()) {
                    Ok(pt) => {
                        if pt.warm.is_some() {
                            warm = pt.warm;
                        }
                        (pt.value.to_f64(), pt.grad)
                    }
                    Err(_) => (f64::INFINITY, vec![f64::NAN; n]),
                },
                starts,
                rate.to_bits(),
                ACCEPT_GAP,
                "divergence-form strong converse",
            )?
        };
        let point = self.converse_point(rate, &res.point, warm.as_ref())?;
        self.dk_warm = Some(res.point.clone());
        Ok(InputSolution {
            value: point.value,
            input: res.point,
            delta: point.delta,
        })
    }

    /// `G̃⁺_{-1}(R|W)`.
    pub fn dk_exponent(&mut self, rate: f64) -> Result<f64> {
        Ok(self.dk_exponent_with_input(rate)?.value.to_f64())
    }

    /// `min_P min_V δ I(P;V) + D(V||W|P)` (`sign = 1`) or the max over `P`
    /// (`sign = -1`), cached per `ε`.
    fn optimize_phi(&mut self, eps: f64, sign: f64) -> Result<f64> {
        let cache = if sign > 0.0 { &self.min_phi } else { &self.max_phi };
        if let Some(c) = cache.iter().find(|c| c.eps == eps) {
            return Ok(c.value);
        }
        let n = self.w.inputs();
        let mut starts: Vec<Vec<f64>> = cache
            .iter()
            .min_by(|a, b| (a.eps - eps).abs().total_cmp(&(b.eps - eps).abs()))
            .map(|c| vec![c.input.clone()])
            .unwrap_or_default();
        starts.push(self.capacity_input());
        starts.push(vec![1.0 / n as f64; n]);
        let mut warm: Option<Warm> = None;
        let solver = if sign > 0.0 {
            "divergence-form min over inputs"
        } else {
            "divergence-form max over inputs"
        };
        let res = {
            let this = &*self;
            this.minimize_inputs(
                |p| match this.phi(&this.tilt(p), eps, warm.as_ref()) {
                    Ok((v, g, wm)) => {
                        warm = Some(wm);
                        (sign * v, g.into_iter().map(|x| sign * x).collect())
                    }
                    Err(_) => (f64::INFINITY, vec![f64::NAN; n]),
                },
                starts,
                eps.to_bits() ^ sign.to_bits(),
                ACCEPT_GAP * eps.max(1.0),
                solver,
            )?
        };
        let value = sign * res.value;
        let entry = Cached {
            eps,
            value,
            input: res.point,
        };
        if sign > 0.0 {
            self.min_phi.push(entry);
        } else {
            self.max_phi.push(entry);
        }
        Ok(value)
    }

    /// `G̃_δ(R|W)` for `δ ∈ [-1, 0]`.
    pub fn tilde_g(&mut self, delta: f64, rate: f64) -> Result<f64> {
        if !(-1.0..=0.0).contains(&delta) {
            return Err(Error::Validation(format!("delta {delta} must lie in [-1, 0]")));
        }
        if delta == 0.0 {
            return Ok(0.0);
        }
        Ok(-delta * rate + self.optimize_phi(1.0 + delta, 1.0)?)
    }

    /// `Ẽ_δ(R|W)` for `δ ≥ 0`.
    pub fn tilde_e(&mut self, delta: f64, rate: f64, variant: EVariant) -> Result<f64> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Validation(format!("delta {delta} must be nonnegative")));
        }
        if delta == 0.0 {
            return Ok(0.0);
        }
        let eps = 1.0 + delta;
        let best = match variant {
            EVariant::MaxOverInputs => self.optimize_phi(eps, -1.0)?,
            EVariant::MinOverInputs => {
                // concave in P, so the minimum sits at a vertex
                let n = self.w.inputs();
                let mut m = f64::INFINITY;
                for x in 0..n {
                    let mut p = vec![0.0; n];
                    p[x] = 1.0;
                    m = m.min(self.phi(&self.tilt(&p), eps, None)?.0);
                }
                m
            }
        };
        Ok(-delta * rate + best)
    }

    fn ascent(&mut self, lambda: f64) -> Result<AscentPoint> {
        if let Some(a) = self.ascents.iter().find(|a| a.lambda == lambda) {
            return Ok(a.clone());
        }
        let warm = self
            .ascents
            .iter()
            .min_by(|a, b| (a.lambda - lambda).abs().total_cmp(&(b.lambda - lambda).abs()));
        let start = warm.map(|a| (a.p.clone(), a.v.clone()));
        let a = if lambda > 1.0 {
            // the objective is not concave here: start from every map seed too
            let mut seeds = map_seeds(self.w);
            seeds.extend(start);
            let best = seeds
                .iter()
                .map(|(p, v)| ascend(self.w, lambda, Some((p, v)), ASCENT_TOL, SEED_SWEEPS))
                .max_by(|a, b| a.value.total_cmp(&b.value))
                .expect("at least one seed");
            ascend(self.w, lambda, Some((&best.p, &best.v)), ASCENT_TOL, ASCENT_REFINE_ITER)
        } else {
            let warm = ascend(
                self.w,
                lambda,
                start.as_ref().map(|(p, v)| (p.as_slice(), v.as_slice())),
                ASCENT_TOL,
                if start.is_some() { ASCENT_WARM_ITER } else { ASCENT_MAX_ITER },
            );
            if start.is_some() && !(warm.upper - warm.value <= ASCENT_ACCEPT) {
                let cold = ascend(self.w, lambda, None, ASCENT_TOL, ASCENT_MAX_ITER);
                if cold.upper - cold.value < warm.upper - warm.value {
                    cold
                } else {
                    warm
                }
            } else {
                warm
            }
        };
        if lambda <= 1.0 && !(a.upper - a.value <= ASCENT_ACCEPT) {
            return Err(Error::NonConvergence {
                solver: "joint input/channel ascent",
                iterations: a.iterations,
                best: a.value,
                lower: a.value,
                upper: a.upper,
            });
        }
        self.ascents.push(a.clone());
        Ok(a)
    }

    /// `K_δ(W)` for `δ ∈ [-1, 0]`.
    pub fn k_delta(&mut self, delta: f64) -> Result<f64> {
        if !(-1.0..=0.0).contains(&delta) {
            return Err(Error::Validation(format!("delta {delta} must lie in [-1, 0]")));
        }
        if delta == 0.0 {
            return Ok(0.0);
        }
        let a = self.ascent(-delta)?;
        Ok(0.5 * (a.value + a.upper))
    }

    /// `ln ν`, where `ν` is the largest number of inputs with pairwise
    /// distinct reachable outputs; the largest `I(P;V)` over channels `V`
    /// absolutely continuous with respect to `W`.
    pub fn max_reachable_information(&self) -> f64 {
        (self.w.support_matching_size() as f64).ln()
    }

    /// `G̃_sp(R|W)` for `R ≤ ln|X|`; `+∞` when no channel absolutely
    /// continuous with respect to `W` reaches `I(P;V) ≥ R`.
    pub fn sphere_packing_sc(&mut self, rate: f64) -> Result<ExtReal> {
        let ln_x = (self.w.inputs() as f64).ln();
        if rate > ln_x + 1e-12 {
            return Err(Error::Domain {
                quantity: "constrained sphere-packing exponent",
                rate,
                hint: "defined for R ≤ ln|X|; use the divergence-form strong converse exponent above it",
            });
        }
        if rate > self.max_reachable_information() + 1e-12 {
            return Ok(ExtReal::Infinite);
        }
        if rate <= self.capacity() {
            return Ok(ExtReal::ZERO);
        }
        let at_one = self.ascent(1.0)?;
        let mut lo;
        let mut hi = 1.0;
        let mut f_hi = at_one.info - rate;
        let mut f_lo;
        if f_hi < 0.0 {
            // the slope-one line does not reach R; continue past λ = 1
            lo = 1.0;
            f_lo = f_hi;
            let mut found = false;
            for k in 1..=MAX_LAMBDA_DOUBLINGS {
                let lam = 2f64.powi(k);
                let a = self.ascent(lam)?;
                if a.info >= rate {
                    hi = lam;
                    f_hi = a.info - rate;
                    found = true;
                    break;
                }
                lo = lam;
                f_lo = a.info - rate;
            }
            if !found {
                let a = self.ascent(lo)?;
                if rate >= self.max_reachable_information() - BOUNDARY_SLACK {
                    // I(P;V) = ln ν is reached only in the limit λ → ∞
                    return Ok(ExtReal::Finite((lo * rate - a.value).max(0.0)));
                }
                return Err(Error::NonConvergence {
                    solver: "constrained sphere-packing search",
                    iterations: MAX_LAMBDA_DOUBLINGS as usize,
                    best: a.div,
                    lower: lo * rate - a.value,
                    upper: f64::INFINITY,
                });
            }
        } else {
            let mut lam = 1e-3;
            loop {
                let a = self.ascent(lam)?;
                if a.info < rate || lam < 1e-12 {
                    lo = lam;
                    f_lo = a.info - rate;
                    break;
                }
                hi = lam;
                f_hi = a.info - rate;
                lam *= 1e-3;
            }
        }
        let mut err = None;
        let lam = if f_lo >= 0.0 {
            lo
        } else {
            brent_root(
                |l| match self.ascent(l) {
                    Ok(a) => a.info - rate,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                lo,
                hi,
                f_lo,
                f_hi,
                LAMBDA_XTOL,
                ROOT_ITER,
            )
        };
        if let Some(e) = err {
            return Err(e);
        }
        let a = self.ascent(lam)?;
        // D + λ(R - I): the primal value corrected to first order in the
        // residual of the rate constraint
        Ok(ExtReal::Finite((lam * rate - a.value).max(0.0)))
    }

    /// Rate below which no channel absolutely continuous with respect to `W`
    /// has `I(P;V) ≤ R`: `-ln max_y P({x: W(y|x) > 0})`.
    fn input_zero_rate(&self, p: &[f64]) -> f64 {
        let best = (0..self.w.outputs())
            .map(|y| {
                (0..self.w.inputs())
                    .filter(|&x| self.w.get(x, y) > 0.0)
                    .map(|x| p[x])
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        -best.min(1.0).ln()
    }

    /// `min_{V: I(P;V) ≤ R} D(V||W|P) = max_{λ ≥ 0} -λR + F̃_λ(0, P|W)`.
    fn error_point(&self, rate: f64, p: &[f64], warm: Option<&Warm>) -> Result<InnerPoint> {
        let n = self.w.inputs();
        if rate < self.input_zero_rate(p) - 1e-12 {
            return Ok(InnerPoint {
                value: ExtReal::Infinite,
                delta: f64::INFINITY,
                grad: vec![0.0; n],
                warm: None,
            });
        }
        let t = self.tilt(p);
        let base = t.solve(1.0, &t.natural_q(), self.cfg.convergence_tol);
        if base.info <= rate {
            return Ok(InnerPoint::zero(n));
        }
        let mut solved = Self::warm_points(&t, warm);
        let to_lambda = |tau: f64| tau / (1.0 - tau);
        let (mut a, mut fa) = (0.0, base.info - rate);
        let mut bracket = None;
        for k in 1..=MAX_LAMBDA_DOUBLINGS {
            let tau = 1.0 - 2f64.powi(-k);
            let pt = self.solve_tilt(&t, 1.0 + to_lambda(tau), &solved)?;
            let f = pt.info - rate;
            solved.push(pt);
            if f <= 0.0 {
                bracket = Some((a, tau, fa, f));
                break;
            }
            a = tau;
            fa = f;
        }
        let pt = match bracket {
            None => solved.last().cloned().filter(|s| !s.gap.is_nan()).expect("at least one solve"),
            Some((a, b, fa, fb)) => {
                let mut err = None;
                let tau = brent_root(
                    |tau| match self.solve_tilt(&t, 1.0 + to_lambda(tau), &solved) {
                        Ok(pt) => {
                            let f = pt.info - rate;
                            solved.push(pt);
                            f
                        }
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    },
                    a,
                    b,
                    fa,
                    fb,
                    ROOT_XTOL,
                    ROOT_ITER,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                let eps = 1.0 + to_lambda(tau);
                match Self::find_solved(&solved, eps) {
                    Some(pt) => pt,
                    None => self.solve_tilt(&t, eps, &solved)?,
                }
            }
        };
        let lambda = pt.eps - 1.0;
        Ok(InnerPoint {
            value: ExtReal::Finite((-lambda * rate + pt.value).max(0.0)),
            delta: lambda,
            grad: t.h_full(pt.eps, &pt.q),
            warm: Some(Warm { eps: pt.eps, q: t.lift_q(&pt.q) }),
        })
    }

    /// `min_{V: I(P;V) ≤ R} D(V||W|P)` for one input law.
    pub fn sphere_packing_err_pointwise(&self, rate: f64, p: &Distribution) -> Result<ExtReal> {
        self.check_input(p.as_slice())?;
        Ok(self.error_point(rate, p.as_slice(), None)?.value)
    }

    /// `Ẽ_sp(R|W)` with its maximizing input law.
    pub fn sphere_packing_err_with_input(&mut self, rate: f64) -> Result<InputSolution> {
        let n = self.w.inputs();
        if rate < self.zero_rate_threshold() {
            return Ok(InputSolution {
                value: ExtReal::Infinite,
                input: vec![1.0 / n as f64; n],
                delta: f64::INFINITY,
            });
        }
        let (c, pc) = self.capacity_solution().clone();
        if rate >= c {
            return Ok(InputSolution {
                value: ExtReal::ZERO,
                input: pc,
                delta: 0.0,
            });
        }
        // the objective need not be concave in P: seed from a coarse lattice
        // and random laws, then refine the most promising seeds
        let mut seeds: Vec<Vec<f64>> = Vec::new();
        if let Some(wp) = &self.err_warm {
            seeds.push(wp.clone());
        }
        seeds.push(pc);
        seeds.push(vec![1.0 / n as f64; n]);
        seeds.extend(simplex_lattice(n, self.cfg.grid_fallback_resolution));
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ rate.to_bits());
        seeds.extend((0..self.cfg.p_restarts).map(|_| Distribution::random(n, &mut rng).into_vec()));
        let mut scored: Vec<(f64, usize)> = Vec::with_capacity(seeds.len());
        for (i, s) in seeds.iter().enumerate() {
            let v = self.error_point(rate, s, None)?.value;
            if v.is_infinite() {
                return Ok(InputSolution {
                    value: ExtReal::Infinite,
                    input: s.clone(),
                    delta: f64::INFINITY,
                });
            }
            scored.push((v.to_f64(), i));
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut picks: Vec<usize> = vec![0, 1];
        for &(_, i) in &scored {
            if picks.len() >= 5 {
                break;
            }
            if !picks.contains(&i) {
                picks.push(i);
            }
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in picks {
            let mut warm: Option<Warm> = None;
            let res = minimize_on_simplex(
                |p| match self.error_point(rate, p, warm.as_ref()) {
                    Ok(pt) if !pt.value.is_infinite() => {
                        if pt.warm.is_some() {
                            warm = pt.warm;
                        }
                        (-pt.value.to_f64(), pt.grad.into_iter().map(|g| -g).collect())
                    }
                    _ => (f64::INFINITY, vec![f64::NAN; n]),
                },
                &seeds[i],
                &self.pgd,
            );
            if best.as_ref().is_none_or(|b| -res.value > b.0) {
                best = Some((-res.value, res.point));
            }
        }
        let (_, input) = best.expect("at least one seed");
        let point = self.error_point(rate, &input, None)?;
        self.err_warm = Some(input.clone());
        Ok(InputSolution {
            value: point.value,
            input,
            delta: point.delta,
        })
    }

    /// `Ẽ_sp(R|W)`; `+∞` below the zero-rate threshold.
    pub fn sphere_packing_err(&mut self, rate: f64) -> Result<ExtReal> {
        Ok(self.sphere_packing_err_with_input(rate)?.value)
    }
}
