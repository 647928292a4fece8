//! Brute-force reference values by enumeration over simplex grids.
//!
//! Nothing here is used by the production solvers; tests and the verifier
//! compare against it at small alphabet sizes.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{Channel, Distribution};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::optim::simplex_lattice;

/// Largest number of grid points any enumeration may visit.
pub const GRID_LIMIT: u128 = 10_000_000;
/// Slack on the mutual-information constraints `I ≥ R` and `I ≤ R`.
pub const RATE_SLACK: f64 = 1e-12;

/// `binomial(m + dim - 1, dim - 1)`, saturating.
pub fn simplex_grid_size(dim: usize, m: usize) -> u128 {
    if dim == 0 {
        return 0;
    }
    let k = (dim - 1) as u128;
    let n = (m + dim - 1) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

fn guard(count: u128) -> Result<()> {
    if count > GRID_LIMIT {
        Err(Error::Overflow {
            count,
            limit: GRID_LIMIT,
        })
    } else {
        Ok(())
    }
}

fn check_grid_args(dim: usize, m: usize) -> Result<()> {
    if dim == 0 || m == 0 {
        return Err(Error::Validation("simplex grid needs dimension ≥ 1 and m ≥ 1".into()));
    }
    Ok(())
}

/// All distributions with entries in `{0, 1/m, …, 1}`, lexicographic order.
pub fn simplex_grid(dim: usize, m: usize) -> Result<Vec<Distribution>> {
    check_grid_args(dim, m)?;
    guard(simplex_grid_size(dim, m))?;
    simplex_lattice(dim, m)
        .into_iter()
        .map(Distribution::new)
        .collect()
}

fn channel_grid_size(inputs: usize, outputs: usize, m: usize) -> u128 {
    let rows = simplex_grid_size(outputs, m);
    (0..inputs).try_fold(1u128, |acc, _| acc.checked_mul(rows)).unwrap_or(u128::MAX)
}

/// Streams every channel whose rows lie on the `m`-grid; the first row
/// varies slowest.
pub struct ChannelGrid {
    rows: Vec<Vec<f64>>,
    index: Vec<usize>,
    done: bool,
}

impl Iterator for ChannelGrid {
    type Item = Channel;

    fn next(&mut self) -> Option<Channel> {
        if self.done {
            return None;
        }
        let entries: Vec<f64> = self.index.iter().flat_map(|&i| self.rows[i].iter().copied()).collect();
        let w = Channel::from_flat_unchecked(self.index.len(), self.rows[0].len(), entries);
        let mut k = self.index.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.index[k] += 1;
            if self.index[k] < self.rows.len() {
                break;
            }
            self.index[k] = 0;
        }
        Some(w)
    }
}

pub fn channel_grid(inputs: usize, outputs: usize, m: usize) -> Result<ChannelGrid> {
    check_grid_args(outputs, m)?;
    if inputs == 0 {
        return Err(Error::Validation("channel grid needs at least one input".into()));
    }
    guard(channel_grid_size(inputs, outputs, m))?;
    Ok(ChannelGrid {
        rows: simplex_lattice(outputs, m),
        index: vec![0; inputs],
        done: false,
    })
}

/// Minimum of `objective` over the channel grid; ties go to the first grid
/// point. `+∞` is returned only when every point evaluates to `+∞`.
pub fn oracle_min_over_v<F>(mut objective: F, inputs: usize, outputs: usize, m: usize) -> Result<(ExtReal, Channel)>
where
    F: FnMut(&Channel) -> ExtReal,
{
    let mut best: Option<(f64, Channel)> = None;
    for v in channel_grid(inputs, outputs, m)? {
        let val = objective(&v).to_f64();
        match &best {
            Some((b, _)) if !(val < *b) => {}
            _ => best = Some((val, v)),
        }
    }
    let (val, v) = best.expect("grid is nonempty");
    Ok((ExtReal::from_f64(val).unwrap_or(ExtReal::Infinite), v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    /// grid denominator for input laws
    pub m_p: usize,
    /// grid denominator for channel rows
    pub m_v: usize,
    pub delta_step: f64,
    /// upper end of the δ grid on the error side
    pub delta_cap: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            m_p: 100,
            m_v: 160,
            delta_step: 1e-3,
            delta_cap: 64.0,
        }
    }
}

/// Every exponent at one rate, by enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleRecord {
    pub rate: f64,
    pub capacity: f64,
    pub zero_rate: f64,
    /// `max_δ min_P F_δ` on the grids
    pub strong_converse: f64,
    /// `min_{P,V} [R - I]⁺ + D`
    pub dk_exponent: f64,
    /// `min_{P,V: I ≥ R} D`
    pub sphere_packing_sc: ExtReal,
    /// `max_δ max_P F_δ` with `δ ≤ delta_cap`; large but finite below `C₀`
    pub error_exponent: f64,
    /// `max_P min_{V: I ≤ R} D`
    pub sphere_packing_err: ExtReal,
}

/// Per-input-law summaries of all `(I(P;V), D(V||W|P))` pairs with finite `D`.
#[derive(Debug, Clone)]
struct Front {
    /// points with `D` smaller than at every larger `I`; ascending `I`
    up: Vec<(f64, f64)>,
    /// points with `D` smaller than at every smaller `I`; ascending `I`
    down: Vec<(f64, f64)>,
    /// same for `D - I`
    down_shifted: Vec<(f64, f64)>,
    /// lower convex hull of the pairs
    hull: Vec<(f64, f64)>,
}

impl Front {
    fn build(mut pts: Vec<(f64, f64)>) -> Front {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut up = Vec::new();
        let mut best = f64::INFINITY;
        for &(i, d) in pts.iter().rev() {
            if d < best {
                best = d;
                up.push((i, d));
            }
        }
        up.reverse();
        let mut down = Vec::new();
        let mut down_shifted = Vec::new();
        let (mut best, mut best_shifted) = (f64::INFINITY, f64::INFINITY);
        for &(i, d) in &pts {
            if d < best {
                best = d;
                down.push((i, d));
            }
            if d - i < best_shifted {
                best_shifted = d - i;
                down_shifted.push((i, d - i));
            }
        }
        Front {
            up,
            down,
            down_shifted,
            hull: lower_hull(&pts),
        }
    }

    /// `min {D : I ≥ R}`
    fn min_above(&self, rate: f64) -> f64 {
        let k = self.up.partition_point(|&(i, _)| i < rate - RATE_SLACK);
        self.up.get(k).map_or(f64::INFINITY, |p| p.1)
    }

    fn last_below(list: &[(f64, f64)], rate: f64) -> f64 {
        let k = list.partition_point(|&(i, _)| i <= rate + RATE_SLACK);
        if k == 0 {
            f64::INFINITY
        } else {
            list[k - 1].1
        }
    }

    /// `min {D : I ≤ R}`
    fn min_below(&self, rate: f64) -> f64 {
        Self::last_below(&self.down, rate)
    }

    /// `min {[R - I]⁺ + D}`
    fn dk(&self, rate: f64) -> f64 {
        self.min_above(rate).min(rate + Self::last_below(&self.down_shifted, rate))
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower hull of points sorted by `(x, y)`.
fn lower_hull(sorted: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut h: Vec<(f64, f64)> = Vec::new();
    for &p in sorted {
        if h.last().is_some_and(|l| l.0 == p.0) {
            continue;
        }
        while h.len() >= 2 && cross(h[h.len() - 2], h[h.len() - 1], p) <= 0.0 {
            h.pop();
        }
        h.push(p);
    }
    h
}

fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

fn ln_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `J_δ(P|W)` from its defining sum, with the `δ = -1` limit.
fn gallager_sum(delta: f64, p: &[f64], w: &Channel) -> f64 {
    let (nx, ny) = (w.inputs(), w.outputs());
    if delta == 0.0 {
        return 0.0;
    }
    if delta == -1.0 {
        let s: f64 = (0..ny)
            .map(|y| (0..nx).filter(|&x| p[x] > 0.0).map(|x| w.get(x, y)).fold(0.0, f64::max))
            .sum();
        return -s.ln();
    }
    let e = 1.0 + delta;
    let mut terms = Vec::with_capacity(ny);
    let mut inner = Vec::with_capacity(nx);
    for y in 0..ny {
        inner.clear();
        for x in 0..nx {
            if p[x] > 0.0 && w.get(x, y) > 0.0 {
                inner.push(p[x].ln() + w.get(x, y).ln() / e);
            }
        }
        terms.push(e * ln_sum_exp(&inner));
    }
    -ln_sum_exp(&terms)
}

/// Enumeration tables for one channel; queries at any rate are cheap.
pub struct OracleTables {
    channel: Channel,
    cfg: OracleConfig,
    inputs: Vec<Vec<f64>>,
    fronts: Vec<Front>,
    hull: Vec<(f64, f64)>,
    converse_deltas: Vec<f64>,
    min_j: Vec<f64>,
    error_deltas: Vec<f64>,
    max_j: Vec<f64>,
    capacity: f64,
    zero_rate: f64,
}

fn delta_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round().max(1.0) as usize;
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

impl OracleTables {
    pub fn new(w: &Channel, cfg: OracleConfig) -> Result<Self> {
        let (nx, ny) = (w.inputs(), w.outputs());
        if !(cfg.delta_step > 0.0 && cfg.delta_cap > 0.0) {
            return Err(Error::Validation("oracle δ step and cap must be positive".into()));
        }
        check_grid_args(nx, cfg.m_p)?;
        check_grid_args(ny, cfg.m_v)?;
        let p_count = simplex_grid_size(nx, cfg.m_p);
        let v_count = channel_grid_size(nx, ny, cfg.m_v);
        guard(p_count)?;
        guard(v_count)?;
        guard(p_count.saturating_mul(v_count) / 16)?;

        let inputs = simplex_lattice(nx, cfg.m_p);
        let rows = simplex_lattice(ny, cfg.m_v);
        // per input x and grid row r: D(row_r || W_x) and Σ row ln row
        let row_div: Vec<Vec<f64>> = (0..nx)
            .map(|x| {
                rows.iter()
                    .map(|r| {
                        r.iter()
                            .zip(w.row(x))
                            .map(|(&v, &wv)| {
                                if v == 0.0 {
                                    0.0
                                } else if wv == 0.0 {
                                    f64::INFINITY
                                } else {
                                    v * (v / wv).ln()
                                }
                            })
                            .sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        let row_negent: Vec<f64> = rows.iter().map(|r| r.iter().map(|&v| xlogx(v)).sum()).collect();

        let fronts: Vec<Front> = inputs
            .par_iter()
            .map(|p| {
                let support: Vec<usize> = (0..nx).filter(|&x| p[x] > 0.0).collect();
                // rows of inputs outside supp P do not matter; enumerate only supp P
                let mut idx = vec![0usize; support.len()];
                let mut pts = Vec::new();
                let mut q = vec![0.0; ny];
                loop {
                    let mut d = 0.0;
                    let mut cond = 0.0;
                    q.iter_mut().for_each(|v| *v = 0.0);
                    for (k, &x) in support.iter().enumerate() {
                        let r = idx[k];
                        d += p[x] * row_div[x][r];
                        cond += p[x] * row_negent[r];
                        for (qy, &v) in q.iter_mut().zip(&rows[r]) {
                            *qy += p[x] * v;
                        }
                    }
                    if d.is_finite() {
                        let info = cond - q.iter().map(|&v| xlogx(v)).sum::<f64>();
                        pts.push((info.max(0.0), d.max(0.0)));
                    }
                    let mut k = idx.len();
                    let mut finished = true;
                    while k > 0 {
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] < rows.len() {
                            finished = false;
                            break;
                        }
                        idx[k] = 0;
                    }
                    if finished {
                        break;
                    }
                }
                Front::build(pts)
            })
            .collect();
        let mut all: Vec<(f64, f64)> = fronts.iter().flat_map(|f| f.hull.iter().copied()).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let hull = lower_hull(&all);

        let converse_deltas = delta_grid(-1.0, 0.0, cfg.delta_step);
        let error_deltas = delta_grid(0.0, cfg.delta_cap, cfg.delta_step);
        let min_j: Vec<f64> = converse_deltas
            .par_iter()
            .map(|&d| inputs.iter().map(|p| gallager_sum(d, p, w)).fold(f64::INFINITY, f64::min))
            .collect();
        let max_j: Vec<f64> = error_deltas
            .par_iter()
            .map(|&d| inputs.iter().map(|p| gallager_sum(d, p, w)).fold(f64::NEG_INFINITY, f64::max))
            .collect();

        let capacity = inputs
            .iter()
            .map(|p| {
                let q: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| p[x] * w.get(x, y)).sum()).collect();
                let cond: f64 = (0..nx).map(|x| p[x] * w.row(x).iter().map(|&v| xlogx(v)).sum::<f64>()).sum();
                (cond - q.iter().map(|&v| xlogx(v)).sum::<f64>()).max(0.0)
            })
            .fold(0.0, f64::max);
        let game = inputs
            .iter()
            .map(|p| {
                (0..ny)
                    .map(|y| (0..nx).filter(|&x| w.get(x, y) > 0.0).map(|x| p[x]).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        let zero_rate = if game >= 1.0 { 0.0 } else { -game.ln() };

        Ok(OracleTables {
            channel: w.clone(),
            cfg,
            inputs,
            fronts,
            hull,
            converse_deltas,
            min_j,
            error_deltas,
            max_j,
            capacity,
            zero_rate,
        })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.cfg
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn zero_rate(&self) -> f64 {
        self.zero_rate
    }

    /// `max_{P,V} -δ I - D` over the grids.
    pub fn k_delta(&self, delta: f64) -> f64 {
        -self.hull.iter().map(|&(i, d)| delta * i + d).fold(f64::INFINITY, f64::min)
    }

    /// `min_{P,V} δ(I - R) + D` over the grids.
    pub fn tilde_g(&self, delta: f64, rate: f64) -> f64 {
        -delta * rate - self.k_delta(delta)
    }

    /// `min_P F_δ(R, P)` over the input grid, for any `δ ≥ -1`.
    pub fn g_delta(&self, delta: f64, rate: f64) -> f64 {
        -delta * rate
            + self
                .inputs
                .iter()
                .map(|p| gallager_sum(delta, p, &self.channel))
                .fold(f64::INFINITY, f64::min)
    }

    pub fn strong_converse(&self, rate: f64) -> f64 {
        self.converse_deltas
            .iter()
            .zip(&self.min_j)
            .map(|(d, j)| -d * rate + j)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn error_exponent(&self, rate: f64) -> f64 {
        self.error_deltas
            .iter()
            .zip(&self.max_j)
            .map(|(d, j)| -d * rate + j)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dk_exponent(&self, rate: f64) -> f64 {
        self.fronts.iter().map(|f| f.dk(rate)).fold(f64::INFINITY, f64::min)
    }

    pub fn sphere_packing_sc(&self, rate: f64) -> ExtReal {
        let v = self.fronts.iter().map(|f| f.min_above(rate)).fold(f64::INFINITY, f64::min);
        ExtReal::from_f64(v).unwrap_or(ExtReal::Infinite)
    }

    pub fn sphere_packing_err(&self, rate: f64) -> ExtReal {
        let v = self.fronts.iter().map(|f| f.min_below(rate)).fold(f64::NEG_INFINITY, f64::max);
        ExtReal::from_f64(v).unwrap_or(ExtReal::Infinite)
    }

    pub fn record(&self, rate: f64) -> OracleRecord {
        OracleRecord {
            rate,
            capacity: self.capacity,
            zero_rate: self.zero_rate,
            strong_converse: self.strong_converse(rate),
            dk_exponent: self.dk_exponent(rate),
            sphere_packing_sc: self.sphere_packing_sc(rate),
            error_exponent: self.error_exponent(rate),
            sphere_packing_err: self.sphere_packing_err(rate),
        }
    }
}

/// Enumerates every exponent of `w` at each rate.
pub fn oracle_exponents(w: &Channel, rates: &[f64], cfg: OracleConfig) -> Result<Vec<OracleRecord>> {
    let t = OracleTables::new(w, cfg)?;
    Ok(rates.iter().map(|&r| t.record(r)).collect())
}
