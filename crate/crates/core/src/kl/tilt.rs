//! Inner minimization over auxiliary channels.
//!
//! For a fixed input law `P`,
//! `min_V δ I(P;V) + D(V||W|P) = opt_q Σ_x P(x) h_x(q)` with
//! `h_x(q) = -(1+δ) ln Σ_y W(y|x)^s q(y)^{1-s}`, `s = 1/(1+δ)`; the optimum is
//! a max over the output simplex when `δ < 0` and a min when `δ > 0`, and the
//! minimizing channel is the tilted channel `V(y|x) ∝ W(y|x)^s q(y)^{1-s}`.
//! In both cases the problem is a smooth convex program in `q`, solved here
//! by Newton's method on the simplex. The parameter is carried as
//! `ε = 1 + δ` so the `δ → -1` end stays accurate.

use nalgebra::{DMatrix, DVector};

use crate::channel::Channel;

/// Clamp applied to `h_x` when the tilted row leaves the current output support.
pub(crate) const H_CLAMP: f64 = 1e3;
const MAX_NEWTON: usize = 300;

/// `(P, W)` restricted to the inputs in `supp P` and the outputs they reach.
#[derive(Debug, Clone)]
pub(crate) struct Tilt<'w> {
    w: &'w Channel,
    rows: Vec<usize>,
    cols: Vec<usize>,
    p: Vec<f64>,
    lw: Vec<f64>,
    max_newton: usize,
}

/// Optimal (or best found) dual point for one `ε`.
#[derive(Debug, Clone)]
pub(crate) struct TiltPoint {
    pub eps: f64,
    /// Reduced output law, indexed like `Tilt::cols`.
    pub q: Vec<f64>,
    /// `opt_q Σ_x P(x) h_x(q) = min_V δ I(P;V) + D(V||W|P)`.
    pub value: f64,
    /// `I(P; V_q)` of the tilted channel.
    pub info: f64,
    /// `D(V_q || W | P)` of the tilted channel.
    #[cfg_attr(not(test), allow(dead_code))]
    pub div: f64,
    /// Frank–Wolfe bound on the distance of `value` from the optimum.
    pub gap: f64,
}

struct Eval {
    phi: f64,
    q_tilde: Vec<f64>,
    /// tilted channel, reduced rows × reduced cols
    v: Vec<f64>,
    ln_v: Vec<f64>,
}

impl<'w> Tilt<'w> {
    pub fn new(p: &[f64], w: &'w Channel) -> Self {
        let rows: Vec<usize> = (0..w.inputs()).filter(|&x| p[x] > 0.0).collect();
        let cols: Vec<usize> = (0..w.outputs())
            .filter(|&y| rows.iter().any(|&x| w.get(x, y) > 0.0))
            .collect();
        let mut lw = Vec::with_capacity(rows.len() * cols.len());
        for &x in &rows {
            for &y in &cols {
                lw.push(w.get(x, y).ln());
            }
        }
        let mass: f64 = rows.iter().map(|&x| p[x]).sum();
        Tilt {
            w,
            p: rows.iter().map(|&x| p[x] / mass).collect(),
            rows,
            cols,
            lw,
            max_newton: MAX_NEWTON,
        }
    }

    pub fn with_iterations(mut self, max_newton: usize) -> Self {
        self.max_newton = max_newton;
        self
    }

    #[cfg(test)]
    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    /// Output law `P·W` restricted to the reachable outputs.
    pub fn natural_q(&self) -> Vec<f64> {
        let m = self.cols.len();
        let mut q = vec![0.0; m];
        for (r, &pr) in self.p.iter().enumerate() {
            for (c, qc) in q.iter_mut().enumerate() {
                *qc += pr * self.lw[r * m + c].exp();
            }
        }
        let s: f64 = q.iter().sum();
        q.into_iter().map(|v| v / s).collect()
    }

    /// Expresses a full-length output law in the reduced coordinates,
    /// flooring entries so the result is interior.
    pub fn reduce_q(&self, full: &[f64]) -> Vec<f64> {
        let floor = 1e-6;
        let mut q: Vec<f64> = self.cols.iter().map(|&y| full[y].max(floor)).collect();
        let s: f64 = q.iter().sum();
        for v in &mut q {
            *v /= s;
        }
        q
    }

    pub fn lift_q(&self, q: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.w.outputs()];
        for (c, &y) in self.cols.iter().enumerate() {
            full[y] = q[c];
        }
        full
    }

    fn eval(&self, eps: f64, q: &[f64]) -> Eval {
        let m = self.cols.len();
        let s = 1.0 / eps;
        let ln_q: Vec<f64> = q.iter().map(|v| v.ln()).collect();
        let mut phi = 0.0;
        let mut q_tilde = vec![0.0; m];
        let mut v = vec![0.0; self.rows.len() * m];
        let mut ln_v = vec![f64::NEG_INFINITY; self.rows.len() * m];
        let mut ln_u = vec![0.0; m];
        let mut t = vec![0.0; m];
        for (r, &pr) in self.p.iter().enumerate() {
            let mut best = 0;
            for c in 0..m {
                t[c] = self.lw[r * m + c] - ln_q[c];
                ln_u[c] = s * t[c] + ln_q[c];
                if ln_u[c] > ln_u[best] {
                    best = c;
                }
            }
            let mx = ln_u[best];
            let sum: f64 = ln_u.iter().map(|&u| (u - mx).exp()).sum();
            let ln_sum = sum.ln();
            // ε ln Z = t* + ε ln q* + ε ln S, exact because ε s = 1
            let eps_ln_z = t[best] + eps * ln_q[best] + eps * ln_sum;
            phi -= pr * eps_ln_z;
            for c in 0..m {
                let lv = ln_u[c] - mx - ln_sum;
                ln_v[r * m + c] = lv;
                let vc = lv.exp();
                v[r * m + c] = vc;
                q_tilde[c] += pr * vc;
            }
        }
        Eval {
            phi,
            q_tilde,
            v,
            ln_v,
        }
    }

    fn gap(eps: f64, q: &[f64], e: &Eval) -> f64 {
        let ratio = q
            .iter()
            .zip(&e.q_tilde)
            .map(|(a, b)| b / a)
            .fold(f64::NEG_INFINITY, f64::max);
        ((eps - 1.0).abs() * (ratio - 1.0)).max(0.0)
    }

    fn point(&self, eps: f64, q: Vec<f64>, e: &Eval) -> TiltPoint {
        let m = self.cols.len();
        let ln_qt: Vec<f64> = e.q_tilde.iter().map(|v| v.ln()).collect();
        let mut info = 0.0;
        let mut div = 0.0;
        for (r, &pr) in self.p.iter().enumerate() {
            for c in 0..m {
                let vc = e.v[r * m + c];
                if vc > 0.0 {
                    info += pr * vc * (e.ln_v[r * m + c] - ln_qt[c]);
                    div += pr * vc * (e.ln_v[r * m + c] - self.lw[r * m + c]);
                }
            }
        }
        TiltPoint {
            eps,
            gap: Self::gap(eps, &q, e),
            q,
            value: e.phi,
            info: info.max(0.0),
            div: div.max(0.0),
        }
    }

    /// Newton's method from `q0` (reduced coordinates) at a single `ε`.
    pub fn solve(&self, eps: f64, q0: &[f64], tol: f64) -> TiltPoint {
        let m = self.cols.len();
        let delta = eps - 1.0;
        if m <= 1 || delta == 0.0 {
            let q = self.natural_q();
            let e = self.eval(eps, &q);
            return self.point(eps, q, &e);
        }
        let sigma = delta.signum();
        let f = |e: &Eval| sigma * e.phi;
        let mut q = q0.to_vec();
        let mut e = self.eval(eps, &q);
        let mut stalls = 0;
        for _ in 0..self.max_newton {
            if Self::gap(eps, &q, &e) <= tol {
                break;
            }
            // shifted by a constant, which the simplex constraint absorbs
            let grad: Vec<f64> = (0..m).map(|c| -delta.abs() * (e.q_tilde[c] - q[c]) / q[c]).collect();
            let scale = delta.abs() / eps;
            let mut kkt = DMatrix::<f64>::zeros(m + 1, m + 1);
            for (r, &pr) in self.p.iter().enumerate() {
                for a in 0..m {
                    let wa = e.v[r * m + a] / q[a];
                    kkt[(a, a)] += scale * pr * wa / q[a];
                    for b in 0..m {
                        let wb = e.v[r * m + b] / q[b];
                        kkt[(a, b)] += scale * pr * delta * wa * wb;
                    }
                }
            }
            for a in 0..m {
                kkt[(a, m)] = 1.0;
                kkt[(m, a)] = 1.0;
            }
            let mut rhs = DVector::<f64>::zeros(m + 1);
            for a in 0..m {
                rhs[a] = -grad[a];
            }
            let newton = kkt.lu().solve(&rhs).map(|sol| sol.rows(0, m).iter().copied().collect::<Vec<f64>>());
            let mut dir = match newton {
                Some(d) if d.iter().all(|v| v.is_finite()) => d,
                _ => e.q_tilde.iter().zip(&q).map(|(a, b)| a - b).collect(),
            };
            let mut slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                dir = e.q_tilde.iter().zip(&q).map(|(a, b)| a - b).collect();
                slope = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
                if !(slope < 0.0) {
                    break;
                }
            }
            let mut alpha: f64 = 1.0;
            for (qc, dc) in q.iter().zip(&dir) {
                if *dc < 0.0 {
                    alpha = alpha.min(0.99 * qc / -dc);
                }
            }
            let f0 = f(&e);
            let g0 = Self::gap(eps, &q, &e);
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = q.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
                let s: f64 = trial.iter().sum();
                let trial: Vec<f64> = trial.into_iter().map(|v| v / s).collect();
                let et = self.eval(eps, &trial);
                let ft = f(&et);
                // below roundoff the objective cannot rank steps; use the gap
                let noise = -alpha * slope < 1e-13 * (1.0 + f0.abs());
                if ft <= f0 + 1e-4 * alpha * slope || (noise && Self::gap(eps, &trial, &et) < g0) {
                    accepted = Some((trial, et, ft));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((qn, en, fnew)) = accepted else {
                break;
            };
            q = qn;
            e = en;
            if f0 - fnew <= 1e-16 * (1.0 + f0.abs()) && Self::gap(eps, &q, &e) >= g0 {
                stalls += 1;
                if stalls >= 3 {
                    break;
                }
            } else {
                stalls = 0;
            }
        }
        self.point(eps, q, &e)
    }

    /// Solves at `eps`, walking down geometrically from `from` (a solved
    /// point at a larger ε) when the target is close to `δ = -1`.
    pub fn solve_from(&self, eps: f64, from: Option<&TiltPoint>, tol: f64) -> TiltPoint {
        const DIRECT: f64 = 0.05;
        const FACTOR: f64 = 4.0;
        let (mut cur_eps, mut q) = match from {
            Some(pt) if pt.q.len() == self.cols.len() => (pt.eps, pt.q.clone()),
            _ => (f64::INFINITY, self.natural_q()),
        };
        if eps >= DIRECT || cur_eps <= eps * FACTOR {
            return self.solve(eps, &q, tol);
        }
        if cur_eps > 0.1 {
            cur_eps = 0.1;
            q = self.solve(cur_eps, &q, tol).q;
        }
        loop {
            let next = (cur_eps / FACTOR).max(eps);
            let pt = self.solve(next, &q, tol);
            if next <= eps {
                return pt;
            }
            cur_eps = next;
            q = pt.q;
        }
    }

    /// `h_x(q)` for every input of the full channel (the `P`-gradient of the
    /// optimal value by Danskin's theorem), clamped to `±H_CLAMP`.
    pub fn h_full(&self, eps: f64, q: &[f64]) -> Vec<f64> {
        let full = self.lift_q(q);
        (0..self.w.inputs())
            .map(|x| h_value(eps, self.w.row(x), &full).clamp(-H_CLAMP, H_CLAMP))
            .collect()
    }

    /// `h_x` in the `δ = -1` limit for every input of the full channel.
    #[cfg(test)]
    pub fn h_limit_full(&self, q: &[f64]) -> Vec<f64> {
        let full = self.lift_q(q);
        (0..self.w.inputs())
            .map(|x| h_limit_value(self.w.row(x), &full).clamp(-H_CLAMP, H_CLAMP))
            .collect()
    }
}

/// `h(q) = -ε ln Σ_y W(y)^{1/ε} q(y)^{1-1/ε}` for one channel row, evaluated
/// stably for small `ε`. Returns `-∞`/`+∞` when the row puts mass where `q`
/// vanishes (for `ε < 1`) or only there (for `ε > 1`).
pub(crate) fn h_value(eps: f64, row: &[f64], q: &[f64]) -> f64 {
    let s = 1.0 / eps;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut terms = Vec::with_capacity(row.len());
    for (&wy, &qy) in row.iter().zip(q) {
        if wy <= 0.0 {
            continue;
        }
        if qy <= 0.0 {
            if eps < 1.0 {
                return f64::NEG_INFINITY;
            }
            continue;
        }
        let t = wy.ln() - qy.ln();
        let lu = s * t + qy.ln();
        terms.push(lu);
        if best.is_none_or(|(b, _, _)| lu > b) {
            best = Some((lu, t, qy.ln()));
        }
    }
    let Some((mx, t, lq)) = best else {
        return f64::INFINITY;
    };
    let ln_sum = terms.iter().map(|&u| (u - mx).exp()).sum::<f64>().ln();
    -(t + eps * lq + eps * ln_sum)
}

/// `δ = -1` limit of [`h_value`]: `min_{y: W(y) > 0} ln(q(y)/W(y))`.
pub(crate) fn h_limit_value(row: &[f64], q: &[f64]) -> f64 {
    row.iter()
        .zip(q)
        .filter(|(&wy, _)| wy > 0.0)
        .map(|(&wy, &qy)| qy.ln() - wy.ln())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{conditional_divergence, make_channel, mutual_information, Distribution};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct primal objective of the tilted channel reconstructed from `q`.
    fn primal(p: &Distribution, w: &Channel, t: &Tilt, pt: &TiltPoint) -> f64 {
        let e = t.eval(pt.eps, &pt.q);
        let m = t.ncols();
        let mut rows = vec![vec![0.0; w.outputs()]; w.inputs()];
        for x in 0..w.inputs() {
            rows[x] = w.row(x).to_vec();
        }
        for (r, &x) in t.rows.iter().enumerate() {
            for (c, &y) in t.cols.iter().enumerate() {
                rows[x][y] = e.v[r * m + c];
            }
            let s: f64 = rows[x].iter().sum();
            for v in &mut rows[x] {
                *v /= s;
            }
        }
        let v = make_channel(&rows).unwrap();
        let i = mutual_information(p, &v).unwrap();
        let d = conditional_divergence(&v, w, p).unwrap().finite().unwrap();
        (pt.eps - 1.0) * i + d
    }

    #[test]
    fn value_matches_tilted_primal_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let w = Channel::random(3, 4, &mut rng);
            let p = Distribution::random(3, &mut rng);
            let t = Tilt::new(p.as_slice(), &w);
            for eps in [0.05, 0.3, 0.7, 1.5, 3.0, 40.0] {
                let pt = t.solve(eps, &t.natural_q(), 1e-13);
                assert!(pt.gap <= 1e-12, "eps {eps} gap {}", pt.gap);
                let direct = primal(&p, &w, &t, &pt);
                assert_abs_diff_eq!(pt.value, direct, epsilon = 1e-10);
                assert_abs_diff_eq!(pt.value, (eps - 1.0) * pt.info + pt.div, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn identity_limit_value() {
        // only V = W has finite divergence, so the δ → -1 value is -I = -ln 2
        let w = Channel::identity(2).unwrap();
        let p = [0.5, 0.5];
        let t = Tilt::new(&p, &w);
        let pt = t.solve_from(1e-9, None, 1e-13);
        assert_abs_diff_eq!(pt.value, -(2f64.ln()) * (1.0 - 1e-9), epsilon = 1e-12);
    }

    #[test]
    fn continuation_reaches_small_eps_on_sparse_channels() {
        let w = make_channel(&[
            vec![0.7, 0.3, 0.0],
            vec![0.0, 0.4, 0.6],
            vec![0.2, 0.0, 0.8],
        ])
        .unwrap();
        let p = [0.2, 0.5, 0.3];
        let t = Tilt::new(&p, &w);
        let mut prev: Option<TiltPoint> = None;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let pt = t.solve_from(eps, prev.as_ref(), 1e-13);
            // limit value is bracketed by the ε-solution
            let lim: f64 = t
                .h_limit_full(&pt.q)
                .iter()
                .zip(&p)
                .map(|(h, px)| h * px)
                .sum();
            assert!(lim <= pt.value + 1e-9, "eps {eps}: {lim} > {}", pt.value);
            assert!(pt.value - lim < 50.0 * eps + 1e-6, "eps {eps}: {} vs {lim}", pt.value);
            prev = Some(pt);
        }
    }
}
