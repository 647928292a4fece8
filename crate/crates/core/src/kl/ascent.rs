//! Joint maximization of `λ I(P;V) - D(V||W|P)` over input laws and channels.
//!
//! Writing `I(P;V) = max_Q Σ P V ln(Q(x|y)/P(x))` turns the problem into a
//! three-block ascent over `(P, V, Q)` whose block maximizers are explicit:
//! `Q` is the posterior of `(P, V)`, `V(y|x) ∝ W(y|x) Q(x|y)^λ`, and
//! `P(x) ∝ P(x) exp(D(V_x||q) - D(V_x||W_x)/λ)`. For `λ ≤ 1` every `q`
//! certifies `K ≤ -min_x h_x(q)`.

use crate::channel::Channel;
use crate::kl::tilt::{h_limit_value, h_value};

#[derive(Debug, Clone)]
pub(crate) struct AscentPoint {
    pub lambda: f64,
    pub p: Vec<f64>,
    /// row-major, same shape as `W`
    pub v: Vec<f64>,
    /// `λ I - D` at `(p, v)`
    pub value: f64,
    /// certified upper bound on the maximum (`+∞` when `λ > 1`)
    pub upper: f64,
    pub info: f64,
    pub div: f64,
    pub iterations: usize,
}

struct Stats {
    q: Vec<f64>,
    /// `D(V_x || q)` per input
    dq: Vec<f64>,
    /// `D(V_x || W_x)` per input
    dw: Vec<f64>,
}

fn stats(w: &Channel, p: &[f64], lv: &[f64]) -> Stats {
    let nx = w.inputs();
    let ny = w.outputs();
    let mut q = vec![0.0; ny];
    for x in 0..nx {
        for y in 0..ny {
            q[y] += p[x] * lv[x * ny + y].exp();
        }
    }
    let mut dq = vec![0.0; nx];
    let mut dw = vec![0.0; nx];
    for x in 0..nx {
        for y in 0..ny {
            let l = lv[x * ny + y];
            if l == f64::NEG_INFINITY {
                continue;
            }
            let v = l.exp();
            dq[x] += v * (l - q[y].ln());
            dw[x] += v * (l - w.get(x, y).ln());
        }
        dq[x] = dq[x].max(0.0);
        dw[x] = dw[x].max(0.0);
    }
    Stats { q, dq, dw }
}

fn upper_bound(w: &Channel, lambda: f64, q: &[f64]) -> f64 {
    if lambda > 1.0 {
        return f64::INFINITY;
    }
    let eps = 1.0 - lambda;
    let min_h = (0..w.inputs())
        .map(|x| {
            if eps < 1e-12 {
                h_limit_value(w.row(x), q)
            } else {
                h_value(eps, w.row(x), q)
            }
        })
        .fold(f64::INFINITY, f64::min);
    -min_h
}

/// Runs the ascent from `start` (or from uniform `P`, `V = W`) until the
/// certified gap drops below `tol`, progress stalls (for `λ ≤ 1` only once
/// the gap is within `100 tol`), or `max_iter` sweeps.
pub(crate) fn ascend(
    w: &Channel,
    lambda: f64,
    start: Option<(&[f64], &[f64])>,
    tol: f64,
    max_iter: usize,
) -> AscentPoint {
    let nx = w.inputs();
    let ny = w.outputs();
    let (mut p, mut lv): (Vec<f64>, Vec<f64>) = match start {
        Some((p0, v0)) => (
            p0.iter().map(|&v| v.max(1e-300)).collect(),
            v0.iter()
                .enumerate()
                .map(|(i, &v)| {
                    if w.get(i / ny, i % ny) > 0.0 {
                        v.max(1e-300).ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect(),
        ),
        None => (
            vec![1.0 / nx as f64; nx],
            (0..nx * ny).map(|i| w.get(i / ny, i % ny).ln()).collect(),
        ),
    };
    let ps: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= ps);
    normalize_rows(&mut lv, ny);

    let mut st = stats(w, &p, &lv);
    let mut value = lagrangian(lambda, &p, &st);
    let mut upper = upper_bound(w, lambda, &st.q);
    let mut iterations = 0;
    let mut stalls = 0;
    while iterations < max_iter && upper - value > tol {
        iterations += 1;
        // V block: ln V = ln W + λ ln Q(x|y)
        for x in 0..nx {
            for y in 0..ny {
                let i = x * ny + y;
                if lv[i] == f64::NEG_INFINITY {
                    continue;
                }
                // the P(x)^λ factor is constant along the row
                lv[i] = w.get(x, y).ln() + lambda * (lv[i] - st.q[y].ln());
            }
        }
        normalize_rows(&mut lv, ny);
        st = stats(w, &p, &lv);
        // P block
        if lambda > 0.0 {
            let logits: Vec<f64> = (0..nx)
                .map(|x| p[x].ln() + st.dq[x] - st.dw[x] / lambda)
                .collect();
            let mx = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (px, l) in p.iter_mut().zip(&logits) {
                *px = (l - mx).exp();
                total += *px;
            }
            p.iter_mut().for_each(|v| *v /= total);
            st = stats(w, &p, &lv);
        }
        let next = lagrangian(lambda, &p, &st);
        let improvement = next - value;
        value = next;
        upper = upper.min(upper_bound(w, lambda, &st.q));
        let settled = lambda > 1.0 || upper - value <= 100.0 * tol;
        if settled && improvement <= 1e-15 * (1.0 + value.abs()) {
            stalls += 1;
            if stalls >= 5 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    let info: f64 = p.iter().zip(&st.dq).map(|(a, b)| a * b).sum();
    let div: f64 = p.iter().zip(&st.dw).map(|(a, b)| a * b).sum();
    AscentPoint {
        lambda,
        v: lv.iter().map(|l| l.exp()).collect(),
        p,
        value,
        upper,
        info,
        div,
        iterations,
    }
}

fn lagrangian(lambda: f64, p: &[f64], st: &Stats) -> f64 {
    p.iter()
        .zip(st.dq.iter().zip(&st.dw))
        .map(|(px, (dq, dw))| px * (lambda * dq - dw))
        .sum()
}

fn normalize_rows(lv: &mut [f64], ny: usize) {
    for row in lv.chunks_mut(ny) {
        let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ln_sum = row.iter().map(|l| (l - mx).exp()).sum::<f64>().ln() + mx;
        row.iter_mut().for_each(|l| *l -= ln_sum);
    }
}
