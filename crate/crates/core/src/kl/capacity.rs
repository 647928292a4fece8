use crate::channel::{kl_divergence, Channel};
use crate::support::support_game;

const MAX_ITER: usize = 1_000_000;

/// Capacity `C(W) = max_P I(P;W)` together with an (approximately) optimal
/// input law.
///
/// Alternating maximization `P(x) ∝ P(x) exp D(W_x || PW)` runs until the
/// bounds `I(P;W) ≤ C ≤ max_x D(W_x || PW)` are within `tol`; the midpoint is
/// returned.
pub fn capacity_with_input(w: &Channel, tol: f64) -> (f64, Vec<f64>) {
    let nx = w.inputs();
    let ny = w.outputs();
    let mut p = vec![1.0 / nx as f64; nx];
    let mut q = vec![0.0; ny];
    let mut d = vec![0.0; nx];
    let mut bounds = (0.0, f64::INFINITY);
    for _ in 0..MAX_ITER {
        q.iter_mut().for_each(|v| *v = 0.0);
        for (x, &px) in p.iter().enumerate() {
            for (qy, &wy) in q.iter_mut().zip(w.row(x)) {
                *qy += px * wy;
            }
        }
        for (x, dx) in d.iter_mut().enumerate() {
            *dx = kl_divergence(w.row(x), &q);
        }
        let lower: f64 = p.iter().zip(&d).map(|(a, b)| a * b).sum();
        let upper = d.iter().copied().fold(0.0, f64::max);
        bounds = (lower.max(0.0), upper);
        if upper - lower < tol {
            break;
        }
        let shift = upper;
        let mut total = 0.0;
        for (px, &dx) in p.iter_mut().zip(&d) {
            *px *= (dx - shift).exp();
            total += *px;
        }
        p.iter_mut().for_each(|v| *v /= total);
    }
    (0.5 * (bounds.0 + bounds.1), p)
}

/// Channel capacity in nats.
pub fn capacity(w: &Channel, tol: f64) -> f64 {
    capacity_with_input(w, tol).0
}

/// Zero-rate threshold `C_0(W) = -ln min_P max_y Σ_{x: W(y|x) > 0} P(x)`.
pub fn zero_rate_threshold(w: &Channel) -> f64 {
    let v = support_game(w).value;
    if v >= 1.0 {
        0.0
    } else {
        -v.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_channel;
    use approx::assert_abs_diff_eq;

    fn hb(p: f64) -> f64 {
        if p == 0.0 || p == 1.0 {
            0.0
        } else {
            -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
        }
    }

    #[test]
    fn closed_forms() {
        assert_abs_diff_eq!(capacity(&Channel::identity(2).unwrap(), 1e-10), 2f64.ln(), epsilon = 1e-12);
        assert_eq!(capacity(&Channel::bsc(0.5).unwrap(), 1e-10), 0.0);
        for k in 0..=10 {
            let p = 0.05 * k as f64;
            let c = capacity(&Channel::bsc(p).unwrap(), 1e-10);
            assert_abs_diff_eq!(c, 2f64.ln() - hb(p), epsilon = 1e-10);
        }
        // BEC(p): C = (1-p) ln 2
        let c = capacity(&Channel::bec(0.3).unwrap(), 1e-10);
        assert_abs_diff_eq!(c, 0.7 * 2f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn z_channel_capacity() {
        // Z channel with crossover 1/2: C = ln(1 + 2^{-2}) = ln(5/4)
        let z = Channel::z_channel(0.5).unwrap();
        let (c, p) = capacity_with_input(&z, 1e-12);
        assert_abs_diff_eq!(c, (1.25f64).ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(p[1], 0.4, epsilon = 1e-6);
    }

    #[test]
    fn zero_rate_examples() {
        assert_eq!(zero_rate_threshold(&Channel::bsc(0.1).unwrap()), 0.0);
        assert_eq!(zero_rate_threshold(&Channel::identity(2).unwrap()), 2f64.ln());
        assert_eq!(zero_rate_threshold(&Channel::z_channel(0.5).unwrap()), 0.0);
        let w = make_channel(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]]).unwrap();
        assert_abs_diff_eq!(zero_rate_threshold(&w), 1.5f64.ln(), epsilon = 1e-12);
    }
}
