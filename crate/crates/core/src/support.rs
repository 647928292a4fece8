//! The support-pattern matrix game `min_P max_y Σ_{x: W(y|x) > 0} P(x)`.
//!
//! Its value `v` depends only on which entries of `W` are zero; `-ln v` is the
//! rate below which the sphere-packing error exponent diverges. Solved exactly
//! by vertex enumeration on small alphabets and by the simplex method otherwise.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::channel::Channel;

/// Largest number of candidate vertices enumerated before switching to the LP solver.
const VERTEX_LIMIT: u128 = 200_000;
const FEAS_TOL: f64 = 1e-12;

/// Value and an optimal input law of the support game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    pub value: f64,
    pub input: Vec<f64>,
}

/// Distinct column support sets of `W` as 0/1 rows (one per pattern).
fn column_patterns(w: &Channel) -> Vec<Vec<bool>> {
    let mut pats: Vec<Vec<bool>> = (0..w.outputs())
        .map(|y| (0..w.inputs()).map(|x| w.get(x, y) > 0.0).collect())
        .filter(|p: &Vec<bool>| p.iter().any(|&b| b))
        .collect();
    pats.sort();
    pats.dedup();
    // A pattern contained in another never binds.
    let keep: Vec<bool> = (0..pats.len())
        .map(|i| {
            !(0..pats.len()).any(|j| {
                j != i
                    && pats[j] != pats[i]
                    && pats[i].iter().zip(&pats[j]).all(|(&a, &b)| !a || b)
            })
        })
        .collect();
    pats.into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Solves the support game for `W`.
pub fn support_game(w: &Channel) -> GameSolution {
    let n = w.inputs();
    let pats = column_patterns(w);
    if pats.iter().any(|p| p.iter().all(|&b| b)) {
        return GameSolution {
            value: 1.0,
            input: vec![1.0 / n as f64; n],
        };
    }
    if n <= 8 && binomial((n + pats.len()) as u128, n as u128) <= VERTEX_LIMIT {
        enumerate_vertices(n, &pats)
    } else {
        solve_lp(n, &pats)
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Every vertex of `{(P, t): A P ≤ t, P ∈ simplex}` arises from an input
/// support `S` and `|S|` tight pattern rows `T`; solve each square system.
fn enumerate_vertices(n: usize, pats: &[Vec<bool>]) -> GameSolution {
    let m = pats.len();
    let mut best = GameSolution {
        value: f64::INFINITY,
        input: vec![1.0 / n as f64; n],
    };
    for k in 1..=n.min(m) {
        for s in subsets(n, k) {
            for t in subsets(m, k) {
                // unknowns: P_S (k of them) and the game value
                let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
                let mut b = DVector::<f64>::zeros(k + 1);
                for (r, &y) in t.iter().enumerate() {
                    for (c, &x) in s.iter().enumerate() {
                        if pats[y][x] {
                            a[(r, c)] = 1.0;
                        }
                    }
                    a[(r, k)] = -1.0;
                }
                for c in 0..k {
                    a[(k, c)] = 1.0;
                }
                b[k] = 1.0;
                let Some(sol) = a.lu().solve(&b) else {
                    continue;
                };
                if sol.iter().take(k).any(|&p| p < -FEAS_TOL) {
                    continue;
                }
                let value = sol[k];
                if value >= best.value {
                    continue;
                }
                let mut input = vec![0.0; n];
                for (c, &x) in s.iter().enumerate() {
                    input[x] = sol[c].max(0.0);
                }
                let feasible = pats.iter().all(|row| {
                    row.iter().zip(&input).map(|(&on, &p)| if on { p } else { 0.0 }).sum::<f64>()
                        <= value + FEAS_TOL
                });
                if feasible {
                    best = GameSolution { value, input };
                }
            }
        }
    }
    best
}

fn solve_lp(n: usize, pats: &[Vec<bool>]) -> GameSolution {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n).map(|_| problem.add_var(0.0, (0.0, 1.0))).collect();
    let t = problem.add_var(1.0, (0.0, 1.0));
    problem.add_constraint(vars.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
    for row in pats {
        let mut expr: Vec<_> = vars
            .iter()
            .zip(row)
            .filter(|(_, &on)| on)
            .map(|(&v, _)| (v, 1.0))
            .collect();
        expr.push((t, -1.0));
        problem.add_constraint(expr, ComparisonOp::Le, 0.0);
    }
    let sol = problem.solve().expect("support game LP is feasible and bounded");
    let input: Vec<f64> = vars.iter().map(|&v| sol[v].max(0.0)).collect();
    let s: f64 = input.iter().sum();
    GameSolution {
        value: sol.objective(),
        input: input.into_iter().map(|p| p / s).collect(),
    }
}
