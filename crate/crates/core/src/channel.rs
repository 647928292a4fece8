//! Finite-alphabet probability primitives.
//!
//! A [`Distribution`] is a probability vector on `{0, .., n-1}` and a
//! [`Channel`] a row-stochastic matrix `W(y|x)`. Both are validated once at
//! construction (tolerance [`STOCHASTIC_TOL`]) and renormalized exactly, so
//! every later computation can assume exact stochasticity.
//!
//! All logarithms are natural; information is measured in nats. Terms of the
//! form `0 · ln(0 / a)` are taken to be zero before summation.

use std::fmt;

use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;

/// Allowed deviation of a row sum from one.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Entries above `-NEGATIVE_TOL` are clamped to zero; below it they are rejected.
pub const NEGATIVE_TOL: f64 = 1e-12;

fn normalize(weights: &[f64], what: &str) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::Validation(format!("{what} is empty")));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::Validation(format!("{what} entry {i} is not finite")));
        }
        if w < -NEGATIVE_TOL {
            return Err(Error::Validation(format!(
                "{what} entry {i} is negative ({w})"
            )));
        }
    }
    let clamped: Vec<f64> = weights.iter().map(|&w| w.max(0.0)).collect();
    let sum: f64 = clamped.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Validation(format!("{what} sums to {sum}, not 1")));
    }
    Ok(clamped.into_iter().map(|w| w / sum).collect())
}

/// Probability vector on a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Ok(Distribution {
            weights: normalize(&weights, "distribution")?,
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1, "alphabet size must be at least 1");
        Distribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n);
        let mut weights = vec![0.0; n];
        weights[at] = 1.0;
        Distribution { weights }
    }

    /// Builds a distribution from arbitrary nonnegative weights by dividing by their sum.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Validation(
                "weights must be finite, nonnegative and not all zero".into(),
            ));
        }
        Ok(Distribution {
            weights: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    /// Uniformly distributed point of the simplex (flat Dirichlet).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let weights: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        Distribution::from_unnormalized(weights).expect("exponential draws are positive")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
    }

    pub fn entropy(&self) -> f64 {
        -self
            .weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| w * w.ln())
            .sum::<f64>()
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

/// `D(p || q)` for raw probability slices; `+∞` when `p` is not absolutely
/// continuous with respect to `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).ln();
        }
    }
    d.max(0.0)
}

/// Row-stochastic matrix `W(y|x)`, stored row-major.
#[derive(Clone, PartialEq)]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    entries: Vec<f64>,
}

impl fmt::Debug for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// Validates a real matrix as a channel.
///
/// Tiny negative entries (above `-1e-12`) are clamped to zero and rows whose
/// sum is within `1e-9` of one are renormalized exactly.
pub fn make_channel(rows: &[Vec<f64>]) -> Result<Channel> {
    if rows.is_empty() {
        return Err(Error::Validation("channel has no rows".into()));
    }
    let outputs = rows[0].len();
    if outputs == 0 {
        return Err(Error::Validation("channel has no output symbols".into()));
    }
    let mut entries = Vec::with_capacity(rows.len() * outputs);
    for (x, row) in rows.iter().enumerate() {
        if row.len() != outputs {
            return Err(Error::Validation(format!(
                "row {x} has {} entries, expected {outputs}",
                row.len()
            )));
        }
        let row = normalize(row, &format!("row {x}"))?;
        entries.extend(row);
    }
    Ok(Channel {
        inputs: rows.len(),
        outputs,
        entries,
    })
}

impl Channel {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        make_channel(rows)
    }

    /// Builds a channel from rows that are already exactly stochastic.
    pub(crate) fn from_flat_unchecked(inputs: usize, outputs: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), inputs * outputs);
        Channel {
            inputs,
            outputs,
            entries,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.outputs + y]
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.outputs)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.entries.iter().all(|&w| w > 0.0)
    }

    /// Channel whose every row equals `q`.
    pub fn constant(inputs: usize, q: &Distribution) -> Self {
        let mut entries = Vec::with_capacity(inputs * q.len());
        for _ in 0..inputs {
            entries.extend_from_slice(q.as_slice());
        }
        Channel::from_flat_unchecked(inputs, q.len(), entries)
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        check_probability(p, "bsc")?;
        make_channel(&[vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel; outputs are `0`, erasure, `1`.
    pub fn bec(p: f64) -> Result<Self> {
        check_probability(p, "bec")?;
        make_channel(&[vec![1.0 - p, p, 0.0], vec![0.0, p, 1.0 - p]])
    }

    /// Z-channel: input 0 is noiseless, input 1 is received as 0 with probability `p`.
    pub fn z_channel(p: f64) -> Result<Self> {
        check_probability(p, "z")?;
        make_channel(&[vec![1.0, 0.0], vec![p, 1.0 - p]])
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("identity channel needs n >= 1".into()));
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        make_channel(&rows)
    }

    /// `inputs × outputs` channel whose rows are all uniform.
    pub fn useless(inputs: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Validation("useless channel needs nonempty alphabets".into()));
        }
        Ok(Channel::constant(inputs, &Distribution::uniform(outputs)))
    }

    /// Rows drawn independently and uniformly from the output simplex.
    pub fn random<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let mut entries = Vec::with_capacity(inputs * outputs);
        for _ in 0..inputs {
            entries.extend(Distribution::random(outputs, rng).into_vec());
        }
        Channel::from_flat_unchecked(inputs, outputs, entries)
    }

    /// Relabels symbols: row `x` of the result is row `input_perm[x]` of `self`
    /// and column `y` is column `output_perm[y]`.
    pub fn permuted(&self, input_perm: &[usize], output_perm: &[usize]) -> Self {
        assert_eq!(input_perm.len(), self.inputs);
        assert_eq!(output_perm.len(), self.outputs);
        let mut entries = Vec::with_capacity(self.entries.len());
        for &x in input_perm {
            for &y in output_perm {
                entries.push(self.get(x, y));
            }
        }
        Channel::from_flat_unchecked(self.inputs, self.outputs, entries)
    }

    /// Short stable identifier derived from the exact matrix entries.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.inputs as u64).to_le_bytes());
        h.update((self.outputs as u64).to_le_bytes());
        for w in &self.entries {
            h.update(w.to_bits().to_le_bytes());
        }
        let out = h.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Size of a maximum matching in the bipartite graph `x — y` with edges
    /// where `W(y|x) > 0`. Its logarithm is the largest mutual information any
    /// channel supported inside `W`'s support can carry.
    pub fn support_matching_size(&self) -> usize {
        let mut match_of_y: Vec<Option<usize>> = vec![None; self.outputs];
        let mut size = 0;
        for x in 0..self.inputs {
            let mut seen = vec![false; self.outputs];
            if self.augment(x, &mut seen, &mut match_of_y) {
                size += 1;
            }
        }
        size
    }

    fn augment(&self, x: usize, seen: &mut [bool], match_of_y: &mut [Option<usize>]) -> bool {
        for y in 0..self.outputs {
            if self.get(x, y) > 0.0 && !seen[y] {
                seen[y] = true;
                let free = match match_of_y[y] {
                    None => true,
                    Some(other) => self.augment(other, seen, match_of_y),
                };
                if free {
                    match_of_y[y] = Some(x);
                    return true;
                }
            }
        }
        false
    }
}

fn check_probability(p: f64, family: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{family} parameter {p} is not in [0, 1]"
        )))
    }
}

fn check_dims(p: &Distribution, v: &Channel) -> Result<()> {
    if p.len() != v.inputs() {
        return Err(Error::DimensionMismatch {
            what: "input distribution length vs channel inputs",
            expected: v.inputs(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Output law `q(y) = Σ_x P(x) V(y|x)`.
pub fn output_distribution(p: &Distribution, v: &Channel) -> Result<Distribution> {
    check_dims(p, v)?;
    let mut q = vec![0.0; v.outputs()];
    for (x, &px) in p.as_slice().iter().enumerate() {
        if px > 0.0 {
            for (qy, &vy) in q.iter_mut().zip(v.row(x)) {
                *qy += px * vy;
            }
        }
    }
    // Renormalize away rounding so the result is exactly stochastic.
    Ok(Distribution::from_unnormalized(q).expect("output law has positive mass"))
}

/// `I(P; V)` in nats.
pub fn mutual_information(p: &Distribution, v: &Channel) -> Result<f64> {
    let q = output_distribution(p, v)?;
    let mut total = 0.0;
    for (x, &px) in p.as_slice().iter().enumerate() {
        if px > 0.0 {
            total += px * kl_divergence(v.row(x), q.as_slice());
        }
    }
    Ok(total.max(0.0))
}

/// Conditional divergence `D(V || W | P) = Σ_x P(x) D(V(·|x) || W(·|x))`.
pub fn conditional_divergence(v: &Channel, w: &Channel, p: &Distribution) -> Result<ExtReal> {
    if v.inputs() != w.inputs() || v.outputs() != w.outputs() {
        return Err(Error::DimensionMismatch {
            what: "channel shapes",
            expected: w.inputs() * w.outputs(),
            got: v.inputs() * v.outputs(),
        });
    }
    check_dims(p, w)?;
    let mut total = 0.0;
    for (x, &px) in p.as_slice().iter().enumerate() {
        if px > 0.0 {
            let d = kl_divergence(v.row(x), w.row(x));
            if d.is_infinite() {
                return Ok(ExtReal::Infinite);
            }
            total += px * d;
        }
    }
    Ok(ExtReal::Finite(total.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hb(p: f64) -> f64 {
        if p == 0.0 || p == 1.0 {
            0.0
        } else {
            -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
        }
    }

    #[test]
    fn make_channel_accepts_identity_and_bsc() {
        let id = make_channel(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(id, Channel::identity(2).unwrap());
        let bsc = make_channel(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        assert_eq!(bsc.get(1, 0), 0.1);
    }

    #[test]
    fn make_channel_names_the_bad_row() {
        let err = make_channel(&[vec![0.5, 0.6], vec![0.2, 0.8]]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 0"), "{msg}");
        assert!(msg.contains("1.1"), "{msg}");
    }

    #[test]
    fn make_channel_clamps_and_rejects_negatives() {
        let c = make_channel(&[vec![1.0 + 5e-13, -5e-13]]).unwrap();
        assert_eq!(c.get(0, 1), 0.0);
        assert!(make_channel(&[vec![1.1, -0.1]]).is_err());
        assert!(make_channel(&[vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(make_channel(&[]).is_err());
    }

    #[test]
    fn output_distribution_examples() {
        let u = Distribution::uniform(2);
        let q = output_distribution(&u, &Channel::identity(2).unwrap()).unwrap();
        assert_eq!(q.as_slice(), &[0.5, 0.5]);
        let w = make_channel(&[vec![0.2, 0.3, 0.5], vec![0.6, 0.1, 0.3]]).unwrap();
        let q = output_distribution(&Distribution::point_mass(2, 0), &w).unwrap();
        assert_eq!(q.as_slice(), w.row(0));
        let q = output_distribution(&u, &Channel::bsc(0.1).unwrap()).unwrap();
        assert_abs_diff_eq!(q[0], 0.5, epsilon = 1e-15);
        assert!(output_distribution(&Distribution::uniform(3), &w).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let u = Distribution::uniform(2);
        let i = mutual_information(&u, &Channel::identity(2).unwrap()).unwrap();
        assert_abs_diff_eq!(i, std::f64::consts::LN_2, epsilon = 1e-15);
        let flat = Channel::useless(3, 4).unwrap();
        assert_eq!(mutual_information(&Distribution::uniform(3), &flat).unwrap(), 0.0);
        let i = mutual_information(&u, &Channel::bsc(0.1).unwrap()).unwrap();
        let oracle = std::f64::consts::LN_2 - hb(0.1);
        assert_abs_diff_eq!(i, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(i, 0.368064, epsilon = 1e-6);
    }

    #[test]
    fn conditional_divergence_examples() {
        let u = Distribution::uniform(2);
        let w = Channel::bsc(0.1).unwrap();
        assert_eq!(conditional_divergence(&w, &w, &u).unwrap(), ExtReal::Finite(0.0));
        let v = Channel::bsc(0.2).unwrap();
        let d = conditional_divergence(&v, &w, &u).unwrap().finite().unwrap();
        // scalar binary KL between Bernoulli(0.2) and Bernoulli(0.1)
        let oracle = 0.2 * (0.2f64 / 0.1).ln() + 0.8 * (0.8f64 / 0.9).ln();
        assert_abs_diff_eq!(d, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.044403, epsilon = 1e-6);
        let id = Channel::identity(2).unwrap();
        assert_eq!(conditional_divergence(&w, &id, &u).unwrap(), ExtReal::Infinite);
        // support violation on an input of zero probability does not count
        let p = Distribution::new(vec![1.0, 0.0]).unwrap();
        let v2 = make_channel(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(conditional_divergence(&v2, &id, &p).unwrap(), ExtReal::Finite(0.0));
    }

    #[test]
    fn matching_sizes() {
        assert_eq!(Channel::identity(3).unwrap().support_matching_size(), 3);
        assert_eq!(Channel::useless(3, 2).unwrap().support_matching_size(), 2);
        assert_eq!(Channel::z_channel(0.5).unwrap().support_matching_size(), 2);
        let star = make_channel(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(star.support_matching_size(), 2);
    }

    #[test]
    fn digest_is_stable_and_discriminating() {
        let a = Channel::bsc(0.1).unwrap();
        assert_eq!(a.digest(), Channel::bsc(0.1).unwrap().digest());
        assert_ne!(a.digest(), Channel::bsc(0.2).unwrap().digest());
        assert_eq!(a.digest().len(), 16);
    }

    fn arb_case() -> impl Strategy<Value = (Distribution, Channel, Channel, u64)> {
        (1usize..5, 1usize..5, any::<u64>()).prop_map(|(nx, ny, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = Distribution::random(nx, &mut rng);
            let v = Channel::random(nx, ny, &mut rng);
            let w = Channel::random(nx, ny, &mut rng);
            (p, v, w, seed)
        })
    }

    proptest! {
        #[test]
        fn measures_are_nonnegative((p, v, w, _) in arb_case()) {
            let i = mutual_information(&p, &v).unwrap();
            prop_assert!(i >= 0.0);
            let bound = (p.len() as f64).ln().min((v.outputs() as f64).ln());
            prop_assert!(i <= bound + 1e-12);
            let d = conditional_divergence(&v, &w, &p).unwrap().finite().unwrap();
            prop_assert!(d >= 0.0);
        }

        #[test]
        fn information_is_divergence_from_the_output_law((p, v, _, _) in arb_case()) {
            let q = output_distribution(&p, &v).unwrap();
            let rank_one = Channel::constant(v.inputs(), &q);
            let i = mutual_information(&p, &v).unwrap();
            let d = conditional_divergence(&v, &rank_one, &p).unwrap().finite().unwrap();
            prop_assert!((i - d).abs() <= 1e-12);
        }

        #[test]
        fn measures_are_permutation_invariant((p, v, w, seed) in arb_case()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let mut ip: Vec<usize> = (0..v.inputs()).collect();
            let mut op: Vec<usize> = (0..v.outputs()).collect();
            use rand::seq::SliceRandom;
            ip.shuffle(&mut rng);
            op.shuffle(&mut rng);
            let pp = Distribution::new(ip.iter().map(|&x| p[x]).collect()).unwrap();
            let vp = v.permuted(&ip, &op);
            let wp = w.permuted(&ip, &op);
            let i0 = mutual_information(&p, &v).unwrap();
            let i1 = mutual_information(&pp, &vp).unwrap();
            prop_assert!((i0 - i1).abs() <= 1e-12);
            let d0 = conditional_divergence(&v, &w, &p).unwrap().to_f64();
            let d1 = conditional_divergence(&vp, &wp, &pp).unwrap().to_f64();
            prop_assert!((d0 - d1).abs() <= 1e-12);
        }
    }
}
