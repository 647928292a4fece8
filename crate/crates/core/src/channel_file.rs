//! Channel files, builtin channel specs and corpus size lists.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};

/// On-disk channel description (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub input_size: usize,
    pub output_size: usize,
    pub rows: Vec<Vec<f64>>,
}

impl ChannelFile {
    pub fn from_channel(w: &Channel, name: Option<String>) -> Self {
        ChannelFile {
            name,
            input_size: w.inputs(),
            output_size: w.outputs(),
            rows: w.to_rows(),
        }
    }

    /// Validates the declared sizes and the rows.
    pub fn to_channel(&self) -> Result<Channel> {
        if self.rows.len() != self.input_size {
            return Err(Error::DimensionMismatch {
                what: "rows vs input_size",
                expected: self.input_size,
                got: self.rows.len(),
            });
        }
        for row in &self.rows {
            if row.len() != self.output_size {
                return Err(Error::DimensionMismatch {
                    what: "row length vs output_size",
                    expected: self.output_size,
                    got: row.len(),
                });
            }
        }
        Channel::new(&self.rows)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("channel file serializes");
        s.push('\n');
        s
    }
}

/// Parses a JSON channel file into its label and validated channel.
pub fn parse_channel_file(text: &str) -> Result<(Option<String>, Channel)> {
    let file: ChannelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let w = file.to_channel()?;
    Ok((file.name, w))
}

fn parse_prob(s: &str, spec: &str) -> Result<f64> {
    let p: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("`{spec}`: `{s}` is not a number")))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!("`{spec}`: parameter {p} is not in [0, 1]")));
    }
    Ok(p)
}

fn parse_count(s: &str, spec: &str) -> Result<usize> {
    let n: usize = s
        .parse()
        .map_err(|_| Error::Parse(format!("`{spec}`: `{s}` is not a positive integer")))?;
    if n == 0 || n > 1024 {
        return Err(Error::Validation(format!("`{spec}`: size {n} is not in 1..=1024")));
    }
    Ok(n)
}

/// Parses `NxM` into `(N, M)`.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Parse(format!("`{s}` is not of the form NxM")))?;
    Ok((parse_count(a.trim(), s)?, parse_count(b.trim(), s)?))
}

/// Whether `spec` names a builtin family rather than a file.
pub fn is_builtin_spec(spec: &str) -> bool {
    matches!(
        spec.split(':').next(),
        Some("bsc" | "bec" | "z" | "identity" | "useless" | "random")
    ) && spec.contains(':')
}

/// Builds a builtin channel: `bsc:p`, `bec:p`, `z:p`, `identity:n`,
/// `useless:n:m` or `random:NxM` (rows drawn from the seeded source).
pub fn parse_channel_source(spec: &str, seed: u64) -> Result<Channel> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["bsc", p] => Channel::bsc(parse_prob(p, spec)?),
        ["bec", p] => Channel::bec(parse_prob(p, spec)?),
        ["z", p] => Channel::z_channel(parse_prob(p, spec)?),
        ["identity", n] => Channel::identity(parse_count(n, spec)?),
        ["useless", n, m] => Channel::useless(parse_count(n, spec)?, parse_count(m, spec)?),
        ["random", size] => {
            let (n, m) = parse_size(size)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(Channel::random(n, m, &mut rng))
        }
        _ => Err(Error::Parse(format!("unknown channel spec `{spec}`"))),
    }
}

/// Parses a comma-separated list of sizes such as `2x2,2x3,3x3`.
pub fn parse_corpus_sizes(s: &str) -> Result<Vec<(usize, usize)>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let sizes = s.split(',').map(|t| parse_size(t.trim())).collect::<Result<Vec<_>>>()?;
    for &(n, m) in &sizes {
        if n > 16 || m > 16 {
            return Err(Error::Validation(format!("corpus size {n}x{m} exceeds 16x16")));
        }
    }
    Ok(sizes)
}
