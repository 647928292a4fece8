//! Numerical checks of the relations between the Gallager-form and the
//! divergence-form exponents, run over a corpus of channels.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{Channel, Distribution};
use crate::channel_file::parse_channel_file;
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::gallager::{f_delta, gallager_j, GallagerSolver, DEFAULT_DELTA_CAP};
use crate::kl::{EVariant, KlSolver, VSolverConfig};
use crate::optim::{grid_then_golden, linspace};
use crate::params::{DeltaParam, RatePoint};

/// Smallest entry kept by the generic random corpus.
pub const MIN_ENTRY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub solver: VSolverConfig,
    /// points of each rate grid
    pub rate_points: usize,
    /// points of the δ grid on `[-1, 0]`
    pub delta_points: usize,
    /// random `(δ, R, P)` samples per channel for pointwise checks
    pub samples: usize,
    /// equalities between two optimized quantities
    pub cross_tol: f64,
    /// monotonicity, convexity and Lipschitz checks on one curve
    pub shape_tol: f64,
    /// `G̃_δ + δR + K_δ = 0`
    pub affine_tol: f64,
    /// pointwise `F̃_δ ≥ F_δ`
    pub dominance_tol: f64,
    /// `G̃_δ = G_δ` and `Ẽ_δ = E_δ`
    pub tilted_tol: f64,
    /// quantities that vanish identically at `δ = 0`
    pub zero_tol: f64,
    /// exponents at `R = 0`
    pub origin_tol: f64,
    /// values above this count as positive in threshold checks
    pub positivity_floor: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            solver: VSolverConfig::default(),
            rate_points: 21,
            delta_points: 101,
            samples: 8,
            cross_tol: 1e-3,
            shape_tol: 1e-6,
            affine_tol: 1e-6,
            dominance_tol: 1e-8,
            tilted_tol: 1e-4,
            zero_tol: 1e-12,
            origin_tol: 1e-9,
            positivity_floor: 1e-9,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.rate_points < 3 || self.delta_points < 2 {
            return Err(Error::Validation("need at least 3 rate points and 2 delta points".into()));
        }
        Ok(())
    }
}

/// Where the worst deviation of a check occurred.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<f64>>,
}

impl Witness {
    fn at(rate: f64) -> Self {
        Witness {
            rate: Some(rate),
            ..Default::default()
        }
    }

    fn at_delta(rate: f64, delta: f64) -> Self {
        Witness {
            rate: Some(rate),
            delta: Some(delta),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check_id: String,
    pub channel: String,
    pub channel_digest: String,
    pub pass: bool,
    pub worst_deviation: ExtReal,
    pub tolerance: f64,
    pub witness: Witness,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSummary {
    pub label: String,
    pub digest: String,
    pub inputs: usize,
    pub outputs: usize,
    pub strictly_positive: bool,
    pub capacity: f64,
    pub zero_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvalidEntry {
    pub label: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusDescription {
    pub sizes: Vec<String>,
    pub count: usize,
    pub builtins: bool,
    pub sparse_per_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub channels: usize,
    pub invalid: usize,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub corpus: CorpusDescription,
    pub seed: u64,
    pub config: VerifyConfig,
    pub channels: Vec<ChannelSummary>,
    pub invalid: Vec<InvalidEntry>,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
}

impl VerificationReport {
    /// No failed check and no invalid corpus entry.
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0 && self.summary.invalid == 0
    }

    /// Pretty JSON with keys in declaration order.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn checks_named<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a CheckResult> + 'a {
        self.checks.iter().filter(move |c| c.check_id == id)
    }
}

/// One corpus member: a channel or the reason it could not be built.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub label: String,
    pub channel: std::result::Result<Channel, String>,
}

impl CorpusEntry {
    pub fn valid(label: impl Into<String>, w: Channel) -> Self {
        CorpusEntry {
            label: label.into(),
            channel: Ok(w),
        }
    }
}

/// Random channel with rows uniform on the simplex and every entry at least
/// [`MIN_ENTRY`] (rejection sampling).
pub fn random_generic_channel<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Channel {
    loop {
        let w = Channel::random(inputs, outputs, rng);
        if w.rows().flatten().all(|&v| v >= MIN_ENTRY) {
            return w;
        }
    }
}

/// Random channel with exact zeros: each entry is dropped with probability
/// 0.3, keeping at least one entry per row.
pub fn random_sparse_channel<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Channel {
    let rows: Vec<Vec<f64>> = random_generic_channel(inputs, outputs, rng)
        .to_rows()
        .into_iter()
        .map(|mut row| {
            let keep = rng.random_range(0..outputs);
            for (y, v) in row.iter_mut().enumerate() {
                if y != keep && rng.random::<f64>() < 0.3 {
                    *v = 0.0;
                }
            }
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        })
        .collect();
    Channel::new(&rows).expect("renormalized rows are stochastic")
}

/// Builtin families added to every nonempty generated corpus.
pub fn builtin_corpus() -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    let mut add = |label: String, w: Result<Channel>| {
        out.push(CorpusEntry {
            label,
            channel: w.map_err(|e| e.to_string()),
        })
    };
    for p in [0.0, 0.01, 0.1, 0.25, 0.5] {
        add(format!("bsc:{p}"), Channel::bsc(p));
    }
    for p in [0.0, 0.1, 0.5, 0.9] {
        add(format!("bec:{p}"), Channel::bec(p));
    }
    for p in [0.1, 0.5] {
        add(format!("z:{p}"), Channel::z_channel(p));
    }
    for n in [2, 3] {
        add(format!("identity:{n}"), Channel::identity(n));
    }
    add("useless:2:2".into(), Channel::useless(2, 2));
    add("useless:3:2".into(), Channel::useless(3, 2));
    out
}

/// `count` generic random channels per size (in the order given, one seeded
/// stream), then `sparse_per_size` sparse channels per size, then the
/// builtins when `builtins` is set and the corpus is otherwise nonempty.
pub fn generate_corpus(
    seed: u64,
    sizes: &[(usize, usize)],
    count: usize,
    sparse_per_size: usize,
    builtins: bool,
) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &(n, m) in sizes {
        for k in 0..count {
            out.push(CorpusEntry::valid(
                format!("random-{n}x{m}-{k}"),
                random_generic_channel(n, m, &mut rng),
            ));
        }
    }
    for &(n, m) in sizes {
        for k in 0..sparse_per_size {
            out.push(CorpusEntry::valid(
                format!("sparse-{n}x{m}-{k}"),
                random_sparse_channel(n, m, &mut rng),
            ));
        }
    }
    if builtins && !out.is_empty() {
        out.extend(builtin_corpus());
    }
    out
}

/// Every `*.json` file of `dir`, sorted by name; unreadable or invalid files
/// become invalid entries.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<CorpusEntry>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<_> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let label = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let channel = std::fs::read_to_string(&p)
                .map_err(|e| e.to_string())
                .and_then(|text| parse_channel_file(&text).map(|(_, w)| w).map_err(|e| e.to_string()));
            CorpusEntry { label, channel }
        })
        .collect())
}

struct Acc {
    worst: f64,
    witness: Witness,
    error: Option<String>,
}

impl Acc {
    fn new() -> Self {
        Acc {
            worst: 0.0,
            witness: Witness::default(),
            error: None,
        }
    }

    fn see(&mut self, dev: f64, witness: impl FnOnce() -> Witness) {
        let dev = if dev.is_nan() { f64::INFINITY } else { dev };
        if self.error.is_none() && dev > self.worst {
            self.worst = dev;
            self.witness = witness();
        }
    }

    fn fail(&mut self, e: &Error, witness: Witness) {
        if self.error.is_none() {
            self.error = Some(e.to_string());
            self.worst = f64::INFINITY;
            self.witness = witness;
        }
    }
}

struct Ctx<'w> {
    w: &'w Channel,
    label: String,
    digest: String,
    cfg: VerifyConfig,
    kl: KlSolver<'w>,
    gal: GallagerSolver<'w>,
    rng: ChaCha8Rng,
    capacity: f64,
    zero_rate: f64,
    converse_rates: Vec<f64>,
    dk: Vec<Result<f64>>,
    g: Vec<Result<f64>>,
    error_rates: Vec<f64>,
    esp: Vec<Result<ExtReal>>,
    e: Vec<Result<ExtReal>>,
}

fn converse_step(ctx: &Ctx) -> f64 {
    ctx.converse_rates[1] - ctx.converse_rates[0]
}

impl<'w> Ctx<'w> {
    fn result(&self, id: &str, acc: Acc, tolerance: f64, note: Option<String>) -> CheckResult {
        let note = match (acc.error, note) {
            (Some(e), _) => Some(format!("solver error: {e}")),
            (None, n) => n,
        };
        CheckResult {
            check_id: id.to_string(),
            channel: self.label.clone(),
            channel_digest: self.digest.clone(),
            pass: acc.worst <= tolerance,
            worst_deviation: ExtReal::from_f64(acc.worst).unwrap_or(ExtReal::Infinite),
            tolerance,
            witness: acc.witness,
            note,
        }
    }

    fn random_input(&mut self) -> Distribution {
        Distribution::random(self.w.inputs(), &mut self.rng)
    }
}

fn digest_seed(seed: u64, digest: &str) -> u64 {
    let head = u64::from_str_radix(&digest[..16.min(digest.len())], 16).unwrap_or(0);
    seed ^ head
}

fn check_capacity(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    let ln_min = (ctx.w.inputs().min(ctx.w.outputs()) as f64).ln();
    acc.see(-ctx.capacity, Witness::default);
    acc.see(ctx.zero_rate - ctx.capacity, Witness::default);
    acc.see(ctx.capacity - ln_min, Witness::default);
    acc.see(-ctx.zero_rate, Witness::default);
    let note = format!("C = {:.9}, C0 = {:.9}", ctx.capacity, ctx.zero_rate);
    ctx.result("capacity_consistency", acc, 1e-8, Some(note))
}

fn check_exact_zeros(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    let zero = DeltaParam::ZERO;
    let mut inputs = vec![Distribution::uniform(ctx.w.inputs())];
    for _ in 0..ctx.cfg.samples {
        let p = ctx.random_input();
        inputs.push(p);
    }
    let rate = ctx.converse_rates[ctx.converse_rates.len() / 2];
    for p in &inputs {
        let wit = || Witness {
            rate: Some(rate),
            delta: Some(0.0),
            input: Some(p.as_slice().to_vec()),
            ..Default::default()
        };
        let vals = [
            gallager_j(zero, p, ctx.w),
            f_delta(zero, RatePoint::new(rate).expect("grid rate"), p, ctx.w),
            ctx.kl.tilde_f(0.0, rate, p),
        ];
        for v in vals {
            match v {
                Ok(v) => acc.see(v.abs(), wit),
                Err(e) => acc.fail(&e, wit()),
            }
        }
    }
    let vals = [
        ctx.gal.min_j(0.0),
        ctx.gal.max_j(0.0),
        ctx.kl.tilde_g(0.0, rate),
        ctx.kl.tilde_e(0.0, rate, EVariant::MaxOverInputs),
        ctx.kl.tilde_e(0.0, rate, EVariant::MinOverInputs),
        ctx.kl.k_delta(0.0),
    ];
    for v in vals {
        match v {
            Ok(v) => acc.see(v.abs(), || Witness::at_delta(rate, 0.0)),
            Err(e) => acc.fail(&e, Witness::at_delta(rate, 0.0)),
        }
    }
    let tol = ctx.cfg.zero_tol;
    ctx.result("exact_zeros", acc, tol, None)
}

fn check_origin(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    for v in [&ctx.dk[0], &ctx.g[0]] {
        match v {
            Ok(v) => acc.see(v.abs(), || Witness::at(0.0)),
            Err(e) => acc.fail(e, Witness::at(0.0)),
        }
    }
    match ctx.kl.sphere_packing_sc(0.0) {
        Ok(v) => acc.see(v.to_f64().abs(), || Witness::at(0.0)),
        Err(e) => acc.fail(&e, Witness::at(0.0)),
    }
    let tol = ctx.cfg.origin_tol;
    ctx.result("zero_rate_origin", acc, tol, None)
}

fn check_converse_equivalence(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    for (i, &r) in ctx.converse_rates.iter().enumerate() {
        match (&ctx.g[i], &ctx.dk[i]) {
            (Ok(g), Ok(d)) => acc.see((g - d).abs(), || Witness::at(r)),
            (Err(e), _) | (_, Err(e)) => acc.fail(e, Witness::at(r)),
        }
    }
    let tol = ctx.cfg.cross_tol;
    ctx.result("strong_converse_equivalence", acc, tol, None)
}

fn check_error_equivalence(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    for (i, &r) in ctx.error_rates.iter().enumerate() {
        match (&ctx.e[i], &ctx.esp[i]) {
            (Ok(a), Ok(b)) => acc.see(a.deviation(b), || Witness::at(r)),
            (Err(e), _) | (_, Err(e)) => acc.fail(e, Witness::at(r)),
        }
    }
    let tol = ctx.cfg.cross_tol;
    ctx.result("error_exponent_equivalence", acc, tol, None)
}

/// Rates of the converse grid where the constrained form is finite:
/// `R ≤ min(ln|X|, ln ν)`.
fn sphere_packing_domain(ctx: &Ctx) -> Vec<(usize, f64)> {
    let top = (ctx.w.inputs() as f64).ln().min(ctx.kl.max_reachable_information()) + 1e-12;
    ctx.converse_rates.iter().copied().enumerate().filter(|&(_, r)| r <= top).collect()
}

fn check_sphere_packing_identity(ctx: &mut Ctx) -> (CheckResult, Vec<(f64, Result<ExtReal>)>) {
    let mut acc = Acc::new();
    let mut curve = Vec::new();
    for (i, r) in sphere_packing_domain(ctx) {
        let sp = ctx.kl.sphere_packing_sc(r);
        match (&ctx.dk[i], &sp) {
            (Ok(d), Ok(s)) => acc.see(s.deviation(&ExtReal::Finite(*d)), || Witness::at(r)),
            (Err(e), _) | (_, Err(e)) => acc.fail(e, Witness::at(r)),
        }
        curve.push((r, sp));
    }
    let tol = ctx.cfg.cross_tol;
    let note = Some("compared on rates up to min(ln|X|, largest reachable I(P;V))".to_string());
    (ctx.result("sphere_packing_identity", acc, tol, note), curve)
}

fn check_large_rate_identity(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    let ln_x = (ctx.w.inputs() as f64).ln();
    for i in 0..ctx.converse_rates.len() {
        let r = ctx.converse_rates[i];
        if r < ln_x {
            continue;
        }
        match (&ctx.dk[i], ctx.kl.tilde_g(-1.0, r)) {
            (Ok(d), Ok(t)) => acc.see((d - t).abs(), || Witness::at_delta(r, -1.0)),
            (Err(e), _) => acc.fail(e, Witness::at(r)),
            (_, Err(e)) => acc.fail(&e, Witness::at(r)),
        }
    }
    let tol = ctx.cfg.cross_tol;
    ctx.result("large_rate_identity", acc, tol, None)
}

fn finite_curve(rates: &[f64], vals: &[Result<f64>]) -> std::result::Result<Vec<(f64, f64)>, (f64, Error)> {
    rates
        .iter()
        .zip(vals)
        .map(|(&r, v)| v.clone().map(|v| (r, v)).map_err(|e| (r, e)))
        .collect()
}

fn check_lipschitz(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    match finite_curve(&ctx.converse_rates, &ctx.dk) {
        Ok(c) => {
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    let dev = (c[i].1 - c[j].1).abs() - (c[i].0 - c[j].0).abs();
                    acc.see(dev, || Witness {
                        rate: Some(c[i].0),
                        other_rate: Some(c[j].0),
                        ..Default::default()
                    });
                }
            }
        }
        Err((r, e)) => acc.fail(&e, Witness::at(r)),
    }
    let tol = ctx.cfg.shape_tol;
    ctx.result("lipschitz", acc, tol, None)
}

/// Worst violation of monotonicity (`sign = 1` nondecreasing, `-1`
/// nonincreasing) and of midpoint convexity on a uniform grid.
fn shape_deviation(acc: &mut Acc, c: &[(f64, f64)], sign: f64) {
    for k in 1..c.len() {
        acc.see(sign * (c[k - 1].1 - c[k].1), || Witness {
            rate: Some(c[k - 1].0),
            other_rate: Some(c[k].0),
            ..Default::default()
        });
    }
    for k in 1..c.len().saturating_sub(1) {
        acc.see(2.0 * c[k].1 - c[k - 1].1 - c[k + 1].1, || Witness::at(c[k].0));
    }
}

fn check_converse_shape(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    match finite_curve(&ctx.converse_rates, &ctx.dk) {
        Ok(c) => shape_deviation(&mut acc, &c, 1.0),
        Err((r, e)) => acc.fail(&e, Witness::at(r)),
    }
    let tol = ctx.cfg.shape_tol;
    ctx.result("converse_shape", acc, tol, None)
}

fn check_error_shape(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    let lo = ctx.zero_rate + 0.01;
    let note = if ctx.capacity > lo {
        let rates = linspace(lo, ctx.capacity, ctx.cfg.rate_points);
        let mut c = Vec::new();
        for &r in &rates {
            match ctx.kl.sphere_packing_err(r) {
                Ok(ExtReal::Finite(v)) => c.push((r, v)),
                Ok(ExtReal::Infinite) => acc.see(f64::INFINITY, || Witness::at(r)),
                Err(e) => acc.fail(&e, Witness::at(r)),
            }
        }
        shape_deviation(&mut acc, &c, -1.0);
        None
    } else {
        Some("empty rate interval [C0 + 0.01, C]".to_string())
    };
    let tol = ctx.cfg.shape_tol;
    ctx.result("error_shape", acc, tol, note)
}

/// First grid rate with a positive value, compared with the capacity.
fn threshold_check(ctx: &Ctx, id: &str, curve: &[(f64, Result<f64>)], step: f64) -> CheckResult {
    let mut acc = Acc::new();
    let floor = ctx.cfg.positivity_floor;
    let mut first = None;
    for (r, v) in curve {
        match v {
            Ok(v) if *v > floor => {
                first.get_or_insert(*r);
            }
            Ok(_) => {}
            Err(e) => acc.fail(e, Witness::at(*r)),
        }
    }
    let last = curve.last().map_or(0.0, |c| c.0);
    let (dev, note) = match first {
        Some(r) => ((r - ctx.capacity).abs(), format!("first positive rate {r:.6}, capacity {:.6}", ctx.capacity)),
        None if last <= ctx.capacity + step => (0.0, "no grid rate beyond capacity + one step".to_string()),
        None => (f64::INFINITY, "no positive value on the grid".to_string()),
    };
    acc.see(dev, || Witness::at(first.unwrap_or(last)));
    ctx.result(id, acc, step, Some(note))
}

fn check_supporting_lines(ctx: &mut Ctx) -> (CheckResult, CheckResult) {
    let deltas = linspace(-1.0, 0.0, ctx.cfg.delta_points);
    let mut acc = Acc::new();
    let mut affine = Acc::new();
    let mut support = Vec::new();
    for i in 0..ctx.converse_rates.len() {
        let r = ctx.converse_rates[i];
        let dk = match &ctx.dk[i] {
            Ok(v) => *v,
            Err(e) => {
                acc.fail(e, Witness::at(r));
                continue;
            }
        };
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &d in &deltas {
            match ctx.kl.tilde_g(d, r) {
                Ok(t) => {
                    acc.see(t - dk, || Witness::at_delta(r, d));
                    if t > best.0 {
                        best = (t, d);
                    }
                }
                Err(e) => acc.fail(&e, Witness::at_delta(r, d)),
            }
        }
        acc.see(dk - best.0, || Witness::at_delta(r, best.1));
        support.push(format!("{r:.4}:{:.2}", best.1));
    }
    let stride = (deltas.len() / 10).max(1);
    for (k, &d) in deltas.iter().step_by(stride).enumerate() {
        let r = ctx.converse_rates[k % ctx.converse_rates.len()];
        match (ctx.kl.tilde_g(d, r), ctx.kl.k_delta(d)) {
            (Ok(t), Ok(kd)) => affine.see((t + d * r + kd).abs(), || Witness::at_delta(r, d)),
            (Err(e), _) | (_, Err(e)) => affine.fail(&e, Witness::at_delta(r, d)),
        }
    }
    let note = Some(format!("supporting delta per rate {}", support.join(" ")));
    let (ct, at) = (ctx.cfg.cross_tol, ctx.cfg.affine_tol);
    (
        ctx.result("supporting_lines", acc, ct, note),
        ctx.result("affine_representation", affine, at, None),
    )
}

fn check_tilted(ctx: &mut Ctx, error_side: bool) -> CheckResult {
    let mut acc = Acc::new();
    let top = (ctx.w.inputs() as f64).ln() + 0.5;
    for _ in 0..ctx.cfg.samples {
        let delta = if error_side {
            4.0 * ctx.rng.random::<f64>()
        } else {
            -ctx.rng.random::<f64>()
        };
        let rate = top * ctx.rng.random::<f64>();
        let p = ctx.random_input();
        let wit = || Witness {
            rate: Some(rate),
            delta: Some(delta),
            input: Some(p.as_slice().to_vec()),
            ..Default::default()
        };
        let f = f_delta(
            DeltaParam::new(delta).expect("sampled delta"),
            RatePoint::new(rate).expect("sampled rate"),
            &p,
            ctx.w,
        );
        match (f, ctx.kl.tilde_f(delta, rate, &p)) {
            (Ok(f), Ok(t)) => acc.see(f - t, wit),
            (Err(e), _) | (_, Err(e)) => acc.fail(&e, wit()),
        }
    }
    let id = if error_side { "tilted_error_dominance" } else { "tilted_dominance" };
    let tol = ctx.cfg.dominance_tol;
    ctx.result(id, acc, tol, None)
}

fn check_tilted_minimum(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    let deltas = linspace(-1.0, 0.0, 11);
    let rates = [0.0, ctx.converse_rates[ctx.converse_rates.len() - 1]];
    for &d in &deltas {
        for &r in &rates {
            let g = ctx.gal.min_j(d).map(|j| -d * r + j);
            match (g, ctx.kl.tilde_g(d, r)) {
                (Ok(g), Ok(t)) => acc.see((g - t).abs(), || Witness::at_delta(r, d)),
                (Err(e), _) | (_, Err(e)) => acc.fail(&e, Witness::at_delta(r, d)),
            }
        }
    }
    let tol = ctx.cfg.tilted_tol;
    ctx.result("tilted_minimum_equality", acc, tol, None)
}

fn check_tilted_error_equality(ctx: &mut Ctx) -> CheckResult {
    let deltas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let rates = [0.0, 0.5 * ctx.capacity, ctx.capacity];
    let mut accs = [Acc::new(), Acc::new()];
    for (acc, variant) in accs.iter_mut().zip([EVariant::MaxOverInputs, EVariant::MinOverInputs]) {
        for &d in &deltas {
            for &r in &rates {
                let e = ctx.gal.max_j(d).map(|j| -d * r + j);
                match (e, ctx.kl.tilde_e(d, r, variant)) {
                    (Ok(e), Ok(t)) => acc.see((e - t).abs(), || Witness::at_delta(r, d)),
                    (Err(e), _) | (_, Err(e)) => acc.fail(&e, Witness::at_delta(r, d)),
                }
            }
        }
    }
    let tol = ctx.cfg.tilted_tol;
    let [max_acc, min_acc] = accs;
    let describe = |name: &str, a: &Acc| {
        let verdict = if a.worst <= tol { "agrees" } else { "disagrees" };
        format!("{name} variant {verdict} (worst {:.3e})", a.worst)
    };
    let note = format!(
        "{}; {}",
        describe("max-over-inputs", &max_acc),
        describe("min-over-inputs", &min_acc)
    );
    let best = if min_acc.worst < max_acc.worst { min_acc } else { max_acc };
    ctx.result("tilted_error_equality", best, tol, Some(note))
}

fn check_error_supporting_lines(ctx: &mut Ctx) -> CheckResult {
    let mut acc = Acc::new();
    let mut grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let mut d = 1.0;
    while d * 1.25 < DEFAULT_DELTA_CAP {
        d *= 1.25;
        grid.push(d);
    }
    grid.push(DEFAULT_DELTA_CAP);
    let mut phi = Vec::with_capacity(grid.len());
    for &d in &grid {
        match ctx.kl.tilde_e(d, 0.0, EVariant::MaxOverInputs) {
            Ok(v) => phi.push(v),
            Err(e) => {
                acc.fail(&e, Witness::at_delta(0.0, d));
                phi.push(f64::NEG_INFINITY);
            }
        }
    }
    for i in 0..ctx.error_rates.len() {
        let r = ctx.error_rates[i];
        let target = match &ctx.esp[i] {
            Ok(ExtReal::Finite(v)) => *v,
            Ok(ExtReal::Infinite) => continue,
            Err(e) => {
                acc.fail(e, Witness::at(r));
                continue;
            }
        };
        let values: Vec<f64> = grid.iter().zip(&phi).map(|(d, p)| -d * r + p).collect();
        let mut err = None;
        let kl = &mut ctx.kl;
        let (d, v) = grid_then_golden(
            &grid,
            &values,
            |d| match kl.tilde_e(d, r, EVariant::MaxOverInputs) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            1e-6,
        );
        match err {
            Some(e) => acc.fail(&e, Witness::at(r)),
            None => acc.see((v - target).abs(), || Witness::at_delta(r, d)),
        }
    }
    let tol = ctx.cfg.cross_tol;
    ctx.result("error_supporting_lines", acc, tol, None)
}

fn channel_summary(label: &str, w: &Channel, capacity: f64, zero_rate: f64) -> ChannelSummary {
    ChannelSummary {
        label: label.to_string(),
        digest: w.digest(),
        inputs: w.inputs(),
        outputs: w.outputs(),
        strictly_positive: w.is_strictly_positive(),
        capacity,
        zero_rate,
    }
}

/// Runs every check on one channel.
pub fn verify_channel(label: &str, w: &Channel, seed: u64, cfg: &VerifyConfig) -> Result<(ChannelSummary, Vec<CheckResult>)> {
    cfg.validate()?;
    let digest = w.digest();
    let mut kl = KlSolver::new(w, cfg.solver)?;
    let mut gal = GallagerSolver::new(w);
    let capacity = kl.capacity();
    let zero_rate = kl.zero_rate_threshold();
    let converse_rates = linspace(0.0, (w.inputs() as f64).ln() + 0.5, cfg.rate_points);
    let error_rates = linspace(zero_rate + 0.01, capacity + 0.5, cfg.rate_points);
    let dk = converse_rates.iter().map(|&r| kl.dk_exponent(r)).collect();
    let g = converse_rates.iter().map(|&r| gal.strong_converse(r)).collect();
    let esp = error_rates.iter().map(|&r| kl.sphere_packing_err(r)).collect();
    let e = error_rates.iter().map(|&r| gal.error_exponent(r, DEFAULT_DELTA_CAP)).collect();
    let mut ctx = Ctx {
        w,
        label: label.to_string(),
        rng: ChaCha8Rng::seed_from_u64(digest_seed(seed, &digest)),
        digest,
        cfg: *cfg,
        kl,
        gal,
        capacity,
        zero_rate,
        converse_rates,
        dk,
        g,
        error_rates,
        esp,
        e,
    };
    let mut out = vec![
        check_capacity(&mut ctx),
        check_exact_zeros(&mut ctx),
        check_origin(&mut ctx),
        check_converse_equivalence(&mut ctx),
        check_error_equivalence(&mut ctx),
    ];
    let (identity, sp_curve) = check_sphere_packing_identity(&mut ctx);
    out.push(identity);
    out.push(check_large_rate_identity(&mut ctx));
    out.push(check_lipschitz(&mut ctx));
    out.push(check_converse_shape(&mut ctx));
    out.push(check_error_shape(&mut ctx));
    let step = converse_step(&ctx);
    let g_curve: Vec<(f64, Result<f64>)> = ctx.converse_rates.iter().copied().zip(ctx.g.iter().cloned()).collect();
    out.push(threshold_check(&ctx, "converse_threshold", &g_curve, step));
    let sp_curve: Vec<(f64, Result<f64>)> = sp_curve.into_iter().map(|(r, v)| (r, v.map(|v| v.to_f64()))).collect();
    out.push(threshold_check(&ctx, "sphere_packing_threshold", &sp_curve, step));
    let (support, affine) = check_supporting_lines(&mut ctx);
    out.push(support);
    out.push(affine);
    out.push(check_tilted(&mut ctx, false));
    out.push(check_tilted_minimum(&mut ctx));
    out.push(check_tilted(&mut ctx, true));
    out.push(check_tilted_error_equality(&mut ctx));
    out.push(check_error_supporting_lines(&mut ctx));
    Ok((channel_summary(label, w, capacity, zero_rate), out))
}

/// Verifies every entry (concurrently) and assembles the report in corpus
/// order.
pub fn run_entries(entries: &[CorpusEntry], seed: u64, corpus: CorpusDescription, cfg: &VerifyConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let results: Vec<std::result::Result<(ChannelSummary, Vec<CheckResult>), InvalidEntry>> = entries
        .par_iter()
        .map(|entry| match &entry.channel {
            Ok(w) => verify_channel(&entry.label, w, seed, cfg).map_err(|e| InvalidEntry {
                label: entry.label.clone(),
                error: e.to_string(),
            }),
            Err(msg) => Err(InvalidEntry {
                label: entry.label.clone(),
                error: msg.clone(),
            }),
        })
        .collect();
    let mut channels = Vec::new();
    let mut invalid = Vec::new();
    let mut checks = Vec::new();
    for r in results {
        match r {
            Ok((s, c)) => {
                channels.push(s);
                checks.extend(c);
            }
            Err(e) => invalid.push(e),
        }
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let summary = Summary {
        channels: channels.len(),
        invalid: invalid.len(),
        checks: checks.len(),
        passed,
        failed: checks.len() - passed,
    };
    Ok(VerificationReport {
        corpus,
        seed,
        config: *cfg,
        channels,
        invalid,
        checks,
        summary,
    })
}

/// Generates the seeded corpus (with builtins and no sparse channels) and
/// verifies it.
pub fn run_corpus(seed: u64, sizes: &[(usize, usize)], count: usize, cfg: &VerifyConfig) -> Result<VerificationReport> {
    let entries = generate_corpus(seed, sizes, count, 0, true);
    let corpus = CorpusDescription {
        sizes: sizes.iter().map(|(n, m)| format!("{n}x{m}")).collect(),
        count,
        builtins: true,
        sparse_per_size: 0,
        directory: None,
    };
    run_entries(&entries, seed, corpus, cfg)
}
