//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use exponents::gallager::{f_delta, gallager_j, GallagerSolver, DEFAULT_DELTA_CAP};
use exponents::kl::{EVariant, KlSolver, VSolverConfig};
use exponents::optim::linspace;
use exponents::oracle::{OracleConfig, OracleTables};
use exponents::verifier::{builtin_corpus, random_generic_channel, verify_channel, CheckResult, VerifyConfig};
use exponents::{Channel, DeltaParam, Distribution, ExtReal, RatePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;
const SIZES: [(usize, usize); 9] = [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4), (4, 2), (4, 3), (4, 4)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn corpus() -> Vec<(String, Channel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out: Vec<(String, Channel)> = (0..50)
        .map(|k| {
            let (n, m) = SIZES[k % SIZES.len()];
            (format!("random-{n}x{m}-{k}"), random_generic_channel(n, m, &mut rng))
        })
        .collect();
    out.extend(
        builtin_corpus()
            .into_iter()
            .map(|e| (e.label, e.channel.expect("builtins are valid"))),
    );
    out
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool")
        .install(f)
}

fn converse_equivalence(corpus: &[(String, Channel)]) -> Outcome {
    let start = Instant::now();
    let worst = single_threaded(|| {
        let mut worst = (0.0, String::new(), 0.0);
        for (label, w) in corpus {
            let mut gal = GallagerSolver::new(w);
            let mut kl = KlSolver::new(w, VSolverConfig::default()).expect("solver");
            for r in linspace(0.0, (w.inputs() as f64).ln() + 0.5, 21) {
                let dev = match (gal.strong_converse(r), kl.dk_exponent(r)) {
                    (Ok(a), Ok(b)) => (a - b).abs(),
                    _ => f64::INFINITY,
                };
                if dev > worst.0 {
                    worst = (dev, label.clone(), r);
                }
            }
        }
        worst
    });
    let elapsed = start.elapsed();
    let pass = worst.0 <= 1e-3 && elapsed <= Duration::from_secs(600);
    outcome(
        pass,
        format!(
            "{} channels, max |G - G_dk| = {:.2e} ({} at R = {:.3}), {:.1}s single-core",
            corpus.len(),
            worst.0,
            worst.1,
            worst.2,
            elapsed.as_secs_f64()
        ),
    )
}

fn worst_of<'a>(checks: impl Iterator<Item = &'a CheckResult>) -> (usize, f64, String) {
    let mut failed = 0;
    let mut worst = (0.0, String::new());
    for c in checks {
        if !c.pass {
            failed += 1;
        }
        let d = c.worst_deviation.to_f64();
        if d > worst.0 || (d.is_infinite() && worst.0.is_finite()) {
            worst = (d, c.channel.clone());
        }
    }
    (failed, worst.0, worst.1)
}

fn check_criterion(checks: &[CheckResult], ids: &[&str], what: &str, filter: impl Fn(&CheckResult) -> bool) -> Outcome {
    let selected: Vec<&CheckResult> = checks.iter().filter(|c| ids.contains(&c.check_id.as_str()) && filter(c)).collect();
    let (failed, worst, label) = worst_of(selected.iter().copied());
    outcome(
        failed == 0 && !selected.is_empty(),
        format!("{what}: {} checks, {failed} failed, worst deviation {worst:.2e} ({label})", selected.len()),
    )
}

fn oracle_certification() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x0a);
    let mut worst = (0.0, String::new());
    let mut note = |dev: f64, what: String| {
        if dev > worst.0 || dev.is_nan() {
            worst = (if dev.is_nan() { f64::INFINITY } else { dev }, what);
        }
    };
    for k in 0..10 {
        let w = random_generic_channel(2, 2, &mut rng);
        let oracle = OracleTables::new(&w, OracleConfig::default()).expect("oracle");
        let mut kl = KlSolver::new(&w, VSolverConfig::default()).expect("solver");
        let mut gal = GallagerSolver::new(&w);
        let ln_x = 2f64.ln();
        for r in linspace(0.0, ln_x + 0.5, 21) {
            let o = oracle.record(r);
            let at = |q: &str| format!("{q} on channel {k} at R = {r:.3}");
            let dk = kl.dk_exponent(r).map_or(f64::INFINITY, |v| (v - o.dk_exponent).abs());
            note(dk, at("G_dk"));
            let g = gal.strong_converse(r).map_or(f64::INFINITY, |v| (v - o.strong_converse).abs());
            note(g, at("G"));
            if r <= ln_x {
                let sp = kl.sphere_packing_sc(r).map_or(f64::INFINITY, |v| v.deviation(&o.sphere_packing_sc));
                note(sp, at("G_sp"));
            }
            let esp = kl.sphere_packing_err(r).map_or(f64::INFINITY, |v| v.deviation(&o.sphere_packing_err));
            note(esp, at("E_sp"));
            let e = gal
                .error_exponent(r, DEFAULT_DELTA_CAP)
                .map_or(f64::INFINITY, |v| v.deviation(&ExtReal::Finite(o.error_exponent)));
            note(e, at("E"));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst.0 <= 2e-2 && elapsed <= Duration::from_secs(300),
        format!(
            "10 binary channels, worst deviation {:.2e} ({}), {:.1}s",
            worst.0,
            worst.1,
            elapsed.as_secs_f64()
        ),
    )
}

fn exact_zeros() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x06);
    let mut worst: f64 = 0.0;
    let mut origin: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(2..=4);
        let w = Channel::random(n, m, &mut rng);
        let p = Distribution::random(n, &mut rng);
        let r = rng.random::<f64>() * ((n as f64).ln() + 0.5);
        let mut kl = KlSolver::new(&w, VSolverConfig::default()).expect("solver");
        let mut gal = GallagerSolver::new(&w);
        let zero = DeltaParam::ZERO;
        let vals = [
            gallager_j(zero, &p, &w),
            f_delta(zero, RatePoint::new(r).expect("rate"), &p, &w),
            gal.min_j(0.0),
            gal.max_j(0.0),
            kl.tilde_f(0.0, r, &p),
            kl.tilde_g(0.0, r),
            kl.tilde_e(0.0, r, EVariant::MaxOverInputs),
            kl.tilde_e(0.0, r, EVariant::MinOverInputs),
            kl.k_delta(0.0),
        ];
        for v in vals {
            worst = worst.max(v.map_or(f64::INFINITY, f64::abs));
        }
        origin = origin.max(kl.dk_exponent(0.0).map_or(f64::INFINITY, f64::abs));
    }
    outcome(
        worst <= 1e-12 && origin <= 1e-9,
        format!("100 samples, max |zero-delta quantity| = {worst:.1e}, max |G_dk(0)| = {origin:.1e}"),
    )
}

fn closed_form_capacity(corpus: &[(String, Channel)]) -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..=10 {
        let p = 0.05 * k as f64;
        let w = Channel::bsc(p).expect("bsc");
        let mut kl = KlSolver::new(&w, VSolverConfig::default()).expect("solver");
        let hb = if p == 0.0 { 0.0 } else { -p * p.ln() - (1.0 - p) * (1.0 - p).ln() };
        worst = worst.max((kl.capacity() - (2f64.ln() - hb)).abs());
    }
    let positive_zero = corpus.iter().filter(|(_, w)| w.is_strictly_positive()).all(|(_, w)| {
        KlSolver::new(w, VSolverConfig::default())
            .expect("solver")
            .zero_rate_threshold()
            == 0.0
    });
    let id = Channel::identity(2).expect("identity");
    let id_c0 = KlSolver::new(&id, VSolverConfig::default()).expect("solver").zero_rate_threshold();
    let id_dev = (id_c0 - 2f64.ln()).abs();
    outcome(
        worst <= 1e-8 && positive_zero && id_dev <= 1e-12,
        format!(
            "BSC max |C - (ln2 - Hb)| = {worst:.1e}, C0 = 0 on positive channels: {positive_zero}, identity |C0 - ln2| = {id_dev:.1e}"
        ),
    )
}

fn identity_curve() -> Outcome {
    let w = Channel::identity(2).expect("identity");
    let mut gal = GallagerSolver::new(&w);
    let mut kl = KlSolver::new(&w, VSolverConfig::default()).expect("solver");
    let mut worst: f64 = 0.0;
    for r in linspace(0.0, 1.4, 57) {
        let exact = (r - 2f64.ln()).max(0.0);
        worst = worst.max(gal.strong_converse(r).map_or(f64::INFINITY, |v| (v - exact).abs()));
        worst = worst.max(kl.dk_exponent(r).map_or(f64::INFINITY, |v| (v - exact).abs()));
    }
    outcome(worst <= 1e-3, format!("57 rates on [0, 1.4], max deviation from [R - ln2]+ = {worst:.1e}"))
}

fn tilted_inequality(corpus: &[(String, Channel)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x09);
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(2..=4);
        let w = random_generic_channel(n, m, &mut rng);
        let p = Distribution::random(n, &mut rng);
        let delta = -rng.random::<f64>();
        let r = rng.random::<f64>() * ((n as f64).ln() + 0.5);
        let kl = KlSolver::new(&w, VSolverConfig::default()).expect("solver");
        let f = f_delta(DeltaParam::new(delta).expect("delta"), RatePoint::new(r).expect("rate"), &p, &w);
        let gap = match (f, kl.tilde_f(delta, r, &p)) {
            (Ok(f), Ok(t)) => f - t,
            _ => f64::INFINITY,
        };
        worst_gap = worst_gap.max(gap);
    }
    let mut worst_eq: f64 = 0.0;
    let binary: Vec<&Channel> = corpus
        .iter()
        .filter(|(_, w)| w.inputs() == 2 && w.outputs() == 2)
        .map(|(_, w)| w)
        .collect();
    for w in &binary {
        let mut kl = KlSolver::new(w, VSolverConfig::default()).expect("solver");
        let mut gal = GallagerSolver::new(w);
        for d in linspace(-1.0, 0.0, 11) {
            for r in [0.0, 0.4, 0.9] {
                let dev = match (kl.tilde_g(d, r), gal.min_j(d)) {
                    (Ok(t), Ok(j)) => (t - (-d * r + j)).abs(),
                    _ => f64::INFINITY,
                };
                worst_eq = worst_eq.max(dev);
            }
        }
    }
    outcome(
        worst_gap <= 1e-8 && worst_eq <= 1e-4,
        format!(
            "1000 samples, max (F - F~) = {worst_gap:.1e}; {} binary channels, max |G~_d - G_d| = {worst_eq:.1e}",
            binary.len()
        ),
    )
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("exponents-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let mut reports = Vec::new();
    for k in 0..2 {
        let path = dir.join(format!("report-{k}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_exponents"))
            .args(["verify", "--sizes", "2x2,2x3", "--count", "2", "--sparse", "1", "--seed", "7"])
            .arg("--out")
            .arg(&path)
            .stderr(std::process::Stdio::null())
            .status()
            .expect("binary runs");
        let bytes = std::fs::read(&path).unwrap_or_default();
        reports.push((status.code(), bytes));
    }
    let _ = std::fs::remove_dir_all(&dir);
    let written = reports.iter().all(|(code, b)| matches!(code, Some(0 | 1)) && !b.is_empty());
    let same = reports[0].1 == reports[1].1;
    outcome(
        written && same,
        format!("two verify runs, {} bytes each, identical: {same}", reports[0].1.len()),
    )
}

fn main() -> ExitCode {
    let corpus = corpus();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "strong converse equivalence", converse_equivalence(&corpus)));

    let cfg = VerifyConfig::default();
    let mut checks = Vec::new();
    for (label, w) in &corpus {
        match verify_channel(label, w, SEED, &cfg) {
            Ok((_, c)) => checks.extend(c),
            Err(e) => eprintln!("verification of {label} failed to start: {e}"),
        }
    }
    let positive: Vec<&str> = corpus
        .iter()
        .filter(|(_, w)| w.is_strictly_positive())
        .map(|(l, _)| l.as_str())
        .collect();
    results.push((
        2,
        "error exponent equivalence",
        check_criterion(&checks, &["error_exponent_equivalence"], "strictly positive channels", |c| {
            positive.contains(&c.channel.as_str())
        }),
    ));
    results.push((3, "oracle certification", oracle_certification()));
    results.push((4, "lipschitz", check_criterion(&checks, &["lipschitz"], "all channels", |_| true)));
    results.push((
        5,
        "shape",
        check_criterion(
            &checks,
            &["converse_shape", "error_shape", "converse_threshold", "sphere_packing_threshold"],
            "all channels",
            |_| true,
        ),
    ));
    results.push((6, "exact zeros", exact_zeros()));
    results.push((7, "closed-form capacity", closed_form_capacity(&corpus)));
    results.push((8, "identity channel curve", identity_curve()));
    results.push((9, "tilted inequality", tilted_inequality(&corpus)));
    results.push((10, "determinism", determinism()));

    let mut all = true;
    for (n, name, o) in &results {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict} {name}: {}", o.detail);
        all &= o.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
