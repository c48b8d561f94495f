//! Experiment runner: every check and simulation as a subcommand that emits
//! one JSON (or CSV) record.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use haarlab::bounds::{
    check_mixed_additive, check_product_perm, check_sandwich, falling_ratio_check, lp_closed_form, lp_solve,
};
use haarlab::games::{
    collision_strategy, exact_strategy_value, inverse_collision_strategy, run_hud, run_na_inv_hud, run_ni_inv_hud,
    value_width, ArgmaxStrategy, GameConfig, GameKind, GameResult,
};
use haarlab::pathrec::{hybrid_probe, purification_gap, single_query_gap, two_query_gap};
use haarlab::qlinalg::{haar_unitary, random_density, set_dense_entry_budget};
use haarlab::seeds::task_rng;
use haarlab::tomography::{
    check_expectation_lemma, check_sd_lemma, check_tradeoff_grid, concentration_check, lipschitz_probe,
    tomography_attack_experiment,
};
use haarlab::weingarten::{exact_mixed_twirl, exact_twirl, mc_mixed_twirl, mc_twirl};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Exact k-fold twirl against Monte Carlo, and its commutant property
    TwirlCheck,
    /// Exact mixed twirl against Monte Carlo, and the additive gap over N = 2, 4, 8, 16
    MixedTwirlCheck,
    /// Choi positivity of both multiplicative sandwich maps
    SandwichCheck,
    /// Product-permutation inequality on random PSD pairs
    ProductPermCheck,
    /// LP optimum against the closed form
    LpBound,
    /// Exact falling-factorial ratio
    RatioCheck,
    /// Path-recording oracle checks and hybrid probes
    PathrecCheck,
    /// Adaptive forward-query game with the collision strategy
    HudSim,
    /// Non-adaptive game with forward and inverse collision queries
    NaHudSim,
    /// Single-message game with the argmax strategy
    NiHudSim,
    /// Tomography eavesdropper on the toy key agreement
    TomographyAttack,
    /// Concentration trend and Lipschitz probe
    Concentration,
    /// SD-guessing and expectation inequalities
    SdLemmaCheck,
    /// Commitment trade-off grid
    TradeoffCheck,
    /// The full acceptance suite
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::TwirlCheck => "twirl-check",
            Command::MixedTwirlCheck => "mixed-twirl-check",
            Command::SandwichCheck => "sandwich-check",
            Command::ProductPermCheck => "product-perm-check",
            Command::LpBound => "lp-bound",
            Command::RatioCheck => "ratio-check",
            Command::PathrecCheck => "pathrec-check",
            Command::HudSim => "hud-sim",
            Command::NaHudSim => "na-hud-sim",
            Command::NiHudSim => "ni-hud-sim",
            Command::TomographyAttack => "tomography-attack",
            Command::Concentration => "concentration",
            Command::SdLemmaCheck => "sd-lemma-check",
            Command::TradeoffCheck => "tradeoff-check",
            Command::All => "all",
        }
    }

    fn needs_seed(self) -> bool {
        !matches!(
            self,
            Command::SandwichCheck | Command::LpBound | Command::RatioCheck | Command::TradeoffCheck
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug, Default, Clone)]
struct Flags {
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    t: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    shots: Option<usize>,
    /// Trials, runs or grid points per axis, depending on the subcommand
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; affects wall-clock only
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Dense-operator memory budget in MiB
    #[arg(long = "budget-mb", global = true)]
    budget_mb: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// TOML file with any of the parameter keys; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Parser, Debug)]
#[command(name = "haarlab", version, about = "Haar-unitary checks and distinguishing-game simulations")]
struct Full {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

/// Keys accepted in a `--config` file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    t: Option<usize>,
    k: Option<usize>,
    m: Option<usize>,
    eps: Option<f64>,
    shots: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    budget_mb: Option<u64>,
}

/// Parameters after defaults and config merging; echoed into the record.
#[derive(Serialize, Debug, Clone, Default)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_mb: Option<u64>,
}

#[derive(Serialize, Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub bound: Value,
    pub pass: bool,
    pub stderr: Option<f64>,
}

impl Check {
    fn new(name: impl Into<String>, value: impl Serialize, bound: impl Serialize, pass: bool) -> Self {
        Check {
            name: name.into(),
            value: json!(value),
            bound: json!(bound),
            pass,
            stderr: None,
        }
    }

    fn with_stderr(mut self, s: f64) -> Self {
        self.stderr = Some(s);
        self
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct RunRecord {
    pub subcommand: String,
    pub version: String,
    pub config: Params,
    pub checks: Vec<Check>,
    pub details: Value,
    pub pass: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Resource(String),
    Failure(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
            CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<haarlab::Error> for CliError {
    fn from(e: haarlab::Error) -> Self {
        use haarlab::Error as E;
        match e {
            E::SizeLimit { .. } => CliError::Resource(e.to_string()),
            E::Protocol(_) | E::Unsupported(_) => CliError::Failure(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<(Vec<Check>, Value), CliError>;

struct Run {
    command: Command,
    params: Params,
    workers: Option<usize>,
    out: Option<PathBuf>,
    format: Format,
}

fn parse(argv: &[String]) -> Result<Run, clap::Error> {
    let full = Full::try_parse_from(argv)?;
    let f = full.flags;
    let file = match &f.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| clap::Error::raw(clap::error::ErrorKind::Io, format!("{}: {e}\n", path.display())))?;
            toml::from_str::<FileConfig>(&text).map_err(|e| {
                clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{}: {e}\n", path.display()))
            })?
        }
        None => FileConfig::default(),
    };
    let params = Params {
        n: f.n.or(file.n),
        t: f.t.or(file.t),
        k: f.k.or(file.k),
        m: f.m.or(file.m),
        eps: f.eps.or(file.eps),
        shots: f.shots.or(file.shots),
        trials: f.trials.or(file.trials),
        seed: f.seed.or(file.seed),
        budget_mb: f.budget_mb.or(file.budget_mb),
    };
    Ok(Run {
        command: full.command,
        params,
        workers: f.workers.or(file.workers),
        out: f.out,
        format: f.format.unwrap_or_default(),
    })
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// record. Output writing is left to [`run`].
pub fn execute(argv: &[String]) -> Result<RunRecord, CliError> {
    let run = parse(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    execute_parsed(&run)
}

fn execute_parsed(run: &Run) -> Result<RunRecord, CliError> {
    if run.command.needs_seed() && run.params.seed.is_none() {
        return Err(CliError::Usage(format!("{} needs --seed", run.command.name())));
    }
    if let Some(mb) = run.params.budget_mb {
        if mb == 0 {
            return Err(CliError::Usage("--budget-mb must be positive".into()));
        }
        set_dense_entry_budget(mb.saturating_mul(1 << 20) / 16);
    }
    let mut params = run.params.clone();
    let work = |params: &mut Params| dispatch(run.command, params);
    let (checks, details) = match run.workers {
        Some(0) => return Err(CliError::Usage("--workers must be positive".into())),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::Resource(e.to_string()))?
            .install(|| work(&mut params))?,
        None => work(&mut params)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(RunRecord {
        subcommand: run.command.name().into(),
        version: VERSION.into(),
        config: params,
        checks,
        details,
        pass,
    })
}

/// Renders a record in the requested format.
fn render(record: &RunRecord, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => serde_json::to_string_pretty(record)
            .map(|s| s + "\n")
            .map_err(|e| CliError::Failure(e.to_string())),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| CliError::Failure(e.to_string());
            w.write_record(["name", "value", "bound", "pass", "stderr"]).map_err(err)?;
            for c in &record.checks {
                let plain = |v: &Value| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                w.write_record([
                    c.name.clone(),
                    plain(&c.value),
                    plain(&c.bound),
                    c.pass.to_string(),
                    c.stderr.map(|s| s.to_string()).unwrap_or_default(),
                ])
                .map_err(err)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Failure(e.to_string()))
        }
    }
}

/// Entry point used by the binary. Returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let parsed = match parse(argv) {
        Ok(p) => p,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = std::time::Instant::now();
    let result = execute_parsed(&parsed).and_then(|rec| Ok((render(&rec, parsed.format)?, rec.pass)));
    match result {
        Ok((text, pass)) => {
            let written = match &parsed.out {
                Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("{e}");
                return 2;
            }
            eprintln!("{}: {} in {:.2?}", parsed.command.name(), if pass { "pass" } else { "FAIL" }, started.elapsed());
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn or<T: Copy>(slot: &mut Option<T>, default: T) -> T {
    *slot.get_or_insert(default)
}

fn dispatch(cmd: Command, p: &mut Params) -> Outcome {
    match cmd {
        Command::TwirlCheck => {
            let (k, n) = (or(&mut p.k, 2), or(&mut p.n, 2));
            twirl_check(k, n, or(&mut p.shots, 100_000), p.seed.unwrap_or_default())
        }
        Command::MixedTwirlCheck => {
            let (k, n) = (or(&mut p.k, 1), or(&mut p.n, 2));
            mixed_twirl_check(k, n, or(&mut p.shots, 100_000), p.seed.unwrap_or_default())
        }
        Command::SandwichCheck => sandwich(or(&mut p.k, 2), or(&mut p.n, 8)),
        Command::ProductPermCheck => {
            let (n, t) = (or(&mut p.n, 2), or(&mut p.t, 1));
            product_perm(n, t, or(&mut p.trials, 1000), p.seed.unwrap_or_default())
        }
        Command::LpBound => lp_bound(or(&mut p.eps, 0.1)),
        Command::RatioCheck => ratio(or(&mut p.n, 4), or(&mut p.t, 1)),
        Command::PathrecCheck => pathrec(p.seed.unwrap_or_default()),
        Command::HudSim => {
            let (n, t) = (or(&mut p.n, 2), or(&mut p.t, 1));
            hud_sim(n, t, or(&mut p.shots, 10_000), p.seed.unwrap_or_default())
        }
        Command::NaHudSim => {
            let (n, t) = (or(&mut p.n, 8), or(&mut p.t, 1));
            na_sim(n, t, or(&mut p.shots, 10_000), p.seed.unwrap_or_default())
        }
        Command::NiHudSim => {
            let (n, t) = (or(&mut p.n, 8), or(&mut p.t, 32));
            let m = or(&mut p.m, value_width(n));
            ni_sim(n, t, m, or(&mut p.shots, 10_000), p.seed.unwrap_or_default())
        }
        Command::TomographyAttack => {
            let n = or(&mut p.n, 4);
            let t = or(&mut p.t, 1000);
            let shots = or(&mut p.shots, 100_000);
            attack(n, t, shots, or(&mut p.trials, 500), p.seed.unwrap_or_default())
        }
        Command::Concentration => {
            let samples = or(&mut p.shots, 2000);
            concentration(samples, or(&mut p.trials, 200), p.seed.unwrap_or_default())
        }
        Command::SdLemmaCheck => sd_lemma(or(&mut p.trials, 1000), p.seed.unwrap_or_default()),
        Command::TradeoffCheck => tradeoff(or(&mut p.trials, 100)),
        Command::All => all(p.seed.unwrap_or_default()),
    }
}

fn twirl_check(k: usize, n: usize, shots: usize, seed: u64) -> Outcome {
    let mut rng = task_rng(seed, "cli/twirl-input", 0);
    let rho = random_density(&vec![n; k], &mut rng)?;
    let exact = exact_twirl(&rho, k, n)?;
    let cmp = mc_twirl(&rho, k, n, shots, seed)?.compare(&exact, 5.0, 1e-12)?;
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let w = haar_unitary(n, &mut task_rng(seed, "cli/commutant", i));
        let mut moved = exact.clone();
        for r in 0..k {
            moved = moved.conjugate_subsystem(r, &w)?;
        }
        worst = worst.max(moved.max_abs_diff(&exact)?);
    }
    Ok((
        vec![
            Check::new(format!("mc_max_z k={k} N={n}"), cmp.max_z, 5.0, cmp.pass),
            Check::new(format!("commutant k={k} N={n}"), worst, 1e-9, worst <= 1e-9),
        ],
        json!({ "mc": cmp, "commutant_max_dev": worst }),
    ))
}

fn mixed_twirl_check(k: usize, n: usize, shots: usize, seed: u64) -> Outcome {
    let mut rng = task_rng(seed, "cli/mixed-input", 0);
    let rho = random_density(&vec![n; 2 * k], &mut rng)?;
    let exact = exact_mixed_twirl(&rho, k, n)?;
    let cmp = mc_mixed_twirl(&rho, k, n, shots, seed)?.compare(&exact, 5.0, 1e-12)?;
    let (mut checks, mut details) = mixed_additive(seed)?;
    checks.insert(0, Check::new(format!("mixed_mc_max_z k={k} N={n}"), cmp.max_z, 5.0, cmp.pass));
    details["mc"] = json!(cmp);
    Ok((checks, details))
}

fn mixed_additive(seed: u64) -> Outcome {
    let report = check_mixed_additive(1, &[2, 4, 8, 16], seed)?;
    let tds: Vec<f64> = report.entries.iter().map(|e| e.trace_distance).collect();
    Ok((
        vec![Check::new("mixed_additive_non_increasing k=1", &tds, "non-increasing", report.non_increasing)],
        json!({ "additive": report }),
    ))
}

fn sandwich(k: usize, n: usize) -> Outcome {
    let r = check_sandwich(k, n)?;
    Ok((
        vec![
            Check::new(format!("sandwich_upper k={k} N={n}"), r.min_eig_upper, -1e-9, r.min_eig_upper >= -1e-9),
            Check::new(format!("sandwich_lower k={k} N={n}"), r.min_eig_lower, -1e-9, r.min_eig_lower >= -1e-9),
        ],
        json!(r),
    ))
}

fn product_perm(n: usize, t: usize, trials: usize, seed: u64) -> Outcome {
    let r = check_product_perm(n, t, trials, seed)?;
    Ok((
        vec![
            Check::new(format!("joint_minus_product N={n} t={t}"), r.min_gap, -1e-9, r.min_gap >= -1e-9),
            Check::new(format!("product_nonnegative N={n} t={t}"), r.min_product, -1e-9, r.min_product >= -1e-9),
        ],
        json!(r),
    ))
}

fn lp_bound(eps: f64) -> Outcome {
    let sol = lp_solve(eps)?;
    let closed = lp_closed_form(eps)?;
    let diff = (sol.value - closed).abs();
    Ok((
        vec![Check::new(format!("lp eps={eps}"), sol.value, closed, diff <= 1e-9)],
        json!({ "solution": sol, "closed_form": closed, "abs_diff": diff }),
    ))
}

fn ratio(n: usize, t: usize) -> Outcome {
    let r = falling_ratio_check(n as u64, t as u64)?;
    let trend: Vec<_> = [16u64, 32, 64]
        .iter()
        .map(|&m| falling_ratio_check(m, t as u64))
        .collect::<Result<_, _>>()?;
    let values: Vec<f64> = trend.iter().map(|x| x.ratio_value).collect();
    let monotone = values.windows(2).all(|w| w[1] < w[0]) && values.iter().all(|&v| v >= 1.0);
    Ok((
        vec![
            Check::new(format!("ratio N={n} t={t}"), &r.ratio, r.eps_bound + 1.0, r.ratio_value >= 1.0),
            Check::new(format!("ratio_to_one N=16,32,64 t={t}"), &values, 1.0, monotone),
        ],
        json!({ "ratio": r.ratio, "report": r, "trend": trend }),
    ))
}

fn pathrec(seed: u64) -> Outcome {
    let mut checks = Vec::new();
    let mut single = Vec::new();
    for n in [2usize, 8, 32] {
        let td = single_query_gap(n)?;
        single.push(td);
        checks.push(Check::new(format!("one_query_maximally_mixed N={n}"), td, 1e-10, td <= 1e-10));
    }
    let two: Vec<f64> = [8usize, 16, 32].iter().map(|&n| two_query_gap(n, seed)).collect::<Result<_, _>>()?;
    let decreasing = two.windows(2).all(|w| w[1] <= w[0]);
    checks.push(Check::new("two_query_gap_non_increasing N=8,16,32", &two, "non-increasing", decreasing));
    let mut purif = Vec::new();
    for n in [2usize, 3] {
        let gap = purification_gap(n, seed)?;
        purif.push(gap);
        checks.push(Check::new(format!("purification k=1 N={n}"), gap, 1e-10, gap <= 1e-10));
    }
    let mut probes = Vec::new();
    for n in [8usize, 16] {
        let h = hybrid_probe(n, 2, seed)?;
        checks.push(Check::new(format!("hybrid_left N={n} t=2"), h.left_gap, h.bound, h.left_gap <= h.bound));
        checks.push(Check::new(format!("hybrid_right N={n} t=2"), h.right_gap, h.bound, h.right_gap <= h.bound));
        probes.push(h);
    }
    Ok((checks, json!({ "single": single, "two_query": two, "purification": purif, "hybrid": probes })))
}

fn game_details(r: &GameResult) -> Value {
    json!(r)
}

fn hud_sim(n: usize, t: usize, shots: usize, seed: u64) -> Outcome {
    let strategy = collision_strategy(t)?;
    let cfg = GameConfig::new(GameKind::Hud, n, t, shots, seed);
    let r = run_hud(&strategy, &cfg)?;
    let mut checks = vec![Check::new(
        format!("hud_success N={n} t={t}"),
        r.success,
        r.bound,
        r.success <= r.bound + 3.0 * r.success_stderr,
    )
    .with_stderr(r.success_stderr)];
    let mut details = json!({ "mc": game_details(&r) });
    let joint = n.checked_pow(2 * t as u32).unwrap_or(usize::MAX);
    if joint <= 4096 {
        let e = exact_strategy_value(&strategy, &cfg)?;
        let gap = (e.success - r.success).abs();
        checks.push(
            Check::new(format!("hud_exact_vs_mc N={n} t={t}"), r.success, e.success, gap <= 3.0 * r.success_stderr)
                .with_stderr(r.success_stderr),
        );
        details["exact"] = json!(e);
    }
    Ok((checks, details))
}

fn advantage_check(label: String, r: &GameResult) -> Check {
    let adv = r.success - 0.5;
    Check::new(label, adv, r.bound, adv <= r.bound + 3.0 * r.success_stderr).with_stderr(r.success_stderr)
}

fn na_sim(n: usize, t: usize, shots: usize, seed: u64) -> Outcome {
    let cfg = GameConfig::new(GameKind::NaInvHud, n, t, shots, seed);
    let r = run_na_inv_hud(&inverse_collision_strategy(t)?, &cfg)?;
    Ok((vec![advantage_check(format!("na_advantage N={n} t={t}"), &r)], game_details(&r)))
}

fn ni_sim(n: usize, t: usize, m: usize, shots: usize, seed: u64) -> Outcome {
    let cfg = GameConfig::new(GameKind::NiInvHud, n, t, shots, seed).with_message_bits(m);
    let r = run_ni_inv_hud(&ArgmaxStrategy { samples: t }, &cfg)?;
    Ok((vec![advantage_check(format!("ni_advantage N={n} t={t} m={m}"), &r)], game_details(&r)))
}

fn attack(n: usize, queries: usize, shots: usize, runs: usize, seed: u64) -> Outcome {
    let r = tomography_attack_experiment(n, queries as u64, shots as u64, runs, seed)?;
    Ok((
        vec![Check::new(
            format!("eavesdropper_vs_agreement N={n}"),
            r.guess_rate,
            r.agreement_rate - 0.05,
            r.pass,
        )
        .with_stderr(r.guess_stderr)],
        json!(r),
    ))
}

fn concentration(samples: usize, trials: usize, seed: u64) -> Outcome {
    let c = concentration_check(16, 64, samples, seed)?;
    let l = lipschitz_probe(&[2, 4], 3, trials, seed)?;
    Ok((
        vec![
            Check::new("std_ratio N=64/N=16", c.ratio, 0.6, c.pass),
            Check::new("lipschitz_slack", l.min_slack, -1e-9, l.pass),
        ],
        json!({ "concentration": c, "lipschitz": l }),
    ))
}

fn sd_lemma(instances: usize, seed: u64) -> Outcome {
    let sd = check_sd_lemma(instances, seed)?;
    let ex = check_expectation_lemma(instances, seed)?;
    Ok((
        vec![
            Check::new("sd_lemma_slack", sd.min_slack, -1e-12, sd.pass),
            Check::new("expectation_lemma_slack", ex.min_slack, -1e-12, ex.pass),
        ],
        json!({ "sd_lemma": sd, "expectation_lemma": ex }),
    ))
}

fn tradeoff(steps: usize) -> Outcome {
    let g = check_tradeoff_grid(steps)?;
    Ok((vec![Check::new("tradeoff_slack", g.min_slack, -1e-12, g.pass)], json!(g)))
}

fn prefixed(tag: &str, outcome: Outcome, checks: &mut Vec<Check>, details: &mut serde_json::Map<String, Value>) -> Result<(), CliError> {
    let (cs, d) = outcome?;
    for mut c in cs {
        c.name = format!("{tag}/{}", c.name);
        checks.push(c);
    }
    details
        .entry(tag.to_string())
        .or_insert_with(|| Value::Array(vec![]))
        .as_array_mut()
        .expect("array")
        .push(d);
    Ok(())
}

/// Criteria 1 to 11 with their fixed parameters.
pub fn criterion(index: usize, seed: u64) -> Outcome {
    let mut checks = Vec::new();
    let mut details = serde_json::Map::new();
    let tag = format!("c{index}");
    let d = &mut details;
    let c = &mut checks;
    match index {
        1 => {
            for eps in [0.0, 0.01, 0.1, 0.5, 1.0, 2.0] {
                prefixed(&tag, lp_bound(eps), c, d)?;
            }
        }
        2 => {
            for (k, n) in [(1, 2), (2, 2), (2, 3), (3, 3)] {
                prefixed(&tag, twirl_check(k, n, 100_000, seed), c, d)?;
            }
        }
        3 => {
            for (k, n) in [(1, 4), (2, 4), (2, 8)] {
                prefixed(&tag, sandwich(k, n), c, d)?;
            }
        }
        4 => {
            for (n, t) in [(2, 1), (2, 2), (3, 2)] {
                prefixed(&tag, product_perm(n, t, 1000, seed), c, d)?;
            }
        }
        5 => prefixed(&tag, pathrec(seed), c, d)?,
        6 => prefixed(&tag, mixed_additive(seed), c, d)?,
        7 => {
            for (n, t) in [(2, 1), (4, 1), (8, 1), (4, 2)] {
                prefixed(&tag, hud_sim(n, t, 10_000, seed), c, d)?;
            }
        }
        8 => prefixed(&tag, ratio(4, 2), c, d).and_then(|_| {
            // the exact 5/4 value lives at t = 1
            let (cs, dd) = ratio(4, 1)?;
            c.push(Check {
                name: format!("{tag}/ratio_exact N=4 t=1"),
                value: cs[0].value.clone(),
                bound: json!("5/4"),
                pass: cs[0].value == json!("5/4"),
                stderr: None,
            });
            d.insert(format!("{tag}/exact"), dd);
            Ok(())
        })?,
        9 => prefixed(&tag, attack(4, 1000, 100_000, 500, seed), c, d)?,
        10 => prefixed(&tag, concentration(2000, 200, seed), c, d)?,
        11 => {
            prefixed(&tag, sd_lemma(1000, seed), c, d)?;
            prefixed(&tag, tradeoff(100), c, d)?;
        }
        _ => return Err(CliError::Usage(format!("no criterion {index}"))),
    }
    Ok((checks, Value::Object(details)))
}

fn all(seed: u64) -> Outcome {
    let mut checks = Vec::new();
    let mut details = serde_json::Map::new();
    for i in 1..=11 {
        let (cs, d) = criterion(i, seed)?;
        checks.extend(cs);
        if let Value::Object(m) = d {
            details.extend(m);
        }
    }
    Ok((checks, Value::Object(details)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("haarlab").chain(s.split_whitespace()).map(String::from).collect()
    }

    #[test]
    fn lp_bound_example() {
        let rec = execute(&args("lp-bound --eps 0.1 --seed 1")).unwrap();
        assert!(rec.pass);
        let v = rec.checks[0].value.as_f64().unwrap();
        assert!((v - 0.628099173553719).abs() < 1e-9);
    }

    #[test]
    fn ratio_is_a_reduced_fraction() {
        let rec = execute(&args("ratio-check --n 4 --t 1")).unwrap();
        assert_eq!(rec.details["ratio"], json!("5/4"));
        assert_eq!(rec.checks[0].value, json!("5/4"));
    }

    #[test]
    fn seed_required_for_random_subcommands() {
        assert!(matches!(execute(&args("hud-sim --n 2")), Err(CliError::Usage(_))));
        assert!(matches!(execute(&args("bogus")), Err(CliError::Usage(_))));
        assert!(matches!(execute(&args("lp-bound --nope 1")), Err(CliError::Usage(_))));
    }

    #[test]
    fn hud_sim_is_deterministic() {
        let a = execute(&args("hud-sim --n 2 --t 1 --shots 2000 --seed 7 --workers 1")).unwrap();
        let b = execute(&args("hud-sim --n 2 --t 1 --shots 2000 --seed 7 --workers 3")).unwrap();
        assert_eq!(render(&a, Format::Json).unwrap(), render(&b, Format::Json).unwrap());
    }

    #[test]
    fn resource_limits_map_to_exit_three() {
        let e = execute(&args("sandwich-check --k 6 --n 64")).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let dir = std::env::temp_dir().join(format!("haarlab-cli-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.toml");
        std::fs::write(&good, "eps = 0.5\n").unwrap();
        let rec = execute(&args(&format!("lp-bound --config {}", good.display()))).unwrap();
        assert_eq!(rec.config.eps, Some(0.5));
        let bad = dir.join("bad.toml");
        std::fs::write(&bad, "epsilon = 0.5\n").unwrap();
        assert!(matches!(
            execute(&args(&format!("lp-bound --config {}", bad.display()))),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn csv_mirrors_checks() {
        let rec = execute(&args("lp-bound --eps 0")).unwrap();
        let text = render(&rec, Format::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "name,value,bound,pass,stderr");
        assert_eq!(lines.len(), 1 + rec.checks.len());
    }
}
