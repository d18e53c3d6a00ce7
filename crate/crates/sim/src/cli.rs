//! Command-line front end.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mrm_core::arbitration::Branch;
use mrm_core::commitment::commit;
use mrm_core::mechanism::{play_cell, verifier_cost, GameError, PayoffCell, PayoffMatrix};
use mrm_core::{arbitrate, fixtures, Agent, Commitment, Dims, EffortMeter, Mechanism, PaymentParams};
use mrm_core::{Strategy, StrategyKind, Transcript, Verdict};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, Settings};
use crate::report::{self, BenchRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mrm", version, about = "Refereed delegation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the truthful commitment and its effort.
    Commit(RunArgs),
    /// Play one game between `--a` and `--b`.
    Game(RunArgs),
    /// Commit both strategies and run the arbitration alone, without payments.
    Arbitrate(RunArgs),
    /// Payoff matrix over `--strategies` and the deviations report.
    Payoff(RunArgs),
    /// Verifier cost over a grid of tableau sizes.
    Bench(RunArgs),
}

#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    /// `key=value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Program file, or a shipped fixture name.
    #[arg(long)]
    pub program: Option<String>,
    #[arg(long)]
    pub input: Option<String>,
    /// Tableau rows, a power of two.
    #[arg(long = "T")]
    pub rows: Option<String>,
    /// Tableau columns, λ times a power of two.
    #[arg(long = "S")]
    pub cols: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// `sha256` or `sha512-256`.
    #[arg(long)]
    pub hash: Option<String>,
    /// Security parameter.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Surplus `b`; picked from the admissible interval when absent.
    #[arg(long)]
    pub surplus: Option<String>,
    /// Strategy of agent A.
    #[arg(long, visible_alias = "a-strategy")]
    pub a: Option<String>,
    /// Strategy of agent B.
    #[arg(long, visible_alias = "b-strategy")]
    pub b: Option<String>,
    /// Comma-separated strategy ids for `payoff`.
    #[arg(long)]
    pub strategies: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// `log2 T` values for `bench`.
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
    /// `log2 S` values for `bench`.
    #[arg(long = "s-grid")]
    pub s_grid: Option<String>,
    /// Keys per pairing for `bench`.
    #[arg(long)]
    pub keys: Option<String>,
}

impl RunArgs {
    pub fn settings(&self) -> Result<Settings, ConfigError> {
        let mut s = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        let flags = [
            ("program", &self.program),
            ("input", &self.input),
            ("T", &self.rows),
            ("S", &self.cols),
            ("lambda", &self.lambda),
            ("hash", &self.hash),
            ("n", &self.n),
            ("epsilon", &self.epsilon),
            ("delta", &self.delta),
            ("surplus", &self.surplus),
            ("a", &self.a),
            ("b", &self.b),
            ("strategies", &self.strategies),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("out", &self.out),
            ("t-grid", &self.t_grid),
            ("s-grid", &self.s_grid),
            ("keys", &self.keys),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                s.set(key, v);
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

/// Game errors after validation come from parameters that do not fit the
/// run (empty surplus interval, strategy parameter past `t`).
impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        CliError::Config(ConfigError(e.to_string()))
    }
}

/// Output of a command: text for stdout and the exit code.
#[derive(Debug)]
pub struct Report {
    pub stdout: String,
    pub code: i32,
}

impl Report {
    fn ok(stdout: String) -> Self {
        Report { stdout, code: EXIT_OK }
    }
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(r) => {
            print!("{}", r.stdout);
            r.code
        }
        Err(e) => {
            eprintln!("mrm: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<Report, CliError> {
    let (args, f): (&RunArgs, fn(&RunConfig) -> Result<Report, CliError>) = match command {
        Command::Commit(a) => (a, cmd_commit),
        Command::Game(a) => (a, cmd_game),
        Command::Arbitrate(a) => (a, cmd_arbitrate),
        Command::Payoff(a) => (a, cmd_payoff),
        Command::Bench(a) => (a, cmd_bench),
    };
    let cfg = RunConfig::from_settings(&args.settings()?)?;
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
    }
    f(&cfg)
}

fn save(cfg: &RunConfig, name: &str, text: &str) -> Result<Option<PathBuf>, CliError> {
    match &cfg.out {
        Some(dir) => {
            let path = dir.join(name);
            report::write_atomic(&path, text.as_bytes())?;
            Ok(Some(path))
        }
        None => Ok(None),
    }
}

#[derive(Serialize)]
struct RunInfo {
    program: String,
    input: String,
    dims: Dims,
    hash: &'static str,
    seed: u64,
}

fn run_info(cfg: &RunConfig) -> RunInfo {
    RunInfo {
        program: cfg.program.to_string(),
        input: cfg.input.clone(),
        dims: cfg.dims,
        hash: cfg.hash.id(),
        seed: cfg.seed,
    }
}

#[derive(Serialize)]
struct CommitReport {
    run: RunInfo,
    n: u32,
    #[serde(flatten)]
    commitment: Commitment,
    effort: EffortMeter,
    effort_total: u64,
    m_t: u64,
    m_c: u64,
}

/// The key does not depend on `n` beyond validation, so `commit` uses `n`
/// as given or 256.
pub fn cmd_commit(cfg: &RunConfig) -> Result<Report, CliError> {
    let mech = cfg.mechanism()?;
    let n = cfg.n.unwrap_or(256);
    let scheme = mech.key(n, cfg.seed, 0)?;
    let mut meter = EffortMeter::default();
    let (c, _, _) = commit(&cfg.spec, &cfg.input, cfg.dims, &scheme, &mut meter)
        .map_err(|e| ConfigError(e.to_string()))?;
    let out = report::to_json(&CommitReport {
        run: run_info(cfg),
        n,
        commitment: c,
        effort: meter,
        effort_total: meter.total(),
        m_t: mech.tau_c(),
        m_c: mech.m_c(),
    });
    save(cfg, "commit.json", &out)?;
    Ok(Report::ok(out))
}

fn params(cfg: &RunConfig, mech: &Mechanism) -> Result<PaymentParams, CliError> {
    Ok(mech.calibrate(cfg.n, cfg.epsilon, cfg.delta, cfg.surplus, cfg.seed)?)
}

fn transcript_name(cfg: &RunConfig, a: StrategyKind, b: StrategyKind) -> String {
    format!("transcript-{}-{}-{}.json", cfg.seed, report::file_id(a), report::file_id(b))
}

fn violation(verdict: Option<Verdict>, extra: bool) -> i32 {
    match verdict {
        Some(v) if !(v.winner_a && v.winner_b) || extra => EXIT_VIOLATION,
        _ => EXIT_OK,
    }
}

#[derive(Serialize)]
struct GameReport {
    run: RunInfo,
    params: PaymentParams,
    d1_t: i64,
    #[serde(flatten)]
    game: mrm_core::GameResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript_file: Option<PathBuf>,
}

/// Exits with [`EXIT_VIOLATION`] when the arbitration found a loser.
pub fn cmd_game(cfg: &RunConfig) -> Result<Report, CliError> {
    let mech = cfg.mechanism()?;
    let p = params(cfg, &mech)?;
    let scheme = mech.key(p.n, cfg.seed, 0)?;
    let mut game = mech.run_game(cfg.a, cfg.b, &p, &scheme)?;
    let code = violation(game.verdict, false);
    let mut transcript_file = None;
    if let (Some(t), Some(_)) = (&game.transcript, &cfg.out) {
        let name = transcript_name(cfg, game.a.strategy, game.b.strategy);
        transcript_file = save(cfg, &name, &report::to_json(t))?;
        game.transcript = None;
    }
    let out = report::to_json(&GameReport {
        run: run_info(cfg),
        d1_t: p.d1(mech.tau_c()),
        params: p,
        game,
        transcript_file,
    });
    save(cfg, &format!("game-{}-{}-{}.json", cfg.seed, report::file_id(cfg.a), report::file_id(cfg.b)), &out)?;
    Ok(Report { stdout: out, code })
}

#[derive(Serialize)]
struct ArbitrationReport {
    run: RunInfo,
    a: StrategyKind,
    b: StrategyKind,
    commitment_a: Commitment,
    commitment_b: Commitment,
    arbitrated: bool,
    verdict: Option<Verdict>,
    branch: Option<Branch>,
    queries: usize,
    verifier_hash_calls: u64,
    response_bytes: u64,
    violations: Vec<Agent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript: Option<Transcript>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript_file: Option<PathBuf>,
}

/// Arbitration under the trial-0 key with `n` as given or 256.
pub fn cmd_arbitrate(cfg: &RunConfig) -> Result<Report, CliError> {
    let mech = cfg.mechanism()?;
    let scheme = mech.key(cfg.n.unwrap_or(256), cfg.seed, 0)?;
    let mut a = mech.prover(cfg.a);
    let mut b = mech.prover(cfg.b);
    let ca = a.commit(&scheme).map_err(GameError::from)?;
    let cb = b.commit(&scheme).map_err(GameError::from)?;
    let mut rep = ArbitrationReport {
        run: run_info(cfg),
        a: a.kind(),
        b: b.kind(),
        commitment_a: ca.clone(),
        commitment_b: cb.clone(),
        arbitrated: false,
        verdict: None,
        branch: None,
        queries: 0,
        verifier_hash_calls: 0,
        response_bytes: 0,
        violations: Vec::new(),
        transcript: None,
        transcript_file: None,
    };
    if ca != cb {
        let res = arbitrate(mech.context(&scheme), &ca, &cb, &mut a, &mut b).expect("commitments differ");
        rep.arbitrated = true;
        rep.verdict = Some(res.verdict);
        rep.branch = Some(res.branch);
        rep.queries = res.transcript.queries();
        rep.verifier_hash_calls = res.verifier_hashes.calls;
        rep.response_bytes = res.transcript.bytes;
        rep.violations = res.violations;
        if cfg.out.is_some() {
            rep.transcript_file = save(cfg, &transcript_name(cfg, rep.a, rep.b), &report::to_json(&res.transcript))?;
        } else {
            rep.transcript = Some(res.transcript);
        }
    }
    let code = violation(rep.verdict, !rep.violations.is_empty());
    let out = report::to_json(&rep);
    Ok(Report { stdout: out, code })
}

#[derive(Serialize)]
struct PayoffReport<'a> {
    run: RunInfo,
    params: &'a PaymentParams,
    d1_t: i64,
    matrix: &'a PayoffMatrix,
}

/// Cells run in parallel; each is written to `cells/` as it finishes.
pub fn cmd_payoff(cfg: &RunConfig) -> Result<Report, CliError> {
    let mech = cfg.mechanism()?;
    let p = params(cfg, &mech)?;
    let strategies: Vec<StrategyKind> = cfg.strategies.iter().map(|k| k.resolve(mech.time())).collect();
    let cell_dir = cfg.out.as_ref().map(|d| d.join("cells"));
    if let Some(d) = &cell_dir {
        std::fs::create_dir_all(d)?;
    }
    let k = strategies.len();
    let cells = (0..k * k)
        .into_par_iter()
        .map(|idx| -> Result<PayoffCell, CliError> {
            let (a, b) = (strategies[idx / k], strategies[idx % k]);
            let cell = play_cell(&mech, &p, a, b, cfg.trials, cfg.seed)?;
            if let Some(d) = &cell_dir {
                let name = format!("{}-{}.json", report::file_id(a), report::file_id(b));
                report::write_atomic(&d.join(name), report::to_json(&cell).as_bytes())?;
            }
            Ok(cell)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let matrix = PayoffMatrix::new(strategies, cells);
    let d1_t = p.d1(mech.tau_c());

    let csv = report::payoff_csv(&matrix);
    let nash = report::nash_report(&matrix, &p, d1_t);
    let json = report::to_json(&PayoffReport {
        run: run_info(cfg),
        params: &p,
        d1_t,
        matrix: &matrix,
    });
    let stdout = match &cfg.out {
        Some(dir) => {
            save(cfg, "payoff.csv", &csv)?;
            save(cfg, "nash.txt", &nash)?;
            save(cfg, "payoff.json", &json)?;
            format!("{csv}\n{nash}\nwrote {}\n", dir.display())
        }
        None => format!("{csv}\n{nash}"),
    };
    Ok(Report::ok(stdout))
}

fn bench_row(cfg: &RunConfig, dims: Dims) -> Result<BenchRow, CliError> {
    let (input, t) = fixtures::sized_palindrome(dims, dims.rows / 2)
        .ok_or_else(|| ConfigError(format!("no input fits T={} S={}", dims.rows, dims.cols)))?;
    let mech = Mechanism::new(&fixtures::palindrome_check().spec(), &input, dims, cfg.hash)?;
    let cost = verifier_cost(&mech, &mech.library(), cfg.keys, cfg.seed)?;
    Ok(BenchRow {
        dims,
        t,
        bound: report::query_bound(dims),
        cost,
    })
}

/// Uses the palindrome checker on the longest `a…a` input halting within
/// `T/2` rows, so the running time grows with `T`.
pub fn cmd_bench(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut grid = Vec::new();
    for &lt in &cfg.t_grid {
        for &ls in &cfg.s_grid {
            let dims = Dims::new(1 << lt, 1 << ls, cfg.dims.lambda)
                .map_err(|e| ConfigError(format!("T=2^{lt} S=2^{ls}: {e}")))?;
            grid.push(dims);
        }
    }
    let rows = grid
        .par_iter()
        .map(|&d| bench_row(cfg, d))
        .collect::<Result<Vec<_>, _>>()?;
    let csv = report::bench_csv(&rows);
    save(cfg, "bench.csv", &csv)?;
    let over: Vec<String> = rows
        .iter()
        .filter(|r| r.cost.max_queries > r.bound)
        .map(|r| format!("T={} S={}: {} > {}", r.dims.rows, r.dims.cols, r.cost.max_queries, r.bound))
        .collect();
    if !over.is_empty() {
        return Err(CliError::Failed(format!("query bound exceeded: {}", over.join("; "))));
    }
    Ok(Report::ok(csv))
}

/// Loads settings the way the binary does, for callers embedding the CLI.
pub fn config_from(args: &RunArgs) -> Result<RunConfig, CliError> {
    Ok(RunConfig::from_settings(&args.settings()?)?)
}
