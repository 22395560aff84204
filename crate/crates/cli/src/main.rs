//! Batch front end for the two-state mean field game solvers.

mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use twostate_mfg::ctmc_sim::{
    branch_endpoints, selection_stats, simulate, InitialCondition, MfgPolicy, Policy, SelectionStats, SideCounts,
    SimConfig,
};
use twostate_mfg::master_entropy::{
    build_field, characteristic_fan, detect_shock_onset, pde_residual_audit, CurveEnd, EntropySolver, ResidualAudit,
};
use twostate_mfg::mfg_enumerator::{enumerate, CountKind, EnumerateOptions, Residuals};
use twostate_mfg::nplayer_hjb::{
    compare_to_master, extract_policy, recommended_steps, solve_hjb, verify_majority, MajorityReport, PolicyGrid,
    BAND_TOL, MAJORITY_TOL,
};
use twostate_mfg::{Error, Params};

use config::{List, Settings};
use output::{versioned, Cell, CsvWriter, Manifest, SCHEMA_VERSION};

/// Directory used when neither `--out` nor the config file names one.
const OUT_ENV: &str = "TWOSTATE_MFG_OUT";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Model(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(
                Error::InvalidParameter(_) | Error::Domain { .. } | Error::Precondition(_) | Error::Config(_),
            ) => 2,
            CliError::Model(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "twostate-mfg", version, about = "Equilibria, entropy solution and finite-player game for a two-state MFG")]
struct Cli {
    /// Config file with `key=value` lines; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $TWOSTATE_MFG_OUT, else the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// All equilibria of one instance.
    Enumerate(EnumerateArgs),
    /// Entropy solution on a grid, shock data and characteristic fan.
    Entropy(EntropyArgs),
    /// Finite-player HJB solve, majority check and convergence sweep.
    Hjb(HjbArgs),
    /// Monte Carlo simulation of the finite game.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long = "theta-bar")]
    theta_bar: Option<f64>,
    /// Root tolerance in the initial velocity.
    #[arg(long)]
    tol: Option<f64>,
    /// Mesh intervals for trajectory output.
    #[arg(long)]
    mesh: Option<usize>,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "T-max", alias = "T")]
    t_max: Option<f64>,
    /// Time rows on (0, T_max].
    #[arg(long)]
    nt: Option<usize>,
    /// Points on [-1, 1].
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long = "fan-curves")]
    fan_curves: Option<usize>,
    #[arg(long = "fan-points")]
    fan_points: Option<usize>,
    /// Half-width around x = 0 excluded from the residual audit.
    #[arg(long)]
    exclusion: Option<f64>,
    /// Offset from x = 0 for the one-sided values in onset detection.
    #[arg(long)]
    delta: Option<f64>,
    /// Separation that marks the shock onset.
    #[arg(long = "onset-tol")]
    onset_tol: Option<f64>,
}

#[derive(Args)]
struct HjbArgs {
    /// Number of other players.
    #[arg(long = "N")]
    n_others: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// RK4 steps (default keeps h <= 0.1/(N(2T+eta))).
    #[arg(long)]
    steps: Option<usize>,
    /// Values of N for the comparison with the master solution, e.g. 10,20,40.
    #[arg(long)]
    convergence: Option<List<usize>>,
    /// Half-width around theta = 1/2 excluded from the comparison.
    #[arg(long)]
    exclusion: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of players N + 1.
    #[arg(long)]
    players: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// `nash` or `entropy`.
    #[arg(long)]
    policy: Option<String>,
    /// Load the Nash policy from a `value_grid.csv` instead of solving.
    #[arg(long = "value-grid")]
    value_grid: Option<PathBuf>,
    /// Deterministic start with this many players at state 0.
    #[arg(long)]
    zeros: Option<usize>,
    /// IID start with this probability of state 0.
    #[arg(long = "theta-bar")]
    theta_bar: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "report-points")]
    report_points: Option<usize>,
    /// Write `paths/run_<r>.csv` for every run.
    #[arg(long = "write-paths")]
    write_paths: Option<bool>,
}

struct Context {
    settings: Settings,
    out: PathBuf,
    started: Instant,
    outputs: Vec<String>,
}

impl Context {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn finish(mut self, command: &str, seed: Option<u64>, tolerances: BTreeMap<String, f64>) -> Result<(), CliError> {
        let unused = self.settings.unused();
        if !unused.is_empty() {
            return Err(CliError::Usage(format!("unknown config keys for {command}: {}", unused.join(", "))));
        }
        let path = self.path("manifest.json");
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: self.settings.resolved.clone(),
            tolerances,
            seed,
            outputs: self.outputs.clone(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        output::write_json(&path, &manifest)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut settings = Settings::load(cli.config.as_deref())?;
    let env_out = std::env::var_os(OUT_ENV).map(|s| s.to_string_lossy().into_owned());
    let out: String = settings.get("out", cli.out.map(|p| p.to_string_lossy().into_owned()), Some(env_out.unwrap_or_else(|| ".".into())))?;
    let ctx = Context { settings, out: PathBuf::from(out), started: Instant::now(), outputs: Vec::new() };
    std::fs::create_dir_all(&ctx.out)?;
    match cli.command {
        Command::Enumerate(a) => cmd_enumerate(ctx, a),
        Command::Entropy(a) => cmd_entropy(ctx, a),
        Command::Hjb(a) => cmd_hjb(ctx, a),
        Command::Simulate(a) => cmd_simulate(ctx, a),
    }
}

#[derive(Serialize)]
struct SolutionSummary {
    index: usize,
    v: f64,
    tangent: bool,
    terminal_theta: f64,
    residuals: Residuals<f64>,
    trajectory: String,
}

#[derive(Serialize)]
struct SolutionsFile {
    eta: f64,
    horizon: f64,
    theta_bar: f64,
    count: usize,
    closed_form_count: Option<usize>,
    count_kind: CountKind,
    entropy_selected: usize,
    v: Vec<f64>,
    tangencies: Vec<f64>,
    zero_hit_speeds: Vec<f64>,
    search_bound: f64,
    solutions: Vec<SolutionSummary>,
}

fn cmd_enumerate(mut ctx: Context, a: EnumerateArgs) -> Result<(), CliError> {
    let s = &mut ctx.settings;
    let eta = s.get("eta", a.eta, None)?;
    let horizon = s.get("T", a.horizon, None)?;
    let theta_bar = s.get("theta-bar", a.theta_bar, None)?;
    let tol = s.get("tol", a.tol, Some(1e-12))?;
    let mesh = s.get_opt("mesh", a.mesh)?;
    let params = Params::new(eta, horizon, theta_bar)?;
    let report = enumerate(&params, EnumerateOptions { tol, mesh })?;

    let mut solutions = Vec::new();
    for (k, sol) in report.solutions.iter().enumerate() {
        let name = format!("trajectory_{k}.csv");
        let mut w = CsvWriter::create(&ctx.path(&name), &["t", "theta", "u0", "u1", "y", "x"])?;
        for i in 0..sol.times.len() {
            w.row(&[
                Cell::F(sol.times[i]),
                Cell::F(sol.theta[i]),
                Cell::F(sol.u0[i]),
                Cell::F(sol.u1[i]),
                Cell::F(sol.y[i]),
                Cell::F(sol.x[i]),
            ])?;
        }
        w.finish()?;
        solutions.push(SolutionSummary {
            index: k,
            v: sol.v,
            tangent: sol.tangent,
            terminal_theta: *sol.theta.last().unwrap(),
            residuals: sol.residuals,
            trajectory: name,
        });
    }
    let file = SolutionsFile {
        eta,
        horizon,
        theta_bar,
        count: report.count,
        closed_form_count: report.closed_form_count,
        count_kind: report.count_kind,
        entropy_selected: report.entropy_selected,
        v: report.solutions.iter().map(|s| s.v).collect(),
        tangencies: report.tangencies.clone(),
        zero_hit_speeds: report.zero_hit_speeds.clone(),
        search_bound: report.search_bound,
        solutions,
    };
    let path = ctx.path("solutions.json");
    output::write_json(&path, &versioned(file))?;
    println!("{} solution(s); entropy-selected index {}", report.count, report.entropy_selected);
    ctx.finish("enumerate", None, BTreeMap::from([("tol".into(), tol)]))
}

#[derive(Serialize)]
struct EntropySummary {
    eta: f64,
    t_max: f64,
    shock_onset_quadrature: Option<f64>,
    shock_onset_detected: Option<f64>,
    residual_audit: ResidualAudit<f64>,
    exclusion: f64,
}

fn cmd_entropy(mut ctx: Context, a: EntropyArgs) -> Result<(), CliError> {
    let s = &mut ctx.settings;
    let eta = s.get("eta", a.eta, None)?;
    let t_max = s.get("T-max", a.t_max, None)?;
    let nt = s.get("nt", a.nt, Some(400))?;
    let nx = s.get("nx", a.nx, Some(401))?;
    let fan_curves = s.get("fan-curves", a.fan_curves, Some(41))?;
    let fan_points = s.get("fan-points", a.fan_points, Some(200))?;
    let exclusion = s.get("exclusion", a.exclusion, Some(0.05))?;
    let delta = s.get("delta", a.delta, Some(1e-9))?;
    let onset_tol = s.get("onset-tol", a.onset_tol, Some(1e-4))?;
    if nt < 1 || nx < 3 || fan_curves < 2 || fan_points < 1 {
        return Err(CliError::Usage(format!(
            "grid sizes must be nt >= 1, nx >= 3, fan-curves >= 2, fan-points >= 1 (got {nt}, {nx}, {fan_curves}, {fan_points})"
        )));
    }
    if !(t_max > 0.0) {
        return Err(CliError::Usage(format!("T-max must be > 0, got {t_max}")));
    }

    let field = build_field(eta, t_max, nt, nx)?;
    let mut w = CsvWriter::create(&ctx.path("entropy_field.csv"), &["t", "x", "Y", "v"])?;
    for (j, &t) in field.t_grid.iter().enumerate() {
        for (i, &x) in field.x_grid.iter().enumerate() {
            w.row(&[Cell::F(t), Cell::F(x), Cell::F(field.y[j][i]), Cell::F(field.v_map[j][i])])?;
        }
    }
    w.finish()?;

    let mut w = CsvWriter::create(
        &ctx.path("shock.csv"),
        &["t", "Y_plus", "Y_minus", "rh_residual", "lax_margin_left", "lax_margin_right"],
    )?;
    for d in &field.shocks {
        w.row(&[
            Cell::F(d.t),
            Cell::F(d.y_plus),
            Cell::F(d.y_minus),
            Cell::F(d.rh_residual),
            Cell::F(d.lax_margin_left),
            Cell::F(d.lax_margin_right),
        ])?;
    }
    w.finish()?;

    let fan = characteristic_fan(eta, t_max, fan_curves, fan_points)?;
    let mut w = CsvWriter::create(&ctx.path("characteristic_fan.csv"), &["curve", "kind", "v", "t", "x", "y"])?;
    for (c, curve) in fan.iter().enumerate() {
        let kind = match curve.end {
            CurveEnd::Horizon => "characteristic",
            CurveEnd::Shock => "stopped",
        };
        for &(t, x, y) in &curve.points {
            w.row(&[Cell::U(c), Cell::S(kind), Cell::F(curve.v), Cell::F(t), Cell::F(x), Cell::F(y)])?;
        }
    }
    for d in &field.shocks {
        w.row(&[Cell::I(-1), Cell::S("shock"), Cell::F(f64::NAN), Cell::F(d.t), Cell::F(0.0), Cell::F(d.y_plus)])?;
    }
    w.finish()?;

    let solver = EntropySolver::new(eta)?;
    let summary = EntropySummary {
        eta,
        t_max,
        shock_onset_quadrature: solver.shock_onset(),
        shock_onset_detected: detect_shock_onset(&solver, t_max, delta, onset_tol)?,
        residual_audit: pde_residual_audit(&field, exclusion),
        exclusion,
    };
    let path = ctx.path("entropy_summary.json");
    output::write_json(&path, &versioned(&summary))?;
    println!(
        "field {nt}x{nx}; {} shock rows; residual {:.3e} away from |x| <= {exclusion}",
        field.shocks.len(),
        summary.residual_audit.max_residual
    );
    ctx.finish(
        "entropy",
        None,
        BTreeMap::from([("delta".into(), delta), ("onset-tol".into(), onset_tol), ("exclusion".into(), exclusion)]),
    )
}

#[derive(Serialize)]
#[serde(untagged)]
enum MajorityFile {
    Checked(MajorityReport<f64>),
    Skipped { skipped: String },
}

fn cmd_hjb(mut ctx: Context, a: HjbArgs) -> Result<(), CliError> {
    let s = &mut ctx.settings;
    let n = s.get("N", a.n_others, None)?;
    let eta = s.get("eta", a.eta, Some(0.0))?;
    let horizon = s.get("T", a.horizon, None)?;
    let steps = s.get("steps", a.steps, Some(recommended_steps(n.max(1), horizon, eta)))?;
    let convergence = s.get_opt("convergence", a.convergence)?;
    let exclusion = s.get("exclusion", a.exclusion, Some(0.1))?;
    let params = Params::new(eta, horizon, 0.5)?;

    let grid = solve_hjb(n, &params, steps)?;
    let policy = extract_policy(&grid);
    let mut w = CsvWriter::create(&ctx.path("value_grid.csv"), &["t", "theta", "V1", "alpha1", "alpha0"])?;
    for (j, &t) in grid.t_mesh.iter().enumerate() {
        for k in 0..=n {
            w.row(&[
                Cell::F(t),
                Cell::F(grid.theta(k)),
                Cell::F(grid.v1[j][k]),
                Cell::F(policy.alpha[1][j][k]),
                Cell::F(policy.alpha[0][j][k]),
            ])?;
        }
    }
    w.finish()?;

    let majority = match verify_majority(&grid) {
        Ok(r) => {
            println!("majority check: {} Y, {} W, {} band violations", r.y_violations, r.w_violations, r.band_violations);
            MajorityFile::Checked(r)
        }
        Err(Error::Precondition(m)) => MajorityFile::Skipped { skipped: m },
        Err(e) => return Err(e.into()),
    };
    let path = ctx.path("majority_report.json");
    output::write_json(&path, &versioned(&majority))?;

    if let Some(List(ns)) = convergence {
        if eta != 0.0 {
            return Err(CliError::Usage("the convergence sweep requires eta = 0".into()));
        }
        let mut w = CsvWriter::create(&ctx.path("convergence.csv"), &["N", "sup_error"])?;
        for &m in &ns {
            let g = solve_hjb(m, &params, recommended_steps(m, horizon, eta))?;
            let c = compare_to_master(&g, exclusion, &[0])?;
            w.row(&[Cell::U(m), Cell::F(c.sup_error)])?;
            println!("N = {m}: sup error {:.6e}", c.sup_error);
        }
        w.finish()?;
    }
    ctx.finish(
        "hjb",
        None,
        BTreeMap::from([("band".into(), BAND_TOL), ("majority".into(), MAJORITY_TOL), ("exclusion".into(), exclusion)]),
    )
}

/// Reads a `value_grid.csv` written by the `hjb` command.
fn load_policy(path: &Path) -> Result<PolicyGrid<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read value grid {}: {e}", path.display())))?;
    let bad = |m: String| CliError::Usage(format!("{}: {m}", path.display()));
    let mut lines = text.lines();
    if lines.next() != Some("t,theta,V1,alpha1,alpha0") {
        return Err(bad("unexpected header".into()));
    }
    let mut t_mesh: Vec<f64> = Vec::new();
    let mut alpha: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    for (n, line) in lines.enumerate() {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("line {}: {e}", n + 2)))?;
        if cols.len() != 5 {
            return Err(bad(format!("line {}: expected 5 columns", n + 2)));
        }
        if t_mesh.last() != Some(&cols[0]) {
            t_mesh.push(cols[0]);
            alpha[0].push(Vec::new());
            alpha[1].push(Vec::new());
        }
        alpha[1].last_mut().unwrap().push(cols[3]);
        alpha[0].last_mut().unwrap().push(cols[4]);
    }
    let width = alpha[1].first().map_or(0, Vec::len);
    if t_mesh.len() < 2 || width < 2 || alpha.iter().flatten().any(|r| r.len() != width) {
        return Err(bad("ragged or empty grid".into()));
    }
    Ok(PolicyGrid { n_others: width - 1, horizon: *t_mesh.last().unwrap(), t_mesh, alpha })
}

#[derive(Serialize)]
struct SelectionFile {
    n_players: usize,
    runs: usize,
    seed: u64,
    side_counts: SideCounts,
    stats: SelectionStats<f64>,
    terminal_thetas: Vec<f64>,
}

fn cmd_simulate(mut ctx: Context, a: SimulateArgs) -> Result<(), CliError> {
    let s = &mut ctx.settings;
    let players = s.get("players", a.players, None)?;
    let eta = s.get("eta", a.eta, Some(0.0))?;
    let horizon = s.get("T", a.horizon, None)?;
    let policy_name = s.get("policy", a.policy, Some("nash".to_string()))?;
    let value_grid = s.get_opt("value-grid", a.value_grid.map(|p| p.to_string_lossy().into_owned()))?;
    let zeros = s.get_opt("zeros", a.zeros)?;
    let theta_bar = s.get_opt("theta-bar", a.theta_bar)?;
    let runs = s.get("runs", a.runs, Some(1000))?;
    let seed = s.get("seed", a.seed, Some(0))?;
    let report_points = s.get("report-points", a.report_points, Some(101))?;
    let write_paths = s.get("write-paths", a.write_paths, Some(true))?;

    let (initial, mass) = match (zeros, theta_bar) {
        (Some(z), None) => (InitialCondition::Deterministic { zeros: z }, z as f64 / players.max(1) as f64),
        (None, Some(th)) => (InitialCondition::Iid { theta_bar: th }, th),
        _ => return Err(CliError::Usage("give exactly one of --zeros and --theta-bar".into())),
    };
    let policy = match policy_name.as_str() {
        "nash" => Policy::NashGrid(match value_grid {
            Some(p) => load_policy(Path::new(&p))?,
            None => {
                let n = players.checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
                    CliError::Usage("the Nash policy needs at least two players".into())
                })?;
                let grid = solve_hjb(n, &Params::new(eta, horizon, 0.5)?, recommended_steps(n, horizon, eta))?;
                extract_policy(&grid)
            }
        }),
        "entropy" => Policy::EntropyMfg(MfgPolicy::entropy(&Params::new(eta, horizon, mass)?)?),
        other => return Err(CliError::Usage(format!("unknown policy '{other}' (expected nash or entropy)"))),
    };
    let cfg = SimConfig { n_players: players, policy, eta, horizon, initial, n_runs: runs, seed, report_points };
    let result = simulate(&cfg)?;

    if write_paths {
        for (r, p) in result.paths.iter().enumerate() {
            let name = format!("paths/run_{r}.csv");
            let mut w = CsvWriter::create(&ctx.path(&name), &["time", "player", "new_state", "theta"])?;
            let traj = p.theta_trajectory();
            w.row(&[Cell::F(0.0), Cell::I(-1), Cell::I(-1), Cell::F(traj[0])])?;
            for (e, th) in p.events.iter().zip(&traj[1..]) {
                w.row(&[Cell::F(e.time), Cell::U(e.player), Cell::U(e.new_state as usize), Cell::F(*th)])?;
            }
            w.finish()?;
        }
    }
    let balanced = (mass - 0.5).abs() < 1e-12;
    let endpoints = if balanced { branch_endpoints(eta, horizon).ok() } else { None };
    let stats = selection_stats(&result, endpoints);
    let file = SelectionFile {
        n_players: players,
        runs,
        seed,
        side_counts: result.side_counts,
        stats,
        terminal_thetas: result.terminal_thetas.clone(),
    };
    let path = ctx.path("selection.json");
    output::write_json(&path, &versioned(&file))?;
    let c = result.side_counts;
    println!("{runs} runs: {} above, {} below, {} at one half", c.above_half, c.below_half, c.exactly_half);
    ctx.finish("simulate", Some(seed), BTreeMap::from([("rate-bound".into(), cfg.rate_bound())]))
}
