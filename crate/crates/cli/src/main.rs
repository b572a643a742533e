//! Batch driver: every pipeline as a subcommand with TOML config ingestion,
//! deterministic seeding, and CSV/JSON emission. Data goes to --out or
//! stdout; progress goes to stderr.

use bosegas::gp::{gap_check, minimize_gp, TrapPotential};
use bosegas::homogeneous::{mu_window, torus_sweep};
use bosegas::many_body::{condensation_report, exact_diagonalize, sandwich, ManyBodyProblem};
use bosegas::potential::RadialPotential;
use bosegas::quadratic::{assemble_from_gp, evaluate, verify_theorem, DEFAULT_C_EPS};
use bosegas::quasifree::{from_kernel, trial_upper_bound, TrialStateSpec};
use bosegas::scattering::{scale, solve_scattering, ScatteringSolution};
use bosegas::Error;
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bosegas", version, about = "Bose gas numerics driver")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Sampler seed for randomized sweeps.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker pool size (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Zero-energy scattering solution of the configured potential.
    Scatter,
    /// Gross–Pitaevskii ground state in the configured trap.
    Gp,
    /// Spectral-gap certification of the GP Hamiltonian.
    Gap,
    /// Randomized verification of the quadratic-Hamiltonian lower bounds.
    QuadVerify,
    /// Assemble the Bogoliubov (H, K) pair from a GP state and evaluate it.
    QuadAssemble,
    /// Homogeneous-gas lattice sum against the Plancherel reference.
    Homog,
    /// Exact diagonalization of the toy N-boson problem.
    Ed,
    /// Quasi-free trial-state energy sweep on the unit torus.
    TrialBound,
    /// Variational sandwich around the many-body ground energy.
    Sandwich,
}

// ---------------------------------------------------------------- config

fn default_v0() -> f64 {
    20.0
}
fn default_r0() -> f64 {
    0.4
}
fn default_r_max() -> f64 {
    0.8
}
fn default_samples() -> usize {
    4001
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialCfg {
    /// square_well | gaussian_truncated | hard_sphere | tabulated
    #[serde(default = "PotentialCfg::default_kind")]
    kind: String,
    #[serde(default = "default_v0")]
    v0: f64,
    #[serde(default = "default_r0")]
    r0: f64,
    file: Option<PathBuf>,
    #[serde(default = "default_r_max")]
    r_max: f64,
    #[serde(default = "default_samples")]
    samples: usize,
}

impl PotentialCfg {
    fn default_kind() -> String {
        "square_well".into()
    }
}

impl Default for PotentialCfg {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrapCfg {
    /// torus | harmonic
    #[serde(default = "TrapCfg::default_kind")]
    kind: String,
    /// Box half-side for the harmonic trap.
    #[serde(default = "TrapCfg::default_l")]
    l: f64,
    /// Grid points per axis.
    #[serde(default = "TrapCfg::default_m")]
    m: usize,
    /// Scattering length; defaults to the configured potential's.
    a: Option<f64>,
    #[serde(default = "TrapCfg::default_tol")]
    tol: f64,
}

impl TrapCfg {
    fn default_kind() -> String {
        "torus".into()
    }
    fn default_l() -> f64 {
        4.0
    }
    fn default_m() -> usize {
        16
    }
    fn default_tol() -> f64 {
        1e-8
    }
}

impl Default for TrapCfg {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadCfg {
    #[serde(default = "QuadCfg::default_instances")]
    instances: usize,
    #[serde(default = "QuadCfg::default_dim_min")]
    dim_min: usize,
    #[serde(default = "QuadCfg::default_dim_max")]
    dim_max: usize,
    #[serde(default = "QuadCfg::default_eps_min")]
    eps_min: f64,
    #[serde(default = "QuadCfg::default_eps_max")]
    eps_max: f64,
    /// Chemical potential; defaults to the middle of the certified window.
    mu: Option<f64>,
    #[serde(default = "QuadCfg::default_basis_size")]
    basis_size: usize,
    /// Scaling parameter for the assembled kernel.
    #[serde(default = "QuadCfg::default_n")]
    n: u32,
}

impl QuadCfg {
    fn default_instances() -> usize {
        1000
    }
    fn default_dim_min() -> usize {
        2
    }
    fn default_dim_max() -> usize {
        8
    }
    fn default_eps_min() -> f64 {
        0.05
    }
    fn default_eps_max() -> f64 {
        2.0
    }
    fn default_basis_size() -> usize {
        60
    }
    fn default_n() -> u32 {
        50
    }
}

impl Default for QuadCfg {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HomogCfg {
    /// Defaults to the middle of the admissible window for the potential.
    mu: Option<f64>,
    #[serde(default = "HomogCfg::default_sweep")]
    n_sweep: Vec<u32>,
    /// Shell-table cache directory (default: system temp).
    cache_dir: Option<PathBuf>,
}

impl HomogCfg {
    fn default_sweep() -> Vec<u32> {
        vec![50, 100, 200, 400, 800]
    }
}

impl Default for HomogCfg {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrialCfg {
    #[serde(default = "TrialCfg::default_ppu")]
    points_per_unit: usize,
    #[serde(default = "TrialCfg::default_sweep")]
    n_sweep: Vec<u32>,
    /// Grid for the underlying torus GP solve.
    #[serde(default = "TrialCfg::default_grid_m")]
    grid_m: usize,
    #[serde(default = "TrialCfg::default_tol")]
    tol: f64,
}

impl TrialCfg {
    fn default_ppu() -> usize {
        8
    }
    fn default_sweep() -> Vec<u32> {
        vec![8, 16, 32]
    }
    fn default_grid_m() -> usize {
        8
    }
    fn default_tol() -> f64 {
        1e-10
    }
}

impl Default for TrialCfg {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdCfg {
    #[serde(default = "EdCfg::default_modes")]
    modes: usize,
    #[serde(default = "EdCfg::default_n")]
    n: u32,
    #[serde(default = "EdCfg::default_lambda")]
    lambda: f64,
}

impl EdCfg {
    fn default_modes() -> usize {
        5
    }
    fn default_n() -> u32 {
        4
    }
    fn default_lambda() -> f64 {
        0.3
    }
}

impl Default for EdCfg {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SandwichCfg {
    #[serde(default = "EdCfg::default_modes")]
    modes: usize,
    #[serde(default = "EdCfg::default_n")]
    n: u32,
    #[serde(default = "EdCfg::default_lambda")]
    lambda: f64,
    /// Pairing amplitude of the diagonal trial kernel.
    #[serde(default = "SandwichCfg::default_kernel")]
    kernel: f64,
    #[serde(default = "SandwichCfg::default_c_max")]
    c_max: f64,
    #[serde(default = "SandwichCfg::default_c_cap")]
    c_cap: f64,
    /// Per-particle reference energy; defaults to E_N/N.
    gp_energy_analog: Option<f64>,
}

impl SandwichCfg {
    fn default_kernel() -> f64 {
        0.05
    }
    fn default_c_max() -> f64 {
        50.0
    }
    fn default_c_cap() -> f64 {
        1.0
    }
}

impl Default for SandwichCfg {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    #[serde(default)]
    potential: PotentialCfg,
    #[serde(default)]
    trap: TrapCfg,
    #[serde(default)]
    quad: QuadCfg,
    #[serde(default)]
    homog: HomogCfg,
    #[serde(default)]
    trial: TrialCfg,
    #[serde(default)]
    ed: EdCfg,
    #[serde(default)]
    sandwich: SandwichCfg,
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, Error> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Validation(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Validation(format!("bad config: {e}")))
        }
    }
}

fn build_potential(cfg: &PotentialCfg) -> Result<RadialPotential, Error> {
    let pot = match cfg.kind.as_str() {
        "square_well" => RadialPotential::SquareWell { v0: cfg.v0, r0: cfg.r0 },
        "gaussian_truncated" => RadialPotential::GaussianTruncated { v0: cfg.v0, r0: cfg.r0 },
        "hard_sphere" => RadialPotential::HardSphere { r0: cfg.r0 },
        "tabulated" => {
            let path = cfg
                .file
                .as_ref()
                .ok_or_else(|| Error::Validation("tabulated potential needs `file`".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
            RadialPotential::from_two_column(&text)?
        }
        other => return Err(Error::Validation(format!("unknown potential kind `{other}`"))),
    };
    pot.validate()?;
    Ok(pot)
}

fn build_trap(cfg: &TrapCfg) -> Result<TrapPotential, Error> {
    let trap = match cfg.kind.as_str() {
        "torus" => TrapPotential::unit_torus(cfg.m),
        "harmonic" => TrapPotential::harmonic(cfg.l, cfg.m),
        other => return Err(Error::Validation(format!("unknown trap kind `{other}`"))),
    };
    trap.validate()?;
    Ok(trap)
}

fn solve_base(cfg: &RunConfig) -> Result<ScatteringSolution, Error> {
    solve_scattering(&build_potential(&cfg.potential)?, cfg.potential.r_max, cfg.potential.samples)
}

// ---------------------------------------------------------------- output

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv(header: &str, rows: Vec<Vec<String>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------- commands

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(&cli.config)?;
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    }
    let text = match &cli.cmd {
        Cmd::Scatter => {
            let sol = solve_base(&cfg)?;
            eprintln!("scatter: a = {:.12e}", sol.a);
            match cli.format {
                Format::Json => serde_json::json!({
                    "a": sol.a,
                    "a_quadrature": sol.a_quadrature,
                    "match_radius": sol.match_radius,
                    "omega_bound_c": sol.omega_bound_c,
                })
                .to_string()
                    + "\n",
                Format::Csv => csv(
                    "a,a_quadrature,match_radius,omega_bound_c",
                    vec![vec![
                        f(sol.a),
                        f(sol.a_quadrature),
                        f(sol.match_radius),
                        f(sol.omega_bound_c),
                    ]],
                ),
            }
        }
        Cmd::Gp | Cmd::Gap => {
            let trap = build_trap(&cfg.trap)?;
            let a = match cfg.trap.a {
                Some(a) => a,
                None => solve_base(&cfg)?.a,
            };
            let state = minimize_gp(&trap, a, cfg.trap.tol)?;
            eprintln!(
                "gp: e_gp = {:.12e}, residual = {:.3e}",
                state.e_gp, state.residual
            );
            if matches!(cli.cmd, Cmd::Gp) {
                match cli.format {
                    Format::Json => state.header_json().to_string() + "\n",
                    Format::Csv => csv(
                        "e_gp,mu,a,residual",
                        vec![vec![f(state.e_gp), f(state.mu), f(state.a), f(state.residual)]],
                    ),
                }
            } else {
                let gap = match state.gap_report {
                    Some(g) => g,
                    None => gap_check(&state, &trap, a)?,
                };
                match cli.format {
                    Format::Json => serde_json::to_string(&gap).unwrap() + "\n",
                    Format::Csv => csv(
                        "mu1,mu2,margin,holds",
                        vec![vec![
                            f(gap.mu1),
                            f(gap.mu2),
                            f(gap.margin),
                            gap.holds.to_string(),
                        ]],
                    ),
                }
            }
        }
        Cmd::QuadVerify => {
            let q = &cfg.quad;
            let rep = verify_theorem(
                cli.seed,
                q.instances,
                (q.dim_min, q.dim_max),
                (q.eps_min, q.eps_max),
            )?;
            eprintln!(
                "quad-verify: {} instances, {} half-bound violations, max c_eps = {:.6e}",
                rep.rows.len(),
                rep.half_violations,
                rep.max_min_c_eps
            );
            match cli.format {
                Format::Json => serde_json::to_string(&rep).unwrap() + "\n",
                Format::Csv => csv(
                    "seed,dim,eps,exact,bound_half,bound_quarter,min_c_eps",
                    rep.rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.seed.to_string(),
                                r.dim.to_string(),
                                f(r.eps),
                                f(r.exact),
                                f(r.bound_half),
                                f(r.bound_quarter),
                                f(r.min_c_eps),
                            ]
                        })
                        .collect(),
                ),
            }
        }
        Cmd::QuadAssemble => {
            let base = solve_base(&cfg)?;
            let trap = build_trap(&cfg.trap)?;
            let state = minimize_gp(&trap, cfg.trap.a.unwrap_or(base.a), cfg.trap.tol)?;
            let gap = match state.gap_report {
                Some(g) => g,
                None => gap_check(&state, &trap, state.a)?,
            };
            let mu = cfg.quad.mu.unwrap_or(0.5 * (gap.mu1 + gap.mu2));
            let scaled = scale(&base, cfg.quad.n)?;
            let qh = assemble_from_gp(&state, &scaled, mu, cfg.quad.basis_size)?;
            let rep = evaluate(&qh, DEFAULT_C_EPS)?;
            eprintln!(
                "quad-assemble: dim = {}, exact = {:.12e}",
                qh.dim(),
                rep.exact
            );
            match cli.format {
                Format::Json => serde_json::json!({
                    "hamiltonian": qh.to_json(),
                    "report": rep,
                })
                .to_string()
                    + "\n",
                Format::Csv => csv(
                    "dim,mu,exact,bound_half,bound_quarter",
                    vec![vec![
                        qh.dim().to_string(),
                        f(mu),
                        f(rep.exact),
                        f(rep.bound_half),
                        f(rep.bound_quarter),
                    ]],
                ),
            }
        }
        Cmd::Homog => {
            let base = solve_base(&cfg)?;
            let mu = match cfg.homog.mu {
                Some(m) => m,
                None => {
                    let (lo, hi) = mu_window(base.a).ok_or_else(|| {
                        Error::Domain(format!("no admissible mu window for a = {}", base.a))
                    })?;
                    0.5 * (lo + hi)
                }
            };
            let cache = cfg
                .homog
                .cache_dir
                .clone()
                .unwrap_or_else(|| std::env::temp_dir().join("bosegas-shells"));
            std::fs::create_dir_all(&cache)?;
            let rows = torus_sweep(&base, mu, &cfg.homog.n_sweep, &cache)?;
            eprintln!("homog: {} sweep points at mu = {:.6e}", rows.len(), mu);
            match cli.format {
                Format::Json => serde_json::to_string(&rows).unwrap() + "\n",
                Format::Csv => csv(
                    "n,sum,reference,defect,tail_estimate,mu",
                    rows.iter()
                        .map(|r| {
                            vec![
                                r.n.to_string(),
                                f(r.sum),
                                f(r.reference),
                                f(r.defect),
                                f(r.tail_estimate),
                                f(r.mu),
                            ]
                        })
                        .collect(),
                ),
            }
        }
        Cmd::Ed => {
            let e = &cfg.ed;
            let problem = ManyBodyProblem::torus_1d(e.modes, e.n, e.lambda)?;
            let ground = exact_diagonalize(&problem)?;
            let rep = condensation_report(&problem, &ground.gamma1, ground.energy, ground.energy);
            eprintln!(
                "ed: E_N = {:.12e}, depletion = {:.6e}",
                ground.energy, rep.depletion
            );
            match cli.format {
                Format::Json => serde_json::json!({
                    "n": e.n,
                    "m": e.modes,
                    "lambda": e.lambda,
                    "e_n": ground.energy,
                    "depletion": rep.depletion,
                    "condensate_overlap": rep.condensate_overlap,
                })
                .to_string()
                    + "\n",
                Format::Csv => csv(
                    "n,m,lambda,e_n,depletion,condensate_overlap",
                    vec![vec![
                        e.n.to_string(),
                        e.modes.to_string(),
                        f(e.lambda),
                        f(ground.energy),
                        f(rep.depletion),
                        f(rep.condensate_overlap),
                    ]],
                ),
            }
        }
        Cmd::TrialBound => {
            let base = solve_base(&cfg)?;
            let t = &cfg.trial;
            let state = minimize_gp(&TrapPotential::unit_torus(t.grid_m), base.a, t.tol)?;
            let rep = trial_upper_bound(&state, &base, t.points_per_unit, &t.n_sweep)?;
            eprintln!(
                "trial-bound: slope = {:.4e} ± {:.4e}, young_ok = {}",
                rep.slope, rep.slope_stderr, rep.young_ok
            );
            match cli.format {
                Format::Json => serde_json::to_string(&rep).unwrap() + "\n",
                Format::Csv => csv(
                    "n,wick_energy,n_e_gp,defect,trace_defect",
                    rep.rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.n.to_string(),
                                f(r.wick_energy),
                                f(r.n_e_gp),
                                f(r.defect),
                                f(r.trace_defect),
                            ]
                        })
                        .collect(),
                ),
            }
        }
        Cmd::Sandwich => {
            let s = &cfg.sandwich;
            let problem = ManyBodyProblem::torus_1d(s.modes, s.n, s.lambda)?;
            let ground = exact_diagonalize(&problem)?;
            let analog = s.gp_energy_analog.unwrap_or(ground.energy / s.n as f64);
            let mut k = DMatrix::zeros(s.modes, s.modes);
            for j in 1..s.modes {
                k[(j, j)] = -s.kernel;
            }
            let pair = from_kernel(&TrialStateSpec { k_matrix: k, n: s.n }, &problem.condensate)?;
            let rep = sandwich(&problem, analog, &pair, s.c_max, s.c_cap)?;
            let dep = condensation_report(&problem, &ground.gamma1, ground.energy, ground.energy);
            eprintln!(
                "sandwich: E_N = {:.12e}, trial = {:.12e}, c = {:.6e}",
                rep.e_n, rep.trial_energy, rep.c_best
            );
            match cli.format {
                Format::Json => serde_json::json!({
                    "n": s.n,
                    "m": s.modes,
                    "lambda": s.lambda,
                    "report": rep,
                    "depletion": dep.depletion,
                })
                .to_string()
                    + "\n",
                Format::Csv => csv(
                    "n,m,lambda,e_n,depletion,trial_energy,c,c_big",
                    vec![vec![
                        s.n.to_string(),
                        s.modes.to_string(),
                        f(s.lambda),
                        f(rep.e_n),
                        f(dep.depletion),
                        f(rep.trial_energy),
                        f(rep.c_best),
                        f(rep.c_big),
                    ]],
                ),
            }
        }
    };
    emit(&cli.out, &text)
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Convergence { .. } => 3,
        Error::Resource(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
