//! `ctp-mirror`: configuration-driven batch runs of the moving-mirror toolkit.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ctp_mirror::config::{Format, RunConfig};
use ctp_mirror::energetics::{
    balance_report, dissipated_energy_freq, transition_probability, FrequencyMode,
};
use ctp_mirror::io::{self, write_atomic};
use ctp_mirror::trajectory::{spectrum_of, TimeGrid};
use ctp_mirror::{casimir, dynamics, Error, EvolveOptions, MemoryMethod, MirrorKernels, Result};

#[derive(Parser)]
#[command(name = "ctp-mirror", version, about = "Moving-mirror dynamical Casimir toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args)]
struct GlobalOpts {
    /// Output directory (overrides `outputs.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reserved; all computations are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Add the static Casimir force to the `evolve` equation of motion.
    #[arg(long, global = true)]
    include_casimir_force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Coupling matrix, spectral coefficients and sampled memory kernels.
    Kernels { config: PathBuf },
    /// Renormalized static energy density.
    Casimir { config: PathBuf },
    /// Self-consistent mirror evolution with memory forces.
    Evolve { config: PathBuf },
    /// Time-domain dissipated energy against the spectral radiated energy.
    Balance { config: PathBuf },
    /// Trajectory spectrum with discrete and continuum radiated energy.
    Spectrum { config: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kernels { .. } => "kernels",
            Command::Casimir { .. } => "casimir",
            Command::Evolve { .. } => "evolve",
            Command::Balance { .. } => "balance",
            Command::Spectrum { .. } => "spectrum",
        }
    }

    fn config(&self) -> &Path {
        match self {
            Command::Kernels { config }
            | Command::Casimir { config }
            | Command::Evolve { config }
            | Command::Balance { config }
            | Command::Spectrum { config } => config,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse(_) => 2,
        Error::Domain(_) | Error::Numerical(_) => 3,
        Error::Io { .. } => 4,
    }
}

/// Where and how results are written.
struct Sink {
    dir: PathBuf,
    cfg: RunConfig,
    effective: Value,
    command: &'static str,
    seed: Option<u64>,
    written: Vec<PathBuf>,
}

impl Sink {
    fn new(cfg: RunConfig, out: Option<PathBuf>, command: &'static str, seed: Option<u64>) -> Result<Self> {
        let effective = serde_json::to_value(cfg.resolved()?).expect("config serializes");
        let dir = out.unwrap_or_else(|| cfg.outputs.dir.clone());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            cfg,
            effective,
            command,
            seed,
            written: Vec::new(),
        })
    }

    fn csv(&mut self, name: &str, body: Vec<u8>) -> Result<()> {
        if !self.cfg.outputs.wants(Format::Csv) {
            return Ok(());
        }
        let mut bytes = format!("# config: {}\n", self.effective).into_bytes();
        bytes.extend(body);
        self.write(name, &bytes)
    }

    fn json(&mut self, name: &str, result: Value) -> Result<()> {
        if !self.cfg.outputs.wants(Format::Json) {
            return Ok(());
        }
        let doc = json!({
            "command": self.command,
            "units": "natural (c = hbar = k_B = 1)",
            "config": self.effective,
            "result": result,
            "metadata": { "version": env!("CARGO_PKG_VERSION"), "seed": self.seed },
        });
        let mut bytes = serde_json::to_vec_pretty(&doc).expect("report serializes");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

fn kernels_of(cfg: &RunConfig) -> Result<MirrorKernels> {
    Ok(MirrorKernels::new(cfg.cavity()?, cfg.thermal()?))
}

fn run_kernels(cfg: &RunConfig, sink: &mut Sink) -> Result<String> {
    let kernels = kernels_of(cfg)?;
    let k = kernels.k_max() as i64;
    let mut fdt_max: f64 = 0.0;
    for a in (-k..=k).filter(|&a| a != 0) {
        for b in (-k..=k).filter(|&b| b != 0 && b != -a) {
            fdt_max = fdt_max.max(kernels.fdt_residual(a, b)?);
        }
    }
    let t_max = cfg.kernels.t_max.unwrap_or(2.0 * cfg.cavity.d);
    let n = cfg.kernels.samples;
    let times: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
    let k00: Vec<(f64, f64, f64)> = times
        .iter()
        .map(|&t| {
            let v = kernels.kernel_00(t);
            (t, v.n_plus + v.n_minus, v.m_plus)
        })
        .collect();
    let k11: Vec<(f64, f64, f64)> = times
        .iter()
        .map(|&t| {
            let v = kernels.kernel_11(t);
            (t, v.n, v.m)
        })
        .collect();
    sink.csv("coupling.csv", io::coupling_csv(kernels.coupling()))?;
    sink.csv("spectral.csv", io::spectral_csv(kernels.spectral_table()))?;
    sink.csv(
        "kernels_00.csv",
        io::kernel_csv(&k00, "t [time]; N = N+ + N- and M = M+ of the 00 kernels [1/time^2]"),
    )?;
    sink.csv(
        "kernels_11.csv",
        io::kernel_csv(&k11, "t [time]; N and M = summed 11 kernels [dimensionless]"),
    )?;
    sink.json(
        "kernels.json",
        json!({
            "k_max": kernels.k_max(),
            "omega_pl": kernels.cavity().omega_pl,
            "temperature": kernels.thermal().temperature,
            "max_fdt_residual": fdt_max,
            "lines_00": kernels.force_lines().m00.lines.len(),
            "lines_11": kernels.force_lines().m11.lines.len(),
        }),
    )?;
    Ok(format!("kernels: K_max = {k}, max FDT residual = {fdt_max:.3e}"))
}

fn run_casimir(cfg: &RunConfig, sink: &mut Sink) -> Result<String> {
    let r = casimir::renormalized_density(cfg.cavity.d, &cfg.thermal()?)?;
    sink.json("casimir.json", serde_json::to_value(&r).expect("serializes"))?;
    Ok(format!(
        "casimir: eps_ren = {:.9e} (extrapolation error {:.1e})",
        r.renormalized, r.model_error
    ))
}

fn run_evolve(cfg: &RunConfig, sink: &mut Sink, casimir_flag: bool) -> Result<String> {
    let mirror = cfg.mirror()?;
    let m = cfg.mirror.as_ref().expect("checked by mirror()");
    let kernels = kernels_of(cfg)?;
    let dt = match cfg.solver.dt {
        Some(dt) => dt,
        None => cfg.default_dt()?,
    };
    let grid = TimeGrid::new(0.0, dt, cfg.solver.steps + 1)?;
    let casimir_force = if casimir_flag || cfg.solver.include_casimir_force {
        Some(casimir::renormalized_density(cfg.cavity.d, &cfg.thermal()?)?.renormalized)
    } else {
        None
    };
    let options = EvolveOptions {
        method: if cfg.solver.accel { MemoryMethod::Recursive } else { MemoryMethod::Direct },
        casimir_force,
        ..Default::default()
    };
    let r = dynamics::evolve(&mirror, Some(&kernels), m.x0, m.v0, grid, &options)?;
    sink.csv("trajectory.csv", io::trajectory_csv(&r.trajectory))?;
    sink.csv("forces.csv", io::forces_csv(&r.trajectory, &r.force_x, &r.force_xdot))?;
    sink.json("evolve.json", serde_json::to_value(&r.diagnostics).expect("serializes"))?;
    let d = &r.diagnostics;
    Ok(format!(
        "evolve: {} steps, energy {:.6e} -> {:.6e}, work = {:.6e}",
        d.steps,
        d.energy_initial,
        d.energy_final,
        d.work_x + d.work_xdot
    ))
}

fn run_balance(cfg: &RunConfig, sink: &mut Sink) -> Result<String> {
    let traj = cfg.trajectory()?;
    let kernels = kernels_of(cfg)?;
    let report = balance_report(&traj, &kernels, &cfg.balance_options())?;
    sink.csv("modes.csv", io::mode_breakdown_csv(&report.mode_breakdown))?;
    let mut value = serde_json::to_value(&report).expect("serializes");
    value["passed"] = json!(report.passed());
    sink.json("balance.json", value)?;
    report.check()?;
    Ok(format!(
        "balance: E_trans = {:.6e}, E_diss_time = {:.6e}, residual = {:.3e}",
        report.e_trans, report.e_diss_time, report.balance_residual
    ))
}

fn run_spectrum(cfg: &RunConfig, sink: &mut Sink) -> Result<String> {
    let traj = cfg.trajectory()?;
    let kernels = kernels_of(cfg)?;
    let sp = spectrum_of(&traj)?;
    let discrete = dissipated_energy_freq(&sp, &kernels, FrequencyMode::Discrete)?;
    let continuum = dissipated_energy_freq(&sp, &kernels, FrequencyMode::Continuum)?;
    let p_discrete = transition_probability(&sp, &kernels, FrequencyMode::Discrete)?;
    let p_continuum = transition_probability(&sp, &kernels, FrequencyMode::Continuum)?;
    sink.csv("spectrum.csv", io::spectrum_csv(&sp))?;
    sink.json(
        "spectrum.json",
        json!({
            "samples": traj.len(),
            "nyquist": sp.nyquist(),
            "discrete": discrete,
            "e_trans_continuum": continuum.e_trans,
            "p_trans_discrete": p_discrete,
            "p_trans_continuum": p_continuum,
        }),
    )?;
    Ok(format!(
        "spectrum: E_trans = {:.6e} (continuum {:.6e}), P_trans = {:.6e}",
        discrete.e_trans, continuum.e_trans, p_discrete
    ))
}

fn run(cli: Cli) -> Result<String> {
    let cfg = RunConfig::load(cli.command.config())?;
    let mut sink = Sink::new(cfg.clone(), cli.global.out, cli.command.name(), cli.global.seed)?;
    let summary = match &cli.command {
        Command::Kernels { .. } => run_kernels(&cfg, &mut sink),
        Command::Casimir { .. } => run_casimir(&cfg, &mut sink),
        Command::Evolve { .. } => run_evolve(&cfg, &mut sink, cli.global.include_casimir_force),
        Command::Balance { .. } => run_balance(&cfg, &mut sink),
        Command::Spectrum { .. } => run_spectrum(&cfg, &mut sink),
    }?;
    Ok(format!("{summary} -> {}", sink.dir.display()))
}

fn configure_threads() {
    let Ok(raw) = std::env::var("CTP_MIRROR_THREADS") else {
        return;
    };
    match raw.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring CTP_MIRROR_THREADS={raw:?}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            let doc = json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code });
            eprintln!("{doc}");
            ExitCode::from(code)
        }
    }
}
