//! `tcpsr` command line.
//!
//! Exit codes: 0 success, 1 usage or invalid input, 2 a validation sweep
//! with points outside the error band.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tcpsr_core::solve_window_distribution;
use tcpsr_sim::{run_simulation, run_simulation_traced, DropFlags};

use crate::config::{default_settings, named_setting, SettingConfig, SweepSpec, QUICK_PACKETS};
use crate::rows::{dist_table, sim_header, sim_record, ModelRow, Table};
use crate::sweep::run_sweep;
use crate::{HarnessError, Result, OUT_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CRITERIA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tcpsr", version, about = "NewReno send-rate model and packet simulator")]
struct Cli {
    /// Output directory; CSV goes to stdout when neither this nor the
    /// environment variable is set (validate defaults to `.`).
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full model, both simple laws and the regime at each (setting, p).
    Model(ModelArgs),
    /// One simulation run: measured element row and loss statistics.
    Simulate(SimulateArgs),
    /// Model against simulation over a grid, with an error-band summary.
    Validate(ValidateArgs),
    /// Steady-state window distribution as (W, P(W)).
    Dist(DistArgs),
}

#[derive(Debug, Args)]
struct SettingArgs {
    /// Reference setting label, e.g. 2M-R100-W12 (repeatable).
    #[arg(long)]
    setting: Vec<String>,

    /// Sweep manifest or single-setting TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FlagArgs {
    /// Never drop fast retransmissions.
    #[arg(long)]
    no_drop_rtx_td: bool,

    /// Never drop any retransmission.
    #[arg(long)]
    no_drop_rtx_all: bool,
}

impl FlagArgs {
    fn flags(&self) -> DropFlags {
        DropFlags { no_drop_rtx_td: self.no_drop_rtx_td, no_drop_rtx_all: self.no_drop_rtx_all }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[command(flatten)]
    settings: SettingArgs,

    /// Drop probability (repeatable); defaults to the standard grid.
    #[arg(long)]
    p: Vec<f64>,

    /// Saturation warning threshold on P(W > floor beta).
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    settings: SettingArgs,

    #[arg(long)]
    p: f64,

    /// Packets to send; defaults by p (10M, or 20M below 0.5%).
    #[arg(long)]
    packets: Option<u64>,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Run 1M packets.
    #[arg(long)]
    quick: bool,

    #[command(flatten)]
    flags: FlagArgs,

    /// Write one line per event to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    settings: SettingArgs,

    /// Drop probability (repeatable); overrides the grid.
    #[arg(long)]
    p: Vec<f64>,

    /// Packets per point, overriding the p-dependent default.
    #[arg(long)]
    packets: Option<u64>,

    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,

    /// 1M packets per point, error band slack doubled.
    #[arg(long)]
    quick: bool,

    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,

    #[command(flatten)]
    flags: FlagArgs,
}

#[derive(Debug, Args)]
struct DistArgs {
    /// Receiver window; alternatively take it from --setting.
    #[arg(long)]
    w_r: Option<u32>,

    #[arg(long)]
    setting: Option<String>,

    #[arg(long)]
    p: f64,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let out = cli.out;
    match cli.command {
        Command::Model(a) => cmd_model(a, out.as_deref(), stdout, stderr),
        Command::Simulate(a) => cmd_simulate(a, out.as_deref(), stdout, stderr),
        Command::Validate(a) => cmd_validate(a, out.as_deref(), stdout),
        Command::Dist(a) => cmd_dist(a, out.as_deref(), stdout),
    }
}

/// Writes `table` to `<dir>/<name>` or, without a directory, to stdout.
fn emit(table: &Table, dir: Option<&Path>, name: &str, stdout: &mut dyn Write) -> Result<()> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            let path = dir.join(name);
            let f = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
            table.write_to(BufWriter::new(f))?;
            writeln!(stdout, "wrote {}", path.display()).map_err(|e| HarnessError::io(&path, e))
        }
        None => table.write_to(stdout),
    }
}

fn check_p(p: f64) -> Result<f64> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(HarnessError::Usage(format!("p = {p} is outside (0, 1)")))
    }
}

/// A manifest, a single setting file, or neither (the defaults).
fn load_spec(config: Option<&Path>) -> Result<SweepSpec> {
    let Some(path) = config else {
        return Ok(SweepSpec::default());
    };
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    if let Ok(setting) = toml::from_str::<SettingConfig>(&text) {
        let spec = SweepSpec { settings: vec![setting], ..SweepSpec::default() };
        spec.validate()?;
        return Ok(spec);
    }
    SweepSpec::load(path)
}

/// Settings named on the command line, else those of the config (or the
/// seven reference settings).
fn select_settings(args: &SettingArgs, spec: &SweepSpec) -> Result<Vec<SettingConfig>> {
    if args.setting.is_empty() {
        return Ok(spec.settings.clone());
    }
    let pool = if args.config.is_some() { spec.settings.clone() } else { default_settings() };
    args.setting
        .iter()
        .map(|id| pool.iter().find(|s| s.id.eq_ignore_ascii_case(id)).cloned().map_or_else(|| named_setting(id), Ok))
        .collect()
}

fn cmd_model(a: ModelArgs, out: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let spec = load_spec(a.settings.config.as_deref())?;
    let settings = select_settings(&a.settings, &spec)?;
    let grid: Vec<f64> = if a.p.is_empty() { spec.p_grid.clone() } else { a.p.clone() };
    let grid = grid.into_iter().map(check_p).collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(ModelRow::header());
    for s in &settings {
        for &p in &grid {
            let row = ModelRow::compute(s, p, a.epsilon)?;
            if let Some(w) = &row.warning {
                let _ = writeln!(stderr, "warning: {} p={p}: {w}", s.id);
            }
            table.rows.push(row.record());
        }
    }
    emit(&table, out, "model.csv", stdout)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: SimulateArgs, out: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    if !(a.p.is_finite() && (0.0..1.0).contains(&a.p)) {
        return Err(HarnessError::Usage(format!("p = {} is outside [0, 1)", a.p)));
    }
    let spec = load_spec(a.settings.config.as_deref())?;
    let settings = select_settings(&a.settings, &spec)?;
    let [setting] = settings.as_slice() else {
        return Err(HarnessError::Usage("simulate takes exactly one setting".into()));
    };
    let packets = match (a.packets, a.quick) {
        (Some(0), _) => return Err(HarnessError::Usage("--packets must be positive".into())),
        (Some(n), _) => n,
        (None, true) => QUICK_PACKETS,
        (None, false) => spec.packets_for(a.p),
    };
    let path = setting.path()?;
    let report = match &a.trace {
        Some(file) => {
            let f = File::create(file).map_err(|e| HarnessError::io(file, e))?;
            let mut w = BufWriter::new(f);
            let mut failed = None;
            let report = run_simulation_traced(&path, &setting.tcp, a.p, packets, a.seed, a.flags.flags(), &mut |t| {
                if failed.is_none() {
                    if let Err(e) = writeln!(w, "{t}") {
                        failed = Some(e);
                    }
                }
            })?;
            if let Some(e) = failed.or_else(|| w.flush().err()) {
                return Err(HarnessError::io(file, e));
            }
            report
        }
        None => run_simulation(&path, &setting.tcp, a.p, packets, a.seed, a.flags.flags())?,
    };
    for issue in &report.inconsistencies {
        let _ = writeln!(stderr, "warning: {issue}");
    }
    let mut table = Table::new(sim_header());
    table.rows.push(sim_record(&setting.id, &report));
    emit(&table, out, "simulate.csv", stdout)?;
    Ok(EXIT_OK)
}

fn cmd_validate(a: ValidateArgs, out: Option<&Path>, stdout: &mut dyn Write) -> Result<i32> {
    let mut spec = load_spec(a.settings.config.as_deref())?;
    spec.settings = select_settings(&a.settings, &spec)?;
    if !a.p.is_empty() {
        spec.p_grid = a.p.clone();
    }
    if let Some(n) = a.packets {
        spec.packets = n;
        spec.packets_low_p = n;
    }
    if let Some(seed) = a.seed {
        spec.seed.base = seed;
    }
    spec.quick |= a.quick;
    spec.jobs = a.jobs.or(spec.jobs);
    spec.flags.no_drop_rtx_td |= a.flags.no_drop_rtx_td;
    spec.flags.no_drop_rtx_all |= a.flags.no_drop_rtx_all;
    if let Some(dir) = out {
        spec.out_dir = dir.to_path_buf();
    }
    spec.validate()?;
    let outcome = run_sweep(&spec, &spec.out_dir)?;
    let io = |e| HarnessError::io(&outcome.file, e);
    write!(stdout, "{}", outcome.summary()).map_err(io)?;
    writeln!(stdout, "wrote {} ({} computed)", outcome.file.display(), outcome.computed).map_err(io)?;
    Ok(if outcome.passed() { EXIT_OK } else { EXIT_CRITERIA })
}

fn cmd_dist(a: DistArgs, out: Option<&Path>, stdout: &mut dyn Write) -> Result<i32> {
    let w_r = match (a.w_r, &a.setting) {
        (Some(w), None) => w,
        (None, Some(id)) => named_setting(id)?.receiver_window,
        _ => return Err(HarnessError::Usage("give exactly one of --w-r and --setting".into())),
    };
    let p = check_p(a.p)?;
    let dist = solve_window_distribution(w_r, p).map_err(|e| HarnessError::Usage(e.to_string()))?;
    emit(&dist_table(&dist), out, "dist.csv", stdout)?;
    Ok(EXIT_OK)
}
