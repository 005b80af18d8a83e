use std::path::PathBuf;
use std::process::ExitCode;

use aberdip::config::{GridOrder, ModelChoice};
use aberdip::output::write_file;
use aberdip::run::{
    default_battery, run_cancellation_test, run_dip, run_sweep, set_expectation, zernike_table, Expectation,
};
use aberdip::{CliError, CliResult, Scenario, ScenarioConfig};
use clap::{Args, Parser, Subcommand};

/// Two-photon interference dips behind a deformable mirror.
#[derive(Parser, Debug)]
#[command(name = "aberdip", version, arg_required_else_help = true)]
struct Cli {
    /// Print the experimental default config as JSON and exit.
    #[arg(long)]
    print_default_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One dip curve: `<out>.csv` and the `<out>.json` sidecar.
    Dip(RunArgs),
    /// Curves over amplitudes of one mode plus `<out>_summary.csv`.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Mode as `n,m`, e.g. `3,-1`.
        #[arg(long, value_parser = parse_mode, allow_hyphen_values = true)]
        mode: (u32, i32),
        /// Peak-to-valley amplitudes in microns, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.75")]
        pv: Vec<f64>,
    },
    /// Even modes must cancel, odd modes must show; writes `<out>_cancel.txt`.
    CancelTest {
        #[command(flatten)]
        run: RunArgs,
        /// Treat `n,m` as expected to cancel (repeatable).
        #[arg(long, value_parser = parse_mode, allow_hyphen_values = true)]
        expect_cancel: Vec<(u32, i32)>,
        /// Treat `n,m` as expected to show an effect (repeatable).
        #[arg(long, value_parser = parse_mode, allow_hyphen_values = true)]
        expect_effect: Vec<(u32, i32)>,
    },
    /// Radial polynomial coefficients as CSV.
    ZernikeTable {
        #[arg(long, default_value_t = 8)]
        max_n: u32,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario JSON, or the metadata sidecar of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelChoice>,
    /// Output path prefix.
    #[arg(long)]
    out: Option<String>,
    /// Integer order per axis or `auto`.
    #[arg(long)]
    grid_order: Option<GridOrder>,
}

fn parse_mode(s: &str) -> Result<(u32, i32), String> {
    let (n, m) = s.split_once(',').ok_or_else(|| format!("expected `n,m`, got `{s}`"))?;
    let n = n.trim().parse().map_err(|_| format!("bad radial order `{n}`"))?;
    let m = m.trim().parse().map_err(|_| format!("bad azimuthal order `{m}`"))?;
    Ok((n, m))
}

impl RunArgs {
    fn scenario(&self) -> CliResult<Scenario> {
        let (mut cfg, text, source) = match &self.config {
            Some(p) => {
                let (cfg, text) = ScenarioConfig::load(p)?;
                (cfg, Some(text), p.display().to_string())
            }
            None => (ScenarioConfig::default(), None, "<default>".to_string()),
        };
        if let Some(m) = self.model {
            cfg.model = m;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        if let Some(g) = self.grid_order {
            cfg.grid_order = g;
        }
        cfg.resolve(text.as_deref(), &source)
    }
}

fn warn_under_resolved(s: &Scenario, diag: &aberdip_core::interference::KernelDiagnostics) {
    if diag.under_resolved {
        eprintln!(
            "warning: grid order {} is below the resolution bound {} for {}",
            diag.grid_order, diag.required_order, s.config.output
        );
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    if cli.print_default_config {
        println!("{}", ScenarioConfig::default().to_json());
        return Ok(());
    }
    match cli.command {
        None => Err(CliError::Usage("no subcommand given".into())),
        Some(Command::Dip(args)) => {
            let s = args.scenario()?;
            let out = run_dip(&s)?;
            warn_under_resolved(&s, &out.curve.diagnostics);
            println!("{}", out.csv.display());
            println!("{}", out.metadata.display());
            Ok(())
        }
        Some(Command::Sweep { run, mode, pv }) => {
            let s = run.scenario()?;
            let out = run_sweep(&s, mode.0, mode.1, &pv)?;
            println!("{}", out.summary.display());
            Ok(())
        }
        Some(Command::CancelTest {
            run,
            expect_cancel,
            expect_effect,
        }) => {
            let s = run.scenario()?;
            let mut battery = default_battery();
            for (n, m) in expect_cancel {
                set_expectation(&mut battery, n, m, Expectation::Cancel);
            }
            for (n, m) in expect_effect {
                set_expectation(&mut battery, n, m, Expectation::Effect);
            }
            let out = run_cancellation_test(&s, &battery)?;
            print!("{}", out.text);
            if out.inconclusive() > 0 {
                eprintln!("warning: {} odd modes inconclusive (pupil too small)", out.inconclusive());
            }
            let failed = out.failed_modes();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Cancellation { modes: failed })
            }
        }
        Some(Command::ZernikeTable { max_n, out }) => {
            let table = zernike_table(max_n)?;
            match out {
                Some(p) => write_file(&p, &table),
                None => {
                    print!("{table}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
