use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wvsim_cli::{
    cmd_amplification, cmd_check, cmd_profile, cmd_speckle, CliError, KeyValues, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "wvsim",
    version,
    about = "Weak-value measurement with a partially coherent pointer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Postselected pointer densities, one column per gamma.
    Profile(Common),
    /// |amplification| over gamma for each epsilon.
    Amplification(Common),
    /// Speckle cross-correlation and the coherence width it implies.
    Speckle(Common),
    /// Weak value, regime diagnostic and oracle agreement.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Key-value config file, applied after the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in parameter set: fig2, fig3b, fig3d or fig4.
    #[arg(long)]
    preset: Option<String>,
    /// Output CSV path (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` override, applied last. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut layers = Vec::new();
        if let Some(name) = &self.preset {
            layers.push(KeyValues::preset(name)?);
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            layers.push(KeyValues::parse(&text)?);
        }
        layers.push(KeyValues::from_overrides(&self.set)?);
        if let Some(seed) = self.seed {
            let mut kv = KeyValues::default();
            kv.set("seed", seed.to_string());
            layers.push(kv);
        }
        RunConfig::from_layers(layers)
    }
}

fn configure_threads() -> Result<(), CliError> {
    match std::env::var("WVSIM_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| {
                CliError::Config(format!("WVSIM_THREADS: `{v}` is not a thread count"))
            })?;
            wvsim_core::parallel::init_global_pool(n);
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (common, f): (&Common, fn(&RunConfig) -> Result<_, CliError>) = match &cli.command {
        Command::Profile(c) => (c, cmd_profile),
        Command::Amplification(c) => (c, cmd_amplification),
        Command::Speckle(c) => (c, cmd_speckle),
        Command::Check(c) => (c, cmd_check),
    };
    let cfg = common.load()?;
    let result = f(&cfg)?;
    let out_path = common.out.clone().or_else(|| cfg.output_path.clone());
    match (result.table, out_path) {
        (Some(table), Some(path)) => {
            table.write_to(&path)?;
            print!("{}", result.summary);
            println!("wrote {}", path.display());
        }
        (Some(table), None) => {
            use std::io::Write;
            std::io::stdout().write_all(&table.to_bytes()?)?;
            eprint!("{}", result.summary);
        }
        (None, _) => print!("{}", result.summary),
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap's own usage errors exit with 2, which is reserved for math-domain
    // failures here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {}", msg.lines().next().unwrap_or(""));
            for line in msg.lines().skip(1) {
                eprintln!("{line}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
