use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

use report::Report;

#[derive(Parser, Debug)]
#[command(
    name = "purelab",
    version,
    about = "Check operational-probabilistic theory results on classical, quantum and real-quantum models",
    after_help = "Exit codes: 0 success, 1 a numerical check or expectation failed, 2 usage or input error.\n\
                  Set PURELAB_LOG=error|info|debug for diagnostics on stderr."
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Theory: classical, quantum, real-quantum or all.
    #[arg(long, global = true, default_value = "quantum")]
    pub theory: String,
    /// System dimension(s), `N` or `N,M`.
    #[arg(long, global = true, default_value = "2", value_parser = parse_dims)]
    pub dim: Dims,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for numerical checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Golden verdict file; mismatches exit with code 1.
    #[arg(long, global = true)]
    pub expect: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Md,
}

#[derive(Clone, Debug)]
pub struct Dims(pub Vec<usize>);

impl std::ops::Deref for Dims {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

fn parse_dims(s: &str) -> Result<Dims, String> {
    let dims = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad dimension '{p}': {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if dims.is_empty() || dims.len() > 2 || dims.contains(&0) {
        return Err("expected N or N,M with positive N, M".into());
    }
    Ok(Dims(dims))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the axiom battery and print the verdict matrix.
    #[command(after_help = "Example: purelab axioms --theory all --dim 2 --expect golden.json")]
    Axioms {
        /// Random samples for sampled checks.
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Evaluate a circuit script.
    #[command(after_help = "Example: purelab eval teleport.opc --run tele")]
    Eval {
        script: PathBuf,
        /// Run to evaluate; defaults to the first one.
        #[arg(long)]
        run: Option<String>,
    },
    /// Operational norm of the difference of two states or two maps.
    #[command(after_help = "Example: purelab norm rho0.json rho1.json")]
    Norm {
        a: PathBuf,
        b: PathBuf,
        /// Seesaw restarts for maps.
        #[arg(long, default_value_t = 50)]
        restarts: usize,
    },
    /// Optimal discrimination of two states.
    #[command(after_help = "Example: purelab discriminate rho0.json rho1.json --prior 0.5")]
    Discriminate {
        a: PathBuf,
        b: PathBuf,
        /// Prior of the first state.
        #[arg(long, default_value_t = 0.5)]
        prior: f64,
    },
    /// Store a map as its Choi state and retrieve it; without a file, round
    /// trip and link random channels.
    #[command(after_help = "Example: purelab choi --dim 2 --count 100")]
    Choi {
        map: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Deterministic teleportation with Bell effects and Weyl corrections.
    #[command(after_help = "Example: purelab teleport --theory quantum --dim 3")]
    Teleport,
    /// Weyl twirl and its invariant state.
    #[command(after_help = "Example: purelab twirl --dim 3")]
    Twirl,
    /// Error-correction checks on a code spec file or a built-in code.
    #[command(after_help = "Example: purelab ec --code bit-flip")]
    Ec {
        /// Code spec JSON: {"projector": ..., "kraus": [...]}.
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = commands::BuiltinCode::BitFlip)]
        code: commands::BuiltinCode,
    },
    /// Causal-order check and comb decomposition.
    #[command(after_help = "Example: purelab comb --dim 2")]
    Comb {
        /// Map or Kraus document on A1 A2 → B1 B2; random comb if absent.
        map: Option<PathBuf>,
        /// Memory dimension of the random comb.
        #[arg(long, default_value_t = 2)]
        memory: usize,
    },
    /// Stinespring dilation and complementary channel.
    #[command(after_help = "Example: purelab dilate --dim 2")]
    Dilate {
        /// Map or Kraus document; amplitude damping with γ = 0.3 if absent.
        map: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let env = env_logger::Env::new().filter_or("PURELAB_LOG", "error");
    env_logger::Builder::from_env(env).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => match report.emit(&cli.global) {
            Ok(()) if report.ok => ExitCode::SUCCESS,
            Ok(()) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> purelab::Result<Report> {
    let g = &cli.global;
    log::info!("{:?}", cli.command);
    match &cli.command {
        Command::Axioms { samples } => commands::axioms(g, *samples),
        Command::Eval { script, run } => commands::eval(g, script, run.as_deref()),
        Command::Norm { a, b, restarts } => commands::norm(g, a, b, *restarts),
        Command::Discriminate { a, b, prior } => commands::discriminate(g, a, b, *prior),
        Command::Choi { map, count } => commands::choi(g, map.as_deref(), *count),
        Command::Teleport => commands::teleport(g),
        Command::Twirl => commands::twirl(g),
        Command::Ec { spec, code } => commands::ec(g, spec.as_deref(), *code),
        Command::Comb { map, memory } => commands::comb(g, map.as_deref(), *memory),
        Command::Dilate { map } => commands::dilate(g, map.as_deref()),
    }
}
