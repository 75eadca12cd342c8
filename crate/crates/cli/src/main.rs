use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gkc_cli::{
    cmd_ablate, cmd_attribute, cmd_compare, cmd_curate, cmd_embed, cmd_eval, cmd_profiles, cmd_synth, CliError,
    CuratorKind, Overrides, StageReport, Workspace,
};
use gkc_core::embedding::EmbedderKind;
use gkc_core::eval::Metric;
use gkc_core::features::Strategy;

#[derive(Parser)]
#[command(name = "gkc", version, about = "Curate, embed, and benchmark multi-modal clinical profiles")]
struct Cli {
    /// Output directory holding every stage's artifacts.
    #[arg(long, global = true, default_value = "gkc-out")]
    out: PathBuf,
    /// Run configuration (TOML or JSON); defaults to the saved one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the synthetic cohort and the CV plan.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    provider: Option<Provider>,
    #[arg(long, global = true, value_enum)]
    embedder: Option<Provider>,
    /// Reject curator reports with keys outside the schema.
    #[arg(long, global = true)]
    strict_schema: bool,
    /// Mock embedding dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    Mock,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Roc,
    Prc,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or import the cohort.
    Synth,
    /// Compile per-modality text profiles.
    Profiles,
    /// Summarize profiles with the curator.
    Curate,
    /// Embed profiles (CTE) and curated reports (GKC).
    Embed,
    /// Repeated stratified cross-validation for each strategy and model.
    Eval {
        /// Also record per-fold row access and write results/audit.json.
        #[arg(long)]
        audit: bool,
    },
    /// Cross-validate every nonempty modality subset.
    Ablate,
    /// Grouped permutation importance per modality.
    Attribute,
    /// Strategy table with pairwise Wilcoxon tests from saved records.
    Compare {
        strategies: Vec<Strategy>,
        #[arg(long, value_enum, default_value = "roc")]
        metric: MetricArg,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Profiles => "profiles",
            Command::Curate => "curate",
            Command::Embed => "embed",
            Command::Eval { .. } => "eval",
            Command::Ablate => "ablate",
            Command::Attribute => "attribute",
            Command::Compare { .. } => "compare",
        }
    }
}

fn run(cli: &Cli) -> Result<StageReport, CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        provider: cli.provider.map(|p| match p {
            Provider::Mock => CuratorKind::Mock,
            Provider::External => CuratorKind::External,
        }),
        embedder: cli.embedder.map(|p| match p {
            Provider::Mock => EmbedderKind::Mock,
            Provider::External => EmbedderKind::External,
        }),
        strict_schema: cli.strict_schema,
        dim: cli.dim,
    };
    let ws = Workspace::open(&cli.out, cli.config.as_deref(), &overrides)?;
    match &cli.command {
        Command::Synth => cmd_synth(&ws),
        Command::Profiles => cmd_profiles(&ws),
        Command::Curate => cmd_curate(&ws),
        Command::Embed => cmd_embed(&ws),
        Command::Eval { audit } => cmd_eval(&ws, *audit),
        Command::Ablate => cmd_ablate(&ws),
        Command::Attribute => cmd_attribute(&ws),
        Command::Compare { strategies, metric } => {
            let metric = match metric {
                MetricArg::Roc => Metric::AucRoc,
                MetricArg::Prc => Metric::AucPrc,
            };
            let (report, table) = cmd_compare(&ws, strategies, metric)?;
            print!("{table}");
            Ok(report)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.summary_json(cli.command.name()));
            ExitCode::from(2)
        }
    }
}
