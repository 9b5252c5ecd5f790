use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mrlcd_core::experiments::*;
use mrlcd_core::{EntryLaw, Error, ExperimentConfig, ExperimentReport, Result};

/// Seeded experiments on arithmetic structure, anticoncentration and the
/// smallest singular value of random symmetric matrices.
///
/// Exit status: 0 pass, 1 violation, 2 configuration error, 3 capacity error.
#[derive(Parser)]
#[command(name = "mrlcd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tail P[s_n <= eps / sqrt n] of the smallest singular value.
    SvalTail(Common),
    /// Exact singular fraction of symmetric sign matrices, n <= 5.
    SingularityExact(Common),
    /// Exact check of the decoupling inequality on random integer matrices.
    Decouple(Common),
    /// Rademacher against signed-Bernoulli concentration ratios.
    Replace(Common),
    /// MRLCD of A^{-1} X against all-ones and random baselines.
    StructureScan(Common),
    /// Size of A^{-1} X relative to the Hilbert-Schmidt norm of A^{-1}.
    Denominator(Common),
    /// Small-ball frequencies of the normalized quadratic form.
    Quadratic(Common),
    /// Row-distance identity through the quadratic form of the minor.
    Identity(Common),
    /// Tensorization of small-ball bounds over independent coordinates.
    Tensorization(Common),
    /// Small-ball bound through the MRLCD on the upper half blocks.
    MrlcdSmallball(Common),
    /// Certification rate of randomized rounding over a vector family.
    RoundFamily(Common),
    /// Certified LCD bracket of one vector.
    Lcd(VectorArgs),
    /// MRLCD of one vector.
    Mrlcd(VectorArgs),
    /// Threshold of one vector.
    Threshold {
        #[command(flatten)]
        args: VectorArgs,
        /// Median threshold over spread blocks instead.
        #[arg(long)]
        median: bool,
    },
    /// Certified randomized rounding of one vector.
    Round {
        #[command(flatten)]
        args: VectorArgs,
        /// Preserve the window probability around psi under the law instead
        /// of the signed-Bernoulli Lévy concentration.
        #[arg(long)]
        centered: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// rademacher, gaussian[:mean:var], sb:p, uniform:a:b or prad[:sigma].
    #[arg(long)]
    law: Option<EntryLaw>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Operator-norm event |A| <= K sqrt n.
    #[arg(long = "K")]
    k: Option<f64>,
    /// Report path; a CSV is written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct VectorArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    vector: Option<Vec<f64>>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_path(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag.clone() { cfg.$field = v; })*
            };
        }
        set!(n => n, trials => trials, seed => master_seed, law => law, lambda => lambda, l => l, p => p, k => k);
        if let Some(p) = self.p {
            cfg.p_values = vec![p];
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.parallel &= !self.serial;
        Ok(cfg)
    }
}

impl VectorArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = self.common.config()?;
        if self.vector.is_some() {
            cfg.vector = self.vector.clone();
        }
        Ok(cfg)
    }
}

fn run(command: &Command) -> Result<ExperimentReport> {
    type Runner = fn(&ExperimentConfig) -> Result<ExperimentReport>;
    let (common, runner): (&Common, Runner) = match command {
        Command::SvalTail(c) => (c, run_sval_tail),
        Command::SingularityExact(c) => (c, run_singularity_exact),
        Command::Decouple(c) => (c, run_decoupling_check),
        Command::Replace(c) => (c, run_replacement_check),
        Command::StructureScan(c) => (c, run_structure_scan),
        Command::Denominator(c) => (c, run_denominator_check),
        Command::Quadratic(c) => (c, run_quadratic_smallball),
        Command::Identity(c) => (c, run_identity_check),
        Command::Tensorization(c) => (c, run_tensorization_check),
        Command::MrlcdSmallball(c) => (c, run_mrlcd_smallball_check),
        Command::RoundFamily(c) => (c, run_rounding_check),
        Command::Lcd(v) => return run_lcd(&v.config()?),
        Command::Mrlcd(v) => return run_mrlcd(&v.config()?),
        Command::Threshold { args, median } => {
            let mut cfg = args.config()?;
            cfg.median_threshold |= *median;
            return run_threshold(&cfg);
        }
        Command::Round { args, centered } => {
            let bound = if *centered { RoundingBound::Centered } else { RoundingBound::Levy };
            return run_round(&args.config()?, bound);
        }
    };
    runner(&common.config()?)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Certification { .. } => 1,
        Error::Capacity(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let written = match &report.config.out {
        Some(path) => report.save(path),
        None => report.write_json(std::io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let _ = writeln!(
        std::io::stderr(),
        "{}: {} violations, {} skipped, {:.2}s",
        report.experiment,
        report.violations,
        report.skipped,
        report.wall_clock_seconds
    );
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
