use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pencilpow::harness::bounds::run_bound_report;
use pencilpow::harness::config::{canonical_key, read_config_file, ExperimentConfig};
use pencilpow::harness::invariants::{run_suite, SuiteSize};
use pencilpow::harness::output::{emit_csv, emit_svg, write_manifest, write_text};
use pencilpow::harness::{run_experiment, summarize};
use pencilpow::Result;

#[derive(Parser)]
#[command(name = "pencilpow", version, about = "Repeated squaring experiments for A^-1 B")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write <out>/<experiment>.csv, .svg and manifest.txt.
    Run(ConfigArgs),
    /// Run the randomized invariant suite.
    Check {
        /// Small trial counts instead of the full suite.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Evaluate the forward-error bounds and write <out>/bound_report.csv.
    Bounds(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// toy_identity, general_square, condition_evolution, expm_compare
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long = "p-max")]
    p_max: Option<String>,
    /// well or ill
    #[arg(long)]
    conditioning: Option<String>,
    /// circle, disk, annulus or annulus(r_lo,r_hi)
    #[arg(long)]
    spectrum: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// f32 or f64
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self, forced_experiment: Option<&str>) -> Result<ExperimentConfig> {
        let mut pairs = match &self.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("experiment", &self.experiment),
            ("n", &self.n),
            ("trials", &self.trials),
            ("p_max", &self.p_max),
            ("conditioning", &self.conditioning),
            ("spectrum", &self.spectrum),
            ("delta", &self.delta),
            ("precision", &self.precision),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                pairs.insert(canonical_key(key), v.clone());
            }
        }
        if let Some(e) = forced_experiment {
            pairs.insert("experiment".into(), e.into());
        }
        ExperimentConfig::from_pairs(&pairs)
    }
}

fn fmt_err(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3e}")
    } else {
        "failed".into()
    }
}

fn run(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve(None)?;
    let records = run_experiment(&cfg)?;
    let name = cfg.experiment.name();
    let csv = format!("{name}.csv");
    let svg = format!("{name}.svg");
    emit_csv(&records, &cfg.output_dir.join(&csv))?;
    emit_svg(&records, &cfg.output_dir.join(&svg))?;
    write_manifest(&cfg, &[&csv, &svg], &cfg.output_dir)?;
    println!("{:>3} {:>7} {:>12} {:>12} {:>12}", "p", "records", "median_irs", "median_es", "mean_kappaAp");
    for s in summarize(&records) {
        println!(
            "{:>3} {:>7} {:>12} {:>12} {:>12}",
            s.p,
            s.records,
            fmt_err(s.median_err_irs),
            fmt_err(s.median_err_es),
            s.mean_kappa_ap.map_or("-".into(), |k| format!("{k:.3e}"))
        );
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn bounds(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve(Some("bound_report"))?;
    let report = run_bound_report(&cfg)?;
    let file = "bound_report.csv";
    write_text(&cfg.output_dir.join(file), &report.to_csv())?;
    write_manifest(&cfg, &[file], &cfg.output_dir)?;
    println!("{:>5} {:>3} {:>11} {:>11} {:>11} {:>11} {:>6}", "trial", "p", "err_irs", "bound_irs", "err_es", "bound_es", "counts");
    for r in &report.rows {
        println!(
            "{:>5} {:>3} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>6}",
            r.trial,
            r.p,
            r.measured_irs,
            r.bound_irs,
            r.measured_es,
            r.bound_es,
            if r.counts_match() { "ok" } else { "MISMATCH" }
        );
    }
    println!("{} of {} rows exceed a bound", report.violations().len(), report.rows.len());
    println!("wrote {}", cfg.output_dir.join(file).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Bounds(args) => bounds(args),
        Command::Check { quick, seed } => {
            let size = if *quick { SuiteSize::QUICK } else { SuiteSize::FULL };
            let checks = run_suite(size, *seed);
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                return ExitCode::FAILURE;
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
