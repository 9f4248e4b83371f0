//! Command line front end.
//!
//! `run` sweeps the configured methods over depth and seeds and writes a
//! CSV trace file; `plot` charts a metric from such a file as SVG;
//! `verify` runs the spectral property suite and writes a JSON report.
//!
//! Exit codes: 0 success, 1 check or runtime failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oversmooth::experiment::{
    format_summary, parse_csv, parse_method_list, run_experiment, to_csv_string, Dataset,
    ExperimentConfig,
};
use oversmooth::plot::{render_svg, PlotMetric};
use oversmooth::verify::{run_all, CheckReport, Sabotage, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "oversmooth",
    about = "Spectral depth-sweep experiments for graph convolutions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the depth-sweep experiment and write a CSV trace file.
    Run {
        /// Comma-separated method tokens, or `all`.
        #[arg(long, default_value = "all")]
        methods: String,
        /// Number of layers per run.
        #[arg(long, default_value_t = 96)]
        depth: usize,
        /// Number of random seeds per method.
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        /// Feature width.
        #[arg(long, default_value_t = 32)]
        dim: usize,
        /// `karate` or a path to a whitespace edge-list file.
        #[arg(long, default_value = "karate")]
        dataset: String,
        /// Renormalise the state to unit Frobenius norm after every layer.
        #[arg(long)]
        renormalize: bool,
        /// Use the published self-loop GCN normalisation for the GCN
        /// family (default is the loop-free symmetric normalisation).
        #[arg(long)]
        gcn_self_loops: bool,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Chart per-method mean curves of one metric from a run CSV.
    Plot {
        /// Input CSV produced by `run`.
        csv: PathBuf,
        /// One of: rod, energy_unnorm, energy_sym.
        #[arg(long)]
        metric: String,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the spectral property suite.
    Verify {
        /// Write a JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Inject a fault for self-testing the suite (`kron`).
        #[arg(long)]
        sabotage: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            methods,
            depth,
            seeds,
            dim,
            dataset,
            renormalize,
            gcn_self_loops,
            out,
        } => {
            let methods = match parse_method_list(&methods) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let dataset = if dataset == "karate" {
                Dataset::Karate
            } else {
                Dataset::EdgeListFile(PathBuf::from(dataset))
            };
            let config = ExperimentConfig {
                methods,
                depth,
                seeds,
                dim,
                dataset,
                renormalize,
                gcn_self_loops,
            };
            let outcome = match run_experiment(&config) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Err(e) = std::fs::write(&out, to_csv_string(&outcome.traces)) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return ExitCode::from(1);
            }
            print!("{}", format_summary(&outcome.summaries));
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Command::Plot { csv, metric, out } => {
            let Some(metric) = PlotMetric::parse(&metric) else {
                eprintln!("error: unknown metric (expected rod, energy_unnorm or energy_sym)");
                return ExitCode::from(2);
            };
            let text = match std::fs::read_to_string(&csv) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", csv.display());
                    return ExitCode::from(1);
                }
            };
            let traces = match parse_csv(&text) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let svg = match render_svg(&traces, metric) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Err(e) = std::fs::write(&out, svg) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return ExitCode::from(1);
            }
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Command::Verify { out, sabotage } => {
            let sabotage = match sabotage.as_deref() {
                None => None,
                Some(token) => match Sabotage::parse(token) {
                    Some(s) => Some(s),
                    None => {
                        eprintln!("error: unknown sabotage target '{token}'");
                        return ExitCode::from(2);
                    }
                },
            };
            let reports = run_all(&VerifyOptions { sabotage });
            let all_passed = reports.iter().all(CheckReport::passed);
            for report in &reports {
                let ok = report.cases.iter().filter(|c| c.passed).count();
                println!(
                    "{} {}: {ok}/{} cases",
                    if report.passed() { "PASS" } else { "FAIL" },
                    report.name,
                    report.cases.len()
                );
                for case in report.cases.iter().filter(|c| !c.passed) {
                    println!("  failed: {} ({})", case.label, case.detail);
                }
            }
            if let Some(path) = out {
                if let Err(e) = std::fs::write(&path, report_json(&reports)) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
                println!("wrote {}", path.display());
            }
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn report_json(reports: &[CheckReport]) -> String {
    let mut out = String::from("{\n");
    let all = reports.iter().all(CheckReport::passed);
    out.push_str(&format!("  \"passed\": {all},\n  \"families\": [\n"));
    for (i, report) in reports.iter().enumerate() {
        out.push_str(&format!(
            "    {{\"name\": \"{}\", \"passed\": {}, \"cases\": [\n",
            report.name,
            report.passed()
        ));
        for (j, case) in report.cases.iter().enumerate() {
            out.push_str(&format!(
                "      {{\"label\": \"{}\", \"passed\": {}, \"detail\": \"{}\"}}{}\n",
                json_escape(&case.label),
                case.passed,
                json_escape(&case.detail),
                if j + 1 < report.cases.len() { "," } else { "" }
            ));
        }
        out.push_str(&format!(
            "    ]}}{}\n",
            if i + 1 < reports.len() { "," } else { "" }
        ));
    }
    out.push_str("  ]\n}\n");
    out
}
