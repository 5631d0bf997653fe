use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use fairrec::metrics::percent;
use fairrec::sweep::{
    emit_plot_data, parse_list, read_results_csv, run_sweep, PostProcessor, SweepConfig,
};
use fairrec::{Error, Result};

#[derive(Parser)]
#[command(name = "fairrec", version, about = "Diversity vs. user fairness sweeps on MovieLens")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit predictors, run the post-processing grid and write results.
    Run {
        /// `key = value` config file; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// knn, nmf, or a comma list such as knn,nmf
        #[arg(long)]
        predictor: Option<String>,
        /// none, random or greedy
        #[arg(long)]
        post: Option<PostProcessor>,
        #[arg(long)]
        k: Option<usize>,
        /// Comma-separated ell grid for random
        #[arg(long)]
        ell: Option<String>,
        /// Comma-separated theta grid for greedy
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cache fitted scores in the output directory
        #[arg(long)]
        cache: bool,
        /// Write per-user lists and metric vectors
        #[arg(long)]
        details: bool,
        #[arg(long)]
        no_svg: bool,
    },
    /// Re-create scatter files from an existing results.csv.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_svg: bool,
    },
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            data,
            predictor,
            post,
            k,
            ell,
            theta,
            threshold,
            seed,
            out,
            cache,
            details,
            no_svg,
        } => {
            let mut cfg = match config {
                Some(path) => SweepConfig::from_file(path)?,
                None => SweepConfig::default(),
            };
            if let Some(v) = data {
                cfg.data_path = v;
            }
            if let Some(v) = predictor {
                cfg.predictors = parse_list(&v)?;
            }
            if let Some(v) = post {
                cfg.post = v;
            }
            if let Some(v) = k {
                cfg.k = v;
            }
            if let Some(v) = ell {
                cfg.ell_grid = parse_list(&v)?;
            }
            if let Some(v) = theta {
                cfg.theta_grid = parse_list(&v)?;
            }
            if let Some(v) = threshold {
                cfg.threshold = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = out {
                cfg.output_dir = v;
            }
            cfg.cache |= cache;
            cfg.details |= details;
            cfg.svg &= !no_svg;

            let started = Instant::now();
            let output = run_sweep(&cfg)?;
            println!(
                "{:<6} {:<7} {:>6} {:>9} {:>9} {:>9}",
                "model", "post", "param", "agg_div", "D_S", "D_R"
            );
            for row in &output.rows {
                println!(
                    "{:<6} {:<7} {:>6} {:>9} {:>9} {:>9}",
                    row.predictor,
                    row.post,
                    row.param,
                    percent(row.agg_div),
                    percent(row.d_s),
                    percent(row.d_r)
                );
            }
            for run in &output.runs {
                for (theta, achieved) in run.points.iter().filter_map(|p| p.greedy) {
                    if achieved < theta {
                        eprintln!(
                            "note: {} greedy theta={theta} reached only {achieved} new items",
                            run.predictor.name()
                        );
                    }
                }
            }
            eprintln!(
                "wrote {} files to {} in {:.1}s",
                output.files.len(),
                cfg.output_dir.display(),
                started.elapsed().as_secs_f64()
            );
            Ok(())
        }
        Command::Plot {
            results,
            out,
            no_svg,
        } => {
            let file = std::fs::File::open(&results).map_err(|e| Error::Io {
                path: results.clone(),
                source: e,
            })?;
            let rows = read_results_csv(std::io::BufReader::new(file))?;
            let files = emit_plot_data(&rows, &out, !no_svg)?;
            eprintln!("wrote {} files to {}", files.len(), out.display());
            Ok(())
        }
    }
}
