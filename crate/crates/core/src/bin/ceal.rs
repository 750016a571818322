use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ceal::cli::{cmd_generate, cmd_report, cmd_run, cmd_score, GenerateArgs, ReportArgs, RunArgs, ScoreArgs};
use ceal::orchestrator::Strategy;
use ceal::synthdata::SynthParams;

#[derive(Parser)]
#[command(name = "ceal", version, about = "Cost-effective active learning for binary segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Random,
    Ceal,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic lesion dataset (img_%05d.pgm, msk_%05d.pgm, manifest.txt).
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long = "empty-frac", default_value_t = 0.1)]
        empty_frac: f64,
        #[arg(long, default_value_t = 2)]
        distractors: usize,
    },
    /// Run the active-learning loop on a dataset directory.
    #[command(after_help = ceal::config::keys_help())]
    Run {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Command prefix; called as `<cmd> <input.pgm> <outdir> <T> <p_d> <seed>`.
        #[arg(long = "external-cmd")]
        external_cmd: Option<String>,
        #[arg(long)]
        workdir: Option<PathBuf>,
        /// Write the last iteration's region table here.
        #[arg(long)]
        regions: Option<PathBuf>,
        /// Save the final reference model here.
        #[arg(long = "save-model")]
        save_model: Option<PathBuf>,
    },
    /// Score one image from UMAP pass files or a saved model.
    Score {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, conflicts_with = "model", required_unless_present = "model")]
        passes: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "t-steps", default_value_t = 10)]
        t_steps: usize,
        #[arg(long = "dropout-p", default_value_t = 0.5)]
        dropout_p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long = "dump-umap")]
        dump_umap: Option<PathBuf>,
        #[arg(long = "dump-dist")]
        dump_dist: Option<PathBuf>,
    },
    /// Print the Dice trajectory of a run log and an optional score histogram.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        regions: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Generate {
            out,
            n,
            seed,
            size,
            noise,
            empty_frac,
            distractors,
        } => {
            let max_axis = (size as f64 / 2.0 - 1.0).clamp(1.0, 10.0);
            let params = SynthParams {
                image_size: size,
                min_axis: 3.0f64.min(max_axis),
                max_axis,
                noise_sigma: noise,
                empty_fraction: empty_frac,
                distractor_count: distractors,
                ..SynthParams::default()
            };
            cmd_generate(&GenerateArgs { out, n, seed, params }, &mut stdout).map(drop)
        }
        Command::Run {
            data,
            config,
            log,
            baseline,
            external_cmd,
            workdir,
            regions,
            save_model,
        } => {
            let args = RunArgs {
                data,
                config,
                log,
                baseline: baseline.map(|b| match b {
                    Baseline::Random => Strategy::Random,
                    Baseline::Ceal => Strategy::Ceal,
                }),
                external_cmd,
                workdir,
                regions,
                save_model,
            };
            cmd_run(&args, &mut stdout).map(drop)
        }
        Command::Score {
            image,
            passes,
            model,
            t_steps,
            dropout_p,
            seed,
            threshold,
            dump_umap,
            dump_dist,
        } => {
            let args = ScoreArgs {
                image,
                passes,
                model,
                t_steps,
                dropout_p,
                seed,
                threshold,
                dump_umap,
                dump_dist,
            };
            cmd_score(&args, &mut stdout).map(drop)
        }
        Command::Report { log, regions, bins } => {
            cmd_report(&ReportArgs { log, regions, bins }, &mut stdout).map(drop)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
