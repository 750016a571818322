//! Command implementations behind the `ceal` binary. Each command writes its
//! human-readable output to `out` and returns an error for exit status 1;
//! flag parsing (exit status 2) lives in the binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{config_to_text, parse_config};
use crate::distance::{edt_exact, score_sample, UncertaintyScore};
use crate::error::{Error, Result};
use crate::imaging::{binarize, extract_contour, read_pgm};
use crate::metrics::{read_region_csv, region_histogram, write_region_csv, Histogram};
use crate::orchestrator::{read_log_csv, run, IterationRecord, RunConfig, RunLog, Strategy};
use crate::predictor::{read_umap, write_umap, ExternalPredictor, RefPredictor, UmapFile};
use crate::rng;
use crate::synthdata::{generate_dataset, load_dataset, Manifest, SynthParams};
use crate::uncertainty::{mc_predict, McConfig, UncertaintyMap, VarianceAccumulator};

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text).map_err(|e| Error::io("<stdout>", e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug)]
pub struct GenerateArgs {
    pub out: PathBuf,
    pub n: usize,
    pub seed: u64,
    pub params: SynthParams,
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<Manifest> {
    let manifest = generate_dataset(args.n, &args.params, args.seed, &args.out)?;
    say(out, format_args!("{}\n", manifest.path.display()))?;
    Ok(manifest)
}

#[derive(Clone, Debug, Default)]
pub struct RunArgs {
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    pub log: PathBuf,
    pub baseline: Option<Strategy>,
    pub external_cmd: Option<String>,
    /// Working directory for the external predictor; defaults to `<log>.work`.
    pub workdir: Option<PathBuf>,
    pub regions: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
}

/// Path of the config echo written next to a run log.
pub fn sidecar_path(log: &Path) -> PathBuf {
    let mut s = log.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => parse_config(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
    }
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<RunLog> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(s) = args.baseline {
        config.strategy = s;
    }
    let dataset = load_dataset(&args.data)?;

    let mut final_model = None;
    let log = match &args.external_cmd {
        Some(cmd) => {
            let workdir = args.workdir.clone().unwrap_or_else(|| {
                let mut s = args.log.as_os_str().to_owned();
                s.push(".work");
                PathBuf::from(s)
            });
            run(&config, &dataset, || ExternalPredictor::new(cmd.clone(), workdir.clone()))?
        }
        None => {
            let p = config.mc.dropout_p;
            let mut last = None;
            let log = crate::orchestrator::run_with(&config, &dataset, || RefPredictor::new(p), |o| {
                last = Some(o.predictor.clone())
            })?;
            final_model = last;
            log
        }
    };

    write_file(&args.log, &log.to_csv()?)?;
    let mut echo = config_to_text(&config);
    echo.push_str(&format!(
        "# initial_mean_test_dice={}\n# initial_median_test_dice={}\n# oracle_queries={}\n",
        log.initial_test_dice.0, log.initial_test_dice.1, log.oracle_queries
    ));
    write_file(&sidecar_path(&args.log), echo.as_bytes())?;
    if let Some(path) = &args.regions {
        let mut buf = Vec::new();
        write_region_csv(&mut buf, &log.final_regions)?;
        write_file(path, &buf)?;
    }
    if let (Some(path), Some(model)) = (&args.save_model, &final_model) {
        write_file(path, model.to_text().as_bytes())?;
    }

    say(out, format_args!(
        "strategy={} seed={} initial_mean_dice={:.4}\n",
        config.strategy.as_str(),
        config.seed,
        log.initial_test_dice.0
    ))?;
    print_trajectory(&log.records, out)?;
    say(out, format_args!("log written to {}\n", args.log.display()))?;
    Ok(log)
}

#[derive(Clone, Debug)]
pub struct ScoreArgs {
    pub image: PathBuf,
    pub passes: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub t_steps: usize,
    pub dropout_p: f64,
    pub seed: u64,
    pub threshold: f64,
    pub dump_umap: Option<PathBuf>,
    pub dump_dist: Option<PathBuf>,
}

impl Default for ScoreArgs {
    fn default() -> Self {
        Self {
            image: PathBuf::new(),
            passes: None,
            model: None,
            t_steps: 10,
            dropout_p: 0.5,
            seed: 0,
            threshold: 0.5,
            dump_umap: None,
            dump_dist: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScoreOutcome {
    pub score: UncertaintyScore,
    pub empty_prediction: bool,
    pub degenerate: bool,
    pub variance: UncertaintyMap,
}

/// Pass files `pass_*.umap` in `dir`, sorted by name.
fn pass_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("pass_") && n.ends_with(".umap"))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn cmd_score(args: &ScoreArgs, out: &mut dyn Write) -> Result<ScoreOutcome> {
    let bytes = fs::read(&args.image).map_err(|e| Error::io(&args.image, e))?;
    let img = read_pgm(&bytes)?;
    let (mean, var) = match (&args.passes, &args.model) {
        (Some(dir), None) => {
            let files = pass_files(dir)?;
            let mut acc = VarianceAccumulator::new(img.width(), img.height());
            for (i, f) in files.iter().enumerate() {
                let bytes = fs::read(f).map_err(|e| Error::io(f, e))?;
                let map = read_umap(&bytes).map_err(|e| Error::Protocol {
                    pass: Some(i),
                    detail: e.to_string(),
                })?;
                let p = crate::imaging::ProbMap::from_unit(map.width as usize, map.height as usize, map.to_f64())
                    .map_err(|e| Error::Protocol {
                        pass: Some(i),
                        detail: e.to_string(),
                    })?;
                acc.update(&p).map_err(|e| Error::Protocol {
                    pass: Some(i),
                    detail: e.to_string(),
                })?;
            }
            acc.finalize()?
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let model = RefPredictor::from_text(&text)?;
            let cfg = McConfig {
                t_steps: args.t_steps,
                dropout_p: args.dropout_p,
            };
            mc_predict(&model, &img, &cfg, &mut rng::seeded(args.seed))?
        }
        _ => {
            return Err(Error::Argument(
                "exactly one of --passes or --model is required".into(),
            ))
        }
    };

    let predicted = binarize(&mean, args.threshold)?;
    let (score, degenerate) = score_sample(&var, &predicted)?;
    let empty = predicted.is_all_zero();

    if let Some(p) = &args.dump_umap {
        write_file(p, &write_umap(&UmapFile::from_f64(var.width(), var.height(), var.data())))?;
    }
    if let Some(p) = &args.dump_dist {
        if degenerate {
            say(out, format_args!("distance map not written: prediction has no contour\n"))?;
        } else {
            let d = edt_exact(&extract_contour(&predicted))?;
            write_file(p, &write_umap(&UmapFile::from_f64(d.width(), d.height(), d.data())))?;
        }
    }

    say(out, format_args!(
        "raw_score={}\nnormalized_score={}\nempty_prediction={}\ndegenerate={}\n",
        score.raw, score.normalized, empty, degenerate
    ))?;
    Ok(ScoreOutcome {
        score,
        empty_prediction: empty,
        degenerate,
        variance: var,
    })
}

#[derive(Clone, Debug)]
pub struct ReportArgs {
    pub log: PathBuf,
    pub regions: Option<PathBuf>,
    pub bins: usize,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub records: Vec<IterationRecord>,
    pub histogram: Option<Histogram>,
}

fn print_trajectory(records: &[IterationRecord], out: &mut dyn Write) -> Result<()> {
    say(out, format_args!(
        "{:>4} {:>9} {:>8} {:>9} {:>6} {:>6} {:>6} {:>9} {:>9}  {:>5} {:>5} {:>5} {:>5}\n",
        "iter", "labeled", "pseudo", "pthresh", "q_nd", "q_unc", "q_rnd", "mean_dice", "med_dice", "r1", "r2", "r3", "r4"
    ))?;
    for r in records {
        say(out, format_args!(
            "{:>4} {:>9} {:>8} {:>9.4} {:>6} {:>6} {:>6} {:>9.4} {:>9.4}  {:>5} {:>5} {:>5} {:>5}\n",
            r.iteration,
            r.n_labeled,
            r.n_pseudo,
            r.pseudo_threshold,
            r.oracle_no_detect,
            r.oracle_uncertain,
            r.oracle_random,
            r.mean_test_dice,
            r.median_test_dice,
            r.regions[0],
            r.regions[1],
            r.regions[2],
            r.regions[3]
        ))?;
    }
    Ok(())
}

pub fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> Result<Report> {
    let file = fs::File::open(&args.log).map_err(|e| Error::io(&args.log, e))?;
    let records = read_log_csv(file)?;
    print_trajectory(&records, out)?;

    let histogram = match &args.regions {
        None => None,
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let rows = read_region_csv(file)?;
            let scores: Vec<f64> = rows.iter().map(|r| r.score.raw).collect();
            let h = region_histogram(&scores, args.bins)?;
            say(out, format_args!("bin_lo,bin_hi,count\n"))?;
            for (i, c) in h.counts.iter().enumerate() {
                say(out, format_args!("{},{},{}\n", h.edges[i], h.edges[i + 1], c))?;
            }
            Some(h)
        }
    };
    Ok(Report { records, histogram })
}
