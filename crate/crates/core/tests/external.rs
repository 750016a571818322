//! External predictor protocol against a shell-script stand-in that copies
//! prepared pass files into the output directory.
#![cfg(unix)]

use std::fs;
use std::path::Path;

use ceal::cli::{cmd_run, RunArgs};
use ceal::imaging::{write_pgm, GrayImage};
use ceal::orchestrator::{run, RunConfig};
use ceal::predictor::{external_predict, write_umap, ExternalPredictor, StochasticPredictor, UmapFile};
use ceal::rng;
use ceal::synthdata::{generate_dataset, load_dataset, SynthParams};
use ceal::uncertainty::{mc_predict, McConfig};
use ceal::Error;

/// Script called as `sh fake.sh <template_dir> <input> <outdir> <T> <p_d> <seed>`.
const FAKE: &str = r#"
tmpl="$1"; input="$2"; out="$3"; t="$4"
[ -f "$input" ] || exit 3
i=0
while [ "$i" -lt "$t" ]; do
  f=$(printf 'pass_%03d.umap' "$i")
  [ -f "$tmpl/$f" ] && cp "$tmpl/$f" "$out/$f"
  i=$((i + 1))
done
exit 0
"#;

fn setup(dir: &Path, w: u32, h: u32, passes: &[Vec<f32>]) -> String {
    let tmpl = dir.join("tmpl");
    fs::create_dir_all(&tmpl).unwrap();
    for (i, data) in passes.iter().enumerate() {
        let bytes = write_umap(&UmapFile {
            width: w,
            height: h,
            data: data.clone(),
        });
        fs::write(tmpl.join(format!("pass_{i:03}.umap")), bytes).unwrap();
    }
    let script = dir.join("fake.sh");
    fs::write(&script, FAKE).unwrap();
    format!("sh {} {}", script.display(), tmpl.display())
}

#[test]
fn passes_are_read_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = setup(dir.path(), 2, 1, &[vec![0.0, 1.0], vec![0.5, 0.25], vec![1.0, 0.0]]);
    let img = dir.path().join("in.pgm");
    fs::write(&img, write_pgm(&GrayImage::filled(2, 1, 0.2))).unwrap();
    let maps = external_predict(&cmd, &img, 3, 0.5, 7, &dir.path().join("out")).unwrap();
    assert_eq!(maps.len(), 3);
    assert_eq!(maps[1].data(), &[0.5, 0.25]);
}

#[test]
fn missing_pass_is_a_protocol_error_naming_the_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = setup(dir.path(), 2, 1, &[vec![0.0, 1.0], vec![0.5, 0.25]]);
    let img = dir.path().join("in.pgm");
    fs::write(&img, write_pgm(&GrayImage::filled(2, 1, 0.2))).unwrap();
    match external_predict(&cmd, &img, 3, 0.5, 7, &dir.path().join("out")) {
        Err(Error::Protocol { pass: Some(2), .. }) => {}
        other => panic!("expected protocol error for pass 2, got {other:?}"),
    }
}

#[test]
fn failing_command_and_bad_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("in.pgm");
    fs::write(&img, write_pgm(&GrayImage::filled(2, 1, 0.2))).unwrap();
    let out = dir.path().join("out");
    assert!(matches!(
        external_predict("false", &img, 2, 0.5, 0, &out),
        Err(Error::Protocol { pass: None, .. })
    ));
    assert!(matches!(
        external_predict("/definitely/not/here", &img, 2, 0.5, 0, &out),
        Err(Error::Protocol { pass: None, .. })
    ));
    let cmd = setup(dir.path(), 2, 1, &[vec![0.0, 1.5], vec![0.0, 0.5]]);
    assert!(matches!(
        external_predict(&cmd, &img, 2, 0.5, 0, &out),
        Err(Error::Protocol { pass: Some(0), .. })
    ));
}

#[test]
fn dimension_mismatch_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = setup(dir.path(), 1, 1, &[vec![0.0], vec![1.0]]);
    let pred = ExternalPredictor::new(cmd, dir.path().join("work"));
    let img = GrayImage::filled(2, 2, 0.5);
    let err = mc_predict(&pred, &img, &McConfig { t_steps: 2, dropout_p: 0.5 }, &mut rng::seeded(0));
    assert!(matches!(err, Err(Error::Protocol { .. })), "{err:?}");
}

fn constant_passes(size: usize, t: usize) -> Vec<Vec<f32>> {
    // Pass i predicts a centred square whose probability varies per pass.
    (0..t)
        .map(|i| {
            (0..size * size)
                .map(|k| {
                    let (x, y) = (k % size, k / size);
                    let inside = (2..size - 2).contains(&x) && (2..size - 2).contains(&y);
                    if inside {
                        0.6 + 0.1 * (i % 3) as f32
                    } else {
                        0.1 * (i % 2) as f32
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn full_loop_runs_through_the_external_predictor() {
    let dir = tempfile::tempdir().unwrap();
    let size = 8;
    let cmd = setup(dir.path(), size as u32, size as u32, &constant_passes(size, 4));
    let params = SynthParams {
        image_size: size,
        min_axis: 1.0,
        max_axis: 3.0,
        ..SynthParams::default()
    };
    let data_dir = dir.path().join("data");
    generate_dataset(40, &params, 1, &data_dir).unwrap();
    let data = load_dataset(&data_dir).unwrap();
    let config = RunConfig {
        n_labeled: 10,
        n_unlabeled: 20,
        n_test: 10,
        iterations: 2,
        mc: McConfig { t_steps: 4, dropout_p: 0.5 },
        ..RunConfig::default()
    };
    let work = dir.path().join("work");
    let a = run(&config, &data, || ExternalPredictor::new(cmd.clone(), work.clone())).unwrap();
    let b = run(&config, &data, || ExternalPredictor::new(cmd.clone(), work.clone())).unwrap();
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    assert_eq!(a.records.len(), 2);

    let pred = ExternalPredictor::new(cmd.clone(), work.clone());
    let det = pred.predict_deterministic(&GrayImage::filled(size, size, 0.5)).unwrap();
    assert_eq!(det.dims(), (size, size));

    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n_labeled=10\nn_unlabeled=20\nn_test=10\niterations=1\nt_steps=4\n").unwrap();
    let log = dir.path().join("ext.csv");
    let args = RunArgs {
        data: data_dir,
        config: Some(cfg),
        log: log.clone(),
        external_cmd: Some(cmd),
        ..RunArgs::default()
    };
    cmd_run(&args, &mut Vec::new()).unwrap();
    assert!(log.exists());
}
