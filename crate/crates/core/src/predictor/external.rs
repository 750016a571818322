//! UMAP float maps and the external-command predictor protocol.
//!
//! A UMAP file is the 4 magic bytes `UMAP`, then width and height as
//! little-endian `u32`, then `width * height` little-endian IEEE-754 `f32`
//! values in row-major order.
//!
//! The external command is invoked as
//! `<cmd...> <input.pgm> <outdir> <T> <p_d> <seed>` and must exit 0 after
//! writing `pass_000.umap` .. `pass_{T-1}.umap` into `<outdir>`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::RngCore;

use super::{StochasticPredictor, TrainConfig, TrainSample};
use crate::error::{Error, Result};
use crate::imaging::{write_pgm, GrayImage, ProbMap};
use crate::rng::Rng;
use crate::uncertainty::McConfig;

pub const UMAP_MAGIC: &[u8; 4] = b"UMAP";

/// Decoded UMAP payload.
#[derive(Clone, Debug, PartialEq)]
pub struct UmapFile {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl UmapFile {
    pub fn from_f64(width: usize, height: usize, data: &[f64]) -> Self {
        Self {
            width: width as u32,
            height: height as u32,
            data: data.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

pub fn write_umap(map: &UmapFile) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * map.data.len());
    out.extend_from_slice(UMAP_MAGIC);
    out.extend_from_slice(&map.width.to_le_bytes());
    out.extend_from_slice(&map.height.to_le_bytes());
    for v in &map.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_umap(bytes: &[u8]) -> Result<UmapFile> {
    if bytes.len() < 12 || &bytes[..4] != UMAP_MAGIC {
        return Err(Error::format("magic", "expected \"UMAP\" and a 12-byte header"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let height = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if width == 0 || height == 0 {
        return Err(Error::format("width", format!("zero dimension {width}x{height}")));
    }
    let n = width as usize * height as usize;
    let payload = &bytes[12..];
    if payload.len() != 4 * n {
        return Err(Error::format(
            "payload",
            format!("expected {} bytes, found {}", 4 * n, payload.len()),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(UmapFile { width, height, data })
}

pub fn pass_file_name(index: usize) -> String {
    format!("pass_{index:03}.umap")
}

fn protocol(pass: Option<usize>, detail: impl Into<String>) -> Error {
    Error::Protocol {
        pass,
        detail: detail.into(),
    }
}

/// Runs the external command once and reads back `t_steps` pass files.
///
/// `cmd` is split on whitespace; the first token is the program and the rest
/// are passed before the protocol arguments.
pub fn external_predict(
    cmd: &str,
    img_path: &Path,
    t_steps: usize,
    dropout_p: f64,
    seed: u64,
    workdir: &Path,
) -> Result<Vec<ProbMap>> {
    let mut parts = cmd.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| protocol(None, "empty command template"))?;
    fs::create_dir_all(workdir).map_err(|e| Error::io(workdir, e))?;
    for i in 0..t_steps {
        let p = workdir.join(pass_file_name(i));
        if p.exists() {
            fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }

    let status = Command::new(program)
        .args(parts)
        .arg(img_path)
        .arg(workdir)
        .arg(t_steps.to_string())
        .arg(dropout_p.to_string())
        .arg(seed.to_string())
        .status()
        .map_err(|e| protocol(None, format!("failed to launch {program}: {e}")))?;
    if !status.success() {
        return Err(protocol(None, format!("{program} exited with {status}")));
    }

    (0..t_steps)
        .map(|i| {
            let p = workdir.join(pass_file_name(i));
            let bytes = fs::read(&p)
                .map_err(|e| protocol(Some(i), format!("missing {}: {e}", p.display())))?;
            let map = read_umap(&bytes).map_err(|e| protocol(Some(i), e.to_string()))?;
            if let Some(v) = map.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(protocol(Some(i), format!("value {v} outside [0, 1]")));
            }
            ProbMap::new(map.width as usize, map.height as usize, map.to_f64())
                .map_err(|e| protocol(Some(i), e.to_string()))
        })
        .collect()
}

/// Predictor backed by an external program.
///
/// Training is left to the external program (the loop's `train` calls are
/// no-ops); the deterministic prediction is a single pass with `p_d = 0`.
#[derive(Clone, Debug)]
pub struct ExternalPredictor {
    cmd: String,
    workdir: PathBuf,
}

impl ExternalPredictor {
    pub fn new(cmd: impl Into<String>, workdir: impl Into<PathBuf>) -> Self {
        Self {
            cmd: cmd.into(),
            workdir: workdir.into(),
        }
    }

    fn invoke(&self, img: &GrayImage, t_steps: usize, dropout_p: f64, seed: u64) -> Result<Vec<ProbMap>> {
        // One directory per call keeps concurrent invocations apart.
        let dir = self.workdir.join(format!("call_{seed:016x}_{t_steps}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let input = dir.join("input.pgm");
        fs::write(&input, write_pgm(img)).map_err(|e| Error::io(&input, e))?;
        let maps = external_predict(&self.cmd, &input, t_steps, dropout_p, seed, &dir)?;
        let _ = fs::remove_dir_all(&dir);
        for (i, m) in maps.iter().enumerate() {
            if m.dims() != img.dims() {
                return Err(protocol(
                    Some(i),
                    format!("pass is {:?}, input is {:?}", m.dims(), img.dims()),
                ));
            }
        }
        Ok(maps)
    }
}

impl StochasticPredictor for ExternalPredictor {
    fn train(&mut self, _samples: &[TrainSample], _cfg: &TrainConfig, _rng: &mut Rng) -> Result<()> {
        Ok(())
    }

    fn predict_stochastic(&self, img: &GrayImage, dropout_p: f64, rng: &mut Rng) -> Result<ProbMap> {
        let mut maps = self.invoke(img, 1, dropout_p, rng.next_u64())?;
        Ok(maps.remove(0))
    }

    fn predict_deterministic(&self, img: &GrayImage) -> Result<ProbMap> {
        let mut maps = self.invoke(img, 1, 0.0, 0)?;
        Ok(maps.remove(0))
    }

    fn stochastic_passes(
        &self,
        img: &GrayImage,
        cfg: &McConfig,
        rng: &mut Rng,
        sink: &mut dyn FnMut(ProbMap) -> Result<()>,
    ) -> Result<()> {
        for m in self.invoke(img, cfg.t_steps, cfg.dropout_p, rng.next_u64())? {
            sink(m)?;
        }
        Ok(())
    }
}
