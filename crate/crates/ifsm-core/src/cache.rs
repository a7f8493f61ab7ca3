//! Binary run cache: a small envelope of `magic | header-JSON | f64 payload`
//! storing subordinator ensembles and noise fields, keyed by their
//! generating parameters.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rng::SeededRng;
use crate::stable::StableNoiseField;
use crate::subordinator::{SubordinatorEnsemble, SubordinatorSpec};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 8] = b"IFSMBIN1";

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct EnsembleHeader {
    spec: SubordinatorSpec,
    grid: TimeGrid,
    n_paths: usize,
    seed: SeededRng,
    used_fallback: bool,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct FieldHeader {
    alpha: f64,
    seed: SeededRng,
    half_width: f64,
    dx: f64,
    n_paths: usize,
}

fn write_envelope(path: &Path, header: &[u8], values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(header)?;
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_envelope(path: &Path) -> Result<(Vec<u8>, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::CacheFormat("bad magic".into()));
    }
    let mut len4 = [0u8; 4];
    r.read_exact(&mut len4)?;
    let hlen = u32::from_le_bytes(len4) as usize;
    let mut header = vec![0u8; hlen];
    r.read_exact(&mut header)?;
    let mut len8 = [0u8; 8];
    r.read_exact(&mut len8)?;
    let n = u64::from_le_bytes(len8) as usize;
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() != 8 * n {
        return Err(Error::CacheFormat(format!(
            "payload length {} does not match declared count {n}",
            buf.len()
        )));
    }
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, values))
}

pub fn save_ensemble(path: &Path, ensemble: &SubordinatorEnsemble) -> Result<()> {
    let header = serde_json::to_vec(&EnsembleHeader {
        spec: ensemble.spec,
        grid: ensemble.grid.clone(),
        n_paths: ensemble.n_paths,
        seed: ensemble.seed,
        used_fallback: ensemble.used_fallback,
    })
    .map_err(|e| Error::CacheFormat(e.to_string()))?;
    write_envelope(path, &header, &ensemble.values)
}

pub fn load_ensemble(path: &Path) -> Result<SubordinatorEnsemble> {
    let (header, values) = read_envelope(path)?;
    let h: EnsembleHeader =
        serde_json::from_slice(&header).map_err(|e| Error::CacheFormat(e.to_string()))?;
    if values.len() != h.n_paths * h.grid.n_points() {
        return Err(Error::CacheFormat("ensemble payload size mismatch".into()));
    }
    Ok(SubordinatorEnsemble {
        spec: h.spec,
        grid: h.grid,
        n_paths: h.n_paths,
        seed: h.seed,
        values,
        used_fallback: h.used_fallback,
    })
}

pub fn save_field(path: &Path, field: &StableNoiseField) -> Result<()> {
    let header = serde_json::to_vec(&FieldHeader {
        alpha: field.alpha,
        seed: field.seed,
        half_width: field.grid.half_width,
        dx: field.grid.dx,
        n_paths: field.n_paths,
    })
    .map_err(|e| Error::CacheFormat(e.to_string()))?;
    write_envelope(path, &header, &field.values)
}

pub fn load_field(path: &Path) -> Result<StableNoiseField> {
    let (header, values) = read_envelope(path)?;
    let h: FieldHeader =
        serde_json::from_slice(&header).map_err(|e| Error::CacheFormat(e.to_string()))?;
    let grid = crate::grid::SpatialGrid::new(h.half_width, h.dx)?;
    if values.len() != h.n_paths * grid.n_cells() {
        return Err(Error::CacheFormat("field payload size mismatch".into()));
    }
    Ok(StableNoiseField { alpha: h.alpha, seed: h.seed, grid, n_paths: h.n_paths, values })
}

/// Directory-backed cache keyed by generating parameters.
pub struct Cache {
    dir: PathBuf,
    pub hits: std::cell::Cell<u32>,
    pub misses: std::cell::Cell<u32>,
}

impl Cache {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hits: 0.into(), misses: 0.into() })
    }

    fn ensemble_path(
        &self,
        spec: &SubordinatorSpec,
        grid: &TimeGrid,
        n_paths: usize,
        seed: SeededRng,
    ) -> PathBuf {
        let name = format!(
            "ens-{:?}-h{}-b{}-s{}-t{}-n{}-p{}-seed{}-{}.bin",
            spec.kind, spec.hurst, spec.beta, spec.sigma, grid.t_max, grid.n_steps, n_paths,
            seed.seed, seed.stream_id
        );
        self.dir.join(name)
    }

    /// Load the ensemble for these parameters or generate and store it.
    /// The boolean reports a cache hit.
    pub fn ensemble(
        &self,
        spec: &SubordinatorSpec,
        grid: &TimeGrid,
        n_paths: usize,
        seed: SeededRng,
    ) -> Result<(SubordinatorEnsemble, bool)> {
        let path = self.ensemble_path(spec, grid, n_paths, seed);
        if path.exists() {
            match load_ensemble(&path) {
                Ok(e) if e.spec == *spec && e.grid == *grid && e.n_paths == n_paths => {
                    self.hits.set(self.hits.get() + 1);
                    log::info!("cache hit: {}", path.display());
                    return Ok((e, true));
                }
                _ => log::warn!("cache entry invalid, regenerating: {}", path.display()),
            }
        }
        let ensemble = crate::subordinator::sample_ensemble(spec, grid, n_paths, seed)?;
        save_ensemble(&path, &ensemble)?;
        self.misses.set(self.misses.get() + 1);
        Ok((ensemble, false))
    }
}
