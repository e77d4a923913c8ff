//! Model bundle: a single file holding everything `transform` and
//! `inverse_transform` need.
//!
//! Layout (little endian): the magic `CMLM`, a `u32` version, a `u64` length
//! followed by a JSON header (configuration, preprocessor, label summary),
//! then three raw sections: training features and embedding as `f64`
//! matrices (`u64` rows, `u64` cols, values) and the neighbor lists as a
//! `u32` matrix. The graph and its curvature are rebuilt on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{CamelModel, FitConfig, LabelInfo};
use crate::curvature::camel_curvature;
use crate::dataset::{DataMatrix, Preprocessor};
use crate::error::{CamelError, Result};
use crate::knn::NeighborGraph;

pub const BUNDLE_MAGIC: [u8; 4] = *b"CMLM";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    crate_version: String,
    config: FitConfig,
    preprocessor: Preprocessor,
    label_info: Option<LabelInfo>,
}

fn fmt_err(msg: impl Into<String>) -> CamelError {
    CamelError::Format(msg.into())
}

fn write_f64_matrix<W: Write>(w: &mut W, m: &Array2<f64>) -> std::io::Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for v in m.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| fmt_err(format!("truncated bundle: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

fn read_shape<R: Read>(r: &mut R) -> Result<(usize, usize)> {
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    rows.checked_mul(cols)
        .filter(|&len| len <= 1 << 34)
        .ok_or_else(|| fmt_err(format!("implausible section shape {rows} x {cols}")))?;
    Ok((rows, cols))
}

fn read_f64_matrix<R: Read>(r: &mut R) -> Result<Array2<f64>> {
    let (rows, cols) = read_shape(r)?;
    let mut buf = vec![0u8; rows * cols * 8];
    r.read_exact(&mut buf)
        .map_err(|e| fmt_err(format!("truncated bundle: {e}")))?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Array2::from_shape_vec((rows, cols), values).map_err(|e| fmt_err(e.to_string()))
}

/// Writes `model` to `path`.
pub fn save_model(model: &CamelModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = Header {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config: model.config,
        preprocessor: model.preprocessor.clone(),
        label_info: model.label_info.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| fmt_err(e.to_string()))?;
    let io = |e| CamelError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        w.write_all(&BUNDLE_MAGIC)?;
        w.write_all(&BUNDLE_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        write_f64_matrix(w, model.train_x.values())?;
        write_f64_matrix(w, &model.train_y)?;
        let g = &model.graph;
        w.write_all(&(g.n_points() as u64).to_le_bytes())?;
        w.write_all(&(g.k() as u64).to_le_bytes())?;
        for &j in g.all_neighbors() {
            w.write_all(&(j as u32).to_le_bytes())?;
        }
        w.flush()
    };
    write(&mut w).map_err(io)
}

/// Reads a model written by [`save_model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<CamelModel> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path).map_err(|e| CamelError::io(path, e))?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| fmt_err("file too short for a model bundle"))?;
    if magic != BUNDLE_MAGIC {
        return Err(fmt_err(format!("{} is not a model bundle", path.display())));
    }
    let mut vb = [0u8; 4];
    r.read_exact(&mut vb)
        .map_err(|_| fmt_err("truncated bundle"))?;
    let version = u32::from_le_bytes(vb);
    if version != BUNDLE_VERSION {
        return Err(fmt_err(format!(
            "bundle version {version} not supported (expected {BUNDLE_VERSION})"
        )));
    }
    let len = read_u64(&mut r)? as usize;
    if len > 1 << 30 {
        return Err(fmt_err("implausible header length"));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)
        .map_err(|_| fmt_err("truncated bundle header"))?;
    let header: Header =
        serde_json::from_slice(&json).map_err(|e| fmt_err(format!("bad header: {e}")))?;
    let train_x = DataMatrix::new(read_f64_matrix(&mut r)?)?;
    let train_y = read_f64_matrix(&mut r)?;
    let (n, k) = read_shape(&mut r)?;
    let mut buf = vec![0u8; n * k * 4];
    r.read_exact(&mut buf)
        .map_err(|_| fmt_err("truncated neighbor section"))?;
    let lists: Vec<Vec<usize>> = buf
        .chunks_exact(4 * k.max(1))
        .map(|row| {
            row.chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")) as usize)
                .collect()
        })
        .collect();
    let n_x = train_x.n_samples();
    if train_y.nrows() != n_x
        || lists.len() != n_x
        || header.preprocessor.mean.len() != train_x.n_features()
    {
        return Err(fmt_err("bundle sections disagree in size"));
    }
    let graph = NeighborGraph::from_lists(train_x.view(), train_x.view(), &lists)?;
    let c_high = camel_curvature(train_x.view(), &graph);
    Ok(CamelModel {
        preprocessor: header.preprocessor,
        train_x,
        train_y,
        graph,
        c_high,
        config: header.config,
        label_info: header.label_info,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_gaussian_blobs;
    use crate::learners::fit_unsupervised;

    #[test]
    fn round_trip_is_exact() {
        let (x, _) = gen_gaussian_blobs(30, 3, 4, 5.0, 1);
        let mut cfg = FitConfig::default();
        cfg.optim.max_iter = 20;
        let model = fit_unsupervised(&x, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.camel");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn wrong_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(load_model(&path), Err(CamelError::Format(_))));
    }
}
