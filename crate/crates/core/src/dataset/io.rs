use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use super::{DataMatrix, LabelVector};
use crate::error::{CamelError, Result};

/// "CMLF" little-endian.
pub const BINARY_MAGIC: u32 = u32::from_le_bytes(*b"CMLF");
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// Comma separated; `header` skips the first line.
    Csv { header: bool },
    /// 16-byte header (magic, version, N, D as u32 LE) followed by N*D f32 LE.
    BinaryF32,
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DataMatrix> {
    let path = path.as_ref();
    match format {
        MatrixFormat::Csv { header } => {
            let file = File::open(path).map_err(|e| CamelError::io(path, e))?;
            read_csv(BufReader::new(file), header)
        }
        MatrixFormat::BinaryF32 => {
            let file = File::open(path).map_err(|e| CamelError::io(path, e))?;
            let m = read_binary_f32(BufReader::new(file))?;
            DataMatrix::new(m)
        }
    }
}

pub(crate) fn read_csv<R: Read>(reader: R, header: bool) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut flat = Vec::new();
    let mut width = None;
    let mut n = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CamelError::Parse {
            row,
            msg: e.to_string(),
        })?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(CamelError::Dimension(format!(
                    "row {row} has {} columns, expected {w}",
                    rec.len()
                )))
            }
            _ => {}
        }
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| CamelError::Parse {
                row,
                msg: format!("column {col}: cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(CamelError::NonFinite { row, col });
            }
            flat.push(v);
        }
        n += 1;
    }
    let d = width.ok_or_else(|| CamelError::Parse {
        row: 0,
        msg: "empty input".into(),
    })?;
    let values =
        Array2::from_shape_vec((n, d), flat).map_err(|e| CamelError::Dimension(e.to_string()))?;
    DataMatrix::new(values)
}

pub fn read_binary_f32<R: Read>(mut reader: R) -> Result<Array2<f64>> {
    let mut header = [0u8; 16];
    reader
        .read_exact(&mut header)
        .map_err(|e| CamelError::Format(format!("truncated header: {e}")))?;
    let word = |i: usize| u32::from_le_bytes(header[i * 4..i * 4 + 4].try_into().unwrap());
    if word(0) != BINARY_MAGIC {
        return Err(CamelError::Format("bad magic in binary matrix".into()));
    }
    if word(1) != BINARY_VERSION {
        return Err(CamelError::Format(format!(
            "unsupported binary matrix version {}",
            word(1)
        )));
    }
    let (n, d) = (word(2) as usize, word(3) as usize);
    let mut bytes = vec![0u8; n * d * 4];
    reader
        .read_exact(&mut bytes)
        .map_err(|e| CamelError::Format(format!("expected {} values for {n}x{d}: {e}", n * d)))?;
    let flat: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let m = Array2::from_shape_vec((n, d), flat).map_err(|e| CamelError::Format(e.to_string()))?;
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(CamelError::NonFinite { row, col });
        }
    }
    Ok(m)
}

pub fn write_binary_f32<W: Write>(mut writer: W, m: ArrayView2<'_, f64>) -> std::io::Result<()> {
    let mut header = Vec::with_capacity(16);
    for w in [
        BINARY_MAGIC,
        BINARY_VERSION,
        m.nrows() as u32,
        m.ncols() as u32,
    ] {
        header.extend_from_slice(&w.to_le_bytes());
    }
    writer.write_all(&header)?;
    let mut buf = Vec::with_capacity(m.len() * 4);
    for v in m.iter() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    writer.write_all(&buf)
}

/// Writes one row per sample. Values are emitted at f32 precision.
pub fn write_matrix_csv(
    path: impl AsRef<Path>,
    m: ArrayView2<'_, f64>,
    header: bool,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CamelError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut out = String::new();
    if header {
        let names: Vec<String> = (0..m.ncols()).map(|j| format!("dim{j}")).collect();
        out.push_str(&names.join(","));
        out.push('\n');
    }
    for row in m.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", *v as f32));
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CamelError::io(path, e))
}

/// One label per line. Numeric columns become numerical labels unless
/// `categorical` is set; empty fields, `NA` and `?` mark missing labels.
pub fn load_labels_csv(
    path: impl AsRef<Path>,
    header: bool,
    categorical: bool,
) -> Result<LabelVector> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CamelError::io(path, e))?;
    let mut fields: Vec<Option<String>> = Vec::new();
    for line in text.lines().skip(usize::from(header)) {
        let f = line.split(',').next().unwrap_or("").trim();
        if f.is_empty() || f.eq_ignore_ascii_case("na") || f == "?" {
            fields.push(None);
        } else {
            fields.push(Some(f.to_string()));
        }
    }
    let all_numeric = fields
        .iter()
        .flatten()
        .all(|s| s.parse::<f64>().is_ok_and(f64::is_finite));
    if categorical || !all_numeric {
        Ok(LabelVector::categorical(&fields))
    } else {
        let vals: Vec<Option<f64>> = fields
            .iter()
            .map(|f| f.as_ref().map(|s| s.parse::<f64>().unwrap()))
            .collect();
        Ok(LabelVector::numerical_partial(&vals))
    }
}

/// Boolean mask file: one `0/1` or `true/false` per line.
pub fn load_mask_csv(path: impl AsRef<Path>) -> Result<Vec<bool>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CamelError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(row, l)| match l.trim().to_ascii_lowercase().as_str() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(CamelError::Parse {
                row,
                msg: format!("mask value {other:?}"),
            }),
        })
        .collect()
}

fn read_be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| CamelError::Format("truncated IDX header".into()))
}

/// MNIST-style IDX image file (unsigned byte, 3 dims). Pixels are mapped to [0, 1]
/// and each image is flattened into one row.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| CamelError::io(path, e))?;
    let magic = read_be_u32(&bytes, 0)?;
    if magic != 0x0000_0803 {
        return Err(CamelError::Format(format!(
            "expected IDX ubyte 3-d magic 0x803, got {magic:#x}"
        )));
    }
    let n = read_be_u32(&bytes, 4)? as usize;
    let d = read_be_u32(&bytes, 8)? as usize * read_be_u32(&bytes, 12)? as usize;
    let body = bytes
        .get(16..16 + n * d)
        .ok_or_else(|| CamelError::Format(format!("IDX body shorter than {n}x{d}")))?;
    let flat: Vec<f64> = body.iter().map(|&b| b as f64 / 255.0).collect();
    DataMatrix::new(Array2::from_shape_vec((n, d), flat).expect("sized"))
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<LabelVector> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| CamelError::io(path, e))?;
    let magic = read_be_u32(&bytes, 0)?;
    if magic != 0x0000_0801 {
        return Err(CamelError::Format(format!(
            "expected IDX ubyte 1-d magic 0x801, got {magic:#x}"
        )));
    }
    let n = read_be_u32(&bytes, 4)? as usize;
    let body = bytes
        .get(8..8 + n)
        .ok_or_else(|| CamelError::Format("IDX label body truncated".into()))?;
    let idx: Vec<usize> = body.iter().map(|&b| b as usize).collect();
    Ok(LabelVector::categorical_from_indices(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::io::Cursor;

    #[test]
    fn csv_three_by_two() {
        let m = read_csv(Cursor::new("1,2\n3,4\n5,6"), false).unwrap();
        assert_eq!(m.n_samples(), 3);
        assert_eq!(m.n_features(), 2);
        assert_eq!(m.values(), &array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
    }

    #[test]
    fn csv_with_header() {
        let m = read_csv(Cursor::new("a,b\n1,2\n"), true).unwrap();
        assert_eq!(m.values(), &array![[1.0, 2.0]]);
    }

    #[test]
    fn csv_nan_names_row() {
        let err = read_csv(Cursor::new("1,2\n3,NaN\n"), false).unwrap_err();
        assert!(matches!(err, CamelError::NonFinite { row: 1, col: 1 }));
    }

    #[test]
    fn csv_ragged_rows() {
        let err = read_csv(Cursor::new("1,2\n3\n"), false).unwrap_err();
        assert!(matches!(err, CamelError::Dimension(_)));
    }

    #[test]
    fn csv_malformed_value() {
        let err = read_csv(Cursor::new("1,2\n3,x\n"), false).unwrap_err();
        assert!(matches!(err, CamelError::Parse { row: 1, .. }));
    }

    #[test]
    fn binary_four_by_two() {
        let mut bytes = Vec::new();
        for w in [BINARY_MAGIC, 1, 4, 2] {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        for i in 0..8 {
            bytes.extend_from_slice(&(i as f32).to_le_bytes());
        }
        let m = read_binary_f32(Cursor::new(bytes)).unwrap();
        assert_eq!(m.shape(), &[4, 2]);
        assert_eq!(m[[3, 1]], 7.0);
    }

    #[test]
    fn binary_truncated_body() {
        let mut bytes = Vec::new();
        for w in [BINARY_MAGIC, 1, 4, 2] {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        bytes.extend_from_slice(&1f32.to_le_bytes());
        assert!(read_binary_f32(Cursor::new(bytes)).is_err());
    }

    #[test]
    fn binary_bad_magic() {
        let bytes = vec![0u8; 16];
        assert!(matches!(
            read_binary_f32(Cursor::new(bytes)),
            Err(CamelError::Format(_))
        ));
    }

    #[test]
    fn binary_round_trip_via_writer() {
        let m = array![[1.5, -2.0], [0.25, 8.0]];
        let mut buf = Vec::new();
        write_binary_f32(&mut buf, m.view()).unwrap();
        assert_eq!(buf.len(), 16 + 16);
        assert_eq!(read_binary_f32(Cursor::new(buf)).unwrap(), m);
    }

    #[test]
    fn idx_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("img");
        let mut bytes = Vec::new();
        for w in [0x803u32, 2, 2, 2] {
            bytes.extend_from_slice(&w.to_be_bytes());
        }
        bytes.extend_from_slice(&[0, 255, 51, 0, 255, 255, 0, 0]);
        std::fs::write(&img, bytes).unwrap();
        let m = load_idx_images(&img).unwrap();
        assert_eq!(m.n_samples(), 2);
        assert_eq!(m.n_features(), 4);
        assert!((m.values()[[0, 2]] - 0.2).abs() < 1e-12);

        let lbl = dir.path().join("lbl");
        let mut bytes = Vec::new();
        for w in [0x801u32, 3] {
            bytes.extend_from_slice(&w.to_be_bytes());
        }
        bytes.extend_from_slice(&[7, 1, 7]);
        std::fs::write(&lbl, bytes).unwrap();
        let l = load_idx_labels(&lbl).unwrap();
        assert_eq!(l.n_classes(), 2);
        assert_eq!(l.len(), 3);
    }

    #[test]
    fn labels_csv_numeric_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("y.csv");
        std::fs::write(&p, "0.5\n\n1.5\nNA\n").unwrap();
        let l = load_labels_csv(&p, false, false).unwrap();
        assert_eq!(l.kind(), LabelKind::Numerical);
        assert_eq!(l.mask(), &[true, false, true, false]);
    }

    use super::super::LabelKind;
}
