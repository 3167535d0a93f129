//! Array-file I/O.
//!
//! Matrices are read from `.npy` (format 1.0, little-endian float32,
//! float64 or int64, C order) or from CSV with a header row. Everything is
//! up-cast to `f64` on load. The layer partition of an activation file
//! lives in a sidecar `<stem>.layers.json` holding `{"layer_offsets":[...]}`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Array3, Dimension};
use ndarray_npy::{ReadNpyError, ReadNpyExt, ReadableElement, WriteNpyExt};
use serde::{Deserialize, Serialize};

use crate::data::{ActivationMatrix, LabelVector, SoftmaxMatrix, StochasticPredictionStack};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Activations,
    Softmax,
    Labels,
}

#[derive(Debug, Clone)]
pub enum LoadedMatrix {
    Activations(ActivationMatrix),
    Softmax(SoftmaxMatrix),
    Labels(LabelVector),
}

/// Loads and validates an array file of the declared kind.
pub fn load_matrix(path: impl AsRef<Path>, kind: MatrixKind) -> Result<LoadedMatrix> {
    let path = path.as_ref();
    Ok(match kind {
        MatrixKind::Activations => LoadedMatrix::Activations(load_activations(path)?),
        MatrixKind::Softmax => LoadedMatrix::Softmax(load_softmax(path)?),
        MatrixKind::Labels => LoadedMatrix::Labels(load_labels(path, None)?),
    })
}

pub fn load_activations(path: impl AsRef<Path>) -> Result<ActivationMatrix> {
    let path = path.as_ref();
    let values = read_matrix(path)?;
    let offsets = match read_layer_sidecar(path)? {
        Some(offsets) => offsets,
        None => vec![0],
    };
    ActivationMatrix::new(values, offsets).map_err(|e| e.context(path.display().to_string()))
}

pub fn load_softmax(path: impl AsRef<Path>) -> Result<SoftmaxMatrix> {
    let path = path.as_ref();
    SoftmaxMatrix::new(read_matrix(path)?).map_err(|e| e.context(path.display().to_string()))
}

/// Loads a label vector; with `classes` set, every label must lie below it.
pub fn load_labels(path: impl AsRef<Path>, classes: Option<usize>) -> Result<LabelVector> {
    let path = path.as_ref();
    let raw = read_int_vector(path)?;
    match classes {
        Some(c) => LabelVector::with_classes(&raw, c),
        None => LabelVector::from_i64(&raw),
    }
    .map_err(|e| e.context(path.display().to_string()))
}

/// Loads a `T × tests × C` stack of stochastic softmax outputs (`.npy` only).
pub fn load_stochastic_stack(path: impl AsRef<Path>) -> Result<StochasticPredictionStack> {
    let path = path.as_ref();
    let arr: Array3<f64> = read_npy_float(path)?;
    StochasticPredictionStack::from_array(arr).map_err(|e| e.context(path.display().to_string()))
}

/// Reads a 2-D float matrix from `.npy` or CSV.
pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    if is_csv(path) {
        read_csv_matrix(path)
    } else {
        read_npy_float(path)
    }
}

/// Reads an integer vector from `.npy` (int64 or int32) or single-column CSV.
pub fn read_int_vector(path: &Path) -> Result<Vec<i64>> {
    if is_csv(path) {
        let m = read_csv_matrix(path)?;
        if m.ncols() != 1 {
            return Err(Error::malformed(path, "label CSV must have one column"));
        }
        return m
            .iter()
            .map(|&v| {
                if v.fract() == 0.0 && v.abs() < 9.0e15 {
                    Ok(v as i64)
                } else {
                    Err(Error::malformed(path, format!("non-integer label {v}")))
                }
            })
            .collect();
    }
    match read_npy_as::<i64, _>(path) {
        Ok(a) => return Ok(a.to_vec()),
        Err(ReadNpyError::WrongDescriptor(_)) => {}
        Err(e) => return Err(npy_error(path, e)),
    }
    let a: Array1<i32> = read_npy_as(path).map_err(|e| npy_error(path, e))?;
    Ok(a.iter().map(|&v| i64::from(v)).collect())
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read_npy_as<T, D>(path: &Path) -> Result<ndarray::Array<T, D>, ReadNpyError>
where
    T: ReadableElement,
    D: Dimension,
{
    let file = File::open(path).map_err(ReadNpyError::Io)?;
    ndarray::Array::<T, D>::read_npy(BufReader::new(file))
}

fn read_npy_float<D: Dimension>(path: &Path) -> Result<ndarray::Array<f64, D>> {
    match read_npy_as::<f64, D>(path) {
        Ok(a) => return Ok(a),
        Err(ReadNpyError::WrongDescriptor(_)) => {}
        Err(e) => return Err(npy_error(path, e)),
    }
    match read_npy_as::<f32, D>(path) {
        Ok(a) => return Ok(a.mapv(f64::from)),
        Err(ReadNpyError::WrongDescriptor(_)) => {}
        Err(e) => return Err(npy_error(path, e)),
    }
    read_npy_as::<i64, D>(path)
        .map(|a| a.mapv(|v| v as f64))
        .map_err(|e| match e {
            ReadNpyError::WrongDescriptor(d) => Error::malformed(
                path,
                format!("unsupported dtype {d}; expected float32, float64 or int64"),
            ),
            e => npy_error(path, e),
        })
}

fn npy_error(path: &Path, e: ReadNpyError) -> Error {
    match e {
        ReadNpyError::Io(io) if io.kind() != std::io::ErrorKind::UnexpectedEof => {
            Error::io(path, io)
        }
        e => Error::malformed(path, e.to_string()),
    }
}

fn read_csv_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let cols = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .len();
    let mut flat = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
        for field in record.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::malformed(path, format!("row {rows}: cannot parse {field:?}"))
            })?;
            flat.push(v);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols), flat).map_err(|e| Error::malformed(path, e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerSidecar {
    layer_offsets: Vec<usize>,
}

/// `acts.npy` -> `acts.layers.json`.
pub fn layer_sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("layers.json")
}

fn read_layer_sidecar(path: &Path) -> Result<Option<Vec<usize>>> {
    let sidecar = layer_sidecar_path(path);
    if !sidecar.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let parsed: LayerSidecar =
        serde_json::from_str(&text).map_err(|e| Error::malformed(&sidecar, e.to_string()))?;
    Ok(Some(parsed.layer_offsets))
}

pub fn write_layer_sidecar(path: &Path, offsets: &[usize]) -> Result<()> {
    let body = serde_json::to_string(&LayerSidecar {
        layer_offsets: offsets.to_vec(),
    })
    .map_err(|e| Error::Serialization(e.to_string()))?;
    write_atomic(&layer_sidecar_path(path), |w| w.write_all(body.as_bytes()))
}

pub fn write_npy<S, D>(path: &Path, array: &ndarray::ArrayBase<S, D>) -> Result<()>
where
    S: ndarray::Data,
    ndarray::ArrayBase<S, D>: WriteNpyExt,
{
    write_atomic(path, |w| {
        array
            .write_npy(w)
            .map_err(std::io::Error::other)
    })
}

/// Writes an activation matrix and, for more than one layer, its sidecar.
pub fn write_activations(path: &Path, acts: &ActivationMatrix) -> Result<()> {
    write_npy(path, &acts.values())?;
    if acts.layer_offsets().len() > 1 {
        write_layer_sidecar(path, acts.layer_offsets())?;
    }
    Ok(())
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let arr: Array1<i64> = labels.iter().map(|&l| l as i64).collect();
    write_npy(path, &arr)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Writes an RFC-4180 CSV with the given header.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(&mut buf);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(header).map_err(ser)?;
        for row in rows {
            w.write_record(row).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, |w| w.write_all(&buf))
}

/// Reads a CSV written by [`write_csv`] into header and string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::malformed(path, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let rows = reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_owned).collect())
                .map_err(|e| Error::malformed(path, e.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

/// Per-test scores as `test_index,score`.
pub fn write_scores_csv(path: &Path, scores: &[f64]) -> Result<()> {
    write_csv(
        path,
        &["test_index", "score"],
        scores
            .iter()
            .enumerate()
            .map(|(i, s)| [i.to_string(), s.to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn npy_roundtrip_f64_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        let m = array![[0.1, -2.5e-300, f64::MAX], [1.0 / 3.0, 0.0, -0.0]];
        write_npy(&p, &m).unwrap();
        let back = read_matrix(&p).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn npy_header_is_version_1() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        write_npy(&p, &array![[1.0f64, 2.0]]).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..6], b"\x93NUMPY");
        assert_eq!(&bytes[6..8], &[1, 0]);
    }

    #[test]
    fn float32_is_upcast() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        write_npy(&p, &array![[0.5f32, 0.25]]).unwrap();
        assert_eq!(read_matrix(&p).unwrap(), array![[0.5, 0.25]]);
    }

    #[test]
    fn csv_fallback_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sm.csv");
        std::fs::write(&p, "c0,c1,c2\n1,0,0\n0.5,0.25,0.25\n").unwrap();
        let sm = load_softmax(&p).unwrap();
        assert_eq!(sm.rows(), 2);

        let l = dir.path().join("labels.csv");
        std::fs::write(&l, "label\n0\n2\n").unwrap();
        assert_eq!(load_labels(&l, Some(3)).unwrap().as_slice(), &[0, 2]);
        assert!(load_labels(&l, Some(2)).is_err());
    }

    #[test]
    fn csv_softmax_row_sum_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sm.csv");
        std::fs::write(&p, "a,b\n0.6,0.6\n").unwrap();
        let err = load_softmax(&p).unwrap_err();
        assert!(err.to_string().contains("row sum 1.2 exceeds tolerance"));
    }

    #[test]
    fn nan_rejected_at_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.npy");
        write_npy(&p, &array![[0.0, f64::NAN]]).unwrap();
        assert!(load_activations(&p).is_err());
    }

    #[test]
    fn malformed_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.npy");
        std::fs::write(&p, b"not an array").unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::Malformed { .. })));
    }

    #[test]
    fn layer_sidecar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("acts.npy");
        let acts = ActivationMatrix::new(Array2::zeros((3, 5)), vec![0, 2]).unwrap();
        write_activations(&p, &acts).unwrap();
        assert!(dir.path().join("acts.layers.json").exists());
        let back = load_activations(&p).unwrap();
        assert_eq!(back.layer_offsets(), &[0, 2]);
    }

    #[test]
    fn int_labels_npy() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("y.npy");
        write_labels(&p, &[2, 0, 1]).unwrap();
        assert_eq!(load_labels(&p, Some(3)).unwrap().as_slice(), &[2, 0, 1]);
    }
}
