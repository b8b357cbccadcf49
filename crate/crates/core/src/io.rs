//! Bit-exact array serialization and the typed readers/writers the CLI
//! uses for chains, permutations, clusterings and similarity matrices.
//!
//! # Binary format
//!
//! ```text
//! offset  size        content
//! 0       6           magic "LSARR1"
//! 6       1           dtype: 0x01 = f64 little-endian, 0x02 = i64 little-endian
//! 7       1           ndim: 1..=3
//! 8       8 * ndim    dims, u64 little-endian
//! ...     8 * prod    payload, row-major
//! ```
//!
//! The file length must equal `8 + 8*ndim + 8*prod(dims)` exactly.
//!
//! A plain-text fallback is accepted on input: a header line
//! `# dims: a,b,c` followed by the row-major values separated by commas
//! and/or newlines. Labels and permutation entries are 1-based in both
//! formats and converted at this boundary.

use crate::chains::{AllocationChain, ClassificationChain, Dataset, ParameterChain};
use crate::error::{Error, Result};
use crate::perm::PermutationSet;
use ndarray::{Array2, Array3};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 6] = b"LSARR1";
const DTYPE_F64: u8 = 0x01;
const DTYPE_I64: u8 = 0x02;

/// A raw array straight from disk: dims plus a flat row-major payload.
#[derive(Debug, Clone, PartialEq)]
pub enum RawArray {
    Float { dims: Vec<usize>, data: Vec<f64> },
    Int { dims: Vec<usize>, data: Vec<i64> },
}

impl RawArray {
    pub fn dims(&self) -> &[usize] {
        match self {
            RawArray::Float { dims, .. } => dims,
            RawArray::Int { dims, .. } => dims,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Read a binary or plain-text array file.
pub fn read_array(path: &Path) -> Result<RawArray> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    if bytes.len() >= 6 && &bytes[..6] != MAGIC && bytes.starts_with(b"LSARR") {
        return Err(format_err(path, "bad magic"));
    }
    if bytes.len() >= 6 && &bytes[..6] == MAGIC {
        parse_binary(path, &bytes)
    } else {
        parse_text(path, &bytes)
    }
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<RawArray> {
    if bytes.len() < 8 {
        return Err(format_err(path, "truncated header"));
    }
    let dtype = bytes[6];
    let ndim = bytes[7] as usize;
    if !(1..=3).contains(&ndim) {
        return Err(format_err(path, format!("ndim {ndim} outside 1..=3")));
    }
    let header = 8 + 8 * ndim;
    if bytes.len() < header {
        return Err(format_err(path, "truncated dims"));
    }
    let mut dims = Vec::with_capacity(ndim);
    let mut count: usize = 1;
    for d in 0..ndim {
        let raw = u64::from_le_bytes(bytes[8 + 8 * d..16 + 8 * d].try_into().unwrap());
        let dim = usize::try_from(raw).map_err(|_| format_err(path, "dim overflow"))?;
        count = count
            .checked_mul(dim)
            .ok_or_else(|| format_err(path, "dim overflow"))?;
        dims.push(dim);
    }
    let expected = header
        .checked_add(
            count
                .checked_mul(8)
                .ok_or_else(|| format_err(path, "dim overflow"))?,
        )
        .ok_or_else(|| format_err(path, "dim overflow"))?;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!("file length {} does not match dims (expected {expected})", bytes.len()),
        ));
    }
    let payload = &bytes[header..];
    match dtype {
        DTYPE_F64 => {
            let mut data = Vec::with_capacity(count);
            for (idx, chunk) in payload.chunks_exact(8).enumerate() {
                let v = f64::from_le_bytes(chunk.try_into().unwrap());
                if !v.is_finite() {
                    return Err(format_err(
                        path,
                        format!("non-finite value {v} at flat index {idx}"),
                    ));
                }
                data.push(v);
            }
            Ok(RawArray::Float { dims, data })
        }
        DTYPE_I64 => {
            let data = payload
                .chunks_exact(8)
                .map(|chunk| i64::from_le_bytes(chunk.try_into().unwrap()))
                .collect();
            Ok(RawArray::Int { dims, data })
        }
        other => Err(format_err(path, format!("unknown dtype 0x{other:02x}"))),
    }
}

fn parse_text(path: &Path, bytes: &[u8]) -> Result<RawArray> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| format_err(path, "neither a binary array nor UTF-8 text"))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(path, "empty file"))?
        .trim();
    let dims_part = header
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("dims:"))
        .ok_or_else(|| format_err(path, "text arrays need a `# dims: ...` header"))?;
    let dims: Vec<usize> = dims_part
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| format_err(path, format!("bad dimension `{}`", tok.trim())))
        })
        .collect::<Result<_>>()?;
    if dims.is_empty() || dims.len() > 3 {
        return Err(format_err(path, "dims must have 1 to 3 entries"));
    }
    let count: usize = dims.iter().product();
    let mut tokens = Vec::with_capacity(count);
    for line in lines {
        for tok in line.split(',') {
            let tok = tok.trim();
            if !tok.is_empty() {
                tokens.push(tok);
            }
        }
    }
    if tokens.len() != count {
        return Err(format_err(
            path,
            format!("expected {count} values for dims {dims:?}, found {}", tokens.len()),
        ));
    }
    // integer file if every token parses as i64
    if tokens.iter().all(|tok| tok.parse::<i64>().is_ok()) {
        let data = tokens.iter().map(|tok| tok.parse::<i64>().unwrap()).collect();
        return Ok(RawArray::Int { dims, data });
    }
    let mut data = Vec::with_capacity(count);
    for (idx, tok) in tokens.iter().enumerate() {
        let v: f64 = tok
            .parse()
            .map_err(|_| format_err(path, format!("bad value `{tok}`")))?;
        if !v.is_finite() {
            return Err(format_err(
                path,
                format!("non-finite value {v} at flat index {idx}"),
            ));
        }
        data.push(v);
    }
    Ok(RawArray::Float { dims, data })
}

/// Write an array in the binary format; the round trip is bitwise lossless.
pub fn write_array(path: &Path, array: &RawArray) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    let (dims, count) = match array {
        RawArray::Float { dims, data } => {
            bytes.push(DTYPE_F64);
            (dims, data.len())
        }
        RawArray::Int { dims, data } => {
            bytes.push(DTYPE_I64);
            (dims, data.len())
        }
    };
    if dims.is_empty() || dims.len() > 3 {
        return Err(Error::InvalidInput(format!(
            "arrays must have 1 to 3 dimensions, got {}",
            dims.len()
        )));
    }
    if dims.iter().product::<usize>() != count {
        return Err(Error::InvalidInput(format!(
            "payload of {count} values does not match dims {dims:?}"
        )));
    }
    bytes.push(dims.len() as u8);
    for &d in dims {
        bytes.extend_from_slice(&(d as u64).to_le_bytes());
    }
    match array {
        RawArray::Float { data, .. } => {
            for v in data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        RawArray::Int { data, .. } => {
            for v in data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| io_err(path, e))
}

fn expect_float(path: &Path, array: RawArray, ndim: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    match array {
        RawArray::Float { dims, data } if dims.len() == ndim => Ok((dims, data)),
        RawArray::Float { dims, .. } => Err(format_err(
            path,
            format!("expected a {ndim}-d float array, got {} dims", dims.len()),
        )),
        RawArray::Int { .. } => Err(format_err(path, "expected a float array, got integers")),
    }
}

fn expect_int(path: &Path, array: RawArray, ndim: usize) -> Result<(Vec<usize>, Vec<i64>)> {
    match array {
        RawArray::Int { dims, data } if dims.len() == ndim => Ok((dims, data)),
        RawArray::Int { dims, .. } => Err(format_err(
            path,
            format!("expected a {ndim}-d integer array, got {} dims", dims.len()),
        )),
        RawArray::Float { .. } => Err(format_err(path, "expected an integer array, got floats")),
    }
}

fn to_zero_based(path: &Path, data: Vec<i64>, k: Option<usize>) -> Result<Vec<usize>> {
    data.into_iter()
        .enumerate()
        .map(|(idx, v)| {
            if v < 1 {
                return Err(format_err(
                    path,
                    format!("label {v} at flat index {idx} (labels are 1-based)"),
                ));
            }
            let label = (v - 1) as usize;
            if let Some(k) = k {
                if label >= k {
                    return Err(Error::LabelOutOfRange {
                        label: label + 1,
                        k,
                    });
                }
            }
            Ok(label)
        })
        .collect()
}

pub fn read_parameter_chain(path: &Path) -> Result<ParameterChain> {
    let (dims, data) = expect_float(path, read_array(path)?, 3)?;
    let array = Array3::from_shape_vec((dims[0], dims[1], dims[2]), data)
        .map_err(|e| format_err(path, e.to_string()))?;
    ParameterChain::new(array)
}

pub fn read_allocation_chain(path: &Path, k: Option<usize>) -> Result<AllocationChain> {
    let (dims, data) = expect_int(path, read_array(path)?, 2)?;
    let labels = to_zero_based(path, data, k)?;
    let array = Array2::from_shape_vec((dims[0], dims[1]), labels)
        .map_err(|e| format_err(path, e.to_string()))?;
    match k {
        Some(k) => AllocationChain::new(array, k),
        None => AllocationChain::infer_k(array),
    }
}

pub fn read_classification_chain(path: &Path) -> Result<ClassificationChain> {
    let (dims, data) = expect_float(path, read_array(path)?, 3)?;
    let array = Array3::from_shape_vec((dims[0], dims[1], dims[2]), data)
        .map_err(|e| format_err(path, e.to_string()))?;
    ClassificationChain::new(array)
}

/// 2-d float file, or a 1-d file interpreted as a single column.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    match read_array(path)? {
        RawArray::Float { dims, data } if dims.len() == 2 => {
            let array = Array2::from_shape_vec((dims[0], dims[1]), data)
                .map_err(|e| format_err(path, e.to_string()))?;
            Dataset::new(array)
        }
        RawArray::Float { dims, data } if dims.len() == 1 => {
            let _ = dims;
            Dataset::univariate(data)
        }
        RawArray::Float { dims, .. } => Err(format_err(
            path,
            format!("expected 1-d or 2-d data, got {} dims", dims.len()),
        )),
        RawArray::Int { .. } => Err(format_err(path, "expected a float array, got integers")),
    }
}

/// 1-d integer file of 1-based labels (an allocation pivot or ground truth).
pub fn read_label_vector(path: &Path, k: Option<usize>) -> Result<Vec<usize>> {
    let (_, data) = expect_int(path, read_array(path)?, 1)?;
    to_zero_based(path, data, k)
}

/// 2-d float file (the pivot parameter matrix).
pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let (dims, data) = expect_float(path, read_array(path)?, 2)?;
    Array2::from_shape_vec((dims[0], dims[1]), data).map_err(|e| format_err(path, e.to_string()))
}

pub fn read_permutation_set(path: &Path) -> Result<PermutationSet> {
    let (dims, data) = expect_int(path, read_array(path)?, 2)?;
    let labels = to_zero_based(path, data, Some(dims[1]))?;
    let array = Array2::from_shape_vec((dims[0], dims[1]), labels)
        .map_err(|e| format_err(path, e.to_string()))?;
    PermutationSet::from_rows(array)
}

pub fn write_permutation_set(path: &Path, set: &PermutationSet) -> Result<()> {
    let data: Vec<i64> = set.rows().iter().map(|&l| l as i64 + 1).collect();
    write_array(
        path,
        &RawArray::Int {
            dims: vec![set.m(), set.k()],
            data,
        },
    )
}

/// Rows of 1-based labels (the per-method clusterings, truth last).
pub fn write_label_matrix(path: &Path, rows: &[&[usize]]) -> Result<()> {
    let n = rows.first().map_or(0, |r| r.len());
    let data: Vec<i64> = rows
        .iter()
        .flat_map(|r| r.iter().map(|&l| l as i64 + 1))
        .collect();
    write_array(
        path,
        &RawArray::Int {
            dims: vec![rows.len(), n],
            data,
        },
    )
}

pub fn write_float_matrix(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    write_array(
        path,
        &RawArray::Float {
            dims: vec![matrix.nrows(), matrix.ncols()],
            data: matrix.iter().copied().collect(),
        },
    )
}

pub fn write_parameter_chain(path: &Path, chain: &ParameterChain) -> Result<()> {
    write_array(
        path,
        &RawArray::Float {
            dims: vec![chain.m(), chain.k(), chain.j()],
            data: chain.data().iter().copied().collect(),
        },
    )
}

pub fn write_allocation_chain(path: &Path, chain: &AllocationChain) -> Result<()> {
    write_array(
        path,
        &RawArray::Int {
            dims: vec![chain.m(), chain.n()],
            data: chain.data().iter().map(|&l| l as i64 + 1).collect(),
        },
    )
}

pub fn write_classification_chain(path: &Path, chain: &ClassificationChain) -> Result<()> {
    write_array(
        path,
        &RawArray::Float {
            dims: vec![chain.m(), chain.n(), chain.k()],
            data: chain.data().iter().copied().collect(),
        },
    )
}

pub fn write_dataset(path: &Path, x: &Dataset) -> Result<()> {
    write_array(
        path,
        &RawArray::Float {
            dims: vec![x.n(), x.d()],
            data: x.x().iter().copied().collect(),
        },
    )
}

pub fn write_label_vector(path: &Path, labels: &[usize]) -> Result<()> {
    write_array(
        path,
        &RawArray::Int {
            dims: vec![labels.len()],
            data: labels.iter().map(|&l| l as i64 + 1).collect(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("labelswitch-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn float_round_trip_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..24).map(|_| rng.random::<f64>() * 1e6 - 5e5).collect();
        let array = RawArray::Float {
            dims: vec![3, 2, 4],
            data: data.clone(),
        };
        let path = tmp("roundtrip.lsa");
        write_array(&path, &array).unwrap();
        let back = read_array(&path).unwrap();
        match back {
            RawArray::Float { dims, data: got } => {
                assert_eq!(dims, vec![3, 2, 4]);
                for (a, b) in got.iter().zip(data.iter()) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
            _ => panic!("wrong dtype"),
        }
    }

    #[test]
    fn int_round_trip() {
        let array = RawArray::Int {
            dims: vec![2, 3],
            data: vec![1, 2, 3, -4, 5, i64::MAX],
        };
        let path = tmp("ints.lsa");
        write_array(&path, &array).unwrap();
        assert_eq!(read_array(&path).unwrap(), array);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let path = tmp("badmagic.lsa");
        std::fs::write(&path, b"LSARRX\x01\x01\x01\x00\x00\x00\x00\x00\x00\x00").unwrap();
        let err = read_array(&path).unwrap_err();
        assert!(err.to_string().contains("bad magic"));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let array = RawArray::Float {
            dims: vec![4],
            data: vec![1.0, 2.0, 3.0, 4.0],
        };
        let path = tmp("trunc.lsa");
        write_array(&path, &array).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        let err = read_array(&path).unwrap_err();
        assert!(err.to_string().contains("length"));
    }

    #[test]
    fn nan_is_reported_with_index() {
        let path = tmp("nan.lsa");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"LSARR1");
        bytes.push(0x01);
        bytes.push(1);
        bytes.extend_from_slice(&3u64.to_le_bytes());
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        bytes.extend_from_slice(&f64::NAN.to_le_bytes());
        bytes.extend_from_slice(&2.0f64.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        let err = read_array(&path).unwrap_err();
        assert!(err.to_string().contains("index 1"), "{err}");
    }

    #[test]
    fn csv_fallback_matches_direct_construction() {
        let path = tmp("csv.txt");
        std::fs::write(&path, "# dims: 2,3\n1.5, 2.0, 3.25\n4.0, 5.5, 6.0\n").unwrap();
        match read_array(&path).unwrap() {
            RawArray::Float { dims, data } => {
                assert_eq!(dims, vec![2, 3]);
                assert_eq!(data, vec![1.5, 2.0, 3.25, 4.0, 5.5, 6.0]);
            }
            _ => panic!("expected floats"),
        }

        // integer-looking files come back as integers
        let path = tmp("csv-int.txt");
        std::fs::write(&path, "# dims: 4\n1,2\n2,1\n").unwrap();
        match read_array(&path).unwrap() {
            RawArray::Int { dims, data } => {
                assert_eq!(dims, vec![4]);
                assert_eq!(data, vec![1, 2, 2, 1]);
            }
            _ => panic!("expected ints"),
        }
    }

    #[test]
    fn csv_3d_inputs_are_accepted() {
        let path = tmp("csv3.txt");
        std::fs::write(&path, "# dims: 2,1,2\n0.5,0.5\n0.25,0.75\n").unwrap();
        let chain = read_classification_chain(&path).unwrap();
        assert_eq!(chain.m(), 2);
        assert_eq!(chain.n(), 1);
        assert_eq!(chain.k(), 2);
    }

    #[test]
    fn labels_are_one_based_on_disk() {
        let path = tmp("labels.lsa");
        write_label_vector(&path, &[0, 1, 2]).unwrap();
        match read_array(&path).unwrap() {
            RawArray::Int { data, .. } => assert_eq!(data, vec![1, 2, 3]),
            _ => panic!(),
        }
        assert_eq!(read_label_vector(&path, Some(3)).unwrap(), vec![0, 1, 2]);
        assert!(read_label_vector(&path, Some(2)).is_err());
    }

    #[test]
    fn type_confusion_is_rejected() {
        let path = tmp("floats-for-ints.lsa");
        write_array(
            &path,
            &RawArray::Float {
                dims: vec![2],
                data: vec![1.0, 2.0],
            },
        )
        .unwrap();
        assert!(read_label_vector(&path, None).is_err());

        let path = tmp("ints-for-floats.lsa");
        write_array(
            &path,
            &RawArray::Int {
                dims: vec![2, 2],
                data: vec![1, 2, 3, 4],
            },
        )
        .unwrap();
        assert!(read_matrix(&path).is_err());
    }
}
