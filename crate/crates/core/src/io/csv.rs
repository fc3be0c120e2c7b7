use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::UNLABELED;
use crate::numeric::{DenseMatrix, EmbeddingMatrix};

/// Reads a rectangular numeric CSV.
///
/// A first line that does not parse as numbers is treated as a header. Values
/// are rounded through `f32` so a CSV and a TSPE file holding the same data
/// load to identical matrices. With `label_column`, the last column is parsed
/// as an integer label (`-1` or an empty cell marks an unlabeled point).
pub fn read_csv_embeddings(
    path: impl AsRef<Path>,
    label_column: bool,
) -> Result<(EmbeddingMatrix, Option<Vec<u32>>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_embeddings(&text, label_column)
}

pub(crate) fn parse_csv_embeddings(
    text: &str,
    label_column: bool,
) -> Result<(EmbeddingMatrix, Option<Vec<u32>>)> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut width: Option<usize> = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut first = true;

    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|cell| cell.parse::<f64>().is_err()) {
                continue;
            }
        }

        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Csv {
                line,
                message: format!("expected {expected} columns, found {}", record.len()),
            });
        }
        let n_features = if label_column {
            expected.saturating_sub(1)
        } else {
            expected
        };
        if n_features == 0 {
            return Err(Error::Csv {
                line,
                message: "no feature columns".into(),
            });
        }

        for (col, cell) in record.iter().take(n_features).enumerate() {
            let v: f32 = cell.parse().map_err(|_| Error::Csv {
                line,
                message: format!("column {}: not a number: {cell:?}", col + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    line,
                    message: format!("column {}: non-finite value {cell:?}", col + 1),
                });
            }
            data.push(f64::from(v));
        }
        if label_column {
            let cell = &record[n_features];
            let label = match cell {
                "" | "-1" => UNLABELED,
                _ => cell.parse::<u32>().map_err(|_| Error::Csv {
                    line,
                    message: format!("label column: not a label: {cell:?}"),
                })?,
            };
            labels.push(label);
        }
    }

    let Some(width) = width else {
        return Err(Error::EmptyDataset);
    };
    let cols = if label_column { width - 1 } else { width };
    let rows = data.len() / cols;
    let x = DenseMatrix::from_vec(rows, cols, data)?;
    Ok((x, label_column.then_some(labels)))
}

/// Writes a matrix as CSV with a `c0,c1,...` header, optionally appending a
/// label column.
pub fn write_csv_matrix(
    path: impl AsRef<Path>,
    x: &DenseMatrix,
    labels: Option<&[u32]>,
) -> Result<()> {
    let path = path.as_ref();
    if let Some(labels) = labels {
        if labels.len() != x.rows() {
            return Err(Error::LengthMismatch {
                what: "matrix rows vs labels",
                left: x.rows(),
                right: labels.len(),
            });
        }
    }
    let mut out = Vec::new();
    let mut header: Vec<String> = (0..x.cols()).map(|c| format!("c{c}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    writeln!(out, "{}", header.join(",")).expect("write to Vec");
    for (i, row) in x.row_iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = labels {
            cells.push(match labels[i] {
                UNLABELED => "-1".to_string(),
                l => l.to_string(),
            });
        }
        writeln!(out, "{}", cells.join(",")).expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{decode_embeddings, encode_embeddings};

    #[test]
    fn plain_grid() {
        let (x, labels) = parse_csv_embeddings("1.0,2.0\n3.0,4.0", false).unwrap();
        assert_eq!(x.shape(), (2, 2));
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert!(labels.is_none());
    }

    #[test]
    fn ragged_row_names_line() {
        let err = parse_csv_embeddings("1.0,2.0\n3.0\n", false).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }), "{err}");
    }

    #[test]
    fn non_numeric_cell_names_line() {
        let err = parse_csv_embeddings("1,2\n3,4\n5,abc\n", false).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err}");
    }

    #[test]
    fn header_detected_and_skipped() {
        let (x, labels) = parse_csv_embeddings("a,b,label\n1,2,0\n3,4,-1\n", true).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(labels.unwrap(), vec![0, UNLABELED]);
    }

    #[test]
    fn empty_csv_is_empty_dataset() {
        assert!(matches!(
            parse_csv_embeddings("", false),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            parse_csv_embeddings("x,y\n", false),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn csv_matches_binary_of_same_data() {
        let text = "0.1,-2.3,4.56789\n1e-3,7,0.3333333333\n";
        let (from_csv, _) = parse_csv_embeddings(text, false).unwrap();
        // independent route: parse each cell as f32 and push through the binary format
        let cells: Vec<f64> = text
            .split([',', '\n'])
            .filter(|s| !s.is_empty())
            .map(|s| f64::from(s.parse::<f32>().unwrap()))
            .collect();
        let direct = DenseMatrix::from_vec(2, 3, cells).unwrap();
        let from_binary = decode_embeddings(&encode_embeddings(&direct).unwrap()).unwrap();
        assert_eq!(from_csv, from_binary);
    }

    #[test]
    fn written_csv_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let x = DenseMatrix::from_rows(&[[0.5, -1.25], [2.0, 3.5]]).unwrap();
        write_csv_matrix(&path, &x, Some(&[4, UNLABELED])).unwrap();
        let (back, labels) = read_csv_embeddings(&path, true).unwrap();
        assert_eq!(back, x);
        assert_eq!(labels.unwrap(), vec![4, UNLABELED]);
    }
}
