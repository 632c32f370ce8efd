//! Matrix Market coordinate I/O.
//!
//! Reads and writes the plain-text `coordinate real` exchange format:
//! a `%%MatrixMarket` banner, optional `%` comment lines, one size line
//! `nrows ncols nnz`, then one `i j value` entry per line with 1-based
//! indices. `general` and `symmetric` qualifiers are accepted; symmetric
//! files store one triangle and are expanded by mirroring off-diagonal
//! entries. Duplicate coordinates are summed. Anything else in the banner
//! (`array`, `complex`, `pattern`, `integer`, `hermitian`, ...) is rejected
//! with the offending token named, rather than guessed at.

use std::fmt::LowerExp;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use super::CsrMatrix;
use crate::scalar::Real;

/// Errors from [`parse_matrix_market`].
#[derive(Debug, Error)]
pub enum MatrixMarketError {
    #[error("unsupported Matrix Market qualifier `{token}` (supported: matrix coordinate real general|symmetric)")]
    Unsupported { token: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: entry ({i}, {j}) outside declared size {nrows}x{ncols}")]
    IndexOutOfRange {
        line: usize,
        i: usize,
        j: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn malformed(line: usize, message: impl Into<String>) -> MatrixMarketError {
    MatrixMarketError::Malformed {
        line,
        message: message.into(),
    }
}

/// Parses a Matrix Market `coordinate real general|symmetric` stream into a
/// CSR matrix (0-based in memory).
pub fn parse_matrix_market<R: Real>(
    reader: impl BufRead,
) -> Result<CsrMatrix<R>, MatrixMarketError> {
    let mut lines = reader.lines().enumerate();

    // Banner: %%MatrixMarket object format field symmetry
    let (idx, banner) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file, expected %%MatrixMarket banner"))
        .and_then(|(i, l)| Ok((i, l?)))?;
    let banner_line = idx + 1;
    if !banner.to_ascii_lowercase().starts_with("%%matrixmarket") {
        return Err(malformed(banner_line, "missing %%MatrixMarket banner"));
    }
    let tokens: Vec<String> = banner
        .split_whitespace()
        .skip(1)
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 4 {
        return Err(malformed(
            banner_line,
            format!("banner has {} qualifiers, expected 4", tokens.len()),
        ));
    }
    for (token, allowed) in tokens.iter().zip([
        &["matrix"][..],
        &["coordinate"][..],
        &["real"][..],
        &["general", "symmetric"][..],
    ]) {
        if !allowed.contains(&token.as_str()) {
            return Err(MatrixMarketError::Unsupported {
                token: token.clone(),
            });
        }
    }
    let symmetric = tokens[3] == "symmetric";

    // Size line: first non-comment, non-blank line after the banner.
    let mut size: Option<(usize, usize, usize, usize)> = None;
    let mut file_entries = 0usize;
    let mut triplets: Vec<(usize, usize, R)> = Vec::new();
    for item in lines {
        let (idx, line) = item;
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(malformed(
                        lineno,
                        format!(
                            "size line has {} fields, expected `rows cols nnz`",
                            fields.len()
                        ),
                    ));
                }
                let parse = |s: &str, what: &str| {
                    s.parse::<usize>()
                        .map_err(|_| malformed(lineno, format!("bad {what} `{s}`")))
                };
                let nrows = parse(fields[0], "row count")?;
                let ncols = parse(fields[1], "column count")?;
                let nnz = parse(fields[2], "entry count")?;
                triplets.reserve(if symmetric { 2 * nnz } else { nnz });
                size = Some((nrows, ncols, nnz, lineno));
            }
            Some((nrows, ncols, nnz, _)) => {
                if file_entries == nnz {
                    return Err(malformed(
                        lineno,
                        format!("more than the declared {nnz} entries"),
                    ));
                }
                if fields.len() != 3 {
                    return Err(malformed(
                        lineno,
                        format!(
                            "entry line has {} fields, expected `i j value`",
                            fields.len()
                        ),
                    ));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|_| malformed(lineno, format!("bad row index `{}`", fields[0])))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|_| malformed(lineno, format!("bad column index `{}`", fields[1])))?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| malformed(lineno, format!("bad value `{}`", fields[2])))?;
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(MatrixMarketError::IndexOutOfRange {
                        line: lineno,
                        i,
                        j,
                        nrows,
                        ncols,
                    });
                }
                let v = R::from_f64(v)
                    .ok_or_else(|| malformed(lineno, format!("unrepresentable value `{v}`")))?;
                file_entries += 1;
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }

    let (nrows, ncols, nnz, size_line) = size.ok_or_else(|| malformed(1, "missing size line"))?;
    if file_entries != nnz {
        return Err(malformed(
            size_line,
            format!("declared {nnz} entries but the file contains {file_entries}"),
        ));
    }
    Ok(CsrMatrix::from_triplets(nrows, ncols, &triplets))
}

/// Parses Matrix Market text held in a string.
pub fn parse_matrix_market_str<R: Real>(text: &str) -> Result<CsrMatrix<R>, MatrixMarketError> {
    parse_matrix_market(text.as_bytes())
}

/// Reads a `.mtx` file.
pub fn read_matrix_market_file<R: Real>(
    path: impl AsRef<Path>,
) -> Result<CsrMatrix<R>, MatrixMarketError> {
    parse_matrix_market(BufReader::new(File::open(path)?))
}

/// Writes a CSR matrix as Matrix Market `coordinate real general` text,
/// entries in CSR order with 1-based indices. Values are printed with
/// shortest round-trip formatting, so parse → write → parse reproduces the
/// matrix exactly.
pub fn write_matrix_market<R: Real + LowerExp>(
    m: &CsrMatrix<R>,
    mut w: impl Write,
) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_small_general_matrix() {
        let text = "%%MatrixMarket matrix coordinate real general\n\
                    % a 2x2 diagonal\n\
                    2 2 2\n\
                    1 1 4.0\n\
                    2 2 5.0\n";
        let m: CsrMatrix<f64> = parse_matrix_market_str(text).unwrap();
        assert_eq!((m.nrows(), m.ncols(), m.nnz()), (2, 2, 2));
        assert_eq!(m.entry(0, 0), Some(4.0));
        assert_eq!(m.entry(1, 1), Some(5.0));
    }

    #[test]
    fn entry_order_in_file_does_not_matter() {
        let text = "%%MatrixMarket matrix coordinate real general\n\
                    2 2 2\n\
                    2 2 1.0\n\
                    1 1 1.0\n";
        let m: CsrMatrix<f64> = parse_matrix_market_str(text).unwrap();
        assert_eq!(m, CsrMatrix::identity(2));
    }

    #[test]
    fn symmetric_files_are_mirrored() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n\
                    3 3 3\n\
                    1 1 2.0\n\
                    2 1 7.0\n\
                    3 3 1.0\n";
        let m: CsrMatrix<f64> = parse_matrix_market_str(text).unwrap();
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.entry(1, 0), Some(7.0));
        assert_eq!(m.entry(0, 1), Some(7.0));
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let text = "%%MatrixMarket matrix coordinate real general\n\
                    1 1 2\n\
                    1 1 1.5\n\
                    1 1 2.5\n";
        let m: CsrMatrix<f64> = parse_matrix_market_str(text).unwrap();
        assert_eq!(m.entry(0, 0), Some(4.0));
    }

    #[test]
    fn complex_field_is_rejected_by_token() {
        let text = "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1.0 0.0\n";
        let err = parse_matrix_market_str::<f64>(text).unwrap_err();
        match err {
            MatrixMarketError::Unsupported { token } => assert_eq!(token, "complex"),
            other => panic!("expected Unsupported, got {other:?}"),
        }
    }

    #[test]
    fn array_format_is_rejected_by_token() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1.0\n0.0\n0.0\n1.0\n";
        let err = parse_matrix_market_str::<f64>(text).unwrap_err();
        match err {
            MatrixMarketError::Unsupported { token } => assert_eq!(token, "array"),
            other => panic!("expected Unsupported, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_index_reports_the_line() {
        let text = "%%MatrixMarket matrix coordinate real general\n\
                    2 2 1\n\
                    3 1 1.0\n";
        let err = parse_matrix_market_str::<f64>(text).unwrap_err();
        match err {
            MatrixMarketError::IndexOutOfRange { line, i, .. } => {
                assert_eq!(line, 3);
                assert_eq!(i, 3);
            }
            other => panic!("expected IndexOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn wrong_entry_count_is_an_error() {
        let missing = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(matches!(
            parse_matrix_market_str::<f64>(missing),
            Err(MatrixMarketError::Malformed { .. })
        ));
        let extra = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n2 2 1.0\n";
        assert!(matches!(
            parse_matrix_market_str::<f64>(extra),
            Err(MatrixMarketError::Malformed { .. })
        ));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let m = CsrMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.25), (2, 1, -3.5e-9), (1, 0, 0.1), (1, 1, 7.0)],
        );
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        let back: CsrMatrix<f64> = parse_matrix_market(buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }
}
