//! Plain-text state files: QSV holds a pure state's full amplitude vector,
//! QDM holds a density operator's nonzero entries. Both are line-oriented
//! decimal formats; blank lines and `#` comments are ignored anywhere.
//!
//! QSV: header `qsv 1 <n_qubits>`, then exactly 2^n lines `<re> <im>`,
//! amplitudes in basis order with qubit 1 as the most significant bit.
//! QDM: header `qdm 1 <n_qubits>`, then one line `<row> <col> <re> <im>`
//! per nonzero entry; unlisted entries are zero.

use crate::linalg::ComplexMatrix;
use crate::qstate::{DensityOperator, PureState, QState, QStateError};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// Structural problem: wrong header, token counts, line counts,
    /// unparsable numbers, out-of-range indices, duplicate entries.
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    /// The file parsed but does not describe a valid state
    /// (normalization, hermiticity, trace, positivity).
    #[error(transparent)]
    State(#[from] QStateError),
}

impl FileError {
    /// True for structural errors (usage-level), false for validity errors.
    pub fn is_malformed(&self) -> bool {
        !matches!(self, FileError::State(_))
    }
}

/// Twelve significant digits, scientific notation. Shared by the file
/// writers and the CLI's CSV output so identical runs stay byte-identical.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn read_state_file(path: &Path) -> Result<QState, FileError> {
    parse_state_text(&std::fs::read_to_string(path)?)
}

/// Dispatches on the header keyword (`qsv` or `qdm`).
pub fn parse_state_text(text: &str) -> Result<QState, FileError> {
    let mut lines = content_lines(text);
    let (lineno, header) = lines.next().ok_or(FileError::Malformed {
        line: 0,
        msg: "empty file".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 3 {
        return Err(malformed(lineno, "header must be `<kind> <version> <n_qubits>`"));
    }
    if tokens[1] != "1" {
        return Err(malformed(lineno, format!("unsupported format version {}", tokens[1])));
    }
    let n: usize = tokens[2]
        .parse()
        .map_err(|_| malformed(lineno, format!("bad qubit count {:?}", tokens[2])))?;
    if !(2..=12).contains(&n) {
        return Err(malformed(lineno, format!("qubit count {n} outside 2..=12")));
    }
    match tokens[0] {
        "qsv" => Ok(QState::Pure(parse_qsv_body(n, lines)?)),
        "qdm" => Ok(QState::Mixed(parse_qdm_body(n, lines)?)),
        other => Err(malformed(lineno, format!("unknown format {other:?}"))),
    }
}

pub fn qsv_string(st: &PureState) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "qsv 1 {}", st.n());
    for a in st.amplitudes() {
        let _ = writeln!(s, "{} {}", fmt_sig12(a.re), fmt_sig12(a.im));
    }
    s
}

pub fn qdm_string(rho: &DensityOperator) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "qdm 1 {}", rho.n());
    let m = rho.matrix();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m[(r, c)];
            if v.re != 0.0 || v.im != 0.0 {
                let _ = writeln!(s, "{r} {c} {} {}", fmt_sig12(v.re), fmt_sig12(v.im));
            }
        }
    }
    s
}

pub fn write_qsv(path: &Path, st: &PureState) -> Result<(), FileError> {
    std::fs::write(path, qsv_string(st))?;
    Ok(())
}

pub fn write_qdm(path: &Path, rho: &DensityOperator) -> Result<(), FileError> {
    std::fs::write(path, qdm_string(rho))?;
    Ok(())
}

/// Lines with content, 1-based numbering, comments and blanks dropped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn malformed(line: usize, msg: impl Into<String>) -> FileError {
    FileError::Malformed { line, msg: msg.into() }
}

fn parse_real(token: &str, line: usize) -> Result<f64, FileError> {
    token.parse().map_err(|_| malformed(line, format!("bad number {token:?}")))
}

fn parse_qsv_body<'a>(
    n: usize,
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<PureState, FileError> {
    let dim = 1usize << n;
    let mut amps = Vec::with_capacity(dim);
    let mut last = 0;
    for (lineno, line) in lines {
        last = lineno;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 2 {
            return Err(malformed(lineno, "amplitude line must be `<re> <im>`"));
        }
        if amps.len() == dim {
            return Err(malformed(lineno, format!("more than {dim} amplitude lines")));
        }
        amps.push(Complex64::new(parse_real(t[0], lineno)?, parse_real(t[1], lineno)?));
    }
    if amps.len() != dim {
        return Err(malformed(last, format!("expected {dim} amplitude lines, got {}", amps.len())));
    }
    Ok(PureState::new(n, amps)?)
}

fn parse_qdm_body<'a>(
    n: usize,
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<DensityOperator, FileError> {
    let dim = 1usize << n;
    let mut m = ComplexMatrix::zeros(dim, dim);
    let mut seen = vec![false; dim * dim];
    for (lineno, line) in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 4 {
            return Err(malformed(lineno, "entry line must be `<row> <col> <re> <im>`"));
        }
        let r: usize =
            t[0].parse().map_err(|_| malformed(lineno, format!("bad row {:?}", t[0])))?;
        let c: usize =
            t[1].parse().map_err(|_| malformed(lineno, format!("bad col {:?}", t[1])))?;
        if r >= dim || c >= dim {
            return Err(malformed(lineno, format!("index ({r},{c}) outside 0..{dim}")));
        }
        if seen[r * dim + c] {
            return Err(malformed(lineno, format!("duplicate entry ({r},{c})")));
        }
        seen[r * dim + c] = true;
        m[(r, c)] = Complex64::new(parse_real(t[2], lineno)?, parse_real(t[3], lineno)?);
    }
    Ok(DensityOperator::new(n, m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::dicke_state;
    use crate::sampling::{ginibre_density, sample_stream};

    #[test]
    fn qsv_round_trip() {
        let st = dicke_state(3, 1).unwrap();
        let text = qsv_string(&st);
        let QState::Pure(back) = parse_state_text(&text).unwrap() else {
            panic!("expected pure state");
        };
        assert_eq!(back.n(), 3);
        for (a, b) in st.amplitudes().iter().zip(back.amplitudes()) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn qdm_round_trip() {
        let mut rng = sample_stream(5, 0);
        let rho = ginibre_density(2, &mut rng);
        let text = qdm_string(&rho);
        let QState::Mixed(back) = parse_state_text(&text).unwrap() else {
            panic!("expected density operator");
        };
        let (a, b) = (rho.matrix(), back.matrix());
        for r in 0..4 {
            for c in 0..4 {
                assert!((a[(r, c)] - b[(r, c)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let text = "# a Bell pair\n\nqsv 1 2\n0.707106781187 0\n# middle comment\n0 0\n\n0 0\n0.707106781187 0\n";
        let QState::Pure(st) = parse_state_text(text).unwrap() else {
            panic!("expected pure state");
        };
        assert!((st.amplitudes()[0].re - 0.707106781187).abs() < 1e-12);
    }

    #[test]
    fn malformed_files_are_rejected_with_line_numbers() {
        let cases: &[(&str, usize)] = &[
            ("", 0),
            ("qsv 2 2\n", 1),
            ("qxx 1 2\n", 1),
            ("qsv 1 1\n", 1),
            ("qsv 1 13\n", 1),
            ("qsv 1 2\n1 0\n", 2),
            ("qsv 1 2\n1 0 0\n0 0\n0 0\n0 0\n", 2),
            ("qsv 1 2\n1 zero\n0 0\n0 0\n0 0\n", 2),
            ("qdm 1 2\n0 0 1 extra more\n", 2),
            ("qdm 1 2\n4 0 1 0\n", 2),
            ("qdm 1 2\n0 0 0.5 0\n0 0 0.5 0\n", 3),
        ];
        for (text, line) in cases {
            match parse_state_text(text) {
                Err(FileError::Malformed { line: l, .. }) => {
                    assert_eq!(l, *line, "wrong line for {text:?}")
                }
                other => panic!("expected malformed for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn invalid_states_are_validity_errors() {
        let unnormalized = "qsv 1 2\n1 0\n1 0\n0 0\n0 0\n";
        match parse_state_text(unnormalized) {
            Err(e @ FileError::State(_)) => assert!(!e.is_malformed()),
            other => panic!("expected validity error, got {other:?}"),
        }
        let non_psd = "qdm 1 2\n0 0 1.5 0\n1 1 -0.5 0\n";
        assert!(matches!(parse_state_text(non_psd), Err(FileError::State(_))));
    }

    #[test]
    fn qdm_writer_skips_zero_entries() {
        let st = dicke_state(2, 1).unwrap();
        let text = qdm_string(&st.density());
        // Bell-pair density has 4 nonzero entries; header plus 4 lines.
        assert_eq!(text.lines().count(), 5);
    }
}
