//! CSV emission and parsing. UTF-8, header row, '.' decimal separator
//! (Rust's default float formatting), empty field for missing values.

use std::path::Path;

use crate::CliError;

pub fn fmt_f64(x: f64) -> String {
    x.to_string()
}

/// Write a CSV file atomically enough for this pipeline: full buffer,
/// single write.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a CSV produced by this pipeline: returns the data rows, header
/// skipped and checked.
pub fn read_csv(path: &Path, expected_header: &str) -> Result<Vec<Vec<String>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == expected_header => {}
        Some(h) => {
            return Err(CliError::Io(format!(
                "{}: unexpected header {h:?}, expected {expected_header:?}",
                path.display()
            )))
        }
        None => return Err(CliError::Io(format!("{}: empty file", path.display()))),
    }
    Ok(lines
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect())
}

pub fn parse_f64(field: &str, context: &str) -> Result<f64, CliError> {
    field
        .parse()
        .map_err(|e| CliError::Io(format!("{context}: bad number {field:?} ({e})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_header_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            vec!["1".into(), "0.5".into(), "".into()],
            vec!["2".into(), "0.25".into(), "3".into()],
        ];
        write_csv(&path, "a,b,c", &rows).unwrap();
        let back = read_csv(&path, "a,b,c").unwrap();
        assert_eq!(back, rows);
        assert!(read_csv(&path, "x,y,z").is_err());
    }

    #[test]
    fn float_formatting_uses_dot() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(7.0), "7");
        assert_eq!(fmt_f64(1e-5), "0.00001");
    }
}
