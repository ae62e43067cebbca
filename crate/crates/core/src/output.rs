//! CSV helpers shared by the artifact writers.

use std::io::Write;

use crate::error::Result;

/// Formats a float with 17 significant digits, which round-trips `f64`.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header line and rows of floats.
pub fn write_rows<W: Write>(mut w: W, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    writeln!(w, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Parses a CSV body written by [`write_rows`], skipping `#` comments and
/// the header.
pub fn read_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').filter_map(|c| c.trim().parse().ok()).collect())
        .collect()
}
