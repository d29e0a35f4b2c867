//! Deterministic text formatting shared by every CSV writer.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Format with six significant digits: fixed notation for moderate
/// magnitudes, scientific otherwise. Negative zero prints as `0`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..=9).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a new digit (9.999995 -> 10.00000)
        if s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > 6 && decimals > 0 {
            let d = decimals - 1;
            return format!("{x:.d$}");
        }
        s
    } else {
        format!("{x:.5e}")
    }
}

/// A CSV table built in memory and written in one go.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.text.as_bytes())?;
        Ok(())
    }
}

/// Tracks files written by one command so they can be removed if the
/// command fails part-way.
#[derive(Debug, Default)]
pub struct OutputSet {
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn remove_all(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(1501.234567), "1501.23");
        assert_eq!(sig6(-0.0123456789), "-0.0123457");
        assert_eq!(sig6(53936.575), "53936.6");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(9.9999999), "10.0000");
        assert_eq!(sig6(1.5e-9), "1.50000e-9");
        assert_eq!(sig6(2.5e12), "2.50000e12");
    }

    #[test]
    fn table_uses_lf() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&[sig6(1.0), sig6(2.0)]);
        assert_eq!(t.as_str(), "a,b\n1.00000,2.00000\n");
    }
}
