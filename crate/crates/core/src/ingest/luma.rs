use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean luminance of the configured screen region at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LumaSample {
    pub time: f64,
    pub luma: f64,
}

pub fn parse_luma_file(path: &Path) -> Result<Vec<LumaSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_luma_series(&text, &path.display().to_string())
}

/// Parses `seconds<TAB>luma` lines; `#` comments allowed. Times must
/// strictly increase and luma must lie in `[0, 1]`.
pub fn parse_luma_series(text: &str, file: &str) -> Result<Vec<LumaSample>> {
    let mut out: Vec<LumaSample> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split('\t');
        let (Some(t), Some(l), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::parse(file, line_no, "expected seconds<TAB>luma"));
        };
        let time: f64 = t.trim().parse().map_err(|_| Error::parse(file, line_no, "non-numeric time"))?;
        let luma: f64 = l.trim().parse().map_err(|_| Error::parse(file, line_no, "non-numeric luma"))?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::parse(file, line_no, "time must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&luma) {
            return Err(Error::parse(file, line_no, "luma outside [0, 1]"));
        }
        if out.last().is_some_and(|p| time <= p.time) {
            return Err(Error::parse(file, line_no, format!("non-monotonic at line {line_no}")));
        }
        out.push(LumaSample { time, luma });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_checks_order() {
        let s = parse_luma_series("# t\tl\n0\t0.3\n0.1\t0.31\n", "l").unwrap();
        assert_eq!(s.len(), 2);
        assert!(parse_luma_series("0\t0.3\n0\t0.3\n", "l").is_err());
        assert!(parse_luma_series("0\t1.3\n", "l").is_err());
    }
}
