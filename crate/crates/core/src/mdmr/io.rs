//! Two-column spectrum text and peak extraction.

use crate::error::{ensure, invalid, Result};

/// Parses `frequency signal` rows separated by whitespace or a comma. Blank
/// lines and lines starting with `#` are skipped.
pub fn parse_spectrum(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if fields.len() != 2 {
            return invalid(format!("line {}: expected two columns, found {}", no + 1, fields.len()));
        }
        let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        match (parse(fields[0]), parse(fields[1])) {
            (Some(f), Some(s)) => rows.push((f, s)),
            _ => return invalid(format!("line {}: could not parse '{line}' as two numbers", no + 1)),
        }
    }
    ensure(rows.len() >= 3, || "spectrum needs at least three rows".into())?;
    ensure(rows.windows(2).all(|w| w[1].0 > w[0].0), || "frequencies must be strictly increasing".into())?;
    Ok(rows)
}

/// Centres of up to `max_peaks` extrema of |signal − median| that exceed
/// `threshold`, strongest first then sorted by frequency. Each centre is
/// refined by a parabola through the extremum and its neighbours.
pub fn extract_peaks(rows: &[(f64, f64)], threshold: f64, max_peaks: usize) -> Vec<f64> {
    let mut s: Vec<f64> = rows.iter().map(|r| r.1).collect();
    s.sort_by(f64::total_cmp);
    let median = s[s.len() / 2];
    let dev: Vec<f64> = rows.iter().map(|r| (r.1 - median).abs()).collect();
    let mut found: Vec<(f64, f64)> = Vec::new();
    for k in 1..rows.len().saturating_sub(1) {
        if dev[k] > threshold && dev[k] >= dev[k - 1] && dev[k] > dev[k + 1] {
            let (x0, x1, x2) = (rows[k - 1].0, rows[k].0, rows[k + 1].0);
            let (y0, y1, y2) = (dev[k - 1], dev[k], dev[k + 1]);
            let den = (x0 - x1) * (x0 - x2) * (x1 - x2);
            let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
            let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
            let c = if a < 0.0 { (-b / (2.0 * a)).clamp(x0, x2) } else { x1 };
            found.push((c, dev[k]));
        }
    }
    found.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    found.truncate(max_peaks);
    let mut centers: Vec<f64> = found.into_iter().map(|p| p.0).collect();
    centers.sort_by(f64::total_cmp);
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdmr::SpectrumPeaks;

    #[test]
    fn parses_comments_commas_and_whitespace() {
        let rows = parse_spectrum("# f, s\n2.80e9, 1.0\n\n2.81e9 0.9\n2.82e9\t1.0\n").unwrap();
        assert_eq!(rows, vec![(2.80e9, 1.0), (2.81e9, 0.9), (2.82e9, 1.0)]);
        assert!(parse_spectrum("1 2 3\n2 3\n3 4\n").is_err());
        assert!(parse_spectrum("1 x\n2 3\n3 4\n").is_err());
        assert!(parse_spectrum("2 1\n1 3\n3 4\n").is_err());
    }

    #[test]
    fn extracts_signed_lorentzian_centres() {
        let s = SpectrumPeaks {
            centers: vec![2.5e9, 2.7e9, 3.0e9],
            widths: vec![8e6; 3],
            amplitudes: vec![-0.3, 0.2, -0.25],
        };
        let f: Vec<f64> = (0..4000).map(|k| 2.3e9 + k as f64 * 0.25e6).collect();
        let rows: Vec<(f64, f64)> = f.iter().cloned().zip(s.curve(&f)).collect();
        let c = extract_peaks(&rows, 0.05, 8);
        assert_eq!(c.len(), 3);
        for (a, b) in c.iter().zip(&s.centers) {
            assert!((a - b).abs() < 0.05e6, "{a} {b}");
        }
        assert_eq!(extract_peaks(&rows, 0.05, 2).len(), 2);
    }
}
