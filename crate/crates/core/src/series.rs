//! Observed or simulated samples `y_1..y_n` and their CSV representation.
//!
//! Every filter in this crate treats values before `t = 1` as zero, so a
//! `Series` is the complete input to any in-sample computation.

use std::io::{Read, Write};
use std::ops::Deref;
use std::path::Path;

use crate::error::{ArfimaError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(ArfimaError::InvalidParameter("series must be nonempty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ArfimaError::InvalidParameter(
                "series contains non-finite values".into(),
            ));
        }
        Ok(Series { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// First `n` observations.
    pub fn head(&self, n: usize) -> Result<Series> {
        Series::new(self.values[..n.min(self.values.len())].to_vec())
    }

    /// Reads a single-column CSV whose header names the column (`y`, `eps`, ...).
    pub fn read_csv<R: Read>(reader: R, column: &str) -> Result<Series> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let idx = headers.iter().position(|h| h == column).ok_or_else(|| {
            ArfimaError::DegenerateData(format!("CSV has no column named '{column}'"))
        })?;
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = rec.get(idx).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| {
                ArfimaError::DegenerateData(format!("cannot parse '{field}' as a number"))
            })?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(ArfimaError::DegenerateData("CSV contains no rows".into()));
        }
        Series::new(values).map_err(|e| ArfimaError::DegenerateData(e.to_string()))
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P, column: &str) -> Result<Series> {
        let f = std::fs::File::open(path)?;
        Series::read_csv(f, column)
    }

    pub fn write_csv<W: Write>(&self, writer: W, column: &str) -> Result<()> {
        write_column(writer, column, &self.values)
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P, column: &str) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(f, column)
    }
}

pub(crate) fn write_column<W: Write>(writer: W, column: &str, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([column])?;
    for v in values {
        w.write_record([format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

impl Deref for Series {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl AsRef<[f64]> for Series {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

impl TryFrom<Vec<f64>> for Series {
    type Error = ArfimaError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Series::new(values)
    }
}

/// Dot product with several independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let chunks = n / 8;
    for c in 0..chunks {
        let o = c * 8;
        for k in 0..8 {
            acc[k] += a[o + k] * b[o + k];
        }
    }
    let mut tail = 0.0;
    for k in chunks * 8..n {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// Causal convolution `out_t = sum_{k=0}^{t} coeffs[k] * x[t-k]`, truncated to `x.len()`.
///
/// `coeffs` may be shorter than `x`; missing coefficients are zero.
pub(crate) fn causal_convolve(coeffs: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let rev: Vec<f64> = x.iter().rev().copied().collect();
    (0..n)
        .map(|t| {
            let m = (t + 1).min(coeffs.len());
            // x[t-k] for k in 0..m is rev[n-1-t+k]
            let start = n - 1 - t;
            dot(&coeffs[..m], &rev[start..start + m])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_preserves_values() {
        let s = Series::new(vec![1.0, -2.5, 1e-300, 3.0e12]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf, "y").unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("y\n"));
        let back = Series::read_csv(&buf[..], "y").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn missing_column_is_data_error() {
        let err = Series::read_csv("x\n1\n".as_bytes(), "y").unwrap_err();
        assert!(err.is_data_error());
    }

    #[test]
    fn empty_series_rejected() {
        assert!(Series::new(vec![]).is_err());
        assert!(Series::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn convolve_matches_naive() {
        let c = [1.0, 0.5, -0.25, 0.125];
        let x: Vec<f64> = (0..23).map(|i| (i as f64 * 0.7).sin()).collect();
        let out = causal_convolve(&c, &x);
        for t in 0..x.len() {
            let mut s = 0.0;
            for k in 0..=t.min(c.len() - 1) {
                s += c[k] * x[t - k];
            }
            assert!((out[t] - s).abs() < 1e-14);
        }
    }
}
