//! Sampled correlators and their finite-time spectra, with CSV export.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance on time-step variation for a grid to count as uniform.
const UNIFORM_TOL: f64 = 1e-9;

/// `t_k = k·dt` for `k = 0..=round(t_max/dt)`.
pub fn time_grid(dt: f64, t_max: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "t_max must be non-negative, got {t_max}"
        )));
    }
    let steps = (t_max / dt).round() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

/// Complex samples `C(t)` on an increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Standard error per sample for stochastic estimates.
    pub std_err: Option<Vec<f64>>,
    pub label: String,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension {
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(TimeSeries {
            times,
            values,
            std_err: None,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Grid spacing, or an error when the grid is not uniform.
    pub fn uniform_step(&self) -> Result<f64> {
        if self.times.len() < 2 {
            return Err(Error::NonUniformGrid);
        }
        let dt = self.times[1] - self.times[0];
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= UNIFORM_TOL * dt.abs().max(1.0));
        if uniform {
            Ok(dt)
        } else {
            Err(Error::NonUniformGrid)
        }
    }

    /// Pointwise `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: Complex64, other: &TimeSeries, b: Complex64) -> Result<TimeSeries> {
        if self.times != other.times {
            return Err(Error::InvalidArgument("time grids differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        TimeSeries::new(self.times.clone(), values, self.label.clone())
    }

    pub fn max_abs_diff(&self, other: &TimeSeries) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Columns `t, re, im, abs` (plus `std_err` when present), preceded by
    /// `#`-prefixed header lines.
    pub fn to_csv(&self, header: &[(&str, String)]) -> String {
        let mut s = String::new();
        for (k, v) in header {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "# label={}", self.label);
        match &self.std_err {
            Some(_) => s.push_str("t,re,im,abs,std_err\n"),
            None => s.push_str("t,re,im,abs\n"),
        }
        for (i, (t, c)) in self.times.iter().zip(&self.values).enumerate() {
            let _ = write!(s, "{:.6},{:.15e},{:.15e},{:.15e}", t, c.re, c.im, c.norm());
            if let Some(se) = &self.std_err {
                let _ = write!(s, ",{:.15e}", se[i]);
            }
            s.push('\n');
        }
        s
    }
}

/// Finite-time transform `F(ω)` on a frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Length `T` of the time window the transform integrated over.
    pub window: f64,
}

impl Spectrum {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn grid_step(&self) -> f64 {
        if self.omegas.len() < 2 {
            0.0
        } else {
            self.omegas[1] - self.omegas[0]
        }
    }

    pub fn to_csv(&self, header: &[(&str, String)]) -> String {
        let mut s = String::new();
        for (k, v) in header {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "# window={}", self.window);
        s.push_str("omega,re,im,abs\n");
        for (w, f) in self.omegas.iter().zip(&self.values) {
            let _ = writeln!(
                s,
                "{:.12e},{:.15e},{:.15e},{:.15e}",
                w,
                f.re,
                f.im,
                f.norm()
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = time_grid(0.05, 20.0).unwrap();
        assert_eq!(g.len(), 401);
        assert!((g[400] - 20.0).abs() < 1e-12);
        assert!(time_grid(0.0, 1.0).is_err());
        assert!(time_grid(0.1, -1.0).is_err());
    }

    #[test]
    fn uniformity_check() {
        let ts = TimeSeries::new(vec![0.0, 0.1, 0.2], vec![Complex64::default(); 3], "x").unwrap();
        assert!((ts.uniform_step().unwrap() - 0.1).abs() < 1e-15);
        let bad = TimeSeries::new(vec![0.0, 0.1, 0.3], vec![Complex64::default(); 3], "x").unwrap();
        assert!(matches!(bad.uniform_step(), Err(Error::NonUniformGrid)));
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![Complex64::default(); 2], "x").is_err());
        assert!(TimeSeries::new(vec![0.0], vec![], "x").is_err());
    }

    #[test]
    fn csv_layout() {
        let ts = TimeSeries::new(vec![0.0, 0.5], vec![Complex64::new(1.0, 0.0); 2], "c").unwrap();
        let csv = ts.to_csv(&[("config_hash", "abc".into())]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# config_hash=abc");
        assert_eq!(lines[2], "t,re,im,abs");
        assert!(lines[3].starts_with("0.000000,1.0"));
    }
}
