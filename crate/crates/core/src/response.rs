//! Linear response, finite-time Fourier transforms and peak finding.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{SpectralFrame, ThermalSpec};
use crate::error::{check_sites, Error, Result};
use crate::pauli::PauliSum;
use crate::series::{Spectrum, TimeSeries};

/// Peaks must exceed this multiple of the median `|F|`.
pub const NOISE_FLOOR_FACTOR: f64 = 5.0;

/// `−i ⟨[O(t), V]⟩` in the thermal state; exact.
pub fn linear_response(
    h: &PauliSum,
    o: &PauliSum,
    v: &PauliSum,
    times: &[f64],
    thermal: &ThermalSpec,
) -> Result<TimeSeries> {
    check_sites(h.n_sites(), o.n_sites())?;
    check_sites(h.n_sites(), v.n_sites())?;
    SpectralFrame::new(h)?.linear_response(o, v, times, thermal)
}

/// Uniform grid from 0 to at least `omega_max` with spacing `2π / (4T)`.
pub fn omega_grid(window: f64, omega_max: f64) -> Result<Vec<f64>> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "window must be positive, got {window}"
        )));
    }
    if !(omega_max >= 0.0) || !omega_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "omega_max must be non-negative, got {omega_max}"
        )));
    }
    let step = 2.0 * PI / (4.0 * window);
    let n = (omega_max / step - 1e-9).ceil().max(0.0) as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}

/// `F(ω) = (1/T) ∫ e^{iωt} C(t) dt` over the series' window by the
/// trapezoidal rule.
pub fn finite_time_ft(series: &TimeSeries, omegas: &[f64]) -> Result<Spectrum> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let dt = series.uniform_step()?;
    let t0 = series.times[0];
    let window = series.times[series.len() - 1] - t0;
    let last = series.len() - 1;
    let values = omegas
        .par_iter()
        .map(|&w| {
            let mut acc = Complex64::default();
            for (k, (t, c)) in series.times.iter().zip(&series.values).enumerate() {
                let weight = if k == 0 || k == last { 0.5 } else { 1.0 };
                acc += Complex64::from_polar(weight, w * t) * c;
            }
            acc * dt / window
        })
        .collect();
    Ok(Spectrum {
        omegas: omegas.to_vec(),
        values,
        window,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
    /// Half width at half maximum, linearly interpolated.
    pub half_width: f64,
}

/// Peaks of `|F|` sorted by height, with the predicted-frequency marker.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub predicted: f64,
    pub grid_step: f64,
    pub noise_floor: f64,
}

impl PeakReport {
    /// Some reported peak lies within one grid spacing of the prediction.
    pub fn matches_predicted(&self) -> bool {
        self.peaks.iter().any(|p| self.near(p.omega))
    }

    /// The tallest reported peak lies within one grid spacing of the prediction.
    pub fn dominant_matches(&self) -> bool {
        self.peaks.first().is_some_and(|p| self.near(p.omega))
    }

    fn near(&self, omega: f64) -> bool {
        (omega - self.predicted).abs() <= self.grid_step * (1.0 + 1e-9)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "predicted = {:.9}", self.predicted);
        let _ = writeln!(s, "grid_step = {:.9}", self.grid_step);
        let _ = writeln!(s, "noise_floor = {:.9e}", self.noise_floor);
        let _ = writeln!(s, "matches_predicted = {}", self.matches_predicted());
        let _ = writeln!(s, "dominant_matches = {}", self.dominant_matches());
        let _ = writeln!(s, "peaks = {}", self.peaks.len());
        for (i, p) in self.peaks.iter().enumerate() {
            let _ = writeln!(
                s,
                "peak {}: omega = {:.9} height = {:.9e} half_width = {:.6}",
                i + 1,
                p.omega,
                p.height,
                p.half_width
            );
        }
        s
    }
}

/// Local maxima of `|F|` above `5 × median |F|`.
///
/// A maximum at distance `Δ` from a taller reported peak of height `H` is
/// treated as that peak's finite-window sidelobe, and dropped, when its
/// height is at most `H · min(1, 2 / (T|Δ|))`, the envelope of the
/// rectangular-window kernel.
pub fn peak_report(spec: &Spectrum, predicted: f64) -> PeakReport {
    let mags = spec.magnitudes();
    let noise_floor = NOISE_FLOOR_FACTOR * median(&mags);
    let n = mags.len();
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || mags[i] > mags[i - 1];
            let right = i + 1 == n || mags[i] >= mags[i + 1];
            n > 1 && left && right && mags[i] > noise_floor
        })
        .collect();
    candidates.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in candidates {
        let sidelobe = kept.iter().any(|&j| {
            let delta = (spec.omegas[i] - spec.omegas[j]).abs();
            let envelope = if delta > 0.0 {
                (2.0 / (spec.window * delta)).min(1.0)
            } else {
                1.0
            };
            mags[i] <= mags[j] * envelope
        });
        if !sidelobe {
            kept.push(i);
        }
    }
    let peaks = kept
        .into_iter()
        .map(|i| Peak {
            omega: spec.omegas[i],
            height: mags[i],
            half_width: half_width(&spec.omegas, &mags, i),
        })
        .collect();
    PeakReport {
        peaks,
        predicted,
        grid_step: spec.grid_step(),
        noise_floor,
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn half_width(omegas: &[f64], mags: &[f64], i: usize) -> f64 {
    let half = 0.5 * mags[i];
    let crossing = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
        for j in range {
            if mags[j] < half {
                let k = (j as isize - step) as usize;
                let f = (mags[k] - half) / (mags[k] - mags[j]);
                return Some((omegas[k] + f * (omegas[j] - omegas[k]) - omegas[i]).abs());
            }
        }
        None
    };
    let left = crossing(&mut (0..i).rev(), -1);
    let right = crossing(&mut (i + 1..mags.len()), 1);
    match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(w), None) | (None, Some(w)) => w,
        (None, None) => {
            let span =
                omegas.last().copied().unwrap_or(0.0) - omegas.first().copied().unwrap_or(0.0);
            0.5 * span
        }
    }
}
