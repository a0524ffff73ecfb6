//! Thermal correlators `Tr(ρ O(t) B)` and kicked responses.

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectral::{EigenMatrix, SpectralFrame};
use super::{EvolutionPlan, Propagator, ThermalSpec};
use crate::error::{check_sites, Error, Result};
use crate::linalg::{gemm_complex, herm_eigen, Op};
use crate::pauli::PauliSum;
use crate::series::TimeSeries;
use crate::state::StateVector;

/// How the trace over the Hilbert space is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TraceMode {
    /// Exact sum in the energy eigenbasis.
    ExactTrace,
    /// Average over `n_samples` Haar-like random states.
    Typicality { n_samples: usize, seed: u64 },
}

impl SpectralFrame {
    /// `Tr(ρ e^{iHt} O e^{−iHt} B)`.
    pub fn correlation(
        &self,
        o: &PauliSum,
        b: &PauliSum,
        times: &[f64],
        thermal: &ThermalSpec,
    ) -> Result<TimeSeries> {
        thermal.validate()?;
        let oe = self.matrix_elements(o)?;
        let mut x = self.matrix_elements(b)?;
        x.scale_columns(&self.thermal_weights(thermal.beta));
        let values = self.trace_series(&oe, &x, times)?;
        TimeSeries::new(times.to_vec(), values, "correlation")
    }

    /// `Tr(ρ O(t) B) − ⟨O⟩⟨B⟩`.
    pub fn connected_correlation(
        &self,
        o: &PauliSum,
        b: &PauliSum,
        times: &[f64],
        thermal: &ThermalSpec,
    ) -> Result<TimeSeries> {
        thermal.validate()?;
        let rho = self.thermal_weights(thermal.beta);
        let oe = self.matrix_elements(o)?;
        let mut x = self.matrix_elements(b)?;
        let mean = |m: &EigenMatrix| -> Complex64 {
            m.diagonal().iter().zip(&rho).map(|(d, w)| d * w).sum()
        };
        let offset = mean(&oe) * mean(&x);
        x.scale_columns(&rho);
        let values = self
            .trace_series(&oe, &x, times)?
            .into_iter()
            .map(|c| c - offset)
            .collect();
        TimeSeries::new(times.to_vec(), values, "connected_correlation")
    }

    /// `−i Tr(ρ [O(t), V])`, the linear response of `O` to a kick `ε δ(t) V`.
    pub fn linear_response(
        &self,
        o: &PauliSum,
        v: &PauliSum,
        times: &[f64],
        thermal: &ThermalSpec,
    ) -> Result<TimeSeries> {
        thermal.validate()?;
        let rho = self.thermal_weights(thermal.beta);
        let oe = self.matrix_elements(o)?;
        // Tr(ρ[O(t), V]) = Tr(O(t) [V, ρ]); [V, ρ]_{nm} = V_{nm}(ρ_m − ρ_n)
        let mut x = self.matrix_elements(v)?;
        x.scale_entries(|n, m| rho[m] - rho[n]);
        let values = self
            .trace_series(&oe, &x, times)?
            .into_iter()
            .map(|c| Complex64::new(0.0, -1.0) * c)
            .collect();
        TimeSeries::new(times.to_vec(), values, "linear_response")
    }

    /// `(⟨O(t)⟩_kicked − ⟨O⟩) / ε` after applying `e^{−iεV}` to the thermal
    /// state at `t = 0`.
    pub fn kicked_response(
        &self,
        o: &PauliSum,
        v: &PauliSum,
        eps: f64,
        times: &[f64],
        thermal: &ThermalSpec,
    ) -> Result<TimeSeries> {
        thermal.validate()?;
        if eps == 0.0 || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kick strength must be nonzero, got {eps}"
            )));
        }
        let rho = self.thermal_weights(thermal.beta);
        let oe = self.matrix_elements(o)?;
        let ve = self.matrix_elements(v)?.into_complex();
        let (lam, q) = herm_eigen(ve)?;
        // U = Q^T diag(e^{−iελ}) conj(Q) with eigenvectors as rows of Q
        let mut right = q.mapv(|z| z.conj());
        for (mut row, l) in right.rows_mut().into_iter().zip(&lam) {
            let ph = Complex64::from_polar(1.0, -eps * l);
            row.iter_mut().for_each(|z| *z *= ph);
        }
        let u = gemm_complex(&q, Op::Trans, &right, Op::None);
        drop(right);
        let mut u_rho = u.clone();
        for mut row in u_rho.rows_mut() {
            row.iter_mut().zip(&rho).for_each(|(z, w)| *z *= w);
        }
        let mut x: Array2<Complex64> = gemm_complex(&u_rho, Op::None, &u, Op::ConjTrans);
        for (m, w) in rho.iter().enumerate() {
            x[[m, m]] -= w;
        }
        let values = self
            .trace_series(&oe, &EigenMatrix::Complex(x), times)?
            .into_iter()
            .map(|c| c / eps)
            .collect();
        TimeSeries::new(times.to_vec(), values, "kicked_response")
    }
}

/// `Tr(ρ e^{iHt} O e^{−iHt} B)` with `ρ = e^{−βH}/Z`.
///
/// Typicality runs at infinite temperature only and propagates with a
/// default Krylov plan.
pub fn correlation(
    h: &PauliSum,
    o: &PauliSum,
    b: &PauliSum,
    times: &[f64],
    thermal: &ThermalSpec,
    mode: &TraceMode,
) -> Result<TimeSeries> {
    check_sites(h.n_sites(), o.n_sites())?;
    check_sites(h.n_sites(), b.n_sites())?;
    match mode {
        TraceMode::ExactTrace => SpectralFrame::new(h)?.correlation(o, b, times, thermal),
        TraceMode::Typicality { n_samples, seed } => {
            let prop = Propagator::new(h, &EvolutionPlan::default())?;
            typicality_correlation(&prop, o, b, times, thermal, *n_samples, *seed)
        }
    }
}

/// Random-state estimate of `Tr(O(t) B) / 2^L`.
///
/// Sample `i` draws a normalized complex Gaussian state from the ChaCha8
/// stream `i` of `seed`, so results do not depend on the thread count. The
/// reported error is the standard error of the sample mean.
pub fn typicality_correlation(
    prop: &Propagator,
    o: &PauliSum,
    b: &PauliSum,
    times: &[f64],
    thermal: &ThermalSpec,
    n_samples: usize,
    seed: u64,
) -> Result<TimeSeries> {
    thermal.validate()?;
    if !thermal.is_infinite_temperature() {
        return Err(Error::InvalidArgument(
            "typicality supports beta = 0 only; use the exact trace for beta > 0".into(),
        ));
    }
    if n_samples < 1 {
        return Err(Error::InvalidArgument(
            "n_samples must be at least 1".into(),
        ));
    }
    check_sites(o.n_sites(), b.n_sites())?;
    // validate the grid before spending time on samples
    TimeSeries::new(times.to_vec(), vec![Complex64::default(); times.len()], "")?;
    let n_sites = o.n_sites();
    let samples: Vec<Vec<Complex64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let psi = StateVector::random_with(n_sites, &mut rng);
            let phi = b.matvec(&psi)?;
            sample_series(prop, o, psi, phi, times)
        })
        .collect::<Result<_>>()?;
    let n = n_samples as f64;
    let mut values = Vec::with_capacity(times.len());
    let mut errs = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let mean: Complex64 = samples.iter().map(|s| s[k]).sum::<Complex64>() / n;
        let se = if n_samples > 1 {
            let var = samples
                .iter()
                .map(|s| (s[k] - mean).norm_sqr())
                .sum::<f64>()
                / (n - 1.0);
            (var / n).sqrt()
        } else {
            f64::NAN
        };
        values.push(mean);
        errs.push(se);
    }
    let mut ts = TimeSeries::new(times.to_vec(), values, "correlation")?;
    ts.std_err = Some(errs);
    Ok(ts)
}

fn sample_series(
    prop: &Propagator,
    o: &PauliSum,
    mut psi: StateVector,
    mut phi: StateVector,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut last = 0.0;
    for &t in times {
        if t != last {
            psi = prop.propagate(&psi, t - last)?;
            phi = prop.propagate(&phi, t - last)?;
            last = t;
        }
        out.push(psi.inner(&o.matvec(&phi)?)?);
    }
    Ok(out)
}

/// `(⟨O(t)⟩_kicked − ⟨O⟩) / ε` for the kick `e^{−iεV}` at `t = 0`; exact.
pub fn kicked_evolution(
    h: &PauliSum,
    v: &PauliSum,
    eps: f64,
    o: &PauliSum,
    times: &[f64],
    thermal: &ThermalSpec,
) -> Result<TimeSeries> {
    check_sites(h.n_sites(), v.n_sites())?;
    check_sites(h.n_sites(), o.n_sites())?;
    SpectralFrame::new(h)?.kicked_response(o, v, eps, times, thermal)
}

/// `Tr(ρ O_p(t) O_q) − ⟨O_p⟩⟨O_q⟩`; exact.
pub fn connected_correlator(
    h: &PauliSum,
    op: &PauliSum,
    oq: &PauliSum,
    times: &[f64],
    thermal: &ThermalSpec,
) -> Result<TimeSeries> {
    check_sites(h.n_sites(), op.n_sites())?;
    check_sites(h.n_sites(), oq.n_sites())?;
    SpectralFrame::new(h)?.connected_correlation(op, oq, times, thermal)
}
