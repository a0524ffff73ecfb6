//! Time evolution and correlation functions on finite lattices.
//!
//! Two propagators are available: a dense [`SpectralFrame`] (full
//! diagonalization, `L ≤ 14`) and a matrix-free [`KrylovPropagator`].
//! Trace-type quantities `Tr(ρ e^{iHt} O e^{−iHt} X)` are evaluated exactly
//! in the energy eigenbasis, or estimated from random pure states.

mod correlation;
mod krylov;
mod spectral;

pub use correlation::{
    connected_correlator, correlation, kicked_evolution, typicality_correlation, TraceMode,
};
pub use krylov::KrylovPropagator;
pub use spectral::{EigenMatrix, SpectralFrame};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, DEFAULT_DENSE_LIMIT};
use crate::series::time_grid;
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FullDiagonalization,
    Krylov,
}

/// How to propagate states in time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionPlan {
    pub method: Method,
    pub dt: f64,
    pub t_max: f64,
    /// Largest Krylov subspace per step.
    pub krylov_dim: usize,
    /// Krylov error budget relative to the state norm, per unit of `|t|`.
    pub tolerance: f64,
}

impl Default for EvolutionPlan {
    fn default() -> Self {
        EvolutionPlan {
            method: Method::Krylov,
            dt: 0.05,
            t_max: 20.0,
            krylov_dim: 30,
            tolerance: 1e-12,
        }
    }
}

impl EvolutionPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.krylov_dim < 2 {
            return Err(Error::InvalidArgument(
                "krylov_dim must be at least 2".into(),
            ));
        }
        time_grid(self.dt, self.t_max).map(|_| ())
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        self.validate()?;
        time_grid(self.dt, self.t_max)
    }
}

/// Thermal state `ρ = e^{−βH}/Z`; `beta = 0` is infinite temperature.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub beta: f64,
}

impl ThermalSpec {
    pub fn infinite_temperature() -> Self {
        ThermalSpec { beta: 0.0 }
    }

    pub fn new(beta: f64) -> Result<Self> {
        let t = ThermalSpec { beta };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be finite and non-negative, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn is_infinite_temperature(&self) -> bool {
        self.beta == 0.0
    }
}

/// Either propagator behind one interface.
pub enum Propagator {
    Dense(SpectralFrame),
    Krylov(KrylovPropagator),
}

impl Propagator {
    pub fn new(h: &PauliSum, plan: &EvolutionPlan) -> Result<Self> {
        plan.validate()?;
        Ok(match plan.method {
            Method::FullDiagonalization => {
                Propagator::Dense(SpectralFrame::with_limit(h, DEFAULT_DENSE_LIMIT)?)
            }
            Method::Krylov => {
                Propagator::Krylov(KrylovPropagator::new(h, plan.krylov_dim, plan.tolerance)?)
            }
        })
    }

    /// `e^{−iHt} v`.
    pub fn propagate(&self, v: &StateVector, t: f64) -> Result<StateVector> {
        match self {
            Propagator::Dense(f) => f.evolve(v, t),
            Propagator::Krylov(k) => k.propagate(v, t),
        }
    }
}

/// `e^{−iHt} v` using the plan's method.
pub fn evolve_state(
    h: &PauliSum,
    v: &StateVector,
    t: f64,
    plan: &EvolutionPlan,
) -> Result<StateVector> {
    Propagator::new(h, plan)?.propagate(v, t)
}

/// States at every time of the plan's grid, stepping from one to the next.
pub fn evolve_trajectory(
    h: &PauliSum,
    v: &StateVector,
    plan: &EvolutionPlan,
) -> Result<Vec<StateVector>> {
    let prop = Propagator::new(h, plan)?;
    let times = plan.times()?;
    let mut out = Vec::with_capacity(times.len());
    let mut cur = v.clone();
    let mut last = 0.0;
    for t in times {
        if t != last {
            cur = prop.propagate(&cur, t - last)?;
            last = t;
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// `⟨v|op|v⟩`.
pub fn expectation(op: &PauliSum, v: &StateVector) -> Result<num_complex::Complex64> {
    v.inner(&op.matvec(v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build, SpinLaceSpec};
    use crate::pauli::Pauli;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn plan_validation() {
        assert!(EvolutionPlan::default().validate().is_ok());
        let bad = EvolutionPlan {
            dt: 0.0,
            ..EvolutionPlan::default()
        };
        assert!(bad.validate().is_err());
        let bad = EvolutionPlan {
            tolerance: -1.0,
            ..EvolutionPlan::default()
        };
        assert!(bad.validate().is_err());
        assert!(ThermalSpec::new(-0.5).is_err());
        assert!(ThermalSpec::new(f64::NAN).is_err());
        assert_eq!(EvolutionPlan::default().times().unwrap().len(), 401);
    }

    #[test]
    fn zero_time_is_identity() {
        let lace = build(&SpinLaceSpec::ordered(2, PI, [1.0, 2.0, 0.5])).unwrap();
        let v = StateVector::random(lace.n_sites(), 3);
        for method in [Method::FullDiagonalization, Method::Krylov] {
            let plan = EvolutionPlan {
                method,
                ..EvolutionPlan::default()
            };
            let out = evolve_state(&lace.hamiltonian, &v, 0.0, &plan).unwrap();
            assert!(out.max_abs_diff(&v) < 1e-15);
        }
    }

    #[test]
    fn diagonal_hamiltonian_only_adds_phase() {
        let lace = build(&SpinLaceSpec::ordered(2, 0.7, [0.0, 0.0, 0.0])).unwrap();
        let n = lace.n_sites();
        let idx = 0b1010010;
        let v = StateVector::basis(n, idx).unwrap();
        // energy from the node fields B·σ^z on the basis state
        let energy = lace.hamiltonian.matvec(&v).unwrap().amplitudes()[idx].re;
        let t = 3.3;
        for method in [Method::FullDiagonalization, Method::Krylov] {
            let plan = EvolutionPlan {
                method,
                ..EvolutionPlan::default()
            };
            let out = evolve_state(&lace.hamiltonian, &v, t, &plan).unwrap();
            let want = Complex64::from_polar(1.0, -energy * t);
            assert!((out.amplitudes()[idx] - want).norm() < 1e-12);
            assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let h = PauliSum::single(2, 0, Pauli::X, 1.0)
            .unwrap()
            .scaled(Complex64::new(0.0, 1.0));
        let v = StateVector::random(2, 0);
        for method in [Method::FullDiagonalization, Method::Krylov] {
            let plan = EvolutionPlan {
                method,
                ..EvolutionPlan::default()
            };
            assert!(matches!(
                evolve_state(&h, &v, 1.0, &plan),
                Err(Error::NotHermitian(_))
            ));
        }
    }

    #[test]
    fn dense_capacity_is_enforced() {
        let h = PauliSum::single(15, 0, Pauli::Z, 1.0).unwrap();
        let plan = EvolutionPlan {
            method: Method::FullDiagonalization,
            ..EvolutionPlan::default()
        };
        assert!(matches!(
            Propagator::new(&h, &plan),
            Err(Error::Capacity { limit: 14, .. })
        ));
    }

    #[test]
    fn trajectory_conserves_norm_energy_and_charge() {
        let lace = build(&SpinLaceSpec::ordered(2, PI, [1.0, 2.0, 0.5])).unwrap();
        let a = lace.symmetry(2).unwrap();
        let charge = a.adjoint().mul(&a).unwrap();
        let v = StateVector::random(lace.n_sites(), 11);
        let plan = EvolutionPlan {
            dt: 0.5,
            t_max: 20.0,
            ..EvolutionPlan::default()
        };
        let traj = evolve_trajectory(&lace.hamiltonian, &v, &plan).unwrap();
        let e0 = expectation(&lace.hamiltonian, &v).unwrap();
        let q0 = expectation(&charge, &v).unwrap();
        for s in &traj {
            assert!((s.norm() - 1.0).abs() < 1e-10);
            assert!((expectation(&lace.hamiltonian, s).unwrap() - e0).norm() < 1e-9);
            assert!((expectation(&charge, s).unwrap() - q0).norm() < 1e-9);
        }
    }
}
