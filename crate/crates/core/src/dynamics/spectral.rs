//! Full diagonalization and exact eigenbasis traces.

use ndarray::{s, Array2, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_sites, Error, Result};
use crate::linalg::{gemm_complex, gemm_real, herm_eigen, sym_eigen, Op};
use crate::pauli::{MatvecKernel, PauliSum, DEFAULT_DENSE_LIMIT};
use crate::state::StateVector;

/// Rows per block when summing over eigenstates.
const TRACE_BLOCK: usize = 256;

/// Matrix in the energy eigenbasis, real when both `H` and the operator are.
#[derive(Clone, Debug, PartialEq)]
pub enum EigenMatrix {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

impl EigenMatrix {
    pub fn dim(&self) -> usize {
        match self {
            EigenMatrix::Real(m) => m.nrows(),
            EigenMatrix::Complex(m) => m.nrows(),
        }
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        match self {
            EigenMatrix::Real(a) => Complex64::new(a[[m, n]], 0.0),
            EigenMatrix::Complex(a) => a[[m, n]],
        }
    }

    pub fn into_complex(self) -> Array2<Complex64> {
        match self {
            EigenMatrix::Real(a) => a.mapv(|v| Complex64::new(v, 0.0)),
            EigenMatrix::Complex(a) => a,
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|m| self.get(m, m)).collect()
    }

    /// Multiplies column `m` by `w[m]`.
    pub(crate) fn scale_columns(&mut self, w: &[f64]) {
        match self {
            EigenMatrix::Real(a) => {
                for mut row in a.rows_mut() {
                    row.iter_mut().zip(w).for_each(|(v, s)| *v *= s);
                }
            }
            EigenMatrix::Complex(a) => {
                for mut row in a.rows_mut() {
                    row.iter_mut().zip(w).for_each(|(v, s)| *v *= s);
                }
            }
        }
    }

    /// Replaces entry `(n, m)` by `entry · f(n, m)`.
    pub(crate) fn scale_entries(&mut self, f: impl Fn(usize, usize) -> f64) {
        match self {
            EigenMatrix::Real(a) => a.indexed_iter_mut().for_each(|((n, m), v)| *v *= f(n, m)),
            EigenMatrix::Complex(a) => a.indexed_iter_mut().for_each(|((n, m), v)| *v *= f(n, m)),
        }
    }
}

enum Basis {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

/// Eigen-decomposition `H = Σ_m E_m |m⟩⟨m|` of a dense Hamiltonian.
pub struct SpectralFrame {
    n_sites: usize,
    energies: Vec<f64>,
    /// Row `m` holds `|m⟩` in the computational basis.
    basis: Basis,
}

impl SpectralFrame {
    pub fn new(h: &PauliSum) -> Result<Self> {
        SpectralFrame::with_limit(h, DEFAULT_DENSE_LIMIT)
    }

    pub fn with_limit(h: &PauliSum, dense_limit: usize) -> Result<Self> {
        if !h.is_hermitian(1e-12) {
            return Err(Error::NotHermitian(h.max_imag()));
        }
        let (energies, basis) = if h.has_real_matrix() {
            let (e, v) = sym_eigen(h.to_real_matrix(dense_limit)?)?;
            (e, Basis::Real(v))
        } else {
            let (e, v) = herm_eigen(h.to_matrix(dense_limit)?)?;
            (e, Basis::Complex(v))
        };
        Ok(SpectralFrame {
            n_sites: h.n_sites(),
            energies,
            basis,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Ascending eigenvalues.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn is_real(&self) -> bool {
        matches!(self.basis, Basis::Real(_))
    }

    /// Amplitudes of eigenvector `m` in the computational basis.
    pub fn eigenvector(&self, m: usize) -> StateVector {
        let amps = match &self.basis {
            Basis::Real(v) => v.row(m).iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Basis::Complex(v) => v.row(m).to_vec(),
        };
        StateVector::from_amplitudes_unchecked(self.n_sites, amps)
    }

    /// `e^{−iHt} v`.
    pub fn evolve(&self, v: &StateVector, t: f64) -> Result<StateVector> {
        check_sites(self.n_sites, v.n_sites())?;
        let amps = v.amplitudes();
        let mut out = vec![Complex64::default(); self.dim()];
        match &self.basis {
            Basis::Real(b) => {
                for (row, &e) in b.rows().into_iter().zip(&self.energies) {
                    let c: Complex64 = row.iter().zip(amps).map(|(x, a)| a * x).sum();
                    let c = c * Complex64::from_polar(1.0, -e * t);
                    out.iter_mut().zip(row).for_each(|(o, x)| *o += c * x);
                }
            }
            Basis::Complex(b) => {
                for (row, &e) in b.rows().into_iter().zip(&self.energies) {
                    let c: Complex64 = row.iter().zip(amps).map(|(x, a)| x.conj() * a).sum();
                    let c = c * Complex64::from_polar(1.0, -e * t);
                    out.iter_mut().zip(row).for_each(|(o, x)| *o += c * x);
                }
            }
        }
        Ok(StateVector::from_amplitudes_unchecked(self.n_sites, out))
    }

    /// `e^{−β(E_m − E_0)} / Z`.
    pub fn thermal_weights(&self, beta: f64) -> Vec<f64> {
        let e0 = self.energies.first().copied().unwrap_or(0.0);
        let w: Vec<f64> = self
            .energies
            .iter()
            .map(|e| (-beta * (e - e0)).exp())
            .collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    /// `⟨m|op|n⟩` for all pairs.
    pub fn matrix_elements(&self, op: &PauliSum) -> Result<EigenMatrix> {
        check_sites(self.n_sites, op.n_sites())?;
        let kernel = MatvecKernel::new(op);
        let n = self.dim();
        match &self.basis {
            Basis::Real(b) if op.has_real_matrix() => {
                let mut applied = Array2::<f64>::zeros((n, n));
                rows_apply(b, &mut applied, |x, y| kernel.apply_real(x, y));
                Ok(EigenMatrix::Real(gemm_real(
                    b,
                    Op::None,
                    &applied,
                    Op::Trans,
                )))
            }
            Basis::Real(b) => {
                let mut applied = Array2::<Complex64>::zeros((n, n));
                let src = b.mapv(|x| Complex64::new(x, 0.0));
                rows_apply(&src, &mut applied, |x, y| kernel.apply(x, y));
                drop(src);
                let re = gemm_real(b, Op::None, &applied.mapv(|v| v.re), Op::Trans);
                let im = gemm_real(b, Op::None, &applied.mapv(|v| v.im), Op::Trans);
                Ok(EigenMatrix::Complex(
                    Zip::from(&re)
                        .and(&im)
                        .map_collect(|&r, &i| Complex64::new(r, i)),
                ))
            }
            Basis::Complex(b) => {
                let mut applied = Array2::<Complex64>::zeros((n, n));
                rows_apply(b, &mut applied, |x, y| kernel.apply(x, y));
                // ⟨m|O|n⟩ = conj(Σ_i b[m,i] · conj(applied[n,i]))
                let m = gemm_complex(b, Op::None, &applied, Op::ConjTrans);
                Ok(EigenMatrix::Complex(m.mapv(|v| v.conj())))
            }
        }
    }

    /// `⟨op⟩ = Σ_m ρ_m ⟨m|op|m⟩` in the thermal state.
    pub fn expectation(&self, op: &PauliSum, beta: f64) -> Result<Complex64> {
        check_sites(self.n_sites, op.n_sites())?;
        let rho = self.thermal_weights(beta);
        let mut acc = Complex64::default();
        for (m, w) in rho.iter().enumerate() {
            let v = self.eigenvector(m);
            acc += *w * v.inner(&op.matvec(&v)?)?;
        }
        Ok(acc)
    }

    /// `Σ_{mn} e^{i(E_m − E_n)t} o[m,n] x[n,m]` at each time, which is
    /// `Tr(e^{iHt} O e^{−iHt} X)` for eigenbasis matrices `o`, `x`.
    pub fn trace_series(
        &self,
        o: &EigenMatrix,
        x: &EigenMatrix,
        times: &[f64],
    ) -> Result<Vec<Complex64>> {
        let n = self.dim();
        if o.dim() != n || x.dim() != n {
            return Err(Error::Dimension {
                expected: n,
                found: if o.dim() != n { o.dim() } else { x.dim() },
            });
        }
        let k = times.len();
        let mut out = vec![Complex64::default(); k];
        if k == 0 {
            return Ok(out);
        }
        let cos = Array2::from_shape_fn((n, k), |(i, j)| (self.energies[i] * times[j]).cos());
        let sin = Array2::from_shape_fn((n, k), |(i, j)| (self.energies[i] * times[j]).sin());
        let phases = match (o, x) {
            (EigenMatrix::Real(_), EigenMatrix::Real(_)) => None,
            _ => Some(
                Zip::from(&cos)
                    .and(&sin)
                    .map_collect(|&c, &s| Complex64::new(c, -s)),
            ),
        };
        for start in (0..n).step_by(TRACE_BLOCK) {
            let end = (start + TRACE_BLOCK).min(n);
            // rows m in block, partial sums over n: Σ_n w[m,n] e^{−iE_n t_k}
            let partial: Array2<Complex64> = match (o, x, &phases) {
                (EigenMatrix::Real(oa), EigenMatrix::Real(xa), _) => {
                    let mut w = oa.slice(s![start..end, ..]).to_owned();
                    Zip::from(&mut w)
                        .and(xa.slice(s![.., start..end]).t())
                        .for_each(|a, &b| *a *= b);
                    let re = gemm_real(&w, Op::None, &cos, Op::None);
                    let im = gemm_real(&w, Op::None, &sin, Op::None);
                    Zip::from(&re)
                        .and(&im)
                        .map_collect(|&r, &i| Complex64::new(r, -i))
                }
                (_, _, Some(ph)) => {
                    let mut w = Array2::<Complex64>::zeros((end - start, n));
                    for (r, mut row) in w.rows_mut().into_iter().enumerate() {
                        let m = start + r;
                        for (c, slot) in row.iter_mut().enumerate() {
                            *slot = o.get(m, c) * x.get(c, m);
                        }
                    }
                    gemm_complex(&w, Op::None, ph, Op::None)
                }
                _ => unreachable!("phases exist for complex inputs"),
            };
            for (r, row) in partial.rows().into_iter().enumerate() {
                let e = self.energies[start + r];
                for (j, (slot, p)) in out.iter_mut().zip(row).enumerate() {
                    *slot += Complex64::from_polar(1.0, e * times[j]) * p;
                }
            }
        }
        Ok(out)
    }
}

/// Applies a row operation to each row of `src`, writing the matching row of `dst`.
fn rows_apply<T: Send + Sync>(
    src: &Array2<T>,
    dst: &mut Array2<T>,
    f: impl Fn(&[T], &mut [T]) + Sync,
) {
    let n = src.ncols();
    let src = src.as_slice().expect("standard layout");
    let dst = dst.as_slice_mut().expect("standard layout");
    dst.par_chunks_mut(n)
        .zip(src.par_chunks(n))
        .for_each(|(d, s)| f(s, d));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build, SpinLaceSpec};
    use crate::pauli::Pauli;
    use std::f64::consts::PI;

    fn dense_expm_apply(h: &Array2<Complex64>, v: &[Complex64], t: f64) -> Vec<Complex64> {
        // Taylor series with scaling and squaring on the vector
        let steps = 200;
        let dt = t / steps as f64;
        let mut cur = v.to_vec();
        for _ in 0..steps {
            let mut term = cur.clone();
            let mut acc = cur.clone();
            for k in 1..30 {
                let next: Vec<Complex64> = (0..term.len())
                    .map(|i| {
                        (0..term.len())
                            .map(|j| h[[i, j]] * term[j])
                            .sum::<Complex64>()
                            * Complex64::new(0.0, -dt / k as f64)
                    })
                    .collect();
                acc.iter_mut().zip(&next).for_each(|(a, b)| *a += b);
                term = next;
            }
            cur = acc;
        }
        cur
    }

    #[test]
    fn spectral_evolution_matches_taylor_oracle() {
        // complex matrix through a Y field
        let mut h = PauliSum::single(3, 0, Pauli::Y, 0.7).unwrap();
        h = h
            .add(&PauliSum::from_text("0.4 0 XZY\n1.1 0 ZZI", Some(3)).unwrap())
            .unwrap();
        let frame = SpectralFrame::new(&h).unwrap();
        assert!(!frame.is_real());
        let v = StateVector::random(3, 5);
        let got = frame.evolve(&v, 2.5).unwrap();
        let want = dense_expm_apply(&h.to_matrix(3).unwrap(), v.amplitudes(), 2.5);
        for (a, b) in got.amplitudes().iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matrix_elements_real_and_complex_paths_agree() {
        let lace = build(&SpinLaceSpec::ordered(2, PI, [1.0, 2.0, 0.5])).unwrap();
        let frame = SpectralFrame::new(&lace.hamiltonian).unwrap();
        assert!(frame.is_real());
        let a = lace.symmetry(2).unwrap();
        let y = PauliSum::single(lace.n_sites(), 0, Pauli::Y, 1.0).unwrap();
        for op in [a, y] {
            let me = frame.matrix_elements(&op).unwrap();
            for (m, n) in [(0, 0), (3, 17), (100, 5), (127, 126)] {
                let vm = frame.eigenvector(m);
                let vn = frame.eigenvector(n);
                let want = vm.inner(&op.matvec(&vn).unwrap()).unwrap();
                assert!((me.get(m, n) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_series_at_zero_is_plain_trace() {
        let lace = build(&SpinLaceSpec::ordered(2, PI, [1.0, 2.0, 0.5])).unwrap();
        let frame = SpectralFrame::new(&lace.hamiltonian).unwrap();
        let sx = PauliSum::single(lace.n_sites(), 3, Pauli::X, 1.0).unwrap();
        let o = frame.matrix_elements(&sx).unwrap();
        let c = frame.trace_series(&o, &o, &[0.0, 1.0]).unwrap();
        // Tr(σ^x σ^x) = 2^L
        assert!((c[0] - Complex64::new(frame.dim() as f64, 0.0)).norm() < 1e-9);
        let oc = EigenMatrix::Complex(o.clone().into_complex());
        let c2 = frame.trace_series(&oc, &o, &[0.0, 1.0]).unwrap();
        assert!((c[1] - c2[1]).norm() < 1e-9);
    }

    #[test]
    fn thermal_weights_normalized() {
        let h = PauliSum::single(2, 1, Pauli::Z, 1.0).unwrap();
        let frame = SpectralFrame::new(&h).unwrap();
        let w = frame.thermal_weights(0.0);
        assert!(w.iter().all(|x| (x - 0.25).abs() < 1e-15));
        let w = frame.thermal_weights(2.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((w[0] / w[3] - (4.0f64).exp()).abs() < 1e-9);
    }
}
