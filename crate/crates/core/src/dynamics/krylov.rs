//! Lanczos propagation with adaptive sub-stepping.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{check_sites, Error, Result};
use crate::linalg::sym_eigen;
use crate::pauli::{MatvecKernel, PauliSum};
use crate::state::StateVector;

/// Substep halvings before giving up on a step.
const MAX_HALVINGS: usize = 60;

/// Matrix-free `e^{−iHt} v` via a Lanczos basis of at most `max_dim` vectors.
///
/// Each substep `τ` is accepted when the a-posteriori estimate
/// `‖v‖ · β_m · |[e^{−iT_m τ} e_1]_m|` stays below `tolerance · ‖v‖ · |τ/t|`,
/// so the accumulated error over `t` is bounded by about `tolerance · ‖v‖`.
pub struct KrylovPropagator {
    n_sites: usize,
    kernel: MatvecKernel,
    max_dim: usize,
    tolerance: f64,
}

struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    /// Off-diagonals; `beta[j]` couples `j` and `j + 1`. One extra entry
    /// holds the residual norm when the basis did not close.
    beta: Vec<f64>,
    closed: bool,
}

impl KrylovPropagator {
    pub fn new(h: &PauliSum, max_dim: usize, tolerance: f64) -> Result<Self> {
        if !h.is_hermitian(1e-12) {
            return Err(Error::NotHermitian(h.max_imag()));
        }
        if max_dim < 2 {
            return Err(Error::InvalidArgument(
                "krylov dimension must be at least 2".into(),
            ));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(KrylovPropagator {
            n_sites: h.n_sites(),
            kernel: MatvecKernel::new(h),
            max_dim,
            tolerance,
        })
    }

    pub fn propagate(&self, v: &StateVector, t: f64) -> Result<StateVector> {
        check_sites(self.n_sites, v.n_sites())?;
        let amps = self.propagate_amps(v.amplitudes(), t)?;
        Ok(StateVector::from_amplitudes_unchecked(self.n_sites, amps))
    }

    fn propagate_amps(&self, v: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let mut cur = v.to_vec();
        let norm0 = norm(&cur);
        if t == 0.0 || norm0 == 0.0 {
            return Ok(cur);
        }
        let mut done = 0.0f64;
        let mut tau = t;
        while (t - done).abs() > 1e-14 * t.abs() {
            let remaining = t - done;
            if tau.abs() > remaining.abs() {
                tau = remaining;
            }
            let beta0 = norm(&cur);
            let lz = self.lanczos(&cur, beta0);
            let (vals, vecs) = tridiagonal_eigen(&lz)?;
            let m = lz.alpha.len();
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let y = small_exp(&vals, &vecs, m, tau);
                let err = if lz.closed {
                    0.0
                } else {
                    beta0 * lz.beta[m - 1] * y[m - 1].norm()
                };
                // below roundoff the estimate stops shrinking with τ
                let budget =
                    (self.tolerance * norm0 * (tau / t).abs()).max(64.0 * f64::EPSILON * beta0);
                if err <= budget {
                    accepted = Some(y);
                    break;
                }
                tau *= 0.5;
            }
            let y = accepted.ok_or_else(|| {
                Error::InvalidArgument("krylov step failed to meet tolerance".into())
            })?;
            let mut next = vec![Complex64::default(); cur.len()];
            for (q, c) in lz.basis.iter().zip(&y) {
                let c = c * beta0;
                next.iter_mut().zip(q).for_each(|(o, x)| *o += c * x);
            }
            cur = next;
            done += tau;
            // try a slightly longer step next time
            tau *= 1.5;
        }
        Ok(cur)
    }

    fn lanczos(&self, v: &[Complex64], beta0: f64) -> Lanczos {
        let dim = v.len();
        let m_max = self.max_dim.min(dim);
        let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta0).collect()];
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        let mut w = vec![Complex64::default(); dim];
        loop {
            let j = basis.len() - 1;
            self.kernel.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalization, two passes
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            let scale = alpha.iter().map(|x| x.abs()).fold(0.0, f64::max)
                + beta.iter().copied().fold(0.0, f64::max);
            if b <= 1e-13 * scale.max(1e-300) || dim == basis.len() {
                return Lanczos {
                    basis,
                    alpha,
                    beta,
                    closed: true,
                };
            }
            beta.push(b);
            if basis.len() == m_max {
                return Lanczos {
                    basis,
                    alpha,
                    beta,
                    closed: false,
                };
            }
            basis.push(w.iter().map(|x| x / b).collect());
        }
    }
}

fn tridiagonal_eigen(lz: &Lanczos) -> Result<(Vec<f64>, Array2<f64>)> {
    let m = lz.alpha.len();
    let mut t = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        t[[i, i]] = lz.alpha[i];
        if i + 1 < m {
            t[[i, i + 1]] = lz.beta[i];
            t[[i + 1, i]] = lz.beta[i];
        }
    }
    sym_eigen(t)
}

/// `e^{−iTτ} e_1` from the eigenpairs of `T` (eigenvectors as rows).
fn small_exp(vals: &[f64], vecs: &Array2<f64>, m: usize, tau: f64) -> Vec<Complex64> {
    let mut y = vec![Complex64::default(); m];
    for (j, &l) in vals.iter().enumerate() {
        let c = Complex64::from_polar(vecs[[j, 0]], -l * tau);
        for (k, slot) in y.iter_mut().enumerate() {
            *slot += c * vecs[[j, k]];
        }
    }
    y
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SpectralFrame;
    use crate::pauli::Pauli;

    #[test]
    fn single_spin_precession() {
        let h = PauliSum::single(1, 0, Pauli::X, 0.9).unwrap();
        let k = KrylovPropagator::new(&h, 4, 1e-13).unwrap();
        let v = StateVector::basis(1, 0).unwrap();
        let out = k.propagate(&v, 1.7).unwrap();
        // e^{−iθX}|0⟩ = cos θ |0⟩ − i sin θ |1⟩
        let th: f64 = 0.9 * 1.7;
        assert!((out.amplitudes()[0] - Complex64::new(th.cos(), 0.0)).norm() < 1e-13);
        assert!((out.amplitudes()[1] - Complex64::new(0.0, -th.sin())).norm() < 1e-13);
    }

    #[test]
    fn small_subspace_forces_substeps() {
        let text = "1.0 0 XXII\n0.7 0 IYYI\n0.3 0 IIZZ\n0.5 0 ZIII\n0.9 0 IXIX";
        let h = PauliSum::from_text(text, Some(4)).unwrap();
        let v = StateVector::random(4, 9);
        let exact = SpectralFrame::new(&h).unwrap().evolve(&v, 6.0).unwrap();
        for m in [5, 8, 16] {
            let k = KrylovPropagator::new(&h, m, 1e-12).unwrap();
            let out = k.propagate(&v, 6.0).unwrap();
            assert!(out.max_abs_diff(&exact) < 1e-10, "m = {m}");
            let back = k.propagate(&out, -6.0).unwrap();
            assert!(back.max_abs_diff(&v) < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let h = PauliSum::single(1, 0, Pauli::X, 1.0).unwrap();
        assert!(KrylovPropagator::new(&h, 1, 1e-10).is_err());
        assert!(KrylovPropagator::new(&h, 5, 0.0).is_err());
        let k = KrylovPropagator::new(&h, 5, 1e-10).unwrap();
        assert!(k.propagate(&StateVector::zeros(2), 1.0).is_err());
    }
}
