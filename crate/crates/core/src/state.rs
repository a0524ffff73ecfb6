use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Amplitudes over the `2^L` computational basis (site 0 = most significant bit).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(n_sites: usize, amps: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << n_sites;
        if amps.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(StateVector { n_sites, amps })
    }

    pub(crate) fn from_amplitudes_unchecked(n_sites: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1usize << n_sites);
        StateVector { n_sites, amps }
    }

    pub fn zeros(n_sites: usize) -> Self {
        StateVector {
            n_sites,
            amps: vec![Complex64::default(); 1usize << n_sites],
        }
    }

    pub fn basis(n_sites: usize, index: usize) -> Result<Self> {
        let mut v = StateVector::zeros(n_sites);
        let dim = v.dim();
        let slot = v
            .amps
            .get_mut(index)
            .ok_or_else(|| Error::OutOfRange(format!("basis index {index} for dimension {dim}")))?;
        *slot = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// Normalized state with i.i.d. complex Gaussian amplitudes.
    pub fn random(n_sites: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StateVector::random_with(n_sites, &mut rng)
    }

    pub fn random_with<R: rand::Rng + ?Sized>(n_sites: usize, rng: &mut R) -> Self {
        let amps: Vec<Complex64> = (0..1usize << n_sites)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im)
            })
            .collect();
        let mut v = StateVector { n_sites, amps };
        v.normalize();
        v
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
