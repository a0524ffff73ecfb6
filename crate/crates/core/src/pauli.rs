//! Multi-site Pauli operators.
//!
//! A [`PauliString`] is stored in symplectic form: one X bit and one Z bit per
//! site, with `(x, z)` = `(0,0)` for I, `(1,0)` for X, `(0,1)` for Z and
//! `(1,1)` for Y. Strings are phase-free; every phase lives in the complex
//! coefficient of a [`PauliSum`]. Internally `Y = i·X·Z` on each site, which
//! makes the product phase a popcount expression.
//!
//! Basis-state indexing convention, used everywhere a state vector or a dense
//! matrix appears: site 0 is the most significant bit of the basis index, and
//! bit value 0 is spin up (`σ^z = +1`).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_sites, Error, Result};
use crate::state::StateVector;

/// Largest number of sites a [`PauliString`] can address.
pub const MAX_SITES: usize = 64;

/// Coefficients with magnitude below this are dropped after every algebraic op.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Default cap on `L` for dense matrix materialization.
pub const DEFAULT_DENSE_LIMIT: usize = 14;

/// Single-site Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    // I < X < Y < Z
    fn rank(self) -> u8 {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Phase of a Pauli-group element, `i^k` for `k ∈ {0, 1, 2, 3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// Phase-free tensor product of single-site Paulis over `n_sites` sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_sites: u32,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        assert!(n_sites <= MAX_SITES, "at most {MAX_SITES} sites supported");
        PauliString {
            n_sites: n_sites as u32,
            x: 0,
            z: 0,
        }
    }

    /// Builds a string from raw masks; bit `s` of each mask refers to site `s`.
    pub fn from_masks(n_sites: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n_sites > MAX_SITES {
            return Err(Error::Capacity {
                what: "PauliString",
                sites: n_sites,
                limit: MAX_SITES,
            });
        }
        let allowed = low_mask(n_sites);
        if (x_mask | z_mask) & !allowed != 0 {
            return Err(Error::OutOfRange(format!(
                "mask has bits beyond site {}",
                n_sites.saturating_sub(1)
            )));
        }
        Ok(PauliString {
            n_sites: n_sites as u32,
            x: x_mask,
            z: z_mask,
        })
    }

    pub fn single(n_sites: usize, site: usize, p: Pauli) -> Result<Self> {
        if site >= n_sites {
            return Err(Error::OutOfRange(format!(
                "site {site} on a lattice of {n_sites} sites"
            )));
        }
        let mut s = PauliString::identity(n_sites);
        s.set(site, p);
        Ok(s)
    }

    /// Parses a word such as `"XIZY"` (site 0 first).
    pub fn from_word(word: &str) -> Result<Self> {
        let n = word.chars().count();
        if n > MAX_SITES {
            return Err(Error::Capacity {
                what: "PauliString",
                sites: n,
                limit: MAX_SITES,
            });
        }
        let mut s = PauliString::identity(n);
        for (site, c) in word.chars().enumerate() {
            let p = Pauli::from_char(c).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("invalid Pauli letter {c:?} in {word:?}"),
            })?;
            s.set(site, p);
        }
        Ok(s)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn get(&self, site: usize) -> Pauli {
        Pauli::from_bits(self.x >> site & 1 == 1, self.z >> site & 1 == 1)
    }

    fn set(&mut self, site: usize, p: Pauli) {
        let (xb, zb) = p.bits();
        let bit = 1u64 << site;
        self.x = if xb { self.x | bit } else { self.x & !bit };
        self.z = if zb { self.z | bit } else { self.z & !bit };
    }

    pub fn is_identity(&self) -> bool {
        self.x | self.z == 0
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn support(&self) -> Support {
        Support::from_mask(self.support_mask())
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Pauli-group product: `self · other = phase · result`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        check_sites(self.n_sites(), other.n_sites())?;
        Ok(self.multiply_unchecked(other))
    }

    fn multiply_unchecked(&self, other: &PauliString) -> (Phase, PauliString) {
        // P = i^{|x∧z|} X^x Z^z; moving Z^{z1} past X^{x2} costs (-1)^{|z1∧x2|}.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 3 * (x & z).count_ones();
        (
            Phase::from_exponent(k),
            PauliString {
                n_sites: self.n_sites,
                x,
                z,
            },
        )
    }

    pub fn word(&self) -> String {
        (0..self.n_sites()).map(|s| self.get(s).as_char()).collect()
    }

    /// Masks re-expressed in basis-index bit positions (site 0 = MSB).
    fn basis_masks(&self) -> (usize, usize) {
        let n = self.n_sites();
        (
            reverse_low(self.x, n) as usize,
            reverse_low(self.z, n) as usize,
        )
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_sites.cmp(&other.n_sites).then_with(|| {
            let diff = (self.x ^ other.x) | (self.z ^ other.z);
            if diff == 0 {
                Ordering::Equal
            } else {
                let site = diff.trailing_zeros() as usize;
                self.get(site).rank().cmp(&other.get(site).rank())
            }
        })
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.word())
    }
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn reverse_low(mask: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        mask.reverse_bits() >> (64 - n)
    }
}

/// Ordered set of site indices an operator acts on.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Support(BTreeSet<usize>);

impl Support {
    pub fn new(sites: impl IntoIterator<Item = usize>) -> Self {
        Support(sites.into_iter().collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        Support((0..64).filter(|s| mask >> s & 1 == 1).collect())
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &s| m | 1u64 << s)
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.contains(&site)
    }

    pub fn is_subset(&self, other: &Support) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &Support) -> Support {
        Support(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &Support) -> Support {
        Support(self.0.difference(&other.0).copied().collect())
    }

    pub fn intersects(&self, other: &Support) -> bool {
        !self.0.is_disjoint(&other.0)
    }
}

/// Sparse complex-weighted sum of Pauli strings over a fixed number of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_sites: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_sites: usize) -> Self {
        assert!(n_sites <= MAX_SITES, "at most {MAX_SITES} sites supported");
        PauliSum {
            n_sites,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_sites: usize) -> Self {
        PauliSum::from_string(PauliString::identity(n_sites), Complex64::new(1.0, 0.0))
    }

    pub fn from_string(p: PauliString, coeff: Complex64) -> Self {
        let mut s = PauliSum::zero(p.n_sites());
        s.add_term(p, coeff);
        s
    }

    /// `coeff · σ^p` on a single site.
    pub fn single(n_sites: usize, site: usize, p: Pauli, coeff: f64) -> Result<Self> {
        Ok(PauliSum::from_string(
            PauliString::single(n_sites, site, p)?,
            Complex64::new(coeff, 0.0),
        ))
    }

    /// `σ^- = (X - iY)/2 = |↓⟩⟨↑|` on one site.
    pub fn sigma_minus(n_sites: usize, site: usize) -> Result<Self> {
        let mut s = PauliSum::zero(n_sites);
        s.add_term(
            PauliString::single(n_sites, site, Pauli::X)?,
            Complex64::new(0.5, 0.0),
        );
        s.add_term(
            PauliString::single(n_sites, site, Pauli::Y)?,
            Complex64::new(0.0, -0.5),
        );
        Ok(s)
    }

    /// `σ^+ = (X + iY)/2 = |↑⟩⟨↓|` on one site.
    pub fn sigma_plus(n_sites: usize, site: usize) -> Result<Self> {
        Ok(PauliSum::sigma_minus(n_sites, site)?.adjoint())
    }

    pub fn from_terms(
        n_sites: usize,
        terms: impl IntoIterator<Item = (PauliString, Complex64)>,
    ) -> Result<Self> {
        let mut s = PauliSum::zero(n_sites);
        for (p, c) in terms {
            check_sites(n_sites, p.n_sites())?;
            s.add_term(p, c);
        }
        Ok(s)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    /// Accumulates `coeff · p`, dropping the entry if it cancels below threshold.
    pub fn add_term(&mut self, p: PauliString, coeff: Complex64) {
        debug_assert_eq!(p.n_sites(), self.n_sites);
        let entry = self.terms.entry(p).or_default();
        *entry += coeff;
        if entry.norm() < PRUNE_THRESHOLD {
            self.terms.remove(&p);
        }
    }

    pub fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
    }

    pub fn scaled(&self, c: Complex64) -> PauliSum {
        let mut out = PauliSum {
            n_sites: self.n_sites,
            terms: self.terms.iter().map(|(p, v)| (*p, v * c)).collect(),
        };
        out.prune();
        out
    }

    pub fn scaled_real(&self, c: f64) -> PauliSum {
        self.scaled(Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// `self + a · other`.
    pub fn axpy(&self, a: Complex64, other: &PauliSum) -> Result<PauliSum> {
        check_sites(self.n_sites, other.n_sites)?;
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(*p, a * c);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        check_sites(self.n_sites, other.n_sites)?;
        let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                let (phase, pc) = pa.multiply_unchecked(pb);
                *acc.entry(pc).or_default() += ca * cb * phase.to_complex();
            }
        }
        let mut out = PauliSum {
            n_sites: self.n_sites,
            terms: acc,
        };
        out.prune();
        Ok(out)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        check_sites(self.n_sites, other.n_sites)?;
        let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                if pa.commutes_with(pb) {
                    continue;
                }
                let (phase, pc) = pa.multiply_unchecked(pb);
                *acc.entry(pc).or_default() += 2.0 * ca * cb * phase.to_complex();
            }
        }
        let mut out = PauliSum {
            n_sites: self.n_sites,
            terms: acc,
        };
        out.prune();
        Ok(out)
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            n_sites: self.n_sites,
            terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect(),
        }
    }

    /// Normalized Hilbert–Schmidt inner product `Tr(a† b) / 2^L`.
    pub fn hs_inner(&self, other: &PauliSum) -> Result<Complex64> {
        check_sites(self.n_sites, other.n_sites)?;
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::default();
        for (p, c) in &small.terms {
            if let Some(d) = large.terms.get(p) {
                acc += if flip { d.conj() * c } else { c.conj() * d };
            }
        }
        Ok(acc)
    }

    /// `sqrt(Tr(a† a) / 2^L)`, i.e. the 2-norm of the coefficient vector.
    pub fn hs_norm(&self) -> f64 {
        // an empty f64 sum is −0.0
        self.terms
            .values()
            .fold(0.0, |a, c| a + c.norm_sqr())
            .sqrt()
    }

    pub fn support(&self) -> Support {
        Support::from_mask(self.terms.keys().fold(0, |m, p| m | p.support_mask()))
    }

    /// True when every coefficient is real within `tol` (Pauli strings are Hermitian).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub(crate) fn max_imag(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// True when the computational-basis matrix has only real entries.
    pub fn has_real_matrix(&self) -> bool {
        self.terms.iter().all(|(p, c)| {
            let eff = c * Phase::from_exponent(p.y_count()).to_complex();
            eff.im.abs() < PRUNE_THRESHOLD
        })
    }

    /// Dense `2^L × 2^L` matrix in the computational basis.
    pub fn to_matrix(&self, dense_limit: usize) -> Result<Array2<Complex64>> {
        if self.n_sites > dense_limit {
            return Err(Error::Capacity {
                what: "dense matrix",
                sites: self.n_sites,
                limit: dense_limit,
            });
        }
        let dim = 1usize << self.n_sites;
        let mut m = Array2::<Complex64>::zeros((dim, dim));
        for (p, c) in &self.terms {
            let (xb, zb) = p.basis_masks();
            let base = c * Phase::from_exponent(p.y_count()).to_complex();
            for col in 0..dim {
                let sign = if (zb & col).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                m[[col ^ xb, col]] += base * sign;
            }
        }
        Ok(m)
    }

    /// Real dense matrix; fails unless [`PauliSum::has_real_matrix`] holds.
    pub fn to_real_matrix(&self, dense_limit: usize) -> Result<Array2<f64>> {
        if self.n_sites > dense_limit {
            return Err(Error::Capacity {
                what: "dense matrix",
                sites: self.n_sites,
                limit: dense_limit,
            });
        }
        if !self.has_real_matrix() {
            return Err(Error::InvalidArgument("matrix has complex entries".into()));
        }
        let dim = 1usize << self.n_sites;
        let mut m = Array2::<f64>::zeros((dim, dim));
        for (p, c) in &self.terms {
            let (xb, zb) = p.basis_masks();
            let base = (c * Phase::from_exponent(p.y_count()).to_complex()).re;
            for col in 0..dim {
                let sign = if (zb & col).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                m[[col ^ xb, col]] += base * sign;
            }
        }
        Ok(m)
    }

    /// Matrix-free action on a state vector.
    pub fn matvec(&self, v: &StateVector) -> Result<StateVector> {
        check_sites(self.n_sites, v.n_sites())?;
        let kernel = MatvecKernel::new(self);
        let mut out = vec![Complex64::default(); v.dim()];
        kernel.apply(v.amplitudes(), &mut out);
        Ok(StateVector::from_amplitudes_unchecked(self.n_sites, out))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (p, c) in &self.terms {
            let _ = writeln!(s, "{:.17e} {:.17e} {}", c.re, c.im, p.word());
        }
        s
    }

    /// Parses the `coeff_re coeff_im word` line format. Blank lines and lines
    /// starting with `#` are skipped. `n_sites` is required when the text
    /// holds no terms.
    pub fn from_text(text: &str, n_sites: Option<usize>) -> Result<PauliSum> {
        let mut out: Option<PauliSum> = n_sites.map(PauliSum::zero);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            }
            let re: f64 = fields[0]
                .parse()
                .map_err(|_| err(format!("bad real part {:?}", fields[0])))?;
            let im: f64 = fields[1]
                .parse()
                .map_err(|_| err(format!("bad imaginary part {:?}", fields[1])))?;
            let p = PauliString::from_word(fields[2]).map_err(|e| err(e.to_string()))?;
            let sum = out.get_or_insert_with(|| PauliSum::zero(p.n_sites()));
            if sum.n_sites != p.n_sites() {
                return Err(err(format!(
                    "word has {} sites, expected {}",
                    p.n_sites(),
                    sum.n_sites
                )));
            }
            sum.add_term(p, Complex64::new(re, im));
        }
        out.ok_or(Error::Parse {
            line: 0,
            msg: "no terms and no site count given".into(),
        })
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (p, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)·{}", c.re, c.im, p)?;
        }
        Ok(())
    }
}

/// Precomputed action of a [`PauliSum`] on basis-indexed amplitude arrays.
///
/// Terms sharing an X pattern are grouped so each output amplitude reads a
/// single input amplitude per group.
pub(crate) struct MatvecKernel {
    groups: Vec<(usize, Vec<(usize, Complex64)>)>,
}

const MATVEC_CHUNK: usize = 1 << 12;

impl MatvecKernel {
    pub(crate) fn new(op: &PauliSum) -> Self {
        let mut by_flip: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
        for (p, c) in &op.terms {
            let (xb, zb) = p.basis_masks();
            let eff = c * Phase::from_exponent(p.y_count()).to_complex();
            by_flip.entry(xb).or_default().push((zb, eff));
        }
        MatvecKernel {
            groups: by_flip.into_iter().collect(),
        }
    }

    /// `out = op · input`; output is independent of how rayon partitions it.
    pub(crate) fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        out.par_chunks_mut(MATVEC_CHUNK)
            .enumerate()
            .for_each(|(chunk, block)| {
                let offset = chunk * MATVEC_CHUNK;
                for (k, slot) in block.iter_mut().enumerate() {
                    let row = offset + k;
                    let mut acc = Complex64::default();
                    for (xb, terms) in &self.groups {
                        let col = row ^ xb;
                        let mut w = Complex64::default();
                        for (zb, c) in terms {
                            if (zb & col).count_ones() % 2 == 0 {
                                w += c;
                            } else {
                                w -= c;
                            }
                        }
                        acc += w * input[col];
                    }
                    *slot = acc;
                }
            });
    }

    /// Real-arithmetic variant for operators whose matrix is real.
    pub(crate) fn apply_real(&self, input: &[f64], out: &mut [f64]) {
        out.par_chunks_mut(MATVEC_CHUNK)
            .enumerate()
            .for_each(|(chunk, block)| {
                let offset = chunk * MATVEC_CHUNK;
                for (k, slot) in block.iter_mut().enumerate() {
                    let row = offset + k;
                    let mut acc = 0.0;
                    for (xb, terms) in &self.groups {
                        let col = row ^ xb;
                        let mut w = 0.0;
                        for (zb, c) in terms {
                            if (zb & col).count_ones() % 2 == 0 {
                                w += c.re;
                            } else {
                                w -= c.re;
                            }
                        }
                        acc += w * input[col];
                    }
                    *slot = acc;
                }
            });
    }
}
