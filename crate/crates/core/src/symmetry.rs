//! Eigenoperator verification and discovery.
//!
//! Operator space is treated as a Hilbert space under the normalized
//! Hilbert–Schmidt inner product, in which Pauli strings are orthonormal and
//! the adjoint map `ad_H: X ↦ [H, X]` is self-adjoint for Hermitian `H`.
//!
//! [`eigenoperator_search`] looks for strictly local eigenoperators of a local
//! Hamiltonian `H_A` on a fixed set of interior sites:
//!
//! 1. enumerate the `4^k` Pauli strings on the interior;
//! 2. restrict to the common nullspace of `X ↦ [X, g]` over the constraint
//!    generators `g`;
//! 3. shrink that subspace to the largest one that `ad_{H_A}` maps into
//!    itself, by repeatedly discarding directions whose image leaves it;
//! 4. diagonalize `ad_{H_A}` on the invariant subspace;
//! 5. re-verify every eigenpair against `H_A` and group by frequency.

use std::collections::HashMap;

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::error::{check_sites, Error, Result};
use crate::lattice::TermRegistry;
use crate::linalg::{gemm_complex, herm_eigen, Op};
use crate::pauli::{Pauli, PauliString, PauliSum, Support};

/// Eigenoperator `operator` with `[H, operator] ≈ omega · operator`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenoperatorResult {
    pub omega: f64,
    /// Unit HS norm; first significant coefficient (canonical order) is real positive.
    pub operator: PauliSum,
    /// `‖[H, operator] − omega · operator‖_HS`.
    pub residual: f64,
}

/// Operators a search result must commute with.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CommutantConstraint {
    pub generators: Vec<PauliSum>,
}

impl CommutantConstraint {
    pub fn none() -> Self {
        CommutantConstraint::default()
    }

    pub fn new(generators: Vec<PauliSum>) -> Self {
        CommutantConstraint { generators }
    }
}

/// Scales `op` to unit HS norm and rotates its phase so the first
/// significant coefficient in canonical term order is real and positive.
pub fn normalize_operator(op: &PauliSum) -> Result<PauliSum> {
    let norm = op.hs_norm();
    if norm == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let max = op.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let lead = op
        .iter()
        .map(|(_, c)| *c)
        .find(|c| c.norm() > 1e-8 * max)
        .expect("nonzero operator has a leading term");
    let rot = lead.conj() / lead.norm();
    Ok(op.scaled(rot / norm))
}

/// Best-fit frequency `Re ⟨A, [H, A]⟩ / ⟨A, A⟩` and its residual on the
/// normalized operator. The imaginary part of the quotient, if any, shows
/// up in the residual.
pub fn verify_eigenoperator(h: &PauliSum, a: &PauliSum) -> Result<EigenoperatorResult> {
    check_sites(h.n_sites(), a.n_sites())?;
    let operator = normalize_operator(a)?;
    let image = h.commutator(&operator)?;
    let omega = operator.hs_inner(&image)?.re;
    let residual = image
        .axpy(Complex64::new(-omega, 0.0), &operator)?
        .hs_norm();
    Ok(EigenoperatorResult {
        omega,
        operator,
        residual,
    })
}

/// `‖[H, C]‖_HS`.
pub fn verify_conserved(h: &PauliSum, c: &PauliSum) -> Result<f64> {
    Ok(h.commutator(c)?.hs_norm())
}

/// Residuals `‖[H_p, A_q] − ω δ_pq A_q‖_HS` over a partition `H = Σ_p H_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaStructure {
    /// Node index of each row (`H_p`) and column (`A_q`).
    pub nodes: Vec<usize>,
    /// Expected frequency of each `A_q`.
    pub omegas: Vec<f64>,
    pub residuals: Array2<f64>,
}

impl DeltaStructure {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol
    }

    pub fn row_passes(&self, row: usize, tol: f64) -> bool {
        self.residuals.row(row).iter().all(|&r| r < tol)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("p");
        for q in &self.nodes {
            s.push_str(&format!(",A_{q}"));
        }
        s.push('\n');
        for (i, p) in self.nodes.iter().enumerate() {
            s.push_str(&format!("H_{p}"));
            for v in self.residuals.row(i) {
                s.push_str(&format!(",{v:.6e}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Checks the Kronecker-delta structure `[H_p, A_q] = ω A_q δ_pq` using the
/// registry's non-overlapping partition into per-node Hamiltonians.
pub fn check_delta_structure(
    registry: &TermRegistry,
    symmetries: &[(usize, PauliSum)],
    omega: f64,
) -> Result<DeltaStructure> {
    check_delta_structure_with(registry, symmetries, &vec![omega; symmetries.len()])
}

/// As [`check_delta_structure`], with its own frequency for each `A_q`
/// (nodes carrying different fields).
pub fn check_delta_structure_with(
    registry: &TermRegistry,
    symmetries: &[(usize, PauliSum)],
    omegas: &[f64],
) -> Result<DeltaStructure> {
    if omegas.len() != symmetries.len() {
        return Err(Error::InvalidArgument(format!(
            "{} frequencies for {} symmetries",
            omegas.len(),
            symmetries.len()
        )));
    }
    let parts = registry.partition();
    let part_nodes: Vec<usize> = parts.iter().map(|(p, _)| *p).collect();
    let sym_nodes: Vec<usize> = symmetries.iter().map(|(q, _)| *q).collect();
    if part_nodes != sym_nodes {
        return Err(Error::InvalidArgument(format!(
            "symmetries indexed by {sym_nodes:?}, registry interior nodes are {part_nodes:?}"
        )));
    }
    let n = parts.len();
    let mut residuals = Array2::<f64>::zeros((n, n));
    for (i, (_, hp)) in parts.iter().enumerate() {
        for (j, (_, aq)) in symmetries.iter().enumerate() {
            let w = if i == j { omegas[j] } else { 0.0 };
            let r = hp.commutator(aq)?.axpy(Complex64::new(-w, 0.0), aq)?;
            residuals[[i, j]] = r.hs_norm();
        }
    }
    Ok(DeltaStructure {
        nodes: part_nodes,
        omegas: omegas.to_vec(),
        residuals,
    })
}

/// Overlaps of an observable with `A_p` and with the charge `A_p† A_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapRow {
    pub node: usize,
    pub with_symmetry: Complex64,
    pub with_charge: Complex64,
}

/// Long-time behaviour implied by an overlap table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Behaviour {
    /// Overlaps some `A_p`: inherits persistent oscillations.
    Oscillating,
    /// Overlaps only conserved charges: constant offset after a kick.
    ConstantResponse,
    /// Overlaps neither: relaxes.
    Relaxing,
}

pub fn overlap_report(o: &PauliSum, symmetries: &[(usize, PauliSum)]) -> Result<Vec<OverlapRow>> {
    symmetries
        .iter()
        .map(|(p, a)| {
            let charge = a.adjoint().mul(a)?;
            Ok(OverlapRow {
                node: *p,
                with_symmetry: a.hs_inner(o)?,
                with_charge: charge.hs_inner(o)?,
            })
        })
        .collect()
}

pub fn classify(rows: &[OverlapRow], tol: f64) -> Behaviour {
    if rows.iter().any(|r| r.with_symmetry.norm() > tol) {
        Behaviour::Oscillating
    } else if rows.iter().any(|r| r.with_charge.norm() > tol) {
        Behaviour::ConstantResponse
    } else {
        Behaviour::Relaxing
    }
}

/// Tunables for [`eigenoperator_search`].
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Largest interior size accepted (operator-space dimension `4^max_sites`).
    pub max_sites: usize,
    /// Eigenpairs whose re-verified residual exceeds this are dropped.
    pub residual_tol: f64,
    /// Frequencies within `degeneracy_tol · max|ω|` form one group.
    pub degeneracy_tol: f64,
    /// Singular values below `null_tol · scale` count as zero.
    pub null_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_sites: 6,
            residual_tol: 1e-10,
            degeneracy_tol: 1e-9,
            null_tol: 1e-6,
        }
    }
}

/// Indices into [`SearchOutcome::results`] sharing one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaGroup {
    pub omega: f64,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    /// Verified eigenpairs sorted by frequency.
    pub results: Vec<EigenoperatorResult>,
    pub groups: Vec<OmegaGroup>,
    /// Size of the Pauli basis on the interior.
    pub basis_dim: usize,
    /// Dimension left after the commutant constraints.
    pub constrained_dim: usize,
    /// Dimension of the largest `ad_H`-invariant subspace inside that.
    pub invariant_dim: usize,
    /// Eigenpairs dropped by the residual re-check.
    pub rejected: usize,
}

impl SearchOutcome {
    pub fn group_for(&self, omega: f64, tol: f64) -> Option<&OmegaGroup> {
        self.groups.iter().find(|g| (g.omega - omega).abs() <= tol)
    }

    /// Orthonormal operators spanning a group.
    pub fn group_operators(&self, group: &OmegaGroup) -> Vec<&PauliSum> {
        group
            .members
            .iter()
            .map(|&i| &self.results[i].operator)
            .collect()
    }

    /// `‖Π_group x‖ / ‖x‖`: how much of `x` lies in the group's eigenspace.
    pub fn group_overlap(&self, group: &OmegaGroup, x: &PauliSum) -> Result<f64> {
        let norm = x.hs_norm();
        if norm == 0.0 {
            return Err(Error::ZeroOperator);
        }
        let mut acc = 0.0;
        for op in self.group_operators(group) {
            acc += op.hs_inner(x)?.norm_sqr();
        }
        Ok(acc.sqrt() / norm)
    }

    /// Comma-separated `omega,residual,support` table.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("index,omega,residual,support\n");
        for (i, r) in self.results.iter().enumerate() {
            let sites: Vec<String> = r
                .operator
                .support()
                .sites()
                .map(|v| v.to_string())
                .collect();
            s.push_str(&format!(
                "{i},{:.12e},{:.3e},{}\n",
                r.omega,
                r.residual,
                sites.join(" ")
            ));
        }
        s
    }
}

/// All Pauli strings supported inside `interior`, identity first.
pub fn interior_basis(n_sites: usize, interior: &Support) -> Result<Vec<PauliString>> {
    let sites: Vec<usize> = interior.sites().collect();
    if let Some(&s) = sites.iter().find(|&&s| s >= n_sites) {
        return Err(Error::OutOfRange(format!("site {s} on {n_sites} sites")));
    }
    let k = sites.len();
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut out = Vec::with_capacity(1 << (2 * k));
    for idx in 0..(1usize << (2 * k)) {
        let (mut x, mut z) = (0u64, 0u64);
        for (d, &site) in sites.iter().enumerate() {
            match letters[(idx >> (2 * d)) & 3] {
                Pauli::I => {}
                Pauli::X => x |= 1 << site,
                Pauli::Y => {
                    x |= 1 << site;
                    z |= 1 << site;
                }
                Pauli::Z => z |= 1 << site,
            }
        }
        out.push(PauliString::from_masks(n_sites, x, z)?);
    }
    Ok(out)
}

/// Discovers eigenoperators of `h_a` supported on `interior` that commute
/// with every constraint generator.
pub fn eigenoperator_search(
    h_a: &PauliSum,
    interior: &Support,
    constraints: &CommutantConstraint,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    if interior.len() > config.max_sites {
        return Err(Error::Capacity {
            what: "eigenoperator search interior",
            sites: interior.len(),
            limit: config.max_sites,
        });
    }
    if interior.is_empty() {
        return Err(Error::InvalidArgument("empty interior".into()));
    }
    for g in &constraints.generators {
        check_sites(h_a.n_sites(), g.n_sites())?;
        if !g.support().intersects(interior) {
            return Err(Error::InvalidArgument(
                "constraint generator does not touch the interior".into(),
            ));
        }
    }
    let basis = interior_basis(h_a.n_sites(), interior)?;
    search_in_basis(h_a, &basis, constraints, config)
}

/// [`eigenoperator_search`] over an explicitly ordered basis of Pauli strings.
pub fn search_in_basis(
    h_a: &PauliSum,
    basis: &[PauliString],
    constraints: &CommutantConstraint,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    if !h_a.is_hermitian(1e-12) {
        return Err(Error::NotHermitian(h_a.max_imag()));
    }
    let k = basis.len();
    let index: HashMap<PauliString, usize> =
        basis.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    if index.len() != k {
        return Err(Error::InvalidArgument("basis has repeated strings".into()));
    }
    let scale = h_a.iter().map(|(_, c)| c.norm()).sum::<f64>().max(1.0);

    // (ii) commutant constraints
    let mut q = if constraints.generators.is_empty() {
        Array2::<Complex64>::eye(k)
    } else {
        let g_scale = constraints
            .generators
            .iter()
            .map(|g| g.iter().map(|(_, c)| c.norm()).sum::<f64>())
            .fold(1.0, f64::max);
        let gram = constraint_gram(basis, &constraints.generators)?;
        null_rows(gram, config.null_tol * g_scale)?
    };
    let constrained_dim = q.nrows();

    // (iii) largest ad-invariant subspace inside span(q)
    let (adj_in, adj_out_gram) = adjoint_blocks(h_a, basis, &index)?;
    loop {
        let d = q.nrows();
        if d == 0 {
            break;
        }
        // columns of qm are the current subspace vectors
        let kq = gemm_complex(&adj_in, Op::None, &q, Op::Trans);
        let compressed = gemm_complex(&q.mapv(|v| v.conj()), Op::None, &kq, Op::None);
        let leak_in = gemm_complex(&kq, Op::ConjTrans, &kq, Op::None)
            - gemm_complex(&compressed, Op::ConjTrans, &compressed, Op::None);
        let fq = gemm_complex(&adj_out_gram, Op::None, &q, Op::Trans);
        let leak_out = gemm_complex(&q.mapv(|v| v.conj()), Op::None, &fq, Op::None);
        let leak = hermitize(&(leak_in + leak_out));
        let keep = null_rows(leak, config.null_tol * scale)?;
        if keep.nrows() == d {
            break;
        }
        // new rows: combinations of old rows
        q = gemm_complex(&keep, Op::None, &q, Op::None);
    }
    let invariant_dim = q.nrows();

    // (iv) diagonalize the restriction
    let mut results = Vec::new();
    let mut rejected = 0;
    if invariant_dim > 0 {
        let kq = gemm_complex(&adj_in, Op::None, &q, Op::Trans);
        let compressed = gemm_complex(&q.mapv(|v| v.conj()), Op::None, &kq, Op::None);
        let (omegas, vecs) = herm_eigen(hermitize(&compressed))?;
        // rows of ops: coefficient vectors over the basis
        let ops = gemm_complex(&vecs, Op::None, &q, Op::None);
        for (row, &omega) in ops.axis_iter(Axis(0)).zip(&omegas) {
            let op =
                PauliSum::from_terms(h_a.n_sites(), row.iter().zip(basis).map(|(c, p)| (*p, *c)))?;
            if op.is_zero() {
                rejected += 1;
                continue;
            }
            // (v) re-verify against H_A itself
            let operator = normalize_operator(&op)?;
            let residual = h_a
                .commutator(&operator)?
                .axpy(Complex64::new(-omega, 0.0), &operator)?
                .hs_norm();
            if residual <= config.residual_tol {
                results.push(EigenoperatorResult {
                    omega,
                    operator,
                    residual,
                });
            } else {
                rejected += 1;
            }
        }
    }
    results.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let groups = group_by_omega(&results, config.degeneracy_tol);
    Ok(SearchOutcome {
        results,
        groups,
        basis_dim: k,
        constrained_dim,
        invariant_dim,
        rejected,
    })
}

fn hermitize(m: &Array2<Complex64>) -> Array2<Complex64> {
    let t = m.t().mapv(|v| v.conj());
    (m + &t).mapv(|v| v * 0.5)
}

fn group_by_omega(results: &[EigenoperatorResult], rel_tol: f64) -> Vec<OmegaGroup> {
    let max = results.iter().map(|r| r.omega.abs()).fold(0.0, f64::max);
    let tol = (rel_tol * max).max(1e-12);
    let mut groups: Vec<OmegaGroup> = Vec::new();
    for (i, r) in results.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (r.omega - g.omega).abs() <= tol => g.members.push(i),
            _ => groups.push(OmegaGroup {
                omega: r.omega,
                members: vec![i],
            }),
        }
    }
    for g in &mut groups {
        g.omega = g.members.iter().map(|&i| results[i].omega).sum::<f64>() / g.members.len() as f64;
    }
    groups
}

/// Gram matrix `Σ_g M_g† M_g` of the stacked maps `X ↦ [X, g]`.
fn constraint_gram(basis: &[PauliString], generators: &[PauliSum]) -> Result<Array2<Complex64>> {
    let k = basis.len();
    let mut gram = Array2::<Complex64>::zeros((k, k));
    for g in generators {
        let mut rows: HashMap<PauliString, Vec<(usize, Complex64)>> = HashMap::new();
        for (i, b) in basis.iter().enumerate() {
            let col = PauliSum::from_string(*b, Complex64::new(1.0, 0.0)).commutator(g)?;
            for (s, c) in col.iter() {
                rows.entry(*s).or_default().push((i, *c));
            }
        }
        accumulate_gram(&mut gram, rows.values());
    }
    Ok(gram)
}

fn accumulate_gram<'a>(
    gram: &mut Array2<Complex64>,
    rows: impl Iterator<Item = &'a Vec<(usize, Complex64)>>,
) {
    for entries in rows {
        for (i, ci) in entries {
            for (j, cj) in entries {
                gram[[*i, *j]] += ci.conj() * cj;
            }
        }
    }
}

/// `ad_H` split into its block inside the basis (`k × k`) and the Gram
/// matrix of its component outside the basis.
fn adjoint_blocks(
    h: &PauliSum,
    basis: &[PauliString],
    index: &HashMap<PauliString, usize>,
) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    let k = basis.len();
    let mut inside = Array2::<Complex64>::zeros((k, k));
    let mut outside: HashMap<PauliString, Vec<(usize, Complex64)>> = HashMap::new();
    for (i, b) in basis.iter().enumerate() {
        let image = h.commutator(&PauliSum::from_string(*b, Complex64::new(1.0, 0.0)))?;
        for (s, c) in image.iter() {
            match index.get(s) {
                Some(&row) => inside[[row, i]] += c,
                None => outside.entry(*s).or_default().push((i, *c)),
            }
        }
    }
    let mut out_gram = Array2::<Complex64>::zeros((k, k));
    accumulate_gram(&mut out_gram, outside.values());
    Ok((inside, out_gram))
}

/// Orthonormal rows spanning the numerical nullspace of a Hermitian PSD
/// Gram matrix: eigenvectors whose singular value `sqrt(λ)` is below `tol`.
fn null_rows(gram: Array2<Complex64>, tol: f64) -> Result<Array2<Complex64>> {
    let (vals, vecs) = herm_eigen(gram)?;
    let keep: Vec<usize> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v.max(0.0).sqrt() <= tol)
        .map(|(i, _)| i)
        .collect();
    Ok(vecs.select(Axis(0), &keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build, Axis as SpinAxis, SpinLaceSpec};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_field_frequency() {
        let b = 0.8;
        let h = PauliSum::single(1, 0, Pauli::Z, b).unwrap();
        let r = verify_eigenoperator(&h, &PauliSum::sigma_minus(1, 0).unwrap()).unwrap();
        assert!((r.omega + 2.0 * b).abs() < 1e-15);
        assert!(r.residual < 1e-15);
        assert!((r.operator.hs_norm() - 1.0).abs() < 1e-15);
        let lead = r.operator.iter().next().unwrap().1;
        assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
    }

    #[test]
    fn conserved_quantity_has_zero_frequency() {
        let lace = build(&SpinLaceSpec::ordered(2, 1.3, [1.0, 2.0, 0.5])).unwrap();
        let r = verify_eigenoperator(&lace.hamiltonian, &lace.hamiltonian).unwrap();
        assert!(r.omega.abs() < 1e-13 && r.residual < 1e-13);
        assert!(verify_conserved(&lace.hamiltonian, &lace.hamiltonian).unwrap() < 1e-13);
    }

    #[test]
    fn zero_operator_rejected() {
        let h = PauliSum::single(2, 0, Pauli::Z, 1.0).unwrap();
        assert!(matches!(
            verify_eigenoperator(&h, &PauliSum::zero(2)),
            Err(Error::ZeroOperator)
        ));
    }

    #[test]
    fn omega_invariant_under_rescaling() {
        let lace = build(&SpinLaceSpec::ordered(3, PI, [1.0, 2.0, 0.5])).unwrap();
        let a = lace.symmetry(2).unwrap();
        let base = verify_eigenoperator(&lace.hamiltonian, &a).unwrap();
        for s in [c(3.0, 0.0), c(0.0, -2.0), c(1e-3, 1e-3)] {
            let r = verify_eigenoperator(&lace.hamiltonian, &a.scaled(s)).unwrap();
            assert!((r.omega - base.omega).abs() < 1e-12);
            assert!(r.operator.sub(&base.operator).unwrap().hs_norm() < 1e-12);
        }
    }

    #[test]
    fn node_sigma_x_is_not_conserved() {
        let lace = build(&SpinLaceSpec::ordered(2, PI, [1.0, 2.0, 0.5])).unwrap();
        let sx =
            PauliSum::single(lace.n_sites(), lace.map.node(2).unwrap(), Pauli::X, 1.0).unwrap();
        assert!(verify_conserved(&lace.hamiltonian, &sx).unwrap() > 0.1);
    }

    #[test]
    fn distinct_node_fields_give_distinct_frequencies() {
        let mut spec = SpinLaceSpec::ordered(3, PI, [1.0, 2.0, 0.5]);
        spec.node_fields = vec![0.4, 1.1, -0.7, 2.0];
        let lace = build(&spec).unwrap();
        let syms = lace.symmetries().unwrap();
        let omegas: Vec<f64> = syms
            .iter()
            .map(|(p, _)| -2.0 * spec.node_fields[p - 1])
            .collect();
        let d = check_delta_structure_with(&lace.registry, &syms, &omegas).unwrap();
        assert!(d.passes(1e-12), "{}", d.to_csv());
        // a single shared frequency is wrong for one of them
        let shared = check_delta_structure(&lace.registry, &syms, omegas[0]).unwrap();
        assert!(shared.row_passes(0, 1e-12) && !shared.row_passes(1, 1e-3));
        assert!(check_delta_structure_with(&lace.registry, &syms, &omegas[..1]).is_err());
    }

    #[test]
    fn single_plaquette_delta_structure_is_one_by_one() {
        let lace = build(&SpinLaceSpec::ordered(2, PI, [1.0, 2.0, 0.5])).unwrap();
        let syms = lace.symmetries().unwrap();
        let d = check_delta_structure(&lace.registry, &syms, -2.0 * PI).unwrap();
        assert_eq!(d.residuals.dim(), (1, 1));
        assert!(d.passes(1e-12));
        assert!(check_delta_structure(&lace.registry, &[], -2.0 * PI).is_err());
    }

    #[test]
    fn single_site_search_recovers_ladder_operators() {
        let b = 1.1;
        let h = PauliSum::single(1, 0, Pauli::Z, b).unwrap();
        let out = eigenoperator_search(
            &h,
            &Support::new([0]),
            &CommutantConstraint::none(),
            &SearchConfig::default(),
        )
        .unwrap();
        let omegas: Vec<f64> = out.results.iter().map(|r| r.omega).collect();
        assert_eq!(omegas.len(), 4);
        assert!((omegas[0] + 2.0 * b).abs() < 1e-12);
        assert!(omegas[1].abs() < 1e-12 && omegas[2].abs() < 1e-12);
        assert!((omegas[3] - 2.0 * b).abs() < 1e-12);
        let sm = PauliSum::sigma_minus(1, 0).unwrap();
        let low = out.group_for(-2.0 * b, 1e-9).unwrap();
        assert!((out.group_overlap(low, &sm).unwrap() - 1.0).abs() < 1e-12);
        let zero = out.group_for(0.0, 1e-9).unwrap();
        for p in [
            PauliSum::identity(1),
            PauliSum::single(1, 0, Pauli::Z, 1.0).unwrap(),
        ] {
            assert!((out.group_overlap(zero, &p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_hamiltonian_returns_whole_constrained_space() {
        let h = PauliSum::zero(3);
        let g = PauliSum::single(3, 1, Pauli::Z, 1.0).unwrap();
        let out = eigenoperator_search(
            &h,
            &Support::new([0, 1]),
            &CommutantConstraint::new(vec![g]),
            &SearchConfig::default(),
        )
        .unwrap();
        // site 1 restricted to {I, Z}: 4 × 2
        assert_eq!(out.constrained_dim, 8);
        assert_eq!(out.results.len(), 8);
        assert!(out.results.iter().all(|r| r.omega.abs() < 1e-14));
        assert_eq!(out.groups.len(), 1);
    }

    #[test]
    fn search_limits_and_validation() {
        let h = PauliSum::zero(8);
        let cfg = SearchConfig {
            max_sites: 3,
            ..SearchConfig::default()
        };
        let big = Support::new(0..4);
        assert!(matches!(
            eigenoperator_search(&h, &big, &CommutantConstraint::none(), &cfg),
            Err(Error::Capacity { .. })
        ));
        let far = PauliSum::single(8, 7, Pauli::X, 1.0).unwrap();
        assert!(eigenoperator_search(
            &h,
            &Support::new([0]),
            &CommutantConstraint::new(vec![far]),
            &cfg
        )
        .is_err());
    }

    #[test]
    fn full_commutant_leaves_identity() {
        // only the identity commutes with X, Y and Z on one site
        let h = PauliSum::single(1, 0, Pauli::Z, 1.0).unwrap();
        let gens = [Pauli::X, Pauli::Y, Pauli::Z]
            .map(|p| PauliSum::single(1, 0, p, 1.0).unwrap())
            .to_vec();
        let out = eigenoperator_search(
            &h,
            &Support::new([0]),
            &CommutantConstraint::new(gens),
            &SearchConfig::default(),
        )
        .unwrap();
        assert_eq!(out.constrained_dim, 1);
        assert_eq!(out.results.len(), 1);
        assert!(out.results[0].omega.abs() < 1e-14);
    }

    #[test]
    fn two_plaquette_search_finds_lowering_symmetry() {
        let lace = build(&SpinLaceSpec::ordered(3, PI, [1.0, 2.0, 0.5])).unwrap();
        let p = 2;
        let hp = lace.local_hamiltonian(p).unwrap();
        let a = lace.symmetry(p).unwrap();
        let gens = [p - 1, p]
            .iter()
            .flat_map(|&d| SpinAxis::ALL.map(|ax| lace.total_spin(d, ax).unwrap()))
            .collect();
        let out = eigenoperator_search(
            &hp,
            &a.support(),
            &CommutantConstraint::new(gens),
            &SearchConfig::default(),
        )
        .unwrap();
        assert_eq!(out.basis_dim, 1024);
        assert_eq!(out.constrained_dim, 16);
        let g = out.group_for(-2.0 * PI, 1e-8).expect("-2B group");
        assert!(out.group_overlap(g, &a).unwrap() > 1.0 - 1e-10);
    }
}
