//! The XYZ spin-lace lattice: single-site nodes alternating with two-site
//! double-sites, every node coupled to both legs of its neighbouring
//! double-sites through the double-site total spin.
//!
//! Indexing is 1-based on the lattice and 0-based on sites. With `R`
//! double-sites there are `R + 1` nodes and `L = 3R + 1` sites, ordered
//! `node 1, (double 1, leg 1), (double 1, leg 2), node 2, …, node R+1`.
//! Node `r` carries the lattice label `2r − 1` and double-site `r` the label
//! `2r`, so node `r` sits between double-sites `r − 1` and `r`.
//!
//! Boundaries are open and terminate on nodes. The coupling triple `J_r`
//! belongs to double-site `r` and is used for both of its bonds.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliSum, Support};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(Error::InvalidArgument(format!("unknown axis {s:?}"))),
        }
    }
}

/// Where a [`Defect`] lands.
#[derive(Clone, Debug, PartialEq)]
pub enum DefectTarget {
    /// Replace an existing registry term.
    Term(TermLabel),
    /// Install (or replace) a single-site term on this site.
    Site(usize),
}

/// Whole-term replacement of one local piece of the Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct Defect {
    pub target: DefectTarget,
    pub replacement: PauliSum,
}

/// Declarative description of a spin-lace Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinLaceSpec {
    /// Number of double-sites `R`.
    pub plaquettes: usize,
    /// `R + 1` node fields.
    pub node_fields: Vec<f64>,
    /// `R` double-site fields.
    pub double_fields: Vec<f64>,
    /// `R` triples `(J^x, J^y, J^z)`.
    pub couplings: Vec<[f64; 3]>,
    pub defects: Vec<Defect>,
}

impl SpinLaceSpec {
    /// Uniform model: every node and double-site field equals `field`, every
    /// bond uses `couplings`.
    pub fn ordered(plaquettes: usize, field: f64, couplings: [f64; 3]) -> Self {
        SpinLaceSpec {
            plaquettes,
            node_fields: vec![field; plaquettes + 1],
            double_fields: vec![field; plaquettes],
            couplings: vec![couplings; plaquettes],
            defects: Vec::new(),
        }
    }

    /// Keeps the node fields and redraws every coupling component and double
    /// field uniformly within `± spread` of its current value.
    pub fn with_disorder(mut self, seed: u64, coupling_spread: f64, field_spread: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in &mut self.couplings {
            for a in j.iter_mut() {
                *a += coupling_spread * rng.random_range(-1.0..=1.0);
            }
        }
        for b in &mut self.double_fields {
            *b += field_spread * rng.random_range(-1.0..=1.0);
        }
        self
    }

    pub fn n_sites(&self) -> usize {
        3 * self.plaquettes + 1
    }

    pub fn is_ordered(&self) -> bool {
        let same = |v: &[f64]| v.windows(2).all(|w| w[0] == w[1]);
        same(&self.node_fields)
            && same(&self.double_fields)
            && self.couplings.windows(2).all(|w| w[0] == w[1])
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.plaquettes;
        if r < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 double-sites, got {r}"
            )));
        }
        if self.n_sites() > crate::pauli::MAX_SITES {
            return Err(Error::Capacity {
                what: "spin lace",
                sites: self.n_sites(),
                limit: crate::pauli::MAX_SITES,
            });
        }
        let check = |name: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!(
                    "{name}: expected {want} entries, got {got}"
                )))
            }
        };
        check("node_fields", self.node_fields.len(), r + 1)?;
        check("double_fields", self.double_fields.len(), r)?;
        check("couplings", self.couplings.len(), r)?;
        let finite = self
            .node_fields
            .iter()
            .chain(&self.double_fields)
            .chain(self.couplings.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        Ok(())
    }
}

/// Maps lattice roles to linear site indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SiteMap {
    plaquettes: usize,
}

/// Lattice role of a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteRole {
    Node(usize),
    Leg { double: usize, leg: usize },
}

impl SiteMap {
    pub fn new(plaquettes: usize) -> Self {
        SiteMap { plaquettes }
    }

    pub fn plaquettes(&self) -> usize {
        self.plaquettes
    }

    pub fn n_sites(&self) -> usize {
        3 * self.plaquettes + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.plaquettes + 1
    }

    /// Site of node `r` (lattice label `2r − 1`), `1 ≤ r ≤ R + 1`.
    pub fn node(&self, r: usize) -> Result<usize> {
        if r == 0 || r > self.plaquettes + 1 {
            return Err(Error::OutOfRange(format!(
                "node {r} (valid 1..={})",
                self.plaquettes + 1
            )));
        }
        Ok(3 * (r - 1))
    }

    /// Site of leg `leg ∈ {1, 2}` of double-site `r` (lattice label `2r`).
    pub fn double(&self, r: usize, leg: usize) -> Result<usize> {
        if r == 0 || r > self.plaquettes {
            return Err(Error::OutOfRange(format!(
                "double-site {r} (valid 1..={})",
                self.plaquettes
            )));
        }
        if leg != 1 && leg != 2 {
            return Err(Error::OutOfRange(format!("leg {leg} (valid 1 or 2)")));
        }
        Ok(3 * (r - 1) + leg)
    }

    pub fn role(&self, site: usize) -> Result<SiteRole> {
        if site >= self.n_sites() {
            return Err(Error::OutOfRange(format!(
                "site {site} on {} sites",
                self.n_sites()
            )));
        }
        Ok(match site % 3 {
            0 => SiteRole::Node(site / 3 + 1),
            leg => SiteRole::Leg {
                double: site / 3 + 1,
                leg,
            },
        })
    }

    /// Nodes that carry a dynamical symmetry: every node flanked by two
    /// double-sites, i.e. `2..=R`.
    pub fn interior_nodes(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.plaquettes
    }

    pub fn check_interior(&self, p: usize) -> Result<()> {
        if self.interior_nodes().contains(&p) {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "node {p} is not interior (valid 2..={})",
                self.plaquettes
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    /// `B σ^z` on node `index`.
    NodeField,
    /// `B_{2r} S^z` on double-site `index`.
    DoubleField,
    /// Node `index` coupled to double-site `index` (its right neighbour).
    BondRight,
    /// Node `index` coupled to double-site `index − 1` (its left neighbour).
    BondLeft,
    /// Extra single-site term installed by a site defect; `index` is the site.
    Site,
}

impl TermKind {
    pub fn name(self) -> &'static str {
        match self {
            TermKind::NodeField => "node_field",
            TermKind::DoubleField => "double_field",
            TermKind::BondRight => "bond_right",
            TermKind::BondLeft => "bond_left",
            TermKind::Site => "site",
        }
    }
}

impl std::str::FromStr for TermKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "node_field" => TermKind::NodeField,
            "double_field" => TermKind::DoubleField,
            "bond_right" => TermKind::BondRight,
            "bond_left" => TermKind::BondLeft,
            "site" => TermKind::Site,
            _ => return Err(Error::InvalidArgument(format!("unknown term kind {s:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermLabel {
    pub kind: TermKind,
    pub index: usize,
}

impl TermLabel {
    pub fn new(kind: TermKind, index: usize) -> Self {
        TermLabel { kind, index }
    }
}

impl fmt::Display for TermLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind.name(), self.index)
    }
}

/// The Hamiltonian as a labelled collection of local terms.
#[derive(Clone, Debug, PartialEq)]
pub struct TermRegistry {
    map: SiteMap,
    terms: BTreeMap<TermLabel, PauliSum>,
}

impl TermRegistry {
    pub fn map(&self) -> &SiteMap {
        &self.map
    }

    pub fn n_sites(&self) -> usize {
        self.map.n_sites()
    }

    pub fn get(&self, label: &TermLabel) -> Option<&PauliSum> {
        self.terms.get(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TermLabel, &PauliSum)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of every registered term.
    pub fn hamiltonian(&self) -> PauliSum {
        let mut h = PauliSum::zero(self.n_sites());
        for term in self.terms.values() {
            for (p, c) in term.iter() {
                h.add_term(*p, *c);
            }
        }
        h
    }

    /// Sites a label is allowed to act on.
    pub fn label_support(&self, label: &TermLabel) -> Result<Support> {
        let m = &self.map;
        let r = label.index;
        let legs = |d: usize| -> Result<[usize; 2]> { Ok([m.double(d, 1)?, m.double(d, 2)?]) };
        Ok(match label.kind {
            TermKind::NodeField => Support::new([m.node(r)?]),
            TermKind::DoubleField => Support::new(legs(r)?),
            TermKind::BondRight => {
                let [a, b] = legs(r)?;
                Support::new([m.node(r)?, a, b])
            }
            TermKind::BondLeft => {
                if r < 2 {
                    return Err(Error::OutOfRange(format!(
                        "{label} has no left double-site"
                    )));
                }
                let [a, b] = legs(r - 1)?;
                Support::new([m.node(r)?, a, b])
            }
            TermKind::Site => {
                m.role(r)?;
                Support::new([r])
            }
        })
    }

    fn term_or_zero(&self, label: TermLabel) -> PauliSum {
        self.terms
            .get(&label)
            .cloned()
            .unwrap_or_else(|| PauliSum::zero(self.n_sites()))
    }

    /// Returns a registry with `defect` applied; all other terms are untouched.
    pub fn apply_defect(&self, defect: &Defect) -> Result<TermRegistry> {
        let n = self.n_sites();
        if defect.replacement.n_sites() != n {
            return Err(Error::Dimension {
                expected: n,
                found: defect.replacement.n_sites(),
            });
        }
        if !defect.replacement.is_hermitian(1e-12) {
            return Err(Error::NotHermitian(defect.replacement.max_imag()));
        }
        let label = match &defect.target {
            DefectTarget::Term(label) => {
                if !self.terms.contains_key(label) {
                    return Err(Error::UnknownTarget(label.to_string()));
                }
                *label
            }
            DefectTarget::Site(site) => {
                if *site >= n {
                    return Err(Error::UnknownTarget(format!("site {site}")));
                }
                TermLabel::new(TermKind::Site, *site)
            }
        };
        let allowed = self.label_support(&label)?;
        if !defect.replacement.support().is_subset(&allowed) {
            return Err(Error::InvalidModel(format!(
                "defect on {label} acts outside its support"
            )));
        }
        let mut out = self.clone();
        out.terms.insert(label, defect.replacement.clone());
        Ok(out)
    }

    /// `H_p` for interior node `p`: the two plaquettes around the node,
    /// including the fields of the neighbouring nodes `p ± 1`.
    pub fn local_hamiltonian(&self, p: usize) -> Result<PauliSum> {
        self.map.check_interior(p)?;
        let labels = [
            TermLabel::new(TermKind::NodeField, p),
            TermLabel::new(TermKind::DoubleField, p),
            TermLabel::new(TermKind::BondRight, p),
            TermLabel::new(TermKind::BondLeft, p),
            TermLabel::new(TermKind::NodeField, p - 1),
            TermLabel::new(TermKind::BondRight, p - 1),
            TermLabel::new(TermKind::NodeField, p + 1),
            TermLabel::new(TermKind::BondLeft, p + 1),
        ];
        let mut h = PauliSum::zero(self.n_sites());
        for l in labels {
            h = h.add(&self.term_or_zero(l))?;
        }
        // Site defects inside the two plaquettes belong to H_p as well.
        let support = Support::new(
            [
                self.map.node(p - 1)?,
                self.map.node(p)?,
                self.map.node(p + 1)?,
                self.map.double(p - 1, 1)?,
                self.map.double(p - 1, 2)?,
                self.map.double(p, 1)?,
                self.map.double(p, 2)?,
            ]
            .into_iter(),
        );
        for (label, term) in &self.terms {
            if label.kind == TermKind::Site && support.contains(label.index) {
                h = h.add(term)?;
            }
        }
        Ok(h)
    }

    /// Splits the registry into one piece per interior node so that the
    /// pieces sum to the full Hamiltonian with no term counted twice.
    ///
    /// Node fields go to their own node. Terms attached to double-site `d`
    /// (its field and both of its bonds) go to node `d`. Anything attached to
    /// the end nodes or to double-site 1 is folded into the nearest interior
    /// node.
    pub fn partition(&self) -> Vec<(usize, PauliSum)> {
        let r_max = self.map.plaquettes;
        let clamp = |v: usize| v.clamp(2, r_max);
        let mut parts: BTreeMap<usize, PauliSum> = self
            .map
            .interior_nodes()
            .map(|p| (p, PauliSum::zero(self.n_sites())))
            .collect();
        for (label, term) in &self.terms {
            let owner = match label.kind {
                TermKind::NodeField | TermKind::DoubleField | TermKind::BondRight => {
                    clamp(label.index)
                }
                TermKind::BondLeft => clamp(label.index - 1),
                TermKind::Site => match self.map.role(label.index) {
                    Ok(SiteRole::Node(r)) => clamp(r),
                    Ok(SiteRole::Leg { double, .. }) => clamp(double),
                    Err(_) => unreachable!("site labels are validated on insertion"),
                },
            };
            let slot = parts.get_mut(&owner).expect("owner is interior");
            for (p, c) in term.iter() {
                slot.add_term(*p, *c);
            }
        }
        parts.into_iter().collect()
    }
}

/// A built spin-lace model.
#[derive(Clone, Debug)]
pub struct SpinLace {
    pub spec: SpinLaceSpec,
    pub map: SiteMap,
    pub registry: TermRegistry,
    pub hamiltonian: PauliSum,
}

impl SpinLace {
    pub fn n_sites(&self) -> usize {
        self.map.n_sites()
    }

    pub fn singlet_projector(&self, r: usize) -> Result<PauliSum> {
        singlet_projector(r, &self.map)
    }

    pub fn total_spin(&self, r: usize, axis: Axis) -> Result<PauliSum> {
        total_spin(r, axis, &self.map)
    }

    pub fn symmetry(&self, p: usize) -> Result<PauliSum> {
        dynamical_symmetry_op(p, &self.map)
    }

    /// `(p, A_p)` for every interior node.
    pub fn symmetries(&self) -> Result<Vec<(usize, PauliSum)>> {
        self.map
            .interior_nodes()
            .map(|p| Ok((p, dynamical_symmetry_op(p, &self.map)?)))
            .collect()
    }

    pub fn local_hamiltonian(&self, p: usize) -> Result<PauliSum> {
        self.registry.local_hamiltonian(p)
    }

    /// Rebuilds the model with one more defect applied.
    pub fn with_defect(&self, defect: Defect) -> Result<SpinLace> {
        let registry = self.registry.apply_defect(&defect)?;
        let hamiltonian = registry.hamiltonian();
        let mut spec = self.spec.clone();
        spec.defects.push(defect);
        Ok(SpinLace {
            spec,
            map: self.map,
            registry,
            hamiltonian,
        })
    }
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Builds the Hamiltonian, its term registry and the site map.
pub fn build(spec: &SpinLaceSpec) -> Result<SpinLace> {
    spec.validate()?;
    let map = SiteMap::new(spec.plaquettes);
    let n = map.n_sites();
    let mut terms = BTreeMap::new();

    for (i, &b) in spec.node_fields.iter().enumerate() {
        let r = i + 1;
        terms.insert(
            TermLabel::new(TermKind::NodeField, r),
            PauliSum::single(n, map.node(r)?, Pauli::Z, b)?,
        );
    }
    for (i, &b) in spec.double_fields.iter().enumerate() {
        let r = i + 1;
        terms.insert(
            TermLabel::new(TermKind::DoubleField, r),
            total_spin(r, Axis::Z, &map)?.scaled_real(b),
        );
    }
    for (i, j) in spec.couplings.iter().enumerate() {
        let d = i + 1;
        terms.insert(TermLabel::new(TermKind::BondRight, d), bond(&map, d, d, j)?);
        terms.insert(
            TermLabel::new(TermKind::BondLeft, d + 1),
            bond(&map, d + 1, d, j)?,
        );
    }

    let mut registry = TermRegistry { map, terms };
    for d in &spec.defects {
        registry = registry.apply_defect(d)?;
    }
    let hamiltonian = registry.hamiltonian();
    Ok(SpinLace {
        spec: spec.clone(),
        map,
        registry,
        hamiltonian,
    })
}

/// `Σ_a J^a σ^a_node S^a_double`.
fn bond(map: &SiteMap, node: usize, double: usize, j: &[f64; 3]) -> Result<PauliSum> {
    let n = map.n_sites();
    let mut out = PauliSum::zero(n);
    for axis in Axis::ALL {
        let coupling = j[axis.index()];
        if coupling == 0.0 {
            continue;
        }
        let s = PauliSum::single(n, map.node(node)?, axis.pauli(), coupling)?;
        out = out.add(&s.mul(&total_spin(double, axis, map)?)?)?;
    }
    Ok(out)
}

/// `S^a = σ^a_{leg 1} + σ^a_{leg 2}` on double-site `r`.
pub fn total_spin(r: usize, axis: Axis, map: &SiteMap) -> Result<PauliSum> {
    let n = map.n_sites();
    PauliSum::single(n, map.double(r, 1)?, axis.pauli(), 1.0)?.add(&PauliSum::single(
        n,
        map.double(r, 2)?,
        axis.pauli(),
        1.0,
    )?)
}

/// Rank-one projector onto the two-leg singlet `(|↑↓⟩ − |↓↑⟩)/√2` of
/// double-site `r`, `(I − XX − YY − ZZ)/4`.
pub fn singlet_projector(r: usize, map: &SiteMap) -> Result<PauliSum> {
    let n = map.n_sites();
    let (a, b) = (map.double(r, 1)?, map.double(r, 2)?);
    let pair = |p: Pauli| -> Result<PauliSum> {
        PauliSum::single(n, a, p, 1.0)?.mul(&PauliSum::single(n, b, p, 1.0)?)
    };
    let mut out = PauliSum::identity(n).scaled(real(0.25));
    out = out.axpy(real(-0.25), &pair(Pauli::Z)?)?;
    out = out.axpy(real(-0.25), &pair(Pauli::X)?)?;
    out = out.axpy(real(-0.25), &pair(Pauli::Y)?)?;
    Ok(out)
}

/// `A_p = P_{2r−2} σ^-_{2r−1} P_{2r}` for interior node `p = r`.
pub fn dynamical_symmetry_op(p: usize, map: &SiteMap) -> Result<PauliSum> {
    map.check_interior(p)?;
    let left = singlet_projector(p - 1, map)?;
    let right = singlet_projector(p, map)?;
    let lower = PauliSum::sigma_minus(map.n_sites(), map.node(p)?)?;
    left.mul(&lower)?.mul(&right)
}
