//! Observables named by lattice role.
//!
//! | syntax          | operator                                   |
//! |-----------------|--------------------------------------------|
//! | `node:r:a`      | `σ^a` on node `r` (1..=R+1)                |
//! | `double:r:a`    | `S^a = σ^a + σ^a` on double-site `r`       |
//! | `leg:r:l:a`     | `σ^a` on leg `l` (1 or 2) of double-site `r` |
//! | `sym:p`         | the lowering symmetry `A_p` (2..=R)        |
//! | `charge:p`      | `A_p† A_p`                                 |
//! | `raw:path`      | Pauli text file, relative to the config    |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use spinlace_core::{Axis, PauliSum, SpinLace};

#[derive(Clone, Debug, PartialEq)]
pub enum Selector {
    Node { r: usize, axis: Axis },
    Double { r: usize, axis: Axis },
    Leg { r: usize, leg: usize, axis: Axis },
    Sym { p: usize },
    Charge { p: usize },
    Raw { path: PathBuf },
}

fn index(s: &str) -> Result<usize> {
    s.parse().with_context(|| format!("bad index {s:?}"))
}

fn axis(s: &str) -> Result<Axis> {
    Ok(s.parse()?)
}

impl FromStr for Selector {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("raw:") {
            if path.is_empty() {
                bail!("raw: needs a file path");
            }
            return Ok(Selector::Raw { path: path.into() });
        }
        let parts: Vec<&str> = s.split(':').collect();
        Ok(match parts.as_slice() {
            ["node", r, a] => Selector::Node { r: index(r)?, axis: axis(a)? },
            ["double", r, a] => Selector::Double { r: index(r)?, axis: axis(a)? },
            ["leg", r, l, a] => Selector::Leg { r: index(r)?, leg: index(l)?, axis: axis(a)? },
            ["sym", p] => Selector::Sym { p: index(p)? },
            ["charge", p] => Selector::Charge { p: index(p)? },
            _ => bail!(
                "unrecognised selector {s:?} (node:r:axis, double:r:axis, leg:r:l:axis, sym:p, charge:p, raw:path)"
            ),
        })
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = |x: &Axis| format!("{x:?}").to_lowercase();
        match self {
            Selector::Node { r, axis } => write!(f, "node:{r}:{}", a(axis)),
            Selector::Double { r, axis } => write!(f, "double:{r}:{}", a(axis)),
            Selector::Leg { r, leg, axis } => write!(f, "leg:{r}:{leg}:{}", a(axis)),
            Selector::Sym { p } => write!(f, "sym:{p}"),
            Selector::Charge { p } => write!(f, "charge:{p}"),
            Selector::Raw { path } => write!(f, "raw:{}", path.display()),
        }
    }
}

impl Selector {
    /// Checks indices against a lattice with `plaquettes` double-sites.
    pub fn check(&self, plaquettes: usize) -> Result<()> {
        let r_max = plaquettes;
        let within = |what: &str, v: usize, lo: usize, hi: usize| -> Result<()> {
            if v < lo || v > hi {
                bail!("{what} {v} out of range {lo}..={hi}");
            }
            Ok(())
        };
        match self {
            Selector::Node { r, .. } => within("node", *r, 1, r_max + 1),
            Selector::Double { r, .. } => within("double-site", *r, 1, r_max),
            Selector::Leg { r, leg, .. } => {
                within("double-site", *r, 1, r_max)?;
                within("leg", *leg, 1, 2)
            }
            Selector::Sym { p } | Selector::Charge { p } => within("interior node", *p, 2, r_max),
            Selector::Raw { .. } => Ok(()),
        }
    }

    /// The node this observable is attached to, if any.
    pub fn node(&self) -> Option<usize> {
        match self {
            Selector::Node { r, .. } => Some(*r),
            Selector::Sym { p } | Selector::Charge { p } => Some(*p),
            _ => None,
        }
    }

    pub fn operator(&self, lace: &SpinLace, base_dir: &Path) -> Result<PauliSum> {
        self.check(lace.spec.plaquettes)?;
        let n = lace.n_sites();
        let map = &lace.map;
        Ok(match self {
            Selector::Node { r, axis } => PauliSum::single(n, map.node(*r)?, axis.pauli(), 1.0)?,
            Selector::Double { r, axis } => lace.total_spin(*r, *axis)?,
            Selector::Leg { r, leg, axis } => {
                PauliSum::single(n, map.double(*r, *leg)?, axis.pauli(), 1.0)?
            }
            Selector::Sym { p } => lace.symmetry(*p)?,
            Selector::Charge { p } => {
                let a = lace.symmetry(*p)?;
                a.adjoint().mul(&a)?
            }
            Selector::Raw { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .with_context(|| format!("reading {}", full.display()))?;
                let op = PauliSum::from_text(&text, Some(n))
                    .with_context(|| format!("parsing {}", full.display()))?;
                if op.n_sites() != n {
                    bail!(
                        "{}: operator on {} sites, lattice has {n}",
                        full.display(),
                        op.n_sites()
                    );
                }
                op
            }
        })
    }
}

/// `σ^x` on node `r`, the probe used throughout.
pub fn node_x(r: usize) -> Selector {
    Selector::Node { r, axis: Axis::X }
}
