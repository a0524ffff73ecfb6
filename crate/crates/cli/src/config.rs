//! Experiment configuration: TOML schema, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use spinlace_core::{
    Defect, DefectTarget, PauliSum, SpinLaceSpec, TermKind, TermLabel, ThermalSpec,
};

use crate::selector::Selector;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Verify,
    Search,
    Evolve,
    Respond,
    Spectrum,
    FullFig3,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Verify => "verify",
            Task::Search => "search",
            Task::Evolve => "evolve",
            Task::Respond => "respond",
            Task::Spectrum => "spectrum",
            Task::FullFig3 => "full-fig3",
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "verify" => Task::Verify,
            "search" => Task::Search,
            "evolve" => Task::Evolve,
            "respond" => Task::Respond,
            "spectrum" => Task::Spectrum,
            "full-fig3" => Task::FullFig3,
            _ => {
                return Err(format!(
                    "unknown task {s:?} (verify, search, evolve, respond, spectrum, full-fig3)"
                ))
            }
        })
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Top-level config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub task: Option<Task>,
    /// Output directory, relative to the working directory.
    pub output: Option<PathBuf>,
    /// Seeds disorder (unless it has its own) and typicality sampling.
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    pub search: Option<SearchTask>,
    pub evolve: Option<CorrelatorTask>,
    pub respond: Option<RespondTask>,
    pub spectrum: Option<SpectrumTask>,
    #[serde(default)]
    pub fig3: Fig3Task,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Number of double-sites `R`; the lattice has `3R + 1` sites.
    pub plaquettes: usize,
    /// Default field on every node and double-site.
    pub field: f64,
    /// Default `(J^x, J^y, J^z)` on every bond.
    pub couplings: [f64; 3],
    /// Per-node fields (`R + 1` entries), overriding `field`.
    pub node_fields: Option<Vec<f64>>,
    /// Per-double-site fields (`R` entries), overriding `field`.
    pub double_fields: Option<Vec<f64>>,
    /// Per-double-site couplings (`R` triples), overriding `couplings`.
    pub bond_couplings: Option<Vec<[f64; 3]>>,
    pub disorder: Option<DisorderConfig>,
    #[serde(default)]
    pub defects: Vec<DefectConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    #[serde(default)]
    pub coupling_spread: f64,
    #[serde(default)]
    pub field_spread: f64,
    pub seed: Option<u64>,
}

/// Replaces one registry term (`term = "bond_left:2"`) or installs a
/// single-site term (`site = 4`). The operator uses the Pauli text format,
/// inline or from a file relative to the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectConfig {
    pub term: Option<String>,
    pub site: Option<usize>,
    pub operator: Option<String>,
    pub operator_file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trace {
    Exact,
    Typicality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub t_max: f64,
    pub beta: f64,
    pub trace: Trace,
    pub samples: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            dt: 0.05,
            t_max: 20.0,
            beta: 0.0,
            trace: Trace::Exact,
            samples: 50,
        }
    }
}

impl DynamicsConfig {
    pub fn thermal(&self) -> Result<ThermalSpec> {
        ThermalSpec::new(self.beta).context("dynamics.beta")
    }

    pub fn mode_name(&self) -> &'static str {
        match self.trace {
            Trace::Exact => "exact",
            Trace::Typicality => "typicality",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { tolerance: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchTask {
    /// Interior node whose two-plaquette Hamiltonian is searched.
    pub p: usize,
    /// Sites the candidate operators live on; defaults to the support of
    /// the known symmetry at `p`.
    pub interior: Option<Vec<usize>>,
    /// Require commuting with the total spin of both neighbouring doubles.
    #[serde(default = "yes")]
    pub constrain_spin: bool,
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
}

fn yes() -> bool {
    true
}

fn default_max_sites() -> usize {
    6
}

/// `C(t) = ⟨O(t) B⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelatorTask {
    pub observable: String,
    pub probe: String,
    #[serde(default)]
    pub connected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RespondTask {
    pub observable: String,
    pub perturbation: String,
    /// Kick strengths; each also writes the kicked-evolution series.
    #[serde(default)]
    pub kicks: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumTask {
    pub observable: String,
    pub probe: String,
    /// Frequency to flag; defaults to twice the field on the probe's node.
    pub predicted: Option<f64>,
    /// Upper end of the grid; defaults to twice the predicted frequency.
    pub omega_max: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig3Task {
    /// Interior node carrying the kick; defaults to the middle one.
    pub p: Option<usize>,
}

/// A config with command-line overrides applied, checked, and turned into
/// a model spec.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: Config,
    pub task: Task,
    pub output: PathBuf,
    pub spec: SpinLaceSpec,
    /// Canonical TOML of `config` without the output directory; hashed
    /// into every output.
    pub canonical: String,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).context("invalid config")?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                cfg.schema_version
            );
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Applies overrides, inlines defect operators read from files, and
    /// validates every section the task uses.
    pub fn resolve(
        mut self,
        base_dir: &Path,
        task: Option<Task>,
        seed: Option<u64>,
        output: Option<PathBuf>,
    ) -> Result<Resolved> {
        if let Some(t) = task {
            self.task = Some(t);
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = output {
            self.output = Some(o);
        }
        let task = self
            .task
            .context("task: not set in the config or with --task")?;
        let output = self.output.clone().unwrap_or_else(|| PathBuf::from("out"));
        for (i, d) in self.model.defects.iter_mut().enumerate() {
            if let Some(file) = d.operator_file.take() {
                if d.operator.is_some() {
                    bail!("model.defects[{i}]: give operator or operator_file, not both");
                }
                let path = base_dir.join(&file);
                d.operator = Some(std::fs::read_to_string(&path).with_context(|| {
                    format!(
                        "model.defects[{i}].operator_file: reading {}",
                        path.display()
                    )
                })?);
            }
        }
        let spec = self.model.to_spec(self.seed)?;
        self.validate(task, &spec)?;
        // where the files go is not part of what they contain
        let canonical = toml::to_string(&Config {
            output: None,
            ..self.clone()
        })
        .context("serializing resolved config")?;
        Ok(Resolved {
            config: self,
            task,
            output,
            spec,
            canonical,
        })
    }

    fn validate(&self, task: Task, spec: &SpinLaceSpec) -> Result<()> {
        let d = &self.dynamics;
        if matches!(
            task,
            Task::Evolve | Task::Respond | Task::Spectrum | Task::FullFig3
        ) {
            if !(d.dt > 0.0 && d.dt.is_finite()) {
                bail!("dynamics.dt: must be positive, got {}", d.dt);
            }
            if !(d.t_max >= d.dt && d.t_max.is_finite()) {
                bail!("dynamics.t_max: must be at least dt, got {}", d.t_max);
            }
            d.thermal()?;
            if d.trace == Trace::Typicality {
                if d.samples < 1 {
                    bail!("dynamics.samples: must be at least 1");
                }
                if d.beta != 0.0 {
                    bail!("dynamics.beta: typicality supports beta = 0 only");
                }
            }
        }
        if !(self.verify.tolerance > 0.0) {
            bail!("verify.tolerance: must be positive");
        }
        let r = spec.plaquettes;
        let check_sel = |field: &str, text: &str| -> Result<()> {
            let sel: Selector = text.parse().with_context(|| field.to_string())?;
            sel.check(r).with_context(|| field.to_string())
        };
        match task {
            Task::Verify => {}
            Task::Search => {
                let s = self.search.as_ref().context("search: section missing")?;
                if !(2..=r).contains(&s.p) {
                    bail!("search.p: interior nodes are 2..={r}, got {}", s.p);
                }
                if let Some(sites) = &s.interior {
                    if let Some(bad) = sites.iter().find(|&&x| x >= spec.n_sites()) {
                        bail!("search.interior: site {bad} outside 0..{}", spec.n_sites());
                    }
                }
            }
            Task::Evolve => {
                let e = self.evolve.as_ref().context("evolve: section missing")?;
                check_sel("evolve.observable", &e.observable)?;
                check_sel("evolve.probe", &e.probe)?;
                if e.connected && d.trace == Trace::Typicality {
                    bail!("evolve.connected: needs dynamics.trace = \"exact\"");
                }
            }
            Task::Respond => {
                let e = self.respond.as_ref().context("respond: section missing")?;
                check_sel("respond.observable", &e.observable)?;
                check_sel("respond.perturbation", &e.perturbation)?;
                if let Some(k) = e.kicks.iter().find(|k| !(k.abs() > 0.0 && k.is_finite())) {
                    bail!("respond.kicks: strengths must be nonzero and finite, got {k}");
                }
                if d.trace == Trace::Typicality {
                    bail!("respond: linear response needs dynamics.trace = \"exact\"");
                }
            }
            Task::Spectrum => {
                let e = self
                    .spectrum
                    .as_ref()
                    .context("spectrum: section missing")?;
                check_sel("spectrum.observable", &e.observable)?;
                check_sel("spectrum.probe", &e.probe)?;
                if let Some(w) = e.omega_max {
                    if !(w > 0.0 && w.is_finite()) {
                        bail!("spectrum.omega_max: must be positive, got {w}");
                    }
                }
            }
            Task::FullFig3 => {
                if let Some(p) = self.fig3.p {
                    if !(2..=r).contains(&p) {
                        bail!("fig3.p: interior nodes are 2..={r}, got {p}");
                    }
                }
            }
        }
        Ok(())
    }
}

impl ModelConfig {
    pub fn to_spec(&self, seed: u64) -> Result<SpinLaceSpec> {
        let r = self.plaquettes;
        if r < 2 {
            bail!("model.plaquettes: need at least 2, got {r}");
        }
        let mut spec = SpinLaceSpec::ordered(r, self.field, self.couplings);
        let sized = |name: &str, got: usize, want: usize| -> Result<()> {
            if got != want {
                bail!("model.{name}: expected {want} entries for {r} plaquettes, got {got}");
            }
            Ok(())
        };
        if let Some(v) = &self.node_fields {
            sized("node_fields", v.len(), r + 1)?;
            spec.node_fields = v.clone();
        }
        if let Some(v) = &self.double_fields {
            sized("double_fields", v.len(), r)?;
            spec.double_fields = v.clone();
        }
        if let Some(v) = &self.bond_couplings {
            sized("bond_couplings", v.len(), r)?;
            spec.couplings = v.clone();
        }
        if let Some(d) = &self.disorder {
            if !(d.coupling_spread >= 0.0 && d.field_spread >= 0.0) {
                bail!("model.disorder: spreads must be non-negative");
            }
            spec = spec.with_disorder(d.seed.unwrap_or(seed), d.coupling_spread, d.field_spread);
        }
        let n = spec.n_sites();
        for (i, d) in self.defects.iter().enumerate() {
            let field = format!("model.defects[{i}]");
            let text = d
                .operator
                .as_deref()
                .with_context(|| format!("{field}: operator or operator_file required"))?;
            let replacement =
                PauliSum::from_text(text, Some(n)).with_context(|| format!("{field}.operator"))?;
            let target = match (&d.term, d.site) {
                (Some(t), None) => {
                    DefectTarget::Term(parse_term(t).with_context(|| format!("{field}.term"))?)
                }
                (None, Some(s)) => DefectTarget::Site(s),
                _ => bail!("{field}: give exactly one of term or site"),
            };
            spec.defects.push(Defect {
                target,
                replacement,
            });
        }
        spec.validate().context("model")?;
        Ok(spec)
    }
}

/// `kind:index`, e.g. `bond_left:2`.
fn parse_term(text: &str) -> Result<TermLabel> {
    let (kind, index) = text
        .split_once(':')
        .with_context(|| format!("expected kind:index, got {text:?}"))?;
    let kind: TermKind = kind.parse()?;
    let index: usize = index
        .parse()
        .with_context(|| format!("bad term index {index:?}"))?;
    Ok(TermLabel::new(kind, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
task = "verify"

[model]
plaquettes = 3
field = 3.141592653589793
couplings = [1.0, 2.0, 0.5]
"#;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let r = Config::parse(MINIMAL)
            .unwrap()
            .resolve(Path::new("."), None, None, None)
            .unwrap();
        assert_eq!(r.task, Task::Verify);
        assert_eq!(r.output, PathBuf::from("out"));
        assert_eq!(r.spec.n_sites(), 10);
        assert_eq!(r.config.dynamics, DynamicsConfig::default());
        assert!(r.canonical.contains("schema_version = 1"));
    }

    #[test]
    fn overrides_change_the_canonical_form() {
        let a = Config::parse(MINIMAL)
            .unwrap()
            .resolve(Path::new("."), None, None, None)
            .unwrap();
        let b = Config::parse(MINIMAL)
            .unwrap()
            .resolve(Path::new("."), None, Some(9), None)
            .unwrap();
        assert_ne!(a.canonical, b.canonical);
        assert_eq!(b.config.seed, 9);
    }

    #[test]
    fn unknown_fields_and_versions_are_rejected() {
        let err = Config::parse(&MINIMAL.replace("field =", "feild =")).unwrap_err();
        assert!(format!("{err:#}").contains("feild"), "{err:#}");
        let err = Config::parse(&MINIMAL.replace("schema_version = 1", "schema_version = 2"))
            .unwrap_err();
        assert!(format!("{err:#}").contains("schema_version"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Config::parse(&MINIMAL.replace("plaquettes = 3", "plaquettes = \"three\""))
            .unwrap_err();
        assert!(format!("{err:#}").contains("line 6"), "{err:#}");
    }

    #[test]
    fn model_arrays_are_sized() {
        let text = MINIMAL.replace("couplings =", "node_fields = [1.0, 2.0]\ncouplings =");
        let err = Config::parse(&text)
            .unwrap()
            .resolve(Path::new("."), None, None, None)
            .unwrap_err();
        assert!(format!("{err:#}").contains("model.node_fields"), "{err:#}");
    }

    #[test]
    fn defects_are_parsed() {
        let text = format!(
            "{MINIMAL}\n[[model.defects]]\nterm = \"bond_left:2\"\noperator = \"2.0 0 IXXIIIIIII\"\n"
        );
        let r = Config::parse(&text)
            .unwrap()
            .resolve(Path::new("."), None, None, None)
            .unwrap();
        assert_eq!(r.spec.defects.len(), 1);
        let bad = text.replace("bond_left:2", "bond_sideways:2");
        assert!(Config::parse(&bad)
            .unwrap()
            .resolve(Path::new("."), None, None, None)
            .is_err());
    }

    #[test]
    fn task_sections_are_required_and_checked() {
        let err = Config::parse(MINIMAL)
            .unwrap()
            .resolve(Path::new("."), Some(Task::Evolve), None, None)
            .unwrap_err();
        assert!(format!("{err:#}").contains("evolve"));
        let text =
            format!("{MINIMAL}\n[evolve]\nobservable = \"node:9:x\"\nprobe = \"node:2:x\"\n");
        let err = Config::parse(&text)
            .unwrap()
            .resolve(Path::new("."), Some(Task::Evolve), None, None)
            .unwrap_err();
        assert!(format!("{err:#}").contains("evolve.observable"), "{err:#}");
    }
}
