//! One function per task; each returns its files and a short summary.

use std::cell::OnceCell;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use spinlace_core::dynamics::{typicality_correlation, Propagator};
use spinlace_core::symmetry::{eigenoperator_search, CommutantConstraint, SearchConfig};
use spinlace_core::{
    build, check_delta_structure_with, finite_time_ft, omega_grid, peak_report, verify_conserved,
    verify_eigenoperator, Axis, EvolutionPlan, PauliSum, PeakReport, SpectralFrame, SpinLace,
    Support, ThermalSpec, TimeSeries,
};

use crate::config::{Resolved, Task, Trace};
use crate::output::{Artifact, Stamp};
use crate::selector::{node_x, Selector};

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
    /// False when a verification found violations.
    pub ok: bool,
}

/// Model, time grid and lazily built propagation machinery shared by the
/// observables of one run.
struct Session<'a> {
    res: &'a Resolved,
    base_dir: PathBuf,
    stamp: Stamp,
    lace: SpinLace,
    times: Vec<f64>,
    thermal: ThermalSpec,
    frame: OnceCell<SpectralFrame>,
    propagator: OnceCell<Propagator>,
}

impl<'a> Session<'a> {
    fn new(res: &'a Resolved, base_dir: &Path, stamp: Stamp) -> Result<Self> {
        let lace = build(&res.spec).context("building the model")?;
        let d = &res.config.dynamics;
        let times = spinlace_core::series::time_grid(d.dt, d.t_max).context("dynamics")?;
        Ok(Session {
            res,
            base_dir: base_dir.to_path_buf(),
            stamp,
            lace,
            times,
            thermal: d.thermal()?,
            frame: OnceCell::new(),
            propagator: OnceCell::new(),
        })
    }

    fn frame(&self) -> Result<&SpectralFrame> {
        if let Some(f) = self.frame.get() {
            return Ok(f);
        }
        let f = SpectralFrame::new(&self.lace.hamiltonian).with_context(|| {
            format!("diagonalizing the L = {} Hamiltonian", self.lace.n_sites())
        })?;
        Ok(self.frame.get_or_init(|| f))
    }

    fn propagator(&self) -> Result<&Propagator> {
        if let Some(p) = self.propagator.get() {
            return Ok(p);
        }
        let p = Propagator::new(&self.lace.hamiltonian, &EvolutionPlan::default())?;
        Ok(self.propagator.get_or_init(|| p))
    }

    fn operator(&self, sel: &Selector) -> Result<PauliSum> {
        sel.operator(&self.lace, &self.base_dir)
    }

    fn parse(&self, field: &str, text: &str) -> Result<Selector> {
        text.parse().with_context(|| field.to_string())
    }

    /// `⟨O(t) B⟩`, labelled `"O B"`.
    fn correlation(&self, o: &Selector, b: &Selector, connected: bool) -> Result<TimeSeries> {
        let (oo, bo) = (self.operator(o)?, self.operator(b)?);
        let mut ts = match self.res.config.dynamics.trace {
            Trace::Exact if connected => {
                self.frame()?
                    .connected_correlation(&oo, &bo, &self.times, &self.thermal)?
            }
            Trace::Exact => self
                .frame()?
                .correlation(&oo, &bo, &self.times, &self.thermal)?,
            Trace::Typicality => {
                if connected {
                    bail!("connected correlators need dynamics.trace = \"exact\"");
                }
                let d = &self.res.config.dynamics;
                typicality_correlation(
                    self.propagator()?,
                    &oo,
                    &bo,
                    &self.times,
                    &self.thermal,
                    d.samples,
                    self.res.config.seed,
                )?
            }
        };
        ts.label = format!("{o} {b}");
        Ok(ts)
    }

    fn series_csv(&self, ts: &TimeSeries) -> String {
        ts.to_csv(&self.stamp.pairs())
    }

    /// Transform over `[0, omega_max]` and the peak report against `predicted`.
    fn spectrum(
        &self,
        ts: &TimeSeries,
        predicted: f64,
        omega_max: f64,
    ) -> Result<(String, PeakReport)> {
        let window =
            ts.times.last().copied().unwrap_or(0.0) - ts.times.first().copied().unwrap_or(0.0);
        let grid = omega_grid(window, omega_max)?;
        let spec = finite_time_ft(ts, &grid)?;
        let report = peak_report(&spec, predicted);
        let mut pairs = self.stamp.pairs();
        pairs.push(("label", ts.label.clone()));
        pairs.push(("predicted", format!("{predicted}")));
        Ok((spec.to_csv(&pairs), report))
    }

    /// `2|B|` on `node`.
    fn double_field_frequency(&self, node: usize) -> f64 {
        2.0 * self.res.spec.node_fields[node - 1].abs()
    }
}

pub fn run(res: &Resolved, base_dir: &Path) -> Result<Outcome> {
    let stamp = Stamp::from_resolved(res);
    let s = Session::new(res, base_dir, stamp)?;
    match res.task {
        Task::Verify => verify(&s),
        Task::Search => search(&s),
        Task::Evolve => evolve(&s),
        Task::Respond => respond(&s),
        Task::Spectrum => spectrum(&s),
        Task::FullFig3 => full_fig3(&s),
    }
}

fn verify(s: &Session) -> Result<Outcome> {
    let tol = s.res.config.verify.tolerance;
    let lace = &s.lace;
    let syms = lace.symmetries()?;
    let omegas: Vec<f64> = syms
        .iter()
        .map(|(p, _)| -2.0 * s.res.spec.node_fields[p - 1])
        .collect();
    let delta = check_delta_structure_with(&lace.registry, &syms, &omegas)?;
    let mut table = String::from("p,expected_omega,fitted_omega,residual,charge_residual,passes\n");
    let mut failing = Vec::new();
    for ((p, a), w) in syms.iter().zip(&omegas) {
        let fit = verify_eigenoperator(&lace.hamiltonian, a)?;
        let residual = lace
            .hamiltonian
            .commutator(a)?
            .axpy(num_complex::Complex64::new(-w, 0.0), a)?
            .hs_norm();
        let charge = verify_conserved(&lace.hamiltonian, &a.adjoint().mul(a)?)?;
        let passes = residual < tol && charge < tol;
        if !passes {
            failing.push(*p);
        }
        let _ = writeln!(
            table,
            "{p},{w:.15e},{:.15e},{residual:.6e},{charge:.6e},{passes}",
            fit.omega
        );
    }
    let ok = failing.is_empty() && delta.passes(tol);
    let mut summary = format!(
        "verify: L = {}, {} symmetries, max delta-structure residual {:.3e} (tolerance {tol:e})\n",
        lace.n_sites(),
        syms.len(),
        delta.max_residual()
    );
    if failing.is_empty() {
        summary.push_str("every A_p is an eigenoperator of H with its node's frequency\n");
    } else {
        let _ = writeln!(summary, "violated at p = {failing:?}");
    }
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("delta_structure.csv", s.stamp.comment(&delta.to_csv())),
            Artifact::new("symmetries.csv", s.stamp.comment(&table)),
        ],
        summary,
        ok,
    })
}

fn search(s: &Session) -> Result<Outcome> {
    let cfg = s
        .res
        .config
        .search
        .as_ref()
        .context("search: section missing")?;
    let lace = &s.lace;
    let p = cfg.p;
    let hp = lace.local_hamiltonian(p)?;
    let known = lace.symmetry(p)?;
    let interior = match &cfg.interior {
        Some(sites) => Support::new(sites.iter().copied()),
        None => known.support(),
    };
    let constraints = if cfg.constrain_spin {
        CommutantConstraint::new(
            [p - 1, p]
                .iter()
                .flat_map(|&d| Axis::ALL.map(|ax| lace.total_spin(d, ax)))
                .collect::<spinlace_core::Result<Vec<_>>>()?,
        )
    } else {
        CommutantConstraint::none()
    };
    let config = SearchConfig {
        max_sites: cfg.max_sites,
        ..SearchConfig::default()
    };
    let out = eigenoperator_search(&hp, &interior, &constraints, &config)?;
    let omega = -2.0 * s.res.spec.node_fields[p - 1];
    let unit = spinlace_core::symmetry::normalize_operator(&known)?;
    let mut table = String::from("index,omega,residual,group,overlap_with_symmetry,support\n");
    let mut ops = String::new();
    for (i, r) in out.results.iter().enumerate() {
        let group = out
            .groups
            .iter()
            .position(|g| g.members.contains(&i))
            .unwrap_or(usize::MAX);
        let overlap = r.operator.hs_inner(&unit)?.norm();
        let sites: Vec<String> = r
            .operator
            .support()
            .sites()
            .map(|v| v.to_string())
            .collect();
        let _ = writeln!(
            table,
            "{i},{:.12e},{:.3e},{group},{overlap:.12e},{}",
            r.omega,
            r.residual,
            sites.join(" ")
        );
        let _ = writeln!(ops, "# index={i} omega={:.12e}", r.omega);
        ops.push_str(&r.operator.to_text());
    }
    let tol = 1e-9 * omega.abs().max(1.0);
    let group_overlap = match out.group_for(omega, tol) {
        Some(g) => out.group_overlap(g, &known)?,
        None => 0.0,
    };
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "search at p = {p}: basis {} -> constrained {} -> invariant {}; {} eigenpairs in {} frequency groups ({} rejected)",
        out.basis_dim,
        out.constrained_dim,
        out.invariant_dim,
        out.results.len(),
        out.groups.len(),
        out.rejected
    );
    let _ = writeln!(
        summary,
        "fraction of the known symmetry in the omega = {omega:.9} eigenspace: {group_overlap:.12}"
    );
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("eigenpairs.csv", s.stamp.comment(&table)),
            Artifact::new("eigenoperators.txt", s.stamp.comment(&ops)),
            Artifact::new("search_summary.txt", s.stamp.comment(&summary)),
        ],
        summary,
        ok: true,
    })
}

fn evolve(s: &Session) -> Result<Outcome> {
    let cfg = s
        .res
        .config
        .evolve
        .as_ref()
        .context("evolve: section missing")?;
    let o = s.parse("evolve.observable", &cfg.observable)?;
    let b = s.parse("evolve.probe", &cfg.probe)?;
    let ts = s.correlation(&o, &b, cfg.connected)?;
    let summary = format!(
        "evolve: <{o}(t) {b}> at {} times; C(0) = {:.9e}\n",
        ts.len(),
        ts.values[0]
    );
    Ok(Outcome {
        artifacts: vec![Artifact::new("correlation.csv", s.series_csv(&ts))],
        summary,
        ok: true,
    })
}

fn respond(s: &Session) -> Result<Outcome> {
    let cfg = s
        .res
        .config
        .respond
        .as_ref()
        .context("respond: section missing")?;
    if s.res.config.dynamics.trace != Trace::Exact {
        bail!("respond: needs dynamics.trace = \"exact\"");
    }
    let o = s.parse("respond.observable", &cfg.observable)?;
    let v = s.parse("respond.perturbation", &cfg.perturbation)?;
    let (oo, vo) = (s.operator(&o)?, s.operator(&v)?);
    let frame = s.frame()?;
    let mut lin = frame.linear_response(&oo, &vo, &s.times, &s.thermal)?;
    lin.label = format!("{o} {v}");
    let mut artifacts = vec![Artifact::new("response.csv", s.series_csv(&lin))];
    let mut summary = format!(
        "respond: -i<[{o}(t), {v}]>, max |response| {:.6e}\n",
        lin.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    );
    for (i, &eps) in cfg.kicks.iter().enumerate() {
        let mut kicked = frame.kicked_response(&oo, &vo, eps, &s.times, &s.thermal)?;
        kicked.label = format!("{o} {v} eps={eps:e}");
        let dev = kicked.max_abs_diff(&lin);
        let _ = writeln!(
            summary,
            "kick eps = {eps:e}: max deviation {dev:.6e}, deviation / eps {:.6e}",
            dev / eps.abs()
        );
        artifacts.push(Artifact::new(
            format!("kicked_{i}.csv"),
            s.series_csv(&kicked),
        ));
    }
    Ok(Outcome {
        artifacts,
        summary,
        ok: true,
    })
}

fn spectrum(s: &Session) -> Result<Outcome> {
    let cfg = s
        .res
        .config
        .spectrum
        .as_ref()
        .context("spectrum: section missing")?;
    let o = s.parse("spectrum.observable", &cfg.observable)?;
    let b = s.parse("spectrum.probe", &cfg.probe)?;
    let predicted = cfg
        .predicted
        .unwrap_or_else(|| s.double_field_frequency(b.node().or(o.node()).unwrap_or(2)));
    let omega_max = match cfg.omega_max {
        Some(w) => w,
        None if predicted > 0.0 => 2.0 * predicted,
        None => bail!("spectrum.omega_max: required when the predicted frequency is zero"),
    };
    let ts = s.correlation(&o, &b, false)?;
    let (csv, report) = s.spectrum(&ts, predicted, omega_max)?;
    let summary = format!("spectrum: <{o}(t) {b}>\n{}", report.to_text());
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("correlation.csv", s.series_csv(&ts)),
            Artifact::new("spectrum.csv", csv),
            Artifact::new("peaks.txt", s.stamp.comment(&report.to_text())),
        ],
        summary,
        ok: true,
    })
}

/// The three correlators with the node `σ^x` probe, and the spectra of the
/// node and double-site ones.
fn full_fig3(s: &Session) -> Result<Outcome> {
    let r = s.res.spec.plaquettes;
    let p = s.res.config.fig3.p.unwrap_or((r + 2) / 2);
    let probe = node_x(p);
    let predicted = s.double_field_frequency(p);
    if predicted == 0.0 {
        bail!("model: node {p} carries no field, so there is no frequency to flag");
    }
    let observables = [
        ("sigma_x", node_x(p), true),
        ("symmetry", Selector::Sym { p }, false),
        (
            "spin_x",
            Selector::Double {
                r: p,
                axis: Axis::X,
            },
            true,
        ),
    ];
    let mut artifacts = Vec::new();
    let mut summary =
        format!("full-fig3: p = {p}, probe {probe}, predicted frequency {predicted:.9}\n");
    for (name, o, with_spectrum) in observables {
        let ts = s.correlation(&o, &probe, false)?;
        artifacts.push(Artifact::new(format!("fig3_{name}.csv"), s.series_csv(&ts)));
        if with_spectrum {
            let (csv, report) = s.spectrum(&ts, predicted, 2.0 * predicted)?;
            let _ = writeln!(
                summary,
                "{name}: {} peaks, dominant at predicted: {}, any at predicted: {}",
                report.peaks.len(),
                report.dominant_matches(),
                report.matches_predicted()
            );
            artifacts.push(Artifact::new(format!("spectrum_{name}.csv"), csv));
            artifacts.push(Artifact::new(
                format!("peaks_{name}.txt"),
                s.stamp.comment(&report.to_text()),
            ));
        } else {
            let amp: Vec<f64> = ts.values.iter().map(|c| c.norm()).collect();
            let spread = amp.iter().copied().fold(f64::MIN, f64::max)
                - amp.iter().copied().fold(f64::MAX, f64::min);
            let _ = writeln!(summary, "{name}: |C| = {:.9e}, spread {spread:.3e}", amp[0]);
        }
    }
    Ok(Outcome {
        artifacts,
        summary,
        ok: true,
    })
}
