use std::cell::OnceCell;
use std::collections::HashMap;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{CasSpec, InputSpec, Method, RunConfig};
use crate::casci::{embed_coefficients, solve_casci, CIVector};
use crate::cc::{
    ccsd_solve, ci_to_cluster, mp2_energy, tcc_external_solve, tccsd_correction, triples_correction,
    SpinOrbitalSystem,
};
use crate::correction::{CorrectionResult, Diagnostics};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::fock_space::{build_active_hamiltonian, ActiveHamiltonian, ActiveSpacePartition, CasSpace, Determinant};
use crate::model_io::{canonical_orbitals, disordered_hubbard_chain, read_fcidump, IntegralSet, RhfOptions};
use crate::mrmp::{mrmp2_correction, standard_mrmp2, ZerothOrderOperator};
use crate::sampler::{
    estimate_occupancies, qdos_select, qsci_select, sample_shots, snap_occupancies, SelectionOutcome, ShotRecord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One output line: a (geometry, method, repeat) energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub geometry: String,
    pub method: String,
    pub repeat: usize,
    pub e_total: Option<f64>,
    pub delta_e: Option<f64>,
    pub partition: String,
    pub seed: u64,
    pub status: RowStatus,
    pub diagnostics: String,
}

/// A labelled integral set, or the reason it could not be produced.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub label: String,
    pub ints: std::result::Result<IntegralSet, String>,
}

/// Reads or generates the integrals of every input geometry. Failures are
/// kept per geometry.
pub fn load_geometries(cfg: &RunConfig) -> Vec<Geometry> {
    match &cfg.input {
        InputSpec::Fcidump { paths } => paths
            .iter()
            .map(|p| Geometry {
                label: p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()),
                ints: read_fcidump(p).map(|(ints, meta)| {
                    for w in &meta.warnings {
                        warn!("{}: {w}", p.display());
                    }
                    ints
                })
                .map_err(|e| e.to_string()),
            })
            .collect(),
        InputSpec::Hubbard { sites, t, u, periodic, disorder, disorder_seed, n_electrons, canonical } => u
            .iter()
            .map(|&u| {
                let build = || -> Result<IntegralSet> {
                    let mut ints = if *disorder != 0.0 {
                        disordered_hubbard_chain(*sites, *t, u, *disorder, *disorder_seed)?
                    } else {
                        crate::model_io::hubbard_chain(*sites, *t, u, *periodic)?
                    };
                    if let Some(n) = n_electrons {
                        ints = ints.with_electrons(*n, (*n % 2) as i32)?;
                    }
                    if *canonical {
                        ints = canonical_orbitals(&ints, &RhfOptions::default())?.0;
                    }
                    Ok(ints)
                };
                Geometry { label: format!("u={u}"), ints: build().map_err(|e| e.to_string()) }
            })
            .collect(),
    }
}

fn rcas_partition(spec: &CasSpec, ints: &IntegralSet) -> Result<ActiveSpacePartition> {
    match (&spec.core, &spec.active, &spec.virt) {
        (Some(core), Some(active), Some(virt)) => ActiveSpacePartition::new(
            ints.n_orb,
            ints.n_electrons,
            core.clone(),
            active.clone(),
            virt.clone(),
            spec.n_active_electrons.unwrap_or_default(),
        ),
        _ => ActiveSpacePartition::fermi_window(
            ints,
            spec.n_active.unwrap_or_default(),
            spec.n_active_electrons.unwrap_or_default(),
        ),
    }
}

fn sector(part: &ActiveSpacePartition, ints: &IntegralSet) -> (usize, usize) {
    let n_core = part.core.len();
    (ints.n_alpha().saturating_sub(n_core), ints.n_beta().saturating_sub(n_core))
}

type Stage<T> = OnceCell<std::result::Result<T, String>>;

fn stage<'a, T>(cell: &'a Stage<T>, f: impl FnOnce() -> Result<T>) -> std::result::Result<&'a T, String> {
    cell.get_or_init(|| f().map_err(|e| e.to_string())).as_ref().map_err(Clone::clone)
}

struct QdosStage {
    outcome: SelectionOutcome,
    psi_s: CIVector,
    c_app: CIVector,
}

struct QsciStage {
    outcome: SelectionOutcome,
    psi: CIVector,
}

/// Everything computed once per (geometry, repeat) and shared between
/// method rows.
struct GeometryRun<'a> {
    cfg: &'a RunConfig,
    ints: &'a IntegralSet,
    rcas: ActiveSpacePartition,
    h_r: ActiveHamiltonian,
    psi_r: CIVector,
    seed: u64,
    shots: Stage<ShotRecord>,
    qdos: Stage<QdosStage>,
    qsci: Stage<QsciStage>,
    sys: Stage<SpinOrbitalSystem>,
}

impl<'a> GeometryRun<'a> {
    fn exec(&self) -> Execution {
        self.cfg.solver.execution
    }

    fn shots(&self) -> std::result::Result<&ShotRecord, String> {
        stage(&self.shots, || sample_shots(&self.psi_r, self.cfg.sampling.n_shot, self.seed))
    }

    fn qdos(&self) -> std::result::Result<&QdosStage, String> {
        let shots = self.shots()?;
        stage(&self.qdos, || {
            let rep = snap_occupancies(&estimate_occupancies(shots)?, self.cfg.sampling.lambda)?;
            let eps = self.ints.orbital_energies_or_fock();
            let s = &self.cfg.scas;
            let mut outcome = qdos_select(&rep, &self.rcas, s.n_active, s.n_active_electrons, &eps)?;
            outcome.seed = self.seed;
            let h_s = build_active_hamiltonian(self.ints, &outcome.partition)?;
            let (na, nb) = sector(&outcome.partition, self.ints);
            let psi_s = solve_casci(&h_s, na, nb, &self.cfg.solver)?;
            let c_app = embed_coefficients(&psi_s, &self.rcas)?;
            Ok(QdosStage { outcome, psi_s, c_app })
        })
    }

    fn qsci(&self) -> std::result::Result<&QsciStage, String> {
        let shots = self.shots()?;
        stage(&self.qsci, || {
            let m = match self.cfg.sampling.qsci_determinants {
                Some(m) => m,
                None => {
                    let s = &self.cfg.scas;
                    let n_ms2 = self.ints.ms2.unsigned_abs() as usize;
                    let na = (s.n_active_electrons + n_ms2) / 2;
                    CasSpace::new(s.n_active, na, s.n_active_electrons - na)?.len()
                }
            };
            let (outcome, psi) = qsci_select(shots, m, &self.h_r, self.exec())?;
            Ok(QsciStage { outcome, psi })
        })
    }

    fn sys(&self) -> std::result::Result<&SpinOrbitalSystem, String> {
        stage(&self.sys, || {
            SpinOrbitalSystem::new(self.ints, &Determinant::aufbau(self.ints.n_alpha(), self.ints.n_beta()))
        })
    }

    fn hf(&self) -> Determinant {
        Determinant::aufbau(self.ints.n_alpha(), self.ints.n_beta())
    }

    fn mrmp2(&self, psi: &CIVector, e_reference: f64, label: &str) -> Result<CorrectionResult> {
        let h0 = ZerothOrderOperator::for_state(self.ints, psi, self.cfg.h0_density)?;
        let mut r = mrmp2_correction(psi, &self.rcas, self.ints, &h0, e_reference, self.exec())?;
        r.method = label.to_string();
        Ok(r)
    }

    fn tcc(&self, psi: &CIVector, triples: bool, label: &str) -> std::result::Result<CorrectionResult, String> {
        let sys = self.sys()?;
        let run = || -> Result<CorrectionResult> {
            let opts = crate::cc::CcOptions { execution: self.exec(), ..self.cfg.cc };
            let t_act = ci_to_cluster(psi, &self.hf(), opts.c0_min)?;
            let (t_full, iters) = tcc_external_solve(sys, &t_act, &opts)?;
            let mut r = tccsd_correction(sys, &t_act, &t_full, self.psi_r.energy, label)?;
            r.diagnostics.iterations = Some(iters);
            r.diagnostics.settings.push(format!("mode={}", opts.mode));
            if triples {
                let et = triples_correction(sys, &t_full, self.exec())?;
                let mut d = r.diagnostics.clone();
                d.settings.push(format!("triples={}", super::format_sig12(et)));
                r = CorrectionResult::new(label, self.psi_r.energy, r.delta_e + et, d);
            }
            Ok(r)
        };
        run().map_err(|e| e.to_string())
    }
}

fn diagnostics_string(d: &Diagnostics) -> String {
    let mut parts = Vec::new();
    if let Some(x) = d.min_denominator {
        parts.push(format!("min_denominator={}", super::format_sig12(x)));
    }
    if let Some(n) = d.external_size {
        parts.push(format!("external={n}"));
    }
    if let Some(n) = d.iterations {
        parts.push(format!("iterations={n}"));
    }
    parts.extend(d.settings.iter().cloned());
    parts.join(";")
}

/// All rows of one geometry and repeat. Never fails: errors become rows with
/// a failed status.
pub fn run_geometry(geometry: &Geometry, cfg: &RunConfig, seed: u64, repeat: usize) -> Vec<ResultRow> {
    let mut labels: Vec<(Method, String)> = Vec::new();
    let with_qsci = cfg.methods.contains(&Method::Qsci);
    for &m in &cfg.methods {
        labels.push((m, m.label().to_string()));
        if m.is_subspace() && with_qsci {
            labels.push((m, format!("qsci:{}", m.label())));
        }
    }
    let row = |method: &str, res: std::result::Result<(f64, Option<f64>, String, String), String>| match res {
        Ok((e_total, delta_e, partition, diagnostics)) => ResultRow {
            geometry: geometry.label.clone(),
            method: method.to_string(),
            repeat,
            e_total: Some(e_total),
            delta_e,
            partition,
            seed,
            status: RowStatus::Ok,
            diagnostics,
        },
        Err(msg) => ResultRow {
            geometry: geometry.label.clone(),
            method: method.to_string(),
            repeat,
            e_total: None,
            delta_e: None,
            partition: String::new(),
            seed,
            status: RowStatus::Failed,
            diagnostics: msg,
        },
    };

    let ints = match &geometry.ints {
        Ok(ints) => ints,
        Err(e) => return labels.iter().map(|(_, l)| row(l, Err(e.clone()))).collect(),
    };
    let setup = || -> Result<(ActiveSpacePartition, ActiveHamiltonian, CIVector)> {
        let rcas = rcas_partition(&cfg.rcas, ints)?;
        let h_r = build_active_hamiltonian(ints, &rcas)?;
        let (na, nb) = sector(&rcas, ints);
        let psi_r = solve_casci(&h_r, na, nb, &cfg.solver)?;
        Ok((rcas, h_r, psi_r))
    };
    let (rcas, h_r, psi_r) = match setup() {
        Ok(x) => x,
        Err(e) => {
            let msg = e.to_string();
            return labels.iter().map(|(_, l)| row(l, Err(msg.clone()))).collect();
        }
    };
    let run = GeometryRun {
        cfg,
        ints,
        rcas,
        h_r,
        psi_r,
        seed,
        shots: OnceCell::new(),
        qdos: OnceCell::new(),
        qsci: OnceCell::new(),
        sys: OnceCell::new(),
    };
    let rdigest = run.rcas.digest();
    let correction = |r: std::result::Result<CorrectionResult, String>, partition: String| {
        r.map(|c| (c.e_total, Some(c.delta_e), partition, diagnostics_string(&c.diagnostics)))
    };

    labels
        .iter()
        .map(|(m, label)| {
            let qsci_variant = label.starts_with("qsci:");
            let res = match m {
                Method::Rcasci => Ok((run.psi_r.energy, None, rdigest.clone(), String::new())),
                Method::Qdos => run.qdos().map(|q| {
                    (q.psi_s.energy, None, q.outcome.partition.digest(), String::new())
                }),
                Method::Qsci => run.qsci().map(|q| {
                    let n = q.outcome.selected_determinants.as_ref().map_or(0, Vec::len);
                    (q.psi.energy, None, rdigest.clone(), format!("selected={n};shortfall={}", q.outcome.shortfall))
                }),
                Method::Mrmp2 => correction(
                    ZerothOrderOperator::for_state(ints, &run.psi_r, cfg.h0_density)
                        .and_then(|h0| standard_mrmp2(&run.psi_r, &run.rcas, ints, &h0, run.exec()))
                        .map(|mut r| {
                            r.method = label.clone();
                            r
                        })
                        .map_err(|e| e.to_string()),
                    rdigest.clone(),
                ),
                Method::Tccsd => correction(run.tcc(&run.psi_r, false, label), rdigest.clone()),
                Method::TccsdT => correction(run.tcc(&run.psi_r, true, label), rdigest.clone()),
                Method::SubspaceMrmp2 | Method::SubspaceTccsd | Method::SubspaceTccsdT => {
                    let source = if qsci_variant {
                        run.qsci().map(|q| (&q.psi, format!("qsci[{}]", rdigest)))
                    } else {
                        run.qdos().map(|q| (&q.c_app, q.outcome.partition.digest()))
                    };
                    source.and_then(|(psi, partition)| {
                        let r = match m {
                            Method::SubspaceMrmp2 => {
                                run.mrmp2(psi, run.psi_r.energy, label).map_err(|e| e.to_string())
                            }
                            Method::SubspaceTccsd => run.tcc(psi, false, label),
                            _ => run.tcc(psi, true, label),
                        };
                        correction(r, partition)
                    })
                }
                Method::Mp2 => run.sys().and_then(|sys| {
                    mp2_energy(sys)
                        .map(|e| {
                            let c = CorrectionResult::new(label.clone(), sys.e_reference, e, Diagnostics::default());
                            (c.e_total, Some(c.delta_e), "hf".to_string(), String::new())
                        })
                        .map_err(|e| e.to_string())
                }),
                Method::Ccsd => run.sys().and_then(|sys| {
                    let opts = crate::cc::CcOptions { execution: run.exec(), ..cfg.cc };
                    ccsd_solve(sys, None, &opts)
                        .map(|(_, e, iters)| {
                            let c = CorrectionResult::new(label.clone(), sys.e_reference, e, Diagnostics::default());
                            (c.e_total, Some(c.delta_e), "hf".to_string(), format!("iterations={iters}"))
                        })
                        .map_err(|e| e.to_string())
                }),
                Method::FciOracle => (|| -> Result<_> {
                    let full = ActiveSpacePartition::full_space(ints.n_orb, ints.n_electrons)?;
                    let h = build_active_hamiltonian(ints, &full)?;
                    let (na, nb) = sector(&full, ints);
                    let psi = solve_casci(&h, na, nb, &cfg.solver)?;
                    Ok((psi.energy, None, full.digest(), String::new()))
                })()
                .map_err(|e| e.to_string()),
            };
            if let Err(e) = &res {
                warn!("{} / {label}: {e}", geometry.label);
            }
            row(label, res)
        })
        .collect()
}

/// Seed of the sampling stream for one (repeat, geometry) task.
fn task_seed(master: u64, repeat: usize, geometry: usize) -> u64 {
    derive_seed(derive_seed(master, repeat as u64), geometry as u64)
}

fn run_tasks(cfg: &RunConfig, geometries: &[Geometry], repeats: usize) -> Vec<ResultRow> {
    let tasks: Vec<(usize, usize)> =
        (0..repeats).flat_map(|r| (0..geometries.len()).map(move |g| (r, g))).collect();
    let master = cfg.sampling.seed;
    cfg.solver
        .execution
        .map_slice(&tasks, |&(r, g)| run_geometry(&geometries[g], cfg, task_seed(master, r, g), r))
        .into_iter()
        .flatten()
        .collect()
}

/// Runs every geometry once. Row order: geometry, then method in config
/// order.
pub fn run_workflow(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let geometries = load_geometries(cfg);
    info!("running {} geometries with {} methods", geometries.len(), cfg.methods.len());
    Ok(run_tasks(cfg, &geometries, 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadSummary {
    pub geometry: String,
    pub method: String,
    pub n_ok: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SpreadSummary>,
}

/// Runs the workflow `cfg.repeats` times with derived seeds and summarises
/// the spread of `e_total` per geometry and method.
pub fn repeat_stability(cfg: &RunConfig) -> Result<StabilityReport> {
    cfg.validate()?;
    if cfg.repeats < 2 {
        return Err(Error::Config("stability runs need at least 2 repeats".into()));
    }
    let geometries = load_geometries(cfg);
    let rows = run_tasks(cfg, &geometries, cfg.repeats);

    let mut order: Vec<(String, String)> = Vec::new();
    let mut values: HashMap<(String, String), Vec<f64>> = HashMap::new();
    for r in &rows {
        let key = (r.geometry.clone(), r.method.clone());
        let entry = values.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        if let Some(e) = r.e_total {
            entry.push(e);
        }
    }
    let summary = order
        .into_iter()
        .filter_map(|key| {
            let v = &values[&key];
            if v.is_empty() {
                return None;
            }
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(SpreadSummary {
                geometry: key.0,
                method: key.1,
                n_ok: v.len(),
                mean: v.iter().sum::<f64>() / v.len() as f64,
                min,
                max,
                spread: max - min,
            })
        })
        .collect();
    Ok(StabilityReport { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(methods: &str) -> RunConfig {
        RunConfig::from_toml(&format!(
            r#"
methods = [{methods}]
[input]
kind = "hubbard"
sites = 6
u = [1.0, 3.0]
[rcas]
n_active = 4
n_active_electrons = 4
[scas]
n_active = 2
n_active_electrons = 2
[sampling]
seed = 11
"#
        ))
        .unwrap()
    }

    #[test]
    fn subspace_rows_share_the_rcasci_reference() {
        let cfg = config(r#""rcasci", "qdos", "qsci", "subspace-mrmp2", "subspace-tccsd", "mrmp2", "mp2""#);
        let rows = run_workflow(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.status == RowStatus::Ok), "{rows:#?}");
        // geometry-major, config method order, qsci variants after each subspace method
        let methods: Vec<&str> = rows[..8].iter().map(|r| r.method.as_str()).collect();
        assert_eq!(
            methods,
            [
                "rcasci",
                "qdos",
                "qsci",
                "subspace-mrmp2",
                "qsci:subspace-mrmp2",
                "subspace-tccsd",
                "qsci:subspace-tccsd",
                "mrmp2"
            ]
        );
        for g in ["u=1", "u=3"] {
            let e_ref = rows.iter().find(|r| r.geometry == g && r.method == "rcasci").unwrap().e_total.unwrap();
            for r in rows.iter().filter(|r| r.geometry == g && (r.method.contains("subspace") || r.method == "mrmp2")) {
                assert_eq!(r.e_total.unwrap() - r.delta_e.unwrap(), e_ref, "{}", r.method);
            }
        }
    }

    #[test]
    fn failures_stay_inside_their_row() {
        // c0_min above one rejects every tailored amplitude extraction
        let mut cfg = config(r#""rcasci", "tccsd", "mrmp2""#);
        cfg.cc.c0_min = 1.5;
        let rows = run_workflow(&cfg).unwrap();
        let status: Vec<(&str, RowStatus)> = rows.iter().map(|r| (r.method.as_str(), r.status)).collect();
        assert_eq!(status[..3], [("rcasci", RowStatus::Ok), ("tccsd", RowStatus::Failed), ("mrmp2", RowStatus::Ok)]);
        assert!(rows[1].e_total.is_none() && !rows[1].diagnostics.is_empty());
    }

    #[test]
    fn unreadable_input_fails_only_its_geometry() {
        let mut cfg = config(r#""rcasci""#);
        cfg.input = InputSpec::Fcidump { paths: vec!["/nonexistent/a.fcidump".into()] };
        let rows = run_workflow(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, RowStatus::Failed);
        assert_eq!(rows[0].geometry, "a");
    }

    #[test]
    fn execution_mode_does_not_change_rows() {
        let mut cfg = config(r#""qdos", "qsci", "subspace-mrmp2", "subspace-tccsd-t""#);
        let par = run_workflow(&cfg).unwrap();
        cfg.solver.execution = Execution::Sequential;
        assert_eq!(run_workflow(&cfg).unwrap(), par);
    }

    #[test]
    fn stability_needs_repeats_and_summarises_each_method() {
        let mut cfg = config(r#""rcasci", "qdos""#);
        assert!(repeat_stability(&cfg).is_err());
        cfg.repeats = 3;
        let rep = repeat_stability(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 3 * 2 * 2);
        assert_eq!(rep.summary.len(), 4);
        let rcasci = rep.summary.iter().find(|s| s.method == "rcasci").unwrap();
        assert_eq!((rcasci.n_ok, rcasci.spread), (3, 0.0));
        let seeds: std::collections::HashSet<u64> = rep.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 6);
    }
}
