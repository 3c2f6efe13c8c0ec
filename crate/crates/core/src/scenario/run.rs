use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ScenarioConfig, Variant};
use crate::diagnostics::{
    bounds_csv, detect_plateaus, evaluate_convergence_bound, hr_distances_csv, match_hr_trajectories, plateaus_csv,
    preconditioned_spectrum, BoundReport, SpectrumReport, DENSE_EIG_CAP,
};
use crate::fem::{assemble, build_mesh_graded, AssembledSystem, BoundaryTag, DofMap, Mesh};
use crate::krylov::{gmres, GmresConfig, GmresTrace, LinearOperator, Product};
use crate::linalg::mm;
use crate::partition::{build_local_problems, decompose};
use crate::precond::{
    apply_p_adef, build_dtn_coarse_space, closest_quasimodes, quasimode_vector, ColumnLabel, DeflationBasis, Oras,
};
use crate::{Error, Result, C64};

/// Deflation bases whose `Z^H M^{-1} Z` has a smaller relative R diagonal
/// are rejected.
const SECOND_CONDITION_FLOOR: f64 = 1e-12;

/// Mesh, dofs and assembled system of a scenario.
pub struct Problem {
    pub mesh: Mesh,
    pub dofmap: DofMap,
    pub system: AssembledSystem,
}

impl Problem {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self> {
        let mesh = build_mesh_graded(&cfg.geometry, cfg.resolved_mesh_size(), cfg.cavity_refinement)?;
        let dofmap = DofMap::new(&mesh, cfg.order, &[BoundaryTag::GammaExt])?;
        let system = assemble(&cfg.geometry, &mesh, &dofmap)?;
        Ok(Self { mesh, dofmap, system })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofmap.num_dofs()
    }

    pub fn oras(&self, cfg: &ScenarioConfig) -> Result<Oras> {
        let dec = decompose(&self.mesh, &self.dofmap, cfg.subdomains, cfg.layout, cfg.overlap)?;
        let locals = build_local_problems(&cfg.geometry, &self.mesh, &self.dofmap, &dec)?;
        Oras::new(dec, locals)
    }

    /// Quasimode columns: the explicit list followed by the modes closest
    /// to `k`, without repeats.
    pub fn quasimode_columns(&self, cfg: &ScenarioConfig, modes: &[(usize, usize)], closest: usize) -> Result<(Vec<Vec<C64>>, Vec<ColumnLabel>)> {
        let mut list: Vec<(usize, usize)> = modes.to_vec();
        if closest > 0 {
            let c = cfg
                .geometry
                .cavity
                .ok_or_else(|| Error::Config("quasimode deflation needs a cavity".into()))?;
            for mode in closest_quasimodes(cfg.geometry.wavenumber, closest, c.length, c.opening) {
                if !list.contains(&mode) {
                    list.push(mode);
                }
            }
        }
        let mut cols = Vec::with_capacity(list.len());
        let mut labels = Vec::with_capacity(list.len());
        for (m, n) in list {
            cols.push(quasimode_vector(m, n, &cfg.geometry, &self.dofmap)?);
            labels.push(ColumnLabel::Quasimode { m, n });
        }
        Ok((cols, labels))
    }
}

/// `P_adef` over borrowed parts.
pub struct AdefOperator<'a> {
    pub oras: &'a Oras,
    pub basis: &'a DeflationBasis,
}

impl LinearOperator for AdefOperator<'_> {
    fn dim(&self) -> usize {
        self.oras.dim()
    }

    fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        apply_p_adef(self.oras, self.basis, v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// First iteration at which an HR value came within the threshold of a
/// target eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct HrArrival {
    pub target_re: f64,
    pub target_im: f64,
    pub first_iteration: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunManifest {
    pub config: String,
    pub num_dofs: Option<usize>,
    pub local_sizes: Vec<usize>,
    pub deflation_columns: usize,
    pub second_condition: Option<f64>,
    pub phases: Vec<Phase>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub final_relative_residual: Option<f64>,
    pub true_relative_residual: Option<f64>,
    pub plateaus: Vec<(usize, usize)>,
    pub hr_arrivals: Vec<HrArrival>,
    pub notes: Vec<String>,
    pub outputs: Vec<OutputFile>,
    pub error: Option<String>,
    /// `config` or `numerical`.
    pub error_kind: Option<String>,
}

impl RunManifest {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is plain data")
    }
}

/// Everything a run produced in memory.
pub struct RunArtifacts {
    pub trace: GmresTrace,
    pub spectrum: Option<SpectrumReport>,
    pub bounds: Vec<BoundReport>,
}

struct Recorder<'a> {
    dir: &'a Path,
    manifest: &'a mut RunManifest,
}

impl Recorder<'_> {
    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        self.manifest.outputs.push(OutputFile {
            name: name.to_string(),
            bytes: content.len(),
            sha256: hex::encode(Sha256::digest(content.as_bytes())),
        });
        Ok(())
    }

    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f();
        self.manifest.phases.push(Phase {
            name: name.to_string(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }
}

fn solver_config(cfg: &ScenarioConfig, n: usize, record_hr: bool) -> GmresConfig {
    let x0 = cfg.solver.random_x0.then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    });
    GmresConfig {
        tol: cfg.solver.tol,
        maxiter: cfg.solver.maxiter,
        record_hr,
        hr_every: cfg.solver.hr_every,
        x0,
    }
}

fn execute(cfg: &ScenarioConfig, rec: &mut Recorder<'_>) -> Result<RunArtifacts> {
    let problem = rec.time("assembly", || Problem::build(cfg))?;
    let n = problem.num_dofs();
    rec.manifest.num_dofs = Some(n);
    let a = &problem.system.a;

    let oras = match cfg.variant {
        Variant::None => None,
        _ => Some(rec.time("local_factorizations", || problem.oras(cfg))?),
    };
    if let Some(o) = &oras {
        rec.manifest.local_sizes = o.dec.local_sizes();
        rec.write("partition.csv", &o.dec.to_csv(&problem.dofmap))?;
    }

    let basis = match (&oras, cfg.variant) {
        (Some(o), Variant::Adef) => {
            let basis = rec.time("deflation_setup", || {
                let (mut cols, mut labels) =
                    build_dtn_coarse_space(&o.dec, &o.locals, &cfg.geometry, &problem.mesh, &problem.dofmap, cfg.coarse_per_subdomain)?;
                let (qc, ql) = problem.quasimode_columns(cfg, &cfg.quasimodes, cfg.closest_quasimodes)?;
                cols.extend(qc);
                labels.extend(ql);
                if cols.is_empty() {
                    return Err(Error::DeflationSetup("variant adef without any deflation column".into()));
                }
                DeflationBasis::from_columns(a, &cols, labels)
            })?;
            let sc = basis.second_condition(o)?;
            rec.manifest.second_condition = Some(sc);
            if sc < SECOND_CONDITION_FLOOR {
                return Err(Error::DeflationSetup(format!(
                    "Z^H M^-1 Z is numerically singular (relative R diagonal {sc:e})"
                )));
            }
            rec.manifest.deflation_columns = basis.len();
            rec.write("deflation_labels.csv", &basis.labels_csv())?;
            Some(basis)
        }
        _ => None,
    };

    let adef = match (&oras, &basis) {
        (Some(o), Some(b)) => Some(AdefOperator { oras: o, basis: b }),
        _ => None,
    };
    let precond: Option<&dyn LinearOperator> = match (&adef, &oras) {
        (Some(p), _) => Some(p),
        (None, Some(o)) => Some(o),
        _ => None,
    };

    let gcfg = solver_config(cfg, n, true);
    let trace = rec.time("gmres", || gmres(a, precond, &problem.system.b, &gcfg))?;
    rec.manifest.iterations = Some(trace.iterations());
    rec.manifest.converged = Some(trace.converged);
    rec.manifest.final_relative_residual = trace.residual_norms.last().copied();
    rec.manifest.true_relative_residual = Some(trace.true_residual);
    rec.write("residuals.csv", &trace.residual_csv())?;
    rec.write("hr.csv", &trace.hr_csv())?;
    let d = &cfg.diagnostics;
    let plateaus = detect_plateaus(&trace.residual_norms, d.plateau_window, d.plateau_rate);
    rec.write("plateaus.csv", &plateaus_csv(&plateaus))?;
    rec.manifest.plateaus = plateaus;

    let mut spectrum = None;
    let mut bounds = Vec::new();
    if d.spectrum {
        if n > DENSE_EIG_CAP {
            rec.manifest
                .notes
                .push(format!("spectrum skipped: N = {n} exceeds the dense cap {DENSE_EIG_CAP}"));
        } else {
            let label = match cfg.variant {
                Variant::None => "A",
                Variant::Oras => "A M_oras^-1",
                Variant::Adef => "A P_adef",
            };
            let spec = rec.time("spectrum", || match precond {
                Some(p) => preconditioned_spectrum(&Product { first: p, second: a }, label, d.kappa),
                None => preconditioned_spectrum(a, label, d.kappa),
            })?;
            rec.write("spectrum.csv", &spec.to_csv())?;
            let targets: Vec<C64> = spec
                .smallest_modulus(d.hr_targets)
                .into_iter()
                .map(|i| spec.eigenvalues[i])
                .collect();
            let rows = match_hr_trajectories(&trace, &targets);
            rec.write("hr_distances.csv", &hr_distances_csv(&targets, &rows))?;
            rec.manifest.hr_arrivals = targets
                .iter()
                .enumerate()
                .map(|(t, z)| HrArrival {
                    target_re: z.re,
                    target_im: z.im,
                    first_iteration: rows
                        .iter()
                        .find(|r| r.distances[t] < d.hr_threshold * z.norm())
                        .map(|r| r.iteration),
                })
                .collect();
            for bp in &d.bounds {
                match evaluate_convergence_bound(&trace, &spec, bp.j, bp.l, bp.m, d.selection) {
                    Ok(r) => bounds.push(r),
                    Err(e @ (Error::BoundUnavailable(_) | Error::Pole(_))) => rec
                        .manifest
                        .notes
                        .push(format!("bound l={} m={} J={}: {e}", bp.l, bp.m, bp.j)),
                    Err(e) => return Err(e),
                }
            }
            if !d.bounds.is_empty() {
                rec.write("bounds.csv", &bounds_csv(&bounds))?;
            }
            spectrum = Some(spec);
        }
    }
    Ok(RunArtifacts { trace, spectrum, bounds })
}

fn error_kind(e: &Error) -> &'static str {
    if e.is_config() {
        "config"
    } else {
        "numerical"
    }
}

/// Runs one scenario, writing its outputs and `manifest.json` into
/// `cfg.output_dir`. The manifest is written on failure too.
pub fn run_scenario_config(cfg: &ScenarioConfig) -> Result<(RunManifest, Option<RunArtifacts>)> {
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut manifest = RunManifest {
        config: cfg.to_config_string(),
        ..Default::default()
    };
    let result = {
        let mut rec = Recorder {
            dir: &dir,
            manifest: &mut manifest,
        };
        execute(cfg, &mut rec)
    };
    let artifacts = match result {
        Ok(a) => Some(a),
        Err(e) => {
            manifest.error_kind = Some(error_kind(&e).to_string());
            manifest.error = Some(e.to_string());
            None
        }
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest.to_json()).map_err(|e| Error::io(&path, e))?;
    Ok((manifest, artifacts))
}

pub fn run_scenario(path: &Path) -> Result<RunManifest> {
    let cfg = ScenarioConfig::from_file(path)?;
    run_scenario_config(&cfg).map(|(m, _)| m)
}

/// One sweep row: `n_cs` coarse-space columns in total and `n_def`
/// quasimode columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Composition {
    pub n_cs: usize,
    pub n_def: usize,
}

impl Composition {
    pub fn parse_list(s: &str) -> Result<Vec<Composition>> {
        s.split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let (a, b) = p
                    .trim()
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("composition `{p}` must be n_cs,n_def")))?;
                let parse = |x: &str| {
                    x.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad count `{x}` in composition `{p}`")))
                };
                Ok(Composition {
                    n_cs: parse(a)?,
                    n_def: parse(b)?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub composition: Composition,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("n_cs,n_def,iterations,converged,error\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.composition.n_cs,
            r.composition.n_def,
            r.iterations.map(|v| v.to_string()).unwrap_or_default(),
            r.converged.map(|v| v.to_string()).unwrap_or_default(),
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        ));
    }
    s
}

fn sweep_row(
    cfg: &ScenarioConfig,
    problem: &Problem,
    oras: &Oras,
    coarse: &(Vec<Vec<C64>>, Vec<ColumnLabel>),
    comp: Composition,
) -> Result<GmresTrace> {
    let s = cfg.subdomains;
    let gcfg = solver_config(cfg, problem.num_dofs(), false);
    let a = &problem.system.a;
    if comp.n_cs == 0 && comp.n_def == 0 {
        return gmres(a, Some(oras), &problem.system.b, &gcfg);
    }
    if comp.n_cs % s != 0 {
        return Err(Error::Config(format!("n_cs = {} is not a multiple of S = {s}", comp.n_cs)));
    }
    let per = comp.n_cs / s;
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    for (c, l) in coarse.0.iter().zip(&coarse.1) {
        if let ColumnLabel::CoarseSpace { index, .. } = l {
            if *index < per {
                cols.push(c.clone());
                labels.push(*l);
            }
        }
    }
    if cols.len() != comp.n_cs {
        return Err(Error::DeflationSetup(format!(
            "only {} coarse-space columns available for n_cs = {}",
            cols.len(),
            comp.n_cs
        )));
    }
    let (qc, ql) = problem.quasimode_columns(cfg, &[], comp.n_def)?;
    cols.extend(qc);
    labels.extend(ql);
    let basis = DeflationBasis::from_columns(a, &cols, labels)?;
    let op = AdefOperator { oras, basis: &basis };
    gmres(a, Some(&op), &problem.system.b, &gcfg)
}

/// Runs every composition on one mesh and decomposition and writes
/// `sweep.csv`. Row failures are recorded and the sweep continues.
pub fn run_table_sweep(cfg: &ScenarioConfig, compositions: &[Composition]) -> Result<Vec<SweepRow>> {
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let problem = Problem::build(cfg)?;
    let oras = problem.oras(cfg)?;
    let max_per = compositions
        .iter()
        .map(|c| c.n_cs.div_ceil(cfg.subdomains))
        .max()
        .unwrap_or(0);
    let coarse = build_dtn_coarse_space(&oras.dec, &oras.locals, &cfg.geometry, &problem.mesh, &problem.dofmap, max_per)?;
    let rows: Vec<SweepRow> = compositions
        .iter()
        .map(|&comp| match sweep_row(cfg, &problem, &oras, &coarse, comp) {
            Ok(t) => SweepRow {
                composition: comp,
                iterations: Some(t.iterations()),
                converged: Some(t.converged),
                error: None,
            },
            Err(e) => SweepRow {
                composition: comp,
                iterations: None,
                converged: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let path = dir.join("sweep.csv");
    std::fs::write(&path, sweep_csv(&rows)).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Writes `A` and `b` in Matrix Market form, plus `Z` for deflated
/// variants. Returns the written paths.
pub fn export_matrices(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let problem = Problem::build(cfg)?;
    let mut written = vec![dir.join("A.mtx"), dir.join("b.mtx")];
    mm::write_coordinate(&written[0], &problem.system.a)?;
    mm::write_vector(&written[1], &problem.system.b)?;
    if cfg.variant == Variant::Adef {
        let oras = problem.oras(cfg)?;
        let (mut cols, mut labels) = build_dtn_coarse_space(
            &oras.dec,
            &oras.locals,
            &cfg.geometry,
            &problem.mesh,
            &problem.dofmap,
            cfg.coarse_per_subdomain,
        )?;
        let (qc, ql) = problem.quasimode_columns(cfg, &cfg.quasimodes, cfg.closest_quasimodes)?;
        cols.extend(qc);
        labels.extend(ql);
        if !cols.is_empty() {
            let basis = DeflationBasis::from_columns(&problem.system.a, &cols, labels)?;
            let path = dir.join("Z.mtx");
            std::fs::write(&path, basis.z_matrix_market()).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path, extra: &str) -> ScenarioConfig {
        let text = format!(
            "helmdd-scenario 1\n\
             geometry.wavenumber = 6.0\n\
             geometry.cavity = false\n\
             geometry.half_width = 0.5\n\
             geometry.half_height = 0.4\n\
             geometry.pml_thickness = 0.2\n\
             discretization.order = 1\n\
             discretization.mesh_size = 0.1\n\
             output.dir = {}\n{extra}",
            dir.display()
        );
        ScenarioConfig::parse(&text, "inline").unwrap()
    }

    #[test]
    fn one_subdomain_converges_in_one_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), "diagnostics.spectrum = true\nsolver.random_x0 = true\nrng.seed = 4\n");
        let (m, art) = run_scenario_config(&cfg).unwrap();
        assert!(m.succeeded(), "{:?}", m.error);
        assert_eq!(m.iterations, Some(1));
        assert_eq!(m.converged, Some(true));
        let art = art.unwrap();
        assert_eq!(m.num_dofs, Some(art.trace.solution.len()));
        let spec = art.spectrum.unwrap();
        assert_eq!(spec.count_near(C64::new(1.0, 0.0), 1e-8), spec.len());
        let on_disk = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(on_disk.contains("\"iterations\": 1"));
        for f in &m.outputs {
            let bytes = std::fs::read(dir.path().join(&f.name)).unwrap();
            assert_eq!(hex::encode(Sha256::digest(&bytes)), f.sha256);
        }
    }

    #[test]
    fn failure_still_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), "preconditioner.variant = adef\ndecomposition.subdomains = 1\n");
        let (m, art) = run_scenario_config(&cfg).unwrap();
        assert!(art.is_none());
        assert_eq!(m.error_kind.as_deref(), Some("numerical"));
        let on_disk = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(on_disk.contains("deflation"));
    }

    #[test]
    fn sweep_records_row_failures_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), "decomposition.subdomains = 2\n");
        let comps = Composition::parse_list("0,0; 3,0; 2,0").unwrap();
        let rows = run_table_sweep(&cfg, &comps).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].iterations.is_some());
        assert!(rows[1].error.is_some());
        assert!(rows[2].iterations.unwrap() <= rows[0].iterations.unwrap());
        let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn one_level_row_matches_plain_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), "decomposition.subdomains = 2\n");
        let rows = run_table_sweep(&cfg, &[Composition { n_cs: 0, n_def: 0 }]).unwrap();
        let (m, _) = run_scenario_config(&cfg).unwrap();
        assert_eq!(rows[0].iterations, m.iterations);
    }

    #[test]
    fn export_writes_matrix_market() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), "");
        let files = export_matrices(&cfg).unwrap();
        let a = mm::read_coordinate(&files[0]).unwrap();
        let problem = Problem::build(&cfg).unwrap();
        assert_eq!(a.nrows(), problem.num_dofs());
        assert_eq!(a.nnz(), problem.system.a.nnz());
    }

    #[test]
    fn compositions_parse() {
        let c = Composition::parse_list("144,0;0,144; 136,8").unwrap();
        assert_eq!(c[2], Composition { n_cs: 136, n_def: 8 });
        assert!(Composition::parse_list("1").is_err());
        assert!(Composition::parse_list("a,1").is_err());
    }
}
