//! Line-oriented scenario files.
//!
//! ```text
//! helmdd-scenario 1
//! # comments start with '#'
//! geometry.quasimode = 0:3
//! discretization.order = 2
//! decomposition.subdomains = 8
//! preconditioner.variant = adef
//! preconditioner.quasimodes = 0:3
//! output.dir = out/plateau
//! ```
//!
//! Every key is optional except one of `geometry.wavenumber` and
//! `geometry.quasimode`. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::diagnostics::Selection;
use crate::fem::{dofs_per_wavelength_to_h, Cavity, GeometryParams};
use crate::partition::Layout;
use crate::precond::quasimode_wavenumber;
use crate::{Error, Result};

pub const FORMAT_HEADER: &str = "helmdd-scenario";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Unpreconditioned GMRES.
    None,
    /// One-level ORAS.
    Oras,
    /// ORAS with adapted deflation over coarse-space and quasimode columns.
    Adef,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::Oras => "oras",
            Variant::Adef => "adef",
        }
    }
}

/// How the wavenumber was given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WavenumberSpec {
    Value(f64),
    /// Resonance of cavity mode `(m, n)`.
    Quasimode(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub maxiter: usize,
    pub hr_every: usize,
    /// Seeded random initial guess instead of zero.
    pub random_x0: bool,
}

/// One bound evaluation `(l, m, J)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundPoint {
    pub l: usize,
    pub m: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSettings {
    pub spectrum: bool,
    /// Also compute eigenvectors and condition numbers.
    pub kappa: bool,
    pub plateau_window: usize,
    pub plateau_rate: f64,
    /// Number of smallest-modulus eigenvalues tracked by the HR distances.
    pub hr_targets: usize,
    /// Relative distance counted as "HR value has reached the eigenvalue".
    pub hr_threshold: f64,
    pub selection: Selection,
    pub bounds: Vec<BoundPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: GeometryParams,
    pub wavenumber: WavenumberSpec,
    pub order: usize,
    pub dofs_per_wavelength: f64,
    /// Explicit mesh size; overrides `dofs_per_wavelength`.
    pub mesh_size: Option<f64>,
    /// Extra y refinement factor inside the cavity opening.
    pub cavity_refinement: usize,
    pub subdomains: usize,
    pub layout: Layout,
    pub overlap: usize,
    pub variant: Variant,
    pub coarse_per_subdomain: usize,
    pub quasimodes: Vec<(usize, usize)>,
    /// Adds the modes closest to `k` on top of `quasimodes`.
    pub closest_quasimodes: usize,
    pub solver: SolverSettings,
    pub diagnostics: DiagnosticsSettings,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryParams::default(),
            wavenumber: WavenumberSpec::Value(GeometryParams::default().wavenumber),
            order: 2,
            dofs_per_wavelength: 8.0,
            mesh_size: None,
            cavity_refinement: 1,
            subdomains: 1,
            layout: Layout::StripsX,
            overlap: 2,
            variant: Variant::Oras,
            coarse_per_subdomain: 0,
            quasimodes: Vec::new(),
            closest_quasimodes: 0,
            solver: SolverSettings {
                tol: 1e-6,
                maxiter: 500,
                hr_every: 1,
                random_x0: false,
            },
            diagnostics: DiagnosticsSettings {
                spectrum: false,
                kappa: false,
                plateau_window: 10,
                plateau_rate: 0.99,
                hr_targets: 2,
                hr_threshold: 1e-2,
                selection: Selection::SmallestModulus,
                bounds: Vec::new(),
            },
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

struct Entries<'a> {
    source: &'a str,
    map: BTreeMap<String, (usize, String)>,
}

impl Entries<'_> {
    fn err(&self, line: usize, msg: impl std::fmt::Display) -> Error {
        Error::Parse {
            path: self.source.to_string(),
            msg: format!("line {line}: {msg}"),
        }
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(line, format!("cannot parse `{v}` for {key}"))),
        }
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some((_, v)) if v == "true" => Ok(Some(true)),
            Some((_, v)) if v == "false" => Ok(Some(false)),
            Some((line, v)) => Err(self.err(line, format!("{key} must be true or false, got `{v}`"))),
        }
    }
}

fn parse_mode(s: &str) -> Option<(usize, usize)> {
    let (m, n) = s.trim().split_once(':')?;
    Some((m.trim().parse().ok()?, n.trim().parse().ok()?))
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(|p| item(p.trim())).collect()
}

fn parse_bound(s: &str) -> Option<BoundPoint> {
    let mut it = s.split(':').map(|p| p.trim().parse::<usize>());
    let l = it.next()?.ok()?;
    let m = it.next()?.ok()?;
    let j = it.next()?.ok()?;
    if it.next().is_some() {
        return None;
    }
    Some(BoundPoint { l, m, j })
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if cfg.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_dir = dir.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    /// Parses and validates a scenario. Relative output directories are
    /// kept as written.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = Entries {
            source,
            map: BTreeMap::new(),
        };
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if !header_seen {
                let mut parts = line.split_whitespace();
                if parts.next() != Some(FORMAT_HEADER) {
                    return Err(entries.err(line_no, format!("expected `{FORMAT_HEADER} {FORMAT_VERSION}` header")));
                }
                match parts.next().and_then(|v| v.parse::<u32>().ok()) {
                    Some(FORMAT_VERSION) if parts.next().is_none() => {}
                    _ => return Err(entries.err(line_no, format!("unsupported format version, expected {FORMAT_VERSION}"))),
                }
                header_seen = true;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| entries.err(line_no, "expected `key = value`"))?;
            let key = key.trim().to_string();
            if let Some((prev, _)) = entries.map.get(&key) {
                return Err(entries.err(line_no, format!("duplicate key {key} (first on line {prev})")));
            }
            entries.map.insert(key, (line_no, value.trim().to_string()));
        }
        if !header_seen {
            return Err(entries.err(0, "empty scenario"));
        }

        let mut cfg = ScenarioConfig::default();
        let g = &mut cfg.geometry;
        if let Some(v) = entries.parsed("geometry.half_width")? {
            g.half_width = v;
        }
        if let Some(v) = entries.parsed("geometry.half_height")? {
            g.half_height = v;
        }
        if let Some(v) = entries.parsed("geometry.pml_thickness")? {
            g.pml_thickness = v;
        }
        if let Some(v) = entries.parsed::<f64>("geometry.incident_angle")? {
            g.incident_angle = v;
        }
        if let Some(v) = entries.parsed::<f64>("geometry.incident_angle_over_pi")? {
            g.incident_angle = v * PI;
        }
        let has_cavity = entries.flag("geometry.cavity")?.unwrap_or(true);
        let mut cav = Cavity::reference();
        if let Some(v) = entries.parsed("cavity.length")? {
            cav.length = v;
        }
        if let Some(v) = entries.parsed("cavity.opening")? {
            cav.opening = v;
        }
        if let Some(v) = entries.parsed("cavity.wall")? {
            cav.wall = v;
        }
        let ax: Option<f64> = entries.parsed("cavity.anchor_x")?;
        let ay: Option<f64> = entries.parsed("cavity.anchor_y")?;
        match (ax, ay) {
            (Some(x), Some(y)) => cav.anchor = Some([x, y]),
            (None, None) => {}
            _ => return Err(Error::Config("cavity.anchor_x and cavity.anchor_y must be given together".into())),
        }
        g.cavity = has_cavity.then_some(cav);

        let k_value: Option<f64> = entries.parsed("geometry.wavenumber")?;
        let k_mode = match entries.take("geometry.quasimode") {
            None => None,
            Some((line, v)) => Some(parse_mode(&v).ok_or_else(|| entries.err(line, format!("bad mode `{v}`, expected m:n")))?),
        };
        cfg.wavenumber = match (k_value, k_mode) {
            (Some(k), None) => WavenumberSpec::Value(k),
            (None, Some((m, n))) => WavenumberSpec::Quasimode(m, n),
            (Some(_), Some(_)) => {
                return Err(Error::Config("give geometry.wavenumber or geometry.quasimode, not both".into()))
            }
            (None, None) => return Err(Error::Config("one of geometry.wavenumber or geometry.quasimode is required".into())),
        };
        cfg.geometry.wavenumber = match cfg.wavenumber {
            WavenumberSpec::Value(k) => k,
            WavenumberSpec::Quasimode(m, n) => {
                let c = cfg
                    .geometry
                    .cavity
                    .ok_or_else(|| Error::Config("geometry.quasimode needs a cavity".into()))?;
                quasimode_wavenumber(m, n, c.length, c.opening)
            }
        };

        if let Some(v) = entries.parsed("discretization.order")? {
            cfg.order = v;
        }
        if let Some(v) = entries.parsed("discretization.dofs_per_wavelength")? {
            cfg.dofs_per_wavelength = v;
        }
        cfg.mesh_size = entries.parsed("discretization.mesh_size")?;
        if let Some(v) = entries.parsed("discretization.cavity_refinement")? {
            cfg.cavity_refinement = v;
        }

        if let Some(v) = entries.parsed("decomposition.subdomains")? {
            cfg.subdomains = v;
        }
        if let Some(v) = entries.parsed("decomposition.overlap")? {
            cfg.overlap = v;
        }
        let rows: Option<usize> = entries.parsed("decomposition.grid_rows")?;
        cfg.layout = match entries.take("decomposition.layout") {
            None => match rows {
                Some(_) => return Err(Error::Config("decomposition.grid_rows needs layout = grid".into())),
                None => Layout::StripsX,
            },
            Some((_, v)) if v == "strips_x" => {
                if rows.is_some() {
                    return Err(Error::Config("decomposition.grid_rows needs layout = grid".into()));
                }
                Layout::StripsX
            }
            Some((line, v)) if v == "grid" => {
                let sy = rows.ok_or_else(|| entries.err(line, "layout = grid needs decomposition.grid_rows"))?;
                if sy == 0 || cfg.subdomains % sy != 0 {
                    return Err(Error::Config(format!(
                        "grid_rows = {sy} must divide subdomains = {}",
                        cfg.subdomains
                    )));
                }
                Layout::Grid {
                    sx: cfg.subdomains / sy,
                    sy,
                }
            }
            Some((line, v)) => return Err(entries.err(line, format!("unknown layout `{v}`"))),
        };

        if let Some((line, v)) = entries.take("preconditioner.variant") {
            cfg.variant = match v.as_str() {
                "none" => Variant::None,
                "oras" => Variant::Oras,
                "adef" => Variant::Adef,
                _ => return Err(entries.err(line, format!("unknown variant `{v}`"))),
            };
        }
        if let Some(v) = entries.parsed("preconditioner.coarse_per_subdomain")? {
            cfg.coarse_per_subdomain = v;
        }
        if let Some((line, v)) = entries.take("preconditioner.quasimodes") {
            cfg.quasimodes = parse_list(&v, parse_mode).ok_or_else(|| entries.err(line, format!("bad mode list `{v}`")))?;
        }
        if let Some(v) = entries.parsed("preconditioner.closest_quasimodes")? {
            cfg.closest_quasimodes = v;
        }

        if let Some(v) = entries.parsed("solver.tol")? {
            cfg.solver.tol = v;
        }
        if let Some(v) = entries.parsed("solver.maxiter")? {
            cfg.solver.maxiter = v;
        }
        if let Some(v) = entries.parsed("solver.hr_every")? {
            cfg.solver.hr_every = v;
        }
        if let Some(v) = entries.flag("solver.random_x0")? {
            cfg.solver.random_x0 = v;
        }

        let d = &mut cfg.diagnostics;
        if let Some(v) = entries.flag("diagnostics.spectrum")? {
            d.spectrum = v;
        }
        if let Some(v) = entries.flag("diagnostics.kappa")? {
            d.kappa = v;
        }
        if let Some(v) = entries.parsed("diagnostics.plateau_window")? {
            d.plateau_window = v;
        }
        if let Some(v) = entries.parsed("diagnostics.plateau_rate")? {
            d.plateau_rate = v;
        }
        if let Some(v) = entries.parsed("diagnostics.hr_targets")? {
            d.hr_targets = v;
        }
        if let Some(v) = entries.parsed("diagnostics.hr_threshold")? {
            d.hr_threshold = v;
        }
        if let Some((line, v)) = entries.take("diagnostics.selection") {
            d.selection = Selection::parse(&v).ok_or_else(|| entries.err(line, format!("unknown selection `{v}`")))?;
        }
        if let Some((line, v)) = entries.take("diagnostics.bounds") {
            d.bounds = parse_list(&v, parse_bound).ok_or_else(|| entries.err(line, format!("bad bound list `{v}`, expected l:m:J,...")))?;
        }

        if let Some((_, v)) = entries.take("output.dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(v) = entries.parsed("rng.seed")? {
            cfg.seed = v;
        }

        if let Some((key, (line, _))) = entries.map.iter().next() {
            return Err(entries.err(*line, format!("unknown key {key}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(1..=3).contains(&self.order) {
            return Err(Error::Config(format!("order must be 1, 2 or 3, got {}", self.order)));
        }
        if !(self.dofs_per_wavelength > 0.0) {
            return Err(Error::Config("dofs_per_wavelength must be positive".into()));
        }
        if let Some(h) = self.mesh_size {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("mesh_size must be positive, got {h}")));
            }
        }
        if self.cavity_refinement == 0 {
            return Err(Error::Config("cavity_refinement must be at least 1".into()));
        }
        if self.subdomains == 0 {
            return Err(Error::Config("subdomains must be at least 1".into()));
        }
        if self.overlap == 0 {
            return Err(Error::Config("overlap must be at least 1 element layer".into()));
        }
        if self.variant != Variant::Adef
            && (self.coarse_per_subdomain > 0 || !self.quasimodes.is_empty() || self.closest_quasimodes > 0)
        {
            return Err(Error::Config(format!(
                "coarse space and quasimodes need variant = adef, got {}",
                self.variant.name()
            )));
        }
        if (!self.quasimodes.is_empty() || self.closest_quasimodes > 0) && self.geometry.cavity.is_none() {
            return Err(Error::Config("quasimode deflation needs a cavity".into()));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(Error::Config(format!("solver.tol must lie in (0, 1), got {}", self.solver.tol)));
        }
        if self.solver.maxiter == 0 || self.solver.hr_every == 0 {
            return Err(Error::Config("solver.maxiter and solver.hr_every must be positive".into()));
        }
        let d = &self.diagnostics;
        if d.plateau_window < 2 {
            return Err(Error::Config("plateau_window must be at least 2".into()));
        }
        if !(d.plateau_rate > 0.0 && d.plateau_rate < 1.0) {
            return Err(Error::Config("plateau_rate must lie in (0, 1)".into()));
        }
        if !(d.hr_threshold > 0.0) {
            return Err(Error::Config("hr_threshold must be positive".into()));
        }
        if !d.bounds.is_empty() && !(d.spectrum && d.kappa) {
            return Err(Error::Config("diagnostics.bounds needs spectrum = true and kappa = true".into()));
        }
        if d.kappa && !d.spectrum {
            return Err(Error::Config("diagnostics.kappa needs spectrum = true".into()));
        }
        Ok(())
    }

    /// Mesh size actually used.
    pub fn resolved_mesh_size(&self) -> f64 {
        self.mesh_size
            .unwrap_or_else(|| dofs_per_wavelength_to_h(self.dofs_per_wavelength, self.geometry.wavenumber, self.order))
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_config_string(&self) -> String {
        let mut s = format!("{FORMAT_HEADER} {FORMAT_VERSION}\n");
        let g = &self.geometry;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("geometry.half_width", format!("{:?}", g.half_width));
        kv("geometry.half_height", format!("{:?}", g.half_height));
        kv("geometry.pml_thickness", format!("{:?}", g.pml_thickness));
        kv("geometry.incident_angle", format!("{:?}", g.incident_angle));
        match self.wavenumber {
            WavenumberSpec::Value(k) => kv("geometry.wavenumber", format!("{k:?}")),
            WavenumberSpec::Quasimode(m, n) => kv("geometry.quasimode", format!("{m}:{n}")),
        }
        kv("geometry.cavity", g.cavity.is_some().to_string());
        if let Some(c) = &g.cavity {
            kv("cavity.length", format!("{:?}", c.length));
            kv("cavity.opening", format!("{:?}", c.opening));
            kv("cavity.wall", format!("{:?}", c.wall));
            if let Some([x, y]) = c.anchor {
                kv("cavity.anchor_x", format!("{x:?}"));
                kv("cavity.anchor_y", format!("{y:?}"));
            }
        }
        kv("discretization.order", self.order.to_string());
        kv("discretization.dofs_per_wavelength", format!("{:?}", self.dofs_per_wavelength));
        if let Some(h) = self.mesh_size {
            kv("discretization.mesh_size", format!("{h:?}"));
        }
        kv("discretization.cavity_refinement", self.cavity_refinement.to_string());
        kv("decomposition.subdomains", self.subdomains.to_string());
        match self.layout {
            Layout::StripsX => kv("decomposition.layout", "strips_x".into()),
            Layout::Grid { sy, .. } => {
                kv("decomposition.layout", "grid".into());
                kv("decomposition.grid_rows", sy.to_string());
            }
        }
        kv("decomposition.overlap", self.overlap.to_string());
        kv("preconditioner.variant", self.variant.name().into());
        kv("preconditioner.coarse_per_subdomain", self.coarse_per_subdomain.to_string());
        kv(
            "preconditioner.quasimodes",
            self.quasimodes.iter().map(|(m, n)| format!("{m}:{n}")).collect::<Vec<_>>().join(", "),
        );
        kv("preconditioner.closest_quasimodes", self.closest_quasimodes.to_string());
        kv("solver.tol", format!("{:?}", self.solver.tol));
        kv("solver.maxiter", self.solver.maxiter.to_string());
        kv("solver.hr_every", self.solver.hr_every.to_string());
        kv("solver.random_x0", self.solver.random_x0.to_string());
        let d = &self.diagnostics;
        kv("diagnostics.spectrum", d.spectrum.to_string());
        kv("diagnostics.kappa", d.kappa.to_string());
        kv("diagnostics.plateau_window", d.plateau_window.to_string());
        kv("diagnostics.plateau_rate", format!("{:?}", d.plateau_rate));
        kv("diagnostics.hr_targets", d.hr_targets.to_string());
        kv("diagnostics.hr_threshold", format!("{:?}", d.hr_threshold));
        kv("diagnostics.selection", d.selection.name().into());
        kv(
            "diagnostics.bounds",
            d.bounds.iter().map(|b| format!("{}:{}:{}", b.l, b.m, b.j)).collect::<Vec<_>>().join(", "),
        );
        kv("output.dir", self.output_dir.display().to_string());
        kv("rng.seed", self.seed.to_string());
        s
    }
}
