//! JSON run configuration. Physical quantities carry their SI unit in the key
//! name; see `schema/simconfig.json`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::assembly::UpwindScheme;
use crate::error::{Error, Result};
use crate::hydraulics::{KrRegularization, RetentionModel, RhoGConvention, SoilParams, SourceLaw};
use crate::solver::{Damping, SolverConfig, SolverMode};
use crate::surface::{RainEvent, RainSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub lx: f64,
    pub ly: f64,
    pub nx0: usize,
    pub ny0: usize,
    /// Number of uniform refinements of the coarse grid.
    pub levels: usize,
    pub out_intervals: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    /// Resistance [s].
    pub c: f64,
    /// Threshold height [m].
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeConfig {
    pub tau: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldInit {
    Constant(f64),
    /// Explicit values, one per vertex (pressure) or per trace cell (height).
    Values(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Initial {
    /// Pressure [Pa].
    pub p0: FieldInit,
    /// Surface water height [m].
    pub w0: FieldInit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    /// VTK snapshot cadence in steps; `0` disables snapshots after `t = 0`.
    pub vtk_every: usize,
    pub csv_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub soil: SoilParams,
    pub geometry: Geometry,
    pub coupling: Coupling,
    pub rain: RainSpec,
    pub time: TimeConfig,
    pub initial: Initial,
    pub source: SourceLaw,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub upwind: UpwindScheme,
}

impl SimConfig {
    /// Number of time steps, `⌈T/τ⌉`.
    pub fn num_steps(&self) -> usize {
        let r = self.time.t_end / self.time.tau;
        (r - 1e-9 * r.max(1.0)).ceil().max(0.0) as usize
    }

    /// Re-checks the invariants after programmatic edits.
    pub fn validate(&self) -> Result<()> {
        self.soil
            .validate()
            .map_err(|(f, r)| Error::validation(soil_key(f), r))?;
        let g = &self.geometry;
        if !(g.lx > 0.0 && g.lx.is_finite()) {
            return Err(Error::validation("geometry.Lx_m", "must be positive"));
        }
        if !(g.ly > 0.0 && g.ly.is_finite()) {
            return Err(Error::validation("geometry.Ly_m", "must be positive"));
        }
        if g.nx0 == 0 {
            return Err(Error::validation("geometry.nx0", "must be at least 1"));
        }
        if g.ny0 == 0 {
            return Err(Error::validation("geometry.ny0", "must be at least 1"));
        }
        let mut sorted = g.out_intervals.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(a, b) in &sorted {
            if !(a >= 0.0 && b <= g.lx && a < b) {
                return Err(Error::validation(
                    "geometry.out_intervals_m",
                    format!("interval [{a}, {b}] must be nonempty and inside [0, {}]", g.lx),
                ));
            }
        }
        if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::validation("geometry.out_intervals_m", "intervals must be disjoint"));
        }
        if !(self.coupling.c > 0.0 && self.coupling.c.is_finite()) {
            return Err(Error::validation("coupling.c_s", "must be positive"));
        }
        if !(self.coupling.sigma > 0.0 && self.coupling.sigma.is_finite()) {
            return Err(Error::validation("coupling.sigma_m", "must be positive"));
        }
        if !(self.time.tau > 0.0 && self.time.tau.is_finite()) {
            return Err(Error::validation("time.tau_s", format!("must be positive, got {}", self.time.tau)));
        }
        if !(self.time.t_end >= self.time.tau && self.time.t_end.is_finite()) {
            return Err(Error::validation(
                "time.T_s",
                format!("must be at least tau = {}, got {}", self.time.tau, self.time.t_end),
            ));
        }
        self.rain
            .validate()
            .map_err(|(i, r)| Error::validation(format!("rain[{i}]"), r))?;
        self.source
            .validate()
            .map_err(|(f, r)| Error::validation(format!("source.{f}_per_s"), r))?;
        self.solver
            .validate()
            .map_err(|(f, r)| Error::validation(format!("solver.{f}"), r))?;
        for (v, key) in [(&self.initial.p0, "initial.p0_Pa"), (&self.initial.w0, "initial.w0_m")] {
            let finite = match v {
                FieldInit::Constant(x) => x.is_finite(),
                FieldInit::Values(xs) => xs.iter().all(|x| x.is_finite()),
            };
            if !finite {
                return Err(Error::validation(key, "values must be finite"));
            }
        }
        Ok(())
    }
}

fn soil_key(field: &str) -> String {
    let key = match field {
        "K" => "K_m2",
        "mu" => "mu_Pa_s",
        "rho" => "rho_kg_m3",
        "g" => "g_m_s2",
        "n" => "n",
        "s_m" => "s_m",
        "delta" => "delta",
        "p_b" => "p_b_Pa",
        "lambda" => "lambda",
        "alpha" => "alpha_per_Pa",
        "l" => "l",
        other => other,
    };
    format!("soil.{key}")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    soil: Option<RawSoil>,
    geometry: Option<RawGeometry>,
    coupling: Option<RawCoupling>,
    #[serde(default)]
    rain: Vec<RawRain>,
    time: Option<RawTime>,
    initial: Option<RawInitial>,
    source: Option<RawSource>,
    solver: Option<RawSolver>,
    output: Option<RawOutput>,
    upwind: Option<UpwindScheme>,
    rho_g_convention: Option<RhoGConvention>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelName {
    BrooksCorey,
    VanGenuchten,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSoil {
    model: Option<ModelName>,
    #[serde(rename = "K_m2")]
    k: Option<f64>,
    #[serde(rename = "mu_Pa_s")]
    mu: Option<f64>,
    n: Option<f64>,
    #[serde(rename = "rho_kg_m3")]
    rho: Option<f64>,
    #[serde(rename = "g_m_s2")]
    g: Option<f64>,
    s_m: Option<f64>,
    #[serde(rename = "s_M")]
    s_max: Option<f64>,
    #[serde(rename = "p_b_Pa")]
    p_b: Option<f64>,
    lambda: Option<f64>,
    #[serde(rename = "alpha_per_Pa")]
    alpha_per_pa: Option<f64>,
    alpha_per_cm: Option<f64>,
    l: Option<f64>,
    delta: Option<f64>,
    kr_regularization: Option<RawRegularization>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawRegularization {
    Max,
    Additive,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(rename = "Lx_m")]
    lx: Option<f64>,
    #[serde(rename = "Ly_m")]
    ly: Option<f64>,
    nx0: Option<usize>,
    ny0: Option<usize>,
    levels: Option<usize>,
    #[serde(default)]
    out_intervals_m: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    c_s: Option<f64>,
    sigma_m: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRain {
    x_m: (f64, f64),
    rate_m_s: f64,
    /// End `null` means forever.
    #[serde(default)]
    t_s: Option<(f64, Option<f64>)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    tau_s: Option<f64>,
    #[serde(rename = "T_s")]
    t_end: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(rename = "p0_Pa")]
    p0: Option<f64>,
    p0_file: Option<PathBuf>,
    w0_m: Option<f64>,
    w0_file: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    #[serde(default)]
    f0_per_s: f64,
    #[serde(default)]
    f1_per_s: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    max_iterations: Option<usize>,
    tol: Option<f64>,
    pre_smooth: Option<usize>,
    post_smooth: Option<usize>,
    mode: Option<SolverMode>,
    scalar_tol: Option<f64>,
    damping: Option<Damping>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    vtk_every: Option<usize>,
    csv_every: Option<usize>,
}

fn required<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::validation(key, "required key is missing"))
}

fn read_values(base: &Path, file: &Path, key: &str) -> Result<Vec<f64>> {
    let path = if file.is_absolute() { file.to_path_buf() } else { base.join(file) };
    if !path.exists() {
        return Err(Error::validation(key, format!("file {} does not exist", path.display())));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|e| Error::validation(key, format!("{}: cannot parse {tok:?}: {e}", path.display())))
        })
        .collect()
}

/// Parses and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, path, base)
}

/// Parses configuration text; relative file references resolve against `base`.
pub fn parse_config(text: &str, origin: &Path, base: &Path) -> Result<SimConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
    })?;

    let soil = required(raw.soil, "soil")?;
    let model = match required(soil.model, "soil.model")? {
        ModelName::BrooksCorey => RetentionModel::BrooksCorey {
            p_b: required(soil.p_b, "soil.p_b_Pa")?,
            lambda: required(soil.lambda, "soil.lambda")?,
        },
        ModelName::VanGenuchten => {
            let l = required(soil.l, "soil.l")?;
            match (soil.alpha_per_pa, soil.alpha_per_cm) {
                (Some(a), None) => RetentionModel::VanGenuchten { alpha: a, l },
                (None, Some(a)) => RetentionModel::van_genuchten_per_cm(a, l),
                (None, None) => return Err(Error::validation("soil.alpha_per_Pa", "required key is missing")),
                (Some(_), Some(_)) => {
                    return Err(Error::validation("soil.alpha_per_cm", "give alpha in one unit only"))
                }
            }
        }
    };
    let soil = SoilParams {
        model,
        k: required(soil.k, "soil.K_m2")?,
        mu: required(soil.mu, "soil.mu_Pa_s")?,
        n: required(soil.n, "soil.n")?,
        rho: soil.rho.unwrap_or(1000.0),
        g: soil.g.unwrap_or(9.81),
        s_min: required(soil.s_m, "soil.s_m")?,
        s_max: soil.s_max.unwrap_or(1.0),
        delta: soil.delta.unwrap_or(0.0),
        kr_regularization: match soil.kr_regularization {
            Some(RawRegularization::Additive) => KrRegularization::Additive,
            _ => KrRegularization::Max,
        },
        rho_g_convention: raw.rho_g_convention.unwrap_or_default(),
    };

    let g = required(raw.geometry, "geometry")?;
    let geometry = Geometry {
        lx: required(g.lx, "geometry.Lx_m")?,
        ly: required(g.ly, "geometry.Ly_m")?,
        nx0: required(g.nx0, "geometry.nx0")?,
        ny0: required(g.ny0, "geometry.ny0")?,
        levels: g.levels.unwrap_or(0),
        out_intervals: g.out_intervals_m,
    };

    let c = required(raw.coupling, "coupling")?;
    let coupling = Coupling {
        c: required(c.c_s, "coupling.c_s")?,
        sigma: required(c.sigma_m, "coupling.sigma_m")?,
    };

    let rain = RainSpec::new(
        raw.rain
            .into_iter()
            .map(|r| {
                let (t0, t1) = r.t_s.unwrap_or((0.0, None));
                RainEvent {
                    x: r.x_m,
                    rate: r.rate_m_s,
                    t: (t0, t1.unwrap_or(f64::INFINITY)),
                }
            })
            .collect(),
    );

    let t = required(raw.time, "time")?;
    let time = TimeConfig {
        tau: required(t.tau_s, "time.tau_s")?,
        t_end: required(t.t_end, "time.T_s")?,
    };

    let init = required(raw.initial, "initial")?;
    let p0 = match (init.p0, init.p0_file) {
        (Some(p), None) => FieldInit::Constant(p),
        (None, Some(f)) => FieldInit::Values(read_values(base, &f, "initial.p0_file")?),
        (None, None) => return Err(Error::validation("initial.p0_Pa", "required key is missing")),
        (Some(_), Some(_)) => return Err(Error::validation("initial.p0_file", "give p0_Pa or p0_file, not both")),
    };
    let w0 = match (init.w0_m, init.w0_file) {
        (Some(w), None) => FieldInit::Constant(w),
        (None, Some(f)) => FieldInit::Values(read_values(base, &f, "initial.w0_file")?),
        (None, None) => FieldInit::Constant(0.0),
        (Some(_), Some(_)) => return Err(Error::validation("initial.w0_file", "give w0_m or w0_file, not both")),
    };

    let source = raw
        .source
        .map(|s| SourceLaw {
            f0: s.f0_per_s,
            f1: s.f1_per_s,
        })
        .unwrap_or_default();

    let d = SolverConfig::default();
    let solver = match raw.solver {
        None => d,
        Some(s) => SolverConfig {
            max_iterations: s.max_iterations.unwrap_or(d.max_iterations),
            tol: s.tol.unwrap_or(d.tol),
            pre_smooth: s.pre_smooth.unwrap_or(d.pre_smooth),
            post_smooth: s.post_smooth.unwrap_or(d.post_smooth),
            mode: s.mode.unwrap_or(d.mode),
            scalar_tol: s.scalar_tol.unwrap_or(d.scalar_tol),
            damping: s.damping.unwrap_or(d.damping),
        },
    };

    let output = match raw.output {
        None => OutputConfig {
            directory: None,
            vtk_every: 0,
            csv_every: 1,
        },
        Some(o) => OutputConfig {
            directory: o.directory.map(|d| if d.is_absolute() { d } else { base.join(d) }),
            vtk_every: o.vtk_every.unwrap_or(0),
            csv_every: o.csv_every.unwrap_or(1),
        },
    };

    let cfg = SimConfig {
        soil,
        geometry,
        coupling,
        rain,
        time,
        initial: Initial { p0, w0 },
        source,
        solver,
        output,
        upwind: raw.upwind.unwrap_or_default(),
    };
    cfg.validate()?;
    Ok(cfg)
}
