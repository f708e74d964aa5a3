//! Scenario files: one TOML table per scenario, flat keys.
//!
//! ```toml
//! [sphere-mcf-shrink]
//! description = "Geodesic sphere of radius π/3 shrinking under MCF"
//! kind = "flow"
//! surface = "geodesic_sphere"
//! radius = 1.0471975511965976
//! level = 3
//! speed = "mcf"
//! ```

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use s3flow::flow::FlowConfig;
use s3flow::s2curves::DtPolicy;
use s3flow::s3core::{S2Point, Vec3};
use s3flow::speeds::Speed;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}:{line}: scenario '{scenario}': {message}")]
    Invalid {
        path: String,
        line: usize,
        scenario: String,
        message: String,
    },
    #[error("{path}: no scenario named '{name}' (available: {available})")]
    MissingScenario {
        path: String,
        name: String,
        available: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Surface flow.
    Flow,
    /// Curve-shortening flow of a curve on S².
    Csf,
    /// Flow a Hopf torus, then compare its left Gauss image with CSF of the
    /// initial image.
    GaussmapCsf,
    /// Subinterval total-curvature conditions for a pair of curves.
    Weiner,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioKind::Flow => "flow",
            ScenarioKind::Csf => "csf",
            ScenarioKind::GaussmapCsf => "gaussmap_csf",
            ScenarioKind::Weiner => "weiner",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Raw4,
    Obj3,
    Vtk,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Raw4 => "raw4",
            ExportFormat::Obj3 => "obj",
            ExportFormat::Vtk => "vtk",
        }
    }
}

/// A closed curve on S², written as `latitude:θ[:n]`, `great:x,y,z[:n]` or
/// `file:path` (CSV of 3-vectors).
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSpec {
    Latitude { colatitude: f64, samples: usize },
    Great { axis: S2Point, samples: usize },
    File(PathBuf),
}

pub const DEFAULT_CURVE_SAMPLES: usize = 128;

impl CurveSpec {
    pub fn parse(s: &str, base: &Path) -> Result<CurveSpec, String> {
        let (tag, rest) = s.split_once(':').ok_or_else(|| format!("curve '{s}' has no kind prefix"))?;
        let samples = |n: Option<&str>| -> Result<usize, String> {
            match n {
                None => Ok(DEFAULT_CURVE_SAMPLES),
                Some(n) => n.trim().parse().map_err(|e| format!("curve sample count '{n}': {e}")),
            }
        };
        match tag.trim() {
            "latitude" => {
                let mut parts = rest.split(':');
                let theta = parts.next().unwrap_or("");
                let colatitude = theta
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format!("colatitude '{theta}': {e}"))?;
                Ok(CurveSpec::Latitude {
                    colatitude,
                    samples: samples(parts.next())?,
                })
            }
            "great" => {
                let mut parts = rest.split(':');
                let axis = parts.next().unwrap_or("");
                let v: Vec<f64> = axis
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|e| format!("axis component '{t}': {e}")))
                    .collect::<Result<_, _>>()?;
                if v.len() != 3 || Vec3::new(v[0], v[1], v[2]).norm() == 0.0 {
                    return Err(format!("great-circle axis '{axis}' must be a nonzero 3-vector"));
                }
                Ok(CurveSpec::Great {
                    axis: S2Point::normalize(Vec3::new(v[0], v[1], v[2])),
                    samples: samples(parts.next())?,
                })
            }
            "file" => Ok(CurveSpec::File(base.join(rest.trim()))),
            other => Err(format!("unknown curve kind '{other}' (expected latitude, great or file)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceSpec {
    GeodesicSphere { radius: f64, level: usize },
    PerturbedSphere { radius: f64, level: usize, amplitude: f64, seed: u64 },
    CliffordTorus { nu: usize, nv: usize },
    HopfTorus { curve: CurveSpec, fibers: usize },
    MeshFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub kind: ScenarioKind,
    pub surface: Option<SurfaceSpec>,
    pub curves: Vec<CurveSpec>,
    pub flow: FlowConfig,
    pub exports: Vec<ExportFormat>,
    /// Mesh snapshots every this many steps (0: initial and final only).
    pub export_cadence: usize,
    /// Line of the table header in the config file.
    pub line: usize,
}

/// Raw table contents; every key is optional here and checked per kind.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    description: Option<String>,
    kind: Option<ScenarioKind>,
    surface: Option<String>,
    radius: Option<f64>,
    level: Option<usize>,
    amplitude: Option<f64>,
    seed: Option<u64>,
    resolution: Option<[usize; 2]>,
    curve: Option<String>,
    curve1: Option<String>,
    curve2: Option<String>,
    fibers: Option<usize>,
    mesh: Option<String>,
    speed: Option<String>,
    sigma: Option<f64>,
    dt: Option<f64>,
    t_end: Option<f64>,
    speed_tol: Option<f64>,
    width_tol: Option<f64>,
    g_floor: Option<f64>,
    smoothing: Option<f64>,
    cadence: Option<usize>,
    exports: Option<Vec<ExportFormat>>,
    export_cadence: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub path: PathBuf,
    pub scenarios: Vec<Scenario>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        ConfigFile::parse(&text, path, base)
    }

    pub fn parse(text: &str, path: &Path, base: &Path) -> Result<ConfigFile, ConfigError> {
        let shown = path.display().to_string();
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Syntax {
            path: shown.clone(),
            message: e.to_string().trim_end().to_string(),
        })?;
        let mut scenarios = Vec::with_capacity(table.len());
        for (name, value) in table {
            let line = header_line(text, &name);
            let invalid = |message: String| ConfigError::Invalid {
                path: shown.clone(),
                line,
                scenario: name.clone(),
                message,
            };
            let raw: RawScenario = match value {
                toml::Value::Table(t) => t.try_into().map_err(|e: toml::de::Error| invalid(e.message().to_string()))?,
                _ => return Err(invalid("top-level entries must be [scenario] tables".into())),
            };
            scenarios.push(build(&name, raw, base, line).map_err(invalid)?);
        }
        Ok(ConfigFile { path: path.to_path_buf(), scenarios })
    }

    pub fn scenario(&self, name: &str) -> Result<&Scenario, ConfigError> {
        self.scenarios.iter().find(|s| s.name == name).ok_or_else(|| ConfigError::MissingScenario {
            path: self.path.display().to_string(),
            name: name.to_string(),
            available: self.scenarios.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(", "),
        })
    }
}

/// 1-based line of `[name]` (quoted or bare) in the source, or 0.
fn header_line(text: &str, name: &str) -> usize {
    let candidates = [format!("[{name}]"), format!("[\"{name}\"]"), format!("['{name}']")];
    text.lines()
        .position(|l| {
            let l = l.trim();
            candidates.iter().any(|c| l.starts_with(c.as_str()))
        })
        .map_or(0, |i| i + 1)
}

fn require<T>(value: Option<T>, key: &str, kind: impl fmt::Display) -> Result<T, String> {
    value.ok_or_else(|| format!("'{key}' is required for {kind}"))
}

fn build(name: &str, raw: RawScenario, base: &Path, line: usize) -> Result<Scenario, String> {
    let kind = raw.kind.unwrap_or(ScenarioKind::Flow);
    let speed = Speed::parse(raw.speed.as_deref().unwrap_or("arctan")).map_err(|e| e.to_string())?;
    let dt_policy = match (raw.dt, raw.sigma) {
        (Some(_), Some(_)) => return Err("give either 'dt' or 'sigma', not both".into()),
        (Some(dt), None) => DtPolicy::Fixed(dt),
        (None, sigma) => DtPolicy::Cfl { sigma: sigma.unwrap_or(0.25) },
    };
    let defaults = FlowConfig::default();
    let flow = FlowConfig {
        speed,
        dt_policy,
        t_end: raw.t_end.unwrap_or(defaults.t_end),
        speed_tol: raw.speed_tol.unwrap_or(defaults.speed_tol),
        width_tol: raw.width_tol.unwrap_or(defaults.width_tol),
        g_floor: raw.g_floor.unwrap_or(defaults.g_floor),
        cadence: raw.cadence.unwrap_or(1),
        keep_snapshots: false,
        smoothing: raw.smoothing.unwrap_or(0.0),
    };
    flow.validate().map_err(|e| e.to_string())?;
    if raw.amplitude.is_some_and(|a| a != 0.0) && raw.seed.is_none() {
        return Err("'seed' is mandatory when 'amplitude' is nonzero".into());
    }
    let curve = |key: &str, v: Option<String>| -> Result<CurveSpec, String> {
        CurveSpec::parse(&require(v, key, kind)?, base)
    };
    let surface_for_flow = |raw: &RawScenario| -> Result<SurfaceSpec, String> {
        let surface = require(raw.surface.as_deref(), "surface", kind)?;
        match surface {
            "geodesic_sphere" | "perturbed_sphere" => {
                let radius = raw.radius.unwrap_or(FRAC_PI_2);
                let level = raw.level.unwrap_or(3);
                match (surface, raw.amplitude) {
                    ("perturbed_sphere", amplitude) => Ok(SurfaceSpec::PerturbedSphere {
                        radius,
                        level,
                        amplitude: require(amplitude, "amplitude", "perturbed_sphere")?,
                        seed: require(raw.seed, "seed", "perturbed_sphere")?,
                    }),
                    (_, Some(a)) if a != 0.0 => Ok(SurfaceSpec::PerturbedSphere {
                        radius,
                        level,
                        amplitude: a,
                        seed: require(raw.seed, "seed", "a perturbation")?,
                    }),
                    _ => Ok(SurfaceSpec::GeodesicSphere { radius, level }),
                }
            }
            "clifford_torus" => {
                let [nu, nv] = raw.resolution.unwrap_or([64, 64]);
                Ok(SurfaceSpec::CliffordTorus { nu, nv })
            }
            "hopf_torus" => Ok(SurfaceSpec::HopfTorus {
                curve: CurveSpec::parse(&require(raw.curve.clone(), "curve", "hopf_torus")?, base)?,
                fibers: raw.fibers.unwrap_or(64),
            }),
            "mesh" => Ok(SurfaceSpec::MeshFile(base.join(require(raw.mesh.as_deref(), "mesh", "surface = \"mesh\"")?))),
            other => Err(format!(
                "unknown surface '{other}' (expected geodesic_sphere, perturbed_sphere, clifford_torus, hopf_torus or mesh)"
            )),
        }
    };
    let (surface, curves) = match kind {
        ScenarioKind::Flow => (Some(surface_for_flow(&raw)?), Vec::new()),
        ScenarioKind::GaussmapCsf => {
            let s = surface_for_flow(&raw)?;
            if !matches!(s, SurfaceSpec::HopfTorus { .. }) {
                return Err("gaussmap_csf needs surface = \"hopf_torus\"".into());
            }
            (Some(s), Vec::new())
        }
        ScenarioKind::Csf => (None, vec![curve("curve", raw.curve)?]),
        ScenarioKind::Weiner => (None, vec![curve("curve1", raw.curve1)?, curve("curve2", raw.curve2)?]),
    };
    Ok(Scenario {
        name: name.to_string(),
        description: raw.description.unwrap_or_default(),
        kind,
        surface,
        curves,
        flow,
        exports: raw.exports.unwrap_or_else(|| vec![ExportFormat::Raw4]),
        export_cadence: raw.export_cadence.unwrap_or(0),
        line,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
        ConfigFile::parse(text, Path::new("test.cfg"), Path::new("."))
    }

    #[test]
    fn minimal_flow_scenario() {
        let c = parse("[a]\nsurface = \"geodesic_sphere\"\nradius = 1.0\nspeed = \"mcf\"\n").unwrap();
        let s = &c.scenarios[0];
        assert_eq!(s.kind, ScenarioKind::Flow);
        assert_eq!(s.surface, Some(SurfaceSpec::GeodesicSphere { radius: 1.0, level: 3 }));
        assert_eq!(s.flow.speed, Speed::Mcf);
        assert_eq!(s.line, 1);
    }

    #[test]
    fn empty_config_has_no_scenarios() {
        assert!(parse("").unwrap().scenarios.is_empty());
        assert!(parse("# nothing here\n").unwrap().scenarios.is_empty());
    }

    #[test]
    fn perturbation_requires_seed() {
        let text = "[ok]\nsurface = \"clifford_torus\"\n\n[p]\nsurface = \"geodesic_sphere\"\namplitude = 0.02\n";
        match parse(text) {
            Err(ConfigError::Invalid { line, scenario, message, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(scenario, "p");
                assert!(message.contains("seed"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_syntax_errors_are_reported() {
        let e = parse("[a]\nsurface = \"geodesic_sphere\"\nradiuss = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("radiuss"), "{e}");
        let e = parse("[a]\nsurface = \n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse("[a]\nkind = \"flow\"\n[a]\nkind = \"csf\"\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn curve_specs() {
        let base = Path::new("/data");
        assert_eq!(
            CurveSpec::parse("latitude:0.5:64", base).unwrap(),
            CurveSpec::Latitude { colatitude: 0.5, samples: 64 }
        );
        assert!(matches!(
            CurveSpec::parse("great:0,0,2", base).unwrap(),
            CurveSpec::Great { samples: DEFAULT_CURVE_SAMPLES, .. }
        ));
        assert_eq!(CurveSpec::parse("file:c.csv", base).unwrap(), CurveSpec::File(PathBuf::from("/data/c.csv")));
        assert!(CurveSpec::parse("spiral:1", base).is_err());
        assert!(CurveSpec::parse("great:0,0,0", base).is_err());
    }

    #[test]
    fn missing_scenario_lists_available() {
        let c = parse("[x]\nkind = \"weiner\"\ncurve1 = \"great:0,0,1\"\ncurve2 = \"great:1,0,0\"\n").unwrap();
        let e = c.scenario("y").unwrap_err().to_string();
        assert!(e.contains("'y'") && e.contains("x"), "{e}");
    }
}
