//! File formats: raw4 meshes, stereographic OBJ and legacy VTK exports,
//! curve CSVs and trajectory rows.
//!
//! Floats are written with fixed formatting so identical inputs give
//! identical bytes: 17 significant digits for raw4, curves, trajectories and
//! VTK scalar fields, 9 for projected coordinates.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use s3flow::flow::{StopReason, TrajectoryRow};
use s3flow::mesh::{estimate_curvature, CurvatureData, MeshError, SurfaceMesh};
use s3flow::s2curves::{CurveError, S2Curve};
use s3flow::s3core::{S2Point, S3Point, Vec3, Vec4};

use crate::config::ExportFormat;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Mesh {
        path: String,
        #[source]
        source: MeshError,
    },
    #[error("{path}: {source}")]
    Curve {
        path: String,
        #[source]
        source: CurveError,
    },
    #[error("every candidate projection pole lies within 1e-6 of a vertex")]
    NoPole,
}

/// Minimum distance between a projection pole and any vertex.
pub const POLE_CLEARANCE: f64 = 1e-6;

pub const TRAJECTORY_HEADER: &str = "t,min_G,max_A2,max_speed,area,epsilon_star,flags";

/// 17 significant digits; `inf`/`-inf`/`nan` for non-finite values.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn raw4_string(mesh: &SurfaceMesh) -> String {
    let mut out = String::new();
    writeln!(out, "# s3flow raw4 mesh: unit quaternions (w,x,y,z), then 0-based triangles").unwrap();
    writeln!(out, "# vertices {} triangles {}", mesh.vertex_count(), mesh.triangles().len()).unwrap();
    for v in mesh.vertices() {
        let c = v.coords();
        writeln!(out, "{},{},{},{}", fmt17(c[0]), fmt17(c[1]), fmt17(c[2]), fmt17(c[3])).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "{},{},{}", t[0], t[1], t[2]).unwrap();
    }
    out
}

pub fn parse_raw4(text: &str, path: &Path) -> Result<SurfaceMesh, IoError> {
    let shown = path.display().to_string();
    let err = |line: usize, message: String| IoError::Parse {
        path: shown.clone(),
        line,
        message,
    };
    let mut counts = None;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            let words: Vec<&str> = comment.split_whitespace().collect();
            if let ["vertices", nv, "triangles", nt] = words[..] {
                let nv = nv.parse::<usize>().map_err(|e| err(lineno, e.to_string()))?;
                let nt = nt.parse::<usize>().map_err(|e| err(lineno, e.to_string()))?;
                counts = Some((nv, nt));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (nv, _) = counts.ok_or_else(|| err(lineno, "data before the '# vertices N triangles M' header".into()))?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if vertices.len() < nv {
            let c: Vec<f64> = fields
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| err(lineno, format!("'{f}': {e}"))))
                .collect::<Result<_, _>>()?;
            if c.len() != 4 {
                return Err(err(lineno, format!("expected 4 coordinates, got {}", c.len())));
            }
            let p = S3Point::new(Vec4::new(c[0], c[1], c[2], c[3])).map_err(|e| err(lineno, e.to_string()))?;
            vertices.push(p);
        } else {
            let t: Vec<usize> = fields
                .iter()
                .map(|f| f.parse::<usize>().map_err(|e| err(lineno, format!("'{f}': {e}"))))
                .collect::<Result<_, _>>()?;
            if t.len() != 3 {
                return Err(err(lineno, format!("expected 3 indices, got {}", t.len())));
            }
            triangles.push([t[0], t[1], t[2]]);
        }
    }
    let (nv, nt) = counts.ok_or_else(|| err(0, "missing '# vertices N triangles M' header".into()))?;
    if vertices.len() != nv || triangles.len() != nt {
        return Err(err(
            0,
            format!(
                "header promises {nv} vertices and {nt} triangles, found {} and {}",
                vertices.len(),
                triangles.len()
            ),
        ));
    }
    SurfaceMesh::new(vertices, triangles).map_err(|source| IoError::Mesh { path: shown, source })
}

pub fn read_raw4(path: &Path) -> Result<SurfaceMesh, IoError> {
    parse_raw4(&read_file(path)?, path)
}

/// Stereographic projection from a pole `±e_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub axis: usize,
    pub sign: f64,
}

impl Pole {
    pub const DEFAULT: Pole = Pole { axis: 0, sign: -1.0 };

    fn candidates() -> impl Iterator<Item = Pole> {
        (0..4).flat_map(|axis| [Pole { axis, sign: -1.0 }, Pole { axis, sign: 1.0 }])
    }

    pub fn coords(&self) -> Vec4 {
        let mut p = Vec4::zeros();
        p[self.axis] = self.sign;
        p
    }

    /// `(x − ⟨x,p⟩p)/(1 − ⟨x,p⟩)` in the remaining coordinates, in order.
    pub fn project(&self, x: &S3Point) -> Vec3 {
        let c = x.coords();
        let denom = 1.0 - self.sign * c[self.axis];
        let rest: Vec<f64> = (0..4).filter(|&k| k != self.axis).map(|k| c[k] / denom).collect();
        Vec3::new(rest[0], rest[1], rest[2])
    }

    pub fn label(&self) -> String {
        let c = self.coords();
        format!("({},{},{},{})", c[0], c[1], c[2], c[3])
    }
}

/// `(−1,0,0,0)` unless a vertex is within 1e−6 of it, in which case the
/// first of the eight `±e_k` that clears every vertex.
pub fn choose_pole(mesh: &SurfaceMesh) -> Result<Pole, IoError> {
    std::iter::once(Pole::DEFAULT)
        .chain(Pole::candidates())
        .find(|pole| {
            let p = S3Point::normalize(pole.coords());
            mesh.vertices().iter().all(|v| v.distance(&p) > POLE_CLEARANCE)
        })
        .ok_or(IoError::NoPole)
}

fn pole_header(pole: &Pole) -> String {
    if *pole == Pole::DEFAULT {
        format!("stereographic projection from pole {}", pole.label())
    } else {
        format!(
            "stereographic projection from pole {} (reselected: a vertex lies within 1e-6 of {})",
            pole.label(),
            Pole::DEFAULT.label()
        )
    }
}

pub fn obj3_string(mesh: &SurfaceMesh) -> Result<String, IoError> {
    let pole = choose_pole(mesh)?;
    let mut out = String::new();
    writeln!(out, "# s3flow obj3: {}", pole_header(&pole)).unwrap();
    for v in mesh.vertices() {
        let y = pole.project(v);
        writeln!(out, "v {} {} {}", fmt9(y[0]), fmt9(y[1]), fmt9(y[2])).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    Ok(out)
}

/// Legacy ASCII VTK polydata of the stereographic image with point scalars
/// `G`, `H` and `A2` (|A|²).
pub fn vtk_string(mesh: &SurfaceMesh, curvature: &CurvatureData) -> Result<String, IoError> {
    let pole = choose_pole(mesh)?;
    let n = mesh.vertex_count();
    let mut out = String::new();
    writeln!(out, "# vtk DataFile Version 3.0").unwrap();
    writeln!(out, "s3flow surface, {}", pole_header(&pole)).unwrap();
    writeln!(out, "ASCII").unwrap();
    writeln!(out, "DATASET POLYDATA").unwrap();
    writeln!(out, "POINTS {n} double").unwrap();
    for v in mesh.vertices() {
        let y = pole.project(v);
        writeln!(out, "{} {} {}", fmt9(y[0]), fmt9(y[1]), fmt9(y[2])).unwrap();
    }
    let nt = mesh.triangles().len();
    writeln!(out, "POLYGONS {nt} {}", 4 * nt).unwrap();
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "POINT_DATA {n}").unwrap();
    let fields: [(&str, fn(&s3flow::mesh::PointCurvature) -> f64); 3] =
        [("G", |p| p.g), ("H", |p| p.h), ("A2", |p| p.norm_a2)];
    for (name, get) in fields {
        writeln!(out, "SCALARS {name} double 1").unwrap();
        writeln!(out, "LOOKUP_TABLE default").unwrap();
        for p in &curvature.points {
            writeln!(out, "{}", fmt17(get(p))).unwrap();
        }
    }
    Ok(out)
}

/// Writes `mesh` in `format`. VTK needs curvature; it is estimated when not
/// supplied.
pub fn export_mesh(
    mesh: &SurfaceMesh,
    curvature: Option<&CurvatureData>,
    format: ExportFormat,
    path: &Path,
) -> Result<(), IoError> {
    let text = match format {
        ExportFormat::Raw4 => raw4_string(mesh),
        ExportFormat::Obj3 => obj3_string(mesh)?,
        ExportFormat::Vtk => match curvature {
            Some(c) => vtk_string(mesh, c)?,
            None => vtk_string(mesh, &estimate_curvature(mesh))?,
        },
    };
    write_file(path, &text)
}

pub fn curve_csv_string(points: &[S2Point]) -> String {
    let mut out = String::from("x,y,z\n");
    for p in points {
        let c = p.coords();
        writeln!(out, "{},{},{}", fmt17(c[0]), fmt17(c[1]), fmt17(c[2])).unwrap();
    }
    out
}

pub fn write_curve_csv(points: &[S2Point], path: &Path) -> Result<(), IoError> {
    write_file(path, &curve_csv_string(points))
}

/// Reads a CSV of 3-vectors (an optional `x,y,z` header is skipped); rows are
/// normalized onto S².
pub fn read_curve_csv(path: &Path) -> Result<S2Curve, IoError> {
    let shown = path.display().to_string();
    let text = read_file(path)?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| IoError::Parse {
                    path: shown.clone(),
                    line: i + 1,
                    message: format!("'{}': {e}", f.trim()),
                })
            })
            .collect::<Result<_, _>>()?;
        if v.len() != 3 {
            return Err(IoError::Parse {
                path: shown,
                line: i + 1,
                message: format!("expected 3 values, got {}", v.len()),
            });
        }
        samples.push(S2Point::normalize(Vec3::new(v[0], v[1], v[2])));
    }
    S2Curve::new(samples).map_err(|source| IoError::Curve { path: shown, source })
}

/// One `trajectory.csv` row in [`TRAJECTORY_HEADER`] order.
pub fn trajectory_line(row: &TrajectoryRow) -> String {
    let r = &row.report;
    // Fractions of vertices satisfying each pinching condition.
    let mut flags = format!("simons={};okumura={};huisken2d={}", r.simons, r.okumura, r.huisken2d);
    if let Some(stop) = row.stop {
        write!(flags, ";stop={stop}").unwrap();
    }
    format!(
        "{},{},{},{},{},{},{}",
        fmt17(row.t),
        fmt17(r.min_g),
        fmt17(r.max_a2),
        fmt17(r.max_speed),
        fmt17(r.area),
        fmt17(r.epsilon_star),
        flags
    )
}

/// Parses the stop reason out of a trajectory flags field.
pub fn stop_from_flags(flags: &str) -> Option<StopReason> {
    let value = flags.split(';').find_map(|f| f.strip_prefix("stop="))?;
    [
        StopReason::Converged,
        StopReason::Extinct,
        StopReason::ConditionBreached,
        StopReason::TimeExhausted,
        StopReason::MeshDegenerate,
    ]
    .into_iter()
    .find(|r| r.to_string() == value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use s3flow::mesh::{make_clifford_torus, make_geodesic_sphere};

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt17(f64::INFINITY), "inf");
    }

    #[test]
    fn raw4_round_trip() {
        let m = make_geodesic_sphere(0.9, 2, S3Point::IDENTITY).unwrap();
        let back = parse_raw4(&raw4_string(&m), Path::new("m.raw4")).unwrap();
        assert_eq!(back.triangles(), m.triangles());
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            assert!((a.coords() - b.coords()).amax() <= 1e-16);
        }
    }

    #[test]
    fn raw4_errors_carry_lines() {
        let e = parse_raw4("# vertices 1 triangles 0\n1,0,0\n", Path::new("bad.raw4")).unwrap_err();
        assert!(e.to_string().starts_with("bad.raw4:2:"), "{e}");
        let e = parse_raw4("1,0,0,0\n", Path::new("bad.raw4")).unwrap_err();
        assert!(e.to_string().contains("header"), "{e}");
    }

    #[test]
    fn obj_faces_are_one_based() {
        let m = make_clifford_torus(8, 8).unwrap();
        let text = obj3_string(&m).unwrap();
        let faces: Vec<&str> = text.lines().filter(|l| l.starts_with("f ")).collect();
        assert_eq!(faces.len(), m.triangles().len());
        let min = faces
            .iter()
            .flat_map(|l| l.split_whitespace().skip(1))
            .map(|i| i.parse::<usize>().unwrap())
            .min()
            .unwrap();
        assert_eq!(min, 1);
        assert!(text.starts_with("# s3flow obj3: stereographic projection from pole (-1,0,0,0)"));
    }

    #[test]
    fn pole_is_reselected_on_collision() {
        // Move one vertex onto the default pole.
        let m = make_geodesic_sphere(std::f64::consts::FRAC_PI_2, 1, S3Point::IDENTITY).unwrap();
        assert_eq!(choose_pole(&m).unwrap(), Pole::DEFAULT);
        let mut verts = m.vertices().to_vec();
        verts[0] = S3Point::normalize(Pole::DEFAULT.coords());
        let moved = m.with_vertices(verts).unwrap();
        let pole = choose_pole(&moved).unwrap();
        assert_ne!(pole, Pole::DEFAULT);
        assert!(obj3_string(&moved).unwrap().contains("reselected"));
    }

    #[test]
    fn stop_flag_round_trip() {
        assert_eq!(stop_from_flags("simons=1;stop=Extinct"), Some(StopReason::Extinct));
        assert_eq!(stop_from_flags("simons=1"), None);
    }
}
