//! VTK and CSV writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hydraulics::Hydraulics;
use crate::mesh::{Mesh, TraceGrid};

use super::sim::{SimState, StepRecord};

/// C `printf("%.17g")`.
pub fn fmt_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Legacy ASCII VTK with point scalars `p` [Pa], `s` and `u`.
pub fn write_vtk(mesh: &Mesh, u: &[f64], hyd: &Hydraulics, path: &Path) -> Result<()> {
    if u.len() != mesh.num_vertices() {
        return Err(Error::Dimension {
            expected: mesh.num_vertices(),
            found: u.len(),
        });
    }
    let mut f = create(path)?;
    let io = |e| Error::io(path, e);
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    let mut out = String::with_capacity(64 * nv);
    out.push_str("# vtk DataFile Version 3.0\nrichards\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    out.push_str(&format!("POINTS {nv} double\n"));
    for v in &mesh.vertices {
        out.push_str(&format!("{} {} 0\n", fmt_g17(v[0]), fmt_g17(v[1])));
    }
    out.push_str(&format!("CELLS {nt} {}\n", 4 * nt));
    for t in &mesh.triangles {
        out.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    out.push_str(&format!("CELL_TYPES {nt}\n"));
    for _ in 0..nt {
        out.push_str("5\n");
    }
    let states: Vec<_> = u.iter().map(|&x| hyd.state_at(x)).collect();
    out.push_str(&format!("POINT_DATA {nv}\n"));
    let mut scalars = |name: &str, vals: &mut dyn Iterator<Item = f64>| {
        out.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for x in vals {
            out.push_str(&fmt_g17(x));
            out.push('\n');
        }
    };
    scalars("p", &mut states.iter().map(|s| s.pressure));
    scalars("s", &mut states.iter().map(|s| s.saturation));
    scalars("u", &mut u.iter().copied());
    f.write_all(out.as_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

pub(crate) const SURFACE_HEADER: &str = "t,x_center,w\n";
pub(crate) const BOUNDS_HEADER: &str = "n,c,theta1_min,theta2_min,tau\n";

pub(crate) fn surface_rows(state: &SimState, trace: &TraceGrid) -> String {
    let mut out = String::new();
    for (x, w) in trace.centers.iter().zip(&state.w.values) {
        out.push_str(&format!("{},{},{}\n", fmt_g17(state.t), fmt_g17(*x), fmt_g17(*w)));
    }
    out
}

pub(crate) fn bounds_row(rec: &StepRecord, c: f64) -> String {
    format!(
        "{},{},{},{},{}\n",
        rec.n,
        fmt_g17(c),
        fmt_g17(rec.positivity.theta1_min),
        fmt_g17(rec.positivity.theta2_min),
        fmt_g17(rec.tau)
    )
}

/// Surface heights of one state, with header.
pub fn write_surface_csv(state: &SimState, trace: &TraceGrid, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    let io = |e| Error::io(path, e);
    f.write_all(SURFACE_HEADER.as_bytes()).map_err(io)?;
    f.write_all(surface_rows(state, trace).as_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

/// Per-step positivity bounds, with header.
pub fn write_bounds_csv(records: &[StepRecord], c: f64, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    let io = |e| Error::io(path, e);
    f.write_all(BOUNDS_HEADER.as_bytes()).map_err(io)?;
    for r in records {
        f.write_all(bounds_row(r, c).as_bytes()).map_err(io)?;
    }
    f.flush().map_err(io)
}

/// Appending CSV sink used during a run.
pub(crate) struct CsvSink {
    file: BufWriter<File>,
    path: std::path::PathBuf,
}

impl CsvSink {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        let mut file = create(path)?;
        file.write_all(header.as_bytes()).map_err(|e| Error::io(path, e))?;
        Ok(CsvSink {
            file,
            path: path.to_path_buf(),
        })
    }

    pub fn write(&mut self, text: &str) -> Result<()> {
        self.file.write_all(text.as_bytes()).map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.file.flush().map_err(|e| Error::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_g17;

    #[test]
    fn matches_printf() {
        assert_eq!(fmt_g17(0.0), "0");
        assert_eq!(fmt_g17(1.0), "1");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(100.0), "100");
        assert_eq!(fmt_g17(-712.2), "-712.20000000000005");
        assert_eq!(fmt_g17(8.33e-6), "8.3299999999999999e-06");
        assert_eq!(fmt_g17(1e17), "1e+17");
        assert_eq!(fmt_g17(12345678901234567.0), "12345678901234568");
        assert_eq!(fmt_g17(0.0001), "0.0001");
        assert_eq!(fmt_g17(f64::INFINITY), "inf");
    }
}
