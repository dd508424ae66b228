//! Structured triangulations of a rectangle, their uniform refinement
//! hierarchy, boundary tagging and inter-level transfer.
//!
//! Vertices are numbered row by row from the bottom, `idx = iz (nx + 1) + ix`.
//! Every cell is split along its lower-left to upper-right diagonal into the
//! triangles `(BL, BR, TR)` and `(BL, TR, TL)`, both counterclockwise.

use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Infiltration boundary carrying surface water.
    In,
    /// Seepage face, `u ≤ 0`.
    Out,
    /// No-flux boundary.
    Neumann,
}

/// Where the outflow and inflow boundaries sit on the rectangle.
///
/// The whole top edge is infiltration boundary; the listed x-intervals of the
/// bottom edge are seepage faces; everything else is no-flux.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub out_intervals: Vec<(f64, f64)>,
}

impl BoundarySpec {
    pub fn new(out_intervals: Vec<(f64, f64)>) -> Self {
        BoundarySpec { out_intervals }
    }

    fn contains(&self, x0: f64, x1: f64, tol: f64) -> bool {
        self.out_intervals
            .iter()
            .any(|&(a, b)| x0 >= a - tol && x1 <= b + tol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<([usize; 2], BoundaryTag)>,
    pub level: usize,
    nx: usize,
    nz: usize,
}

/// Dual cells of the infiltration boundary, one per boundary vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceGrid {
    /// Mesh vertex carrying each cell, ordered by increasing x.
    pub nodes: Vec<usize>,
    pub centers: Vec<f64>,
    /// Cell lengths `h_q^in` [m].
    pub weights: Vec<f64>,
}

impl TraceGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Per-vertex weights, zero away from the infiltration boundary.
    pub fn nodal_weights(&self, num_vertices: usize) -> Vec<f64> {
        let mut h = vec![0.0; num_vertices];
        for (&q, &w) in self.nodes.iter().zip(&self.weights) {
            h[q] = w;
        }
        h
    }
}

impl Mesh {
    fn structured(lx: f64, lz: f64, nx: usize, nz: usize, level: usize, spec: &BoundarySpec) -> Self {
        let row = nx + 1;
        let mut vertices = Vec::with_capacity(row * (nz + 1));
        for iz in 0..=nz {
            for ix in 0..=nx {
                vertices.push([lx * ix as f64 / nx as f64, lz * iz as f64 / nz as f64]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * nz);
        for iz in 0..nz {
            for ix in 0..nx {
                let bl = iz * row + ix;
                let (br, tl, tr) = (bl + 1, bl + row, bl + row + 1);
                triangles.push([bl, br, tr]);
                triangles.push([bl, tr, tl]);
            }
        }
        let tol = 1e-9 * lx;
        let mut boundary_edges = Vec::with_capacity(2 * (nx + nz));
        for ix in 0..nx {
            let (a, b) = (ix, ix + 1);
            let tag = if spec.contains(vertices[a][0], vertices[b][0], tol) {
                BoundaryTag::Out
            } else {
                BoundaryTag::Neumann
            };
            boundary_edges.push(([a, b], tag));
        }
        for iz in 0..nz {
            boundary_edges.push(([iz * row + nx, (iz + 1) * row + nx], BoundaryTag::Neumann));
        }
        for ix in (0..nx).rev() {
            boundary_edges.push(([nz * row + ix + 1, nz * row + ix], BoundaryTag::In));
        }
        for iz in (0..nz).rev() {
            boundary_edges.push(([(iz + 1) * row, iz * row], BoundaryTag::Neumann));
        }
        Mesh {
            vertices,
            triangles,
            boundary_edges,
            level,
            nx,
            nz,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Cell counts `(nx, nz)` of the underlying structured grid.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.nx, self.nz)
    }

    /// Signed area of triangle `t`; positive for counterclockwise triangles.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    /// Largest triangle diameter.
    pub fn mesh_size(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|tri| {
                [(0, 1), (1, 2), (2, 0)].map(|(i, j)| {
                    let (a, b) = (self.vertices[tri[i]], self.vertices[tri[j]]);
                    (a[0] - b[0]).hypot(a[1] - b[1])
                })
            })
            .fold(0.0, f64::max)
    }

    /// Gradients of the three barycentric coordinates of triangle `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        let two_area = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        [
            [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
            [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
        ]
    }

    /// `h_q = ∫ λ_q`, a third of the adjacent triangle areas.
    pub fn lumped_weights(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.num_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.area(t) / 3.0;
            for &q in tri {
                h[q] += a;
            }
        }
        h
    }

    fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|(_, t)| *t == tag)
            .flat_map(|(e, _)| *e)
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Vertices on seepage faces, sorted.
    pub fn out_nodes(&self) -> Vec<usize> {
        self.tagged_nodes(BoundaryTag::Out)
    }

    /// Vertices on the infiltration boundary, sorted.
    pub fn in_nodes(&self) -> Vec<usize> {
        self.tagged_nodes(BoundaryTag::In)
    }

    pub fn trace_grid(&self) -> Result<TraceGrid> {
        let mut weights = vec![0.0; self.num_vertices()];
        let mut any = false;
        for (e, tag) in &self.boundary_edges {
            if *tag != BoundaryTag::In {
                continue;
            }
            any = true;
            let (a, b) = (self.vertices[e[0]], self.vertices[e[1]]);
            let half = 0.5 * (a[0] - b[0]).hypot(a[1] - b[1]);
            weights[e[0]] += half;
            weights[e[1]] += half;
        }
        if !any {
            return Err(Error::Geometry("mesh has no infiltration boundary edges".into()));
        }
        let mut nodes = self.in_nodes();
        nodes.sort_by(|&a, &b| self.vertices[a][0].total_cmp(&self.vertices[b][0]));
        Ok(TraceGrid {
            centers: nodes.iter().map(|&q| self.vertices[q][0]).collect(),
            weights: nodes.iter().map(|&q| weights[q]).collect(),
            nodes,
        })
    }

    /// The mesh reflected at `x = Lx/2` with vertex numbering kept.
    pub fn mirrored_x(&self) -> Mesh {
        let lx = self.vertices.iter().map(|v| v[0]).fold(0.0, f64::max);
        Mesh {
            vertices: self.vertices.iter().map(|v| [lx - v[0], v[1]]).collect(),
            triangles: self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect(),
            boundary_edges: self.boundary_edges.iter().map(|(e, t)| ([e[1], e[0]], *t)).collect(),
            level: self.level,
            nx: self.nx,
            nz: self.nz,
        }
    }

    /// Vertex index of the structured grid point `(ix, iz)`.
    pub fn vertex_index(&self, ix: usize, iz: usize) -> usize {
        iz * (self.nx + 1) + ix
    }
}

/// Uniformly refined meshes from coarse (`levels[0]`) to fine.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    pub levels: Vec<Mesh>,
    /// `prolongations[j]` maps level `j` to level `j + 1`.
    pub prolongations: Vec<CsMat<f64>>,
}

impl MeshHierarchy {
    pub fn build_rect(
        lx: f64,
        ly: f64,
        nx0: usize,
        ny0: usize,
        levels: usize,
        spec: &BoundarySpec,
    ) -> Result<Self> {
        if nx0 == 0 || ny0 == 0 {
            return Err(Error::Geometry(format!("coarse grid needs at least one cell, got {nx0} x {ny0}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Geometry(format!("domain extents must be positive, got {lx} x {ly}")));
        }
        let tol = 1e-9 * lx;
        let dx0 = lx / nx0 as f64;
        let mut sorted = spec.out_intervals.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(a, b) in &sorted {
            if !(a < b) || a < -tol || b > lx + tol {
                return Err(Error::Geometry(format!("outflow interval [{a}, {b}] is not inside [0, {lx}]")));
            }
            for x in [a, b] {
                let k = (x / dx0).round();
                if (x - k * dx0).abs() > tol {
                    return Err(Error::Geometry(format!(
                        "outflow interval endpoint {x} does not coincide with a coarse vertex"
                    )));
                }
            }
        }
        for w in sorted.windows(2) {
            if w[1].0 < w[0].1 - tol {
                return Err(Error::Geometry(format!(
                    "outflow intervals [{}, {}] and [{}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }

        let meshes: Vec<Mesh> = (0..=levels)
            .map(|j| Mesh::structured(lx, ly, nx0 << j, ny0 << j, j, spec))
            .collect();
        let prolongations = meshes.windows(2).map(|w| prolongation(&w[0], &w[1])).collect();
        Ok(MeshHierarchy {
            levels: meshes,
            prolongations,
        })
    }

    pub fn finest(&self) -> &Mesh {
        self.levels.last().expect("hierarchy has at least one level")
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Nodal interpolation from level `j` to level `j + 1`.
    pub fn prolongate(&self, j: usize, coarse: &[f64]) -> Result<Vec<f64>> {
        let p = self.transfer(j)?;
        if coarse.len() != p.cols() {
            return Err(Error::Dimension {
                expected: p.cols(),
                found: coarse.len(),
            });
        }
        let mut out = vec![0.0; p.rows()];
        for (row, vec) in p.outer_iterator().enumerate() {
            out[row] = vec.iter().map(|(c, &v)| v * coarse[c]).sum();
        }
        Ok(out)
    }

    /// Transpose of [`prolongate`](Self::prolongate), from level `j + 1` to `j`.
    pub fn restrict(&self, j: usize, fine: &[f64]) -> Result<Vec<f64>> {
        let p = self.transfer(j)?;
        if fine.len() != p.rows() {
            return Err(Error::Dimension {
                expected: p.rows(),
                found: fine.len(),
            });
        }
        let mut out = vec![0.0; p.cols()];
        for (row, vec) in p.outer_iterator().enumerate() {
            for (c, &v) in vec.iter() {
                out[c] += v * fine[row];
            }
        }
        Ok(out)
    }

    fn transfer(&self, j: usize) -> Result<&CsMat<f64>> {
        self.prolongations.get(j).ok_or(Error::Dimension {
            expected: self.prolongations.len(),
            found: j,
        })
    }

    /// All levels reflected at the vertical midline.
    pub fn mirrored_x(&self) -> MeshHierarchy {
        MeshHierarchy {
            levels: self.levels.iter().map(Mesh::mirrored_x).collect(),
            prolongations: self.prolongations.clone(),
        }
    }
}

/// Convenience wrapper over [`MeshHierarchy::build_rect`].
pub fn build_rect_hierarchy(
    lx: f64,
    ly: f64,
    nx0: usize,
    ny0: usize,
    levels: usize,
    spec: &BoundarySpec,
) -> Result<MeshHierarchy> {
    MeshHierarchy::build_rect(lx, ly, nx0, ny0, levels, spec)
}

fn prolongation(coarse: &Mesh, fine: &Mesh) -> CsMat<f64> {
    let (cnx, cnz) = (coarse.nx, coarse.nz);
    let mut tri = TriMat::new((fine.num_vertices(), coarse.num_vertices()));
    for fz in 0..=2 * cnz {
        for fx in 0..=2 * cnx {
            let row = fine.vertex_index(fx, fz);
            let (cx, cz) = (fx / 2, fz / 2);
            match (fx % 2, fz % 2) {
                (0, 0) => tri.add_triplet(row, coarse.vertex_index(cx, cz), 1.0),
                (1, 0) => {
                    tri.add_triplet(row, coarse.vertex_index(cx, cz), 0.5);
                    tri.add_triplet(row, coarse.vertex_index(cx + 1, cz), 0.5);
                }
                (0, 1) => {
                    tri.add_triplet(row, coarse.vertex_index(cx, cz), 0.5);
                    tri.add_triplet(row, coarse.vertex_index(cx, cz + 1), 0.5);
                }
                _ => {
                    tri.add_triplet(row, coarse.vertex_index(cx, cz), 0.5);
                    tri.add_triplet(row, coarse.vertex_index(cx + 1, cz + 1), 0.5);
                }
            }
        }
    }
    tri.to_csr()
}
