//! Triangular meshes of the half-disk survey domain.
//!
//! The domain is `{(x, z) : z > 0, x² + z² < R²}` with the ground surface on `z = 0`.
//! Coordinates are stored as `[x, z]`; cells are counterclockwise in that frame.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification of boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Ground surface `z = 0`.
    #[serde(rename = "SURFACE")]
    Surface,
    /// Truncation boundary away from the surface.
    #[serde(rename = "FAR")]
    Far,
}

/// Conforming triangulation with oriented edges and tagged boundary.
///
/// Each edge is stored once as `[lo, hi]` with `lo < hi`; this is its global
/// orientation. Local edge `k` of a cell is the edge opposite its vertex `k`, and its
/// sign is `+1` when the counterclockwise traversal of the cell runs from `lo` to `hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    cell_edge_signs: Vec<[f64; 3]>,
    edge_cells: Vec<(usize, Option<usize>)>,
    boundary_tags: Vec<Option<BoundaryTag>>,
    electrode_nodes: Vec<usize>,
}

/// Grading controls for [`build_half_disk_mesh`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grading {
    /// Cells per electrode spacing along the surface.
    pub surface_refinement: usize,
    /// Rows of uniform cells in the surface layer.
    pub surface_layers: usize,
    /// Padding beyond the outer electrodes, in electrode spacings.
    pub margin: usize,
    /// Geometric growth ratio of the radial layers.
    pub growth: f64,
    /// Lower bound on the number of segments per radial layer.
    pub min_ring_segments: usize,
}

impl Default for Grading {
    fn default() -> Self {
        Self { surface_refinement: 3, surface_layers: 2, margin: 2, growth: 1.3, min_ring_segments: 8 }
    }
}

impl Grading {
    pub fn validate(&self) -> Result<()> {
        if self.surface_refinement == 0 || self.surface_layers == 0 {
            return Err(Error::Parameter("surface refinement and layers must be positive".into()));
        }
        if !(self.growth > 1.0) || !self.growth.is_finite() {
            return Err(Error::Parameter(format!("growth ratio must exceed 1, got {}", self.growth)));
        }
        if self.min_ring_segments < 2 {
            return Err(Error::Parameter("need at least 2 segments per radial layer".into()));
        }
        Ok(())
    }
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Builds a mesh and derives its edge structure.
    ///
    /// `boundary` must tag every edge that belongs to exactly one cell, and nothing else.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        boundary: &[([usize; 2], BoundaryTag)],
        electrode_nodes: Vec<usize>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if cells.is_empty() {
            return Err(Error::Mesh("no cells".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Mesh("non-finite vertex coordinate".into()));
        }
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(3 * cells.len() / 2 + 8);
        let mut edges = Vec::new();
        let mut edge_cells: Vec<(usize, Option<usize>)> = Vec::new();
        let mut edge_first_sign: Vec<f64> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut cell_edge_signs = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("cell {c} references a missing vertex")));
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if !(area > 0.0) {
                return Err(Error::Mesh(format!("cell {c} has non-positive area {area:e}")));
            }
            let mut ce = [0usize; 3];
            let mut cs = [0.0; 3];
            for k in 0..3 {
                let (p, q) = (cell[(k + 1) % 3], cell[(k + 2) % 3]);
                let key = [p.min(q), p.max(q)];
                let sign = if p < q { 1.0 } else { -1.0 };
                let e = match edge_index.get(&key) {
                    Some(&e) => {
                        if edge_cells[e].1.is_some() {
                            return Err(Error::Mesh(format!("edge {key:?} shared by more than two cells")));
                        }
                        if edge_first_sign[e] == sign {
                            return Err(Error::Mesh(format!(
                                "edge {key:?} traversed in the same direction by two cells"
                            )));
                        }
                        edge_cells[e].1 = Some(c);
                        e
                    }
                    None => {
                        let e = edges.len();
                        edges.push(key);
                        edge_cells.push((c, None));
                        edge_first_sign.push(sign);
                        edge_index.insert(key, e);
                        e
                    }
                };
                ce[k] = e;
                cs[k] = sign;
            }
            cell_edges.push(ce);
            cell_edge_signs.push(cs);
        }
        let mut boundary_tags = vec![None; edges.len()];
        for &([p, q], tag) in boundary {
            let key = [p.min(q), p.max(q)];
            let e = *edge_index
                .get(&key)
                .ok_or_else(|| Error::Mesh(format!("tagged edge {key:?} is not a mesh edge")))?;
            if edge_cells[e].1.is_some() {
                return Err(Error::Mesh(format!("tagged edge {key:?} is interior")));
            }
            if boundary_tags[e].replace(tag).is_some() {
                return Err(Error::Mesh(format!("edge {key:?} tagged twice")));
            }
        }
        for (e, ec) in edge_cells.iter().enumerate() {
            if ec.1.is_none() && boundary_tags[e].is_none() {
                return Err(Error::Mesh(format!("boundary edge {:?} has no tag", edges[e])));
            }
        }
        if electrode_nodes.iter().any(|&v| v >= nv) {
            return Err(Error::Mesh("electrode node out of range".into()));
        }
        Ok(Self {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_edge_signs,
            edge_cells,
            boundary_tags,
            electrode_nodes,
        })
    }

    /// Builds a mesh, tagging boundary edges with `classify(p, q)`.
    pub fn with_classifier<F>(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        electrode_nodes: Vec<usize>,
        classify: F,
    ) -> Result<Self>
    where
        F: Fn([f64; 2], [f64; 2]) -> BoundaryTag,
    {
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for cell in &cells {
            for k in 0..3 {
                let (p, q) = (cell[(k + 1) % 3], cell[(k + 2) % 3]);
                *count.entry([p.min(q), p.max(q)]).or_default() += 1;
            }
        }
        let mut boundary: Vec<([usize; 2], BoundaryTag)> = count
            .into_iter()
            .filter(|&(_, n)| n == 1)
            .filter(|(e, _)| e[0] < vertices.len() && e[1] < vertices.len())
            .map(|(e, _)| (e, classify(vertices[e[0]], vertices[e[1]])))
            .collect();
        boundary.sort_by_key(|b| b.0);
        Self::new(vertices, cells, &boundary, electrode_nodes)
    }

    /// Structured triangulation of `[x0, x1] x [z0, z1]`.
    ///
    /// The bottom side is tagged SURFACE, the rest FAR.
    pub fn rectangle(x0: f64, x1: f64, z0: f64, z1: f64, nx: usize, nz: usize) -> Result<Self> {
        if nx == 0 || nz == 0 || !(x1 > x0) || !(z1 > z0) {
            return Err(Error::Parameter("degenerate rectangle".into()));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (nz + 1));
        for j in 0..=nz {
            for i in 0..=nx {
                let x = x0 + (x1 - x0) * i as f64 / nx as f64;
                let z = z0 + (z1 - z0) * j as f64 / nz as f64;
                vertices.push([x, z]);
            }
        }
        let mut cells = Vec::with_capacity(2 * nx * nz);
        for j in 0..nz {
            for i in 0..nx {
                push_quad(&mut cells, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), (i + j) % 2 == 0);
            }
        }
        let tol = 1e-12 * (z1 - z0);
        Self::with_classifier(vertices, cells, Vec::new(), |p, q| {
            if (p[1] - z0).abs() <= tol && (q[1] - z0).abs() <= tol {
                BoundaryTag::Surface
            } else {
                BoundaryTag::Far
            }
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell_edges(&self) -> &[[usize; 3]] {
        &self.cell_edges
    }

    /// Orientation signs matching [`Mesh::cell_edges`].
    pub fn cell_edge_signs(&self) -> &[[f64; 3]] {
        &self.cell_edge_signs
    }

    /// Cells adjacent to each edge; the second is `None` on the boundary.
    pub fn edge_cells(&self) -> &[(usize, Option<usize>)] {
        &self.edge_cells
    }

    pub fn edge_tag(&self, e: usize) -> Option<BoundaryTag> {
        self.boundary_tags[e]
    }

    /// Boundary edges with their tags, in edge order.
    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, BoundaryTag)> + '_ {
        self.boundary_tags.iter().enumerate().filter_map(|(e, t)| t.map(|t| (e, t)))
    }

    pub fn electrode_nodes(&self) -> &[usize] {
        &self.electrode_nodes
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cells[c];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[d])
    }

    pub fn cell_areas(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|c| self.cell_area(c)).collect()
    }

    pub fn cell_centroid(&self, c: usize) -> [f64; 2] {
        let [a, b, d] = self.cells[c].map(|v| self.vertices[v]);
        [(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        self.cell_areas().iter().sum()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [p, q] = self.edges[e].map(|v| self.vertices[v]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    /// Nodes lying on at least one edge with the given tag, sorted.
    pub fn nodes_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .boundary_edges()
            .filter(|&(_, t)| t == tag)
            .flat_map(|(e, _)| self.edges[e])
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Red refinement: every triangle is split into four congruent children.
    ///
    /// Original vertices keep their indices and edge midpoints are appended in edge
    /// order. The children of cell `c` are cells `4c .. 4c + 4`, so cellwise data
    /// is transferred with [`Mesh::prolong_cellwise`].
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let nv = self.n_vertices();
        let mut vertices = self.vertices.clone();
        for &[p, q] in &self.edges {
            let (a, b) = (self.vertices[p], self.vertices[q]);
            vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        }
        let mut cells = Vec::with_capacity(4 * self.n_cells());
        for (c, &[a, b, d]) in self.cells.iter().enumerate() {
            let [e0, e1, e2] = self.cell_edges[c];
            // e0 opposite a, i.e. midpoint of (b, d); likewise for the others.
            let (m_bd, m_da, m_ab) = (nv + e0, nv + e1, nv + e2);
            cells.push([a, m_ab, m_da]);
            cells.push([m_ab, b, m_bd]);
            cells.push([m_da, m_bd, d]);
            cells.push([m_ab, m_bd, m_da]);
        }
        let mut boundary = Vec::new();
        for (e, tag) in self.boundary_edges() {
            let [p, q] = self.edges[e];
            boundary.push(([p, nv + e], tag));
            boundary.push(([nv + e, q], tag));
        }
        Mesh::new(vertices, cells, &boundary, self.electrode_nodes.clone())
    }

    /// Transfers cellwise values to a mesh produced by [`Mesh::refine_uniform`].
    pub fn prolong_cellwise(values: &[f64]) -> Vec<f64> {
        values.iter().flat_map(|&v| [v; 4]).collect()
    }
}

fn push_quad(cells: &mut Vec<[usize; 3]>, v00: usize, v10: usize, v11: usize, v01: usize, main_diagonal: bool) {
    if main_diagonal {
        cells.push([v00, v10, v11]);
        cells.push([v00, v11, v01]);
    } else {
        cells.push([v00, v10, v01]);
        cells.push([v10, v11, v01]);
    }
}

/// Graded mesh of the half-disk of `radius` with nodes at `n_electrodes` equidistant
/// surface positions spanning `extent`.
///
/// A structured layer of uniform cells covers the electrode line plus a margin. Beyond
/// it, radial layers of geometrically increasing thickness blend the layer's outline
/// into the polygonal semicircle of `radius`; each layer has at most as many segments
/// as the one inside it, so the cell count grows linearly with `n_electrodes`.
pub fn build_half_disk_mesh(
    radius: f64,
    n_electrodes: usize,
    extent: (f64, f64),
    grading: &Grading,
) -> Result<Mesh> {
    grading.validate()?;
    let (a, b) = extent;
    if n_electrodes < 2 {
        return Err(Error::Parameter(format!("need at least 2 electrodes, got {n_electrodes}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    if !(b > a) || !(a > -radius) || !(b < radius) {
        return Err(Error::Parameter(format!("extent [{a}, {b}] not inside (-{radius}, {radius})")));
    }
    let spacing = (b - a) / (n_electrodes - 1) as f64;
    let refine = grading.surface_refinement;
    let hs = spacing / refine as f64;
    let pad_cols = grading.margin * refine;
    let x_left = a - pad_cols as f64 * hs;
    let x_right = b + pad_cols as f64 * hs;
    let height = grading.surface_layers as f64 * hs;
    if x_left <= -radius + hs || x_right >= radius - hs || height >= 0.5 * radius {
        return Err(Error::Parameter(
            "surface layer does not fit inside the half-disk; reduce margin or layers".into(),
        ));
    }
    let ncol = (n_electrodes - 1) * refine + 2 * pad_cols;
    let nrow = grading.surface_layers;

    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let id = |i: usize, j: usize| j * (ncol + 1) + i;
    for j in 0..=nrow {
        for i in 0..=ncol {
            let x = a + (i as f64 - pad_cols as f64) * hs;
            vertices.push([x, j as f64 * hs]);
        }
    }
    let electrode_nodes: Vec<usize> = (0..n_electrodes).map(|e| id(pad_cols + e * refine, 0)).collect();
    for (e, &v) in electrode_nodes.iter().enumerate() {
        vertices[v][0] = a + e as f64 * spacing;
    }
    let mut cells = Vec::new();
    for j in 0..nrow {
        for i in 0..ncol {
            push_quad(&mut cells, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), (i + j) % 2 == 0);
        }
    }

    // Radial layers. Every point of the surface-layer outline sends a ray outward
    // (horizontal from the sides, vertical from the top, fanning around the two
    // corners) to the circle, and layer j sits at a graded fraction of each ray. The
    // outline is split into five sections (side, fan, top, fan, side); a point is
    // addressed by section index plus a fraction in [0, 1].
    let rays = RayMap { x_left, x_right, height, radius };
    let mut ring: Vec<usize> = (0..=nrow).map(|j| id(0, j)).collect();
    ring.extend((1..=ncol).map(|i| id(i, nrow)));
    ring.extend((0..nrow).rev().map(|j| id(ncol, j)));
    let mut ring_params: Vec<f64> = (0..=nrow).map(|j| j as f64 / nrow as f64).collect();
    ring_params.extend((1..=ncol).map(|i| 2.0 + i as f64 / ncol as f64));
    ring_params.extend((1..=nrow).map(|j| 4.0 + j as f64 / nrow as f64));
    let mut prev_counts = [nrow, 0, ncol, 0, nrow];

    // Number of layers: first layer no thicker than growth * hs at the top.
    let q = grading.growth;
    let gap = radius - height;
    let mut n_layers = 1usize;
    while gap * (q - 1.0) / (q.powi(n_layers as i32) - 1.0) > q * hs && n_layers < 200 {
        n_layers += 1;
    }
    // Geometric layers along a ray of length d, with the ratio chosen so that the
    // first layer is about growth * hs thick; uniform on short rays.
    let first = q * hs;
    let layer_ratio = |d: f64| -> f64 {
        if d / n_layers as f64 <= first {
            return 1.0;
        }
        let f = |r: f64| d * (r - 1.0) / (r.powi(n_layers as i32) - 1.0) - first;
        let (mut lo, mut hi) = (1.0 + 1e-12, 8.0 * q.max(2.0));
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let blend = |ratio: f64, j: usize| -> f64 {
        if j >= n_layers {
            1.0
        } else if ratio == 1.0 {
            j as f64 / n_layers as f64
        } else {
            (ratio.powi(j as i32) - 1.0) / (ratio.powi(n_layers as i32) - 1.0)
        }
    };
    let layer_point = |u: f64, j: usize| -> [f64; 2] {
        let (c, e, len) = rays.ray(u);
        let t = blend(layer_ratio(len), j) * len;
        let mut p = [c[0] + t * e[0], c[1] + t * e[1]];
        if u == 0.0 || u == 5.0 {
            p[1] = 0.0;
            if j == n_layers {
                p[0] = if u == 0.0 { -radius } else { radius };
            }
        }
        p
    };
    let top_ratio = layer_ratio(gap);

    for j in 1..=n_layers {
        let thickness = gap * (blend(top_ratio, j) - blend(top_ratio, j - 1));
        let min_top = grading.min_ring_segments.saturating_sub(2).max(1);
        let mut counts = [0usize; 5];
        for (t, count) in counts.iter_mut().enumerate() {
            let samples = 32;
            let len: f64 = (0..samples)
                .map(|i| {
                    let a = layer_point(t as f64 + i as f64 / samples as f64, j);
                    let b = layer_point(t as f64 + (i + 1) as f64 / samples as f64, j);
                    (b[0] - a[0]).hypot(b[1] - a[1])
                })
                .sum();
            let want = (len / thickness).ceil() as usize;
            *count = match t {
                1 | 3 => want.max(1),
                2 => want.max(min_top).min(prev_counts[t].max(min_top)),
                _ => want.max(1).min(prev_counts[t].max(1)),
            };
        }
        let mut next_ring = Vec::new();
        let mut next_params = Vec::new();
        for (t, &count) in counts.iter().enumerate() {
            let start = if t == 0 { 0 } else { 1 };
            for k in start..=count {
                let u = t as f64 + k as f64 / count as f64;
                next_ring.push(vertices.len());
                next_params.push(u);
                vertices.push(layer_point(u, j));
            }
        }
        zip_rings(&mut cells, &ring, &ring_params, &next_ring, &next_params);
        ring = next_ring;
        ring_params = next_params;
        prev_counts = counts;
    }

    let tol = 1e-9 * radius;
    let mesh = Mesh::with_classifier(vertices, cells, electrode_nodes, |p, q| {
        if p[1].abs() <= tol && q[1].abs() <= tol {
            BoundaryTag::Surface
        } else {
            BoundaryTag::Far
        }
    })
    .map_err(|e| Error::Parameter(format!("grading produced an invalid mesh: {e}")))?;
    Ok(mesh)
}

/// Outward rays from the outline of the surface layer to the circle.
struct RayMap {
    x_left: f64,
    x_right: f64,
    height: f64,
    radius: f64,
}

impl RayMap {
    /// Origin, unit direction and length of the ray at parameter `u` in `[0, 5]`.
    fn ray(&self, u: f64) -> ([f64; 2], [f64; 2], f64) {
        let section = (u.floor() as usize).min(4);
        let f = u - section as f64;
        let (c, e) = match section {
            0 => ([self.x_left, f * self.height], [-1.0, 0.0]),
            1 => {
                let a = PI * (1.0 - 0.5 * f);
                ([self.x_left, self.height], [a.cos(), a.sin()])
            }
            2 => ([self.x_left + f * (self.x_right - self.x_left), self.height], [0.0, 1.0]),
            3 => {
                let a = 0.5 * PI * (1.0 - f);
                ([self.x_right, self.height], [a.cos(), a.sin()])
            }
            _ => ([self.x_right, (1.0 - f) * self.height], [1.0, 0.0]),
        };
        let ce = c[0] * e[0] + c[1] * e[1];
        let cc = c[0] * c[0] + c[1] * c[1];
        let len = -ce + (ce * ce - cc + self.radius * self.radius).sqrt();
        (c, e, len)
    }
}

/// Triangulates the strip between two polylines parametrized on `[0, 1]`.
fn zip_rings(cells: &mut Vec<[usize; 3]>, inner: &[usize], ui: &[f64], outer: &[usize], uo: &[f64]) {
    let (mut i, mut k) = (0usize, 0usize);
    while i + 1 < inner.len() || k + 1 < outer.len() {
        let advance_inner = k + 1 == outer.len() || (i + 1 < inner.len() && ui[i + 1] <= uo[k + 1]);
        if advance_inner {
            cells.push([inner[i], inner[i + 1], outer[k]]);
            i += 1;
        } else {
            cells.push([inner[i], outer[k + 1], outer[k]]);
            k += 1;
        }
    }
}

/// On-disk mesh layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEntry>,
    pub electrodes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryEntry {
    pub edge: [usize; 2],
    pub tag: BoundaryTag,
}

impl From<&Mesh> for MeshFile {
    fn from(m: &Mesh) -> Self {
        MeshFile {
            vertices: m.vertices.clone(),
            cells: m.cells.clone(),
            boundary: m.boundary_edges().map(|(e, tag)| BoundaryEntry { edge: m.edges[e], tag }).collect(),
            electrodes: m.electrode_nodes.clone(),
        }
    }
}

impl TryFrom<MeshFile> for Mesh {
    type Error = Error;

    fn try_from(f: MeshFile) -> Result<Mesh> {
        let boundary: Vec<_> = f.boundary.iter().map(|b| (b.edge, b.tag)).collect();
        Mesh::new(f.vertices, f.cells, &boundary, f.electrodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_triangle() -> Mesh {
        Mesh::with_classifier(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![],
            |_, _| BoundaryTag::Far,
        )
        .unwrap()
    }

    #[test]
    fn clockwise_cell_is_rejected() {
        let r = Mesh::with_classifier(
            vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
            vec![[0, 1, 2]],
            vec![],
            |_, _| BoundaryTag::Far,
        );
        assert!(matches!(r, Err(Error::Mesh(_))));
    }

    #[test]
    fn untagged_boundary_is_rejected() {
        let r = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], &[], vec![]);
        assert!(r.is_err());
    }

    #[test]
    fn unit_square_has_five_edges() {
        let m = Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_edges(), 5);
        assert_eq!(m.boundary_edges().count(), 4);
    }

    #[test]
    fn refining_one_triangle() {
        let m = one_triangle().refine_uniform().unwrap();
        assert_eq!(m.n_cells(), 4);
        assert_eq!(m.n_vertices(), 6);
        assert!((m.total_area() - 0.5).abs() <= 1e-12 * 0.5);
        for c in 0..4 {
            assert!((m.cell_area(c) - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn interior_edges_have_opposite_signs() {
        let m = Mesh::rectangle(0.0, 2.0, 0.0, 1.0, 4, 3).unwrap();
        let mut seen: HashMap<usize, Vec<f64>> = HashMap::new();
        for (c, es) in m.cell_edges().iter().enumerate() {
            for k in 0..3 {
                seen.entry(es[k]).or_default().push(m.cell_edge_signs()[c][k]);
            }
        }
        for (e, s) in seen {
            match m.edge_tag(e) {
                Some(_) => assert_eq!(s.len(), 1),
                None => {
                    assert_eq!(s.len(), 2);
                    assert_eq!(s[0], -s[1]);
                }
            }
        }
    }

    #[test]
    fn minimal_half_disk() {
        let g = Grading { surface_refinement: 1, surface_layers: 1, margin: 1, ..Grading::default() };
        let m = build_half_disk_mesh(80.0, 2, (-10.0, 10.0), &g).unwrap();
        assert!(m.n_cells() >= 2);
        assert_eq!(m.electrode_nodes().len(), 2);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = Grading::default();
        assert!(build_half_disk_mesh(80.0, 1, (-50.0, 50.0), &g).is_err());
        assert!(build_half_disk_mesh(80.0, 17, (-90.0, 50.0), &g).is_err());
        assert!(build_half_disk_mesh(80.0, 17, (50.0, -50.0), &g).is_err());
        let bad = Grading { growth: 1.0, ..g };
        assert!(build_half_disk_mesh(80.0, 17, (-50.0, 50.0), &bad).is_err());
    }

    /// Boundary shoelace area, with each boundary edge oriented by its cell.
    fn boundary_area(m: &Mesh) -> f64 {
        let mut twice = 0.0;
        for (c, es) in m.cell_edges().iter().enumerate() {
            let cell = m.cells()[c];
            for k in 0..3 {
                if m.edge_tag(es[k]).is_some() {
                    let (p, q) = (m.vertices()[cell[(k + 1) % 3]], m.vertices()[cell[(k + 2) % 3]]);
                    twice += p[0] * q[1] - q[0] * p[1];
                }
            }
        }
        0.5 * twice
    }

    fn check_invariants(m: &Mesh, radius: f64) {
        let (v, e, c) = (m.n_vertices() as i64, m.n_edges() as i64, m.n_cells() as i64);
        assert_eq!(v - e + c, 1);
        assert!(m.cell_areas().iter().all(|&a| a > 0.0));
        let area = m.total_area();
        assert!((area - boundary_area(m)).abs() <= 1e-10 * area);
        for (e, tag) in m.boundary_edges() {
            let [a, b] = m.edges()[e];
            let on_surface = |i: usize| m.vertices()[i][1].abs() <= 1e-9 * radius;
            match tag {
                BoundaryTag::Surface => assert!(on_surface(a) && on_surface(b)),
                BoundaryTag::Far => assert!(!on_surface(a) || !on_surface(b)),
            }
        }
        for (e, &(_, other)) in m.edge_cells().iter().enumerate() {
            assert_eq!(other.is_none(), m.edge_tag(e).is_some());
        }
    }

    #[test]
    fn half_disk_invariants() {
        let extent = (-50.0, 50.0);
        for n in [17, 33, 65] {
            let m = build_half_disk_mesh(80.0, n, extent, &Grading::default()).unwrap();
            check_invariants(&m, 80.0);
            let spacing = 100.0 / (n - 1) as f64;
            for (i, &node) in m.electrode_nodes().iter().enumerate() {
                let p = m.vertices()[node];
                assert!((p[0] - (-50.0 + i as f64 * spacing)).abs() <= 1e-12 * 100.0);
                assert_eq!(p[1], 0.0);
            }
            let half_disk = 0.5 * std::f64::consts::PI * 80.0 * 80.0;
            assert!(m.total_area() < half_disk && m.total_area() > 0.97 * half_disk);
        }
    }

    #[test]
    fn cell_count_grows_linearly() {
        let counts: Vec<usize> = [17, 33, 65]
            .iter()
            .map(|&n| build_half_disk_mesh(80.0, n, (-50.0, 50.0), &Grading::default()).unwrap().n_cells())
            .collect();
        for w in counts.windows(2) {
            assert!(w[1] > w[0] && w[1] <= 3 * w[0], "{counts:?}");
        }
    }

    #[test]
    fn refined_half_disk_keeps_electrodes_and_area() {
        let m = build_half_disk_mesh(80.0, 17, (-50.0, 50.0), &Grading::default()).unwrap();
        let f = m.refine_uniform().unwrap();
        check_invariants(&f, 80.0);
        assert_eq!(f.n_cells(), 4 * m.n_cells());
        assert!((f.total_area() - m.total_area()).abs() <= 1e-12 * m.total_area());
        for (&a, &b) in m.electrode_nodes().iter().zip(f.electrode_nodes()) {
            assert_eq!(m.vertices()[a], f.vertices()[b]);
        }
        for (e, tag) in f.boundary_edges() {
            let [a, b] = f.edges()[e];
            let mid = [(f.vertices()[a][0] + f.vertices()[b][0]) / 2.0, (f.vertices()[a][1] + f.vertices()[b][1]) / 2.0];
            assert_eq!(tag == BoundaryTag::Surface, mid[1].abs() <= 1e-9 * 80.0);
        }
    }

    #[test]
    fn prolongation_copies_parent_values() {
        assert_eq!(Mesh::prolong_cellwise(&[1.0, 2.0]), vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn rectangle_refinement_invariants(nx in 1usize..6, nz in 1usize..6, w in 0.5f64..3.0) {
            let m = Mesh::rectangle(0.0, w, 0.0, 1.0, nx, nz).unwrap();
            check_invariants(&m, w);
            let f = m.refine_uniform().unwrap();
            check_invariants(&f, w);
            proptest::prop_assert!((f.total_area() - w).abs() <= 1e-12 * w);
        }

        #[test]
        fn half_disk_invariants_for_any_grading(
            n in 2usize..40,
            refine in 1usize..4,
            layers in 1usize..4,
            margin in 1usize..4,
            growth in 1.2f64..2.0,
        ) {
            let g = Grading { surface_refinement: refine, surface_layers: layers, margin, growth, ..Grading::default() };
            match build_half_disk_mesh(80.0, n, (-50.0, 50.0), &g) {
                Ok(m) => {
                    check_invariants(&m, 80.0);
                    proptest::prop_assert_eq!(m.electrode_nodes().len(), n);
                }
                // Wide spacings with a large margin overflow the disk.
                Err(Error::Parameter(_)) => proptest::prop_assume!(n < 9),
                Err(e) => proptest::prop_assert!(false, "{e}"),
            }
        }
    }
}
