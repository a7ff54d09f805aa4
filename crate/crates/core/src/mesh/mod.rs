//! Primal/dual mesh hierarchy.
//!
//! A user supplied polygonal partition (the primal cells) is subdivided by
//! connecting an interior point of every cell to its vertices. This yields
//! three layers that share one vertex array:
//!
//! - primal cells, each the fan of triangles around its center,
//! - the triangles themselves,
//! - the edges, split into *primal* edges (the polygon sides) and *dual*
//!   edges (segments joining a cell center to one of its vertices).
//!
//! A dual element is the union of the one or two triangles adjacent to a
//! primal edge. Edge ids are assigned so that all primal edges come first:
//! `0..n_primal_edges` are primal and the remaining ids are dual.

mod io;
mod perturb;
mod regularity;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use io::{read_mesh, write_mesh, MeshFile, MeshFileCell};
pub use perturb::{perturb_mesh, Perturbation, DEFAULT_PERTURBATION};
pub use regularity::{validate_regularity, RegularityReport, DEFAULT_RHO};

pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub const fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Rect { x_min, x_max, y_min, y_max }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    fn is_valid(&self) -> bool {
        [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite())
            && self.x_max > self.x_min
            && self.y_max > self.y_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl Vertex {
    pub fn point(&self) -> Point {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalCell {
    pub id: usize,
    /// Polygon vertices, counter-clockwise.
    pub vertex_ids: Vec<usize>,
    /// Interior point the fan triangles are built around.
    pub center: Point,
    /// Index of the center in the shared vertex array.
    pub center_id: usize,
    pub triangle_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub id: usize,
    /// `[center, v_i, v_{i+1}]`, counter-clockwise.
    pub vertex_ids: [usize; 3],
    pub primal_edge_id: usize,
    /// Dual edges through `(center, v_i)` and `(center, v_{i+1})`.
    pub dual_edge_ids: [usize; 2],
    pub parent_cell_id: usize,
    pub diameter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub kind: EdgeKind,
    /// Endpoints ordered by vertex id; this ordering fixes the edge parametrization.
    pub endpoint_ids: [usize; 2],
    /// Adjacent triangles in ascending id order.
    pub triangle_ids: Vec<usize>,
    /// Unit normal: outward on the boundary, otherwise from `triangle_ids[0]`
    /// towards `triangle_ids[1]`.
    pub normal: [f64; 2],
    pub is_boundary: bool,
    pub length: f64,
}

/// Cell description used to build a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub vertices: Vec<usize>,
    pub center: Option<Point>,
}

impl CellSpec {
    pub fn new(vertices: Vec<usize>) -> Self {
        CellSpec { vertices, center: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredMesh {
    /// Primal vertices followed by one center per cell.
    pub vertices: Vec<Vertex>,
    pub n_primal_vertices: usize,
    pub cells: Vec<PrimalCell>,
    pub triangles: Vec<Triangle>,
    pub edges: Vec<Edge>,
    pub n_primal_edges: usize,
    /// Largest triangle diameter.
    pub h: f64,
}

/// Relative tolerance for zero-area and collinearity tests.
const GEOM_EPS: f64 = 1e-12;
/// Fan triangles are rejected only when (numerically) flat or inverted.
const FAN_EPS: f64 = 1e-14;

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

/// Twice the signed area of `(a, b, c)`.
pub(crate) fn cross3(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn polygon_signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

/// Area centroid of a simple polygon.
pub fn polygon_centroid(pts: &[Point]) -> Point {
    let n = pts.len();
    let area = polygon_signed_area(pts);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let w = a[0] * b[1] - b[0] * a[1];
        cx += (a[0] + b[0]) * w;
        cy += (a[1] + b[1]) * w;
    }
    [cx / (6.0 * area), cy / (6.0 * area)]
}

pub(crate) fn polygon_diameter(pts: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            d = d.max(dist(a, b));
        }
    }
    d
}

impl StaggeredMesh {
    /// Builds the full hierarchy from primal vertices and polygonal cells.
    ///
    /// Clockwise polygons are reoriented. Cells without an explicit center
    /// use their area centroid. Hanging nodes must be listed as vertices of
    /// every cell whose boundary passes through them.
    pub fn from_primal(points: &[Point], cells: &[CellSpec]) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::InvalidMesh(format!("vertex {i} has a non-finite coordinate")));
            }
        }
        let n_pv = points.len();
        let mut vertices: Vec<Vertex> =
            points.iter().enumerate().map(|(id, p)| Vertex { id, x: p[0], y: p[1] }).collect();

        // Orient polygons and place centers.
        let mut polys: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
        let mut centers: Vec<Point> = Vec::with_capacity(cells.len());
        for (c, spec) in cells.iter().enumerate() {
            let ids = &spec.vertices;
            if ids.len() < 3 {
                return Err(Error::InvalidMesh(format!("cell {c} has fewer than 3 vertices")));
            }
            for &v in ids {
                if v >= n_pv {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} references vertex {v} but the mesh has {n_pv} vertices"
                    )));
                }
            }
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!("cell {c} repeats a vertex")));
            }
            let pts: Vec<Point> = ids.iter().map(|&v| points[v]).collect();
            let area = polygon_signed_area(&pts);
            let diam = polygon_diameter(&pts);
            if area.abs() <= GEOM_EPS * diam * diam {
                return Err(Error::InvalidMesh(format!("cell {c} has zero area")));
            }
            let mut ids = ids.clone();
            if area < 0.0 {
                ids.reverse();
            }
            let center = match spec.center {
                Some(p) if p[0].is_finite() && p[1].is_finite() => p,
                Some(_) => return Err(Error::InvalidMesh(format!("cell {c} has a non-finite center"))),
                None => polygon_centroid(&pts),
            };
            polys.push(ids);
            centers.push(center);
        }
        for (c, &center) in centers.iter().enumerate() {
            vertices.push(Vertex { id: n_pv + c, x: center[0], y: center[1] });
        }
        let coord = |v: usize| vertices[v].point();

        // Primal edges, keyed by sorted endpoint pair; remember traversal direction.
        let mut primal_key: HashMap<(usize, usize), usize> = HashMap::new();
        let mut primal_dirs: Vec<Vec<bool>> = Vec::new();
        let mut edges: Vec<Edge> = Vec::new();
        for (c, ids) in polys.iter().enumerate() {
            let k = ids.len();
            for i in 0..k {
                let (a, b) = (ids[i], ids[(i + 1) % k]);
                let key = (a.min(b), a.max(b));
                let id = *primal_key.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        id: edges.len(),
                        kind: EdgeKind::Primal,
                        endpoint_ids: [key.0, key.1],
                        triangle_ids: Vec::with_capacity(2),
                        normal: [0.0, 0.0],
                        is_boundary: false,
                        length: dist(coord(key.0), coord(key.1)),
                    });
                    primal_dirs.push(Vec::with_capacity(2));
                    edges.len() - 1
                });
                primal_dirs[id].push(a < b);
                if primal_dirs[id].len() > 2 {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is shared by more than two cells (cell {c})",
                        key.0, key.1
                    )));
                }
            }
        }
        for (id, dirs) in primal_dirs.iter().enumerate() {
            if dirs.len() == 2 && dirs[0] == dirs[1] {
                let [a, b] = edges[id].endpoint_ids;
                return Err(Error::InvalidMesh(format!("cells overlap along edge ({a}, {b})")));
            }
        }
        let n_primal_edges = edges.len();

        // Fan triangles and dual edges.
        let mut prim_cells: Vec<PrimalCell> = Vec::with_capacity(polys.len());
        let mut triangles: Vec<Triangle> = Vec::new();
        for (c, ids) in polys.iter().enumerate() {
            let k = ids.len();
            let center_id = n_pv + c;
            let first_dual = edges.len();
            for &v in ids {
                edges.push(Edge {
                    id: edges.len(),
                    kind: EdgeKind::Dual,
                    endpoint_ids: [v, center_id],
                    triangle_ids: Vec::with_capacity(2),
                    normal: [0.0, 0.0],
                    is_boundary: false,
                    length: dist(coord(v), centers[c]),
                });
            }
            let first_tri = triangles.len();
            for i in 0..k {
                let (a, b) = (ids[i], ids[(i + 1) % k]);
                let tri_pts = [centers[c], coord(a), coord(b)];
                let diameter =
                    dist(tri_pts[0], tri_pts[1]).max(dist(tri_pts[1], tri_pts[2])).max(dist(tri_pts[0], tri_pts[2]));
                let area2 = cross3(tri_pts[0], tri_pts[1], tri_pts[2]);
                if area2 <= FAN_EPS * diameter * diameter {
                    return Err(Error::NotStarShaped { cell: c });
                }
                let id = triangles.len();
                let primal_edge_id = primal_key[&(a.min(b), a.max(b))];
                let dual_edge_ids = [first_dual + i, first_dual + (i + 1) % k];
                edges[primal_edge_id].triangle_ids.push(id);
                edges[dual_edge_ids[0]].triangle_ids.push(id);
                edges[dual_edge_ids[1]].triangle_ids.push(id);
                triangles.push(Triangle {
                    id,
                    vertex_ids: [center_id, a, b],
                    primal_edge_id,
                    dual_edge_ids,
                    parent_cell_id: c,
                    diameter,
                });
            }
            prim_cells.push(PrimalCell {
                id: c,
                vertex_ids: ids.clone(),
                center: centers[c],
                center_id,
                triangle_ids: (first_tri..first_tri + k).collect(),
            });
        }

        // Orientation of normals.
        for edge in edges.iter_mut() {
            edge.triangle_ids.sort_unstable();
            edge.is_boundary = edge.triangle_ids.len() == 1;
            let (pa, pb) = (coord(edge.endpoint_ids[0]), coord(edge.endpoint_ids[1]));
            let t = sub(pb, pa);
            let mut n = [t[1] / edge.length, -t[0] / edge.length];
            let tri = &triangles[edge.triangle_ids[0]];
            let opposite = tri
                .vertex_ids
                .iter()
                .copied()
                .find(|v| !edge.endpoint_ids.contains(v))
                .expect("triangle has a vertex off the edge");
            let to_opp = sub(coord(opposite), pa);
            if n[0] * to_opp[0] + n[1] * to_opp[1] > 0.0 {
                n = [-n[0], -n[1]];
            }
            edge.normal = n;
        }

        let mesh = StaggeredMesh {
            h: triangles.iter().map(|t| t.diameter).fold(0.0, f64::max),
            vertices,
            n_primal_vertices: n_pv,
            cells: prim_cells,
            triangles,
            edges,
            n_primal_edges,
        };
        mesh.check_conformity()?;
        Ok(mesh)
    }

    /// Rejects T-junctions: a primal vertex lying inside a boundary edge means
    /// a neighbouring cell did not list it as a vertex.
    fn check_conformity(&self) -> Result<()> {
        let mut by_x: Vec<usize> = (0..self.n_primal_vertices).collect();
        by_x.sort_by(|&a, &b| self.vertices[a].x.total_cmp(&self.vertices[b].x));
        let xs: Vec<f64> = by_x.iter().map(|&v| self.vertices[v].x).collect();
        for e in self.primal_edges().filter(|e| e.is_boundary) {
            let (a, b) = (self.point(e.endpoint_ids[0]), self.point(e.endpoint_ids[1]));
            let tol = GEOM_EPS.sqrt() * e.length;
            let lo = xs.partition_point(|&x| x < a[0].min(b[0]) - tol);
            let hi = xs.partition_point(|&x| x <= a[0].max(b[0]) + tol);
            for &v in &by_x[lo..hi] {
                if e.endpoint_ids.contains(&v) {
                    continue;
                }
                let p = self.point(v);
                let t = sub(b, a);
                let s = ((p[0] - a[0]) * t[0] + (p[1] - a[1]) * t[1]) / (e.length * e.length);
                if s <= GEOM_EPS || s >= 1.0 - GEOM_EPS {
                    continue;
                }
                if cross3(a, b, p).abs() / e.length <= tol {
                    return Err(Error::InvalidMesh(format!(
                        "vertex {v} lies inside edge ({}, {}); list hanging nodes on both adjacent cells",
                        e.endpoint_ids[0], e.endpoint_ids[1]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn point(&self, v: usize) -> Point {
        self.vertices[v].point()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let ids = self.triangles[t].vertex_ids;
        [self.point(ids[0]), self.point(ids[1]), self.point(ids[2])]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * cross3(a, b, c)
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        let ids = self.edges[e].endpoint_ids;
        [self.point(ids[0]), self.point(ids[1])]
    }

    pub fn n_dual_edges(&self) -> usize {
        self.edges.len() - self.n_primal_edges
    }

    pub fn primal_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges[..self.n_primal_edges].iter()
    }

    pub fn dual_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges[self.n_primal_edges..].iter()
    }

    /// Position of a dual edge among the dual edges.
    pub fn dual_index(&self, edge_id: usize) -> usize {
        debug_assert!(edge_id >= self.n_primal_edges);
        edge_id - self.n_primal_edges
    }

    /// `+1` if the edge normal points out of triangle `t`, `-1` otherwise.
    pub fn edge_sign(&self, edge_id: usize, t: usize) -> f64 {
        if self.edges[edge_id].triangle_ids[0] == t {
            1.0
        } else {
            -1.0
        }
    }

    /// Primal vertex coordinates.
    pub fn primal_points(&self) -> Vec<Point> {
        self.vertices[..self.n_primal_vertices].iter().map(Vertex::point).collect()
    }

    /// Cell descriptions with their current centers; rebuilding from these
    /// together with [`Self::primal_points`] reproduces the mesh.
    pub fn cell_specs(&self) -> Vec<CellSpec> {
        self.cells.iter().map(|c| CellSpec { vertices: c.vertex_ids.clone(), center: Some(c.center) }).collect()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.primal_edges().filter(|e| e.is_boundary).map(|e| e.length).sum()
    }

    /// Vertex ids lying on a boundary primal edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.n_primal_vertices];
        for e in self.primal_edges().filter(|e| e.is_boundary) {
            on[e.endpoint_ids[0]] = true;
            on[e.endpoint_ids[1]] = true;
        }
        on
    }

    pub fn bounding_box(&self) -> Rect {
        let mut r = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices[..self.n_primal_vertices] {
            r.x_min = r.x_min.min(v.x);
            r.x_max = r.x_max.max(v.x);
            r.y_min = r.y_min.min(v.y);
            r.y_max = r.y_max.max(v.y);
        }
        r
    }
}

/// Uniform grid of `n × n` rectangular cells, each split into four triangles
/// around its centroid.
pub fn build_square_mesh(n: usize, domain: Rect) -> Result<StaggeredMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("cell count per side must be at least 1".into()));
    }
    if !domain.is_valid() {
        return Err(Error::InvalidArgument(format!("degenerate domain {domain:?}")));
    }
    let (dx, dy) = (domain.width() / n as f64, domain.height() / n as f64);
    let mut points = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // Snap the last row/column to the domain boundary exactly.
            let x = if i == n { domain.x_max } else { domain.x_min + i as f64 * dx };
            let y = if j == n { domain.y_max } else { domain.y_min + j as f64 * dy };
            points.push([x, y]);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(CellSpec::new(vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]));
        }
    }
    StaggeredMesh::from_primal(&points, &cells)
}

/// General polygonal mesh; see [`StaggeredMesh::from_primal`].
pub fn build_polygonal_mesh(cells: &[CellSpec], vertices: &[Point]) -> Result<StaggeredMesh> {
    StaggeredMesh::from_primal(vertices, cells)
}
