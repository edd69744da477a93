//! Structured meshes of `(0,1)`, the unit square and the unit disk.
//!
//! The disk is a polar tensor grid: cells are rectangles in `(r, theta)` and the
//! Jacobian `r` is folded into the quadrature weights. The innermost ring of
//! cells collapses onto the single center node.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::quadrature::QuadratureRule;
use crate::geometry::{GeometryError, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    UnitSquare,
    UnitDiskPolar,
}

impl DomainKind {
    pub fn dim(self) -> usize {
        match self {
            DomainKind::Interval => 1,
            DomainKind::UnitSquare | DomainKind::UnitDiskPolar => 2,
        }
    }

    /// Lebesgue measure of the domain.
    pub fn measure(self) -> f64 {
        match self {
            DomainKind::Interval | DomainKind::UnitSquare => 1.0,
            DomainKind::UnitDiskPolar => PI,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::Interval => "interval",
            DomainKind::UnitSquare => "unit_square",
            DomainKind::UnitDiskPolar => "unit_disk_polar",
        }
    }

    /// Distance of `x` to the boundary curve (used for facet sanity checks).
    pub fn boundary_distance(self, x: Point) -> f64 {
        match self {
            DomainKind::Interval => x[0].abs().min((x[0] - 1.0).abs()),
            DomainKind::UnitSquare => x[0]
                .abs()
                .min((x[0] - 1.0).abs())
                .min(x[1].abs())
                .min((x[1] - 1.0).abs()),
            DomainKind::UnitDiskPolar => (x[0].hypot(x[1]) - 1.0).abs(),
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interval" => Ok(DomainKind::Interval),
            "unit_square" | "square" => Ok(DomainKind::UnitSquare),
            "unit_disk_polar" | "unit_disk" | "disk" => Ok(DomainKind::UnitDiskPolar),
            other => Err(GeometryError::UnsupportedDomain(other.to_string())),
        }
    }
}

/// A point together with the cell that contains it and its reference coordinates.
///
/// `cell` is `None` for points that were not generated by a mesh (Monte-Carlo
/// samples, user probes); finite-element functions locate such points on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub x: Point,
    pub cell: Option<usize>,
    pub local: Point,
}

impl Located {
    pub fn free(x: Point) -> Self {
        Located {
            x,
            cell: None,
            local: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub at: Located,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub at: Located,
    pub weight: f64,
    pub normal: Point,
    pub facet: usize,
}

/// Volume and boundary quadrature point sets over a whole domain.
#[derive(Debug, Clone, Default)]
pub struct Quadrature {
    pub volume: Vec<QuadPoint>,
    pub boundary: Vec<BoundaryPoint>,
}

impl Quadrature {
    /// Replaces the volume points by `samples` uniform draws, keeping the
    /// boundary points of `self`.
    pub fn with_monte_carlo_volume<R: Rng>(&self, kind: DomainKind, samples: usize, rng: &mut R) -> Self {
        let weight = kind.measure() / samples as f64;
        let volume = (0..samples)
            .map(|_| {
                let x = match kind {
                    DomainKind::Interval => [rng.gen::<f64>(), 0.0],
                    DomainKind::UnitSquare => [rng.gen::<f64>(), rng.gen::<f64>()],
                    DomainKind::UnitDiskPolar => {
                        let r = rng.gen::<f64>().sqrt();
                        let t = 2.0 * PI * rng.gen::<f64>();
                        [r * t.cos(), r * t.sin()]
                    }
                };
                QuadPoint {
                    at: Located::free(x),
                    weight,
                }
            })
            .collect();
        Quadrature {
            volume,
            boundary: self.boundary.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FacetGeometry {
    Endpoint { x: f64 },
    Edge { a: Point, b: Point },
    Arc { theta0: f64, theta1: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    pub cell: usize,
    pub nodes: Vec<usize>,
    pub geometry: FacetGeometry,
    /// Outward unit normal at the facet midpoint.
    pub outward_normal: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarLayout {
    pub n_r: usize,
    pub n_theta: usize,
}

/// Shape functions of one cell evaluated at a reference point.
#[derive(Debug, Clone, Copy)]
pub struct ShapeEval {
    pub count: usize,
    pub nodes: [usize; 4],
    pub values: [f64; 4],
    pub grads: [Point; 4],
}

#[derive(Debug, Clone)]
pub struct DomainMesh {
    pub kind: DomainKind,
    pub resolution: usize,
    pub nodes: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
    pub boundary_facets: Vec<BoundaryFacet>,
    /// Maximum cell diameter. For the disk this is the polar-metric bound
    /// `sqrt(dr^2 + dtheta^2)`, which dominates every cell diameter.
    pub h: f64,
    pub polar: Option<PolarLayout>,
    pub gauss_points: usize,
    cell_volumes: Vec<f64>,
    quadrature: Quadrature,
}

/// Default number of Gauss points per direction on segments, facets and polar cells.
pub const DEFAULT_GAUSS_POINTS: usize = 3;

/// Builds a mesh with the default degree-4 capable quadrature.
pub fn build_mesh(kind: DomainKind, resolution: usize) -> Result<DomainMesh, GeometryError> {
    build_mesh_with_order(kind, resolution, DEFAULT_GAUSS_POINTS)
}

/// Builds a mesh whose segment, facet and polar-cell rules use `gauss_points`
/// points per direction. Triangles always use the 6-point degree-4 rule.
pub fn build_mesh_with_order(
    kind: DomainKind,
    resolution: usize,
    gauss_points: usize,
) -> Result<DomainMesh, GeometryError> {
    if resolution < 2 {
        return Err(GeometryError::ResolutionTooSmall(resolution));
    }
    if gauss_points == 0 {
        return Err(GeometryError::InvalidRule("zero Gauss points".into()));
    }
    let mut mesh = match kind {
        DomainKind::Interval => interval_mesh(resolution),
        DomainKind::UnitSquare => square_mesh(resolution),
        DomainKind::UnitDiskPolar => disk_mesh(resolution),
    };
    mesh.gauss_points = gauss_points;
    mesh.cell_volumes = (0..mesh.cells.len()).map(|c| mesh.compute_cell_volume(c)).collect();
    mesh.quadrature = mesh.build_quadrature(gauss_points);
    Ok(mesh)
}

fn empty(kind: DomainKind, resolution: usize) -> DomainMesh {
    DomainMesh {
        kind,
        resolution,
        nodes: Vec::new(),
        cells: Vec::new(),
        boundary_facets: Vec::new(),
        h: 0.0,
        polar: None,
        gauss_points: DEFAULT_GAUSS_POINTS,
        cell_volumes: Vec::new(),
        quadrature: Quadrature::default(),
    }
}

fn interval_mesh(n: usize) -> DomainMesh {
    let mut mesh = empty(DomainKind::Interval, n);
    mesh.nodes = (0..=n).map(|i| [i as f64 / n as f64, 0.0]).collect();
    mesh.cells = (0..n).map(|i| vec![i, i + 1]).collect();
    mesh.boundary_facets = vec![
        BoundaryFacet {
            cell: 0,
            nodes: vec![0],
            geometry: FacetGeometry::Endpoint { x: 0.0 },
            outward_normal: [-1.0, 0.0],
        },
        BoundaryFacet {
            cell: n - 1,
            nodes: vec![n],
            geometry: FacetGeometry::Endpoint { x: 1.0 },
            outward_normal: [1.0, 0.0],
        },
    ];
    mesh.h = 1.0 / n as f64;
    mesh
}

/// Criss-cross grid: every square is split into four triangles through its center.
/// Cell `4 * (j * n + i) + k` is triangle `k` (bottom, right, top, left) of square `(i, j)`;
/// its first two local nodes are the square edge.
fn square_mesh(n: usize) -> DomainMesh {
    let mut mesh = empty(DomainKind::UnitSquare, n);
    let h = 1.0 / n as f64;
    let corner = |i: usize, j: usize| j * (n + 1) + i;
    let center = |i: usize, j: usize| (n + 1) * (n + 1) + j * n + i;
    for j in 0..=n {
        for i in 0..=n {
            mesh.nodes.push([i as f64 * h, j as f64 * h]);
        }
    }
    for j in 0..n {
        for i in 0..n {
            mesh.nodes.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
        }
    }
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01, c) = (
                corner(i, j),
                corner(i + 1, j),
                corner(i + 1, j + 1),
                corner(i, j + 1),
                center(i, j),
            );
            let base = mesh.cells.len();
            mesh.cells.push(vec![v00, v10, c]);
            mesh.cells.push(vec![v10, v11, c]);
            mesh.cells.push(vec![v11, v01, c]);
            mesh.cells.push(vec![v01, v00, c]);
            let facet = |k: usize, normal: Point, mesh: &mut DomainMesh| {
                let cell = &mesh.cells[base + k];
                let (a, b) = (cell[0], cell[1]);
                let geometry = FacetGeometry::Edge {
                    a: mesh.nodes[a],
                    b: mesh.nodes[b],
                };
                mesh.boundary_facets.push(BoundaryFacet {
                    cell: base + k,
                    nodes: vec![a, b],
                    geometry,
                    outward_normal: normal,
                });
            };
            if j == 0 {
                facet(0, [0.0, -1.0], &mut mesh);
            }
            if i == n - 1 {
                facet(1, [1.0, 0.0], &mut mesh);
            }
            if j == n - 1 {
                facet(2, [0.0, 1.0], &mut mesh);
            }
            if i == 0 {
                facet(3, [-1.0, 0.0], &mut mesh);
            }
        }
    }
    mesh.h = h;
    mesh
}

/// Polar grid with `n_r = n` rings and `n_theta = 4n` sectors. Node 0 is the
/// center; ring `i >= 1` node `j` is `1 + (i - 1) * n_theta + j`. Cell
/// `i * n_theta + j` has local nodes `[inner_j, outer_j, outer_j+1, inner_j+1]`.
fn disk_mesh(n: usize) -> DomainMesh {
    let mut mesh = empty(DomainKind::UnitDiskPolar, n);
    let n_r = n;
    let n_theta = 4 * n;
    let dr = 1.0 / n_r as f64;
    let dt = 2.0 * PI / n_theta as f64;
    mesh.nodes.push([0.0, 0.0]);
    for i in 1..=n_r {
        let r = i as f64 * dr;
        for j in 0..n_theta {
            let t = j as f64 * dt;
            mesh.nodes.push([r * t.cos(), r * t.sin()]);
        }
    }
    let node = |i: usize, j: usize| {
        if i == 0 {
            0
        } else {
            1 + (i - 1) * n_theta + (j % n_theta)
        }
    };
    for i in 0..n_r {
        for j in 0..n_theta {
            mesh.cells
                .push(vec![node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
        }
    }
    for j in 0..n_theta {
        let theta0 = j as f64 * dt;
        let theta1 = theta0 + dt;
        let mid = 0.5 * (theta0 + theta1);
        mesh.boundary_facets.push(BoundaryFacet {
            cell: (n_r - 1) * n_theta + j,
            nodes: vec![node(n_r, j), node(n_r, j + 1)],
            geometry: FacetGeometry::Arc { theta0, theta1 },
            outward_normal: [mid.cos(), mid.sin()],
        });
    }
    mesh.h = dr.hypot(dt);
    mesh.polar = Some(PolarLayout { n_r, n_theta });
    mesh
}

impl DomainMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell_volume(&self, cell: usize) -> f64 {
        self.cell_volumes[cell]
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_volumes.iter().sum()
    }

    /// The mesh's deterministic volume and boundary quadrature.
    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    fn polar_cell(&self, cell: usize) -> (f64, f64, f64, f64) {
        let layout = self.polar.expect("polar layout");
        let i = cell / layout.n_theta;
        let j = cell % layout.n_theta;
        let dr = 1.0 / layout.n_r as f64;
        let dt = 2.0 * PI / layout.n_theta as f64;
        (i as f64 * dr, dr, j as f64 * dt, dt)
    }

    fn compute_cell_volume(&self, cell: usize) -> f64 {
        match self.kind {
            DomainKind::Interval => {
                let c = &self.cells[cell];
                self.nodes[c[1]][0] - self.nodes[c[0]][0]
            }
            DomainKind::UnitSquare => {
                let c = &self.cells[cell];
                let (a, b, d) = (self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]]);
                0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]))
            }
            DomainKind::UnitDiskPolar => {
                let (r0, dr, _, dt) = self.polar_cell(cell);
                let r1 = r0 + dr;
                0.5 * (r1 * r1 - r0 * r0) * dt
            }
        }
    }

    /// Maps reference coordinates of `cell` to physical coordinates.
    pub fn map_to_physical(&self, cell: usize, local: Point) -> Point {
        match self.kind {
            DomainKind::Interval => {
                let c = &self.cells[cell];
                let (a, b) = (self.nodes[c[0]][0], self.nodes[c[1]][0]);
                [a + local[0] * (b - a), 0.0]
            }
            DomainKind::UnitSquare => {
                let c = &self.cells[cell];
                let (a, b, d) = (self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]]);
                [
                    a[0] + local[0] * (b[0] - a[0]) + local[1] * (d[0] - a[0]),
                    a[1] + local[0] * (b[1] - a[1]) + local[1] * (d[1] - a[1]),
                ]
            }
            DomainKind::UnitDiskPolar => {
                let (r0, dr, t0, dt) = self.polar_cell(cell);
                let r = r0 + local[0] * dr;
                let t = t0 + local[1] * dt;
                [r * t.cos(), r * t.sin()]
            }
        }
    }

    /// Finds the cell containing `x` and its reference coordinates.
    pub fn locate(&self, x: Point) -> Option<(usize, Point)> {
        let eps = 1e-12;
        match self.kind {
            DomainKind::Interval => {
                if !(-eps..=1.0 + eps).contains(&x[0]) {
                    return None;
                }
                let n = self.resolution;
                let s = (x[0].clamp(0.0, 1.0) * n as f64).min(n as f64);
                let i = (s.floor() as usize).min(n - 1);
                Some((i, [s - i as f64, 0.0]))
            }
            DomainKind::UnitSquare => {
                if !(-eps..=1.0 + eps).contains(&x[0]) || !(-eps..=1.0 + eps).contains(&x[1]) {
                    return None;
                }
                let n = self.resolution;
                let sx = x[0].clamp(0.0, 1.0) * n as f64;
                let sy = x[1].clamp(0.0, 1.0) * n as f64;
                let i = (sx.floor() as usize).min(n - 1);
                let j = (sy.floor() as usize).min(n - 1);
                let (u, v) = (sx - i as f64 - 0.5, sy - j as f64 - 0.5);
                let k = if v <= -u.abs() {
                    0
                } else if u >= v.abs() {
                    1
                } else if v >= u.abs() {
                    2
                } else {
                    3
                };
                let cell = 4 * (j * n + i) + k;
                Some((cell, self.triangle_local(cell, x)))
            }
            DomainKind::UnitDiskPolar => {
                let layout = self.polar?;
                let r = x[0].hypot(x[1]);
                if r > 1.0 + eps {
                    return None;
                }
                let mut t = x[1].atan2(x[0]);
                if t < 0.0 {
                    t += 2.0 * PI;
                }
                let sr = r.min(1.0) * layout.n_r as f64;
                let st = t / (2.0 * PI) * layout.n_theta as f64;
                let i = (sr.floor() as usize).min(layout.n_r - 1);
                let j = (st.floor() as usize).min(layout.n_theta - 1);
                Some((i * layout.n_theta + j, [sr - i as f64, st - j as f64]))
            }
        }
    }

    fn triangle_local(&self, cell: usize, x: Point) -> Point {
        let c = &self.cells[cell];
        let (a, b, d) = (self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]]);
        let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [d[0] - a[0], d[1] - a[1]]);
        let det = e1[0] * e2[1] - e2[0] * e1[1];
        let r = [x[0] - a[0], x[1] - a[1]];
        [
            (r[0] * e2[1] - e2[0] * r[1]) / det,
            (e1[0] * r[1] - r[0] * e1[1]) / det,
        ]
    }

    /// Nodal basis functions of `cell` at reference point `local`, with physical gradients.
    pub fn shape(&self, cell: usize, local: Point) -> ShapeEval {
        let c = &self.cells[cell];
        match self.kind {
            DomainKind::Interval => {
                let len = self.cell_volumes[cell];
                ShapeEval {
                    count: 2,
                    nodes: [c[0], c[1], 0, 0],
                    values: [1.0 - local[0], local[0], 0.0, 0.0],
                    grads: [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0; 2], [0.0; 2]],
                }
            }
            DomainKind::UnitSquare => {
                let (a, b, d) = (self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]]);
                let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [d[0] - a[0], d[1] - a[1]]);
                let det = e1[0] * e2[1] - e2[0] * e1[1];
                // rows of J^{-T}: gradients of the reference coordinates
                let gxi = [e2[1] / det, -e2[0] / det];
                let geta = [-e1[1] / det, e1[0] / det];
                ShapeEval {
                    count: 3,
                    nodes: [c[0], c[1], c[2], 0],
                    values: [1.0 - local[0] - local[1], local[0], local[1], 0.0],
                    grads: [
                        [-gxi[0] - geta[0], -gxi[1] - geta[1]],
                        gxi,
                        geta,
                        [0.0; 2],
                    ],
                }
            }
            DomainKind::UnitDiskPolar => {
                let (r0, dr, t0, dt) = self.polar_cell(cell);
                let (xi, eta) = (local[0], local[1]);
                let r = r0 + xi * dr;
                let t = t0 + eta * dt;
                let (ct, st) = (t.cos(), t.sin());
                let values = [
                    (1.0 - xi) * (1.0 - eta),
                    xi * (1.0 - eta),
                    xi * eta,
                    (1.0 - xi) * eta,
                ];
                let d_xi = [-(1.0 - eta), 1.0 - eta, eta, -eta];
                let d_eta = [-(1.0 - xi), -xi, xi, 1.0 - xi];
                let mut grads = [[0.0; 2]; 4];
                for k in 0..4 {
                    let g_r = d_xi[k] / dr;
                    let g_t = if r > 1e-300 { d_eta[k] / dt / r } else { 0.0 };
                    grads[k] = [g_r * ct - g_t * st, g_r * st + g_t * ct];
                }
                ShapeEval {
                    count: 4,
                    nodes: [c[0], c[1], c[2], c[3]],
                    values,
                    grads,
                }
            }
        }
    }

    fn build_quadrature(&self, gauss_points: usize) -> Quadrature {
        let line = QuadratureRule::gauss_legendre(gauss_points);
        let mut volume = Vec::new();
        let mut boundary = Vec::new();
        match self.kind {
            DomainKind::Interval => {
                for cell in 0..self.cells.len() {
                    let len = self.cell_volumes[cell];
                    for (p, w) in line.points.iter().zip(&line.weights) {
                        volume.push(QuadPoint {
                            at: Located {
                                x: self.map_to_physical(cell, *p),
                                cell: Some(cell),
                                local: *p,
                            },
                            weight: w * len,
                        });
                    }
                }
                for (f, facet) in self.boundary_facets.iter().enumerate() {
                    let local = if facet.outward_normal[0] < 0.0 { 0.0 } else { 1.0 };
                    boundary.push(BoundaryPoint {
                        at: Located {
                            x: self.map_to_physical(facet.cell, [local, 0.0]),
                            cell: Some(facet.cell),
                            local: [local, 0.0],
                        },
                        weight: 1.0,
                        normal: facet.outward_normal,
                        facet: f,
                    });
                }
            }
            DomainKind::UnitSquare => {
                let tri = QuadratureRule::triangle_degree4();
                for cell in 0..self.cells.len() {
                    let jac = 2.0 * self.cell_volumes[cell];
                    for (p, w) in tri.points.iter().zip(&tri.weights) {
                        volume.push(QuadPoint {
                            at: Located {
                                x: self.map_to_physical(cell, *p),
                                cell: Some(cell),
                                local: *p,
                            },
                            weight: w * jac,
                        });
                    }
                }
                for (f, facet) in self.boundary_facets.iter().enumerate() {
                    let FacetGeometry::Edge { a, b } = facet.geometry else {
                        unreachable!("square facets are edges")
                    };
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    for (p, w) in line.points.iter().zip(&line.weights) {
                        let local = [p[0], 0.0];
                        boundary.push(BoundaryPoint {
                            at: Located {
                                x: self.map_to_physical(facet.cell, local),
                                cell: Some(facet.cell),
                                local,
                            },
                            weight: w * len,
                            normal: facet.outward_normal,
                            facet: f,
                        });
                    }
                }
            }
            DomainKind::UnitDiskPolar => {
                let rule = QuadratureRule::tensor_gauss(gauss_points);
                for cell in 0..self.cells.len() {
                    let (r0, dr, _, dt) = self.polar_cell(cell);
                    for (p, w) in rule.points.iter().zip(&rule.weights) {
                        let r = r0 + p[0] * dr;
                        volume.push(QuadPoint {
                            at: Located {
                                x: self.map_to_physical(cell, *p),
                                cell: Some(cell),
                                local: *p,
                            },
                            weight: w * dr * dt * r,
                        });
                    }
                }
                for (f, facet) in self.boundary_facets.iter().enumerate() {
                    let FacetGeometry::Arc { theta0, theta1 } = facet.geometry else {
                        unreachable!("disk facets are arcs")
                    };
                    let dt = theta1 - theta0;
                    for (p, w) in line.points.iter().zip(&line.weights) {
                        let local = [1.0, p[0]];
                        let t = theta0 + p[0] * dt;
                        boundary.push(BoundaryPoint {
                            at: Located {
                                x: [t.cos(), t.sin()],
                                cell: Some(facet.cell),
                                local,
                            },
                            weight: w * dt,
                            normal: [t.cos(), t.sin()],
                            facet: f,
                        });
                    }
                }
            }
        }
        Quadrature { volume, boundary }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_of_four() {
        let m = build_mesh(DomainKind::Interval, 4).unwrap();
        let xs: Vec<f64> = m.nodes.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(m.cells.len(), 4);
        assert_eq!(m.boundary_facets.len(), 2);
    }

    #[test]
    fn square_area_sums_to_one() {
        let m = build_mesh(DomainKind::UnitSquare, 2).unwrap();
        assert!((m.total_volume() - 1.0).abs() < 1e-10);
        assert!((0..m.cells.len()).all(|c| m.cell_volume(c) > 0.0));
    }

    #[test]
    fn disk_area_close_to_pi() {
        let m = build_mesh(DomainKind::UnitDiskPolar, 16).unwrap();
        assert!((m.total_volume() - PI).abs() < 5e-3);
        let w: f64 = m.quadrature().volume.iter().map(|q| q.weight).sum();
        assert!((w - PI).abs() < 1e-12);
        let b: f64 = m.quadrature().boundary.iter().map(|q| q.weight).sum();
        assert!((b - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn facets_lie_on_boundary() {
        for kind in [DomainKind::Interval, DomainKind::UnitSquare, DomainKind::UnitDiskPolar] {
            let m = build_mesh(kind, 6).unwrap();
            for f in &m.boundary_facets {
                for &n in &f.nodes {
                    assert!(kind.boundary_distance(m.nodes[n]) < 1e-12, "{kind}");
                }
            }
            for q in &m.quadrature().boundary {
                assert!(kind.boundary_distance(q.at.x) < 1e-12);
            }
        }
    }

    #[test]
    fn outward_normals_point_away_from_interior() {
        for kind in [DomainKind::UnitSquare, DomainKind::UnitDiskPolar] {
            let m = build_mesh(kind, 4).unwrap();
            let c = if kind == DomainKind::UnitSquare { [0.5, 0.5] } else { [0.0, 0.0] };
            for q in &m.quadrature().boundary {
                let d = [q.at.x[0] - c[0], q.at.x[1] - c[1]];
                assert!(d[0] * q.normal[0] + d[1] * q.normal[1] > 0.0);
            }
        }
    }

    #[test]
    fn refinement_halves_h() {
        for kind in [DomainKind::Interval, DomainKind::UnitSquare, DomainKind::UnitDiskPolar] {
            let a = build_mesh(kind, 8).unwrap();
            let b = build_mesh(kind, 16).unwrap();
            assert!((a.h / b.h - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_low_resolution_and_unknown_domains() {
        assert!(matches!(
            build_mesh(DomainKind::Interval, 1),
            Err(GeometryError::ResolutionTooSmall(1))
        ));
        assert!("torus".parse::<DomainKind>().is_err());
    }

    #[test]
    fn locate_inverts_map() {
        for kind in [DomainKind::Interval, DomainKind::UnitSquare, DomainKind::UnitDiskPolar] {
            let m = build_mesh(kind, 5).unwrap();
            for q in m.quadrature().volume.iter().step_by(7) {
                let (cell, local) = m.locate(q.at.x).unwrap();
                let y = m.map_to_physical(cell, local);
                assert!((y[0] - q.at.x[0]).abs() < 1e-12 && (y[1] - q.at.x[1]).abs() < 1e-12);
                assert_eq!(Some(cell), q.at.cell);
            }
        }
    }

    #[test]
    fn shape_functions_partition_unity() {
        for kind in [DomainKind::Interval, DomainKind::UnitSquare, DomainKind::UnitDiskPolar] {
            let m = build_mesh(kind, 4).unwrap();
            for q in &m.quadrature().volume {
                let s = m.shape(q.at.cell.unwrap(), q.at.local);
                let sum: f64 = s.values[..s.count].iter().sum();
                let gsum = s.grads[..s.count]
                    .iter()
                    .fold([0.0, 0.0], |acc, g| [acc[0] + g[0], acc[1] + g[1]]);
                assert!((sum - 1.0).abs() < 1e-12);
                assert!(gsum[0].abs() < 1e-9 && gsum[1].abs() < 1e-9);
            }
        }
    }
}
