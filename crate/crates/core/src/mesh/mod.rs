//! β-graded hybrid meshes on Q̂, T̂ and planar triangular faces.

mod coarsen;
mod export;
mod face;
mod grading;
mod locate;
mod quality;
mod reference;

use std::collections::HashMap;
use std::sync::OnceLock;

pub use coarsen::{coarsen_to_quasi_uniform, CoarseMesh};
pub use face::{build_graded_face_mesh, FaceFrame, FaceGeometry, SurfaceEdge, SurfaceMesh};
pub use grading::{coarse_groups, grade_points, GradingSpec};
pub use quality::{mesh_quality_report, MeshQuality};
pub use reference::{build_reference_graded_square, build_reference_graded_triangle};

use crate::geom::{dist, norm, sub, Affine2, Point2, Shape};
use locate::Locator;

/// Which block of the construction an element belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Block {
    /// The graded reference square.
    Square,
    /// The graded reference triangle.
    Triangle,
    /// Parallelogram at face vertex `k`.
    FaceParallelogram(u8),
    /// Triangle on the middle third of face side `k`.
    FaceTriangle(u8),
}

impl Block {
    pub fn shape(self) -> Shape {
        match self {
            Block::Square | Block::FaceParallelogram(_) => Shape::Parallelogram,
            Block::Triangle | Block::FaceTriangle(_) => Shape::Triangle,
        }
    }

    pub fn code(self) -> String {
        match self {
            Block::Square => "Q".into(),
            Block::Triangle => "T".into(),
            Block::FaceParallelogram(k) => format!("P{k}"),
            Block::FaceTriangle(k) => format!("T{k}"),
        }
    }
}

/// Block membership and the cell indices `(i, j)` of the block's graded grid
/// (`i` along x̂₁, `j` along x̂₂).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockTag {
    pub block: usize,
    pub i: usize,
    pub j: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub shape: Shape,
    vertices: [usize; 4],
    edges: [usize; 4],
    signs: [f64; 4],
    pub map: Affine2,
    pub det: f64,
    pub tag: Option<BlockTag>,
}

impl Element {
    pub fn n_vertices(&self) -> usize {
        self.shape.n_vertices()
    }

    /// Global vertex ids in reference-vertex order.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices[..self.n_vertices()]
    }

    /// Global edge id of local edge `k` (joining local vertices `k`, `k+1`).
    pub fn edges(&self) -> &[usize] {
        &self.edges[..self.n_vertices()]
    }

    /// `+1` where the element's outward normal on local edge `k` equals the
    /// global normal of that edge.
    pub fn signs(&self) -> &[f64] {
        &self.signs[..self.n_vertices()]
    }

    pub fn area(&self) -> f64 {
        self.det.abs() * self.shape.ref_area()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Endpoints with `v[0] < v[1]`.
    pub v: [usize; 2],
    /// `(element, local edge)` pairs, at most two.
    pub incident: Vec<(usize, usize)>,
}

/// The domain a mesh covers, as the affine image of Q̂ or T̂.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub shape: Shape,
    pub map: Affine2,
}

impl Domain {
    pub fn unit_square() -> Self {
        Domain {
            shape: Shape::Parallelogram,
            map: Affine2::IDENTITY,
        }
    }

    pub fn unit_triangle() -> Self {
        Domain {
            shape: Shape::Triangle,
            map: Affine2::IDENTITY,
        }
    }

    pub fn of_element(el: &Element) -> Self {
        Domain {
            shape: el.shape,
            map: el.map,
        }
    }

    /// Short description used in reports.
    pub fn label(&self) -> String {
        let m = &self.map;
        if *m == Affine2::IDENTITY {
            return match self.shape {
                Shape::Parallelogram => "Q".into(),
                Shape::Triangle => "T".into(),
            };
        }
        let c = match self.shape {
            Shape::Parallelogram => 'Q',
            Shape::Triangle => 'T',
        };
        format!(
            "{c}[{:.6e},{:.6e},{:.6e},{:.6e};{:.6e},{:.6e}]",
            m.a[0][0], m.a[0][1], m.a[1][0], m.a[1][1], m.b[0], m.b[1]
        )
    }

    pub fn area(&self) -> f64 {
        self.map.det().abs() * self.shape.ref_area()
    }

    pub fn vertices(&self) -> Vec<Point2> {
        self.shape
            .ref_vertices()
            .iter()
            .map(|&v| self.map.apply(v))
            .collect()
    }

    pub fn perimeter(&self) -> f64 {
        let v = self.vertices();
        (0..v.len()).map(|k| dist(v[k], v[(k + 1) % v.len()])).sum()
    }
}

#[derive(Debug)]
pub struct GradedMesh {
    pub vertices: Vec<Point2>,
    pub elements: Vec<Element>,
    pub edges: Vec<Edge>,
    pub grading: Option<GradingSpec>,
    pub domain: Domain,
    /// Block kinds and their maps from the reference block to the plane.
    pub blocks: Vec<(Block, Affine2)>,
    /// Set for meshes of a face of a surface.
    pub face: Option<(FaceGeometry, FaceFrame)>,
    pub face_id: usize,
    locator: OnceLock<Locator>,
}

impl Clone for GradedMesh {
    fn clone(&self) -> Self {
        GradedMesh {
            vertices: self.vertices.clone(),
            elements: self.elements.clone(),
            edges: self.edges.clone(),
            grading: self.grading,
            domain: self.domain,
            blocks: self.blocks.clone(),
            face: self.face,
            face_id: self.face_id,
            locator: OnceLock::new(),
        }
    }
}

impl GradedMesh {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].v;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn edge_points(&self, e: usize) -> (Point2, Point2) {
        let [a, b] = self.edges[e].v;
        (self.vertices[a], self.vertices[b])
    }

    /// Unit global normal of edge `e`: the tangent from the lower to the
    /// higher vertex id, rotated clockwise.
    pub fn edge_normal(&self, e: usize) -> Point2 {
        let (p, q) = self.edge_points(e);
        let t = sub(q, p);
        let l = norm(t);
        [t[1] / l, -t[0] / l]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edges[e].incident.len() == 1
    }

    pub fn boundary_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.is_boundary_edge(e))
            .collect()
    }

    pub fn interior_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| !self.is_boundary_edge(e))
            .collect()
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(Element::area).sum()
    }

    pub fn element_diameter(&self, k: usize) -> f64 {
        let v = self.elements[k].vertices();
        let mut d: f64 = 0.0;
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                d = d.max(dist(self.vertices[v[a]], self.vertices[v[b]]));
            }
        }
        d
    }

    /// Element containing `x` and the reference coordinates of `x` there.
    pub fn locate(&self, x: Point2) -> Option<(usize, Point2)> {
        self.locator
            .get_or_init(|| Locator::new(self))
            .locate(self, x)
    }

    /// Hex SHA-256 of the canonical export text.
    pub fn checksum(&self) -> String {
        export::checksum(self)
    }

    pub fn export_text(&self) -> String {
        export::export_text(self)
    }
}

/// Collects elements, merging coincident vertices.
pub(crate) struct MeshBuilder {
    vertices: Vec<Point2>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    cell: f64,
    tol: f64,
    elements: Vec<Element>,
}

impl MeshBuilder {
    pub fn new(diameter: f64) -> Self {
        MeshBuilder {
            vertices: Vec::new(),
            buckets: HashMap::new(),
            cell: diameter * 1e-8,
            tol: diameter * 1e-10,
            elements: Vec::new(),
        }
    }

    pub fn vertex(&mut self, p: Point2) -> usize {
        let key = (
            (p[0] / self.cell).round() as i64,
            (p[1] / self.cell).round() as i64,
        );
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.buckets.get(&(key.0 + dx, key.1 + dy)) {
                    for &id in ids {
                        if dist(self.vertices[id], p) <= self.tol {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.vertices.len();
        self.vertices.push(p);
        self.buckets.entry(key).or_default().push(id);
        id
    }

    pub fn element(&mut self, shape: Shape, map: Affine2, tag: Option<BlockTag>) {
        let mut vertices = [usize::MAX; 4];
        for (k, &v) in shape.ref_vertices().iter().enumerate() {
            vertices[k] = self.vertex(map.apply(v));
        }
        self.elements.push(Element {
            shape,
            vertices,
            edges: [usize::MAX; 4],
            signs: [0.0; 4],
            map,
            det: map.det(),
            tag,
        });
    }

    pub fn finish(
        self,
        grading: Option<GradingSpec>,
        domain: Domain,
        blocks: Vec<(Block, Affine2)>,
    ) -> GradedMesh {
        let mut elements = self.elements;
        let mut edges: Vec<Edge> = Vec::new();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        for (k, el) in elements.iter_mut().enumerate() {
            let n = el.n_vertices();
            for l in 0..n {
                let (a, b) = (el.vertices[l], el.vertices[(l + 1) % n]);
                let key = (a.min(b), a.max(b));
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        v: [key.0, key.1],
                        incident: Vec::new(),
                    });
                    edges.len() - 1
                });
                edges[e].incident.push((k, l));
                el.edges[l] = e;
                el.signs[l] = if (a < b) == (el.det > 0.0) { 1.0 } else { -1.0 };
            }
        }
        GradedMesh {
            vertices: self.vertices,
            elements,
            edges,
            grading,
            domain,
            blocks,
            face: None,
            face_id: 0,
            locator: OnceLock::new(),
        }
    }
}

/// Element map of cell `(i, j)` of a graded block whose reference block is
/// mapped by `block`.
pub(crate) fn cell_map(block: &Affine2, x: &[f64], i: usize, j: usize, shape: Shape) -> Affine2 {
    let cell = match shape {
        Shape::Parallelogram => Affine2::diagonal(x[i + 1] - x[i], x[j + 1] - x[j], [x[i], x[j]]),
        Shape::Triangle => Affine2::diagonal(x[i + 1] - x[i], x[i + 1] - x[i], [x[i], x[i]]),
    };
    block.compose(&cell)
}
