use super::GradedMesh;
use crate::geom::{dist, Shape};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MeshQuality {
    pub h_max: f64,
    pub h_min: f64,
    /// Longest side over the height onto it, maximised over elements.
    pub max_aspect: f64,
    pub conforming: bool,
    pub area: f64,
    pub n_vertices: usize,
    pub n_elements: usize,
    pub n_edges: usize,
}

pub fn mesh_quality_report(mesh: &GradedMesh) -> MeshQuality {
    let mut h_max: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    for (k, el) in mesh.elements.iter().enumerate() {
        let d = mesh.element_diameter(k);
        h_max = h_max.max(d);
        h_min = h_min.min(d);
        let v = el.vertices();
        let longest = (0..v.len())
            .map(|l| dist(mesh.vertices[v[l]], mesh.vertices[v[(l + 1) % v.len()]]))
            .fold(0.0, f64::max);
        let height = match el.shape {
            Shape::Triangle => 2.0 * el.area() / longest,
            Shape::Parallelogram => el.area() / longest,
        };
        max_aspect = max_aspect.max(longest / height);
    }
    MeshQuality {
        h_max,
        h_min,
        max_aspect,
        conforming: is_conforming(mesh),
        area: mesh.total_area(),
        n_vertices: mesh.vertices.len(),
        n_elements: mesh.n_elements(),
        n_edges: mesh.n_edges(),
    }
}

/// Every edge has one or two incident elements and the edges with one
/// incidence add up to the domain perimeter; a hanging node would leave both
/// the long edge and its halves on the boundary list.
fn is_conforming(mesh: &GradedMesh) -> bool {
    if mesh
        .edges
        .iter()
        .any(|e| e.incident.is_empty() || e.incident.len() > 2)
    {
        return false;
    }
    if mesh.elements.iter().any(|e| e.det == 0.0) {
        return false;
    }
    let boundary: f64 = mesh
        .boundary_edges()
        .iter()
        .map(|&e| mesh.edge_length(e))
        .sum();
    let perimeter = mesh.domain.perimeter();
    (boundary - perimeter).abs() <= 1e-12 * perimeter.max(1.0) * (mesh.n_edges() as f64).sqrt()
}
