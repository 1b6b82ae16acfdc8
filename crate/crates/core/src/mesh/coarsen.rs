use std::collections::HashMap;

use super::{coarse_groups, grade_points, mesh_quality_report, Domain, GradedMesh, MeshBuilder};
use crate::error::{Error, Result};
use crate::geom::{Affine2, Shape};

/// Quasi-uniform mesh whose elements are unions of graded elements.
#[derive(Clone, Debug)]
pub struct CoarseMesh {
    pub mesh: GradedMesh,
    /// Coarse element containing each fine element.
    pub parent: Vec<usize>,
    pub max_aspect: f64,
    /// Largest over smallest coarse element diameter.
    pub diameter_ratio: f64,
}

/// Patches the long thin cells of each block into cells of comparable size.
///
/// The graded points are grouped by `coarse_groups`; square blocks get the
/// tensor product of the groups, triangle blocks the products below the
/// diagonal plus one triangle per diagonal group.
pub fn coarsen_to_quasi_uniform(mesh: &GradedMesh) -> Result<CoarseMesh> {
    let spec = mesh.grading.ok_or(Error::MissingBlockTags)?;
    if mesh.blocks.is_empty() || mesh.elements.iter().any(|e| e.tag.is_none()) {
        return Err(Error::MissingBlockTags);
    }
    let x = grade_points(&spec);
    let groups = coarse_groups(&x);
    let mut group_of = vec![0; spec.n];
    for (g, &(s, e)) in groups.iter().enumerate() {
        group_of[s..e].fill(g);
    }
    let diam = mesh
        .domain
        .vertices()
        .iter()
        .flat_map(|a| {
            mesh.domain
                .vertices()
                .into_iter()
                .map(move |b| crate::geom::dist(*a, b))
        })
        .fold(0.0, f64::max);
    let mut b = MeshBuilder::new(diam);
    let mut index: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut count = 0;
    for (bi, (kind, map)) in mesh.blocks.iter().enumerate() {
        for (gj, &(sj, ej)) in groups.iter().enumerate() {
            for (gi, &(si, ei)) in groups.iter().enumerate() {
                let (shape, cell) = match kind.shape() {
                    Shape::Parallelogram => (Shape::Parallelogram, rect(&x, si, ei, sj, ej)),
                    Shape::Triangle if gi > gj => (Shape::Parallelogram, rect(&x, si, ei, sj, ej)),
                    Shape::Triangle if gi == gj => {
                        let l = x[ei] - x[si];
                        (Shape::Triangle, Affine2::diagonal(l, l, [x[si], x[si]]))
                    }
                    Shape::Triangle => continue,
                };
                b.element(shape, map.compose(&cell), None);
                index.insert((bi, gi, gj), count);
                count += 1;
            }
        }
    }
    let parent = mesh
        .elements
        .iter()
        .map(|el| {
            let t = el.tag.expect("checked above");
            index[&(t.block, group_of[t.i], group_of[t.j])]
        })
        .collect();
    let domain: Domain = mesh.domain;
    let mut coarse = b.finish(mesh.grading, domain, mesh.blocks.clone());
    coarse.face = mesh.face;
    coarse.face_id = mesh.face_id;
    let q = mesh_quality_report(&coarse);
    Ok(CoarseMesh {
        max_aspect: q.max_aspect,
        diameter_ratio: q.h_max / q.h_min,
        mesh: coarse,
        parent,
    })
}

fn rect(x: &[f64], si: usize, ei: usize, sj: usize, ej: usize) -> Affine2 {
    Affine2::diagonal(x[ei] - x[si], x[ej] - x[sj], [x[si], x[sj]])
}
