use std::collections::HashMap;

use super::reference::fill_block;
use super::{grade_points, Block, Domain, GradedMesh, GradingSpec, MeshBuilder};
use crate::error::{Error, Result};
use crate::geom::{
    add, cross, cross3, dist, dot3, lerp, norm3, scale, sub, sub3, Affine2, Point2, Point3, Shape,
};

/// A planar triangular face in space. `orientation` is `+1` when the vertex
/// order is counter-clockwise seen from the side the surface normal points to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceGeometry {
    pub vertices: [Point3; 3],
    pub orientation: i8,
}

impl FaceGeometry {
    pub fn new(vertices: [Point3; 3], orientation: i8) -> Result<Self> {
        let f = FaceGeometry {
            vertices,
            orientation,
        };
        f.validate()?;
        Ok(f)
    }

    /// Face lying in the plane `z = 0`.
    pub fn planar(p: [Point2; 3]) -> Result<Self> {
        FaceGeometry::new(p.map(|q| [q[0], q[1], 0.0]), 1)
    }

    /// The triangle with vertices (0,0), (1,0), (0,1).
    pub fn unit_right_triangle() -> Self {
        FaceGeometry::planar([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).expect("valid face")
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b, c] = self.vertices;
        if a.iter().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateFace("non-finite vertex".into()));
        }
        let n = norm3(cross3(sub3(b, a), sub3(c, a)));
        let l = norm3(sub3(b, a))
            .max(norm3(sub3(c, a)))
            .max(norm3(sub3(c, b)));
        if !(n > 1e-12 * l * l) {
            return Err(Error::DegenerateFace("vertices are collinear".into()));
        }
        if self.orientation != 1 && self.orientation != -1 {
            return Err(Error::DegenerateFace("orientation must be +1 or -1".into()));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.vertices;
        0.5 * norm3(cross3(sub3(b, a), sub3(c, a)))
    }

    pub fn frame(&self) -> FaceFrame {
        let [a, b, c] = self.vertices;
        let e1 = unit3(sub3(b, a));
        let n = unit3(cross3(sub3(b, a), sub3(c, a)));
        FaceFrame {
            origin: a,
            e1,
            e2: cross3(n, e1),
        }
    }
}

fn unit3(v: Point3) -> Point3 {
    let l = norm3(v);
    [v[0] / l, v[1] / l, v[2] / l]
}

/// Orthonormal in-plane frame of a face; local coordinates put the face
/// vertices counter-clockwise with the first at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceFrame {
    pub origin: Point3,
    pub e1: Point3,
    pub e2: Point3,
}

impl FaceFrame {
    pub fn to_local(&self, p: Point3) -> Point2 {
        let d = sub3(p, self.origin);
        [dot3(d, self.e1), dot3(d, self.e2)]
    }

    pub fn to_global(&self, x: Point2) -> Point3 {
        let mut p = self.origin;
        for (k, pk) in p.iter_mut().enumerate() {
            *pk += x[0] * self.e1[k] + x[1] * self.e2[k];
        }
        p
    }
}

/// Face mesh: three parallelograms at the vertices carrying the graded
/// square mesh, three triangles on the middle thirds of the sides carrying
/// the graded triangle mesh.
pub fn build_graded_face_mesh(face: &FaceGeometry, spec: &GradingSpec) -> Result<GradedMesh> {
    face_mesh(face, [0, 1, 2], spec, 0)
}

/// `ids` are global ids of the face vertices; on each side the triangle block
/// is graded toward the third point nearer the lower id, so that meshes of
/// faces sharing a side match along it.
pub(crate) fn face_mesh(
    face: &FaceGeometry,
    ids: [usize; 3],
    spec: &GradingSpec,
    face_id: usize,
) -> Result<GradedMesh> {
    face.validate()?;
    spec.validate()?;
    let frame = face.frame();
    let p: [Point2; 3] = face.vertices.map(|v| frame.to_local(v));
    let c = scale(add(add(p[0], p[1]), p[2]), 1.0 / 3.0);
    let diam = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
    let x = grade_points(spec);
    let mut blocks = Vec::new();
    for k in 0..3 {
        let (pk, next, prev) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
        let m = Affine2::from_columns(
            pk,
            scale(sub(next, pk), 1.0 / 3.0),
            scale(sub(prev, pk), 1.0 / 3.0),
        );
        blocks.push((Block::FaceParallelogram(k as u8), m));
    }
    for k in 0..3 {
        let (pk, next) = (p[k], p[(k + 1) % 3]);
        let (a, b) = (lerp(pk, next, 1.0 / 3.0), lerp(pk, next, 2.0 / 3.0));
        let (o, e) = if ids[k] < ids[(k + 1) % 3] {
            (a, b)
        } else {
            (b, a)
        };
        blocks.push((
            Block::FaceTriangle(k as u8),
            Affine2::from_columns(o, sub(e, o), sub(c, e)),
        ));
    }
    let mut b = MeshBuilder::new(diam);
    for (idx, (kind, map)) in blocks.iter().enumerate() {
        fill_block(&mut b, idx, *kind, map, &x);
    }
    let domain = Domain {
        shape: Shape::Triangle,
        map: Affine2::from_columns(p[0], sub(p[1], p[0]), sub(p[2], p[1])),
    };
    debug_assert!(cross(sub(p[1], p[0]), sub(p[2], p[0])) > 0.0);
    let mut mesh = b.finish(Some(*spec), domain, blocks);
    mesh.face = Some((*face, frame));
    mesh.face_id = face_id;
    Ok(mesh)
}

/// An edge of a surface mesh with `(face, local edge, sign)` incidences; the
/// face-local coefficient is `sign` times the surface coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceEdge {
    pub v: [usize; 2],
    pub incident: Vec<(usize, usize, f64)>,
}

/// Per-face graded meshes of a closed polyhedral surface with the DOF
/// identification across shared sides.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<GradedMesh>,
    pub edges: Vec<SurfaceEdge>,
    /// `edge_map[f][e]`: surface edge of local edge `e` of face `f`.
    pub edge_map: Vec<Vec<usize>>,
}

impl SurfaceMesh {
    /// `faces` index into `vertices`; orientation is taken relative to the
    /// vertex centroid, which is correct for convex surfaces.
    pub fn build(vertices: &[Point3], faces: &[[usize; 3]], spec: &GradingSpec) -> Result<Self> {
        let n = vertices.len() as f64;
        let centre = vertices.iter().fold([0.0; 3], |a, v| {
            [a[0] + v[0] / n, a[1] + v[1] / n, a[2] + v[2] / n]
        });
        let mut meshes = Vec::with_capacity(faces.len());
        for (f, ids) in faces.iter().enumerate() {
            let v = ids.map(|i| vertices[i]);
            let nrm = cross3(sub3(v[1], v[0]), sub3(v[2], v[0]));
            let out = sub3(
                [
                    (v[0][0] + v[1][0] + v[2][0]) / 3.0,
                    (v[0][1] + v[1][1] + v[2][1]) / 3.0,
                    (v[0][2] + v[1][2] + v[2][2]) / 3.0,
                ],
                centre,
            );
            let orientation = if dot3(nrm, out) >= 0.0 { 1 } else { -1 };
            meshes.push(face_mesh(
                &FaceGeometry::new(v, orientation)?,
                *ids,
                spec,
                f,
            )?);
        }
        let diam = vertices
            .iter()
            .flat_map(|a| vertices.iter().map(move |b| norm3(sub3(*a, *b))))
            .fold(0.0, f64::max);
        let tol = diam * 1e-10;
        let cell = diam * 1e-8;
        let mut gverts: Vec<Point3> = Vec::new();
        let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        let mut vertex = |p: Point3| -> usize {
            let key = [0, 1, 2].map(|k| (p[k] / cell).round() as i64);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(ids) = buckets.get(&(key[0] + dx, key[1] + dy, key[2] + dz)) {
                            for &id in ids {
                                if norm3(sub3(gverts[id], p)) <= tol {
                                    return id;
                                }
                            }
                        }
                    }
                }
            }
            gverts.push(p);
            buckets
                .entry((key[0], key[1], key[2]))
                .or_default()
                .push(gverts.len() - 1);
            gverts.len() - 1
        };
        let mut edges: Vec<SurfaceEdge> = Vec::new();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_map = Vec::with_capacity(meshes.len());
        for (f, m) in meshes.iter().enumerate() {
            let frame = m.face.expect("face mesh").1;
            let gid: Vec<usize> = m
                .vertices
                .iter()
                .map(|&x| vertex(frame.to_global(x)))
                .collect();
            let mut map = Vec::with_capacity(m.edges.len());
            for (e, edge) in m.edges.iter().enumerate() {
                let (a, b) = (gid[edge.v[0]], gid[edge.v[1]]);
                let key = (a.min(b), a.max(b));
                let s = *index.entry(key).or_insert_with(|| {
                    edges.push(SurfaceEdge {
                        v: [key.0, key.1],
                        incident: Vec::new(),
                    });
                    edges.len() - 1
                });
                let sign = if edge.incident.len() == 1 {
                    let (el, l) = edge.incident[0];
                    let outward = m.elements[el].signs()[l];
                    if edges[s].incident.is_empty() {
                        outward
                    } else {
                        -outward
                    }
                } else {
                    1.0
                };
                edges[s].incident.push((f, e, sign));
                map.push(s);
            }
            edge_map.push(map);
        }
        Ok(SurfaceMesh {
            vertices: gverts,
            faces: meshes,
            edges,
            edge_map,
        })
    }

    /// Boundary of the unit cube, two outward-oriented triangles per side.
    pub fn unit_cube(spec: &GradingSpec) -> Result<Self> {
        let v: Vec<Point3> = (0..8)
            .map(|i| [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64])
            .collect();
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let faces: Vec<[usize; 3]> = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        SurfaceMesh::build(&v, &faces, spec)
    }

    /// Every surface edge is shared by exactly two face-local edges, with
    /// opposite orientation when they come from different faces.
    pub fn is_conforming(&self) -> bool {
        self.edges.iter().all(|e| match e.incident.as_slice() {
            [(f, ..)] => !self.faces[*f].is_boundary_edge(e.incident[0].1),
            [(f1, e1, _), (f2, e2, _)] => {
                f1 != f2
                    && self.faces[*f1].is_boundary_edge(*e1)
                    && self.faces[*f2].is_boundary_edge(*e2)
            }
            _ => false,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.faces.iter().map(GradedMesh::n_elements).sum()
    }
}
