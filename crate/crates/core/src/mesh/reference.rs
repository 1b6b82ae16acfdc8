use super::{
    cell_map, grade_points, Block, BlockTag, Domain, GradedMesh, GradingSpec, MeshBuilder,
};
use crate::error::Result;
use crate::geom::{Affine2, Shape};

/// Adds the graded cells of one block. Square blocks get all `N²` cells,
/// triangle blocks the cells `i ≥ j` with triangles on the diagonal.
pub(crate) fn fill_block(b: &mut MeshBuilder, block: usize, kind: Block, map: &Affine2, x: &[f64]) {
    let n = x.len() - 1;
    match kind.shape() {
        Shape::Parallelogram => {
            for j in 0..n {
                for i in 0..n {
                    let m = cell_map(map, x, i, j, Shape::Parallelogram);
                    b.element(Shape::Parallelogram, m, Some(BlockTag { block, i, j }));
                }
            }
        }
        Shape::Triangle => {
            for j in 0..n {
                for i in j..n {
                    let shape = if i == j {
                        Shape::Triangle
                    } else {
                        Shape::Parallelogram
                    };
                    b.element(
                        shape,
                        cell_map(map, x, i, j, shape),
                        Some(BlockTag { block, i, j }),
                    );
                }
            }
        }
    }
}

/// Tensor mesh of Q̂ with cells `I_i × I_j` between the graded points.
pub fn build_reference_graded_square(spec: &GradingSpec) -> Result<GradedMesh> {
    spec.validate()?;
    let x = grade_points(spec);
    let mut b = MeshBuilder::new(std::f64::consts::SQRT_2);
    fill_block(&mut b, 0, Block::Square, &Affine2::IDENTITY, &x);
    let domain = Domain {
        shape: Shape::Parallelogram,
        map: Affine2::IDENTITY,
    };
    Ok(b.finish(
        Some(*spec),
        domain,
        vec![(Block::Square, Affine2::IDENTITY)],
    ))
}

/// Mesh of T̂ = {0 < x₂ < x₁ < 1}: rectangles `K_ij = I_i × I_j` for `i > j`
/// and the triangles `K_ii` on the diagonal.
pub fn build_reference_graded_triangle(spec: &GradingSpec) -> Result<GradedMesh> {
    spec.validate()?;
    let x = grade_points(spec);
    let mut b = MeshBuilder::new(std::f64::consts::SQRT_2);
    fill_block(&mut b, 0, Block::Triangle, &Affine2::IDENTITY, &x);
    let domain = Domain {
        shape: Shape::Triangle,
        map: Affine2::IDENTITY,
    };
    Ok(b.finish(
        Some(*spec),
        domain,
        vec![(Block::Triangle, Affine2::IDENTITY)],
    ))
}
