use std::sync::Arc;

use faer::{Mat, Side};
use graded_rt::field::families::*;
use graded_rt::field::VectorField;
use graded_rt::mesh::*;
use graded_rt::norms::{hdiv_error, DualNormOperator, DualNormSpec};
use graded_rt::qh::*;
use graded_rt::quadrature::QuadLevel;
use graded_rt::rt::{interpolate_rt, PWConstant, RTFunction};

const L: QuadLevel = QuadLevel(0);

fn square(n: usize, beta: f64) -> Arc<GradedMesh> {
    Arc::new(build_reference_graded_square(&GradingSpec::new(n, beta).unwrap()).unwrap())
}

fn face(n: usize, beta: f64) -> Arc<GradedMesh> {
    Arc::new(
        build_graded_face_mesh(
            &FaceGeometry::unit_right_triangle(),
            &GradingSpec::new(n, beta).unwrap(),
        )
        .unwrap(),
    )
}

/// The field of an RT0 function with its piecewise-constant divergence.
fn rt_as_field(z: &RTFunction) -> VectorField {
    let (a, b) = (z.clone(), z.clone());
    VectorField::new("z", move |x| a.eval_at(x).unwrap())
        .with_divergence(move |x| b.mesh.locate(x).map(|(k, _)| b.div(k)).unwrap())
}

#[test]
fn single_cell_matrices_match_hand_assembly() {
    let m = square(1, 1.0);
    let sys = assemble_mixed_system(&m).unwrap();
    let el = &m.elements[0];
    // ∫ φ_a·φ_b over Q̂ for (0,x₂−1), (x₁,0), (0,x₂), (x₁−1,0).
    let third = 1.0 / 3.0;
    let sixth = 1.0 / 6.0;
    let local = [
        [third, 0.0, -sixth, 0.0],
        [0.0, third, 0.0, -sixth],
        [-sixth, 0.0, third, 0.0],
        [0.0, -sixth, 0.0, third],
    ];
    let md = sys.mass_dense();
    for a in 0..4 {
        for b in 0..4 {
            let want = el.signs()[a] * el.signs()[b] * local[a][b];
            assert!((md[(el.edges()[a], el.edges()[b])] - want).abs() < 1e-15);
        }
    }
    assert!(md.llt(Side::Lower).is_ok());
    let bd = sys.div_dense();
    assert_eq!((bd.nrows(), bd.ncols()), (1, 4));
    for a in 0..4 {
        assert_eq!(bd[(0, el.edges()[a])], el.signs()[a]);
    }
    assert_eq!(inf_sup_constant(&sys).unwrap(), f64::INFINITY);
}

#[test]
fn mass_matrix_is_symmetric() {
    for m in [square(4, 2.0), face(3, 2.5)] {
        let md = assemble_mixed_system(&m).unwrap().mass_dense();
        for i in 0..md.nrows() {
            for j in 0..md.ncols() {
                assert!((md[(i, j)] - md[(j, i)]).abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn mass_matrix_integrates_rt_functions_exactly() {
    // zᵀ M z = ∫ |z|² by an independent tensor Gauss rule per element.
    let m = face(2, 2.0);
    let sys = assemble_mixed_system(&m).unwrap();
    let coeffs: Vec<f64> = (0..m.n_edges())
        .map(|e| ((e * 37) % 11) as f64 - 5.0)
        .collect();
    let z = RTFunction::new(m.clone(), coeffs.clone()).unwrap();
    let md = sys.mass_dense();
    let mut quad = 0.0;
    for (k, el) in m.elements.iter().enumerate() {
        for &(a, wa) in &GAUSS3 {
            for &(b, wb) in &GAUSS3 {
                let (x, j) = match el.shape {
                    graded_rt::geom::Shape::Parallelogram => ([a, b], 1.0),
                    graded_rt::geom::Shape::Triangle => ([a, a * b], a),
                };
                let v = z.eval_unchecked(k, x);
                quad += wa * wb * j * el.det.abs() * (v[0] * v[0] + v[1] * v[1]);
            }
        }
    }
    let mut form = 0.0;
    for i in 0..coeffs.len() {
        for j in 0..coeffs.len() {
            form += coeffs[i] * md[(i, j)] * coeffs[j];
        }
    }
    assert!((form - quad).abs() < 1e-12 * quad, "{form} vs {quad}");
}

const S: f64 = 0.774_596_669_241_483_4;
const GAUSS3: [(f64, f64); 3] = [
    (0.5 - 0.5 * S, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 + 0.5 * S, 5.0 / 18.0),
];

#[test]
fn divergence_matrix_follows_the_divergence_theorem() {
    let m = face(3, 2.0);
    let sys = assemble_mixed_system(&m).unwrap();
    let bd = sys.div_dense();
    for u in [rt0_member(0.2, -0.4, 1.3), rt0_member(1.0, 2.0, 0.0)] {
        let pi = interpolate_rt(&u, &m, L).unwrap();
        let d = u.divergence().unwrap();
        for (k, el) in m.elements.iter().enumerate() {
            let row: f64 = (0..m.n_edges()).map(|e| bd[(k, e)] * pi.coeffs[e]).sum();
            assert!((row - d.eval([0.3, 0.3]) * el.area()).abs() < 1e-13);
        }
    }
    let coo = sys.export_coo();
    assert!(coo.starts_with(&format!("# mass {0} {0}\n", m.n_edges())));
    assert_eq!(
        coo.lines().filter(|l| !l.starts_with('#')).count(),
        sys.mass.len() + sys.div.len()
    );
}

#[test]
fn nonconforming_meshes_are_rejected() {
    // An interior edge that lost one neighbour: its length now counts as
    // boundary, which no conforming partition of the domain allows.
    let mut m = (*square(2, 1.0)).clone();
    let e = m.interior_edges()[0];
    m.edges[e].incident.pop();
    assert!(matches!(
        assemble_mixed_system(&Arc::new(m)),
        Err(graded_rt::Error::NonConforming(_))
    ));
}

#[test]
fn rt0_fields_are_reproduced() {
    for (m, u) in [
        (face(3, 2.0), rt0_member(0.3, -0.1, 0.8)),
        (square(4, 2.5), rt0_rectangle_member(1.0, 0.5, -0.7, 0.4)),
    ] {
        let sol = solve_qh(&u, &m, L).unwrap();
        let pi = interpolate_rt(&u, &m, L).unwrap();
        for e in 0..m.n_edges() {
            assert!((sol.z.coeffs[e] - pi.coeffs[e]).abs() < 1e-11);
        }
        assert!(sol.f.values.iter().all(|v| v.abs() < 1e-11));
        assert!(sol.residual <= SOLVE_TOL);
    }
}

#[test]
fn qh_is_a_projection() {
    let m = face(2, 2.0);
    let u = smooth_trig();
    let sol = solve_qh(&u, &m, L).unwrap();
    let again = solve_qh(&rt_as_field(&sol.z), &m, L).unwrap();
    let scale = sol.z.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    for e in 0..m.n_edges() {
        assert!((again.z.coeffs[e] - sol.z.coeffs[e]).abs() <= 1e-11 * scale.max(1.0));
    }
}

#[test]
fn solution_invariants() {
    for (m, u) in [
        (face(4, 2.0), smooth_trig()),
        (square(4, 2.0), edge_singular(0.3)),
        (face(3, 1.0), smooth_divergence_free()),
    ] {
        let pi = interpolate_rt(&u, &m, L).unwrap();
        let sol = solve_qh(&u, &m, L).unwrap();
        assert!(sol.f.integral().abs() < 1e-12, "{}", sol.f.integral());
        assert!(sol.residual <= SOLVE_TOL);
        for e in m.boundary_edges() {
            assert_eq!(sol.z.coeffs[e], pi.coeffs[e]);
        }
        assert!(qh_commuting_defect(&u, &sol, L).unwrap() <= 1e-9);
    }
}

#[test]
fn divergence_is_preserved_when_representable() {
    // div u = 2c is constant, so div u ∈ div X_h.
    let m = face(3, 2.5);
    for u in [
        rt0_member(0.0, 0.0, 1.0).sum(&smooth_divergence_free(), 1.0),
        smooth_divergence_free(),
    ] {
        let sol = solve_qh(&u, &m, L).unwrap();
        let d = u.divergence().unwrap().eval([0.2, 0.2]);
        for k in 0..m.n_elements() {
            assert!((sol.z.div(k) - d).abs() <= 1e-10, "{} vs {d}", sol.z.div(k));
        }
    }
}

#[test]
fn missing_divergence_is_rejected() {
    let u = VectorField::new("nodiv", |x| [x[1], 0.0]);
    assert!(solve_qh(&u, &square(2, 1.0), L).is_err());
}

/// Smallest nonzero singular value of `W^{−1/2} B_I L^{−T}` with `L Lᵀ` the
/// `H(div)` Gram matrix of the interior fluxes.
fn inf_sup_by_svd(sys: &MixedSystem) -> f64 {
    let m = &sys.mesh;
    let interior = m.interior_edges();
    let (nk, ni) = (m.n_elements(), interior.len());
    let md = sys.mass_dense();
    let bd = sys.div_dense();
    let mut bi = Mat::<f64>::zeros(nk, ni);
    let mut a = Mat::<f64>::zeros(ni, ni);
    for (i, &e) in interior.iter().enumerate() {
        for k in 0..nk {
            bi[(k, i)] = bd[(k, e)];
        }
        for (j, &f) in interior.iter().enumerate() {
            a[(i, j)] = md[(e, f)];
        }
    }
    for i in 0..ni {
        for j in 0..ni {
            a[(i, j)] += (0..nk)
                .map(|k| bi[(k, i)] * bi[(k, j)] / m.elements[k].area())
                .sum::<f64>();
        }
    }
    let l = a.llt(Side::Lower).unwrap().L().to_owned();
    // Solve L Y = B_Iᵀ W^{−1/2}, then the operator is Yᵀ.
    let mut rhs = Mat::<f64>::zeros(ni, nk);
    for k in 0..nk {
        let w = m.elements[k].area().sqrt();
        for i in 0..ni {
            rhs[(i, k)] = bi[(k, i)] / w;
        }
    }
    let y = l.as_ref().solve_lower_triangular_in_place_owned(rhs);
    let sv = y.transpose().to_owned().singular_values().unwrap();
    let mut sv: Vec<f64> = sv.into_iter().collect();
    sv.sort_by(f64::total_cmp);
    // One zero singular value from the constants.
    assert!(sv[0] < 1e-10, "{sv:?}");
    sv[1]
}

trait TriSolve {
    fn solve_lower_triangular_in_place_owned(&self, rhs: Mat<f64>) -> Mat<f64>;
}

impl TriSolve for faer::MatRef<'_, f64> {
    fn solve_lower_triangular_in_place_owned(&self, mut rhs: Mat<f64>) -> Mat<f64> {
        let n = self.nrows();
        for c in 0..rhs.ncols() {
            for i in 0..n {
                let mut s = rhs[(i, c)];
                for j in 0..i {
                    s -= self[(i, j)] * rhs[(j, c)];
                }
                rhs[(i, c)] = s / self[(i, i)];
            }
        }
        rhs
    }
}

#[test]
fn inf_sup_matches_dense_svd() {
    for m in [square(2, 1.0), square(3, 2.0), face(2, 2.0)] {
        let sys = assemble_mixed_system(&m).unwrap();
        let a = inf_sup_constant(&sys).unwrap();
        let b = inf_sup_by_svd(&sys);
        assert!(a > 0.0);
        assert!((a - b).abs() < 1e-10 * b, "{a} vs {b}");
    }
}

#[test]
fn qh_is_quasi_optimal_in_hdiv() {
    let u = smooth_trig();
    for n in [2, 4, 8] {
        let m = square(n, 2.0);
        let sol = solve_qh(&u, &m, L).unwrap();
        let pi = interpolate_rt(&u, &m, L).unwrap();
        let c = hdiv_error(&u, &sol.z, L).unwrap() / hdiv_error(&u, &pi, L).unwrap();
        println!("N={n}: quasi-optimality constant {c:.4}");
        assert!(c <= 10.0, "N={n}: {c}");
    }
}

#[test]
fn error_report_for_rt0_fields_skips_ratios() {
    let op = DualNormOperator::new(&Domain::unit_square(), DualNormSpec::new(2).unwrap()).unwrap();
    let meshes: Vec<_> = [2, 4].iter().map(|&n| square(n, 2.0)).collect();
    let r = qh_error_report(&rt0_member(0.1, 0.2, 0.3), &meshes, &op, L).unwrap();
    for row in &r.rows {
        assert!(
            row.interp_error < 1e-12 && row.dual_error < 1e-10,
            "{row:?}"
        );
        assert!(row.ratio.is_none());
    }
    assert!(r.fit.is_none());
}

#[test]
fn singular_field_ratio_decreases_under_refinement() {
    let op = DualNormOperator::new(&Domain::unit_square(), DualNormSpec::default()).unwrap();
    let meshes: Vec<_> = [4, 8, 16, 32].iter().map(|&n| square(n, 2.0)).collect();
    let r = qh_error_report(&edge_singular(0.3), &meshes, &op, L).unwrap();
    let ratios: Vec<f64> = r.rows.iter().map(|row| row.ratio.unwrap()).collect();
    println!("ratios {ratios:?}");
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
}

#[test]
fn coarse_projections_prolong_to_the_fine_mesh() {
    let m = square(8, 2.0);
    let u = smooth_trig();
    let (coarse, rt, p0) = coarse_projections(&u, &m, L).unwrap();
    assert_eq!(rt.coeffs.len(), coarse.mesh.n_edges());
    let fine = prolong_piecewise_constant(&coarse, &p0, &m).unwrap();
    assert_eq!(fine.values.len(), m.n_elements());
    // Prolongation preserves the integral.
    let pc = PWConstant::new(Arc::new(coarse.mesh.clone()), p0.values.clone()).unwrap();
    assert!((fine.integral() - pc.integral()).abs() < 1e-12);
}
