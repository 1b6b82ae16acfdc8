use std::sync::Arc;

use graded_rt::field::families::*;
use graded_rt::field::{ScalarField, VectorField};
use graded_rt::geom::{dot, norm, sub, Point2, Shape};
use graded_rt::mesh::*;
use graded_rt::quadrature::QuadLevel;
use graded_rt::rt::*;
use graded_rt::Error;
use proptest::prelude::*;

mod common;
use common::{gauss01, simpson};

const L: QuadLevel = QuadLevel(0);

fn square(n: usize, beta: f64) -> Arc<GradedMesh> {
    Arc::new(build_reference_graded_square(&GradingSpec::new(n, beta).unwrap()).unwrap())
}

fn triangle(n: usize, beta: f64) -> Arc<GradedMesh> {
    Arc::new(build_reference_graded_triangle(&GradingSpec::new(n, beta).unwrap()).unwrap())
}

fn oblique_face(n: usize, beta: f64) -> Arc<GradedMesh> {
    let f = FaceGeometry::planar([[0.1, -0.2], [1.3, 0.4], [0.2, 1.1]]).unwrap();
    Arc::new(build_graded_face_mesh(&f, &GradingSpec::new(n, beta).unwrap()).unwrap())
}

#[test]
fn local_bases_are_unisolvent() {
    for shape in [Shape::Parallelogram, Shape::Triangle] {
        let b = RTLocalBasis::new(shape);
        let m = b.dof_matrix();
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!(
                    (v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14,
                    "{shape:?} [{i}][{j}] = {v}"
                );
            }
        }
    }
}

#[test]
fn dof_matrix_matches_hand_computed_fluxes() {
    // Independent check: edge midpoint flux times length is exact for RT0.
    for shape in [Shape::Parallelogram, Shape::Triangle] {
        let v = shape.ref_vertices();
        let n = v.len();
        for k in 0..n {
            for l in 0..n {
                let (a, b) = (v[l], v[(l + 1) % n]);
                let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                let d = sub(b, a);
                let outward = [d[1], -d[0]];
                let flux = dot(ref_basis(shape, k, mid), outward);
                assert!((flux - if k == l { 1.0 } else { 0.0 }).abs() < 1e-15);
                assert!((norm(d) - ref_edge_length(shape, l)).abs() < 1e-15);
                let nl = ref_normal(shape, l);
                assert!(
                    (nl[0] - outward[0] / norm(d)).abs() < 1e-15
                        && (nl[1] - outward[1] / norm(d)).abs() < 1e-15
                );
            }
        }
    }
}

#[test]
fn edge_flux_examples() {
    let q = square(1, 2.0);
    let boundary_flux = |u: &VectorField, m: &GradedMesh, l: usize| {
        let el = &m.elements[0];
        el.signs()[l] * edge_flux(u, m, el.edges()[l], L).value
    };
    let u = VectorField::new("(1,0)", |_| [1.0, 0.0]);
    assert!((boundary_flux(&u, &q, 1) - 1.0).abs() < 1e-14);
    let u = VectorField::new("(x2,x1)", |x| [x[1], x[0]]);
    assert!((boundary_flux(&u, &q, 2) - 0.5).abs() < 1e-14);

    let t = triangle(1, 2.0);
    for eps in [1.0, 0.5, 0.2, 0.1, 0.05] {
        let u = build_counterexample_field(eps).unwrap();
        let f = boundary_flux(&u, &t, 0);
        assert!((f + 1.0).abs() < 1e-12, "eps={eps}: {f}");
    }
}

#[test]
fn single_cell_interpolants() {
    let q = square(1, 2.0);
    let u = VectorField::new("(x2,x1)", |x| [x[1], x[0]]);
    let rt = interpolate_rt(&u, &q, L).unwrap();
    for x in [[0.0, 0.0], [0.3, 0.9], [1.0, 1.0]] {
        let v = rt.eval(0, x).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-14 && (v[1] - 0.5).abs() < 1e-14);
    }

    let t = triangle(1, 2.0);
    for eps in [0.5, 0.2, 0.1, 0.05] {
        let u = build_counterexample_field(eps).unwrap();
        let r = interpolate_rt_report(&u, &t, L).unwrap();
        for x in [[0.0, 0.0], [0.5, 0.25], [1.0, 1.0], [0.9, 0.1]] {
            let v = r.rt.eval(0, x).unwrap();
            assert!(
                v[0].abs() < 1e-10 && (v[1] - 1.0).abs() < 1e-10,
                "eps={eps} at {x:?}: {v:?}"
            );
        }
    }
}

#[test]
fn counterexample_fluxes_define_the_interpolant() {
    // Local fluxes (−1, 0, +1) on (e0, e1, e2) give the constant field (0, 1).
    let t = triangle(1, 2.0);
    let el = &t.elements[0];
    let mut c = vec![0.0; t.n_edges()];
    for (l, f) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
        c[el.edges()[l]] = el.signs()[l] * f;
    }
    let rt = RTFunction::new(t.clone(), c).unwrap();
    for x in [[0.2, 0.1], [0.7, 0.7], [1.0, 0.0]] {
        let v = rt.eval(0, x).unwrap();
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }
    assert_eq!(rt.div(0), 0.0);
}

#[test]
fn counterexample_profile() {
    assert_eq!(counterexample_w(1.0, 0.1), 1.0);
    // ε log log(e/t) < 1 away from the kink radius.
    let w = counterexample_w(0.2, 0.5);
    assert!((w - 0.2 * (1.0 + 2f64.ln()).ln()).abs() < 1e-15);
    assert_eq!(counterexample_w(0.2, 0.0), 1.0);
    assert_eq!(counterexample_dw(0.2, 1e-300), 0.0);
    let r = kink_radius(0.5);
    assert!((r - std::f64::consts::E * (-(2f64).exp()).exp()).abs() < 1e-16);
    assert!((counterexample_w(0.5, r) - 1.0).abs() < 1e-12);
    assert!(build_counterexample_field(0.0).is_err());
    assert!(build_counterexample_field(f64::NAN).is_err());
    // dw against a central difference.
    for t in [0.01, 0.1, 0.6] {
        let h = 1e-6 * t;
        let fd = (counterexample_w(0.3, t + h) - counterexample_w(0.3, t - h)) / (2.0 * h);
        assert!((fd - counterexample_dw(0.3, t)).abs() < 1e-6 * fd.abs().max(1.0));
    }
}

fn rt0_fields() -> Vec<VectorField> {
    vec![
        rt0_member(0.3, -1.2, 0.7),
        rt0_member(-2.0, 0.5, 0.0),
        rt0_member(0.0, 0.0, 1.0),
    ]
}

#[test]
fn rt0_fields_are_reproduced() {
    for mesh in [square(4, 2.0), triangle(5, 2.5), oblique_face(3, 2.0)] {
        for u in rt0_fields() {
            let rt = interpolate_rt(&u, &mesh, L).unwrap();
            for (k, el) in mesh.elements.iter().enumerate() {
                for xr in [[0.1, 0.05], [0.9, 0.3], [1.0, 0.0]] {
                    let v = rt.eval(k, xr).unwrap();
                    let w = u.eval(el.map.apply(xr));
                    assert!((v[0] - w[0]).abs() < 1e-12 && (v[1] - w[1]).abs() < 1e-12);
                }
            }
            assert!(commuting_defect(&u, &mesh, L).unwrap() < 1e-12);
        }
    }
    // Rectangle members are in RT0(Q̂) but not RT0(T̂).
    let u = rt0_rectangle_member(0.2, 0.1, 1.5, -0.5);
    let m = square(4, 2.0);
    let rt = interpolate_rt(&u, &m, L).unwrap();
    let again = interpolate_rt(&rt.as_field(), &m, L);
    assert!(again.is_ok());
    for k in 0..m.n_elements() {
        let v = rt.eval(k, [0.4, 0.6]).unwrap();
        let w = u.eval(m.elements[k].map.apply([0.4, 0.6]));
        assert!((v[0] - w[0]).abs() < 1e-12 && (v[1] - w[1]).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn interpolation_is_idempotent(seed in prop::collection::vec(-1.0f64..1.0, 4), n in 1usize..5, tri in any::<bool>()) {
        let mesh = if tri { triangle(n, 2.0) } else { square(n, 1.5) };
        let (a, b, c, d) = (seed[0], seed[1], seed[2], seed[3]);
        let u = VectorField::new("poly", move |x| [a + c * x[0] * x[1], b + d * x[0] * x[0]])
            .with_divergence(move |x| c * x[1]);
        let once = interpolate_rt(&u, &mesh, L).unwrap();
        // Re-interpolate element by element: fluxes of the piecewise field
        // through each edge, evaluated from one incident element.
        for (e, edge) in mesh.edges.iter().enumerate() {
            let (k, _) = edge.incident[0];
            let el = &mesh.elements[k];
            let (p, q) = mesh.edge_points(e);
            let nrm = mesh.edge_normal(e);
            let len = norm(sub(q, p));
            let flux: f64 = gauss01(4).iter().map(|&(t, w)| {
                let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                w * len * dot(once.eval_unchecked(k, el.map.inverse_apply(x)), nrm)
            }).sum();
            prop_assert!((flux - once.coeffs[e]).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_component_is_continuous(seed in prop::collection::vec(-2.0f64..2.0, 40)) {
        let mesh = oblique_face(2, 2.0);
        let coeffs: Vec<f64> = (0..mesh.n_edges()).map(|e| seed[e % seed.len()] + 0.01 * e as f64).collect();
        let rt = RTFunction::new(mesh.clone(), coeffs).unwrap();
        for e in mesh.interior_edges() {
            let (p, q) = mesh.edge_points(e);
            let nrm = mesh.edge_normal(e);
            let [(k0, _), (k1, _)] = [mesh.edges[e].incident[0], mesh.edges[e].incident[1]];
            for t in [0.1, 0.5, 0.85] {
                let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                let v0 = rt.eval_unchecked(k0, mesh.elements[k0].map.inverse_apply(x));
                let v1 = rt.eval_unchecked(k1, mesh.elements[k1].map.inverse_apply(x));
                prop_assert!((dot(v0, nrm) - dot(v1, nrm)).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn piola_transform_preserves_fluxes() {
    let mesh = oblique_face(2, 2.0);
    let u = smooth_trig();
    for el in &mesh.elements {
        let uhat = u.piola_pull_back(&el.map);
        let v = el.shape.ref_vertices();
        let n = v.len();
        for l in 0..n {
            let (a, b) = (v[l], v[(l + 1) % n]);
            let ref_flux = segment_flux(&uhat, a, b, ref_normal(el.shape, l), L).value;
            let e = el.edges()[l];
            let phys = el.signs()[l] * edge_flux(&u, &mesh, e, L).value;
            assert!((ref_flux - phys).abs() < 1e-12, "{ref_flux} vs {phys}");
        }
        let back = uhat.piola_push_forward(&el.map);
        let x = el.map.apply([0.4, 0.2]);
        let (p, q) = (back.eval(x), u.eval(x));
        assert!((p[0] - q[0]).abs() < 1e-13 && (p[1] - q[1]).abs() < 1e-13);
    }
}

#[test]
fn projection_examples() {
    let m = square(3, 2.0);
    let p = project_piecewise_constant(&ScalarField::constant(3.0), &m, L);
    assert!(p.values.iter().all(|&v| (v - 3.0).abs() < 1e-14));
    let one = square(1, 1.0);
    let p = project_piecewise_constant(&ScalarField::new("x1", |x| x[0]), &one, L);
    assert!((p.values[0] - 0.5).abs() < 1e-15);
    assert!(PWConstant::new(one.clone(), vec![1.0, 2.0]).is_err());
}

#[test]
fn projection_of_a_singular_divergence() {
    // g = 0.3·1.3·x₂^{−0.7}; means from adaptive 1D integration in x₂
    // after the substitution x₂ = s^{1/0.3}, which makes the integrand smooth.
    let g = power_x2(-0.7, 0.3 * 1.3);
    let m = square(2, 2.0);
    let p = project_piecewise_constant(&g, &m, L);
    let checked = project_piecewise_constant_checked(&g, &m, L);
    for (k, el) in m.elements.iter().enumerate() {
        let h1 = el.map.a[0][0];
        let (y0, h2) = (el.map.b[1], el.map.a[1][1]);
        // ∫_{y0}^{y0+h2} c y^{-0.7} dy with y = s^{10/3}.
        let c = 0.39;
        let (s0, s1) = (y0.powf(0.3), (y0 + h2).powf(0.3));
        let inner = simpson(
            &|s: f64| c * (10.0 / 3.0) * s.powf(10.0 / 3.0 * -0.7 + 7.0 / 3.0),
            s0,
            s1,
            1e-15,
        );
        let oracle = inner * h1 / el.area();
        // Geometric panels of ratio 1/4 at order 8 resolve x^{-0.7} to about 1e-8.
        assert!(
            (p.values[k] - oracle).abs() < 1e-7 * oracle,
            "cell {k}: {} vs {oracle}",
            p.values[k]
        );
        assert!((checked[k].value - oracle).abs() <= checked[k].error);
        assert!(checked[k].error < 1e-7 * oracle);
    }
    // Closed form of the total: ∫₀¹ 0.39 y^{-0.7} dy = 1.3.
    assert!((p.integral() - 1.3).abs() < 1e-7);
}

#[test]
fn commuting_defect_examples() {
    let m = square(2, 1.0);
    let u = VectorField::new("(x1^2,x2)", |x| [x[0] * x[0], x[1]])
        .with_divergence(|x| 2.0 * x[0] + 1.0);
    assert!(commuting_defect(&u, &m, L).unwrap() <= 1e-10);
    for mesh in [square(4, 2.0), triangle(4, 2.0)] {
        assert!(commuting_defect(&edge_singular(0.3), &mesh, L).unwrap() <= 1e-10);
    }
    let nodiv = VectorField::new("nodiv", |x| [x[0], 0.0]);
    assert!(matches!(
        commuting_defect(&nodiv, &m, L),
        Err(Error::MissingDivergence(_))
    ));
}

#[test]
fn commuting_defect_on_oblique_meshes() {
    for u in [
        smooth_trig(),
        smooth_trig_shifted(2),
        smooth_divergence_free(),
    ] {
        assert!(commuting_defect(&u, &oblique_face(3, 2.0), L).unwrap() <= 1e-10);
    }
}

#[test]
fn evaluation_and_divergence() {
    let q = square(1, 1.0);
    let u = VectorField::new("(1,0)", |_| [1.0, 0.0]);
    let rt = interpolate_rt(&u, &q, L).unwrap();
    for x in [[0.0, 0.0], [0.5, 0.5], [1.0, 0.3]] {
        let v = rt.eval(0, x).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && v[1].abs() < 1e-14);
    }
    assert!(matches!(
        rt.eval(0, [1.5, 0.5]),
        Err(Error::PointOutside(..))
    ));
    let t = triangle(1, 2.0);
    let rt = RTFunction::zeros(t.clone());
    assert!(rt.eval(0, [0.2, 0.5]).is_err());
    assert!(rt.eval(0, [0.5, 0.2]).is_ok());
    assert!(eval_rt(&rt, 7, [0.5, 0.2]).is_err());
}

#[test]
fn divergence_matches_the_divergence_theorem() {
    let mesh = oblique_face(2, 1.5);
    let coeffs: Vec<f64> = (0..mesh.n_edges())
        .map(|e| ((e * 7919) % 13) as f64 / 6.5 - 1.0)
        .collect();
    let rt = RTFunction::new(mesh.clone(), coeffs).unwrap();
    let div = PWConstant::divergence_of(&rt);
    for (k, el) in mesh.elements.iter().enumerate() {
        // Boundary integral of the evaluated field via Gauss points per edge.
        let v = el.shape.ref_vertices();
        let n = v.len();
        let mut flux = 0.0;
        for l in 0..n {
            let (a, b) = (el.map.apply(v[l]), el.map.apply(v[(l + 1) % n]));
            let d = sub(b, a);
            let out = if el.det > 0.0 {
                [d[1], -d[0]]
            } else {
                [-d[1], d[0]]
            };
            for (t, w) in gauss01(3) {
                let xr = [
                    v[l][0] + t * (v[(l + 1) % n][0] - v[l][0]),
                    v[l][1] + t * (v[(l + 1) % n][1] - v[l][1]),
                ];
                flux += w * dot(rt.eval_unchecked(k, xr), out);
            }
        }
        assert!((flux / el.area() - div_rt(&rt, k)).abs() < 1e-10 * (1.0 + flux.abs() / el.area()));
        assert_eq!(div.values[k], rt.div(k));
    }
    assert!(
        (div.integral()
            - rt.mesh
                .boundary_edges()
                .iter()
                .map(|&e| rt.coeffs[e] * boundary_sign(&mesh, e))
                .sum::<f64>())
        .abs()
            < 1e-12
    );
}

/// +1 when the global normal of boundary edge `e` points outward.
fn boundary_sign(mesh: &GradedMesh, e: usize) -> f64 {
    let (k, l) = mesh.edges[e].incident[0];
    mesh.elements[k].signs()[l]
}

#[test]
fn export_lists_every_edge() {
    let m = triangle(2, 2.0);
    let rt = interpolate_rt(&smooth_trig(), &m, L).unwrap();
    let text = rt.export_text();
    assert!(text.contains(&m.checksum()));
    assert_eq!(
        text.lines().filter(|l| !l.starts_with('#')).count(),
        m.n_edges()
    );
    let first: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(first, rt.coeffs);
}

#[test]
fn interpolation_error_decreases_under_refinement() {
    // Not componentwise separable, so squares do not superconverge.
    let u = smooth_divergence_free();
    let err = |n: usize| {
        let m = triangle(n, 1.0);
        let rt = interpolate_rt(&u, &m, L).unwrap();
        let mut e2 = 0.0;
        for (k, el) in m.elements.iter().enumerate() {
            let pts: Vec<Point2> = gauss01(5)
                .iter()
                .flat_map(|&(a, _)| gauss01(5).into_iter().map(move |(b, _)| [a, b]))
                .collect();
            let ws: Vec<f64> = gauss01(5)
                .iter()
                .flat_map(|&(_, wa)| gauss01(5).into_iter().map(move |(_, wb)| wa * wb))
                .collect();
            for (p, w) in pts.iter().zip(ws) {
                // Collapse the square onto the element's reference shape.
                let (xr, jac) = match el.shape {
                    Shape::Parallelogram => (*p, 1.0),
                    Shape::Triangle => ([p[0], p[0] * p[1]], p[0]),
                };
                let d = sub(rt.eval_unchecked(k, xr), u.eval(el.map.apply(xr)));
                e2 += w * jac * el.det.abs() * dot(d, d);
            }
        }
        e2.sqrt()
    };
    let (e4, e8, e16) = (err(4), err(8), err(16));
    let r1 = (e4 / e8).log2();
    let r2 = (e8 / e16).log2();
    assert!(
        (r1 - 1.0).abs() < 0.1 && (r2 - 1.0).abs() < 0.1,
        "{r1} {r2}"
    );
}
