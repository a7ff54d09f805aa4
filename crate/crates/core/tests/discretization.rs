mod common;

use rand::Rng;
use sdg_core::assembly::{assemble_operators, system_matrix, AssembledOperators, SystemVariant};
use sdg_core::mesh::{EdgeKind, Point, StaggeredMesh};
use sdg_core::polyquad::{tri_quadrature, EdgeRule, Integrator};
use sdg_core::spaces::{
    build_scalar_space, build_vector_space, evaluate_field, interpolate_scalar, interpolate_vector, DofMap,
    FieldValues, FieldVector, ScalarSample, VectorSample,
};
use sdg_core::C64;

use common::{c, fixtures, max_abs, random_complex, rng};

fn scalar_at(space: &DofMap, field: &FieldVector, t: usize, p: Point) -> ScalarSample {
    match evaluate_field(space, field, t, &[p]).unwrap() {
        FieldValues::Scalar(v) => v[0],
        FieldValues::Vector(_) => unreachable!(),
    }
}

fn vector_at(space: &DofMap, field: &FieldVector, t: usize, p: Point) -> VectorSample {
    match evaluate_field(space, field, t, &[p]).unwrap() {
        FieldValues::Vector(v) => v[0],
        FieldValues::Scalar(_) => unreachable!(),
    }
}

fn edge_nodes(mesh: &StaggeredMesh, e: usize, m: usize) -> Vec<(Point, f64)> {
    let [a, b] = mesh.edge_points(e);
    let len = mesh.edges[e].length;
    EdgeRule::new(2 * m + 2)
        .nodes
        .iter()
        .map(|&(s, w)| ([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], w * len))
        .collect()
}

/// Largest two-sided jump over the interior edges of `kind`.
fn max_jump(
    mesh: &StaggeredMesh,
    m: usize,
    kind: EdgeKind,
    jump: impl Fn(usize, usize, Point, [f64; 2]) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for e in mesh.edges.iter().filter(|e| e.kind == kind && !e.is_boundary) {
        for (p, _) in edge_nodes(mesh, e.id, m) {
            worst = worst.max(jump(e.triangle_ids[0], e.triangle_ids[1], p, e.normal));
        }
    }
    worst
}

#[test]
fn interpolation_reproduces_linear_functions() {
    let mut r = rng(11);
    for (name, mesh) in fixtures() {
        for m in 1..=3 {
            let quad = Integrator::new(2 * m + 2, 1.0).unwrap();
            let s = build_scalar_space(&mesh, m).unwrap();
            let v = build_vector_space(&mesh, m).unwrap();
            let w = interpolate_scalar(&mesh, &s, &quad, |p| c(p[0] + 2.0 * p[1], 0.0)).unwrap();
            let q = interpolate_vector(&mesh, &v, &quad, |p| [c(p[1], 1.0), c(-3.0 * p[0], p[0])]).unwrap();
            for t in 0..mesh.triangles.len() {
                let [a, b, cc] = mesh.triangle_points(t);
                let (l1, l2): (f64, f64) = (r.random(), r.random());
                let (l1, l2) = if l1 + l2 > 1.0 { (1.0 - l1, 1.0 - l2) } else { (l1, l2) };
                let p =
                    [a[0] + l1 * (b[0] - a[0]) + l2 * (cc[0] - a[0]), a[1] + l1 * (b[1] - a[1]) + l2 * (cc[1] - a[1])];
                let sw = scalar_at(&s, &w, t, p);
                assert!((sw.value - c(p[0] + 2.0 * p[1], 0.0)).norm() < 1e-12, "{name} m={m}");
                assert!((sw.grad[0] - c(1.0, 0.0)).norm() < 1e-11 && (sw.grad[1] - c(2.0, 0.0)).norm() < 1e-11);
                let sq = vector_at(&v, &q, t, p);
                assert!((sq.value[0] - c(p[1], 1.0)).norm() < 1e-12, "{name} m={m}");
                assert!((sq.value[1] - c(-3.0 * p[0], p[0])).norm() < 1e-12, "{name} m={m}");
                assert!(sq.div.norm() < 1e-11);
            }
        }
    }
}

#[test]
fn random_members_are_conforming_across_their_edges() {
    let mut r = rng(3);
    for (name, mesh) in fixtures() {
        for m in 0..=3 {
            let s = build_scalar_space(&mesh, m).unwrap();
            let v = build_vector_space(&mesh, m).unwrap();
            for _ in 0..20 {
                let w = FieldVector::new(&s, random_complex(&mut r, s.dim)).unwrap();
                let scale = max_abs(&w.values);
                let jump = max_jump(&mesh, m, EdgeKind::Primal, |t0, t1, p, _| {
                    (scalar_at(&s, &w, t0, p).value - scalar_at(&s, &w, t1, p).value).norm()
                });
                assert!(jump <= 1e-10 * scale, "{name} m={m}: scalar jump {jump:e}");

                let q = FieldVector::new(&v, random_complex(&mut r, v.dim)).unwrap();
                let scale = max_abs(&q.values);
                let jump = max_jump(&mesh, m, EdgeKind::Dual, |t0, t1, p, n| {
                    let (a, b) = (vector_at(&v, &q, t0, p).value, vector_at(&v, &q, t1, p).value);
                    ((a[0] - b[0]) * n[0] + (a[1] - b[1]) * n[1]).norm()
                });
                assert!(jump <= 1e-10 * scale, "{name} m={m}: normal jump {jump:e}");
            }
        }
    }
}

#[test]
fn interpolant_of_a_discontinuous_function_jumps_only_across_dual_edges() {
    let (_, mesh) = fixtures().remove(0);
    let m = 1;
    let quad = Integrator::new(4, 1.0).unwrap();
    let s = build_scalar_space(&mesh, m).unwrap();
    // Step across x = 0.1, which cuts through a column of cells.
    let w = interpolate_scalar(&mesh, &s, &quad, |p| c(if p[0] > 0.1 { 1.0 + p[1] } else { p[1] }, 0.0)).unwrap();
    let primal = max_jump(&mesh, m, EdgeKind::Primal, |t0, t1, p, _| {
        (scalar_at(&s, &w, t0, p).value - scalar_at(&s, &w, t1, p).value).norm()
    });
    let dual = max_jump(&mesh, m, EdgeKind::Dual, |t0, t1, p, _| {
        (scalar_at(&s, &w, t0, p).value - scalar_at(&s, &w, t1, p).value).norm()
    });
    assert!(primal < 1e-12, "primal jump {primal:e}");
    assert!(dual > 1e-3, "dual jump {dual:e}");
}

fn dense_max_diff(a: &sdg_core::assembly::SparseMatrix<f64>, b: &sdg_core::assembly::SparseMatrix<f64>) -> f64 {
    assert_eq!((a.nrows, a.ncols), (b.nrows, b.ncols));
    let mut worst: f64 = 0.0;
    for (i, j, v) in a.triplets() {
        worst = worst.max((v - b.get(i, j)).abs());
    }
    for (i, j, v) in b.triplets() {
        worst = worst.max((v - a.get(i, j)).abs());
    }
    worst
}

fn ops_for(mesh: &StaggeredMesh, m: usize) -> (DofMap, DofMap, AssembledOperators) {
    let s = build_scalar_space(mesh, m).unwrap();
    let v = build_vector_space(mesh, m).unwrap();
    let ops = assemble_operators(mesh, &s, &v).unwrap();
    (s, v, ops)
}

#[test]
fn operator_identities() {
    for (name, mesh) in fixtures() {
        for m in 0..=3 {
            let (s, v, ops) = ops_for(&mesh, m);
            assert_eq!((ops.b.nrows, ops.b.ncols), (s.dim, v.dim));
            let adj = dense_max_diff(&ops.b, &ops.bstar.transpose());
            assert!(adj <= 1e-12 * ops.b.max_abs(), "{name} m={m}: adjoint defect {adj:e}");
            for mat in [&ops.mass_p, &ops.mass_u, &ops.boundary] {
                assert!(dense_max_diff(mat, &mat.transpose()) <= 1e-14 * mat.max_abs());
            }

            // Constants: total area, boundary length, and the kernels of b_h and b_h*.
            let quad = Integrator::new(2 * m + 2, 1.0).unwrap();
            let one = interpolate_scalar(&mesh, &s, &quad, |_| c(1.0, 0.0)).unwrap().values;
            let dot = |mat: &sdg_core::assembly::SparseMatrix<f64>| -> f64 {
                mat.mul_vec(&one).iter().zip(&one).map(|(a, b)| (a * b).re).sum()
            };
            assert!((dot(&ops.mass_u) - mesh.total_area()).abs() < 1e-12, "{name} m={m}");
            assert!((dot(&ops.boundary) - mesh.boundary_length()).abs() < 1e-12, "{name} m={m}");
            let b_one = ops.bstar.mul_vec(&one);
            assert!(max_abs(&b_one) < 1e-12, "{name} m={m}: b_h*(1, .) = {:e}", max_abs(&b_one));
            let one_b = ops.b.transpose().mul_vec(&one);
            assert!(max_abs(&one_b) < 1e-12, "{name} m={m}: b_h(., 1) = {:e}", max_abs(&one_b));
        }
    }
}

#[test]
fn vector_mass_is_block_diagonal_by_cell() {
    for (name, mesh) in fixtures() {
        let (_, v, ops) = ops_for(&mesh, 2);
        let mut owner = vec![usize::MAX; v.dim];
        for (cell, dofs) in ops.cell_blocks.iter().enumerate() {
            for &d in dofs {
                assert_eq!(owner[d], usize::MAX, "{name}: dof {d} in two blocks");
                owner[d] = cell;
            }
        }
        assert!(owner.iter().all(|&o| o != usize::MAX));
        for (i, j, val) in ops.mass_p.triplets() {
            assert!(owner[i] == owner[j] || val == 0.0, "{name}: coupling across cells at ({i}, {j})");
        }
    }
}

/// `b_h(q, v)` by direct quadrature of the two fields, without the assembled matrix.
fn b_by_quadrature(mesh: &StaggeredMesh, s: &DofMap, v: &DofMap, w: &FieldVector, q: &FieldVector) -> C64 {
    let m = s.degree;
    let rule = tri_quadrature(2 * m + 2).unwrap();
    let mut total = c(0.0, 0.0);
    for t in 0..mesh.triangles.len() {
        for (p, wt) in rule.map(&mesh.triangle_points(t)) {
            let qv = vector_at(v, q, t, p).value;
            let g = scalar_at(s, w, t, p).grad;
            total -= (qv[0] * g[0] + qv[1] * g[1]) * wt;
        }
    }
    for e in mesh.edges.iter().filter(|e| e.kind == EdgeKind::Dual) {
        let [t0, t1] = [e.triangle_ids[0], e.triangle_ids[1]];
        for (p, wt) in edge_nodes(mesh, e.id, m) {
            let qv = vector_at(v, q, t0, p).value;
            let qn = qv[0] * e.normal[0] + qv[1] * e.normal[1];
            let jump = scalar_at(s, w, t0, p).value - scalar_at(s, w, t1, p).value;
            total += qn * jump * wt;
        }
    }
    total
}

#[test]
fn matrix_form_matches_quadrature_form() {
    let mut r = rng(5);
    for (name, mesh) in fixtures() {
        for m in 1..=2 {
            let (s, v, ops) = ops_for(&mesh, m);
            for _ in 0..50 {
                let w = FieldVector::new(&s, random_complex(&mut r, s.dim)).unwrap();
                let q = FieldVector::new(&v, random_complex(&mut r, v.dim)).unwrap();
                let via_matrix: C64 = ops.b.mul_vec(&q.values).iter().zip(&w.values).map(|(a, b)| a * b).sum();
                let direct = b_by_quadrature(&mesh, &s, &v, &w, &q);
                let scale = direct.norm().max(1.0);
                assert!((via_matrix - direct).norm() <= 1e-11 * scale, "{name} m={m}: {via_matrix} vs {direct}");
            }
        }
    }
}

#[test]
fn projection_systems_differ_only_in_boundary_sign() {
    let (_, mesh) = fixtures().remove(1);
    let (_, _, ops) = ops_for(&mesh, 1);
    let plus = system_matrix(&ops, 10.0, SystemVariant::EllipticPlus).unwrap();
    let minus = system_matrix(&ops, 10.0, SystemVariant::EllipticMinus).unwrap();
    let nv = ops.dim_p();
    let dense_plus = plus.to_dense();
    let dense_minus = minus.to_dense();
    for i in 0..plus.nrows {
        for j in 0..plus.ncols {
            let (a, b) = (dense_plus[i][j], dense_minus[i][j]);
            if i >= nv && j >= nv {
                let r = ops.boundary.get(i - nv, j - nv);
                assert_eq!(a, c(r, 0.0));
                assert_eq!(b, c(-r, 0.0));
            } else {
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn matrix_market_dump() {
    let (_, mesh) = fixtures().remove(0);
    let (_, _, ops) = ops_for(&mesh, 1);
    let a = system_matrix(&ops, 2.0, SystemVariant::Helmholtz).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    a.write_matrix_market(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate complex general"));
    assert_eq!(lines.next().unwrap(), format!("{} {} {}", a.nrows, a.ncols, a.nnz()));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), a.nnz());
    let (i, j, v) = a.triplets().next().unwrap();
    let first: Vec<&str> = body[0].split_whitespace().collect();
    assert_eq!(first[0].parse::<usize>().unwrap(), i + 1);
    assert_eq!(first[1].parse::<usize>().unwrap(), j + 1);
    assert_eq!(first[2].parse::<f64>().unwrap(), v.re);
    assert_eq!(first[3].parse::<f64>().unwrap(), v.im);
}
