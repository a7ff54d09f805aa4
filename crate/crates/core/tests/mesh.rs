mod common;

use std::fs;

use proptest::prelude::*;
use sdg_core::mesh::{
    build_square_mesh, perturb_mesh, read_mesh, validate_regularity, write_mesh, EdgeKind, StaggeredMesh, DEFAULT_RHO,
};
use sdg_core::Error;

use common::{centroid, fixtures, unit_square};

fn check_invariants(name: &str, mesh: &StaggeredMesh) {
    let fan_size: usize = mesh.cells.iter().map(|c| c.vertex_ids.len()).sum();
    assert_eq!(mesh.triangles.len(), fan_size, "{name}: one triangle per cell side");
    assert_eq!(mesh.n_dual_edges(), fan_size, "{name}: one dual edge per cell vertex");

    for e in &mesh.edges {
        assert!((e.normal[0].hypot(e.normal[1]) - 1.0).abs() < 1e-14, "{name}: unit normal");
        assert!(e.length > 0.0);
        let [a, b] = mesh.edge_points(e.id);
        let tangent = [b[0] - a[0], b[1] - a[1]];
        assert!((tangent[0] * e.normal[0] + tangent[1] * e.normal[1]).abs() < 1e-12 * e.length);
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let side = |t: usize| {
            let c = centroid(mesh, t);
            (c[0] - mid[0]) * e.normal[0] + (c[1] - mid[1]) * e.normal[1]
        };
        match (e.kind, e.is_boundary) {
            (EdgeKind::Dual, true) => panic!("{name}: dual edge {} on the boundary", e.id),
            (_, true) => {
                assert_eq!(e.triangle_ids.len(), 1);
                assert!(side(e.triangle_ids[0]) < 0.0, "{name}: boundary normal points outward");
            }
            (kind, false) => {
                assert_eq!(e.triangle_ids.len(), 2);
                let [t0, t1] = [e.triangle_ids[0], e.triangle_ids[1]];
                assert!(t0 < t1);
                assert!(side(t0) < 0.0 && side(t1) > 0.0, "{name}: normal from first to second triangle");
                let same_cell = mesh.triangles[t0].parent_cell_id == mesh.triangles[t1].parent_cell_id;
                assert_eq!(same_cell, kind == EdgeKind::Dual, "{name}: edge {}", e.id);
            }
        }
    }

    for tri in &mesh.triangles {
        assert!(mesh.triangle_area(tri.id) > 0.0);
        assert!(tri.diameter > 0.0);
        assert_eq!(mesh.edges[tri.primal_edge_id].kind, EdgeKind::Primal);
        let cell = &mesh.cells[tri.parent_cell_id];
        for &d in &tri.dual_edge_ids {
            assert_eq!(mesh.edges[d].kind, EdgeKind::Dual);
            assert!(mesh.edges[d].endpoint_ids.contains(&cell.center_id), "{name}: dual edge contains the center");
        }
        let [a, b] = mesh.edges[tri.primal_edge_id].endpoint_ids;
        assert!(cell.vertex_ids.contains(&a) && cell.vertex_ids.contains(&b));
    }

    let area: f64 = (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).sum();
    assert!((area - mesh.total_area()).abs() < 1e-12);
}

#[test]
fn fixture_meshes_satisfy_structural_invariants() {
    for (name, mesh) in fixtures() {
        check_invariants(name, &mesh);
    }
}

#[test]
fn square_mesh_counts_and_centers() {
    let n = 4;
    let mesh = build_square_mesh(n, unit_square()).unwrap();
    assert_eq!(mesh.cells.len(), n * n);
    assert_eq!(mesh.triangles.len(), 4 * n * n);
    assert_eq!(mesh.n_primal_edges, 2 * n * (n + 1));
    let boundary: f64 = mesh.primal_edges().filter(|e| e.is_boundary).map(|e| e.length).sum();
    assert!((boundary - 4.0).abs() < 1e-14);
    for cell in &mesh.cells {
        let xs: Vec<f64> = cell.vertex_ids.iter().map(|&v| mesh.point(v)[0]).collect();
        let mean = xs.iter().sum::<f64>() / 4.0;
        assert!((cell.center[0] - mean).abs() < 1e-15);
    }
    assert!(validate_regularity(&mesh, DEFAULT_RHO).pass);
}

#[test]
fn write_then_read_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (name, mesh) in fixtures() {
        let path = dir.path().join(format!("{name}.json"));
        write_mesh(&mesh, &path).unwrap();
        let back = read_mesh(&path).unwrap();
        assert_eq!(back, mesh, "{name}");
    }
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "out_of_range",
            r#"{"vertices": [[0,0],[1,0],[2,0],[0,1],[1,1],[2,1],[0,2],[1,2],[2,2]], "cells": [{"vertices": [0, 1, 999]}]}"#,
        ),
        ("nan", r#"{"vertices": [[0,0],[1,0],[NaN,1]], "cells": [{"vertices": [0, 1, 2]}]}"#),
        ("truncated", r#"{"vertices": [[0,0],[1,0]"#),
        ("missing_cells", r#"{"vertices": [[0,0],[1,0],[0,1]]}"#),
    ];
    for (name, text) in cases {
        let path = dir.path().join(format!("{name}.json"));
        fs::write(&path, text).unwrap();
        let err = read_mesh(&path).unwrap_err();
        assert!(matches!(err, Error::MalformedFile { .. }), "{name}: {err}");
    }
    assert!(matches!(read_mesh(dir.path().join("absent.json")), Err(Error::Io(_))));
}

#[test]
fn explicit_centers_survive_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("centered.json");
    fs::write(
        &path,
        r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "cells": [{"vertices": [0,1,2,3], "center": [0.4, 0.6]}]}"#,
    )
    .unwrap();
    let mesh = read_mesh(&path).unwrap();
    assert_eq!(mesh.cells[0].center, [0.4, 0.6]);
    check_invariants("centered", &mesh);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn perturbed_meshes_keep_invariants(n in 2usize..6, delta in 0.0f64..0.3, seed in any::<u64>()) {
        let base = build_square_mesh(n, unit_square()).unwrap();
        let p = perturb_mesh(&base, delta, seed, DEFAULT_RHO).unwrap();
        check_invariants("perturbed", &p.mesh);
        prop_assert!(validate_regularity(&p.mesh, DEFAULT_RHO).pass);
        prop_assert!(p.delta <= delta);
        let again = perturb_mesh(&base, delta, seed, DEFAULT_RHO).unwrap();
        prop_assert_eq!(again.mesh, p.mesh);
    }
}
