use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CellSpec, Point, StaggeredMesh};
use crate::error::{Error, Result};

/// On-disk mesh: primal vertices and polygonal cells (0-based indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<MeshFileCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFileCell {
    pub vertices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
}

impl MeshFile {
    pub fn from_mesh(mesh: &StaggeredMesh) -> Self {
        MeshFile {
            vertices: mesh.primal_points(),
            cells: mesh
                .cells
                .iter()
                .map(|c| MeshFileCell { vertices: c.vertex_ids.clone(), center: Some(c.center) })
                .collect(),
        }
    }

    pub fn to_mesh(&self) -> Result<StaggeredMesh> {
        let cells: Vec<CellSpec> =
            self.cells.iter().map(|c| CellSpec { vertices: c.vertices.clone(), center: c.center }).collect();
        let points: Vec<Point> = self.vertices.clone();
        StaggeredMesh::from_primal(&points, &cells)
    }
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<StaggeredMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let file: MeshFile = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedFile { path: path.to_owned(), reason: e.to_string() })?;
    file.to_mesh().map_err(|e| match e {
        Error::InvalidMesh(reason) => Error::MalformedFile { path: path.to_owned(), reason },
        other => other,
    })
}

/// Writes the primal layer; coordinates round-trip exactly.
pub fn write_mesh(mesh: &StaggeredMesh, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&MeshFile::from_mesh(mesh))
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    fs::write(path, text)?;
    Ok(())
}
