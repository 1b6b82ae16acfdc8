use std::fmt::Write;

use sha2::{Digest, Sha256};

use super::GradedMesh;
use crate::geom::Shape;

/// Plain-text mesh: a header, then one record per vertex (`v id x y`),
/// element (`t|q id vertices… block i j`) and edge (`e id a b elements…`).
pub(crate) fn export_text(mesh: &GradedMesh) -> String {
    let mut s = String::new();
    let (n, beta) = mesh.grading.map(|g| (g.n, g.beta)).unwrap_or((0, 0.0));
    let _ = writeln!(s, "# graded-rt mesh v1");
    let _ = writeln!(s, "# N {n} beta {beta} face {}", mesh.face_id);
    let _ = writeln!(
        s,
        "# vertices {} elements {} edges {}",
        mesh.vertices.len(),
        mesh.n_elements(),
        mesh.n_edges()
    );
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "v {i} {:.17e} {:.17e}", v[0], v[1]);
    }
    for (k, el) in mesh.elements.iter().enumerate() {
        let c = match el.shape {
            Shape::Triangle => 't',
            Shape::Parallelogram => 'q',
        };
        let _ = write!(s, "{c} {k}");
        for v in el.vertices() {
            let _ = write!(s, " {v}");
        }
        match el.tag {
            Some(t) => {
                let _ = writeln!(s, " {} {} {}", mesh.blocks[t.block].0.code(), t.i, t.j);
            }
            None => {
                let _ = writeln!(s, " - - -");
            }
        }
    }
    for (e, edge) in mesh.edges.iter().enumerate() {
        let _ = write!(s, "e {e} {} {}", edge.v[0], edge.v[1]);
        for (k, _) in &edge.incident {
            let _ = write!(s, " {k}");
        }
        s.push('\n');
    }
    s
}

pub(crate) fn checksum(mesh: &GradedMesh) -> String {
    hex(&Sha256::digest(export_text(mesh).as_bytes()))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
