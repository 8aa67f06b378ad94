use std::io::Write;
use std::path::Path;

use crate::basis::local_index;
use crate::error::{Error, Result};
use crate::integrator::SimState;
use crate::mesh::{HexMesh, CORNERS};
use crate::space::DofSpace;

/// Per mesh vertex, the elastic and acoustic node sitting on it.
pub(crate) fn vertex_nodes(mesh: &HexMesh, space: &DofSpace) -> Vec<Option<usize>> {
    let mut out = vec![None; mesh.vertices.len()];
    for (l, &e) in space.elements().iter().enumerate() {
        let n = space.element_degree(l);
        let nodes = space.element_nodes(l);
        for (c, corner) in CORNERS.iter().enumerate() {
            let [i, j, k] = corner.map(|x| if x > 0.0 { n } else { 0 });
            let v = mesh.elements[e].vertices[c];
            out[v].get_or_insert(nodes[local_index(n + 1, i, j, k)]);
        }
    }
    out
}

/// Legacy VTK unstructured grid with `displacement` and `phi` at mesh
/// vertices, zero outside the owning domain.
pub fn write_snapshot_to<W: Write>(
    state: &SimState,
    elastic: &DofSpace,
    acoustic: &DofSpace,
    mesh: &HexMesh,
    mut w: W,
) -> std::io::Result<()> {
    let ev = vertex_nodes(mesh, elastic);
    let av = vertex_nodes(mesh, acoustic);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "elastowave snapshot step {} t {:.16e}", state.step, state.t)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices.len())?;
    for p in &mesh.vertices {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2])?;
    }
    let m = mesh.elements.len();
    writeln!(w, "CELLS {m} {}", 9 * m)?;
    for e in &mesh.elements {
        let v = e.vertices;
        writeln!(w, "8 {} {} {} {} {} {} {} {}", v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7])?;
    }
    writeln!(w, "CELL_TYPES {m}")?;
    for _ in 0..m {
        writeln!(w, "12")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.vertices.len())?;
    writeln!(w, "VECTORS displacement double")?;
    for n in &ev {
        let u = match n {
            Some(n) => [state.u[3 * n], state.u[3 * n + 1], state.u[3 * n + 2]],
            None => [0.0; 3],
        };
        writeln!(w, "{:.16e} {:.16e} {:.16e}", u[0], u[1], u[2])?;
    }
    writeln!(w, "SCALARS phi double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for n in &av {
        writeln!(w, "{:.16e}", n.map_or(0.0, |n| state.phi[n]))?;
    }
    w.flush()
}

pub fn write_snapshot(state: &SimState, elastic: &DofSpace, acoustic: &DofSpace, mesh: &HexMesh, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_snapshot_to(state, elastic, acoustic, mesh, std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
}
