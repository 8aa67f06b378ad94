//! Line-oriented ASCII mesh format.
//!
//! ```text
//! REGION 1 ELASTIC
//! REGION 2 ACOUSTIC
//! NODES n
//! id x y z            (n lines)
//! HEX m
//! id region v1 .. v8  (m lines, VTK vertex order)
//! FACES p
//! elem_id local_face tag   (p lines, tag in DIR | NEU | ABS)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{BoundaryCondition, DomainKind, FaceRef, HexElement, HexMesh, Region, CORNERS};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::MeshParse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

enum Section {
    None,
    Nodes(usize),
    Hex(usize),
    Faces(usize),
}

pub fn import_mesh<R: BufRead>(reader: R) -> Result<HexMesh> {
    let mut mesh = HexMesh::default();
    let mut node_index: HashMap<i64, usize> = HashMap::new();
    let mut elem_index: HashMap<i64, usize> = HashMap::new();
    let mut elem_ids: Vec<i64> = Vec::new();
    let mut raw_elems: Vec<(usize, i64, u32, [i64; 8])> = Vec::new();
    let mut raw_faces: Vec<(usize, i64, u8, BoundaryCondition)> = Vec::new();
    let mut section = Section::None;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        let head = tok.clone().next().unwrap_or_default();

        match section {
            Section::Nodes(left) if left > 0 => {
                let id: i64 = field(tok.next(), lineno, "node id")?;
                let x: f64 = field(tok.next(), lineno, "x")?;
                let y: f64 = field(tok.next(), lineno, "y")?;
                let z: f64 = field(tok.next(), lineno, "z")?;
                if tok.next().is_some() {
                    return Err(parse_err(lineno, "trailing fields on node line"));
                }
                if node_index.insert(id, mesh.vertices.len()).is_some() {
                    return Err(parse_err(lineno, format!("duplicated node id {id}")));
                }
                mesh.vertices.push([x, y, z]);
                section = Section::Nodes(left - 1);
                continue;
            }
            Section::Hex(left) if left > 0 => {
                let id: i64 = field(tok.next(), lineno, "element id")?;
                let region: u32 = field(tok.next(), lineno, "region id")?;
                let mut v = [0i64; 8];
                for (a, slot) in v.iter_mut().enumerate() {
                    *slot = field(tok.next(), lineno, &format!("vertex {}", a + 1))?;
                }
                if tok.next().is_some() {
                    return Err(parse_err(lineno, "trailing fields on element line"));
                }
                if elem_index.insert(id, raw_elems.len()).is_some() {
                    return Err(parse_err(lineno, format!("duplicated element id {id}")));
                }
                raw_elems.push((lineno, id, region, v));
                section = Section::Hex(left - 1);
                continue;
            }
            Section::Faces(left) if left > 0 => {
                let elem: i64 = field(tok.next(), lineno, "element id")?;
                let face: u8 = field(tok.next(), lineno, "local face")?;
                if face > 5 {
                    return Err(parse_err(lineno, format!("local face {face} not in 0..5")));
                }
                let tag = match tok.next() {
                    Some("DIR") => BoundaryCondition::Dirichlet,
                    Some("NEU") => BoundaryCondition::Neumann,
                    Some("ABS") => BoundaryCondition::Absorbing,
                    Some(t) => return Err(parse_err(lineno, format!("unknown face tag '{t}'"))),
                    None => return Err(parse_err(lineno, "missing face tag")),
                };
                raw_faces.push((lineno, elem, face, tag));
                section = Section::Faces(left - 1);
                continue;
            }
            _ => {}
        }

        tok.next();
        match head {
            "REGION" => {
                let id: u32 = field(tok.next(), lineno, "region id")?;
                let kind = match tok.next() {
                    Some("ELASTIC") => DomainKind::Elastic,
                    Some("ACOUSTIC") => DomainKind::Acoustic,
                    other => {
                        return Err(parse_err(lineno, format!("invalid region kind {other:?}")))
                    }
                };
                if mesh.region(id).is_some() {
                    return Err(parse_err(lineno, format!("region {id} declared twice")));
                }
                mesh.regions.push(Region { id, kind });
            }
            "NODES" => section = Section::Nodes(field(tok.next(), lineno, "node count")?),
            "HEX" => section = Section::Hex(field(tok.next(), lineno, "element count")?),
            "FACES" => section = Section::Faces(field(tok.next(), lineno, "face count")?),
            other => return Err(parse_err(lineno, format!("unexpected line starting with '{other}'"))),
        }
    }
    match section {
        Section::Nodes(n) | Section::Hex(n) | Section::Faces(n) if n > 0 => {
            return Err(parse_err(0, format!("unexpected end of file, {n} records missing")))
        }
        _ => {}
    }

    for (lineno, id, region, v) in raw_elems {
        if mesh.region(region).is_none() {
            return Err(parse_err(lineno, format!("element {id} uses undeclared region {region}")));
        }
        let mut vertices = [0usize; 8];
        for a in 0..8 {
            vertices[a] = *node_index
                .get(&v[a])
                .ok_or_else(|| parse_err(lineno, format!("unknown node id {}", v[a])))?;
        }
        mesh.elements.push(HexElement { vertices, region });
        elem_ids.push(id);
    }
    for (lineno, elem, face, tag) in raw_faces {
        let e = *elem_index
            .get(&elem)
            .ok_or_else(|| parse_err(lineno, format!("unknown element id {elem}")))?;
        if mesh.face_tags.insert(FaceRef::new(e, face), tag).is_some() {
            return Err(parse_err(lineno, format!("face {elem}/{face} tagged twice")));
        }
    }

    // Trilinear determinants are checked at the corners and centre; the
    // function spaces re-check at every GLL point of the chosen degree.
    let mut pts: Vec<[f64; 3]> = CORNERS.to_vec();
    pts.push([0.0; 3]);
    mesh.validate_jacobians(&pts).map_err(|e| match e {
        Error::InvertedElement { element, det_j } => Error::InvertedElement {
            element: elem_ids[element] as usize,
            det_j,
        },
        other => other,
    })?;
    Ok(mesh)
}

pub fn read_mesh_file(path: &Path) -> Result<HexMesh> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    import_mesh(std::io::BufReader::new(f))
}

/// Writes `mesh` in the format read by [`import_mesh`], 1-based ids.
pub fn write_mesh<W: Write>(mesh: &HexMesh, mut w: W) -> std::io::Result<()> {
    for r in &mesh.regions {
        let kind = match r.kind {
            DomainKind::Elastic => "ELASTIC",
            DomainKind::Acoustic => "ACOUSTIC",
        };
        writeln!(w, "REGION {} {kind}", r.id)?;
    }
    writeln!(w, "NODES {}", mesh.vertices.len())?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        writeln!(w, "{} {:?} {:?} {:?}", i + 1, v[0], v[1], v[2])?;
    }
    writeln!(w, "HEX {}", mesh.elements.len())?;
    for (i, e) in mesh.elements.iter().enumerate() {
        write!(w, "{} {}", i + 1, e.region)?;
        for v in e.vertices {
            write!(w, " {}", v + 1)?;
        }
        writeln!(w)?;
    }
    if !mesh.face_tags.is_empty() {
        writeln!(w, "FACES {}", mesh.face_tags.len())?;
        for (f, tag) in &mesh.face_tags {
            let t = match tag {
                BoundaryCondition::Dirichlet => "DIR",
                BoundaryCondition::Neumann => "NEU",
                BoundaryCondition::Absorbing => "ABS",
            };
            writeln!(w, "{} {} {t}", f.element + 1, f.face)?;
        }
    }
    Ok(())
}
