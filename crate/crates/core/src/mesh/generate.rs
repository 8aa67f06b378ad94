use super::{HexElement, HexMesh, Point3, Region};
use crate::error::{Error, Result};

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxExtents {
    pub min: Point3,
    pub max: Point3,
}

impl BoxExtents {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if (0..3).any(|d| !(max[d] > min[d])) {
            return Err(Error::InvalidInput(format!(
                "box extents must be positive: min {min:?}, max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn size(&self) -> Point3 {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }
}

fn grid_coord(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if i == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / n as f64
    }
}

fn structured_vertices(ext: &BoxExtents, sub: [usize; 3]) -> Vec<Point3> {
    let [nx, ny, nz] = sub;
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                v.push([
                    grid_coord(ext.min[0], ext.max[0], i, nx),
                    grid_coord(ext.min[1], ext.max[1], j, ny),
                    grid_coord(ext.min[2], ext.max[2], k, nz),
                ]);
            }
        }
    }
    v
}

fn cell_vertices(sub: [usize; 3], i: usize, j: usize, k: usize) -> [usize; 8] {
    let [nx, ny, _] = sub;
    let id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    [
        id(i, j, k),
        id(i + 1, j, k),
        id(i + 1, j + 1, k),
        id(i, j + 1, k),
        id(i, j, k + 1),
        id(i + 1, j, k + 1),
        id(i + 1, j + 1, k + 1),
        id(i, j + 1, k + 1),
    ]
}

/// Uniform structured mesh of an axis-aligned box, all elements in `region`.
pub fn build_box_mesh(ext: &BoxExtents, subdivisions: [usize; 3], region: Region) -> Result<HexMesh> {
    if subdivisions.contains(&0) {
        return Err(Error::InvalidInput(format!(
            "box subdivisions must be positive, got {subdivisions:?}"
        )));
    }
    let [nx, ny, nz] = subdivisions;
    let mut elements = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                elements.push(HexElement {
                    vertices: cell_vertices(subdivisions, i, j, k),
                    region: region.id,
                });
            }
        }
    }
    Ok(HexMesh {
        vertices: structured_vertices(ext, subdivisions),
        elements,
        regions: vec![region],
        ..Default::default()
    })
}

/// Box with a box-shaped cavity: the outer grid minus the cells inside
/// `cavity` forms `elastic`, and the cavity gets its own (generally
/// non-matching) grid in `acoustic`.
///
/// The cavity faces must fall on outer-grid planes.
pub fn build_cube_cavity_mesh(
    outer: &BoxExtents,
    outer_subdivisions: [usize; 3],
    cavity: &BoxExtents,
    cavity_subdivisions: [usize; 3],
    elastic: Region,
    acoustic: Region,
) -> Result<HexMesh> {
    if outer_subdivisions.contains(&0) {
        return Err(Error::InvalidInput("cavity mesh: zero subdivision".into()));
    }
    let mut lo_idx = [0usize; 3];
    let mut hi_idx = [0usize; 3];
    for d in 0..3 {
        let h = outer.size()[d] / outer_subdivisions[d] as f64;
        let snap = |x: f64| -> Result<usize> {
            let t = (x - outer.min[d]) / h;
            let r = t.round();
            if (t - r).abs() > 1e-9 || r < 1.0 || r > (outer_subdivisions[d] - 1) as f64 {
                return Err(Error::InvalidInput(format!(
                    "cavity face at {x} is not an interior grid plane along axis {d}"
                )));
            }
            Ok(r as usize)
        };
        lo_idx[d] = snap(cavity.min[d])?;
        hi_idx[d] = snap(cavity.max[d])?;
    }
    let [nx, ny, nz] = outer_subdivisions;
    let mut elements = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let ijk = [i, j, k];
                if (0..3).all(|d| ijk[d] >= lo_idx[d] && ijk[d] < hi_idx[d]) {
                    continue;
                }
                elements.push(HexElement {
                    vertices: cell_vertices(outer_subdivisions, i, j, k),
                    region: elastic.id,
                });
            }
        }
    }
    let solid = HexMesh {
        vertices: structured_vertices(outer, outer_subdivisions),
        elements,
        regions: vec![elastic],
        ..Default::default()
    };
    let fluid = build_box_mesh(cavity, cavity_subdivisions, acoustic)?;
    HexMesh::merge([solid, fluid])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainKind;

    fn elastic(id: u32) -> Region {
        Region {
            id,
            kind: DomainKind::Elastic,
        }
    }

    #[test]
    fn unit_box_counts() {
        let m = build_box_mesh(&BoxExtents::new([0.0; 3], [1.0; 3]).unwrap(), [5, 5, 5], elastic(1)).unwrap();
        assert_eq!(m.elements.len(), 125);
        assert!((m.element_size(0) - 0.2).abs() < 1e-15);
        assert!((m.volume() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn verification_half_box() {
        let m = build_box_mesh(
            &BoxExtents::new([-1.0, 0.0, 0.0], [0.0, 1.0, 1.0]).unwrap(),
            [10, 10, 10],
            elastic(1),
        )
        .unwrap();
        assert_eq!(m.elements.len(), 1000);
        assert!((m.region_meshsize(1) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn scholte_box_has_2400_elements() {
        // 5 x 5 x 96 gives 0.4 x 0.4 x 0.4167 elements.
        let m = build_box_mesh(
            &BoxExtents::new([-1.0, -1.0, -20.0], [1.0, 1.0, 20.0]).unwrap(),
            [5, 5, 96],
            elastic(1),
        )
        .unwrap();
        assert_eq!(m.elements.len(), 2400);
        assert!((m.volume() - 160.0).abs() < 1e-9);
    }

    #[test]
    fn zero_subdivision_rejected() {
        let ext = BoxExtents::new([0.0; 3], [1.0; 3]).unwrap();
        assert!(build_box_mesh(&ext, [0, 1, 1], elastic(1)).is_err());
        assert!(BoxExtents::new([0.0; 3], [1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn cavity_mesh_volume() {
        let outer = BoxExtents::new([-150.0, -150.0, -75.0], [150.0, 150.0, 75.0]).unwrap();
        let cav = BoxExtents::new([-25.0; 3], [25.0; 3]).unwrap();
        let m = build_cube_cavity_mesh(
            &outer,
            [12, 12, 6],
            &cav,
            [4, 4, 4],
            elastic(1),
            Region {
                id: 2,
                kind: DomainKind::Acoustic,
            },
        )
        .unwrap();
        assert_eq!(m.elements.len(), 12 * 12 * 6 - 8 + 64);
        assert!((m.volume() - 300.0 * 300.0 * 150.0).abs() < 1e-6);
    }
}
