use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::SimState;
use crate::mesh::{DomainKind, HexMesh, Point3};
use crate::space::DofSpace;

/// A monitored point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    pub name: String,
    pub domain: DomainKind,
    pub location: Point3,
}

#[derive(Debug)]
struct Probe {
    receiver: Receiver,
    weights: Vec<(usize, f64)>,
    series: Vec<(f64, [f64; 3])>,
}

/// Receivers with their recorded time series.
#[derive(Debug, Default)]
pub struct ReceiverSet {
    probes: Vec<Probe>,
}

fn snap(xi: f64, nodes: &[f64]) -> f64 {
    nodes.iter().copied().find(|n| (n - xi).abs() < 1e-12).unwrap_or(xi)
}

impl ReceiverSet {
    pub fn new(mesh: &HexMesh, elastic: &DofSpace, acoustic: &DofSpace, receivers: Vec<Receiver>) -> Result<Self> {
        let (mut vals, mut grads) = (Vec::new(), Vec::new());
        let mut probes = Vec::with_capacity(receivers.len());
        for r in receivers {
            let space = match r.domain {
                DomainKind::Elastic => elastic,
                DomainKind::Acoustic => acoustic,
            };
            let (e, xi) = mesh
                .locate(r.location, Some(r.domain))
                .ok_or(Error::PointOutsideDomain(r.location))?;
            let l = space.local_element(e).ok_or(Error::PointOutsideDomain(r.location))?;
            let nodes = space.rule(space.element_degree(l)).nodes();
            let xi = xi.map(|v| snap(v, nodes));
            space.basis_at(mesh, l, xi, &mut vals, &mut grads);
            let weights = space
                .element_nodes(l)
                .iter()
                .zip(&vals)
                .filter(|(_, &w)| w != 0.0)
                .map(|(&n, &w)| (n, w))
                .collect();
            probes.push(Probe {
                receiver: r,
                weights,
                series: Vec::new(),
            });
        }
        Ok(Self { probes })
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    /// Reserves room for `samples` more rows per receiver.
    pub fn reserve(&mut self, samples: usize) {
        for p in &mut self.probes {
            p.series.reserve(samples);
        }
    }

    pub fn receivers(&self) -> impl Iterator<Item = &Receiver> {
        self.probes.iter().map(|p| &p.receiver)
    }

    /// `(t, [u_x, u_y, u_z])` or `(t, [φ, 0, 0])` rows of receiver `i`.
    pub fn series(&self, i: usize) -> &[(f64, [f64; 3])] {
        &self.probes[i].series
    }

    /// Samples every receiver at `state.t`.
    pub fn record(&mut self, state: &SimState) -> Result<()> {
        for p in &mut self.probes {
            if let Some(&(last, _)) = p.series.last() {
                if !(state.t > last) {
                    return Err(Error::InvalidInput(format!(
                        "receiver sample time {} does not follow {last}",
                        state.t
                    )));
                }
            }
            let mut v = [0.0; 3];
            match p.receiver.domain {
                DomainKind::Elastic => {
                    for &(n, w) in &p.weights {
                        for c in 0..3 {
                            v[c] += w * state.u[3 * n + c];
                        }
                    }
                }
                DomainKind::Acoustic => {
                    for &(n, w) in &p.weights {
                        v[0] += w * state.phi[n];
                    }
                }
            }
            p.series.push((state.t, v));
        }
        Ok(())
    }

    /// CSV with header `t,ux,uy,uz` or `t,phi`.
    pub fn write_series<W: Write>(&self, i: usize, mut w: W) -> std::io::Result<()> {
        let p = &self.probes[i];
        match p.receiver.domain {
            DomainKind::Elastic => {
                writeln!(w, "t,ux,uy,uz")?;
                for (t, v) in &p.series {
                    writeln!(w, "{t:.16e},{:.16e},{:.16e},{:.16e}", v[0], v[1], v[2])?;
                }
            }
            DomainKind::Acoustic => {
                writeln!(w, "t,phi")?;
                for (t, v) in &p.series {
                    writeln!(w, "{t:.16e},{:.16e}", v[0])?;
                }
            }
        }
        w.flush()
    }

    /// Writes `<name>.csv` per receiver into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut out = Vec::new();
        for (i, p) in self.probes.iter().enumerate() {
            let path = dir.join(format!("{}.csv", p.receiver.name));
            let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            self.write_series(i, std::io::BufWriter::new(f))
                .map_err(|e| Error::io(&path, e))?;
            out.push(path);
        }
        Ok(out)
    }
}
