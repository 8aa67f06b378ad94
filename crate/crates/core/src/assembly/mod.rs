//! Operators of the semi-discrete system
//!
//! ```text
//! M_e ü + S_e u̇ + K_e u + C_e φ̇ = f_e
//! M_a φ̈ + S_a φ̇ + K_a φ + C_a u̇ = f_a
//! ```
//!
//! The acoustic equation is scaled by `ρ_a`, which makes `C_a = -C_eᵀ`.

mod boundary;
mod csr;
mod loads;
mod stiffness;

pub use boundary::{assemble_absorbing, assemble_coupling, assemble_mass, face_nodes, FaceNode};
pub use csr::{CsrMatrix, LinearOperator};
pub use loads::{LoadAssembler, PointSource, ScalarField, SourceSpec, TimeFunction, VectorField};
pub use stiffness::{penalty_value, FaceKernel, StiffnessOperator, StiffnessParts};

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{FaceSets, HexMesh};
use crate::space::{DofSpace, MaterialTable};

/// Interior-penalty scaling `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub alpha: f64,
}

impl PenaltySpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!("penalty alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }
}

impl Default for PenaltySpec {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

/// `2ab / (a + b)`.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

#[derive(Debug)]
pub struct SystemOperators {
    pub elastic: Arc<DofSpace>,
    pub acoustic: Arc<DofSpace>,
    pub mass_e: Vec<f64>,
    pub mass_a: Vec<f64>,
    pub k_e: StiffnessOperator,
    pub k_a: StiffnessOperator,
    pub c_e: CsrMatrix,
    pub c_a: CsrMatrix,
    pub s_e: CsrMatrix,
    pub s_a: CsrMatrix,
}

impl SystemOperators {
    pub fn assemble(
        mesh: &HexMesh,
        faces: &FaceSets,
        elastic: Arc<DofSpace>,
        acoustic: Arc<DofSpace>,
        materials: &MaterialTable,
        penalty: PenaltySpec,
    ) -> Result<Self> {
        let mass_e = assemble_mass(&elastic, materials)?;
        let mass_a = assemble_mass(&acoustic, materials)?;
        let k_e = StiffnessOperator::elastic(
            mesh,
            faces,
            elastic.clone(),
            materials,
            penalty,
            StiffnessParts::default(),
        )?;
        let k_a = StiffnessOperator::acoustic(acoustic.clone(), materials)?;
        let (c_e, c_a) = assemble_coupling(mesh, faces, &elastic, &acoustic, materials)?;
        let (s_e, s_a) = assemble_absorbing(mesh, faces, &elastic, &acoustic, materials)?;
        Ok(Self {
            elastic,
            acoustic,
            mass_e,
            mass_a,
            k_e,
            k_a,
            c_e,
            c_a,
            s_e,
            s_a,
        })
    }

    /// Writes every operator as `row col value` text into `dir`.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let diag = |m: &[f64]| {
            CsrMatrix::from_triplets(m.len(), m.len(), m.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
        };
        let named = [
            ("M_e", diag(&self.mass_e)),
            ("M_a", diag(&self.mass_a)),
            ("K_e", self.k_e.to_csr()),
            ("K_a", self.k_a.to_csr()),
            ("C_e", self.c_e.clone()),
            ("C_a", self.c_a.clone()),
            ("S_e", self.s_e.clone()),
            ("S_a", self.s_a.clone()),
        ];
        for (name, m) in named {
            let path = dir.join(format!("{name}.txt"));
            let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            m.write_triplets(std::io::BufWriter::new(f))
                .map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
