//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::MassKind;
use crate::holomorphic::RationalCurveMap;
use crate::mesh::{bumpy_conformal_factor, flat_torus, icosphere, load_mesh, parse_conformal_csv, TriangulatedSurface};
use crate::spectra::SolverOptions;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshGenerator {
    #[default]
    Icosphere,
    Torus,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub generator: MeshGenerator,
    pub level: u32,
    pub radius: f64,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub path: Option<PathBuf>,
    /// Per-vertex conformal factor overriding the generated one.
    pub conformal_csv: Option<PathBuf>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            generator: MeshGenerator::Icosphere,
            level: 5,
            radius: 0.5,
            nx: 100,
            ny: 100,
            lx: 1.0,
            ly: 1.0,
            path: None,
            conformal_csv: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConformalConfig {
    pub bumpy: bool,
    pub seed: u64,
    pub bandwidth: u32,
    pub amplitude: f64,
    /// Constant multiplier applied last.
    pub scale: f64,
}

impl Default for ConformalConfig {
    fn default() -> Self {
        Self {
            bumpy: false,
            seed: 0,
            bandwidth: 3,
            amplitude: 0.5,
            scale: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    #[default]
    Identity,
    Monomial,
    Veronese,
    Random,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub kind: MapKind,
    pub degree: usize,
    /// Target dimension of random maps.
    pub m: usize,
    pub seed: u64,
    pub path: Option<PathBuf>,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            kind: MapKind::Identity,
            degree: 1,
            m: 1,
            seed: 0,
            path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub block_size: usize,
    pub max_restarts: usize,
    pub mass: MassKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tol: d.tol,
            block_size: d.block_size,
            max_restarts: d.max_restarts,
            mass: MassKind::Consistent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub m_values: Vec<usize>,
    /// Samples per property and per `m`.
    pub samples: usize,
    pub flow_samples: usize,
    pub gradient_samples: usize,
    /// Samples per cutoff bound, split across `m_values`.
    pub cutoff_samples: usize,
    /// Lower bound asserted for `ψ` on `B_w(R)`.
    pub psi_lower: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            m_values: vec![1, 2, 3],
            samples: 2000,
            flow_samples: 10_000,
            gradient_samples: 1000,
            cutoff_samples: 60_000,
            psi_lower: crate::cutoff::PSI_LOWER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlyConfig {
    pub bumpy_cases: usize,
    pub round_lo: f64,
    pub round_hi: f64,
    pub ratio_max: f64,
}

impl Default for BlyConfig {
    fn default() -> Self {
        Self {
            bumpy_cases: 20,
            round_lo: 0.97,
            round_hi: 1.001,
            ratio_max: 1.001,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    pub quotient_tol: f64,
    pub residual_tol: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            quotient_tol: 0.01,
            residual_tol: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    /// Random cases; zero certifies the single configured mesh and map at every `k` in `k_values`.
    pub cases: usize,
    pub max_degree: usize,
    pub max_k: usize,
    /// First capture level as a multiple of `c_target`.
    pub capture_factor: f64,
    pub max_candidates: usize,
    pub inflate: bool,
    /// Bound on `∫|∇u_i|²/(4·pullback area)`.
    pub energy_fraction: f64,
    /// Bound on the cross-term slack relative to `max_i R(u_i)`.
    pub slack_fraction: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            cases: 0,
            max_degree: 5,
            max_k: 20,
            capture_factor: 1.5,
            max_candidates: 256,
            inflate: false,
            energy_fraction: 0.1,
            slack_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub cases: usize,
    pub max_degree: usize,
    pub max_k: usize,
    /// Relative tolerance for the round identity `k = 1` value `8π`.
    pub round_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            cases: 50,
            max_degree: 5,
            max_k: 20,
            round_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylConfig {
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for WeylConfig {
    fn default() -> Self {
        Self {
            count: 200,
            lo: 0.9,
            hi: 1.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Use the theoretical capture fraction in the headline constant.
    pub strict: bool,
    pub out: Option<PathBuf>,
    pub k_values: Vec<usize>,
    pub c_target: f64,
    pub mesh: MeshConfig,
    pub conformal: ConformalConfig,
    pub map: MapConfig,
    pub solver: SolverConfig,
    pub suite: SuiteConfig,
    pub bly: BlyConfig,
    pub eigen: EigenConfig,
    pub certify: CertifyConfig,
    pub sweep: SweepConfig,
    pub weyl: WeylConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            strict: false,
            out: None,
            k_values: vec![4],
            c_target: 0.01,
            mesh: MeshConfig::default(),
            conformal: ConformalConfig::default(),
            map: MapConfig::default(),
            solver: SolverConfig::default(),
            suite: SuiteConfig::default(),
            bly: BlyConfig::default(),
            eigen: EigenConfig::default(),
            certify: CertifyConfig::default(),
            sweep: SweepConfig::default(),
            weyl: WeylConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for path in [&self.mesh.path, &self.mesh.conformal_csv, &self.map.path].into_iter().flatten() {
            if !path.exists() {
                return bad(format!("file not found: {}", path.display()));
            }
        }
        if self.mesh.generator == MeshGenerator::File && self.mesh.path.is_none() {
            return bad("mesh.generator = \"file\" needs mesh.path".into());
        }
        if self.map.kind == MapKind::File && self.map.path.is_none() {
            return bad("map.kind = \"file\" needs map.path".into());
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return bad("k_values must be non-empty and every k ≥ 1".into());
        }
        if self.certify.max_k == 0 || self.sweep.max_k == 0 {
            return bad("max_k must be at least 1".into());
        }
        if !(self.c_target > 0.0 && self.c_target <= 1.0) {
            return bad(format!("c_target must lie in (0, 1], got {}", self.c_target));
        }
        let positive = [
            ("solver.tol", self.solver.tol),
            ("eigen.quotient_tol", self.eigen.quotient_tol),
            ("eigen.residual_tol", self.eigen.residual_tol),
            ("sweep.round_tol", self.sweep.round_tol),
            ("certify.capture_factor", self.certify.capture_factor),
            ("certify.energy_fraction", self.certify.energy_fraction),
            ("certify.slack_fraction", self.certify.slack_fraction),
            ("conformal.scale", self.conformal.scale),
            ("mesh.radius", self.mesh.radius),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return bad(format!("{name} must be positive, got {v}"));
        }
        if self.mesh.generator == MeshGenerator::Icosphere && !(1..=7).contains(&self.mesh.level) {
            return bad(format!("icosphere level must lie in 1..=7, got {}", self.mesh.level));
        }
        if self.solver.block_size == 0 || self.map.degree == 0 || self.map.m == 0 {
            return bad("solver.block_size, map.degree and map.m must be positive".into());
        }
        if self.suite.m_values.is_empty() || self.suite.m_values.contains(&0) {
            return bad("suite.m_values must be non-empty and positive".into());
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            block_size: self.solver.block_size,
            max_restarts: self.solver.max_restarts,
            seed: self.seed,
            ..SolverOptions::default()
        }
    }

    /// The mesh with its conformal factor applied.
    pub fn build_mesh(&self) -> Result<TriangulatedSurface> {
        let m = &self.mesh;
        let mut mesh = match m.generator {
            MeshGenerator::Icosphere => icosphere(m.level, m.radius)?,
            MeshGenerator::Torus => flat_torus(m.nx, m.ny, m.lx, m.ly)?,
            MeshGenerator::File => {
                let path = m.path.as_ref().ok_or_else(|| Error::Config("mesh.path missing".into()))?;
                let mesh = load_mesh(path)?;
                if mesh.genus() == 0 {
                    mesh.with_sphere_parametrization()?
                } else {
                    mesh
                }
            }
        };
        if let Some(path) = &m.conformal_csv {
            let factor = parse_conformal_csv(&std::fs::read_to_string(path)?, mesh.vertex_count())?;
            mesh = mesh.with_conformal_factor(factor)?;
        } else if self.conformal.bumpy {
            let c = &self.conformal;
            let factor = bumpy_conformal_factor(&mesh, c.seed, c.bandwidth, c.amplitude)?;
            mesh = mesh.with_conformal_factor(factor)?;
        }
        if self.conformal.scale != 1.0 {
            mesh = mesh.scale_conformal(self.conformal.scale)?;
        }
        Ok(mesh)
    }

    pub fn build_map(&self) -> Result<RationalCurveMap> {
        let c = &self.map;
        Ok(match c.kind {
            MapKind::Identity => RationalCurveMap::identity(),
            MapKind::Monomial => RationalCurveMap::monomial_power(c.degree),
            MapKind::Veronese => RationalCurveMap::veronese(c.degree),
            MapKind::Random => RationalCurveMap::random(c.m, c.degree, c.seed)?,
            MapKind::File => {
                let path = c.path.as_ref().ok_or_else(|| Error::Config("map.path missing".into()))?;
                RationalCurveMap::load(path)?
            }
        })
    }
}
