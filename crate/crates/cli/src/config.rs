//! Run configuration: one TOML file, every key optional, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use slipplap::continuation::ContinuationSchedule;
use slipplap::grid::{
    mms_field, mms_forcing, read_vector_csv, BcVariant, Domain, FieldClass, SmoothFieldSampler, VectorField,
};
use slipplap::oracle::MinimizeOptions;
use slipplap::solver::{FixedPointOptions, SlipProblem};
use slipplap::stress::StressParams;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Right-hand side used by `solve`, `continuation` and `linsolve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ForcingKind {
    /// Forcing of the manufactured solution at the configured `p` and `mu`.
    #[default]
    Manufactured,
    Zero,
    /// Smooth random field drawn with the run seed.
    Random,
    /// Vector CSV dump on the configured grid.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingConfig {
    pub kind: ForcingKind,
    /// Amplitude of the manufactured solution, or multiplier of the random field.
    pub scale: f64,
    /// Frequencies per direction of the random field.
    pub frequencies: usize,
    pub file: Option<PathBuf>,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            kind: ForcingKind::Manufactured,
            scale: 1.0,
            frequencies: 3,
            file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    /// Estimate `C_q` and `C_hat` before a solve so the gate and radius are reported.
    pub estimate: bool,
    pub samples: usize,
    pub ascent_sweeps: usize,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            estimate: true,
            samples: 40,
            ascent_sweeps: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Interior nodes per side.
    pub grid: usize,
    pub lx: f64,
    pub ly: f64,
    pub p: f64,
    pub mu: f64,
    pub q: f64,
    pub bc: BcVariant,
    pub seed: u64,
    pub out: PathBuf,
    /// Grids of the manufactured-solution study.
    pub mms_grids: Vec<usize>,
    /// Grids of the identity battery.
    pub identity_grids: Vec<usize>,
    pub forcing: ForcingConfig,
    pub constants: ConstantsConfig,
    pub solver: FixedPointOptions,
    pub schedule: ContinuationSchedule,
    pub minimizer: MinimizeOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: 32,
            lx: 1.0,
            ly: 0.7,
            p: 1.9,
            mu: 1.0,
            q: 4.0,
            bc: BcVariant::NavierStress,
            seed: 0,
            out: PathBuf::from("out"),
            mms_grids: vec![16, 32, 64],
            identity_grids: vec![16, 32, 64, 128],
            forcing: ForcingConfig::default(),
            constants: ConstantsConfig::default(),
            solver: FixedPointOptions::default(),
            schedule: ContinuationSchedule::default(),
            minimizer: MinimizeOptions::default(),
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub p: Option<f64>,
    pub mu: Option<f64>,
    pub q: Option<f64>,
    pub bc: Option<BcVariant>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String, String> {
        toml::to_string(self).map_err(|e| e.to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.grid {
            self.grid = v;
        }
        if let Some(v) = o.p {
            self.p = v;
        }
        if let Some(v) = o.mu {
            self.mu = v;
        }
        if let Some(v) = o.q {
            self.q = v;
        }
        if let Some(v) = o.bc {
            self.bc = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.grid < 3 {
            return Err(format!("grid must be at least 3, got {}", self.grid));
        }
        if !(self.lx > 0.0 && self.ly > 0.0) {
            return Err(format!("side lengths must be positive, got {} x {}", self.lx, self.ly));
        }
        StressParams::new(self.p, self.mu).map_err(|e| e.to_string())?;
        if !(self.q > 1.0) {
            return Err(format!("q must exceed 1, got {}", self.q));
        }
        if self.mms_grids.len() < 2 || self.mms_grids.iter().any(|&n| n < 3) {
            return Err("mms_grids needs at least two sizes, each at least 3".into());
        }
        if self.identity_grids.len() < 3 || self.identity_grids.iter().any(|&n| n < 4) {
            return Err("identity_grids needs at least three sizes, each at least 4".into());
        }
        if self.forcing.kind == ForcingKind::File && self.forcing.file.is_none() {
            return Err("forcing.kind = \"file\" needs forcing.file".into());
        }
        if self.forcing.frequencies == 0 {
            return Err("forcing.frequencies must be positive".into());
        }
        self.schedule.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn domain(&self) -> slipplap::Result<Domain> {
        self.domain_at(self.grid)
    }

    pub fn domain_at(&self, n: usize) -> slipplap::Result<Domain> {
        Domain::new(self.lx, self.ly, n, n)
    }

    pub fn params(&self) -> slipplap::Result<StressParams> {
        StressParams::new(self.p, self.mu)
    }

    /// Forcing on `dom`. The manufactured forcing is built at `mu_forcing`.
    pub fn forcing_on(&self, dom: &Domain, mu_forcing: f64) -> slipplap::Result<VectorField> {
        let fc = &self.forcing;
        match fc.kind {
            ForcingKind::Manufactured => mms_forcing(dom, self.p, mu_forcing, fc.scale),
            ForcingKind::Zero => Ok(VectorField::zeros(dom)),
            ForcingKind::Random => {
                let sampler = SmoothFieldSampler::new(FieldClass::General, fc.frequencies);
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let c = sampler.coefficients(&mut rng);
                Ok(sampler.eval(dom, &c).scaled(fc.scale))
            }
            ForcingKind::File => {
                let path = fc.file.as_deref().expect("validated");
                read_vector_csv(path, dom)
            }
        }
    }

    /// Exact solution when the forcing is manufactured.
    pub fn exact_on(&self, dom: &Domain) -> Option<VectorField> {
        match self.forcing.kind {
            ForcingKind::Manufactured => Some(mms_field(dom, self.forcing.scale)),
            ForcingKind::Zero => Some(VectorField::zeros(dom)),
            _ => None,
        }
    }

    pub fn problem(&self) -> slipplap::Result<SlipProblem> {
        let dom = self.domain()?;
        let f = self.forcing_on(&dom, self.mu)?;
        SlipProblem::new(dom, self.params()?, self.q, f, self.bc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg = RunConfig::from_toml("p = 1.8\n[solver]\ntol = 1e-8\n[schedule]\nsteps = 3\n").unwrap();
        assert_eq!(cfg.p, 1.8);
        assert_eq!(cfg.solver.tol, 1e-8);
        assert_eq!(cfg.solver.max_iter, FixedPointOptions::default().max_iter);
        assert_eq!(cfg.schedule.steps, 3);
        assert_eq!(cfg.grid, 32);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("gird = 3\n").is_err());
        assert!(RunConfig::from_toml("[solver]\ntoll = 1e-8\n").is_err());
        assert!(RunConfig::from_toml("[forcing]\nkind = \"sine\"\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_toml("p = 2.5\n").is_err());
        assert!(RunConfig::from_toml("mu = -1.0\n").is_err());
        assert!(RunConfig::from_toml("q = 1.0\n").is_err());
        assert!(RunConfig::from_toml("grid = 2\n").is_err());
        assert!(RunConfig::from_toml("[forcing]\nkind = \"file\"\n").is_err());
        assert!(RunConfig::from_toml("[schedule]\nfactor = 1.5\n").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            grid: Some(8),
            mu: Some(0.5),
            bc: Some(BcVariant::BardosVorticity),
            ..Overrides::default()
        });
        assert_eq!(cfg.grid, 8);
        assert_eq!(cfg.mu, 0.5);
        assert_eq!(cfg.bc, BcVariant::BardosVorticity);
        assert_eq!(cfg.p, 1.9);
    }

    #[test]
    fn tweaked_config_round_trips() {
        let mut cfg =
            RunConfig::from_toml("bc = \"bardos\"\nseed = 7\n[forcing]\nkind = \"random\"\nscale = 0.5\n").unwrap();
        cfg.solver.force_theta = Some(0.7);
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
