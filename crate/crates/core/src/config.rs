//! Experiment configuration: a single JSON document per run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::elliptic::{ClassParameters, PotentialClassSpec};
use crate::error::{LabError, Result};
use crate::expr::Expr;
use crate::field::ScalarField;
use crate::geometry::{Domain, Grid};
use crate::reconstruction::ReconstructionOptions;
use crate::stability::{FamilyConfig, Regime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// reference potential `V̄`
    pub expression: String,
    pub v0: f64,
    pub v_upper: f64,
    pub k: f64,
    pub lipschitz: f64,
    pub kappa: f64,
    pub m_bound: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            expression: "2".into(),
            v0: 1.0,
            v_upper: 4.0,
            k: 0.5,
            lipschitz: 20.0,
            kappa: 0.25,
            m_bound: 100.0,
        }
    }
}

impl PotentialConfig {
    pub fn parameters(&self) -> ClassParameters {
        ClassParameters {
            v0: self.v0,
            v_upper: self.v_upper,
            k: self.k,
            lipschitz: self.lipschitz,
            kappa: self.kappa,
            m_bound: self.m_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyConfig {
    /// in-class solutions to sample
    pub samples: usize,
    pub centers: Vec<(f64, f64)>,
    /// the `δ` entering `δ0 = min(ρ0, ρ1, δ)`
    pub delta: f64,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        FrequencyConfig {
            samples: 5,
            centers: vec![(0.5, 0.5), (0.35, 0.35), (0.65, 0.35), (0.35, 0.65), (0.65, 0.65)],
            delta: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeBallConfig {
    /// samples in the fit
    pub samples: usize,
    /// further samples for the audit
    pub held_out: usize,
    pub balls_per_sample: usize,
    pub multipliers: (f64, f64, f64),
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for ThreeBallConfig {
    fn default() -> Self {
        ThreeBallConfig {
            samples: 10,
            held_out: 5,
            balls_per_sample: 4,
            multipliers: (1.0, 2.0, 3.0),
            r_min: 0.04,
            r_max: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpConfig {
    pub functions: usize,
    pub held_out: usize,
    pub alpha: f64,
    /// `ω = [x0, y0, x1, y1]`
    pub omega: [f64; 4],
    /// box holding the test-function centres
    pub region: [f64; 4],
    /// radius of the balls in the weight nondegeneracy check
    pub weight_radius: f64,
}

impl Default for InterpConfig {
    fn default() -> Self {
        InterpConfig {
            functions: 12,
            held_out: 4,
            alpha: 0.5,
            omega: [0.25, 0.25, 0.75, 0.75],
            region: [0.2, 0.2, 0.8, 0.8],
            weight_radius: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub delta: f64,
    /// node pairs sampled for the geodesic diameter estimate
    pub diameter_samples: usize,
    /// cone half-angle for the boundary ball sequence
    pub cone_half_angle: f64,
    pub cone_delta: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            start: (0.3125, 0.3125),
            end: (0.6875, 0.6875),
            delta: 0.1,
            diameter_samples: 64,
            cone_half_angle: std::f64::consts::FRAC_PI_6,
            cone_delta: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub levels: Vec<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { levels: vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub resolution: usize,
    pub potential: PotentialConfig,
    /// boundary data `h`
    pub boundary: String,
    /// stability regime; all four when absent
    pub regime: Option<Regime>,
    pub family: FamilyConfig,
    /// radius grid for the frequency audit; log-spaced below `δ0` when absent
    pub radii: Option<Vec<f64>>,
    pub frequency: FrequencyConfig,
    pub threeball: ThreeBallConfig,
    pub interp: InterpConfig,
    pub chain: ChainConfig,
    pub reconstruction: ReconstructionOptions,
    pub noise: Option<NoiseConfig>,
    /// directory of a previous forward run to reconstruct from
    pub data_dir: Option<PathBuf>,
    pub output: PathBuf,
    pub workers: Option<usize>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: Domain::UnitSquare,
            resolution: 65,
            potential: PotentialConfig::default(),
            boundary: "cos(x)*cos(y)".into(),
            regime: None,
            family: FamilyConfig::default(),
            radii: None,
            frequency: FrequencyConfig::default(),
            threeball: ThreeBallConfig::default(),
            interp: InterpConfig::default(),
            chain: ChainConfig::default(),
            reconstruction: ReconstructionOptions::default(),
            noise: None,
            data_dir: None,
            output: PathBuf::from("out"),
            workers: None,
            seed: 0,
        }
    }
}

fn check<T: DeserializeOwned>(v: &serde_json::Value, key: &str, errors: &mut Vec<String>) {
    if let Some(x) = v.get(key) {
        if let Err(e) = T::deserialize(x) {
            errors.push(format!("{key}: {e}"));
        }
    }
}

/// Every schema violation of a config document, one entry per field.
pub fn schema_errors(doc: &serde_json::Value) -> Vec<String> {
    let mut errors = Vec::new();
    let Some(obj) = doc.as_object() else {
        return vec!["config must be a JSON object".into()];
    };
    const KNOWN: [&str; 17] = [
        "domain",
        "resolution",
        "potential",
        "boundary",
        "regime",
        "family",
        "radii",
        "frequency",
        "threeball",
        "interp",
        "chain",
        "reconstruction",
        "noise",
        "data_dir",
        "output",
        "workers",
        "seed",
    ];
    for key in obj.keys().filter(|k| !KNOWN.contains(&k.as_str())) {
        errors.push(format!("{key}: unknown field"));
    }
    check::<Domain>(doc, "domain", &mut errors);
    check::<usize>(doc, "resolution", &mut errors);
    check::<PotentialConfig>(doc, "potential", &mut errors);
    check::<String>(doc, "boundary", &mut errors);
    check::<Option<Regime>>(doc, "regime", &mut errors);
    check::<FamilyConfig>(doc, "family", &mut errors);
    check::<Option<Vec<f64>>>(doc, "radii", &mut errors);
    check::<FrequencyConfig>(doc, "frequency", &mut errors);
    check::<ThreeBallConfig>(doc, "threeball", &mut errors);
    check::<InterpConfig>(doc, "interp", &mut errors);
    check::<ChainConfig>(doc, "chain", &mut errors);
    check::<ReconstructionOptions>(doc, "reconstruction", &mut errors);
    check::<Option<NoiseConfig>>(doc, "noise", &mut errors);
    check::<Option<PathBuf>>(doc, "data_dir", &mut errors);
    check::<PathBuf>(doc, "output", &mut errors);
    check::<Option<usize>>(doc, "workers", &mut errors);
    check::<u64>(doc, "seed", &mut errors);
    errors
}

impl ExperimentConfig {
    /// Parses and validates a config document, listing every violation.
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| LabError::Config(format!("invalid JSON: {e}")))?;
        let errors = schema_errors(&doc);
        if !errors.is_empty() {
            return Err(LabError::Config(errors.join("; ")));
        }
        let cfg: ExperimentConfig = serde_json::from_value(doc).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::MissingInput(format!("config {}: {e}", path.display())))?;
        ExperimentConfig::from_json(&text)
    }

    /// Semantic checks that need more than the schema.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if let Err(e) = self.domain.validate() {
            errors.push(format!("domain: {e}"));
        }
        if self.resolution < 9 {
            errors.push(format!("resolution: {} is below the minimum of 9", self.resolution));
        }
        if let Err(e) = self.potential.expression.parse::<Expr>() {
            errors.push(format!("potential.expression: {e}"));
        }
        if let Err(e) = self.boundary.parse::<Expr>() {
            errors.push(format!("boundary: {e}"));
        }
        if self.workers == Some(0) {
            errors.push("workers: must be positive".into());
        }
        if self.interp.held_out >= self.interp.functions {
            errors.push("interp.held_out: must be smaller than interp.functions".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(LabError::Config(errors.join("; ")))
        }
    }

    /// SHA-256 of the canonical JSON of every setting that affects results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = PathBuf::new();
        canonical.workers = None;
        canonical.data_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(self.domain.clone(), self.resolution)?))
    }

    pub fn field(&self, grid: &Arc<Grid>, source: &str) -> Result<ScalarField> {
        let e: Expr = source.parse()?;
        ScalarField::from_values(grid.clone(), ScalarField::from_fn(grid.clone(), |x, y| e.eval(x, y)).into_values())
    }

    pub fn spec(&self, grid: &Arc<Grid>) -> Result<PotentialClassSpec> {
        PotentialClassSpec::new(self.potential.parameters(), self.field(grid, &self.potential.expression)?)
    }

    pub fn boundary_field(&self, grid: &Arc<Grid>) -> Result<ScalarField> {
        self.field(grid, &self.boundary)
    }

    /// Family config with the run seed folded in.
    pub fn family_config(&self) -> FamilyConfig {
        FamilyConfig { seed: self.family.seed ^ self.seed, ..self.family.clone() }
    }
}
