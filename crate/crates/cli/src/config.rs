use std::path::{Path, PathBuf};

use hgcl::encoders::Variant;
use hgcl::evaluation::{BetaPolicy, ProbeConfig};
use hgcl::graph::{load_dataset, load_geom_gcn, DatasetBundle, DatasetPaths};
use hgcl::noise::AnalysisConfig;
use hgcl::robustness::default_rates;
use hgcl::synth::{generate_csbm, CsbmConfig};
use hgcl::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Where the dataset comes from. Exactly one source per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Explicit file paths.
    Files(DatasetPaths),
    /// A directory with `edges.txt`, `features.csv`, `labels.txt`, `splits.json`.
    Dir(PathBuf),
    /// A directory in Geom-GCN layout.
    GeomGcn(PathBuf),
    Synthetic(CsbmConfig),
}

impl DatasetSource {
    pub fn load(&self) -> Result<DatasetBundle, Failure> {
        let bundle = match self {
            DatasetSource::Files(paths) => load_dataset(paths)?,
            DatasetSource::Dir(dir) => load_dataset(&DatasetPaths::in_dir(dir))?,
            DatasetSource::GeomGcn(dir) => load_geom_gcn(dir)?,
            DatasetSource::Synthetic(cfg) => generate_csbm(cfg)?,
        };
        Ok(bundle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSettings {
    pub rates: Vec<f64>,
    pub variants: Vec<Variant>,
}

impl Default for AttackSettings {
    fn default() -> Self {
        Self {
            rates: default_rates(),
            variants: Variant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub hidden_dims: Vec<usize>,
    pub gcn_layers: Vec<usize>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            hidden_dims: vec![64, 128, 256, 512],
            gcn_layers: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub beta: BetaPolicy,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Variants run by `ablate`.
    #[serde(default = "all_variants")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub attack: AttackSettings,
    #[serde(default)]
    pub sweep: SweepSettings,
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn all_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        self.train.validate()?;
        self.probe.validate()?;
        if self.seeds.is_empty() {
            return Err(Failure::config("seeds must not be empty"));
        }
        let grid = self.beta.grid();
        if grid.is_empty() || grid.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Failure::config(format!("beta values {grid:?} must be non-empty and within [0, 1]")));
        }
        if self.attack.rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Failure::config("attack rates must be non-negative"));
        }
        Ok(())
    }

    /// The output directory, created if needed and checked for writability.
    pub fn output_dir(&self, flag: Option<&Path>) -> Result<PathBuf, Failure> {
        let dir = flag
            .map(Path::to_path_buf)
            .or_else(|| self.out.clone())
            .ok_or_else(|| Failure::config("no output directory: set \"out\" or pass --out"))?;
        std::fs::create_dir_all(&dir)
            .map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        let probe = dir.join(".hgcl-write-test");
        std::fs::write(&probe, b"")
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| Failure::config(format!("{} is not writable: {e}", dir.display())))?;
        Ok(dir)
    }
}
