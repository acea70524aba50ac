//! Run configuration: JSON file with full CLI-flag override.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fphi_core::dpd::{Scheme, SolverConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub name: String,
    pub level: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub replicas: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Field snapshot cadence in steps (0 = auto).
    pub snapshot_cadence: usize,
    pub formats: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub space: SpaceConfig,
    pub solver: SolverConfig,
    pub ensemble: EnsembleConfig,
    pub outputs: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            space: SpaceConfig {
                name: "torus2d".into(),
                level: 4,
            },
            solver: SolverConfig::default(),
            ensemble: EnsembleConfig {
                replicas: 1,
                seed: 42,
            },
            outputs: OutputConfig {
                directory: PathBuf::from("out"),
                snapshot_cadence: 0,
                formats: vec!["csv".into(), "json".into()],
            },
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Flag overrides applied on top of the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Catalog space name.
    #[arg(long)]
    pub name: Option<String>,
    /// Refinement level.
    #[arg(long)]
    pub level: Option<u32>,
    /// Nonlinearity degree (odd).
    #[arg(long)]
    pub n: Option<u32>,
    /// Mollification scale.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Time horizon T.
    #[arg(long = "t")]
    pub t_horizon: Option<f64>,
    /// exponential_euler | picard
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise amplitude (0 = deterministic flow).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Output directory.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Snapshot cadence in steps.
    #[arg(long)]
    pub cadence: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> anyhow::Result<()> {
        if let Some(v) = &self.name {
            cfg.space.name = v.clone();
        }
        if let Some(v) = self.level {
            cfg.space.level = v;
        }
        if let Some(v) = self.n {
            cfg.solver.n = v;
        }
        if let Some(v) = self.epsilon {
            cfg.solver.epsilon = v;
        }
        if let Some(v) = self.dt {
            cfg.solver.dt = v;
        }
        if let Some(v) = self.t_horizon {
            cfg.solver.t_horizon = v;
        }
        if let Some(v) = &self.scheme {
            cfg.solver.scheme = match v.as_str() {
                "exponential_euler" => Scheme::ExponentialEuler,
                "picard" => Scheme::Picard,
                other => anyhow::bail!("unknown scheme {other:?} (exponential_euler | picard)"),
            };
        }
        if let Some(v) = self.replicas {
            cfg.ensemble.replicas = v;
        }
        if let Some(v) = self.seed {
            cfg.ensemble.seed = v;
        }
        if let Some(v) = self.noise {
            cfg.solver.noise_amplitude = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.outputs.directory = v.clone();
        }
        if let Some(v) = self.cadence {
            cfg.outputs.snapshot_cadence = v;
        }
        Ok(())
    }
}

/// FNV-1a over the canonical JSON of the config: the reproducibility key
/// recorded in every manifest.
pub fn config_hash(cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in json.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub config: &'a RunConfig,
}

pub fn manifest<'a>(cfg: &'a RunConfig) -> Manifest<'a> {
    Manifest {
        tool: "fphi",
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config_hash(cfg),
        seed: cfg.ensemble.seed,
        config: cfg,
    }
}
