//! Flat TOML sweep configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::CaseId;
use crate::ansatz::Architecture;
use crate::experiments::ExperimentError;
use crate::solvers::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    /// Piecewise-linear elements on a mesh with `h = 1/n`; `lambda_h = lambda0 h^-sigma`.
    Fe,
    /// Networks with hidden width `n`; `lambda_n = lambda0 n^sigma`.
    Network,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// The analytic `u*` of the case.
    ClosedForm,
    /// A solve at twice the finest resolution with 16 times its penalty.
    Solve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub case: CaseId,
    pub ansatz: AnsatzKind,
    /// Mesh resolutions (fe) or hidden widths (network), strictly increasing.
    pub scales: Vec<usize>,
    pub sigma: f64,
    pub lambda0: f64,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub reference: ReferenceMode,
    /// Finest points used by the rate fit.
    pub fit_window: usize,
    /// Gauss points per direction on each cell.
    pub gauss_points: usize,
    /// Write measured wall times into the CSV (breaks byte-identical reruns).
    pub record_walltime: bool,
    pub hidden_layers: usize,
    pub activation: String,
    /// Quadrature mesh used to train and evaluate networks.
    pub mesh_resolution: usize,
    pub iters: usize,
    pub lr: f64,
    pub mc_samples: usize,
    pub log_every: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        SweepConfig {
            case: CaseId::SquareSine,
            ansatz: AnsatzKind::Fe,
            scales: vec![8, 16, 32, 64],
            sigma: 1.0,
            lambda0: 1.0,
            seeds: vec![0],
            output: PathBuf::from("sweep.csv"),
            reference: ReferenceMode::ClosedForm,
            fit_window: 4,
            gauss_points: 3,
            record_walltime: false,
            hidden_layers: 2,
            activation: "tanh".into(),
            mesh_resolution: 32,
            iters: t.iters,
            lr: t.lr,
            mc_samples: t.mc_samples,
            log_every: t.log_every,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::MissingConfig {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep config is plain data")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.scales.is_empty() {
            return bad("scales must not be empty".into());
        }
        if self.scales.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("scales must be strictly increasing, got {:?}", self.scales));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return bad(format!("lambda0 must be > 0, got {}", self.lambda0));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.gauss_points == 0 {
            return bad("gauss_points must be positive".into());
        }
        match self.ansatz {
            AnsatzKind::Fe => {
                if self.scales[0] < 2 {
                    return bad("mesh resolutions must be at least 2".into());
                }
            }
            AnsatzKind::Network => {
                self.architecture(self.scales[0])?;
                if self.mesh_resolution < 2 {
                    return bad("mesh_resolution must be at least 2".into());
                }
                if !(self.lr > 0.0) {
                    return bad(format!("lr must be positive, got {}", self.lr));
                }
            }
        }
        Ok(())
    }

    /// `lambda0 h^-sigma` with `h = 1/n` for elements, `lambda0 n^sigma` for networks.
    /// Both reduce to `lambda0 n^sigma`.
    pub fn lambda_for(&self, n: usize) -> f64 {
        self.lambda0 * (n as f64).powf(self.sigma)
    }

    /// The value written to the `scale` column: `h = 1/n` for elements, `n` for networks.
    pub fn scale_value(&self, n: usize) -> f64 {
        match self.ansatz {
            AnsatzKind::Fe => 1.0 / n as f64,
            AnsatzKind::Network => n as f64,
        }
    }

    pub fn architecture(&self, width: usize) -> Result<Architecture, ExperimentError> {
        let d = self.case.domain().dim();
        let mut text = d.to_string();
        for _ in 0..self.hidden_layers {
            text.push_str(&format!("-{width}"));
        }
        text.push_str(&format!("-1:{}", self.activation));
        text.parse::<Architecture>()
            .map_err(|e| ExperimentError::Config(format!("architecture {text}: {e}")))
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            iters: self.iters,
            lr: self.lr,
            seed,
            mc_samples: self.mc_samples,
            log_every: self.log_every,
            ..TrainConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_table_with_defaults() {
        let cfg = SweepConfig::from_toml(
            r#"
case = "square_sine"
ansatz = "fe"
scales = [8, 16, 32]
sigma = 0.5
output = "out/a.csv"
"#,
        )
        .unwrap();
        assert_eq!(cfg.sigma, 0.5);
        assert_eq!(cfg.lambda0, 1.0);
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.scale_value(16), 1.0 / 16.0);
        assert_eq!(cfg.lambda_for(16), 4.0);
        let again = SweepConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_invalid_grids_and_parameters() {
        for text in [
            "scales = [16, 8]",
            "scales = [8, 8]",
            "scales = []",
            "sigma = -1.0",
            "lambda0 = 0.0",
            "seeds = []",
            "case = \"nope\"",
            "unknown_key = 1",
            "ansatz = \"network\"\nactivation = \"sigmoid\"",
        ] {
            assert!(SweepConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn network_architecture_follows_case_dimension() {
        let cfg = SweepConfig::from_toml("case = \"interval_poisson\"\nansatz = \"network\"\nscales = [4, 8]").unwrap();
        assert_eq!(cfg.architecture(8).unwrap().to_string(), "1-8-8-1:tanh");
        assert_eq!(cfg.scale_value(8), 8.0);
    }

    #[test]
    fn missing_file_is_distinguished() {
        let err = SweepConfig::load(Path::new("/definitely/not/here.toml")).unwrap_err();
        assert!(matches!(err, ExperimentError::MissingConfig { .. }));
    }
}
