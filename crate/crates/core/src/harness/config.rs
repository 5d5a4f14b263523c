//! Experiment configuration read from TOML.
//!
//! ```toml
//! [model]
//! nu = 1.0
//! T = 0.5
//! L = 1.0
//! u0 = "shear"
//! forcing = "zero"
//!
//! [noise]
//! family = "affine"
//! sigma0 = 0.5
//! sigma1 = 0.5
//! c = 0.0
//!
//! [discretization]
//! scheme = "standard"
//! M_list = [16, 32, 64, 128]
//! n_list = [8, 16, 32]
//! M_ref = 4096
//! N_modes = 32
//!
//! [experiment]
//! samples = 200
//! q_list = [2, 4, 8]
//! gamma1 = 0.25
//! checkpoints = []
//! ```
//!
//! Every key is optional and defaults to the value above. Unknown keys are
//! rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Forcing, InitialData, Model, SchemeKind};
use crate::noise::{NoiseFamily, NoiseModel};

/// Acceptance bands checked by the studies. `[lo, hi]` pairs are inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Fitted temporal velocity slope for `q = 2`.
    pub velocity_slope: [f64; 2],
    /// Fitted temporal velocity slope for the other moment orders.
    pub moment_slope: [f64; 2],
    /// Fitted temporal slope of the time-averaged pressure; unchecked when
    /// absent.
    pub pressure_slope: Option<[f64; 2]>,
    pub min_r2: f64,
    /// Lower bound on spatial slopes (velocity, P and R).
    pub spatial_slope_min: f64,
    /// Lower bound on the standard scheme's `err(k/4)/err(k)`.
    pub standard_ratio_min: f64,
    /// Band for the modified scheme's `err(k/4)/err(k)`.
    pub modified_ratio: [f64; 2],
    /// Largest allowed `max/min - 1` of a stability functional over a ladder.
    pub stability_variation: f64,
    /// Largest allowed ratio of the 95th percentiles of `K̂` over a ladder.
    pub quantile_stability: f64,
    pub max_flagged_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            velocity_slope: [0.35, 0.60],
            moment_slope: [0.30, 0.65],
            pressure_slope: None,
            min_r2: 0.95,
            spatial_slope_min: 0.75,
            standard_ratio_min: 1.5,
            modified_ratio: [0.5, 1.2],
            stability_variation: 0.10,
            quantile_stability: 2.0,
            max_flagged_fraction: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub scheme: SchemeKind,
    pub m_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub m_ref: usize,
    pub n_modes: usize,
    pub samples: usize,
    pub q_list: Vec<f64>,
    pub gamma1: f64,
    pub checkpoints: Vec<usize>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    noise: RawNoise,
    #[serde(default)]
    discretization: RawDiscretization,
    #[serde(default)]
    experiment: RawExperiment,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawModel {
    nu: f64,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "L")]
    l: f64,
    u0: String,
    forcing: String,
}

impl Default for RawModel {
    fn default() -> Self {
        Self {
            nu: 1.0,
            t: 0.5,
            l: 1.0,
            u0: "shear".into(),
            forcing: "zero".into(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawNoise {
    family: NoiseFamily,
    sigma0: f64,
    sigma1: f64,
    c: f64,
}

impl Default for RawNoise {
    fn default() -> Self {
        Self {
            family: NoiseFamily::Affine,
            sigma0: 0.5,
            sigma1: 0.5,
            c: 0.0,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDiscretization {
    scheme: SchemeKind,
    #[serde(rename = "M_list")]
    m_list: Vec<usize>,
    n_list: Vec<usize>,
    #[serde(rename = "M_ref")]
    m_ref: usize,
    #[serde(rename = "N_modes")]
    n_modes: usize,
}

impl Default for RawDiscretization {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Standard,
            m_list: vec![16, 32, 64, 128],
            n_list: vec![8, 16, 32],
            m_ref: 4096,
            n_modes: 32,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawExperiment {
    samples: usize,
    q_list: Vec<f64>,
    gamma1: f64,
    checkpoints: Vec<usize>,
    seed: u64,
    tolerances: Tolerances,
}

impl Default for RawExperiment {
    fn default() -> Self {
        Self {
            samples: 200,
            q_list: vec![2.0, 4.0, 8.0],
            gamma1: 0.25,
            checkpoints: Vec::new(),
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        RawConfig::default().build().expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.build()
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.samples < 2 {
            return bad(format!("samples must be at least 2, got {}", self.samples));
        }
        if !self.m_ref.is_power_of_two() {
            return bad(format!("M_ref must be a power of two, got {}", self.m_ref));
        }
        if let Some(m) = self.m_list.iter().find(|&&m| m == 0 || self.m_ref % m != 0) {
            return bad(format!("M = {m} does not divide M_ref = {}", self.m_ref));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 2) {
            return bad(format!("mesh size n = {n} is below 2"));
        }
        if self.n_modes < 4 || self.n_modes % 2 != 0 {
            return bad(format!("N_modes must be even and at least 4, got {}", self.n_modes));
        }
        if self.q_list.is_empty() {
            return bad("q_list is empty".into());
        }
        if let Some(q) = self.q_list.iter().find(|q| !(**q >= 2.0 && q.is_finite())) {
            return bad(format!("moment order q = {q} is below 2"));
        }
        if !(self.gamma1 > 0.0 && self.gamma1.is_finite()) {
            return bad(format!("gamma1 must be positive, got {}", self.gamma1));
        }
        Ok(())
    }
}

impl RawConfig {
    fn build(self) -> Result<ExperimentConfig> {
        let m = self.model;
        let n = self.noise;
        let d = self.discretization;
        let e = self.experiment;
        let cfg = ExperimentConfig {
            model: Model {
                nu: m.nu,
                t: m.t,
                l: m.l,
                u0: InitialData::parse(&m.u0)?,
                forcing: Forcing::parse(&m.forcing)?,
                noise: NoiseModel {
                    family: n.family,
                    sigma0: n.sigma0,
                    sigma1: n.sigma1,
                    c: n.c,
                },
            },
            scheme: d.scheme,
            m_list: d.m_list,
            n_list: d.n_list,
            m_ref: d.m_ref,
            n_modes: d.n_modes,
            samples: e.samples,
            q_list: e.q_list,
            gamma1: e.gamma1,
            checkpoints: e.checkpoints,
            seed: e.seed,
            tolerances: e.tolerances,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.m_list, vec![16, 32, 64, 128]);
        assert_eq!(cfg.model.u0, InitialData::Shear { amplitude: 1.0 });
    }

    #[test]
    fn sections_are_read() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            [model]
            nu = 0.5
            T = 1.0
            u0 = "taylor-green:2"
            [noise]
            family = "gradient-augmented"
            c = 1.5
            [discretization]
            scheme = "modified"
            M_list = [8, 16]
            M_ref = 64
            [experiment]
            samples = 10
            q_list = [2, 3.5]
            [experiment.tolerances]
            min_r2 = 0.9
            pressure_slope = [0.3, 0.7]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.model.nu, 0.5);
        assert_eq!(cfg.model.noise.family, NoiseFamily::GradientAugmented);
        assert_eq!(cfg.model.noise.c, 1.5);
        assert_eq!(cfg.scheme, SchemeKind::Modified);
        assert_eq!(cfg.q_list, vec![2.0, 3.5]);
        assert_eq!(cfg.tolerances.min_r2, 0.9);
        assert_eq!(cfg.tolerances.pressure_slope, Some([0.3, 0.7]));
        assert_eq!(cfg.tolerances.spatial_slope_min, 0.75);
    }

    #[test]
    fn unknown_keys_are_errors() {
        for text in [
            "[model]\nviscosity = 1.0",
            "[solver]\nx = 1",
            "[experiment.tolerances]\nslope = 1.0",
            "[noise]\nfamily = \"white\"",
        ] {
            assert!(matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn invariants_are_enforced() {
        for text in [
            "[discretization]\nM_list = [3]\nM_ref = 64",
            "[discretization]\nM_list = [4]\nM_ref = 96",
            "[experiment]\nsamples = 1",
            "[experiment]\nq_list = [1.5]",
            "[experiment]\ngamma1 = 0.0",
            "[discretization]\nN_modes = 7",
            "[model]\nnu = -1.0",
            "[model]\nu0 = \"vortex\"",
        ] {
            assert!(matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config(_))), "{text}");
        }
    }
}
