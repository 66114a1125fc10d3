//! Scenario configuration files (JSON) and calibrated-threshold records.
//!
//! A scenario file is a JSON object mirroring [`Scenario`]; every field may
//! be omitted and falls back to the stock protocol (`dim = 8`,
//! `n_train = 11`, `p = 0.75`, `pfa = 1e-2`, and so on). Unknown keys are
//! rejected so typos cannot silently configure nothing.
//!
//! Each scenario has a canonical content hash: the SHA-256 digest of its
//! JSON serialization with every default materialized. Calibration records
//! carry that hash, and the simulation command refuses a threshold whose
//! hash does not match its scenario, so a threshold can never be applied to
//! data it was not calibrated for.

use ellcov::detect::{default_steering, Contamination};
use ellcov::{Complex64, DetectorKind, EstimatorKind, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// JSON mirror of [`Scenario`]; omitted fields take the stock defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    /// Data dimension.
    pub dim: usize,
    /// Samples per training batch.
    pub n_train: usize,
    /// Blend weight between prior and data.
    pub alpha: f64,
    /// Fraction of samples the outlier-rejecting estimators keep.
    pub p: f64,
    /// Estimator driving the sequential streams.
    pub estimator: EstimatorKind,
    /// Detection statistic.
    pub detector: DetectorKind,
    /// Steering vector as `2 dim` alternating real and imaginary parts;
    /// `null` (or omitted) means the unit-norm flat vector.
    pub steering: Option<Vec<f64>>,
    /// Signal-to-noise grid in dB.
    pub sinr_grid_db: Vec<f64>,
    /// Target false-alarm probability.
    pub pfa: f64,
    /// Target-free trials for threshold calibration.
    pub n_trials_pfa: usize,
    /// Target-bearing trials per grid point.
    pub n_trials_pd: usize,
    /// Sequential updates before a stream's estimate is used.
    pub burn_in: usize,
    /// Number of independent streams.
    pub n_states: usize,
    /// Optional training-data contamination model.
    pub contamination: Option<Contamination>,
    /// Master seed every draw derives from.
    pub master_seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        let stock = Scenario::new(8, 11);
        ScenarioSpec {
            dim: stock.dim,
            n_train: stock.n_train,
            alpha: stock.alpha,
            p: stock.p,
            estimator: stock.estimator,
            detector: stock.detector,
            steering: None,
            sinr_grid_db: stock.sinr_grid_db,
            pfa: stock.pfa,
            n_trials_pfa: stock.n_trials_pfa,
            n_trials_pd: stock.n_trials_pd,
            burn_in: stock.burn_in,
            n_states: stock.n_states,
            contamination: stock.contamination,
            master_seed: stock.master_seed,
        }
    }
}

impl ScenarioSpec {
    /// Parse a scenario file, rejecting unknown keys.
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Convert to a validated runtime [`Scenario`].
    pub fn to_scenario(&self) -> Result<Scenario, String> {
        let steering = match &self.steering {
            None => default_steering(self.dim),
            Some(v) => {
                if v.len() != 2 * self.dim {
                    return Err(format!(
                        "steering must hold {} values (alternating real and imaginary \
                         parts for dimension {}), found {}",
                        2 * self.dim,
                        self.dim,
                        v.len()
                    ));
                }
                v.chunks_exact(2)
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect()
            }
        };
        let mut sc = Scenario::new(self.dim, self.n_train);
        sc.alpha = self.alpha;
        sc.p = self.p;
        sc.estimator = self.estimator;
        sc.detector = self.detector;
        sc.steering = steering;
        sc.sinr_grid_db = self.sinr_grid_db.clone();
        sc.pfa = self.pfa;
        sc.n_trials_pfa = self.n_trials_pfa;
        sc.n_trials_pd = self.n_trials_pd;
        sc.burn_in = self.burn_in;
        sc.n_states = self.n_states;
        sc.contamination = self.contamination;
        sc.master_seed = self.master_seed;
        sc.validate().map_err(|e| e.to_string())?;
        Ok(sc)
    }

    /// Canonical JSON form: every default materialized, including the
    /// resolved steering vector, in fixed field order.
    ///
    /// Only valid scenarios are canonicalized (JSON cannot carry non-finite
    /// numbers, so serialization cannot fail).
    pub fn canonical_json(&self) -> String {
        let mut resolved = self.clone();
        if resolved.steering.is_none() {
            resolved.steering = Some(
                default_steering(self.dim)
                    .iter()
                    .flat_map(|z| [z.re, z.im])
                    .collect(),
            );
        }
        serde_json::to_string(&resolved).expect("scenario fields always serialize")
    }

    /// Content hash of the canonical form, as lowercase hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Output of the calibration command: the threshold, the trial budget and
/// seed that produced it, and the hash of the scenario it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRecord {
    /// Canonical hash of the calibrated scenario.
    pub scenario_hash: String,
    /// False-alarm probability the threshold targets.
    pub pfa: f64,
    /// Target-free trials used for calibration.
    pub trials: usize,
    /// Master seed the calibration draws derived from.
    pub seed: u64,
    /// Calibrated detection threshold.
    pub threshold: f64,
}

impl ThresholdRecord {
    /// Parse a threshold record.
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Serialize as a single JSON line.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("record fields always serialize");
        s.push('\n');
        s
    }
}
