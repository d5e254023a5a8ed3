//! Subject profiles, maps and per-session decoder models available to the
//! gateway.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use chair_core::experiment::{derive_seed, run_calibration, CohortConfig, DEFAULT_SNR_DB, DEFAULT_SUBJECTS};
use chair_core::sim::WorldMap;
use chair_core::svm::{train_model, Hyperparams, SsvepClass, TrainedModel};
use chair_core::synth::{ProfileSet, SubjectProfile};
use chair_core::Execution;

use crate::config::GatewayConfig;
use crate::error::{GatewayError, Result};

/// SSVEP 6 dB above the background; decodes reliably.
pub const DEMO_PROFILE: &str = "demo";
/// No SSVEP response at all; blinks still work.
pub const NO_SSVEP_PROFILE: &str = "no-ssvep";

/// Fixed hyperparameters for session models. Hyperparameter search belongs
/// to the offline harness; a live session only needs a working model fast.
pub const SESSION_HYPER: Hyperparams = Hyperparams { c: 10.0, gamma: 0.05 };

const TAG_CALIBRATION: u64 = 0x6361_6c69;

pub struct Catalog {
    profiles: BTreeMap<String, SubjectProfile>,
    maps: BTreeMap<String, WorldMap>,
    models: Mutex<HashMap<(String, u64), Arc<TrainedModel>>>,
}

impl Catalog {
    /// `demo`, `no-ssvep` and the default cohort `S01`..`S12` at seed 0;
    /// maps `home` and `open`.
    pub fn builtin() -> Self {
        let mut profiles = BTreeMap::new();
        profiles.insert(DEMO_PROFILE.to_string(), SubjectProfile::new(DEMO_PROFILE, 20.0, 10.0, 0));
        profiles.insert(NO_SSVEP_PROFILE.to_string(), SubjectProfile::new(NO_SSVEP_PROFILE, 0.0, 10.0, 0));
        for p in CohortConfig::new(DEFAULT_SUBJECTS, 0, DEFAULT_SNR_DB.0, DEFAULT_SNR_DB.1).profiles() {
            profiles.insert(p.id.clone(), p);
        }
        let maps = ["home", "open"]
            .into_iter()
            .map(|id| (id.to_string(), WorldMap::builtin(id).expect("built-in map exists")))
            .collect();
        Self { profiles, maps, models: Mutex::new(HashMap::new()) }
    }

    /// Built-ins plus the profile file and map files named in `config`;
    /// entries from files replace built-ins with the same id.
    pub fn from_config(config: &GatewayConfig) -> Result<Self> {
        let mut cat = Self::builtin();
        if let Some(path) = &config.profiles {
            for (id, p) in ProfileSet::load(path)?.profiles {
                cat.profiles.insert(id, p);
            }
        }
        for (id, path) in &config.maps {
            cat.maps.insert(id.clone(), WorldMap::load(path)?);
        }
        Ok(cat)
    }

    pub fn profile(&self, id: &str) -> Result<&SubjectProfile> {
        self.profiles.get(id).ok_or_else(|| GatewayError::UnknownProfile(id.to_string()))
    }

    pub fn map(&self, id: &str) -> Result<&WorldMap> {
        self.maps.get(id).ok_or_else(|| GatewayError::UnknownMap(id.to_string()))
    }

    pub fn profile_ids(&self) -> Vec<String> {
        self.profiles.keys().cloned().collect()
    }

    pub fn map_ids(&self) -> Vec<String> {
        self.maps.keys().cloned().collect()
    }

    /// Model calibrated on a synthetic session of `profile_id`, cached per
    /// (profile, seed).
    pub fn model(&self, profile_id: &str, seed: u64) -> Result<Arc<TrainedModel>> {
        let key = (profile_id.to_string(), seed);
        if let Some(m) = self.models.lock().expect("model cache").get(&key) {
            return Ok(m.clone());
        }
        let profile = self.profile(profile_id)?;
        let calib_seed = derive_seed(seed, &[TAG_CALIBRATION]);
        let data = run_calibration(&profile.with_seed(calib_seed), calib_seed, Execution::default())?;
        let x: Vec<&[f64]> = data.samples().iter().map(|s| s.features.as_slice()).collect();
        let y: Vec<SsvepClass> = data.samples().iter().map(|s| s.label).collect();
        let model = Arc::new(train_model(&x, &y, SESSION_HYPER)?);
        self.models.lock().expect("model cache").insert(key, model.clone());
        Ok(model)
    }
}
