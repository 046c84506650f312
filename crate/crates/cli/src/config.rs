//! Run configuration: everything that can change an output byte. Thread
//! count and output directory are deliberately absent.

use std::path::PathBuf;

use collabnet::epoch::{BaselineKind, EpochConfig};
use collabnet::fit::EvolutionConfig;
use collabnet::Year;
use serde::{Deserialize, Serialize};

use crate::ingest::Format;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub events: Option<PathBuf>,
    pub format: Option<Format>,
    pub population: Option<PathBuf>,
    pub epochs: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tau_project: u32,
    pub year_min: Option<Year>,
    pub year_max: Option<Year>,
    pub max_malformed_pct: f64,
    pub censor_window: u32,
    pub min_fit_size: usize,
    pub censoring: bool,
    pub net_of_tau: bool,
    pub xmin: u32,
    pub xmin_scan_max: Option<u32>,
    pub baseline: BaselineKind,
    pub baseline_window: u32,
    pub tolerance_pct: f64,
    pub size_cap: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        let evo = EvolutionConfig::default();
        let epoch = EpochConfig::default();
        Self {
            events: None,
            format: None,
            population: None,
            epochs: None,
            scenario: None,
            seed: None,
            tau_project: 2,
            year_min: None,
            year_max: None,
            max_malformed_pct: 1.0,
            censor_window: collabnet::timescale::DEFAULT_CENSOR_WINDOW,
            min_fit_size: evo.min_samples,
            censoring: evo.censoring,
            net_of_tau: evo.net_of_tau,
            xmin: evo.xmin,
            xmin_scan_max: evo.scan_xmin_max,
            baseline: epoch.kind,
            baseline_window: epoch.window,
            tolerance_pct: epoch.tolerance_pct,
            size_cap: collabnet::series::DEFAULT_SIZE_CAP,
        }
    }
}

impl RunConfig {
    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            min_samples: self.min_fit_size,
            xmin: self.xmin,
            scan_xmin_max: self.xmin_scan_max,
            censoring: self.censoring,
            net_of_tau: self.net_of_tau,
            ..EvolutionConfig::default()
        }
    }

    pub fn epoch(&self) -> EpochConfig {
        EpochConfig {
            window: self.baseline_window,
            kind: self.baseline,
            tolerance_pct: self.tolerance_pct,
        }
    }
}
