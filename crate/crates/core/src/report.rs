//! JSON run reports.
//!
//! Struct fields serialize in declaration order and every map is a
//! `BTreeMap`, so a report's bytes depend only on its contents. Sections
//! that were not computed are left out instead of being written as `null`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exposure::ExposureProfile;
use crate::graph::{BuildReport, FilterReport};
use crate::io::write_atomic;
use crate::matrix::ExposureMatrix;
use crate::stats::{Correlation, LorenzCurve, PowerLawFit, RegressionResult};

/// An input file as it was read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Settings that determine the results of a run. Worker count and output
/// directory are left out on purpose: they must not change any output byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub direction: String,
    pub min_firms: usize,
    pub excluded_regions: Vec<String>,
    pub format: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessingSummary {
    pub build: BuildReport,
    pub filter: FilterReport,
    pub firms: usize,
    pub links: usize,
    pub regions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupExposure {
    /// Region label to income group label.
    pub groups: BTreeMap<String, String>,
    /// `E^gh` keyed by direction label.
    pub matrices: BTreeMap<String, ExposureMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub config: ConfigEcho,
    pub inputs: BTreeMap<String, InputFile>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preprocessing: Option<PreprocessingSummary>,
    /// File name to SHA-256 of every other file written by the run.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exposure_profile: Option<ExposureProfile>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub lorenz: BTreeMap<String, LorenzCurve>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub gini: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub group_exposure: Option<GroupExposure>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub correlations: BTreeMap<String, Correlation>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub fits: BTreeMap<String, PowerLawFit>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub regressions: BTreeMap<String, RegressionResult>,
    /// Statistics that could not be computed and why.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str, config: ConfigEcho, inputs: BTreeMap<String, InputFile>) -> Self {
        Report {
            version: crate::VERSION.to_string(),
            command: command.to_string(),
            config,
            inputs,
            preprocessing: None,
            outputs: BTreeMap::new(),
            exposure_profile: None,
            lorenz: BTreeMap::new(),
            gini: BTreeMap::new(),
            group_exposure: None,
            correlations: BTreeMap::new(),
            fits: BTreeMap::new(),
            regressions: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Report> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One cascade as seen from a single failing firm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSummary {
    pub steps: usize,
    pub debt_rank: f64,
    pub affected: usize,
    /// Firm id to distress, for every firm with positive distress.
    pub distress: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub version: String,
    pub config: ConfigEcho,
    pub inputs: BTreeMap<String, InputFile>,
    pub firm: String,
    /// Keyed by direction label.
    pub cascades: BTreeMap<String, CascadeSummary>,
}

impl CascadeReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn write_report(report: &Report, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, report.to_json()?.as_bytes())
}
