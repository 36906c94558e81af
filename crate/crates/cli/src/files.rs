//! Versioned JSON file formats written and read by the commands.

use std::path::Path;

use qoc_core::kpi::{FccCompliance, WindowProfile};
use qoc_core::spatial::{KpiSketches, RegionProfile};
use qoc_core::synth::{ScenarioParams, ScenarioSpec};
use qoc_core::{KpiMeans, LayoutMode, ScenarioKind, UsabilityConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// Output of `kpi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub format_version: u32,
    pub metric: String,
    pub config: UsabilityConfig,
    pub series: Vec<SeriesProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesProfile {
    pub cell_id: String,
    pub interval_ms: u64,
    pub windows: Vec<WindowRow>,
    pub skipped_windows: Vec<i64>,
    /// Mean of the per-window KPIs.
    pub summary: KpiMeans,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fcc: Option<FccCompliance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub start_ms: i64,
    pub end_ms: i64,
    pub sample_count: usize,
    pub zero_median_runs: usize,
    #[serde(flatten)]
    pub kpis: KpiMeans,
}

impl From<&WindowProfile> for WindowRow {
    fn from(w: &WindowProfile) -> Self {
        Self {
            start_ms: w.start_ms,
            end_ms: w.end_ms,
            sample_count: w.sample_count,
            zero_median_runs: w.zero_median_runs,
            kpis: w.profile.into(),
        }
    }
}

/// Sidecar of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub format_version: u32,
    pub spec: ScenarioSpec,
    pub params: ScenarioParams,
    pub series: Vec<SimulatedSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedSeries {
    pub id: String,
    pub cell: u32,
    pub run: u32,
    pub seed: u64,
    pub realized: BTreeMap<String, f64>,
}

/// Output of `layout`; `aggregate` and `sensitivity spatial` read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<LayoutMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<u32>,
    pub cells: Vec<LayoutCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutCell {
    pub region: String,
    pub series_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child_index: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<u32>,
}

impl LayoutFile {
    /// Region of every series id.
    pub fn region_of(&self) -> Result<BTreeMap<&str, &str>, CliError> {
        let mut map = BTreeMap::new();
        for c in &self.cells {
            if map
                .insert(c.series_id.as_str(), c.region.as_str())
                .is_some()
            {
                return Err(CliError::Data(format!(
                    "layout lists '{}' twice",
                    c.series_id
                )));
            }
        }
        Ok(map)
    }
}

/// Output of `aggregate`, one per region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFile {
    pub format_version: u32,
    pub alpha: f64,
    pub cell_ids: Vec<String>,
    #[serde(flatten)]
    pub region: RegionProfile,
}

impl RegionFile {
    pub fn sketches(&self) -> &KpiSketches {
        &self.region.sketches
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        other => {
            return Err(CliError::Data(format!(
                "{}: unsupported format_version {other:?}",
                path.display()
            )))
        }
    }
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("file types serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
