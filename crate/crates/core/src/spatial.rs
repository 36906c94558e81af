//! Seven-child cell hierarchy and region-level aggregation.
//!
//! A region (parent cell) has seven child slots. Each child contributes its
//! per-window profiles; a region keeps the unweighted mean of its children's
//! mean KPIs and, per KPI, the merge of the children's sketches over their
//! per-window values.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kpi::{Kpi, QocProfile};
use crate::seed::{derive_seed, rng_from_seed};
use crate::sketch::{QuantileSketch, SketchConfig};
use crate::synth::{series_id, ScenarioKind};

pub const CHILDREN_PER_REGION: usize = 7;

/// A child slot inside a region.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub region: String,
    pub child_index: u8,
}

impl CellId {
    pub fn new(region: impl Into<String>, child_index: u8) -> Result<Self> {
        if usize::from(child_index) >= CHILDREN_PER_REGION {
            return Err(Error::InvalidArgument(format!(
                "child index {child_index} outside 0..{CHILDREN_PER_REGION}"
            )));
        }
        Ok(Self {
            region: region.into(),
            child_index,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutMode {
    Homogeneous,
    Heterogeneous,
    Random,
}

impl std::str::FromStr for LayoutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "homogeneous" => Ok(LayoutMode::Homogeneous),
            "heterogeneous" => Ok(LayoutMode::Heterogeneous),
            "random" => Ok(LayoutMode::Random),
            other => Err(Error::Parse(format!(
                "unknown layout '{other}' (valid: homogeneous, heterogeneous, random)"
            ))),
        }
    }
}

/// The generated series placed in a slot: scenario and its cell index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceCell {
    pub scenario: ScenarioKind,
    pub cell: u32,
}

impl SourceCell {
    /// Identifier of this source's series in Monte-Carlo run `run`.
    pub fn series_id(&self, run: u32) -> String {
        series_id(self.scenario, self.cell, run)
    }
}

/// Placement of the 49 synthetic cells into seven regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAssignment {
    pub mode: LayoutMode,
    #[serde(with = "slot_list")]
    pub mapping: BTreeMap<CellId, SourceCell>,
}

/// Serializes the slot map as a list, since JSON keys must be strings.
mod slot_list {
    use super::{CellId, SourceCell};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    #[derive(Serialize, Deserialize)]
    struct Slot {
        #[serde(flatten)]
        id: CellId,
        #[serde(flatten)]
        source: SourceCell,
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<CellId, SourceCell>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let slots: Vec<Slot> = map
            .iter()
            .map(|(id, &source)| Slot {
                id: id.clone(),
                source,
            })
            .collect();
        slots.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<CellId, SourceCell>, D::Error> {
        let slots = Vec::<Slot>::deserialize(d)?;
        Ok(slots.into_iter().map(|s| (s.id, s.source)).collect())
    }
}

pub fn region_name(index: usize) -> String {
    format!("hex9-{index}")
}

impl RegionAssignment {
    fn from_slots(mode: LayoutMode, slots: &[SourceCell]) -> Self {
        let mapping = slots
            .iter()
            .enumerate()
            .map(|(i, &src)| {
                let id = CellId {
                    region: region_name(i / CHILDREN_PER_REGION),
                    child_index: (i % CHILDREN_PER_REGION) as u8,
                };
                (id, src)
            })
            .collect();
        Self { mode, mapping }
    }

    /// Sources of each region in slot order.
    pub fn regions(&self) -> BTreeMap<String, Vec<SourceCell>> {
        let mut out: BTreeMap<String, Vec<SourceCell>> = BTreeMap::new();
        for (id, &src) in &self.mapping {
            out.entry(id.region.clone()).or_default().push(src);
        }
        out
    }

    /// Every region holds a single scenario.
    pub fn is_homogeneous(&self) -> bool {
        self.regions()
            .values()
            .all(|srcs| srcs.iter().all(|s| s.scenario == srcs[0].scenario))
    }

    /// Every region holds each scenario exactly once.
    pub fn is_heterogeneous(&self) -> bool {
        self.regions().values().all(|srcs| {
            let mut kinds: Vec<ScenarioKind> = srcs.iter().map(|s| s.scenario).collect();
            kinds.sort();
            kinds == ScenarioKind::ALL
        })
    }
}

fn homogeneous_slots() -> Vec<SourceCell> {
    ScenarioKind::ALL
        .into_iter()
        .flat_map(|scenario| {
            (0..CHILDREN_PER_REGION as u32).map(move |cell| SourceCell { scenario, cell })
        })
        .collect()
}

fn heterogeneous_slots() -> Vec<SourceCell> {
    (0..CHILDREN_PER_REGION as u32)
        .flat_map(|cell| {
            ScenarioKind::ALL
                .into_iter()
                .map(move |scenario| SourceCell { scenario, cell })
        })
        .collect()
}

/// Homogeneous, heterogeneous and seeded random layouts, in that order.
/// The random layout is redrawn until it is neither of the other two.
pub fn assignments(seed: u64) -> [RegionAssignment; 3] {
    let homogeneous = RegionAssignment::from_slots(LayoutMode::Homogeneous, &homogeneous_slots());
    let heterogeneous =
        RegionAssignment::from_slots(LayoutMode::Heterogeneous, &heterogeneous_slots());
    let mut attempt = 0u64;
    let random = loop {
        let mut slots = homogeneous_slots();
        slots.shuffle(&mut rng_from_seed(derive_seed(seed, &[attempt])));
        let layout = RegionAssignment::from_slots(LayoutMode::Random, &slots);
        if !layout.is_homogeneous() && !layout.is_heterogeneous() {
            break layout;
        }
        attempt += 1;
    };
    [homogeneous, heterogeneous, random]
}

/// Mean KPI values, keyed `U`, `P`, `M`, `V`, `R` when serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiMeans {
    #[serde(rename = "U")]
    pub usability: f64,
    #[serde(rename = "P")]
    pub persistence_ms: f64,
    #[serde(rename = "M")]
    pub usable_mean: f64,
    #[serde(rename = "V")]
    pub variability: f64,
    #[serde(rename = "R")]
    pub resilience_per_ms: Option<f64>,
}

impl From<QocProfile> for KpiMeans {
    fn from(p: QocProfile) -> Self {
        Self {
            usability: p.usability,
            persistence_ms: p.persistence_ms,
            usable_mean: p.usable_mean,
            variability: p.variability,
            resilience_per_ms: p.resilience_per_ms,
        }
    }
}

impl From<KpiMeans> for QocProfile {
    fn from(m: KpiMeans) -> Self {
        Self {
            usability: m.usability,
            persistence_ms: m.persistence_ms,
            usable_mean: m.usable_mean,
            variability: m.variability,
            resilience_per_ms: m.resilience_per_ms,
        }
    }
}

impl KpiMeans {
    pub fn get(&self, kpi: Kpi) -> Option<f64> {
        QocProfile::from(*self).get(kpi)
    }

    /// Unweighted mean; resilience averages the entries that define it.
    pub fn mean_of(items: &[KpiMeans]) -> Option<KpiMeans> {
        let profiles: Vec<QocProfile> = items.iter().map(|&m| m.into()).collect();
        QocProfile::mean_of(&profiles).map(Into::into)
    }
}

/// One sketch per KPI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiSketches {
    #[serde(rename = "U")]
    pub usability: QuantileSketch,
    #[serde(rename = "P")]
    pub persistence: QuantileSketch,
    #[serde(rename = "M")]
    pub usable_mean: QuantileSketch,
    #[serde(rename = "V")]
    pub variability: QuantileSketch,
    #[serde(rename = "R")]
    pub resilience: QuantileSketch,
}

impl KpiSketches {
    pub fn new(config: SketchConfig) -> Self {
        let s = QuantileSketch::new(config);
        Self {
            usability: s.clone(),
            persistence: s.clone(),
            usable_mean: s.clone(),
            variability: s.clone(),
            resilience: s,
        }
    }

    pub fn get(&self, kpi: Kpi) -> &QuantileSketch {
        match kpi {
            Kpi::Usability => &self.usability,
            Kpi::Persistence => &self.persistence,
            Kpi::UsableMean => &self.usable_mean,
            Kpi::Variability => &self.variability,
            Kpi::Resilience => &self.resilience,
        }
    }

    fn get_mut(&mut self, kpi: Kpi) -> &mut QuantileSketch {
        match kpi {
            Kpi::Usability => &mut self.usability,
            Kpi::Persistence => &mut self.persistence,
            Kpi::UsableMean => &mut self.usable_mean,
            Kpi::Variability => &mut self.variability,
            Kpi::Resilience => &mut self.resilience,
        }
    }

    /// Adds one window's values; an absent resilience is skipped.
    pub fn insert(&mut self, profile: &QocProfile) -> Result<()> {
        for kpi in Kpi::ALL {
            if let Some(v) = profile.get(kpi) {
                self.get_mut(kpi).insert(v)?;
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &KpiSketches) -> Result<()> {
        for kpi in Kpi::ALL {
            self.get_mut(kpi).merge(other.get(kpi))?;
        }
        Ok(())
    }
}

/// Per-cell summary: mean KPIs and per-KPI sketches over its windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub means: KpiMeans,
    pub sketches: KpiSketches,
    pub windows: usize,
}

impl CellSummary {
    pub fn from_profiles(profiles: &[QocProfile], config: SketchConfig) -> Result<Self> {
        let means = QocProfile::mean_of(profiles).ok_or(Error::EmptyInput)?;
        let mut sketches = KpiSketches::new(config);
        for p in profiles {
            sketches.insert(p)?;
        }
        Ok(Self {
            means: means.into(),
            sketches,
            windows: profiles.len(),
        })
    }
}

/// Region-level QoC: scalar means and merged sketches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionProfile {
    pub region_id: String,
    /// Number of constituent cells.
    #[serde(rename = "M")]
    pub cells: usize,
    pub means: KpiMeans,
    pub sketches: KpiSketches,
}

/// Combines cell summaries into one region.
pub fn aggregate_region(
    region_id: impl Into<String>,
    cells: &[&CellSummary],
) -> Result<RegionProfile> {
    let first = cells.first().ok_or(Error::EmptyInput)?;
    let means: Vec<KpiMeans> = cells.iter().map(|c| c.means).collect();
    let mut sketches = first.sketches.clone();
    for cell in &cells[1..] {
        sketches.merge(&cell.sketches)?;
    }
    Ok(RegionProfile {
        region_id: region_id.into(),
        cells: cells.len(),
        means: KpiMeans::mean_of(&means).expect("non-empty"),
        sketches,
    })
}

/// Aggregates per-window cell profiles into one profile per region.
pub fn aggregate(
    cell_profiles: &BTreeMap<CellId, Vec<QocProfile>>,
    alpha: f64,
) -> Result<BTreeMap<String, RegionProfile>> {
    let config = SketchConfig::new(alpha)?;
    let mut by_region: BTreeMap<&str, Vec<CellSummary>> = BTreeMap::new();
    for (id, profiles) in cell_profiles {
        if profiles.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "cell {}/{} has no profiled window",
                id.region, id.child_index
            )));
        }
        by_region
            .entry(id.region.as_str())
            .or_default()
            .push(CellSummary::from_profiles(profiles, config)?);
    }
    by_region
        .into_iter()
        .map(|(region, cells)| {
            let refs: Vec<&CellSummary> = cells.iter().collect();
            Ok((region.to_string(), aggregate_region(region, &refs)?))
        })
        .collect()
}

/// `q`-quantile of a KPI's region sketch.
pub fn region_quantile(region: &RegionProfile, kpi: Kpi, q: f64) -> Result<f64> {
    region.sketches.get(kpi).quantile(q)
}
