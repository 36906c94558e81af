//! Usability classification, run segmentation and the five QoC KPIs.
//!
//! A series is classified sample by sample against a usability threshold,
//! split into maximal usable / unusable runs, and reduced to the profile
//! `(U, P, M, V, R)`:
//!
//! * `U` fraction of samples that are usable,
//! * `P` mean usable-run duration,
//! * `M` mean over usable runs of each run's median value,
//! * `V` mean over usable runs of `(P75 - P25) / P50`,
//! * `R` number of unusable runs divided by their total duration.
//!
//! Durations are discrete: a run of `n` samples lasts `n * interval` where the
//! interval is the series' nominal sampling period.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{median_sorted, quantile_sorted};

/// The measured quantity of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    DownlinkSpeed,
    UplinkSpeed,
    Latency,
    PacketLoss,
}

/// Which side of the threshold counts as usable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::DownlinkSpeed,
        MetricKind::UplinkSpeed,
        MetricKind::Latency,
        MetricKind::PacketLoss,
    ];

    pub fn direction(self) -> Direction {
        match self {
            MetricKind::DownlinkSpeed | MetricKind::UplinkSpeed => Direction::HigherIsBetter,
            MetricKind::Latency | MetricKind::PacketLoss => Direction::LowerIsBetter,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::DownlinkSpeed => "downlink_speed",
            MetricKind::UplinkSpeed => "uplink_speed",
            MetricKind::Latency => "latency",
            MetricKind::PacketLoss => "packet_loss",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "downlink_speed" | "downlink" | "download" | "dl" => Ok(MetricKind::DownlinkSpeed),
            "uplink_speed" | "uplink" | "upload" | "ul" => Ok(MetricKind::UplinkSpeed),
            "latency" | "rtt" => Ok(MetricKind::Latency),
            "packet_loss" | "loss" => Ok(MetricKind::PacketLoss),
            other => Err(Error::Parse(format!(
                "unknown metric '{other}' (valid: downlink, uplink, latency, loss)"
            ))),
        }
    }
}

/// One timestamped measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub timestamp_ms: i64,
    pub value: f64,
}

impl Sample {
    pub fn new(timestamp_ms: i64, value: f64) -> Self {
        Self {
            timestamp_ms,
            value,
        }
    }
}

/// Measurements of one metric at one cell, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    cell_id: String,
    metric: MetricKind,
    samples: Vec<Sample>,
    interval_ms: u64,
}

impl TimeSeries {
    /// Builds a validated series.
    ///
    /// When `nominal_interval_ms` is `None` the sampling interval is the
    /// median positive gap between consecutive samples, which needs at least
    /// two samples.
    pub fn new(
        cell_id: impl Into<String>,
        metric: MetricKind,
        samples: Vec<Sample>,
        nominal_interval_ms: Option<u64>,
    ) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if !s.value.is_finite() {
                return Err(Error::InvalidSeries(format!(
                    "non-finite value at index {i}"
                )));
            }
            if s.value < 0.0 {
                return Err(Error::NegativeValue(s.value));
            }
        }
        if let Some(i) = samples
            .windows(2)
            .position(|w| w[1].timestamp_ms <= w[0].timestamp_ms)
        {
            return Err(Error::InvalidSeries(format!(
                "timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        let interval_ms = match nominal_interval_ms {
            Some(0) => {
                return Err(Error::InvalidSeries(
                    "nominal interval must be positive".into(),
                ))
            }
            Some(d) => d,
            None => median_gap_ms(&samples).ok_or_else(|| {
                Error::InvalidSeries(
                    "cannot infer the sampling interval from fewer than two samples".into(),
                )
            })?,
        };
        Ok(Self {
            cell_id: cell_id.into(),
            metric,
            samples,
            interval_ms,
        })
    }

    /// Regularly spaced series starting at `start_ms`.
    pub fn from_values(
        cell_id: impl Into<String>,
        metric: MetricKind,
        start_ms: i64,
        interval_ms: u64,
        values: &[f64],
    ) -> Result<Self> {
        let step = i64::try_from(interval_ms)
            .map_err(|_| Error::InvalidSeries("interval too large".into()))?;
        let samples = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Sample::new(start_ms + step * i as i64, v))
            .collect();
        Self::new(cell_id, metric, samples, Some(interval_ms))
    }

    /// A series sharing this one's identity but holding a subset of its
    /// samples at a new interval. Subsets of a valid series stay valid.
    pub(crate) fn derived(&self, samples: Vec<Sample>, interval_ms: u64) -> Self {
        debug_assert!(interval_ms > 0);
        Self {
            cell_id: self.cell_id.clone(),
            metric: self.metric,
            samples,
            interval_ms,
        }
    }

    pub fn cell_id(&self) -> &str {
        &self.cell_id
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }

    /// The sampling interval Δ in milliseconds.
    pub fn interval_ms(&self) -> u64 {
        self.interval_ms
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time covered by the series at its nominal interval.
    pub fn span_ms(&self) -> u64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (b.timestamp_ms - a.timestamp_ms) as u64 + self.interval_ms,
            _ => 0,
        }
    }
}

/// Median of the positive gaps between consecutive samples, rounded to the
/// nearest millisecond.
pub(crate) fn median_gap_ms(samples: &[Sample]) -> Option<u64> {
    let mut gaps: Vec<f64> = samples
        .windows(2)
        .map(|w| (w[1].timestamp_ms - w[0].timestamp_ms) as f64)
        .filter(|&g| g > 0.0)
        .collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    Some((median_sorted(&gaps).round() as u64).max(1))
}

/// Threshold, hysteresis band and window used to classify a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsabilityConfig {
    /// Usability threshold τ in metric units.
    pub tau: f64,
    /// Fractional hysteresis band b in `[0, 0.5)`.
    pub hysteresis: f64,
    /// Window length T in milliseconds.
    pub window_ms: u64,
    /// Split runs at gaps longer than `gap_split * Δ`.
    #[serde(default)]
    pub gap_split: Option<f64>,
    /// Align windows to multiples of `window_ms` since the Unix epoch instead
    /// of the first timestamp.
    #[serde(default)]
    pub align_to_epoch: bool,
}

pub const DAY_MS: u64 = 86_400_000;

impl UsabilityConfig {
    pub fn new(tau: f64, window_ms: u64) -> Self {
        Self {
            tau,
            hysteresis: 0.0,
            window_ms,
            gap_split: None,
            align_to_epoch: false,
        }
    }

    pub fn with_hysteresis(mut self, band: f64) -> Self {
        self.hysteresis = band;
        self
    }

    pub fn with_gap_split(mut self, factor: f64) -> Self {
        self.gap_split = Some(factor);
        self
    }

    pub fn aligned_to_epoch(mut self, align: bool) -> Self {
        self.align_to_epoch = align;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(0.0..0.5).contains(&self.hysteresis) {
            return Err(Error::InvalidArgument(format!(
                "hysteresis must lie in [0, 0.5), got {}",
                self.hysteresis
            )));
        }
        if self.window_ms == 0 {
            return Err(Error::InvalidArgument("window must be positive".into()));
        }
        if let Some(g) = self.gap_split {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "gap split must be positive, got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// Classifies every sample as usable (`true`) or unusable (`false`).
pub fn classify(series: &TimeSeries, config: &UsabilityConfig) -> Result<Vec<bool>> {
    config.validate()?;
    let values: Vec<f64> = series.values().collect();
    classify_values(
        &values,
        series.metric().direction(),
        config.tau,
        config.hysteresis,
    )
}

/// Classification on raw values.
///
/// With `band == 0` this is the memoryless predicate. Otherwise it is a
/// two-threshold trigger at `tau * (1 ± band)`: the first sample takes the
/// plain predicate, and the state only flips once a value crosses the far
/// side of the band.
pub fn classify_values(
    values: &[f64],
    direction: Direction,
    tau: f64,
    band: f64,
) -> Result<Vec<bool>> {
    let first = *values.first().ok_or(Error::EmptyInput)?;
    let upper = tau * (1.0 + band);
    let lower = tau * (1.0 - band);
    let plain = |x: f64| match direction {
        Direction::HigherIsBetter => x >= tau,
        Direction::LowerIsBetter => x <= tau,
    };
    if band == 0.0 {
        return Ok(values.iter().map(|&x| plain(x)).collect());
    }
    let mut state = plain(first);
    let mut flags = Vec::with_capacity(values.len());
    flags.push(state);
    for &x in &values[1..] {
        state = match (direction, state) {
            (Direction::HigherIsBetter, true) => x >= lower,
            (Direction::HigherIsBetter, false) => x >= upper,
            (Direction::LowerIsBetter, true) => x <= upper,
            (Direction::LowerIsBetter, false) => x <= lower,
        };
        flags.push(state);
    }
    Ok(flags)
}

/// A maximal stretch of samples sharing one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub start_ts: i64,
    pub sample_count: usize,
    pub duration_ms: u64,
    pub values: Vec<f64>,
}

/// Usable runs (N, L_j) and unusable runs (W, D_i) of a classified series.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSegments {
    pub usable_runs: Vec<Run>,
    pub unusable_runs: Vec<Run>,
}

impl RunSegments {
    fn cap_durations(&mut self, cap_ms: u64) {
        for run in self
            .usable_runs
            .iter_mut()
            .chain(self.unusable_runs.iter_mut())
        {
            run.duration_ms = run.duration_ms.min(cap_ms);
        }
    }
}

/// Splits a classified series into runs. `gap_split` terminates a run at any
/// inter-sample gap longer than `gap_split * Δ`.
pub fn segment(series: &TimeSeries, flags: &[bool], gap_split: Option<f64>) -> Result<RunSegments> {
    segment_samples(series.samples(), flags, series.interval_ms(), gap_split)
}

fn segment_samples(
    samples: &[Sample],
    flags: &[bool],
    interval_ms: u64,
    gap_split: Option<f64>,
) -> Result<RunSegments> {
    if flags.len() != samples.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            actual: flags.len(),
        });
    }
    let max_gap = gap_split.map(|g| g * interval_ms as f64);
    let mut segments = RunSegments::default();
    let mut start = 0;
    for i in 1..=samples.len() {
        let boundary = i == samples.len()
            || flags[i] != flags[start]
            || max_gap.is_some_and(|m| {
                (samples[i].timestamp_ms - samples[i - 1].timestamp_ms) as f64 > m
            });
        if !boundary {
            continue;
        }
        let count = i - start;
        let run = Run {
            start_ts: samples[start].timestamp_ms,
            sample_count: count,
            duration_ms: count as u64 * interval_ms,
            values: samples[start..i].iter().map(|s| s.value).collect(),
        };
        if flags[start] {
            segments.usable_runs.push(run);
        } else {
            segments.unusable_runs.push(run);
        }
        start = i;
    }
    Ok(segments)
}

/// Fraction of usable samples.
pub fn usability(flags: &[bool]) -> Result<f64> {
    if flags.is_empty() {
        return Err(Error::EmptyInput);
    }
    let usable = flags.iter().filter(|&&f| f).count();
    Ok(usable as f64 / flags.len() as f64)
}

/// Mean usable-run duration in ms; 0 when there is no usable run.
pub fn persistence(segments: &RunSegments) -> f64 {
    mean_duration(&segments.usable_runs)
}

fn mean_duration(runs: &[Run]) -> f64 {
    if runs.is_empty() {
        return 0.0;
    }
    let total: u64 = runs.iter().map(|r| r.duration_ms).sum();
    total as f64 / runs.len() as f64
}

/// Mean over usable runs of each run's median value.
pub fn usable_mean(segments: &RunSegments) -> f64 {
    let runs = &segments.usable_runs;
    if runs.is_empty() {
        return 0.0;
    }
    let total: f64 = runs.iter().map(|r| median_sorted(&sorted(&r.values))).sum();
    total / runs.len() as f64
}

/// Mean over usable runs of `(P75 - P25) / P50`.
pub fn variability(segments: &RunSegments) -> f64 {
    variability_with_diagnostics(segments).0
}

/// Variability plus the number of runs whose median was zero. Those runs,
/// and runs shorter than two samples, contribute 0.
pub fn variability_with_diagnostics(segments: &RunSegments) -> (f64, usize) {
    let runs = &segments.usable_runs;
    if runs.is_empty() {
        return (0.0, 0);
    }
    let mut zero_median = 0;
    let mut total = 0.0;
    for run in runs {
        if run.values.len() < 2 {
            continue;
        }
        let v = sorted(&run.values);
        let p50 = quantile_sorted(&v, 0.5);
        if p50 == 0.0 {
            zero_median += 1;
            continue;
        }
        total += (quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)) / p50;
    }
    (total / runs.len() as f64, zero_median)
}

/// Unusable-run count over total unusable time, per ms. `None` when the
/// series never becomes unusable. Each duration is capped at `window_ms`.
pub fn resilience(segments: &RunSegments, window_ms: u64) -> Option<f64> {
    let runs = &segments.unusable_runs;
    if runs.is_empty() {
        return None;
    }
    let total: u64 = runs.iter().map(|r| r.duration_ms.min(window_ms)).sum();
    Some(runs.len() as f64 / total as f64)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// The five QoC KPIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kpi {
    #[serde(rename = "U")]
    Usability,
    #[serde(rename = "P")]
    Persistence,
    #[serde(rename = "M")]
    UsableMean,
    #[serde(rename = "V")]
    Variability,
    #[serde(rename = "R")]
    Resilience,
}

impl Kpi {
    pub const ALL: [Kpi; 5] = [
        Kpi::Usability,
        Kpi::Persistence,
        Kpi::UsableMean,
        Kpi::Variability,
        Kpi::Resilience,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Kpi::Usability => "U",
            Kpi::Persistence => "P",
            Kpi::UsableMean => "M",
            Kpi::Variability => "V",
            Kpi::Resilience => "R",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Kpi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Kpi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u" | "usability" => Ok(Kpi::Usability),
            "p" | "persistence" => Ok(Kpi::Persistence),
            "m" | "usable_mean" | "mean" => Ok(Kpi::UsableMean),
            "v" | "variability" => Ok(Kpi::Variability),
            "r" | "resilience" => Ok(Kpi::Resilience),
            other => Err(Error::Parse(format!(
                "unknown KPI '{other}' (valid: U, P, M, V, R)"
            ))),
        }
    }
}

/// The five-dimensional QoC profile of one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QocProfile {
    pub usability: f64,
    pub persistence_ms: f64,
    pub usable_mean: f64,
    pub variability: f64,
    /// Absent when the window has no unusable period.
    pub resilience_per_ms: Option<f64>,
}

impl QocProfile {
    pub fn get(&self, kpi: Kpi) -> Option<f64> {
        match kpi {
            Kpi::Usability => Some(self.usability),
            Kpi::Persistence => Some(self.persistence_ms),
            Kpi::UsableMean => Some(self.usable_mean),
            Kpi::Variability => Some(self.variability),
            Kpi::Resilience => self.resilience_per_ms,
        }
    }

    /// Component-wise mean; resilience averages only the windows where it
    /// is defined.
    pub fn mean_of(profiles: &[QocProfile]) -> Option<QocProfile> {
        if profiles.is_empty() {
            return None;
        }
        let n = profiles.len() as f64;
        let avg = |f: fn(&QocProfile) -> f64| profiles.iter().map(f).sum::<f64>() / n;
        let r: Vec<f64> = profiles
            .iter()
            .filter_map(|p| p.resilience_per_ms)
            .collect();
        Some(QocProfile {
            usability: avg(|p| p.usability),
            persistence_ms: avg(|p| p.persistence_ms),
            usable_mean: avg(|p| p.usable_mean),
            variability: avg(|p| p.variability),
            resilience_per_ms: (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64),
        })
    }
}

/// Profile of one window of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowProfile {
    pub start_ms: i64,
    pub end_ms: i64,
    pub sample_count: usize,
    pub profile: QocProfile,
    /// Usable runs whose median was zero (their variability counts as 0).
    pub zero_median_runs: usize,
}

/// Per-window profiles of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub windows: Vec<WindowProfile>,
    /// Start timestamps of windows holding no sample.
    pub skipped_windows: Vec<i64>,
}

impl ProfileReport {
    pub fn profiles(&self) -> Vec<QocProfile> {
        self.windows.iter().map(|w| w.profile).collect()
    }

    /// Mean of the per-window profiles.
    pub fn summary(&self) -> Option<QocProfile> {
        QocProfile::mean_of(&self.profiles())
    }
}

/// Partitions the series into windows and profiles each non-empty one.
///
/// Classification runs once over the whole series, so the hysteresis state
/// carries across window boundaries; runs are cut at the boundaries and no
/// run lasts longer than the window.
pub fn profile(series: &TimeSeries, config: &UsabilityConfig) -> Result<ProfileReport> {
    let flags = classify(series, config)?;
    let samples = series.samples();
    let window = config.window_ms as i64;
    let t0 = samples[0].timestamp_ms;
    let origin = if config.align_to_epoch {
        t0.div_euclid(window) * window
    } else {
        t0
    };

    let mut windows = Vec::new();
    let mut skipped_windows = Vec::new();
    let mut expected_index = 0i64;
    let mut start = 0;
    while start < samples.len() {
        let index = (samples[start].timestamp_ms - origin).div_euclid(window);
        let window_start = origin + index * window;
        let window_end = window_start + window;
        let end = start
            + samples[start..]
                .iter()
                .position(|s| s.timestamp_ms >= window_end)
                .unwrap_or(samples.len() - start);
        skipped_windows.extend((expected_index..index).map(|i| origin + i * window));
        expected_index = index + 1;

        let mut segments = segment_samples(
            &samples[start..end],
            &flags[start..end],
            series.interval_ms(),
            config.gap_split,
        )?;
        segments.cap_durations(config.window_ms);
        let (variability, zero_median_runs) = variability_with_diagnostics(&segments);
        windows.push(WindowProfile {
            start_ms: window_start,
            end_ms: window_end,
            sample_count: end - start,
            profile: QocProfile {
                usability: usability(&flags[start..end])?,
                persistence_ms: persistence(&segments),
                usable_mean: usable_mean(&segments),
                variability,
                resilience_per_ms: resilience(&segments, config.window_ms),
            },
            zero_median_runs,
        });
        start = end;
    }
    Ok(ProfileReport {
        windows,
        skipped_windows,
    })
}

/// Maps values to `[0, 1]` via `ln(1 + x)` followed by min-max scaling over
/// the supplied collection. Absent entries take the collection maximum; a
/// collection with no spread maps to 0.5. `invert` returns `1 - y`.
pub fn normalize(values: &[Option<f64>], invert: bool) -> Result<Vec<f64>> {
    for v in values.iter().flatten() {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite value {v}")));
        }
        if *v < 0.0 {
            return Err(Error::NegativeValue(*v));
        }
    }
    let logged: Vec<Option<f64>> = values.iter().map(|v| v.map(f64::ln_1p)).collect();
    let present = logged.iter().flatten().copied();
    let max = present.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = present.fold(f64::INFINITY, f64::min);
    let out = logged
        .iter()
        .map(|v| {
            let y = if max > min {
                (v.unwrap_or(max) - min) / (max - min)
            } else {
                0.5
            };
            if invert {
                1.0 - y
            } else {
                y
            }
        })
        .collect();
    Ok(out)
}

/// [`normalize`] for collections without absent entries.
pub fn normalize_values(values: &[f64], invert: bool) -> Result<Vec<f64>> {
    let wrapped: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
    normalize(&wrapped, invert)
}

/// Outcome of the latency compliance check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FccCompliance {
    pub compliant: bool,
    pub fraction: f64,
}

pub const FCC_LATENCY_MS: f64 = 100.0;

/// Checks that at least 95% of latency samples are at or below 100 ms.
pub fn fcc_latency_compliant(series: &TimeSeries) -> Result<FccCompliance> {
    if series.metric() != MetricKind::Latency {
        return Err(Error::UnsupportedMetric(format!(
            "compliance check needs latency, got {}",
            series.metric()
        )));
    }
    let values: Vec<f64> = series.values().collect();
    let flags = classify_values(&values, Direction::LowerIsBetter, FCC_LATENCY_MS, 0.0)?;
    let usable = flags.iter().filter(|&&f| f).count();
    Ok(FccCompliance {
        // integer comparison keeps the 95% boundary exact
        compliant: usable * 100 >= flags.len() * 95,
        fraction: usable as f64 / flags.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: u64 = 60_000;

    fn latency(values: &[f64]) -> TimeSeries {
        TimeSeries::from_values("c", MetricKind::Latency, 0, MIN, values).unwrap()
    }

    fn downlink(values: &[f64]) -> TimeSeries {
        TimeSeries::from_values("c", MetricKind::DownlinkSpeed, 0, MIN, values).unwrap()
    }

    const U: bool = true;
    const X: bool = false;

    #[test]
    fn classify_memoryless_latency() {
        let s = latency(&[90.0, 103.0, 108.0, 96.0, 94.0]);
        let flags = classify(&s, &UsabilityConfig::new(100.0, DAY_MS)).unwrap();
        assert_eq!(flags, vec![U, X, X, U, U]);
    }

    #[test]
    fn classify_hysteresis_latency() {
        let s = latency(&[90.0, 103.0, 108.0, 96.0, 94.0]);
        let cfg = UsabilityConfig::new(100.0, DAY_MS).with_hysteresis(0.05);
        assert_eq!(classify(&s, &cfg).unwrap(), vec![U, U, X, X, U]);
    }

    #[test]
    fn classify_hysteresis_downlink() {
        // bands at 33.25 / 36.75
        let s = downlink(&[40.0, 34.0, 33.0, 36.0, 37.0]);
        let cfg = UsabilityConfig::new(35.0, DAY_MS).with_hysteresis(0.05);
        assert_eq!(classify(&s, &cfg).unwrap(), vec![U, U, X, X, U]);
    }

    #[test]
    fn classify_downlink_plain() {
        let s = downlink(&[40.0, 40.0, 10.0, 40.0]);
        let flags = classify(&s, &UsabilityConfig::new(35.0, DAY_MS)).unwrap();
        assert_eq!(flags, vec![U, U, X, U]);
    }

    #[test]
    fn classify_rejects_empty_and_bad_config() {
        let s = TimeSeries::new("c", MetricKind::Latency, vec![], Some(MIN)).unwrap();
        assert_eq!(
            classify(&s, &UsabilityConfig::new(100.0, DAY_MS)),
            Err(Error::EmptyInput)
        );
        let s = latency(&[1.0]);
        assert!(classify(&s, &UsabilityConfig::new(0.0, DAY_MS)).is_err());
        assert!(classify(&s, &UsabilityConfig::new(1.0, DAY_MS).with_hysteresis(0.5)).is_err());
    }

    #[test]
    fn series_validation() {
        let bad = vec![Sample::new(10, 1.0), Sample::new(10, 2.0)];
        assert!(TimeSeries::new("c", MetricKind::Latency, bad, Some(1)).is_err());
        assert!(matches!(
            TimeSeries::new(
                "c",
                MetricKind::Latency,
                vec![Sample::new(0, -1.0)],
                Some(1)
            ),
            Err(Error::NegativeValue(_))
        ));
        assert!(
            TimeSeries::new("c", MetricKind::Latency, vec![Sample::new(0, 1.0)], None).is_err()
        );
    }

    #[test]
    fn interval_defaults_to_median_gap() {
        let samples = [0, 1000, 2000, 5000, 6000]
            .iter()
            .map(|&t| Sample::new(t, 1.0))
            .collect();
        let s = TimeSeries::new("c", MetricKind::Latency, samples, None).unwrap();
        assert_eq!(s.interval_ms(), 1000);
    }

    #[test]
    fn segment_hand_example() {
        let s = downlink(&[1.0; 7]);
        let flags = [U, U, X, U, U, U, X];
        let seg = segment(&s, &flags, None).unwrap();
        let usable: Vec<u64> = seg.usable_runs.iter().map(|r| r.duration_ms).collect();
        let unusable: Vec<u64> = seg.unusable_runs.iter().map(|r| r.duration_ms).collect();
        assert_eq!(usable, vec![120_000, 180_000]);
        assert_eq!(unusable, vec![60_000, 60_000]);
    }

    #[test]
    fn segment_all_usable_and_alternating() {
        let s = downlink(&[1.0; 10]);
        let seg = segment(&s, &[U; 10], None).unwrap();
        assert_eq!(seg.usable_runs.len(), 1);
        assert!(seg.unusable_runs.is_empty());

        let s = downlink(&[1.0; 4]);
        let seg = segment(&s, &[U, X, U, X], None).unwrap();
        assert_eq!(seg.usable_runs.len(), 2);
        assert_eq!(seg.unusable_runs.len(), 2);
        assert!(seg
            .usable_runs
            .iter()
            .chain(&seg.unusable_runs)
            .all(|r| r.sample_count == 1));
    }

    #[test]
    fn segment_length_mismatch() {
        let s = downlink(&[1.0; 3]);
        assert_eq!(
            segment(&s, &[U, U], None),
            Err(Error::LengthMismatch {
                expected: 3,
                actual: 2
            })
        );
    }

    #[test]
    fn segment_splits_on_gaps() {
        let samples = [0, 60_000, 120_000, 600_000, 660_000]
            .iter()
            .map(|&t| Sample::new(t, 50.0))
            .collect();
        let s = TimeSeries::new("c", MetricKind::DownlinkSpeed, samples, Some(MIN)).unwrap();
        let seg = segment(&s, &[U; 5], Some(2.0)).unwrap();
        let counts: Vec<usize> = seg.usable_runs.iter().map(|r| r.sample_count).collect();
        assert_eq!(counts, vec![3, 2]);
        assert_eq!(segment(&s, &[U; 5], None).unwrap().usable_runs.len(), 1);
    }

    #[test]
    fn usability_counts() {
        assert_eq!(usability(&[U, U, X, U]).unwrap(), 0.75);
        assert_eq!(usability(&[U; 3]).unwrap(), 1.0);
        assert_eq!(usability(&[X; 3]).unwrap(), 0.0);
        assert_eq!(usability(&[]), Err(Error::EmptyInput));
    }

    fn run(values: &[f64], duration_ms: u64) -> Run {
        Run {
            start_ts: 0,
            sample_count: values.len(),
            duration_ms,
            values: values.to_vec(),
        }
    }

    #[test]
    fn persistence_mean_and_empty() {
        let seg = RunSegments {
            usable_runs: vec![run(&[1.0, 1.0], 120_000), run(&[1.0, 1.0, 1.0], 180_000)],
            unusable_runs: vec![],
        };
        assert_eq!(persistence(&seg), 150_000.0);
        assert_eq!(persistence(&RunSegments::default()), 0.0);
    }

    #[test]
    fn usable_mean_of_medians() {
        let seg = RunSegments {
            usable_runs: vec![run(&[300.0, 100.0, 200.0], 3), run(&[50.0], 1)],
            unusable_runs: vec![],
        };
        assert_eq!(usable_mean(&seg), 125.0);
        let seg = RunSegments {
            usable_runs: vec![run(&[7.0], 1)],
            unusable_runs: vec![],
        };
        assert_eq!(usable_mean(&seg), 7.0);
        assert_eq!(usable_mean(&RunSegments::default()), 0.0);
    }

    #[test]
    fn variability_interquartile_ratio() {
        let seg = RunSegments {
            usable_runs: vec![run(&[100.0, 200.0, 300.0], 3)],
            unusable_runs: vec![],
        };
        assert_eq!(variability(&seg), 0.5);
        let seg = RunSegments {
            usable_runs: vec![run(&[4.0, 4.0, 4.0, 4.0], 4)],
            unusable_runs: vec![],
        };
        assert_eq!(variability(&seg), 0.0);
        assert_eq!(variability(&RunSegments::default()), 0.0);
    }

    #[test]
    fn variability_zero_median_is_flagged() {
        let seg = RunSegments {
            usable_runs: vec![run(&[0.0, 0.0, 1.0], 3), run(&[100.0, 200.0, 300.0], 3)],
            unusable_runs: vec![],
        };
        let (v, flagged) = variability_with_diagnostics(&seg);
        assert_eq!(flagged, 1);
        assert_eq!(v, 0.25);
    }

    #[test]
    fn resilience_cases() {
        let seg = RunSegments {
            usable_runs: vec![],
            unusable_runs: vec![run(&[0.0], 60_000), run(&[0.0], 60_000)],
        };
        assert_eq!(resilience(&seg, DAY_MS), Some(2.0 / 120_000.0));
        assert_eq!(resilience(&RunSegments::default(), DAY_MS), None);
    }

    #[test]
    fn never_usable_day_has_unit_resilience() {
        let s = downlink(&vec![5.0; 1440]);
        let report = profile(&s, &UsabilityConfig::new(35.0, DAY_MS)).unwrap();
        let p = report.windows[0].profile;
        assert_eq!(p.resilience_per_ms, Some(1.0 / 86_400_000.0));
        assert_eq!(
            (p.usability, p.persistence_ms, p.usable_mean, p.variability),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn profile_hand_example() {
        let s = downlink(&[40.0, 40.0, 10.0, 40.0]);
        let report = profile(&s, &UsabilityConfig::new(35.0, DAY_MS)).unwrap();
        assert_eq!(report.windows.len(), 1);
        let p = report.windows[0].profile;
        assert_eq!(p.usability, 0.75);
        assert_eq!(p.persistence_ms, 90_000.0);
        assert_eq!(p.usable_mean, 40.0);
        assert_eq!(p.variability, 0.0);
        assert_eq!(p.resilience_per_ms, Some(1.0 / 60_000.0));
    }

    #[test]
    fn profile_constant_series() {
        let s = downlink(&vec![500.0; 1440]);
        let report = profile(&s, &UsabilityConfig::new(35.0, DAY_MS)).unwrap();
        let p = report.windows[0].profile;
        assert_eq!(p.usability, 1.0);
        assert_eq!(p.persistence_ms, DAY_MS as f64);
        assert_eq!(p.usable_mean, 500.0);
        assert_eq!(p.variability, 0.0);
        assert_eq!(p.resilience_per_ms, None);
    }

    #[test]
    fn profile_window_count_and_skips() {
        let s = downlink(&vec![50.0; 2 * 1440]);
        let report = profile(&s, &UsabilityConfig::new(35.0, DAY_MS)).unwrap();
        assert_eq!(report.windows.len(), 2);
        assert!(report.skipped_windows.is_empty());

        let samples = vec![Sample::new(0, 50.0), Sample::new(3 * DAY_MS as i64, 50.0)];
        let s = TimeSeries::new("c", MetricKind::DownlinkSpeed, samples, Some(MIN)).unwrap();
        let report = profile(&s, &UsabilityConfig::new(35.0, DAY_MS)).unwrap();
        assert_eq!(report.windows.len(), 2);
        assert_eq!(
            report.skipped_windows,
            vec![DAY_MS as i64, 2 * DAY_MS as i64]
        );
    }

    #[test]
    fn profile_epoch_alignment() {
        let start = 12 * 3_600_000;
        let s = TimeSeries::from_values(
            "c",
            MetricKind::DownlinkSpeed,
            start,
            MIN,
            &vec![50.0; 1440],
        )
        .unwrap();
        let cfg = UsabilityConfig::new(35.0, DAY_MS);
        assert_eq!(profile(&s, &cfg).unwrap().windows.len(), 1);
        let aligned = profile(&s, &cfg.clone().aligned_to_epoch(true)).unwrap();
        assert_eq!(aligned.windows.len(), 2);
        assert_eq!(aligned.windows[0].start_ms, 0);
        assert_eq!(aligned.windows[0].sample_count, 720);
    }

    #[test]
    fn durations_never_exceed_window() {
        let samples = (0..3)
            .map(|i| Sample::new(i * 5 * DAY_MS as i64, 50.0))
            .collect();
        let s = TimeSeries::new("c", MetricKind::DownlinkSpeed, samples, Some(5 * DAY_MS)).unwrap();
        let report = profile(&s, &UsabilityConfig::new(35.0, DAY_MS)).unwrap();
        assert!(report
            .windows
            .iter()
            .all(|w| w.profile.persistence_ms == DAY_MS as f64));
    }

    #[test]
    fn normalize_cases() {
        let e = std::f64::consts::E;
        let out = normalize_values(&[0.0, e - 1.0, e * e - 1.0], false).unwrap();
        for (a, b) in out.iter().zip([0.0, 0.5, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let inv = normalize_values(&[0.0, e - 1.0, e * e - 1.0], true).unwrap();
        for (a, b) in inv.iter().zip([1.0, 0.5, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(
            normalize_values(&[3.0, 3.0, 3.0], false).unwrap(),
            vec![0.5; 3]
        );
        assert!(matches!(
            normalize_values(&[1.0, -1.0], false),
            Err(Error::NegativeValue(_))
        ));
    }

    #[test]
    fn normalize_maps_absent_to_max() {
        let out = normalize(&[Some(0.0), None, Some(1.0)], false).unwrap();
        assert_eq!(out, vec![0.0, 1.0, 1.0]);
        assert_eq!(normalize(&[None, None], false).unwrap(), vec![0.5, 0.5]);
    }

    fn fcc_fixture(good: usize, total: usize) -> TimeSeries {
        let values: Vec<f64> = (0..total)
            .map(|i| if i < good { 100.0 } else { 150.0 })
            .collect();
        TimeSeries::from_values("c", MetricKind::Latency, 0, 500, &values).unwrap()
    }

    #[test]
    fn fcc_boundary() {
        let r = fcc_latency_compliant(&fcc_fixture(95, 100)).unwrap();
        assert_eq!((r.compliant, r.fraction), (true, 0.95));
        let r = fcc_latency_compliant(&fcc_fixture(94, 100)).unwrap();
        assert_eq!((r.compliant, r.fraction), (false, 0.94));
        let s = latency(&[50.0; 10]);
        let r = fcc_latency_compliant(&s).unwrap();
        assert_eq!((r.compliant, r.fraction), (true, 1.0));
        assert!(matches!(
            fcc_latency_compliant(&downlink(&[1.0])),
            Err(Error::UnsupportedMetric(_))
        ));
    }

    #[test]
    fn parse_names() {
        assert_eq!("rtt".parse::<MetricKind>().unwrap(), MetricKind::Latency);
        assert_eq!("R".parse::<Kpi>().unwrap(), Kpi::Resilience);
        assert!("bogus".parse::<Kpi>().is_err());
    }
}
