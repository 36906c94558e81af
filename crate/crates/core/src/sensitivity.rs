//! KPI sensitivity to temporal and spatial measurement sparsity.
//!
//! A study computes baseline KPIs on full data, then recomputes them on
//! repeatedly down-sampled data. Errors are absolute differences on the
//! normalized scale of [`crate::kpi::normalize`], where the normalization set
//! for a KPI pools every value produced by the study: the baselines and all
//! repeats of all plans. Each repeat yields one error per KPI, the mean over
//! the study's units (series or regions).

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::duration::format_duration_ms;
use crate::error::{Error, Result};
use crate::kpi::{median_gap_ms, normalize, profile, Kpi, TimeSeries, UsabilityConfig};
use crate::seed::{derive_seed, rng_from_seed};
use crate::spatial::KpiMeans;
use crate::stats::{mean, quantile_sorted, sample_std};

pub const DEFAULT_REPEATS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DownsampleKind {
    /// One random sample per consecutive bin of `interval_ms`.
    TemporalFixed { interval_ms: u64 },
    /// Keep `⌈fraction · n⌉` samples chosen without replacement.
    TemporalRandom { fraction: f64 },
    /// Keep `k` cells of each region.
    Spatial { k: usize },
}

impl DownsampleKind {
    pub fn label(&self) -> String {
        match self {
            DownsampleKind::TemporalFixed { interval_ms } => {
                format!("fixed:{}", format_duration_ms(*interval_ms))
            }
            DownsampleKind::TemporalRandom { fraction } => format!("random:{fraction}"),
            DownsampleKind::Spatial { k } => format!("spatial:k={k}"),
        }
    }

    /// Order-independent stream tag for this plan.
    fn tag(&self) -> [u64; 2] {
        match self {
            DownsampleKind::TemporalFixed { interval_ms } => [1, *interval_ms],
            DownsampleKind::TemporalRandom { fraction } => [2, fraction.to_bits()],
            DownsampleKind::Spatial { k } => [3, *k as u64],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownsamplePlan {
    pub kind: DownsampleKind,
    pub repeats: usize,
    pub seed: u64,
}

impl DownsamplePlan {
    pub fn new(kind: DownsampleKind, repeats: usize, seed: u64) -> Self {
        Self {
            kind,
            repeats,
            seed,
        }
    }

    pub fn fixed(interval_ms: u64, repeats: usize, seed: u64) -> Self {
        Self::new(DownsampleKind::TemporalFixed { interval_ms }, repeats, seed)
    }

    pub fn random(fraction: f64, repeats: usize, seed: u64) -> Self {
        Self::new(DownsampleKind::TemporalRandom { fraction }, repeats, seed)
    }

    pub fn spatial(k: usize, repeats: usize, seed: u64) -> Self {
        Self::new(DownsampleKind::Spatial { k }, repeats, seed)
    }

    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be at least 1".into()));
        }
        match self.kind {
            DownsampleKind::TemporalRandom { fraction } if !(fraction > 0.0 && fraction <= 1.0) => {
                Err(Error::InvalidArgument(format!(
                    "fraction must lie in (0, 1], got {fraction}"
                )))
            }
            DownsampleKind::Spatial { k } if !(1..=7).contains(&k) => Err(Error::InvalidArgument(
                format!("k must lie in [1, 7], got {k}"),
            )),
            DownsampleKind::TemporalFixed { interval_ms: 0 } => {
                Err(Error::InvalidArgument("interval must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    fn rng(&self, repeat: usize, unit: usize) -> rand_chacha::ChaCha8Rng {
        let [a, b] = self.kind.tag();
        rng_from_seed(derive_seed(self.seed, &[a, b, repeat as u64, unit as u64]))
    }
}

/// Keeps one uniformly chosen sample from every non-empty bin of
/// `interval_ms`, bins starting at the first timestamp.
pub fn downsample_fixed<R: Rng + ?Sized>(
    series: &TimeSeries,
    interval_ms: u64,
    rng: &mut R,
) -> Result<TimeSeries> {
    let samples = series.samples();
    let first = samples.first().ok_or(Error::EmptyInput)?.timestamp_ms;
    if interval_ms < series.interval_ms() {
        return Err(Error::InvalidArgument(format!(
            "interval {interval_ms} ms is shorter than the series interval {} ms",
            series.interval_ms()
        )));
    }
    let bin_of = |ts: i64| (ts - first) / interval_ms as i64;
    let mut kept = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let bin = bin_of(samples[start].timestamp_ms);
        let len = samples[start..]
            .iter()
            .take_while(|s| bin_of(s.timestamp_ms) == bin)
            .count();
        kept.push(samples[start + rng.random_range(0..len)]);
        start += len;
    }
    Ok(series.derived(kept, interval_ms))
}

/// Keeps `⌈d · n⌉` samples chosen uniformly without replacement, in time
/// order. The result's interval is the median gap of the kept samples, or
/// the mean spacing `Δ · n / kept` when a single sample remains.
pub fn downsample_random<R: Rng + ?Sized>(
    series: &TimeSeries,
    fraction: f64,
    rng: &mut R,
) -> Result<TimeSeries> {
    let n = series.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let keep = ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut picked = index::sample(rng, n, keep).into_vec();
    picked.sort_unstable();
    let samples: Vec<_> = picked.iter().map(|&i| series.samples()[i]).collect();
    let interval = median_gap_ms(&samples).unwrap_or_else(|| {
        ((series.interval_ms() as f64 * n as f64 / keep as f64).round() as u64).max(1)
    });
    Ok(series.derived(samples, interval))
}

/// Uniform choice of `k` cells without replacement, in original order.
pub fn spatial_downsample<T: Clone, R: Rng + ?Sized>(
    cells: &[T],
    k: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if k == 0 || k > cells.len() {
        return Err(Error::InvalidArgument(format!(
            "k must lie in [1, {}], got {k}",
            cells.len()
        )));
    }
    let mut picked = index::sample(rng, cells.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| cells[i].clone()).collect())
}

/// Full-data KPIs of each unit, tied to the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub config: UsabilityConfig,
    pub units: Vec<KpiMeans>,
}

/// Down-sampled KPIs: `repeats[r][u]` is unit `u` in repeat `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trials {
    pub config: UsabilityConfig,
    pub plan: DownsamplePlan,
    pub repeats: Vec<Vec<KpiMeans>>,
}

fn summarize(series: &TimeSeries, config: &UsabilityConfig) -> Result<KpiMeans> {
    let report = profile(series, config)?;
    Ok(report
        .summary()
        .expect("a non-empty series has a window")
        .into())
}

/// Baseline of a temporal study: the summary profile of each series.
pub fn temporal_baseline(series: &[TimeSeries], config: &UsabilityConfig) -> Result<Baseline> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let units = series
        .iter()
        .map(|s| summarize(s, config))
        .collect::<Result<_>>()?;
    Ok(Baseline {
        config: config.clone(),
        units,
    })
}

/// Recomputes every series' summary profile on down-sampled copies.
pub fn temporal_trials(
    series: &[TimeSeries],
    config: &UsabilityConfig,
    plan: &DownsamplePlan,
) -> Result<Trials> {
    plan.validate()?;
    let repeats = (0..plan.repeats)
        .map(|r| {
            series
                .iter()
                .enumerate()
                .map(|(u, s)| {
                    let mut rng = plan.rng(r, u);
                    let down = match plan.kind {
                        DownsampleKind::TemporalFixed { interval_ms } => {
                            downsample_fixed(s, interval_ms, &mut rng)?
                        }
                        DownsampleKind::TemporalRandom { fraction } => {
                            downsample_random(s, fraction, &mut rng)?
                        }
                        DownsampleKind::Spatial { .. } => {
                            return Err(Error::InvalidArgument(
                                "spatial plan in a temporal study".into(),
                            ))
                        }
                    };
                    summarize(&down, config)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Trials {
        config: config.clone(),
        plan: *plan,
        repeats,
    })
}

/// Baseline of a spatial study: each region's mean over all its cells.
pub fn spatial_baseline(regions: &[Vec<KpiMeans>], config: &UsabilityConfig) -> Result<Baseline> {
    let units = regions
        .iter()
        .map(|cells| KpiMeans::mean_of(cells).ok_or(Error::EmptyInput))
        .collect::<Result<Vec<_>>>()?;
    if units.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Baseline {
        config: config.clone(),
        units,
    })
}

/// Region means recomputed from `k` randomly kept cells per region.
pub fn spatial_trials(
    regions: &[Vec<KpiMeans>],
    config: &UsabilityConfig,
    plan: &DownsamplePlan,
) -> Result<Trials> {
    plan.validate()?;
    let DownsampleKind::Spatial { k } = plan.kind else {
        return Err(Error::InvalidArgument(
            "temporal plan in a spatial study".into(),
        ));
    };
    let repeats = (0..plan.repeats)
        .map(|r| {
            regions
                .iter()
                .enumerate()
                .map(|(u, cells)| {
                    let kept = spatial_downsample(cells, k, &mut plan.rng(r, u))?;
                    Ok(KpiMeans::mean_of(&kept).expect("k >= 1"))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Trials {
        config: config.clone(),
        plan: *plan,
        repeats,
    })
}

/// How the confidence interval of the mean error is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CiMethod {
    /// mean ± 1.96 · s / √n
    Normal,
    /// 2.5% / 97.5% percentiles of bootstrap means.
    Bootstrap { resamples: usize, seed: u64 },
}

/// Error statistics of one KPI under one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub plan: String,
    pub kpi: Kpi,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// One entry per repeat.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorStats>,
}

impl ErrorReport {
    pub fn get(&self, plan: &str, kpi: Kpi) -> Option<&ErrorStats> {
        self.rows.iter().find(|r| r.plan == plan && r.kpi == kpi)
    }

    /// `plan,kpi,stat,value,ci_lo,ci_hi`; the interval is filled on mean rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("plan,kpi,stat,value,ci_lo,ci_hi\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},mean,{},{},{}",
                row.plan, row.kpi, row.mean, row.ci_lo, row.ci_hi
            );
            let _ = writeln!(out, "{},{},median,{},,", row.plan, row.kpi, row.median);
            let _ = writeln!(out, "{},{},p95,{},,", row.plan, row.kpi, row.p95);
        }
        out
    }
}

/// Normalized absolute errors of every plan against the baseline.
pub fn error_report(baseline: &Baseline, trials: &[Trials], ci: CiMethod) -> Result<ErrorReport> {
    for t in trials {
        if t.config != baseline.config {
            return Err(Error::ConfigMismatch(format!(
                "plan {} was computed with a different usability config",
                t.plan.kind.label()
            )));
        }
        if let Some(r) = t.repeats.iter().find(|r| r.len() != baseline.units.len()) {
            return Err(Error::LengthMismatch {
                expected: baseline.units.len(),
                actual: r.len(),
            });
        }
    }
    let units = baseline.units.len();
    let mut rows = Vec::new();
    for kpi in Kpi::ALL {
        let mut pooled: Vec<Option<f64>> = baseline.units.iter().map(|m| m.get(kpi)).collect();
        for t in trials {
            pooled.extend(t.repeats.iter().flatten().map(|m| m.get(kpi)));
        }
        let normalized = normalize(&pooled, false)?;
        let (base, mut rest) = normalized.split_at(units);
        for t in trials {
            let (this, tail) = rest.split_at(t.repeats.len() * units);
            rest = tail;
            let errors: Vec<f64> = this
                .chunks(units)
                .map(|rep| {
                    rep.iter()
                        .zip(base)
                        .map(|(d, b)| (d - b).abs())
                        .sum::<f64>()
                        / units as f64
                })
                .collect();
            rows.push(error_stats(t.plan.kind.label(), kpi, errors, ci));
        }
    }
    // group by plan, KPIs in canonical order
    let order: Vec<String> = trials.iter().map(|t| t.plan.kind.label()).collect();
    rows.sort_by_key(|r| (order.iter().position(|p| *p == r.plan), r.kpi));
    Ok(ErrorReport { rows })
}

fn error_stats(plan: String, kpi: Kpi, errors: Vec<f64>, ci: CiMethod) -> ErrorStats {
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let m = mean(&errors);
    let (ci_lo, ci_hi) = match ci {
        CiMethod::Normal => {
            let half = 1.96 * sample_std(&errors) / (errors.len() as f64).sqrt();
            (m - half, m + half)
        }
        CiMethod::Bootstrap { resamples, seed } => {
            let mut rng = rng_from_seed(seed);
            let mut means: Vec<f64> = (0..resamples.max(1))
                .map(|_| {
                    (0..errors.len())
                        .map(|_| errors[rng.random_range(0..errors.len())])
                        .sum::<f64>()
                        / errors.len() as f64
                })
                .collect();
            means.sort_by(f64::total_cmp);
            (
                quantile_sorted(&means, 0.025),
                quantile_sorted(&means, 0.975),
            )
        }
    };
    ErrorStats {
        plan,
        kpi,
        mean: m,
        median: quantile_sorted(&sorted, 0.5),
        p95: quantile_sorted(&sorted, 0.95),
        ci_lo,
        ci_hi,
        errors,
    }
}

/// Baseline, trials for every plan, and the resulting report.
pub fn temporal_study(
    series: &[TimeSeries],
    config: &UsabilityConfig,
    plans: &[DownsamplePlan],
    ci: CiMethod,
) -> Result<ErrorReport> {
    let baseline = temporal_baseline(series, config)?;
    let trials = plans
        .iter()
        .map(|p| temporal_trials(series, config, p))
        .collect::<Result<Vec<_>>>()?;
    error_report(&baseline, &trials, ci)
}

pub fn spatial_study(
    regions: &[Vec<KpiMeans>],
    config: &UsabilityConfig,
    plans: &[DownsamplePlan],
    ci: CiMethod,
) -> Result<ErrorReport> {
    let baseline = spatial_baseline(regions, config)?;
    let trials = plans
        .iter()
        .map(|p| spatial_trials(regions, config, p))
        .collect::<Result<Vec<_>>>()?;
    error_report(&baseline, &trials, ci)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kpi::{MetricKind, DAY_MS};

    const MIN: u64 = 60_000;

    fn series(n: usize) -> TimeSeries {
        let values: Vec<f64> = (0..n).map(|i| (i % 17) as f64 * 10.0).collect();
        TimeSeries::from_values("s", MetricKind::DownlinkSpeed, 0, MIN, &values).unwrap()
    }

    #[test]
    fn fixed_bin_counts() {
        let s = series(43_200);
        let mut rng = rng_from_seed(1);
        let d = downsample_fixed(&s, 3_600_000, &mut rng).unwrap();
        assert_eq!(d.len(), 720);
        assert_eq!(d.interval_ms(), 3_600_000);
        let d = downsample_fixed(&s, 5 * DAY_MS, &mut rng).unwrap();
        assert_eq!(d.len(), 6);
        let d = downsample_fixed(&s, MIN, &mut rng).unwrap();
        assert_eq!(d.samples(), s.samples());
        assert!(downsample_fixed(&s, MIN / 2, &mut rng).is_err());
    }

    #[test]
    fn fixed_picks_one_sample_per_bin() {
        let s = series(600);
        let d = downsample_fixed(&s, 3_600_000, &mut rng_from_seed(3)).unwrap();
        for (i, sample) in d.samples().iter().enumerate() {
            assert_eq!(sample.timestamp_ms / 3_600_000, i as i64);
            assert!(s.samples().contains(sample));
        }
    }

    #[test]
    fn random_retention() {
        let s = series(1000);
        let mut rng = rng_from_seed(2);
        let d = downsample_random(&s, 0.01, &mut rng).unwrap();
        assert_eq!(d.len(), 10);
        assert!(d.samples().iter().all(|x| s.samples().contains(x)));
        assert!(d
            .samples()
            .windows(2)
            .all(|w| w[0].timestamp_ms < w[1].timestamp_ms));
        let d = downsample_random(&s, 1.0, &mut rng).unwrap();
        assert_eq!(d.samples(), s.samples());
        assert_eq!(d.interval_ms(), MIN);
        assert!(downsample_random(&s, 0.0, &mut rng).is_err());
        let d = downsample_random(&s, 0.001, &mut rng).unwrap();
        assert_eq!((d.len(), d.interval_ms()), (1, 1000 * MIN));
    }

    #[test]
    fn spatial_choice() {
        let cells: Vec<u32> = (0..7).collect();
        let mut rng = rng_from_seed(4);
        assert_eq!(spatial_downsample(&cells, 7, &mut rng).unwrap(), cells);
        assert_eq!(spatial_downsample(&cells, 1, &mut rng).unwrap().len(), 1);
        assert!(spatial_downsample(&cells, 0, &mut rng).is_err());
        assert!(spatial_downsample(&cells, 8, &mut rng).is_err());
        let draws: Vec<Vec<u32>> = (0..10)
            .map(|s| spatial_downsample(&cells, 3, &mut rng_from_seed(s)).unwrap())
            .collect();
        assert!(draws.iter().any(|d| d != &draws[0]));
    }

    #[test]
    fn identity_downsample_has_zero_error() {
        let s = vec![series(2880), series(1440)];
        let cfg = UsabilityConfig::new(35.0, DAY_MS);
        let report = temporal_study(
            &s,
            &cfg,
            &[DownsamplePlan::fixed(MIN, 5, 9)],
            CiMethod::Normal,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 5);
        for row in &report.rows {
            assert!(row.errors.iter().all(|&e| e == 0.0), "{row:?}");
            assert_eq!(row.errors.len(), 5);
        }
    }

    #[test]
    fn errors_are_bounded_and_deterministic() {
        let s = vec![series(2880)];
        let cfg = UsabilityConfig::new(35.0, DAY_MS);
        let plans = [
            DownsamplePlan::fixed(3_600_000, 6, 1),
            DownsamplePlan::random(0.1, 6, 1),
        ];
        let a = temporal_study(&s, &cfg, &plans, CiMethod::Normal).unwrap();
        let b = temporal_study(&s, &cfg, &plans, CiMethod::Normal).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 10);
        for row in &a.rows {
            assert!(row.errors.iter().all(|e| (0.0..=1.0).contains(e)));
            assert!(row.ci_lo <= row.mean && row.mean <= row.ci_hi);
        }
        assert_eq!(a.to_csv().lines().count(), 1 + 30);
    }

    #[test]
    fn mismatched_config_rejected() {
        let s = vec![series(1440)];
        let cfg = UsabilityConfig::new(35.0, DAY_MS);
        let baseline = temporal_baseline(&s, &cfg).unwrap();
        let other = UsabilityConfig::new(5.0, DAY_MS);
        let trials = temporal_trials(&s, &other, &DownsamplePlan::fixed(MIN, 2, 0)).unwrap();
        assert!(matches!(
            error_report(&baseline, &[trials], CiMethod::Normal),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn spatial_full_retention_is_exact() {
        let cell = |u: f64| KpiMeans {
            usability: u,
            persistence_ms: 1000.0 * u,
            usable_mean: 10.0,
            variability: 0.1,
            resilience_per_ms: None,
        };
        let regions = vec![(0..7).map(|c| cell(c as f64 / 7.0)).collect::<Vec<_>>()];
        let cfg = UsabilityConfig::new(35.0, DAY_MS);
        let plans = [
            DownsamplePlan::spatial(7, 4, 0),
            DownsamplePlan::spatial(1, 4, 0),
        ];
        let report = spatial_study(&regions, &cfg, &plans, CiMethod::Normal).unwrap();
        assert!(report
            .get("spatial:k=7", Kpi::Usability)
            .unwrap()
            .errors
            .iter()
            .all(|&e| e == 0.0));
        assert!(report.get("spatial:k=1", Kpi::Usability).unwrap().mean > 0.0);
    }

    #[test]
    fn bootstrap_interval_brackets_mean() {
        let stats = error_stats(
            "p".into(),
            Kpi::Usability,
            vec![0.1, 0.2, 0.3, 0.4],
            CiMethod::Bootstrap {
                resamples: 500,
                seed: 1,
            },
        );
        assert!(stats.ci_lo <= stats.mean && stats.mean <= stats.ci_hi);
        assert!((stats.median - 0.25).abs() < 1e-12);
    }
}
