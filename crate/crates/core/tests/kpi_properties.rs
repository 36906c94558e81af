//! KPI computation against brute-force oracles, plus windowing and
//! hysteresis properties.

use proptest::prelude::*;
use qoc_core::kpi::{classify_values, profile, Direction, QocProfile, DAY_MS};
use qoc_core::{MetricKind, TimeSeries, UsabilityConfig};

/// Flags by direct comparison; band `b` via an explicit two-state machine.
fn oracle_flags(values: &[f64], higher_better: bool, tau: f64, band: f64) -> Vec<bool> {
    let good = |x: f64, t: f64| if higher_better { x >= t } else { x <= t };
    let mut state = good(values[0], tau);
    let mut out = vec![state];
    for &x in &values[1..] {
        // stay usable until crossing the far edge; recover only past the near edge
        let (stay, enter) = if higher_better {
            (tau * (1.0 - band), tau * (1.0 + band))
        } else {
            (tau * (1.0 + band), tau * (1.0 - band))
        };
        state = if state { good(x, stay) } else { good(x, enter) };
        out.push(state);
    }
    out
}

/// Runs as (usable, values) from a flag array.
fn runs(values: &[f64], flags: &[bool]) -> Vec<(bool, Vec<f64>)> {
    let mut out: Vec<(bool, Vec<f64>)> = Vec::new();
    for (&f, &v) in flags.iter().zip(values) {
        match out.last_mut() {
            Some((g, vals)) if *g == f => vals.push(v),
            _ => out.push((f, vec![v])),
        }
    }
    out
}

fn pct(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[h.ceil() as usize] - sorted[lo])
}

fn oracle(values: &[f64], flags: &[bool], delta: u64) -> QocProfile {
    let all = runs(values, flags);
    let usable: Vec<&Vec<f64>> = all.iter().filter(|r| r.0).map(|r| &r.1).collect();
    let unusable: Vec<&Vec<f64>> = all.iter().filter(|r| !r.0).map(|r| &r.1).collect();
    let n_usable = usable.iter().map(|r| r.len()).sum::<usize>();
    let mut profile = QocProfile {
        usability: n_usable as f64 / values.len() as f64,
        persistence_ms: 0.0,
        usable_mean: 0.0,
        variability: 0.0,
        resilience_per_ms: None,
    };
    if !usable.is_empty() {
        let k = usable.len() as f64;
        profile.persistence_ms = (n_usable as u64 * delta) as f64 / k;
        let mut meds = 0.0;
        let mut vars = 0.0;
        for r in &usable {
            let mut s = r.to_vec();
            s.sort_by(f64::total_cmp);
            meds += pct(&s, 0.5);
            if s.len() > 1 && pct(&s, 0.5) != 0.0 {
                vars += (pct(&s, 0.75) - pct(&s, 0.25)) / pct(&s, 0.5);
            }
        }
        profile.usable_mean = meds / k;
        profile.variability = vars / k;
    }
    if !unusable.is_empty() {
        let d: usize = unusable.iter().map(|r| r.len()).sum();
        profile.resilience_per_ms = Some(unusable.len() as f64 / (d as u64 * delta) as f64);
    }
    profile
}

fn rel_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn values_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![3 => 0.0..100.0f64, 1 => Just(0.0), 1 => Just(50.0), 1 => Just(20.0)],
        1..150,
    )
}

proptest! {
    #[test]
    fn whole_window_profile_matches_oracle(
        values in values_strategy(),
        tau in 1.0..99.0f64,
        latency in any::<bool>(),
        delta in prop_oneof![Just(1_000u64), Just(60_000u64)],
    ) {
        let metric = if latency { MetricKind::Latency } else { MetricKind::DownlinkSpeed };
        let series = TimeSeries::from_values("p", metric, 0, delta, &values).unwrap();
        let cfg = UsabilityConfig::new(tau, values.len() as u64 * delta);
        let report = profile(&series, &cfg).unwrap();
        prop_assert_eq!(report.windows.len(), 1);
        let got = report.windows[0].profile;
        let flags = oracle_flags(&values, !latency, tau, 0.0);
        let want = oracle(&values, &flags, delta);
        prop_assert_eq!(got.usability.to_bits(), want.usability.to_bits());
        prop_assert_eq!(got.persistence_ms.to_bits(), want.persistence_ms.to_bits());
        prop_assert_eq!(got.resilience_per_ms, want.resilience_per_ms);
        prop_assert!(rel_close(got.usable_mean, want.usable_mean), "{} vs {}", got.usable_mean, want.usable_mean);
        prop_assert!(rel_close(got.variability, want.variability), "{} vs {}", got.variability, want.variability);
    }

    #[test]
    fn hysteresis_matches_two_state_oracle(
        values in values_strategy(),
        tau in 5.0..95.0f64,
        band in 0.0..0.49f64,
        higher in any::<bool>(),
    ) {
        let dir = if higher { Direction::HigherIsBetter } else { Direction::LowerIsBetter };
        let got = classify_values(&values, dir, tau, band).unwrap();
        prop_assert_eq!(got, oracle_flags(&values, higher, tau, band));
    }

    #[test]
    fn hysteresis_never_adds_transitions(values in values_strategy(), tau in 5.0..95.0f64, band in 0.0..0.49f64) {
        let transitions = |f: &[bool]| f.windows(2).filter(|w| w[0] != w[1]).count();
        let plain = classify_values(&values, Direction::HigherIsBetter, tau, 0.0).unwrap();
        let banded = classify_values(&values, Direction::HigherIsBetter, tau, band).unwrap();
        prop_assert!(transitions(&banded) <= transitions(&plain));
    }

    #[test]
    fn windows_partition_the_series(
        values in prop::collection::vec(0.0..100.0f64, 1..400),
        window_samples in 1u64..120,
        tau in 1.0..99.0f64,
    ) {
        let series = TimeSeries::from_values("w", MetricKind::UplinkSpeed, 0, 60_000, &values).unwrap();
        let window_ms = window_samples * 60_000;
        let report = profile(&series, &UsabilityConfig::new(tau, window_ms)).unwrap();
        let total: usize = report.windows.iter().map(|w| w.sample_count).sum();
        prop_assert_eq!(total, values.len());
        for w in &report.windows {
            let p = w.profile;
            prop_assert!((0.0..=1.0).contains(&p.usability));
            prop_assert!(p.persistence_ms <= window_ms as f64);
            prop_assert!(p.variability >= 0.0);
            if let Some(r) = p.resilience_per_ms {
                prop_assert!(r >= 1.0 / window_ms as f64);
            }
            prop_assert_eq!(p.usability == 1.0, p.resilience_per_ms.is_none());
        }
    }
}

#[test]
fn sparse_series_persistence_stays_within_window() {
    // one sample every five days, daily windows: every run is capped at T
    let values = [500.0; 6];
    let series =
        TimeSeries::from_values("s", MetricKind::DownlinkSpeed, 0, 5 * DAY_MS, &values).unwrap();
    let report = profile(&series, &UsabilityConfig::new(35.0, DAY_MS)).unwrap();
    assert_eq!(report.windows.len(), 6);
    assert_eq!(report.skipped_windows.len(), 20);
    assert!(report
        .windows
        .iter()
        .all(|w| w.profile.persistence_ms == DAY_MS as f64));
}

#[test]
fn hysteresis_state_carries_across_windows() {
    // τ = 100, b = 0.2: 90 stays usable after 130, so the second window
    // opens usable even though 90 < τ
    let values = [130.0, 130.0, 90.0, 90.0];
    let series =
        TimeSeries::from_values("h", MetricKind::DownlinkSpeed, 0, 60_000, &values).unwrap();
    let cfg = UsabilityConfig::new(100.0, 120_000).with_hysteresis(0.2);
    let report = profile(&series, &cfg).unwrap();
    assert_eq!(report.windows[1].profile.usability, 1.0);
}
