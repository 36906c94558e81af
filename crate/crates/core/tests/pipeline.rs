//! End-to-end library flows: generation, profiling, aggregation, sketches
//! and sensitivity studies.

use std::collections::BTreeMap;

use qoc_core::kpi::{profile, DAY_MS};
use qoc_core::sensitivity::{temporal_study, CiMethod, DownsamplePlan};
use qoc_core::sketch::{QuantileSketch, SketchConfig};
use qoc_core::spatial::{
    aggregate, aggregate_region, assignments, CellId, CellSummary, LayoutMode,
};
use qoc_core::stats::{ks2, lag1_acf, mutual_info, spearman, wasserstein1};
use qoc_core::synth::{generate, ScenarioSpec};
use qoc_core::{Kpi, QocProfile, ScenarioKind, UsabilityConfig};

fn profiles(kind: ScenarioKind, cells: u32, tau: f64) -> Vec<Vec<QocProfile>> {
    let spec = ScenarioSpec::new(kind, 11)
        .with_days(3)
        .with_cells(cells)
        .with_runs(1);
    generate(&spec)
        .unwrap()
        .iter()
        .map(|g| {
            profile(&g.series, &UsabilityConfig::new(tau, DAY_MS))
                .unwrap()
                .profiles()
        })
        .collect()
}

#[test]
fn single_cell_region_reproduces_cell_quantiles() {
    let cell = profiles(ScenarioKind::Variable, 1, 35.0).remove(0);
    let summary = CellSummary::from_profiles(&cell, SketchConfig::default()).unwrap();
    let region = aggregate_region("r", &[&summary]).unwrap();
    assert_eq!(region.cells, 1);
    for kpi in Kpi::ALL {
        for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert_eq!(
                region.sketches.get(kpi).quantile(q).ok(),
                summary.sketches.get(kpi).quantile(q).ok()
            );
        }
    }
}

#[test]
fn region_sketch_equals_sketch_of_all_windows() {
    let cells = profiles(ScenarioKind::Sfd, 7, 35.0);
    let mut map = BTreeMap::new();
    for (i, p) in cells.iter().enumerate() {
        map.insert(CellId::new("hex9-0", i as u8).unwrap(), p.clone());
    }
    let regions = aggregate(&map, 0.01).unwrap();
    let region = &regions["hex9-0"];
    let mut direct = QuantileSketch::new(SketchConfig::default());
    direct
        .extend(cells.iter().flatten().map(|p| p.usability))
        .unwrap();
    assert_eq!(region.sketches.usability, direct);
    assert_eq!(region.cells, 7);
}

#[test]
fn homogeneous_poor_region_quarter_usability_is_zero() {
    let cells = profiles(ScenarioKind::Pp, 7, 35.0);
    let mut map = BTreeMap::new();
    for (i, p) in cells.into_iter().enumerate() {
        map.insert(CellId::new("hex9-1", i as u8).unwrap(), p);
    }
    let region = &aggregate(&map, 0.01).unwrap()["hex9-1"];
    assert_eq!(region.sketches.usability.quantile(0.25).unwrap(), 0.0);
    assert_eq!(region.means.usability, 0.0);
}

#[test]
fn layouts_cover_every_cell_once() {
    for layout in assignments(3) {
        assert_eq!(layout.mapping.len(), 49);
        let mut sources: Vec<_> = layout.mapping.values().collect();
        sources.sort();
        sources.dedup();
        assert_eq!(sources.len(), 49);
        match layout.mode {
            LayoutMode::Homogeneous => assert!(layout.is_homogeneous()),
            LayoutMode::Heterogeneous => assert!(layout.is_heterogeneous()),
            LayoutMode::Random => assert!(!layout.is_homogeneous() && !layout.is_heterogeneous()),
        }
    }
}

#[test]
fn generated_scenarios_are_reproducible_and_distinct() {
    let spec = ScenarioSpec::new(ScenarioKind::Congestion, 5)
        .with_days(1)
        .with_cells(2)
        .with_runs(2);
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].series.samples(), a[1].series.samples());
    let other = generate(&ScenarioSpec { seed: 6, ..spec }).unwrap();
    assert_ne!(a[0].series.samples(), other[0].series.samples());
}

#[test]
fn sensitivity_plans_are_independent_of_order() {
    let spec = ScenarioSpec::new(ScenarioKind::Variable, 2)
        .with_days(2)
        .with_cells(1)
        .with_runs(2);
    let series: Vec<_> = generate(&spec)
        .unwrap()
        .into_iter()
        .map(|g| g.series)
        .collect();
    let cfg = UsabilityConfig::new(35.0, DAY_MS);
    let a = DownsamplePlan::fixed(3_600_000, 4, 9);
    let b = DownsamplePlan::random(0.25, 4, 9);
    let ab = temporal_study(&series, &cfg, &[a, b], CiMethod::Normal).unwrap();
    let ba = temporal_study(&series, &cfg, &[b, a], CiMethod::Normal).unwrap();
    // same draws regardless of plan order; normalization pools both plans
    for row in &ab.rows {
        assert_eq!(ba.get(&row.plan, row.kpi).unwrap().errors, row.errors);
    }
}

#[test]
fn statistics_properties() {
    let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64).collect();
    let y: Vec<f64> = (0..200).map(|i| ((i * 53) % 89) as f64 + 0.5).collect();
    // spearman is invariant under strictly monotone transforms
    let ex: Vec<f64> = x.iter().map(|v| (v / 10.0).exp()).collect();
    assert!((spearman(&x, &y).unwrap() - spearman(&ex, &y).unwrap()).abs() < 1e-12);
    // symmetry and bounds
    assert_eq!(ks2(&x, &y).unwrap(), ks2(&y, &x).unwrap());
    assert!((0.0..=1.0).contains(&ks2(&x, &y).unwrap()));
    assert!((wasserstein1(&x, &y).unwrap() - wasserstein1(&y, &x).unwrap()).abs() < 1e-9);
    assert!((mutual_info(&x, &y, 10).unwrap() - mutual_info(&y, &x, 10).unwrap()).abs() < 1e-12);
    // shift invariance
    let xs: Vec<f64> = x.iter().map(|v| v + 7.5).collect();
    let ys: Vec<f64> = y.iter().map(|v| v + 7.5).collect();
    assert!((wasserstein1(&x, &y).unwrap() - wasserstein1(&xs, &ys).unwrap()).abs() < 1e-9);
    assert!(lag1_acf(&x).unwrap().abs() <= 1.0);
}

#[test]
fn iid_noise_has_small_acf_and_mutual_information() {
    use rand::Rng;
    let mut rng = qoc_core::seed::rng_from_seed(17);
    let a: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
    let b: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
    assert!(lag1_acf(&a).unwrap().abs() < 0.02);
    assert!(mutual_info(&a, &b, 10).unwrap() < 0.01);
}
