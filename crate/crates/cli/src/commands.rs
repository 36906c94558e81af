use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use qoc_core::kpi::{fcc_latency_compliant, profile, UsabilityConfig};
use qoc_core::sensitivity::{self, CiMethod, DownsamplePlan};
use qoc_core::sketch::SketchConfig;
use qoc_core::spatial::{aggregate_region, region_quantile, CellSummary};
use qoc_core::synth::{generate, scenario_params, ScenarioSpec};
use qoc_core::{assignments, Kpi, KpiMeans, LayoutMode, MetricKind, ScenarioKind, TimeSeries};
use serde::Serialize;

use crate::files::{
    read_json, write_json, write_text, LayoutCell, LayoutFile, ProfileFile, RegionFile,
    SeriesProfile, SimulatedSeries, SimulationFile, WindowRow, FORMAT_VERSION,
};
use crate::input::{read_series, write_series};
use crate::{
    Align, CiArg, CliError, OutputFormat, ProfileOptions, StudyOptions, TemporalMode, WindowArg,
};

pub fn simulate(
    scenario: ScenarioKind,
    days: u64,
    dt: u64,
    cells: u32,
    runs: u32,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let spec = ScenarioSpec::new(scenario, seed)
        .with_days(days)
        .with_dt(dt)
        .with_cells(cells)
        .with_runs(runs);
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut sidecar = SimulationFile {
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
        params: scenario_params(scenario),
        series: Vec::new(),
    };
    for g in generate(&spec)? {
        write_series(&out.join(format!("{}.csv", g.series.cell_id())), &g.series)?;
        sidecar.series.push(SimulatedSeries {
            id: g.series.cell_id().to_string(),
            cell: g.cell,
            run: g.run,
            seed: g.seed,
            realized: g.realized,
        });
    }
    write_json(&out.join(format!("{scenario}_params.json")), &sidecar)
}

/// Usability config for a set of series; a whole-series window covers the
/// longest of them.
fn usability_config(
    opts: &ProfileOptions,
    series: &[TimeSeries],
) -> Result<UsabilityConfig, CliError> {
    let window_ms = match opts.window {
        WindowArg::Fixed(ms) => ms,
        WindowArg::Whole => series
            .iter()
            .map(|s| s.span_ms() + s.interval_ms())
            .max()
            .unwrap_or(1),
    };
    let mut config = UsabilityConfig::new(opts.tau, window_ms)
        .with_hysteresis(opts.hysteresis)
        .aligned_to_epoch(opts.align == Align::Calendar);
    if let Some(g) = opts.gap_split {
        config = config.with_gap_split(g);
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn read_all(
    paths: &[&Path],
    opts: &ProfileOptions,
    cell_id: Option<&str>,
) -> Result<Vec<TimeSeries>, CliError> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_series(p, opts.metric, cell_id, opts.interval)?);
    }
    Ok(all)
}

pub fn kpi(
    input: &Path,
    opts: &ProfileOptions,
    fcc_check: bool,
    cell_id: Option<&str>,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if fcc_check && opts.metric != MetricKind::Latency {
        return Err(CliError::Usage("--fcc-check needs --metric latency".into()));
    }
    let series = read_all(&[input], opts, cell_id)?;
    let config = usability_config(opts, &series)?;
    let mut file = ProfileFile {
        format_version: FORMAT_VERSION,
        metric: opts.metric.as_str().to_string(),
        config: config.clone(),
        series: Vec::new(),
    };
    for s in &series {
        let report = profile(s, &config)?;
        file.series.push(SeriesProfile {
            cell_id: s.cell_id().to_string(),
            interval_ms: s.interval_ms(),
            windows: report.windows.iter().map(WindowRow::from).collect(),
            skipped_windows: report.skipped_windows.clone(),
            summary: report.summary().expect("non-empty series").into(),
            fcc: if fcc_check {
                Some(fcc_latency_compliant(s)?)
            } else {
                None
            },
        });
    }
    let text = match format {
        OutputFormat::Json => serde_json::to_string_pretty(&file).expect("serializable") + "\n",
        OutputFormat::Csv => profile_csv(&file),
    };
    match out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `cell_id,row,start_ms,end_ms,sample_count,U,P,M,V,R,fcc_compliant`;
/// `row` is `window` or `summary`.
fn profile_csv(file: &ProfileFile) -> String {
    let mut out =
        String::from("cell_id,row,start_ms,end_ms,sample_count,U,P,M,V,R,fcc_compliant\n");
    let kpis = |k: &KpiMeans| {
        format!(
            "{},{},{},{},{}",
            k.usability,
            k.persistence_ms,
            k.usable_mean,
            k.variability,
            opt(k.resilience_per_ms)
        )
    };
    for s in &file.series {
        for w in &s.windows {
            let _ = writeln!(
                out,
                "{},window,{},{},{},{},",
                s.cell_id,
                w.start_ms,
                w.end_ms,
                w.sample_count,
                kpis(&w.kpis)
            );
        }
        let samples: usize = s.windows.iter().map(|w| w.sample_count).sum();
        let first = s.windows.first().map_or(0, |w| w.start_ms);
        let last = s.windows.last().map_or(0, |w| w.end_ms);
        let fcc = s.fcc.map(|f| f.compliant.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},summary,{first},{last},{samples},{},{fcc}",
            s.cell_id,
            kpis(&s.summary)
        );
    }
    out
}

pub fn layout(mode: LayoutMode, seed: u64, run: u32, out: &Path) -> Result<(), CliError> {
    let chosen = assignments(seed)
        .into_iter()
        .find(|a| a.mode == mode)
        .expect("every mode has a layout");
    let cells = chosen
        .mapping
        .iter()
        .map(|(id, src)| LayoutCell {
            region: id.region.clone(),
            series_id: src.series_id(run),
            child_index: Some(id.child_index),
            scenario: Some(src.scenario),
            cell: Some(src.cell),
        })
        .collect();
    write_json(
        out,
        &LayoutFile {
            format_version: FORMAT_VERSION,
            mode: Some(mode),
            seed: Some(seed),
            run: Some(run),
            cells,
        },
    )
}

/// Series of all profile files, keyed by cell id; the files must share one
/// usability config.
fn read_profiles(
    inputs: &[std::path::PathBuf],
) -> Result<(UsabilityConfig, Vec<SeriesProfile>), CliError> {
    let mut config: Option<UsabilityConfig> = None;
    let mut series: Vec<SeriesProfile> = Vec::new();
    for path in inputs {
        let file: ProfileFile = read_json(path)?;
        match &config {
            Some(c) if *c != file.config => {
                return Err(CliError::Data(format!(
                    "{}: usability config differs from the other inputs",
                    path.display()
                )))
            }
            Some(_) => {}
            None => config = Some(file.config.clone()),
        }
        for s in file.series {
            if series.iter().any(|x| x.cell_id == s.cell_id) {
                return Err(CliError::Data(format!(
                    "series '{}' appears twice",
                    s.cell_id
                )));
            }
            series.push(s);
        }
    }
    Ok((config.expect("at least one input"), series))
}

/// Groups series by region: layout order within each region.
fn group_by_region<'a>(
    series: &'a [SeriesProfile],
    layout: Option<&LayoutFile>,
) -> Result<BTreeMap<String, Vec<&'a SeriesProfile>>, CliError> {
    let mut groups: BTreeMap<String, Vec<&SeriesProfile>> = BTreeMap::new();
    let Some(layout) = layout else {
        groups.insert("all".into(), series.iter().collect());
        return Ok(groups);
    };
    let regions = layout.region_of()?;
    if let Some(s) = series
        .iter()
        .find(|s| !regions.contains_key(s.cell_id.as_str()))
    {
        return Err(CliError::Data(format!(
            "series '{}' is not in the layout",
            s.cell_id
        )));
    }
    for cell in &layout.cells {
        let entry = groups.entry(cell.region.clone()).or_default();
        if let Some(s) = series.iter().find(|s| s.cell_id == cell.series_id) {
            entry.push(s);
        }
    }
    if let Some((region, _)) = groups.iter().find(|(_, v)| v.is_empty()) {
        return Err(CliError::Data(format!(
            "region '{region}' has no input series"
        )));
    }
    Ok(groups)
}

pub fn aggregate(
    inputs: &[std::path::PathBuf],
    layout: Option<&Path>,
    alpha: f64,
    out: &Path,
) -> Result<(), CliError> {
    let sketch_config = SketchConfig::new(alpha).map_err(|e| CliError::Usage(e.to_string()))?;
    let layout: Option<LayoutFile> = layout.map(read_json).transpose()?;
    let (_, series) = read_profiles(inputs)?;
    for (region, members) in group_by_region(&series, layout.as_ref())? {
        let summaries = members
            .iter()
            .map(|s| {
                let profiles: Vec<_> = s.windows.iter().map(|w| w.kpis.into()).collect();
                CellSummary::from_profiles(&profiles, sketch_config)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&CellSummary> = summaries.iter().collect();
        let file = RegionFile {
            format_version: FORMAT_VERSION,
            alpha,
            cell_ids: members.iter().map(|s| s.cell_id.clone()).collect(),
            region: aggregate_region(region.clone(), &refs)?,
        };
        write_json(&out.join(format!("{region}.json")), &file)?;
    }
    Ok(())
}

pub fn query(region: &Path, kpi: Kpi, q: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(CliError::Usage(format!("q must lie in [0, 1], got {q}")));
    }
    let file: RegionFile = read_json(region)?;
    if file.sketches().get(kpi).total() == 0 {
        return Err(CliError::Data(format!("region has no {kpi} values")));
    }
    println!("{}", region_quantile(&file.region, kpi, q)?);
    Ok(())
}

fn ci_method(study: &StudyOptions) -> CiMethod {
    match study.ci {
        CiArg::Normal => CiMethod::Normal,
        CiArg::Bootstrap => CiMethod::Bootstrap {
            resamples: 1000,
            seed: study.seed,
        },
    }
}

#[derive(Serialize)]
struct StudyMeta<'a> {
    format_version: u32,
    seed: u64,
    repeats: usize,
    ci: &'a str,
    config: &'a UsabilityConfig,
    plans: Vec<String>,
    units: Vec<String>,
}

fn write_report(
    study: &StudyOptions,
    config: &UsabilityConfig,
    plans: &[DownsamplePlan],
    units: Vec<String>,
    report: &sensitivity::ErrorReport,
) -> Result<(), CliError> {
    write_text(&study.out, &report.to_csv())?;
    let meta = StudyMeta {
        format_version: FORMAT_VERSION,
        seed: study.seed,
        repeats: study.repeats,
        ci: match study.ci {
            CiArg::Normal => "normal",
            CiArg::Bootstrap => "bootstrap",
        },
        config,
        plans: plans.iter().map(|p| p.kind.label()).collect(),
        units,
    };
    let mut meta_path = study.out.clone().into_os_string();
    meta_path.push(".meta.json");
    write_json(Path::new(&meta_path), &meta)
}

pub fn temporal(
    inputs: &[std::path::PathBuf],
    opts: &ProfileOptions,
    mode: TemporalMode,
    intervals: &[u64],
    fractions: &[f64],
    study: &StudyOptions,
) -> Result<(), CliError> {
    let plans: Vec<DownsamplePlan> = match mode {
        TemporalMode::Fixed if intervals.is_empty() => {
            return Err(CliError::Usage("--mode fixed needs --intervals".into()))
        }
        TemporalMode::Random if fractions.is_empty() => {
            return Err(CliError::Usage("--mode random needs --fractions".into()))
        }
        TemporalMode::Fixed => intervals
            .iter()
            .map(|&i| DownsamplePlan::fixed(i, study.repeats, study.seed))
            .collect(),
        TemporalMode::Random => fractions
            .iter()
            .map(|&f| DownsamplePlan::random(f, study.repeats, study.seed))
            .collect(),
    };
    let paths: Vec<&Path> = inputs.iter().map(|p| p.as_path()).collect();
    let series = read_all(&paths, opts, None)?;
    let config = usability_config(opts, &series)?;
    let report = sensitivity::temporal_study(&series, &config, &plans, ci_method(study))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let units = series.iter().map(|s| s.cell_id().to_string()).collect();
    write_report(study, &config, &plans, units, &report)
}

pub fn spatial(
    inputs: &[std::path::PathBuf],
    layout: &Path,
    ks: &[usize],
    study: &StudyOptions,
) -> Result<(), CliError> {
    let layout: LayoutFile = read_json(layout)?;
    let (config, series) = read_profiles(inputs)?;
    let groups = group_by_region(&series, Some(&layout))?;
    let regions: Vec<Vec<KpiMeans>> = groups
        .values()
        .map(|members| members.iter().map(|s| s.summary).collect())
        .collect();
    let plans: Vec<DownsamplePlan> = ks
        .iter()
        .map(|&k| DownsamplePlan::spatial(k, study.repeats, study.seed))
        .collect();
    let report = sensitivity::spatial_study(&regions, &config, &plans, ci_method(study))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    write_report(
        study,
        &config,
        &plans,
        groups.keys().cloned().collect(),
        &report,
    )
}
