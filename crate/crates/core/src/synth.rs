//! Synthetic download-speed scenarios.
//!
//! Seven scenarios drive the evaluation: two stationary normals (PG, PP), a
//! diurnally modulated normal (Periodic), a heavy-tailed log-normal
//! (Variable), and three two-state Markov-modulated normals (SFD, LRD,
//! Congestion). Every draw is clamped into the scenario's hard bounds, and
//! each series draws its mean offsets once.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kpi::{MetricKind, TimeSeries};
use crate::seed::{derive_seed, rng_from_seed};

pub const MINUTE_MS: u64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Pg,
    Pp,
    Periodic,
    Variable,
    Sfd,
    Lrd,
    Congestion,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::Pg,
        ScenarioKind::Pp,
        ScenarioKind::Periodic,
        ScenarioKind::Variable,
        ScenarioKind::Sfd,
        ScenarioKind::Lrd,
        ScenarioKind::Congestion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Pg => "pg",
            ScenarioKind::Pp => "pp",
            ScenarioKind::Periodic => "periodic",
            ScenarioKind::Variable => "variable",
            ScenarioKind::Sfd => "sfd",
            ScenarioKind::Lrd => "lrd",
            ScenarioKind::Congestion => "congestion",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Clamped normal emission with a per-series mean offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionParams {
    pub mu: f64,
    /// Half-width of the uniform relative offset drawn once per series.
    pub jitter_frac: f64,
    pub lo: f64,
    pub hi: f64,
    /// Coefficient of variation; σ = cv · μ.
    pub cv: f64,
}

impl EmissionParams {
    const fn new(mu: f64, lo: f64, hi: f64, cv: f64) -> Self {
        Self {
            mu,
            jitter_frac: 0.05,
            lo,
            hi,
            cv,
        }
    }
}

/// Two-state chain: state 0 emits `state0`, state 1 emits `state1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmmParams {
    /// P(s_t = 1 | s_{t-1} = 0)
    pub p_entry: f64,
    /// P(s_t = 1 | s_{t-1} = 1)
    pub p_self: f64,
    pub state0: EmissionParams,
    pub state1: EmissionParams,
}

impl HmmParams {
    pub fn mean_sojourn_state0(&self) -> f64 {
        1.0 / self.p_entry
    }

    pub fn mean_sojourn_state1(&self) -> f64 {
        1.0 / (1.0 - self.p_self)
    }

    /// Long-run fraction of steps spent in state 1.
    pub fn stationary_state1(&self) -> f64 {
        self.p_entry / (self.p_entry + 1.0 - self.p_self)
    }
}

/// Normal around `mu_base + amplitude · cos(4π t / 1440)`, t in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicParams {
    pub mu_base: f64,
    pub amplitude: f64,
    pub jitter_frac: f64,
    pub lo: f64,
    pub hi: f64,
    /// σ = sigma_frac · mu_base.
    pub sigma_frac: f64,
}

impl PeriodicParams {
    pub fn mean_at(&self, mu_base: f64, amplitude: f64, t_minutes: f64) -> f64 {
        mu_base + amplitude * (4.0 * std::f64::consts::PI * t_minutes / 1440.0).cos()
    }
}

/// Clamped log-normal with a per-series offset on the log-mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub log_mean: f64,
    pub jitter_frac: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ScenarioParams {
    Normal(EmissionParams),
    Periodic(PeriodicParams),
    LogNormal(LogNormalParams),
    Hmm(HmmParams),
}

impl ScenarioParams {
    /// Hard bounds of every emitted value.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            ScenarioParams::Normal(e) => (e.lo, e.hi),
            ScenarioParams::Periodic(p) => (p.lo, p.hi),
            ScenarioParams::LogNormal(l) => (l.lo, l.hi),
            ScenarioParams::Hmm(h) => (h.state0.lo.min(h.state1.lo), h.state0.hi.max(h.state1.hi)),
        }
    }
}

const USABLE: EmissionParams = EmissionParams::new(500.0, 400.0, 600.0, 0.05);
const UNUSABLE: EmissionParams = EmissionParams::new(2.0, 1.0, 5.0, 0.20);

/// Parameters of one scenario.
pub fn scenario_params(kind: ScenarioKind) -> ScenarioParams {
    match kind {
        ScenarioKind::Pg => ScenarioParams::Normal(USABLE),
        ScenarioKind::Pp => ScenarioParams::Normal(EmissionParams::new(5.0, 1.0, 20.0, 0.05)),
        ScenarioKind::Periodic => ScenarioParams::Periodic(PeriodicParams {
            mu_base: 500.0,
            amplitude: 500.0,
            jitter_frac: 0.01,
            lo: 1.0,
            hi: 1000.0,
            sigma_frac: 0.05,
        }),
        ScenarioKind::Variable => ScenarioParams::LogNormal(LogNormalParams {
            log_mean: 500f64.ln(),
            jitter_frac: 0.05,
            sigma: 2.5,
            lo: 1.0,
            hi: 1000.0,
        }),
        ScenarioKind::Sfd => ScenarioParams::Hmm(HmmParams {
            p_entry: 1.0 / 180.0,
            p_self: 1.0 - 1.0 / 30.0,
            state0: USABLE,
            state1: UNUSABLE,
        }),
        ScenarioKind::Lrd => ScenarioParams::Hmm(HmmParams {
            p_entry: 1.0 / 4320.0,
            p_self: 1.0 - 1.0 / 720.0,
            state0: USABLE,
            state1: UNUSABLE,
        }),
        // state 0 is the congested regime, state 1 the relief
        ScenarioKind::Congestion => ScenarioParams::Hmm(HmmParams {
            p_entry: 1.0 / 360.0,
            p_self: 1.0 - 1.0 / 60.0,
            state0: EmissionParams::new(10.0, 5.0, 25.0, 0.20),
            state1: EmissionParams::new(50.0, 30.0, 50.0, 0.30),
        }),
    }
}

pub fn scenario_catalog() -> BTreeMap<ScenarioKind, ScenarioParams> {
    ScenarioKind::ALL
        .into_iter()
        .map(|k| (k, scenario_params(k)))
        .collect()
}

/// What to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub duration_minutes: u64,
    pub dt_minutes: u64,
    pub cells: u32,
    pub runs: u32,
    pub seed: u64,
    /// Chain steps discarded before the first emitted sample.
    #[serde(default)]
    pub burn_in_steps: u64,
}

impl ScenarioSpec {
    /// Thirty days of one-minute samples, seven cells, fifty runs.
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Self {
            kind,
            duration_minutes: 43_200,
            dt_minutes: 1,
            cells: 7,
            runs: 50,
            seed,
            burn_in_steps: 0,
        }
    }

    pub fn with_days(mut self, days: u64) -> Self {
        self.duration_minutes = days * 1440;
        self
    }

    pub fn with_cells(mut self, cells: u32) -> Self {
        self.cells = cells;
        self
    }

    pub fn with_runs(mut self, runs: u32) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_dt(mut self, dt_minutes: u64) -> Self {
        self.dt_minutes = dt_minutes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt_minutes == 0 || self.duration_minutes == 0 {
            return Err(Error::InvalidArgument(
                "duration and dt must be positive".into(),
            ));
        }
        if !self.duration_minutes.is_multiple_of(self.dt_minutes) {
            return Err(Error::InvalidArgument(format!(
                "duration {} min is not a multiple of dt {} min",
                self.duration_minutes, self.dt_minutes
            )));
        }
        if self.cells == 0 || self.runs == 0 {
            return Err(Error::InvalidArgument(
                "cells and runs must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration_minutes / self.dt_minutes) as usize
    }
}

/// One generated series plus the offsets drawn for it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSeries {
    pub kind: ScenarioKind,
    pub cell: u32,
    pub run: u32,
    pub seed: u64,
    /// Per-series realized means (after the random offset).
    pub realized: BTreeMap<String, f64>,
    /// Hidden chain states for Markov-modulated scenarios.
    pub states: Option<Vec<u8>>,
    pub series: TimeSeries,
}

/// Series identifier used for generated data, e.g. `sfd-c3-r0`.
pub fn series_id(kind: ScenarioKind, cell: u32, run: u32) -> String {
    format!("{kind}-c{cell}-r{run}")
}

/// Generates `cells × runs` series, run-major.
pub fn generate(spec: &ScenarioSpec) -> Result<Vec<GeneratedSeries>> {
    spec.validate()?;
    let mut out = Vec::with_capacity((spec.cells * spec.runs) as usize);
    for run in 0..spec.runs {
        for cell in 0..spec.cells {
            out.push(generate_one(spec, cell, run)?);
        }
    }
    Ok(out)
}

/// Generates the series of one `(cell, run)` pair.
pub fn generate_one(spec: &ScenarioSpec, cell: u32, run: u32) -> Result<GeneratedSeries> {
    spec.validate()?;
    let seed = derive_seed(
        spec.seed,
        &[spec.kind.index() as u64, u64::from(cell), u64::from(run)],
    );
    let mut rng = rng_from_seed(seed);
    let steps = spec.steps();
    let mut realized = BTreeMap::new();
    let mut states = None;

    let values: Vec<f64> = match scenario_params(spec.kind) {
        ScenarioParams::Normal(e) => {
            let mu = jittered(&mut rng, e.mu, e.jitter_frac);
            realized.insert("mu".into(), mu);
            let dist = normal(mu, e.cv * mu)?;
            (0..steps)
                .map(|_| dist.sample(&mut rng).clamp(e.lo, e.hi))
                .collect()
        }
        ScenarioParams::Periodic(p) => {
            let base = jittered(&mut rng, p.mu_base, p.jitter_frac);
            let amplitude = jittered(&mut rng, p.amplitude, p.jitter_frac);
            realized.insert("mu_base".into(), base);
            realized.insert("amplitude".into(), amplitude);
            realized.insert("sigma".into(), p.sigma_frac * base);
            let noise = normal(0.0, p.sigma_frac * base)?;
            (0..steps)
                .map(|i| {
                    let t = (i as u64 * spec.dt_minutes) as f64;
                    (p.mean_at(base, amplitude, t) + noise.sample(&mut rng)).clamp(p.lo, p.hi)
                })
                .collect()
        }
        ScenarioParams::LogNormal(l) => {
            let log_mean = jittered(&mut rng, l.log_mean, l.jitter_frac);
            realized.insert("log_mean".into(), log_mean);
            let dist = LogNormal::new(log_mean, l.sigma)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (0..steps)
                .map(|_| dist.sample(&mut rng).clamp(l.lo, l.hi))
                .collect()
        }
        ScenarioParams::Hmm(h) => {
            let mu0 = jittered(&mut rng, h.state0.mu, h.state0.jitter_frac);
            let mu1 = jittered(&mut rng, h.state1.mu, h.state1.jitter_frac);
            realized.insert("state0_mu".into(), mu0);
            realized.insert("state1_mu".into(), mu1);
            let emit = [
                (normal(mu0, h.state0.cv * mu0)?, h.state0),
                (normal(mu1, h.state1.cv * mu1)?, h.state1),
            ];
            let walk = hmm_walk_from(&h, spec.burn_in_steps, steps, &mut rng);
            let values = walk
                .iter()
                .map(|&s| {
                    let (dist, e) = &emit[s as usize];
                    dist.sample(&mut rng).clamp(e.lo, e.hi)
                })
                .collect();
            states = Some(walk);
            values
        }
    };

    let series = TimeSeries::from_values(
        series_id(spec.kind, cell, run),
        MetricKind::DownlinkSpeed,
        0,
        spec.dt_minutes * MINUTE_MS,
        &values,
    )?;
    Ok(GeneratedSeries {
        kind: spec.kind,
        cell,
        run,
        seed,
        realized,
        states,
        series,
    })
}

fn jittered<R: Rng>(rng: &mut R, value: f64, frac: f64) -> f64 {
    if frac == 0.0 {
        return value;
    }
    value * (1.0 + rng.random_range(-frac..=frac))
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sd).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// State sequence of the two-state chain started in state 0.
pub fn hmm_walk<R: Rng>(params: &HmmParams, steps: usize, rng: &mut R) -> Vec<u8> {
    hmm_walk_from(params, 0, steps, rng)
}

fn hmm_walk_from<R: Rng>(params: &HmmParams, burn_in: u64, steps: usize, rng: &mut R) -> Vec<u8> {
    let mut state = 0u8;
    let step = |state: u8, rng: &mut R| {
        let p_one = if state == 0 {
            params.p_entry
        } else {
            params.p_self
        };
        u8::from(rng.random::<f64>() < p_one)
    };
    for _ in 0..burn_in {
        state = step(state, rng);
    }
    let mut out = Vec::with_capacity(steps);
    for i in 0..steps {
        if i > 0 {
            state = step(state, rng);
        }
        out.push(state);
    }
    out
}

/// Lengths of maximal runs of `target` in a state sequence.
pub fn sojourns(states: &[u8], target: u8) -> Vec<usize> {
    let mut out = Vec::new();
    let mut current = 0;
    for &s in states {
        if s == target {
            current += 1;
        } else if current > 0 {
            out.push(current);
            current = 0;
        }
    }
    if current > 0 {
        out.push(current);
    }
    out
}
