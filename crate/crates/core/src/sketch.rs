//! Mergeable relative-error quantile sketch (DDSketch).
//!
//! Positive values land in logarithmic buckets `(γ^(i-1), γ^i]` with
//! `γ = (1 + α) / (1 - α)`; returning the bucket's midpoint `2γ^i / (γ + 1)`
//! bounds the relative error of every quantile estimate by `α`. Values below
//! [`MIN_INDEXABLE`] go to a dedicated zero bucket. Bucket counts add, so two
//! sketches with the same `α` merge exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;

/// Smallest value indexed into a logarithmic bucket.
pub const MIN_INDEXABLE: f64 = 1e-9;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    alpha: f64,
    max_buckets: Option<usize>,
}

impl SketchConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "relative accuracy must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            max_buckets: None,
        })
    }

    /// Bounds the number of log buckets. Once exceeded, the lowest buckets
    /// are folded upward, which voids the guarantee for low quantiles.
    pub fn with_max_buckets(mut self, max_buckets: usize) -> Result<Self> {
        if max_buckets == 0 {
            return Err(Error::InvalidArgument(
                "max_buckets must be positive".into(),
            ));
        }
        self.max_buckets = Some(max_buckets);
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn max_buckets(&self) -> Option<usize> {
        self.max_buckets
    }

    pub fn gamma(&self) -> f64 {
        (1.0 + self.alpha) / (1.0 - self.alpha)
    }
}

impl Default for SketchConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            max_buckets: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSketch {
    config: SketchConfig,
    ln_gamma: f64,
    bins: BTreeMap<i32, u64>,
    zero_count: u64,
    total: u64,
    min: f64,
    max: f64,
}

impl QuantileSketch {
    pub fn new(config: SketchConfig) -> Self {
        Self {
            ln_gamma: config.gamma().ln(),
            config,
            bins: BTreeMap::new(),
            zero_count: 0,
            total: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Ok(Self::new(SketchConfig::new(alpha)?))
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.config.gamma()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn zero_count(&self) -> u64 {
        self.zero_count
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Smallest inserted value, `None` when empty.
    pub fn min(&self) -> Option<f64> {
        (self.total > 0).then_some(self.min)
    }

    pub fn max(&self) -> Option<f64> {
        (self.total > 0).then_some(self.max)
    }

    /// Non-empty buckets as `(index, count)` in ascending index order.
    pub fn bins(&self) -> impl Iterator<Item = (i32, u64)> + '_ {
        self.bins.iter().map(|(&i, &c)| (i, c))
    }

    /// Bucket index `⌈ln(x) / ln(γ)⌉` of a value at or above [`MIN_INDEXABLE`].
    pub fn bucket_index(&self, value: f64) -> i32 {
        (value.ln() / self.ln_gamma).ceil() as i32
    }

    /// Representative value of bucket `index`.
    pub fn bucket_value(&self, index: i32) -> f64 {
        let gamma = self.gamma();
        2.0 * gamma.powi(index) / (gamma + 1.0)
    }

    pub fn insert(&mut self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite value {value}")));
        }
        if value < 0.0 {
            return Err(Error::NegativeValue(value));
        }
        if value < MIN_INDEXABLE {
            self.zero_count += 1;
        } else {
            *self.bins.entry(self.bucket_index(value)).or_insert(0) += 1;
            self.collapse();
        }
        self.total += 1;
        self.min = self.min.min(value);
        self.max = self.max.max(value);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, values: I) -> Result<()> {
        values.into_iter().try_for_each(|v| self.insert(v))
    }

    fn collapse(&mut self) {
        let Some(limit) = self.config.max_buckets else {
            return;
        };
        while self.bins.len() > limit {
            let (_, count) = self.bins.pop_first().expect("non-empty");
            *self.bins.first_entry().expect("limit >= 1").get_mut() += count;
        }
    }

    /// Estimated `q`-quantile: the value at rank `⌊q (n - 1)⌋ + 1`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!(
                "quantile must lie in [0, 1], got {q}"
            )));
        }
        if self.total == 0 {
            return Err(Error::EmptyInput);
        }
        let rank = (q * (self.total - 1) as f64).floor() as u64 + 1;
        if rank <= self.zero_count {
            return Ok(0.0);
        }
        let mut seen = self.zero_count;
        for (&index, &count) in &self.bins {
            seen += count;
            if seen >= rank {
                return Ok(self.bucket_value(index));
            }
        }
        unreachable!("rank {rank} exceeds total {}", self.total)
    }

    /// Adds `other`'s counts into `self`.
    pub fn merge(&mut self, other: &QuantileSketch) -> Result<()> {
        if self.config.alpha != other.config.alpha {
            return Err(Error::IncompatibleAccuracy {
                left: self.config.alpha,
                right: other.config.alpha,
            });
        }
        for (&index, &count) in &other.bins {
            *self.bins.entry(index).or_insert(0) += count;
        }
        self.zero_count += other.zero_count;
        self.total += other.total;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        self.collapse();
        Ok(())
    }

    /// Merge of two sketches into a new one.
    pub fn merged(a: &QuantileSketch, b: &QuantileSketch) -> Result<QuantileSketch> {
        let mut out = a.clone();
        out.merge(b)?;
        Ok(out)
    }

    pub fn to_record(&self) -> SketchRecord {
        SketchRecord {
            version: FORMAT_VERSION,
            alpha: self.config.alpha,
            max_buckets: self.config.max_buckets,
            zero_count: self.zero_count,
            total: self.total,
            min: self.min(),
            max: self.max(),
            bins: self.bins().collect(),
        }
    }

    pub fn from_record(record: SketchRecord) -> Result<Self> {
        if record.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported sketch version {}",
                record.version
            )));
        }
        let mut config = SketchConfig::new(record.alpha)?;
        if let Some(m) = record.max_buckets {
            config = config.with_max_buckets(m)?;
        }
        let mut sketch = QuantileSketch::new(config);
        let mut sum = record.zero_count;
        let mut last = None;
        for &(index, count) in &record.bins {
            if count == 0 || last.is_some_and(|l| l >= index) {
                return Err(Error::Parse(
                    "bins must be sorted, unique and non-zero".into(),
                ));
            }
            last = Some(index);
            sum += count;
            sketch.bins.insert(index, count);
        }
        if sum != record.total {
            return Err(Error::Parse(format!(
                "total {} does not match bucket counts {sum}",
                record.total
            )));
        }
        match (record.total, record.min, record.max) {
            (0, None, None) => {}
            (n, Some(lo), Some(hi)) if n > 0 && lo <= hi => {
                sketch.min = lo;
                sketch.max = hi;
            }
            _ => return Err(Error::Parse("min/max inconsistent with total".into())),
        }
        sketch.zero_count = record.zero_count;
        sketch.total = record.total;
        Ok(sketch)
    }

    /// Versioned JSON text record.
    pub fn serialize(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("sketch records always serialize")
    }

    pub fn deserialize(blob: &str) -> Result<Self> {
        let record: SketchRecord =
            serde_json::from_str(blob).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_record(record)
    }
}

/// Serialized form of a [`QuantileSketch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchRecord {
    pub version: u32,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_buckets: Option<usize>,
    pub zero_count: u64,
    pub total: u64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub bins: Vec<(i32, u64)>,
}

impl Serialize for QuantileSketch {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuantileSketch {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let record = SketchRecord::deserialize(deserializer)?;
        QuantileSketch::from_record(record).map_err(serde::de::Error::custom)
    }
}
