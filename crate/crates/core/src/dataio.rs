//! Monthly series ingestion, min-max scaling, lag windowing and
//! chronological splitting.
//!
//! The input format is a UTF-8 CSV with the header `date,gwl_m,rainfall_mm`
//! and dates written as `YYYY-MM`. Records must form a gap-free monthly
//! span; rows may appear in any order and are sorted on load.

use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column header every input file must carry.
pub const CSV_HEADER: [&str; 3] = ["date", "gwl_m", "rainfall_mm"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad header {found:?}, expected `date,gwl_m,rainfall_mm`")]
    Header { found: String },
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: non-finite value in column `{column}`")]
    NonFinite { line: u64, column: &'static str },
    #[error("month gap: {missing} missing between {before} and {after}")]
    MonthGap {
        before: YearMonth,
        missing: YearMonth,
        after: YearMonth,
    },
    #[error("duplicate record for {0}")]
    Duplicate(YearMonth),
    #[error("empty dataset")]
    Empty,
    #[error("inconsistent series lengths: {timestamps} timestamps, {gwl} gwl, {rainfall} rainfall")]
    Length {
        timestamps: usize,
        gwl: usize,
        rainfall: usize,
    },
    #[error("scaling range end must be in 1..={len}, got {end}")]
    ScalingRange { end: usize, len: usize },
    #[error("lag must be at least 1")]
    ZeroLag,
    #[error("dataset of length {len} is too short for lag {lag}")]
    TooShort { len: usize, lag: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    Fraction(f64),
    #[error("split of {n} samples at fraction {fraction} leaves one side empty")]
    EmptySplit { n: usize, fraction: f64 },
    #[error("need k >= 2 and at least k samples, got k = {k}, n = {n}")]
    Folds { n: usize, k: usize },
}

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    /// 1..=12
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    pub fn next(self) -> Self {
        self.plus_months(1)
    }

    pub fn plus_months(self, months: usize) -> Self {
        let zero_based = self.year as i64 * 12 + (self.month as i64 - 1) + months as i64;
        Self {
            year: zero_based.div_euclid(12) as i32,
            month: zero_based.rem_euclid(12) as u32 + 1,
        }
    }

    /// Zero-based month of year, for indexing monthly tables.
    pub fn month_index(self) -> usize {
        (self.month - 1) as usize
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, m) = s.split_once('-').ok_or_else(|| format!("date `{s}` is not YYYY-MM"))?;
        if y.len() != 4 || m.len() != 2 {
            return Err(format!("date `{s}` is not YYYY-MM"));
        }
        let year: i32 = y.parse().map_err(|_| format!("bad year in `{s}`"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in `{s}`"))?;
        YearMonth::new(year, month).ok_or_else(|| format!("month out of range in `{s}`"))
    }
}

impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Monthly groundwater level (m, depth to water) and rainfall (mm) records.
///
/// Construction validates that the three columns have equal nonzero length,
/// that months are consecutive, and that all values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    timestamps: Vec<YearMonth>,
    gwl: Vec<f64>,
    rainfall: Vec<f64>,
}

impl TimeSeriesDataset {
    pub fn new(timestamps: Vec<YearMonth>, gwl: Vec<f64>, rainfall: Vec<f64>) -> Result<Self, DataError> {
        if timestamps.len() != gwl.len() || gwl.len() != rainfall.len() {
            return Err(DataError::Length {
                timestamps: timestamps.len(),
                gwl: gwl.len(),
                rainfall: rainfall.len(),
            });
        }
        if timestamps.is_empty() {
            return Err(DataError::Empty);
        }
        for (row, (g, r)) in gwl.iter().zip(&rainfall).enumerate() {
            if !g.is_finite() {
                return Err(DataError::NonFinite {
                    line: row as u64 + 2,
                    column: "gwl_m",
                });
            }
            if !r.is_finite() {
                return Err(DataError::NonFinite {
                    line: row as u64 + 2,
                    column: "rainfall_mm",
                });
            }
        }
        for pair in timestamps.windows(2) {
            let (before, after) = (pair[0], pair[1]);
            if after == before {
                return Err(DataError::Duplicate(after));
            }
            if after != before.next() {
                return Err(DataError::MonthGap {
                    before,
                    missing: before.next(),
                    after,
                });
            }
        }
        Ok(Self {
            timestamps,
            gwl,
            rainfall,
        })
    }

    /// Builds a dataset whose first record is `start`.
    pub fn from_start(start: YearMonth, gwl: Vec<f64>, rainfall: Vec<f64>) -> Result<Self, DataError> {
        let timestamps = (0..gwl.len()).map(|i| start.plus_months(i)).collect();
        Self::new(timestamps, gwl, rainfall)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[YearMonth] {
        &self.timestamps
    }

    pub fn gwl(&self) -> &[f64] {
        &self.gwl
    }

    pub fn rainfall(&self) -> &[f64] {
        &self.rainfall
    }

    pub fn start(&self) -> YearMonth {
        self.timestamps[0]
    }

    pub fn end(&self) -> YearMonth {
        self.timestamps[self.timestamps.len() - 1]
    }

    /// Writes the dataset in the input CSV format.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        for i in 0..self.len() {
            writer.write_record([
                self.timestamps[i].to_string(),
                self.gwl[i].to_string(),
                self.rainfall[i].to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Reads a monthly series from `path`.
pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeriesDataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file)
}

/// Parses the CSV format from any reader. See [`load_csv`].
pub fn read_csv<R: std::io::Read>(input: R) -> Result<TimeSeriesDataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().map_err(|e| DataError::Malformed {
        line: 1,
        reason: e.to_string(),
    })?;
    if header.iter().ne(CSV_HEADER) {
        return Err(DataError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut rows: Vec<(YearMonth, f64, f64, u64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(DataError::Malformed {
                line,
                reason: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let date: YearMonth = record[0]
            .parse()
            .map_err(|reason| DataError::Malformed { line, reason })?;
        let gwl = parse_value(&record[1], line, "gwl_m")?;
        let rain = parse_value(&record[2], line, "rainfall_mm")?;
        rows.push((date, gwl, rain, line));
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    rows.sort_by_key(|row| row.0);

    let timestamps = rows.iter().map(|r| r.0).collect();
    let gwl = rows.iter().map(|r| r.1).collect();
    let rainfall = rows.iter().map(|r| r.2).collect();
    TimeSeriesDataset::new(timestamps, gwl, rainfall)
}

fn parse_value(field: &str, line: u64, column: &'static str) -> Result<f64, DataError> {
    let value: f64 = field.parse().map_err(|_| DataError::Malformed {
        line,
        reason: format!("`{field}` in column `{column}` is not a number"),
    })?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(DataError::NonFinite { line, column })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Gwl,
    Rainfall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    fn of(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { min, max }
    }

    /// `max == min`; such a feature normalizes to 0.
    pub fn is_constant(&self) -> bool {
        self.max == self.min
    }

    pub fn normalize(&self, x: f64) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    pub fn denormalize(&self, z: f64) -> f64 {
        if self.is_constant() {
            self.min
        } else {
            z * (self.max - self.min) + self.min
        }
    }
}

/// Per-feature min/max used for the affine map onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub gwl: FeatureRange,
    pub rainfall: FeatureRange,
}

impl ScalingParams {
    pub fn range(&self, feature: Feature) -> &FeatureRange {
        match feature {
            Feature::Gwl => &self.gwl,
            Feature::Rainfall => &self.rainfall,
        }
    }

    /// Maps one raw `(gwl, rainfall)` step into normalized units.
    pub fn normalize_step(&self, gwl: f64, rainfall: f64) -> [f64; 2] {
        [self.gwl.normalize(gwl), self.rainfall.normalize(rainfall)]
    }
}

/// Fits min/max over records `[0, range_end)` only, so that test records
/// never influence the scaling.
pub fn fit_minmax(dataset: &TimeSeriesDataset, range_end: usize) -> Result<ScalingParams, DataError> {
    if range_end == 0 || range_end > dataset.len() {
        return Err(DataError::ScalingRange {
            end: range_end,
            len: dataset.len(),
        });
    }
    Ok(ScalingParams {
        gwl: FeatureRange::of(&dataset.gwl[..range_end]),
        rainfall: FeatureRange::of(&dataset.rainfall[..range_end]),
    })
}

/// A dataset mapped through [`ScalingParams`]. Values outside the fitted
/// range are not clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub timestamps: Vec<YearMonth>,
    pub gwl: Vec<f64>,
    pub rainfall: Vec<f64>,
}

impl NormalizedSeries {
    pub fn len(&self) -> usize {
        self.gwl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gwl.is_empty()
    }
}

pub fn normalize(dataset: &TimeSeriesDataset, scaling: &ScalingParams) -> NormalizedSeries {
    NormalizedSeries {
        timestamps: dataset.timestamps.clone(),
        gwl: normalize_values(&dataset.gwl, scaling, Feature::Gwl),
        rainfall: normalize_values(&dataset.rainfall, scaling, Feature::Rainfall),
    }
}

pub fn normalize_values(values: &[f64], scaling: &ScalingParams, feature: Feature) -> Vec<f64> {
    let range = scaling.range(feature);
    values.iter().map(|&x| range.normalize(x)).collect()
}

/// Inverse of [`normalize_values`].
pub fn denormalize(values: &[f64], scaling: &ScalingParams, feature: Feature) -> Vec<f64> {
    let range = scaling.range(feature);
    values.iter().map(|&z| range.denormalize(z)).collect()
}

/// Lagged input sequences paired with next-month normalized gwl targets.
///
/// Sample `i` of a freshly windowed series reads steps `i..i + lag` and
/// targets step `i + lag`; `origin_index` records that target position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowedSamples {
    pub inputs: Vec<Vec<[f64; 2]>>,
    pub targets: Vec<f64>,
    pub origin_index: Vec<usize>,
}

impl WindowedSamples {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn lag(&self) -> Option<usize> {
        self.inputs.first().map(Vec::len)
    }

    pub fn slice(&self, range: Range<usize>) -> WindowedSamples {
        WindowedSamples {
            inputs: self.inputs[range.clone()].to_vec(),
            targets: self.targets[range.clone()].to_vec(),
            origin_index: self.origin_index[range].to_vec(),
        }
    }

    /// Samples at `indices`, in the given order.
    pub fn select(&self, indices: impl IntoIterator<Item = usize>) -> WindowedSamples {
        let mut out = WindowedSamples::default();
        for i in indices {
            out.inputs.push(self.inputs[i].clone());
            out.targets.push(self.targets[i]);
            out.origin_index.push(self.origin_index[i]);
        }
        out
    }

    /// The `(gwl, rainfall)` pair of each window's final step.
    pub fn last_steps(&self) -> Vec<[f64; 2]> {
        self.inputs
            .iter()
            .map(|w| *w.last().expect("windows are nonempty"))
            .collect()
    }
}

pub fn make_windows(series: &NormalizedSeries, lag: usize) -> Result<WindowedSamples, DataError> {
    if lag == 0 {
        return Err(DataError::ZeroLag);
    }
    if series.len() <= lag {
        return Err(DataError::TooShort { len: series.len(), lag });
    }
    let steps: Vec<[f64; 2]> = series.gwl.iter().zip(&series.rainfall).map(|(&g, &r)| [g, r]).collect();
    let count = series.len() - lag;
    Ok(WindowedSamples {
        inputs: (0..count).map(|i| steps[i..i + lag].to_vec()).collect(),
        targets: (0..count).map(|i| series.gwl[i + lag]).collect(),
        origin_index: (lag..series.len()).collect(),
    })
}

/// Number of training samples under the floor rule.
pub fn split_point(n: usize, train_fraction: f64) -> Result<usize, DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::Fraction(train_fraction));
    }
    let n_train = (train_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(DataError::EmptySplit {
            n,
            fraction: train_fraction,
        });
    }
    Ok(n_train)
}

/// First `floor(fraction * N)` samples train, the rest test. No shuffling.
pub fn chrono_split(
    samples: &WindowedSamples,
    train_fraction: f64,
) -> Result<(WindowedSamples, WindowedSamples), DataError> {
    let n_train = split_point(samples.len(), train_fraction)?;
    Ok((samples.slice(0..n_train), samples.slice(n_train..samples.len())))
}

/// Contiguous cross-validation blocks over `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Range<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn sample_count(&self) -> usize {
        self.folds.last().map_or(0, |r| r.end)
    }

    /// Indices outside fold `fold`, in ascending order.
    pub fn training_indices(&self, fold: usize) -> impl Iterator<Item = usize> + '_ {
        let held_out = self.folds[fold].clone();
        (0..self.sample_count()).filter(move |i| !held_out.contains(i))
    }
}

/// The first `n mod k` folds get `ceil(n / k)` samples, the rest `floor(n / k)`.
pub fn kfold_plan(n: usize, k: usize) -> Result<FoldPlan, DataError> {
    if k < 2 || n < k {
        return Err(DataError::Folds { n, k });
    }
    let base = n / k;
    let extra = n % k;
    let mut start = 0;
    let folds = (0..k)
        .map(|f| {
            let size = base + usize::from(f < extra);
            let range = start..start + size;
            start += size;
            range
        })
        .collect();
    Ok(FoldPlan { folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ym(year: i32, month: u32) -> YearMonth {
        YearMonth::new(year, month).unwrap()
    }

    fn dataset(gwl: Vec<f64>, rain: Vec<f64>) -> TimeSeriesDataset {
        TimeSeriesDataset::from_start(ym(2000, 1), gwl, rain).unwrap()
    }

    #[test]
    fn parses_three_rows() {
        let text = "date,gwl_m,rainfall_mm\n2000-01,6.2,120.5\n2000-02,6.4,80.0\n2000-03,6.1,95.2\n";
        let ds = read_csv(text.as_bytes()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.gwl()[1], 6.4);
        assert_eq!(ds.rainfall()[2], 95.2);
        assert_eq!(ds.end(), ym(2000, 3));
    }

    #[test]
    fn sorts_unordered_rows() {
        let text = "date,gwl_m,rainfall_mm\n2000-02,6.4,80.0\n2000-01,6.2,120.5\n";
        let ds = read_csv(text.as_bytes()).unwrap();
        assert_eq!(ds.timestamps(), &[ym(2000, 1), ym(2000, 2)]);
        assert_eq!(ds.gwl(), &[6.2, 6.4]);
    }

    #[test]
    fn reports_month_gap() {
        let text = "date,gwl_m,rainfall_mm\n2000-01,6.2,120.5\n2000-03,6.1,95.2\n";
        let err = read_csv(text.as_bytes()).unwrap_err();
        match err {
            DataError::MonthGap { missing, .. } => assert_eq!(missing, ym(2000, 2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_text(text).contains("2000-02"));
    }

    fn err_text(text: &str) -> String {
        read_csv(text.as_bytes()).unwrap_err().to_string()
    }

    #[test]
    fn header_only_is_empty() {
        assert_eq!(err_text("date,gwl_m,rainfall_mm\n"), "empty dataset");
    }

    #[test]
    fn malformed_row_names_line() {
        let text = "date,gwl_m,rainfall_mm\n2000-01,6.2,120.5\n2000-02,abc,80.0\n";
        match read_csv(text.as_bytes()).unwrap_err() {
            DataError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_csv("date,gwl_m,rainfall_mm\n2000-13,1,1\n".as_bytes()),
            Err(DataError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_non_finite_and_bad_header() {
        let text = "date,gwl_m,rainfall_mm\n2000-01,NaN,1\n";
        assert!(matches!(
            read_csv(text.as_bytes()),
            Err(DataError::NonFinite {
                line: 2,
                column: "gwl_m"
            })
        ));
        let text = "date,gwl,rain\n2000-01,1,1\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(DataError::Header { .. })));
        let text = "date,gwl_m,rainfall_mm\n2000-01,1,1\n2000-01,2,2\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(DataError::Duplicate(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_csv("/nonexistent/series.csv"), Err(DataError::Io { .. })));
    }

    #[test]
    fn year_month_arithmetic() {
        assert_eq!(ym(2018, 12).next(), ym(2019, 1));
        assert_eq!(ym(2000, 1).plus_months(227), ym(2018, 12));
        assert_eq!("2019-07".parse::<YearMonth>().unwrap(), ym(2019, 7));
        assert!("2019-7".parse::<YearMonth>().is_err());
        assert_eq!(ym(2019, 7).to_string(), "2019-07");
    }

    #[test]
    fn minmax_over_prefix() {
        let ds = dataset(vec![2.0, 4.0, 6.0], vec![5.0, 5.0, 5.0]);
        let s = fit_minmax(&ds, 3).unwrap();
        assert_eq!((s.gwl.min, s.gwl.max), (2.0, 6.0));
        assert!(s.rainfall.is_constant());
        assert!(!s.gwl.is_constant());

        let s = fit_minmax(&ds, 2).unwrap();
        assert_eq!((s.gwl.min, s.gwl.max), (2.0, 4.0));
        assert!(fit_minmax(&ds, 0).is_err());
        assert!(fit_minmax(&ds, 4).is_err());
    }

    #[test]
    fn normalize_maps_endpoints_and_passes_outliers() {
        let ds = dataset(vec![2.0, 4.0, 6.0], vec![5.0, 5.0, 5.0]);
        let s = fit_minmax(&ds, 3).unwrap();
        let n = normalize(&ds, &s);
        assert_eq!(n.gwl, vec![0.0, 0.5, 1.0]);
        assert_eq!(n.rainfall, vec![0.0, 0.0, 0.0]);
        assert_eq!(normalize_values(&[8.0], &s, Feature::Gwl), vec![1.5]);
        assert_eq!(denormalize(&[0.5], &s, Feature::Gwl), vec![4.0]);
    }

    #[test]
    fn window_counts_and_boundary() {
        let ds = dataset((0..13).map(f64::from).collect(), vec![1.0; 13]);
        let s = fit_minmax(&ds, 13).unwrap();
        let w = make_windows(&normalize(&ds, &s), 12).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.targets[0], 1.0);
        assert_eq!(w.origin_index, vec![12]);
        assert!(matches!(make_windows(&normalize(&ds, &s), 0), Err(DataError::ZeroLag)));
        assert!(matches!(
            make_windows(&normalize(&ds, &s), 13),
            Err(DataError::TooShort { .. })
        ));

        let ds = dataset(vec![1.0; 228], (0..228).map(f64::from).collect());
        let s = fit_minmax(&ds, 228).unwrap();
        assert_eq!(make_windows(&normalize(&ds, &s), 12).unwrap().len(), 216);
    }

    fn samples(n: usize) -> WindowedSamples {
        let mut w = WindowedSamples::default();
        for i in 0..n {
            w.inputs.push(vec![[i as f64, 0.0]]);
            w.targets.push(i as f64);
            w.origin_index.push(i + 1);
        }
        w
    }

    #[test]
    fn chrono_split_floor_rule() {
        let (train, test) = chrono_split(&samples(228), 0.8).unwrap();
        assert_eq!((train.len(), test.len()), (182, 46));
        let (train, test) = chrono_split(&samples(10), 0.8).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert!(matches!(
            chrono_split(&samples(1), 0.8),
            Err(DataError::EmptySplit { .. })
        ));
        assert!(matches!(chrono_split(&samples(10), 1.0), Err(DataError::Fraction(_))));
    }

    #[test]
    fn kfold_sizes() {
        let sizes = |n, k| -> Vec<usize> { kfold_plan(n, k).unwrap().folds.iter().map(|r| r.len()).collect() };
        assert_eq!(sizes(100, 5), vec![20; 5]);
        assert_eq!(sizes(103, 5), vec![21, 21, 21, 20, 20]);
        assert!(kfold_plan(4, 5).is_err());
        assert!(kfold_plan(10, 1).is_err());
        let plan = kfold_plan(10, 5).unwrap();
        assert_eq!(
            plan.training_indices(1).collect::<Vec<_>>(),
            vec![0, 1, 4, 5, 6, 7, 8, 9]
        );
    }

    proptest! {
        #[test]
        fn normalize_round_trip(values in prop::collection::vec(-1e6f64..1e6, 2..50)) {
            let n = values.len();
            let ds = dataset(values.clone(), vec![0.0; n]);
            let s = fit_minmax(&ds, n).unwrap();
            let back = denormalize(&normalize(&ds, &s).gwl, &s, Feature::Gwl);
            for (a, b) in values.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(s.gwl.max.abs()).max(1.0));
            }
        }

        #[test]
        fn window_count_is_len_minus_lag(len in 2usize..80, lag_seed in 0usize..1000) {
            let lag = 1 + lag_seed % (len - 1);
            let ds = dataset(vec![0.5; len], vec![0.5; len]);
            let s = fit_minmax(&ds, len).unwrap();
            let w = make_windows(&normalize(&ds, &s), lag).unwrap();
            prop_assert_eq!(w.len(), len - lag);
            prop_assert!(w.inputs.iter().all(|x| x.len() == lag));
            prop_assert!(w.origin_index.windows(2).all(|p| p[0] < p[1]));
        }

        #[test]
        fn split_is_chronological(n in 2usize..500, fraction in 0.05f64..0.95) {
            if let Ok((train, test)) = chrono_split(&samples(n), fraction) {
                prop_assert!(train.origin_index.last() < test.origin_index.first());
                prop_assert_eq!(train.len() + test.len(), n);
            }
        }

        #[test]
        fn folds_partition(n in 2usize..400, k in 2usize..12) {
            prop_assume!(n >= k);
            let plan = kfold_plan(n, k).unwrap();
            let mut seen = vec![0u8; n];
            for r in &plan.folds {
                for i in r.clone() { seen[i] += 1; }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let lens: Vec<usize> = plan.folds.iter().map(|r| r.len()).collect();
            prop_assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
        }
    }
}
