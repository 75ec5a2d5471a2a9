//! Logarithmic binning of entity indices against collaboration size,
//! least-squares power-law fits `⟨N_I⟩ = C_I · N_aut^p_I`, per-bin
//! log-normal fits and the exponent decomposition check.

pub mod plot;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::metrics::EntityProfile;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScalingError {
    #[error("no data points")]
    Empty,
    #[error("bins_per_decade and min_bin_count must be at least 1")]
    BadBinning,
    #[error("invalid point (n_aut = {n_aut}, value = {value}): n_aut must be >= 1 and value >= 0")]
    InvalidPoint { n_aut: f64, value: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("bin at n_aut = {center} has non-positive {estimator} value {value}; log undefined")]
    NonPositiveValue {
        center: f64,
        estimator: Estimator,
        value: f64,
    },
    #[error("need at least 2 positive values, got {0}")]
    TooFewPositive(usize),
    #[error("invalid value {0}: must be finite and >= 0")]
    InvalidValue(f64),
    #[error("fits are not comparable: {0}")]
    MismatchedFits(String),
    #[error("bad csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for ScalingError {
    fn from(e: csv::Error) -> Self {
        ScalingError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Estimator {
    #[default]
    Mean,
    Median,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Mean => "mean",
            Estimator::Median => "median",
        }
    }

    pub fn parse(s: &str) -> Option<Estimator> {
        match s {
            "mean" => Some(Estimator::Mean),
            "median" => Some(Estimator::Median),
            _ => None,
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    /// Geometric mean of the member n_aut values.
    pub center: f64,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
}

impl Bin {
    pub fn value(&self, estimator: Estimator) -> f64 {
        match estimator {
            Estimator::Mean => self.mean,
            Estimator::Median => self.median,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCurve {
    pub bins: Vec<Bin>,
    pub bins_per_decade: u32,
    pub min_bin_count: usize,
}

impl BinnedCurve {
    /// Keeps bins whose center lies in `[min, max]`.
    pub fn restrict(&self, min: Option<f64>, max: Option<f64>) -> BinnedCurve {
        let bins = self
            .bins
            .iter()
            .filter(|b| min.is_none_or(|m| b.center >= m) && max.is_none_or(|m| b.center <= m))
            .copied()
            .collect();
        BinnedCurve {
            bins,
            bins_per_decade: self.bins_per_decade,
            min_bin_count: self.min_bin_count,
        }
    }
}

/// Index of the logarithmic bin holding `n_aut`; bin `k` spans
/// `[10^(k/bpd), 10^((k+1)/bpd))`.
pub fn bin_key(n_aut: f64, bins_per_decade: u32) -> i64 {
    (n_aut.log10() * bins_per_decade as f64 + 1e-9).floor() as i64
}

fn check_binning(bins_per_decade: u32, min_bin_count: usize) -> Result<(), ScalingError> {
    if bins_per_decade == 0 || min_bin_count == 0 {
        return Err(ScalingError::BadBinning);
    }
    Ok(())
}

/// Groups points by logarithmic bin, preserving input order inside a bin.
fn group_points(
    points: &[(f64, f64)],
    bins_per_decade: u32,
) -> Result<BTreeMap<i64, Vec<(f64, f64)>>, ScalingError> {
    let mut groups: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for &(n_aut, value) in points {
        if !(n_aut >= 1.0 && n_aut.is_finite() && value >= 0.0 && value.is_finite()) {
            return Err(ScalingError::InvalidPoint { n_aut, value });
        }
        groups.entry(bin_key(n_aut, bins_per_decade)).or_default().push((n_aut, value));
    }
    Ok(groups)
}

fn geometric_center(members: &[(f64, f64)]) -> f64 {
    let log_sum: f64 = members.iter().map(|(n, _)| n.ln()).sum();
    (log_sum / members.len() as f64).exp()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Bins `(n_aut, value)` points logarithmically in n_aut and records the
/// mean and median value of each bin. Bins with fewer than `min_bin_count`
/// points are dropped.
pub fn log_bin(
    points: &[(f64, f64)],
    bins_per_decade: u32,
    min_bin_count: usize,
) -> Result<BinnedCurve, ScalingError> {
    check_binning(bins_per_decade, min_bin_count)?;
    if points.is_empty() {
        return Err(ScalingError::Empty);
    }
    let groups = group_points(points, bins_per_decade)?;
    let mut bins = Vec::new();
    for members in groups.values() {
        if members.len() < min_bin_count {
            continue;
        }
        let mut values: Vec<f64> = members.iter().map(|(_, v)| *v).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        bins.push(Bin {
            center: geometric_center(members),
            count: members.len(),
            mean,
            median: median(&mut values),
        });
    }
    if bins.is_empty() {
        return Err(ScalingError::InsufficientData(format!(
            "every bin has fewer than {min_bin_count} entities"
        )));
    }
    Ok(BinnedCurve {
        bins,
        bins_per_decade,
        min_bin_count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// Standard error of the slope; zero when only two bins are fitted.
    pub exponent_stderr: f64,
    pub r_squared: f64,
    pub n_bins_used: usize,
    pub estimator: Estimator,
    pub bins_per_decade: u32,
    pub min_bin_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`. Needs at least two distinct x.
pub fn ols(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        ss_res += r * r;
        ss_tot += (y - my) * (y - my);
    }
    // Below this the spread of y is rounding noise and y is treated as constant.
    let floor = 1e-24 * ys.iter().map(|y| y * y).sum::<f64>().max(f64::MIN_POSITIVE);
    let r_squared = if ss_tot > floor {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= floor {
        1.0
    } else {
        0.0
    };
    let slope_stderr = if xs.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    }
}

/// Fits `value = C · n_aut^p` by least squares in log-log space over the
/// bin representatives chosen by `estimator`.
pub fn fit_power_law(curve: &BinnedCurve, estimator: Estimator) -> Result<ScalingFit, ScalingError> {
    if curve.bins.len() < 2 {
        return Err(ScalingError::InsufficientData(format!(
            "power-law fit needs at least 2 bins, have {}",
            curve.bins.len()
        )));
    }
    let mut xs = Vec::with_capacity(curve.bins.len());
    let mut ys = Vec::with_capacity(curve.bins.len());
    for b in &curve.bins {
        let v = b.value(estimator);
        if v <= 0.0 || !v.is_finite() {
            return Err(ScalingError::NonPositiveValue {
                center: b.center,
                estimator,
                value: v,
            });
        }
        xs.push(b.center.ln());
        ys.push(v.ln());
    }
    let line = ols(&xs, &ys);
    Ok(ScalingFit {
        exponent: line.slope,
        amplitude: line.intercept.exp(),
        exponent_stderr: line.slope_stderr,
        r_squared: line.r_squared,
        n_bins_used: curve.bins.len(),
        estimator,
        bins_per_decade: curve.bins_per_decade,
        min_bin_count: curve.min_bin_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalFit {
    pub mu_log: f64,
    pub sigma_log: f64,
    /// Fraction of inputs equal to zero; those are left out of the fit.
    pub zero_fraction: f64,
    pub n_positive: usize,
}

/// Sample mean and sample standard deviation of `ln v` over the positive
/// values.
pub fn fit_lognormal(values: &[f64]) -> Result<LogNormalFit, ScalingError> {
    let mut logs = Vec::with_capacity(values.len());
    for &v in values {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ScalingError::InvalidValue(v));
        }
        if v > 0.0 {
            logs.push(v.ln());
        }
    }
    if logs.len() < 2 {
        return Err(ScalingError::TooFewPositive(logs.len()));
    }
    let n = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / (n - 1.0);
    Ok(LogNormalFit {
        mu_log: mu,
        sigma_log: var.sqrt(),
        zero_fraction: (values.len() - logs.len()) as f64 / values.len() as f64,
        n_positive: logs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalBin {
    pub center: f64,
    pub count: usize,
    pub fit: LogNormalFit,
}

/// Log-normal fit of the values falling in each logarithmic n_aut bin.
/// Bins with fewer than `min_bin_count` points or fewer than two positive
/// values are skipped.
pub fn binned_lognormal(
    points: &[(f64, f64)],
    bins_per_decade: u32,
    min_bin_count: usize,
) -> Result<Vec<LogNormalBin>, ScalingError> {
    check_binning(bins_per_decade, min_bin_count)?;
    let groups = group_points(points, bins_per_decade)?;
    let mut out = Vec::new();
    for members in groups.values() {
        if members.len() < min_bin_count {
            continue;
        }
        let values: Vec<f64> = members.iter().map(|(_, v)| *v).collect();
        match fit_lognormal(&values) {
            Ok(fit) => out.push(LogNormalBin {
                center: geometric_center(members),
                count: members.len(),
                fit,
            }),
            Err(ScalingError::TooFewPositive(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Spread `max - min` of the per-bin log widths.
pub fn sigma_spread(bins: &[LogNormalBin]) -> Option<f64> {
    let (lo, hi) = bins.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| {
        (lo.min(b.fit.sigma_log), hi.max(b.fit.sigma_log))
    });
    (!bins.is_empty()).then_some(hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub p_pap: f64,
    pub p_cit: f64,
    pub p_totcit: f64,
    /// `p_totcit - (p_cit + p_pap)`.
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks `p_totcit = p_cit + p_pap` for three fits made with the same
/// binning and estimator.
pub fn decompose_exponents(
    fit_pap: &ScalingFit,
    fit_cit: &ScalingFit,
    fit_totcit: &ScalingFit,
    tolerance: f64,
) -> Result<Decomposition, ScalingError> {
    for (name, f) in [("mean citations", fit_cit), ("total citations", fit_totcit)] {
        if f.bins_per_decade != fit_pap.bins_per_decade {
            return Err(ScalingError::MismatchedFits(format!(
                "{name} fit uses {} bins per decade, papers fit uses {}",
                f.bins_per_decade, fit_pap.bins_per_decade
            )));
        }
        if f.min_bin_count != fit_pap.min_bin_count {
            return Err(ScalingError::MismatchedFits(format!(
                "{name} fit uses min_bin_count {}, papers fit uses {}",
                f.min_bin_count, fit_pap.min_bin_count
            )));
        }
        if f.estimator != fit_pap.estimator {
            return Err(ScalingError::MismatchedFits(format!(
                "{name} fit uses the {} estimator, papers fit uses {}",
                f.estimator, fit_pap.estimator
            )));
        }
        if f.n_bins_used != fit_pap.n_bins_used {
            return Err(ScalingError::MismatchedFits(format!(
                "{name} fit uses {} bins, papers fit uses {}",
                f.n_bins_used, fit_pap.n_bins_used
            )));
        }
    }
    let residual = fit_totcit.exponent - (fit_cit.exponent + fit_pap.exponent);
    Ok(Decomposition {
        p_pap: fit_pap.exponent,
        p_cit: fit_cit.exponent,
        p_totcit: fit_totcit.exponent,
        residual,
        tolerance,
        passed: residual.abs() <= tolerance,
    })
}

/// The entity indices whose scaling with N_aut is studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalingIndex {
    Papers,
    MeanCitations,
    TotalCitations,
    FractionalCitations,
    IndividualCitations,
}

impl ScalingIndex {
    pub const ALL: [ScalingIndex; 5] = [
        ScalingIndex::Papers,
        ScalingIndex::MeanCitations,
        ScalingIndex::TotalCitations,
        ScalingIndex::FractionalCitations,
        ScalingIndex::IndividualCitations,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalingIndex::Papers => "n_pap",
            ScalingIndex::MeanCitations => "mean_cit",
            ScalingIndex::TotalCitations => "n_totcit",
            ScalingIndex::FractionalCitations => "n_fcit",
            ScalingIndex::IndividualCitations => "n_icit",
        }
    }

    pub fn value(self, p: &EntityProfile) -> f64 {
        match self {
            ScalingIndex::Papers => p.n_pap as f64,
            ScalingIndex::MeanCitations => p.mean_cit(),
            ScalingIndex::TotalCitations => p.n_totcit as f64,
            ScalingIndex::FractionalCitations => p.n_fcit,
            ScalingIndex::IndividualCitations => p.n_icit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingOptions {
    pub bins_per_decade: u32,
    pub min_bin_count: usize,
    pub estimator: Estimator,
    pub naut_min: Option<f64>,
    pub naut_max: Option<f64>,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions {
            bins_per_decade: 5,
            min_bin_count: 3,
            estimator: Estimator::Mean,
            naut_min: None,
            naut_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexScaling {
    pub index: ScalingIndex,
    pub curve: BinnedCurve,
    pub fit: Result<ScalingFit, ScalingError>,
}

/// Bins every index of `profiles` against `mean_naut` and fits each curve.
///
/// Fails when the binning itself fails; a fit failure for one index is
/// kept in that index's entry.
pub fn analyze_profiles(
    profiles: &[EntityProfile],
    opts: &ScalingOptions,
) -> Result<Vec<IndexScaling>, ScalingError> {
    let selected: Vec<&EntityProfile> = profiles
        .iter()
        .filter(|p| {
            opts.naut_min.is_none_or(|m| p.mean_naut >= m) && opts.naut_max.is_none_or(|m| p.mean_naut <= m)
        })
        .collect();
    if selected.is_empty() {
        return Err(ScalingError::InsufficientData("no entities in the n_aut range".into()));
    }
    let mut out = Vec::with_capacity(ScalingIndex::ALL.len());
    for index in ScalingIndex::ALL {
        let points: Vec<(f64, f64)> = selected.iter().map(|p| (p.mean_naut, index.value(p))).collect();
        let curve = log_bin(&points, opts.bins_per_decade, opts.min_bin_count)?;
        let fit = fit_power_law(&curve, opts.estimator);
        out.push(IndexScaling { index, curve, fit });
    }
    Ok(out)
}

/// Pulls the fitted exponent of `index` out of an analysis, if it succeeded.
pub fn exponent_of(results: &[IndexScaling], index: ScalingIndex) -> Option<f64> {
    results
        .iter()
        .find(|r| r.index == index)
        .and_then(|r| r.fit.as_ref().ok())
        .map(|f| f.exponent)
}

pub fn fit_of(results: &[IndexScaling], index: ScalingIndex) -> Option<&ScalingFit> {
    results
        .iter()
        .find(|r| r.index == index)
        .and_then(|r| r.fit.as_ref().ok())
}

pub const CURVE_HEADER: [&str; 4] = ["bin_center", "count", "mean", "median"];
pub const FIT_HEADER: [&str; 6] = ["exponent", "stderr", "amplitude", "r2", "n_bins", "estimator"];

pub fn write_curve<W: Write>(out: W, curve: &BinnedCurve) -> Result<(), ScalingError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for b in &curve.bins {
        w.write_record([
            b.center.to_string(),
            b.count.to_string(),
            b.mean.to_string(),
            b.median.to_string(),
        ])?;
    }
    w.flush().map_err(|e| ScalingError::Csv(e.to_string()))?;
    Ok(())
}

pub fn write_fit<W: Write>(out: W, fit: &ScalingFit) -> Result<(), ScalingError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIT_HEADER)?;
    w.write_record([
        fit.exponent.to_string(),
        fit.exponent_stderr.to_string(),
        fit.amplitude.to_string(),
        fit.r_squared.to_string(),
        fit.n_bins_used.to_string(),
        fit.estimator.to_string(),
    ])?;
    w.flush().map_err(|e| ScalingError::Csv(e.to_string()))?;
    Ok(())
}

fn parse_f64(s: &str) -> Result<f64, ScalingError> {
    s.trim().parse().map_err(|_| ScalingError::Csv(format!("not a number: {s:?}")))
}

/// Reads a curve written by [`write_curve`]. Binning metadata is not part of
/// the file and is set to zero.
pub fn read_curve<R: Read>(input: R) -> Result<BinnedCurve, ScalingError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut bins = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if row.len() != 4 {
            return Err(ScalingError::Csv(format!("curve row has {} columns", row.len())));
        }
        bins.push(Bin {
            center: parse_f64(&row[0])?,
            count: row[1]
                .trim()
                .parse()
                .map_err(|_| ScalingError::Csv(format!("bad count {:?}", &row[1])))?,
            mean: parse_f64(&row[2])?,
            median: parse_f64(&row[3])?,
        });
    }
    Ok(BinnedCurve {
        bins,
        bins_per_decade: 0,
        min_bin_count: 0,
    })
}

/// Fit row as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub exponent: f64,
    pub stderr: f64,
    pub amplitude: f64,
    pub r2: f64,
    pub n_bins: usize,
    pub estimator: Estimator,
}

pub fn read_fit<R: Read>(input: R) -> Result<FitRecord, ScalingError> {
    let mut rdr = csv::Reader::from_reader(input);
    let row = rdr
        .records()
        .next()
        .ok_or_else(|| ScalingError::Csv("fit file has no data row".into()))??;
    if row.len() != 6 {
        return Err(ScalingError::Csv(format!("fit row has {} columns", row.len())));
    }
    Ok(FitRecord {
        exponent: parse_f64(&row[0])?,
        stderr: parse_f64(&row[1])?,
        amplitude: parse_f64(&row[2])?,
        r2: parse_f64(&row[3])?,
        n_bins: row[4]
            .trim()
            .parse()
            .map_err(|_| ScalingError::Csv(format!("bad n_bins {:?}", &row[4])))?,
        estimator: Estimator::parse(row[5].trim())
            .ok_or_else(|| ScalingError::Csv(format!("bad estimator {:?}", &row[5])))?,
    })
}
