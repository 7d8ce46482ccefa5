//! Trend analyses over a profile dataset: failure rates, tool conflicts,
//! format lifespans with an exponential popularity fit, births and deaths,
//! and version/software share series.
//!
//! Everything here is a pure function of an immutable [`ProfileDataset`].
//! [`write_report`] renders a [`TrendReport`] as CSV tables and SVG charts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::mimetype::{IdentificationOutcome, ParamKey, UNIDENTIFIED};
use crate::profiler::{ProfileDataset, ProfileKey};

mod report;
mod svg;

pub use report::write_report;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("base type {0} does not occur in the dataset")]
    UnknownBaseType(String),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write report: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tool {
    Broad,
    Fine,
}

impl Tool {
    pub const BOTH: [Tool; 2] = [Tool::Broad, Tool::Fine];

    pub fn as_str(self) -> &'static str {
        match self {
            Tool::Broad => "broad",
            Tool::Fine => "fine",
        }
    }

    fn field(self, key: &ProfileKey) -> &str {
        match self {
            Tool::Broad => &key.broad,
            Tool::Fine => &key.fine,
        }
    }

    fn outcome(self, key: &ProfileKey) -> IdentificationOutcome {
        // keys built by the profiler or by `load` are canonical
        self.field(key)
            .parse()
            .unwrap_or(IdentificationOutcome::Unidentified)
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Tool {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "broad" => Ok(Tool::Broad),
            "fine" => Ok(Tool::Fine),
            other => Err(format!("unknown tool {other:?}")),
        }
    }
}

// ---------------------------------------------------------------------------
// failure rates

#[derive(Debug, Clone, PartialEq)]
pub struct FailureRate {
    pub tool: Tool,
    pub year: u16,
    pub unidentified: u64,
    pub total: u64,
    pub rate: f64,
}

/// Fraction of each year's resources a tool left unidentified, ordered by
/// tool then year.
pub fn failure_rates(d: &ProfileDataset) -> Vec<FailureRate> {
    let mut per_year: BTreeMap<u16, (u64, [u64; 2])> = BTreeMap::new();
    for (k, n) in d.iter() {
        let slot = per_year.entry(k.year).or_default();
        slot.0 += n;
        for (i, tool) in Tool::BOTH.iter().enumerate() {
            if tool.field(k) == UNIDENTIFIED {
                slot.1[i] += n;
            }
        }
    }
    Tool::BOTH
        .iter()
        .enumerate()
        .flat_map(|(i, &tool)| {
            per_year
                .iter()
                .map(move |(&year, &(total, failed))| FailureRate {
                    tool,
                    year,
                    unidentified: failed[i],
                    total,
                    rate: failed[i] as f64 / total as f64,
                })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// conflicts

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictMatrix {
    /// `(broad base, fine base) → resources`, summed over years.
    pub pairs: BTreeMap<(String, String), u64>,
}

impl ConflictMatrix {
    pub fn distinct_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn total(&self) -> u64 {
        self.pairs.values().sum()
    }
}

/// Rows where both tools identified the resource but disagree on base type.
pub fn conflict_matrix(d: &ProfileDataset) -> ConflictMatrix {
    let mut m = ConflictMatrix::default();
    for (k, n) in d.iter() {
        let (Some(b), Some(f)) = (Tool::Broad.outcome(k).base(), Tool::Fine.outcome(k).base())
        else {
            continue;
        };
        if b != f {
            *m.pairs.entry((b, f)).or_insert(0) += n;
        }
    }
    m
}

// ---------------------------------------------------------------------------
// lifespans

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LifespanEntry {
    pub base_type: String,
    pub first_year: u16,
    pub last_year: u16,
    /// Inclusive: `last_year - first_year + 1`.
    pub lifespan: u32,
    pub total_count: u64,
}

fn base_spans(d: &ProfileDataset, tool: Tool) -> BTreeMap<String, (u16, u16, u64)> {
    let mut spans: BTreeMap<String, (u16, u16, u64)> = BTreeMap::new();
    for (k, n) in d.iter() {
        let Some(base) = tool.outcome(k).base() else {
            continue;
        };
        let e = spans.entry(base).or_insert((k.year, k.year, 0));
        e.0 = e.0.min(k.year);
        e.1 = e.1.max(k.year);
        e.2 += n;
    }
    spans
}

/// One entry per identified base type, ordered by base type.
pub fn lifespan_table(d: &ProfileDataset, tool: Tool) -> Vec<LifespanEntry> {
    base_spans(d, tool)
        .into_iter()
        .map(|(base_type, (first, last, total))| LifespanEntry {
            base_type,
            first_year: first,
            last_year: last,
            lifespan: u32::from(last - first) + 1,
            total_count: total,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    /// Change in log10(count) per year of lifespan.
    pub slope: f64,
    /// log10(count) at lifespan zero.
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

impl ExponentialFit {
    pub fn predict_log10(&self, lifespan: f64) -> f64 {
        self.intercept + self.slope * lifespan
    }
}

/// Ordinary least squares of `log10(total_count)` on lifespan.
pub fn fit_exponential(entries: &[LifespanEntry]) -> Result<ExponentialFit, AnalysisError> {
    if let Some(e) = entries.iter().find(|e| e.total_count == 0) {
        return Err(AnalysisError::DegenerateFit(format!(
            "{} has a zero count",
            e.base_type
        )));
    }
    let points: Vec<(f64, f64)> = entries
        .iter()
        .map(|e| (f64::from(e.lifespan), e.total_count as f64))
        .collect();
    fit_log_linear(&points)
}

/// Least squares of `log10(count)` on `x` for `(x, count)` pairs with
/// positive, not necessarily integral, counts.
pub fn fit_log_linear(points: &[(f64, f64)]) -> Result<ExponentialFit, AnalysisError> {
    if points.len() < 2 {
        return Err(AnalysisError::DegenerateFit(format!(
            "{} point(s); at least 2 needed",
            points.len()
        )));
    }
    if let Some((x, c)) = points
        .iter()
        .find(|(x, c)| !x.is_finite() || !c.is_finite() || *c <= 0.0)
    {
        return Err(AnalysisError::DegenerateFit(format!(
            "point ({x}, {c}) is not finite and positive"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::DegenerateFit(
            "all lifespans are equal".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(ExponentialFit {
        slope,
        intercept,
        r2,
        n: points.len(),
    })
}

// ---------------------------------------------------------------------------
// births and deaths

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BirthsDeaths {
    pub year: u16,
    pub births: u32,
    pub deaths: u32,
}

/// Per dataset year, base types first seen and last seen that year. A base
/// type still present in the dataset's final year is not counted as lost.
pub fn births_deaths(d: &ProfileDataset, tool: Tool) -> Vec<BirthsDeaths> {
    let years = d.years();
    let Some(&final_year) = years.last() else {
        return Vec::new();
    };
    let spans = base_spans(d, tool);
    years
        .into_iter()
        .map(|year| BirthsDeaths {
            year,
            births: spans.values().filter(|s| s.0 == year).count() as u32,
            deaths: spans
                .values()
                .filter(|s| s.1 == year && year < final_year)
                .count() as u32,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// shares

pub const UNVERSIONED: &str = "unversioned";
pub const UNKNOWN_SOFTWARE: &str = "unknown";

#[derive(Debug, Clone, PartialEq)]
pub struct ShareRow {
    pub year: u16,
    pub value: String,
    pub count: u64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShareTable {
    pub base_type: String,
    pub param: ParamKey,
    pub tool: Tool,
    /// Ordered by year, then value.
    pub rows: Vec<ShareRow>,
    /// Distinct present values of `param` (the absent group not counted).
    pub distinct_values: usize,
    /// Distinct present `hardware` values for the base type.
    pub distinct_hardware: usize,
}

impl ShareTable {
    /// Values ordered by total count, largest first, ties by name.
    pub fn values_by_total(&self) -> Vec<(String, u64)> {
        let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
        for r in &self.rows {
            *totals.entry(&r.value).or_insert(0) += r.count;
        }
        let mut v: Vec<(String, u64)> = totals
            .into_iter()
            .map(|(k, n)| (k.to_string(), n))
            .collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    pub fn file_stem(&self) -> String {
        format!(
            "shares_{}_{}_{}",
            self.base_type.replace(['/', '+', '.'], "-"),
            self.param.as_str(),
            self.tool
        )
    }
}

fn param_shares(
    d: &ProfileDataset,
    base_type: &str,
    tool: Tool,
    param: ParamKey,
    absent: &str,
) -> Result<ShareTable, AnalysisError> {
    let base_type = base_type.to_ascii_lowercase();
    let mut counts: BTreeMap<(u16, String), u64> = BTreeMap::new();
    let mut totals: BTreeMap<u16, u64> = BTreeMap::new();
    let mut values = BTreeSet::new();
    let mut hardware = BTreeSet::new();
    for (k, n) in d.iter() {
        let outcome = tool.outcome(k);
        let Some(mime) = outcome.mime().filter(|m| m.is_base(&base_type)) else {
            continue;
        };
        let value = mime.param(param);
        if let Some(v) = value {
            values.insert(v.to_string());
        }
        if let Some(h) = mime.hardware() {
            hardware.insert(h.to_string());
        }
        let label = value.unwrap_or(absent).to_string();
        *counts.entry((k.year, label)).or_insert(0) += n;
        *totals.entry(k.year).or_insert(0) += n;
    }
    if totals.is_empty() {
        return Err(AnalysisError::UnknownBaseType(base_type));
    }
    let rows = counts
        .into_iter()
        .map(|((year, value), count)| ShareRow {
            year,
            share: count as f64 / totals[&year] as f64,
            value,
            count,
        })
        .collect();
    Ok(ShareTable {
        base_type,
        param,
        tool,
        rows,
        distinct_values: values.len(),
        distinct_hardware: hardware.len(),
    })
}

/// Per year, the fraction of a base type's resources at each `version`.
pub fn version_shares(
    d: &ProfileDataset,
    base_type: &str,
    tool: Tool,
) -> Result<ShareTable, AnalysisError> {
    param_shares(d, base_type, tool, ParamKey::Version, UNVERSIONED)
}

/// Per year, the fraction of a base type's resources per `software` value.
pub fn software_shares(
    d: &ProfileDataset,
    base_type: &str,
    tool: Tool,
) -> Result<ShareTable, AnalysisError> {
    param_shares(d, base_type, tool, ParamKey::Software, UNKNOWN_SOFTWARE)
}

// ---------------------------------------------------------------------------
// report

/// Resources per base type per year, one tool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatCount {
    pub base_type: String,
    pub year: u16,
    pub count: u64,
}

pub fn format_counts(d: &ProfileDataset, tool: Tool) -> Vec<FormatCount> {
    let mut m: BTreeMap<(String, u16), u64> = BTreeMap::new();
    for (k, n) in d.iter() {
        if let Some(base) = tool.outcome(k).base() {
            *m.entry((base, k.year)).or_insert(0) += n;
        }
    }
    m.into_iter()
        .map(|((base_type, year), count)| FormatCount {
            base_type,
            year,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareSeries {
    pub base_type: String,
    pub param: ParamKey,
    pub tool: Tool,
}

impl ShareSeries {
    pub fn new(base_type: &str, param: ParamKey, tool: Tool) -> Self {
        ShareSeries {
            base_type: base_type.into(),
            param,
            tool,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    /// Tool whose base types drive lifespans, the fit, births/deaths and
    /// format counts.
    pub format_tool: Tool,
    pub series: Vec<ShareSeries>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            format_tool: Tool::Broad,
            series: vec![
                ShareSeries::new("text/html", ParamKey::Version, Tool::Fine),
                ShareSeries::new("application/pdf", ParamKey::Version, Tool::Fine),
                ShareSeries::new("application/pdf", ParamKey::Version, Tool::Broad),
                ShareSeries::new("application/pdf", ParamKey::Software, Tool::Broad),
                ShareSeries::new("image/jpeg", ParamKey::Software, Tool::Broad),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub total: u64,
    pub failure_rates: Vec<FailureRate>,
    pub conflicts: ConflictMatrix,
    pub format_tool: Tool,
    pub lifespans: Vec<LifespanEntry>,
    /// Absent when the lifespans cannot support a fit.
    pub fit: Option<ExponentialFit>,
    pub births_deaths: Vec<BirthsDeaths>,
    pub format_counts: Vec<FormatCount>,
    /// Series whose base type occurs in the dataset.
    pub shares: Vec<ShareTable>,
}

impl TrendReport {
    pub fn compute(d: &ProfileDataset, config: &ReportConfig) -> TrendReport {
        let tool = config.format_tool;
        let lifespans = lifespan_table(d, tool);
        let fit = match fit_exponential(&lifespans) {
            Ok(f) => Some(f),
            Err(e) => {
                log::info!("no lifespan fit: {e}");
                None
            }
        };
        let shares = config
            .series
            .iter()
            .filter_map(|s| {
                match param_shares(d, &s.base_type, s.tool, s.param, absent_label(s.param)) {
                    Ok(t) => Some(t),
                    Err(e) => {
                        log::info!("skipping share series: {e}");
                        None
                    }
                }
            })
            .collect();
        TrendReport {
            total: d.total(),
            failure_rates: failure_rates(d),
            conflicts: conflict_matrix(d),
            format_tool: tool,
            lifespans,
            fit,
            births_deaths: births_deaths(d, tool),
            format_counts: format_counts(d, tool),
            shares,
        }
    }
}

fn absent_label(param: ParamKey) -> &'static str {
    match param {
        ParamKey::Version => UNVERSIONED,
        _ => UNKNOWN_SOFTWARE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiler::load_str;

    fn ds(rows: &[(&str, &str, &str, u16, u64)]) -> ProfileDataset {
        let mut d = ProfileDataset::new();
        for &(s, b, f, y, n) in rows {
            d.add(
                ProfileKey {
                    year: y,
                    server: s.into(),
                    broad: b.into(),
                    fine: f.into(),
                },
                n,
            )
            .unwrap();
        }
        d
    }

    #[test]
    fn failure_rate_arithmetic() {
        let d = ds(&[
            ("text/html", "text/html", "text/html", 2000, 90),
            ("text/html", "text/html", "unidentified", 2000, 10),
        ]);
        let r = failure_rates(&d);
        assert_eq!(r.len(), 2);
        assert_eq!((r[0].tool, r[0].rate), (Tool::Broad, 0.0));
        assert_eq!((r[1].tool, r[1].year, r[1].rate), (Tool::Fine, 2000, 0.1));
    }

    #[test]
    fn conflicts() {
        let d = ds(&[
            ("image/jpeg", "image/jpeg", "image/x-pict", 2001, 40),
            ("image/jpeg", "image/jpeg", "image/x-pict", 2002, 2),
            (
                "image/jpeg",
                "image/jpeg; software=x",
                "image/jpeg",
                2002,
                7,
            ),
            ("image/jpeg", "unidentified", "image/x-pict", 2002, 7),
        ]);
        let m = conflict_matrix(&d);
        assert_eq!(m.distinct_pairs(), 1);
        assert_eq!(m.pairs[&("image/jpeg".into(), "image/x-pict".into())], 42);
        assert!(
            conflict_matrix(&ds(&[("a/b", "a/b", "a/b; version=1", 2000, 3)]))
                .pairs
                .is_empty()
        );
    }

    #[test]
    fn lifespans_inclusive() {
        let d = ds(&[
            ("a/b", "image/png", "unidentified", 1996, 1),
            ("a/b", "image/png", "unidentified", 2010, 4),
            ("a/b", "image/gif", "unidentified", 2003, 2),
        ]);
        let t = lifespan_table(&d, Tool::Broad);
        assert_eq!(t[0].base_type, "image/gif");
        assert_eq!(t[0].lifespan, 1);
        assert_eq!((t[1].lifespan, t[1].total_count), (15, 5));
        assert!(lifespan_table(&d, Tool::Fine).is_empty());
    }

    fn entry(lifespan: u32, total: u64) -> LifespanEntry {
        LifespanEntry {
            base_type: format!("x/{lifespan}"),
            first_year: 2000,
            last_year: 2000 + lifespan as u16 - 1,
            lifespan,
            total_count: total,
        }
    }

    #[test]
    fn fit_cases() {
        let two = fit_exponential(&[entry(1, 10), entry(3, 1000)]).unwrap();
        assert!((two.slope - 1.0).abs() < 1e-12 && (two.r2 - 1.0).abs() < 1e-12);
        assert!(matches!(
            fit_exponential(&[entry(2, 10), entry(2, 100)]),
            Err(AnalysisError::DegenerateFit(_))
        ));
        assert!(fit_exponential(&[entry(2, 10)]).is_err());
        let flat = fit_exponential(&[entry(1, 7), entry(5, 7)]).unwrap();
        assert_eq!((flat.slope, flat.r2), (0.0, 1.0));
    }

    #[test]
    fn births_deaths_toy() {
        let mut rows = vec![];
        for y in 1996..=2010 {
            rows.push(("a/b", "image/png", "image/png", y, 1));
        }
        rows.push(("a/b", "image/gif", "image/gif", 1997, 1));
        let d = ds(&rows);
        let bd = births_deaths(&d, Tool::Broad);
        assert_eq!(bd.len(), 15);
        assert_eq!(
            bd[0],
            BirthsDeaths {
                year: 1996,
                births: 1,
                deaths: 0
            }
        );
        assert_eq!(
            bd[1],
            BirthsDeaths {
                year: 1997,
                births: 1,
                deaths: 1
            }
        );
        assert!(bd[2..].iter().all(|b| b.births == 0 && b.deaths == 0));

        // a format only present in the final year is not lost
        let d = ds(&[
            ("a/b", "a/b", "a/b", 2000, 1),
            ("a/b", "a/c", "a/c", 2001, 1),
        ]);
        assert_eq!(births_deaths(&d, Tool::Fine).last().unwrap().deaths, 0);
    }

    #[test]
    fn html_version_split() {
        let d = ds(&[
            ("text/html", "text/html", "text/html; version=2.0", 1996, 60),
            ("text/html", "text/html", "text/html; version=3.2", 1996, 40),
            ("text/html", "text/html", "text/html", 1997, 1),
        ]);
        let t = version_shares(&d, "text/html", Tool::Fine).unwrap();
        let got: Vec<(u16, &str, f64)> = t
            .rows
            .iter()
            .map(|r| (r.year, r.value.as_str(), r.share))
            .collect();
        assert_eq!(
            got,
            [
                (1996, "2.0", 0.6),
                (1996, "3.2", 0.4),
                (1997, UNVERSIONED, 1.0)
            ]
        );
        assert_eq!(t.distinct_values, 2);
        assert!(matches!(
            version_shares(&d, "application/pdf", Tool::Fine),
            Err(AnalysisError::UnknownBaseType(_))
        ));
    }

    #[test]
    fn software_distinct_counts() {
        let d = load_str(
            "application/pdf\tapplication/pdf; software=A\tunidentified\t2000\t1\n\
             application/pdf\tapplication/pdf; software=B; hardware=H\tunidentified\t2000\t1\n\
             application/pdf\tapplication/pdf; software=C\tunidentified\t2001\t1\n\
             application/pdf\tapplication/pdf\tunidentified\t2001\t1\n",
        )
        .unwrap();
        let t = software_shares(&d, "application/pdf", Tool::Broad).unwrap();
        assert_eq!((t.distinct_values, t.distinct_hardware), (3, 1));
        assert!(t
            .rows
            .iter()
            .any(|r| r.value == UNKNOWN_SOFTWARE && r.share == 0.5));
    }

    #[test]
    fn report_on_single_line() {
        let d = load_str("image/png\timage/png\timage/png; version=1.0\t2004\t102\n").unwrap();
        let r = TrendReport::compute(&d, &ReportConfig::default());
        assert_eq!(r.lifespans.len(), 1);
        assert_eq!(r.lifespans[0].lifespan, 1);
        assert!(r.fit.is_none());
        assert!(r.shares.is_empty());
        assert_eq!(r.total, 102);
    }
}
