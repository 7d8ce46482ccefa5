use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::svg::{color, int_ticks, Plot};
use super::{AnalysisError, ShareTable, Tool, TrendReport};

/// Share charts draw this many values; the rest are pooled as "other".
const MAX_STACK_LAYERS: usize = 8;

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, AnalysisError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner()
        .map_err(|e| AnalysisError::Io(e.into_error()))
}

struct Out {
    dir: PathBuf,
    written: Vec<(String, Vec<u8>)>,
}

impl Out {
    fn put(&mut self, name: String, bytes: Vec<u8>) -> Result<(), AnalysisError> {
        fs::write(self.dir.join(&name), &bytes)?;
        self.written.push((name, bytes));
        Ok(())
    }
}

/// Writes every table as CSV, the chart analogues as SVG, and a
/// `MANIFEST.tsv` of file name, SHA-256 and size. Returns the paths written.
pub fn write_report(t: &TrendReport, dir: &Path) -> Result<Vec<PathBuf>, AnalysisError> {
    fs::create_dir_all(dir)?;
    let mut out = Out {
        dir: dir.to_path_buf(),
        written: Vec::new(),
    };

    out.put(
        "summary.csv".into(),
        csv_bytes(
            &["key", "value"],
            [
                ("resources", t.total.to_string()),
                ("format_tool", t.format_tool.to_string()),
                ("formats", t.lifespans.len().to_string()),
                ("conflict_pairs", t.conflicts.distinct_pairs().to_string()),
                ("conflict_resources", t.conflicts.total().to_string()),
            ]
            .map(|(k, v)| [k.to_string(), v]),
        )?,
    )?;
    out.put(
        "failure_rates.csv".into(),
        csv_bytes(
            &["tool", "year", "unidentified", "total", "rate"],
            t.failure_rates.iter().map(|r| {
                [
                    r.tool.to_string(),
                    r.year.to_string(),
                    r.unidentified.to_string(),
                    r.total.to_string(),
                    r.rate.to_string(),
                ]
            }),
        )?,
    )?;
    out.put(
        "conflicts.csv".into(),
        csv_bytes(
            &["broad_base", "fine_base", "count"],
            t.conflicts
                .pairs
                .iter()
                .map(|((b, f), n)| [b.clone(), f.clone(), n.to_string()]),
        )?,
    )?;
    out.put(
        "lifespans.csv".into(),
        csv_bytes(
            &[
                "base_type",
                "first_year",
                "last_year",
                "lifespan",
                "total_count",
            ],
            t.lifespans.iter().map(|e| {
                [
                    e.base_type.clone(),
                    e.first_year.to_string(),
                    e.last_year.to_string(),
                    e.lifespan.to_string(),
                    e.total_count.to_string(),
                ]
            }),
        )?,
    )?;
    out.put(
        "fit.csv".into(),
        csv_bytes(
            &["tool", "log_base", "slope", "intercept", "r2", "n"],
            t.fit.iter().map(|f| {
                [
                    t.format_tool.to_string(),
                    "10".to_string(),
                    f.slope.to_string(),
                    f.intercept.to_string(),
                    f.r2.to_string(),
                    f.n.to_string(),
                ]
            }),
        )?,
    )?;
    out.put(
        "births_deaths.csv".into(),
        csv_bytes(
            &["year", "births", "deaths"],
            t.births_deaths.iter().map(|b| {
                [
                    b.year.to_string(),
                    b.births.to_string(),
                    b.deaths.to_string(),
                ]
            }),
        )?,
    )?;
    out.put(
        "format_counts.csv".into(),
        csv_bytes(
            &["base_type", "year", "count"],
            t.format_counts
                .iter()
                .map(|c| [c.base_type.clone(), c.year.to_string(), c.count.to_string()]),
        )?,
    )?;
    out.put(
        "share_distinct.csv".into(),
        csv_bytes(
            &[
                "base_type",
                "param",
                "tool",
                "distinct_values",
                "distinct_hardware",
            ],
            t.shares.iter().map(|s| {
                [
                    s.base_type.clone(),
                    s.param.as_str().to_string(),
                    s.tool.to_string(),
                    s.distinct_values.to_string(),
                    s.distinct_hardware.to_string(),
                ]
            }),
        )?,
    )?;
    for s in &t.shares {
        out.put(
            format!("{}.csv", s.file_stem()),
            csv_bytes(
                &["year", "value", "count", "share"],
                s.rows.iter().map(|r| {
                    [
                        r.year.to_string(),
                        r.value.clone(),
                        r.count.to_string(),
                        r.share.to_string(),
                    ]
                }),
            )?,
        )?;
        out.put(
            format!("{}.svg", s.file_stem()),
            share_chart(s).into_bytes(),
        )?;
    }
    out.put("failure_rates.svg".into(), failure_chart(t).into_bytes())?;
    out.put("lifespan_fit.svg".into(), lifespan_chart(t).into_bytes())?;

    let mut manifest = String::new();
    let mut written: Vec<&(String, Vec<u8>)> = out.written.iter().collect();
    written.sort_by(|a, b| a.0.cmp(&b.0));
    for (name, bytes) in &written {
        manifest.push_str(&format!(
            "{name}\t{}\t{}\n",
            hex::encode(Sha256::digest(bytes)),
            bytes.len()
        ));
    }
    fs::write(dir.join("MANIFEST.tsv"), manifest)?;

    let mut paths: Vec<PathBuf> = written.iter().map(|(n, _)| dir.join(n)).collect();
    paths.push(dir.join("MANIFEST.tsv"));
    Ok(paths)
}

fn year_range(years: impl Iterator<Item = u16> + Clone) -> (f64, f64) {
    let lo = years.clone().min().unwrap_or(2000);
    let hi = years.max().unwrap_or(2000);
    (f64::from(lo), f64::from(hi))
}

fn failure_chart(t: &TrendReport) -> String {
    let (x0, x1) = year_range(t.failure_rates.iter().map(|r| r.year));
    let max = t
        .failure_rates
        .iter()
        .map(|r| r.rate * 100.0)
        .fold(1.0f64, f64::max)
        .ceil();
    let mut plot = Plot::new((x0, x1), (0.0, max));
    for (i, tool) in Tool::BOTH.iter().enumerate() {
        let pts: Vec<(f64, f64)> = t
            .failure_rates
            .iter()
            .filter(|r| r.tool == *tool)
            .map(|r| (f64::from(r.year), r.rate * 100.0))
            .collect();
        plot.polyline(tool.as_str(), &pts, color(i));
    }
    let step = (max / 5.0).max(1.0).ceil();
    let y_ticks: Vec<f64> = (0..=(max / step) as usize)
        .map(|i| i as f64 * step)
        .collect();
    plot.finish(
        "Identification failure rate",
        "crawl year",
        "unidentified (%)",
        &int_ticks(x0, x1),
        &y_ticks,
        |v| format!("{v}"),
    )
}

fn lifespan_chart(t: &TrendReport) -> String {
    let xs = t.lifespans.iter().map(|e| f64::from(e.lifespan));
    let x1 = xs.clone().fold(1.0f64, f64::max);
    let ys: Vec<f64> = t
        .lifespans
        .iter()
        .map(|e| (e.total_count.max(1) as f64).log10())
        .collect();
    let y1 = ys.iter().copied().fold(1.0f64, f64::max).ceil();
    let mut plot = Plot::new((0.0, x1 + 1.0), (0.0, y1));
    if let Some(f) = &t.fit {
        let clip = |x: f64| (x, f.predict_log10(x).clamp(0.0, y1));
        plot.polyline(
            &format!("fit: slope {:.3}, r2 {:.3}", f.slope, f.r2),
            &[clip(0.0), clip(x1 + 1.0)],
            color(3),
        );
    }
    for (e, y) in t.lifespans.iter().zip(&ys) {
        plot.dot(
            f64::from(e.lifespan),
            *y,
            &format!("{} ({})", e.base_type, e.total_count),
        );
    }
    let y_ticks: Vec<f64> = (0..=y1 as i64).map(|v| v as f64).collect();
    plot.finish(
        &format!("Resources per format vs lifespan ({})", t.format_tool),
        "lifespan (years)",
        "resources (log scale)",
        &int_ticks(0.0, x1 + 1.0),
        &y_ticks,
        |v| format!("1e{v}"),
    )
}

fn share_chart(s: &ShareTable) -> String {
    let ranked = s.values_by_total();
    let shown: Vec<&str> = ranked
        .iter()
        .take(MAX_STACK_LAYERS)
        .map(|(v, _)| v.as_str())
        .collect();
    let mut layers: Vec<String> = shown.iter().map(|v| v.to_string()).collect();
    if ranked.len() > MAX_STACK_LAYERS {
        layers.push("other".into());
    }
    let mut per_year: BTreeMap<u16, Vec<f64>> = BTreeMap::new();
    for r in &s.rows {
        let slot = per_year
            .entry(r.year)
            .or_insert_with(|| vec![0.0; layers.len()]);
        let i = shown
            .iter()
            .position(|v| *v == r.value)
            .unwrap_or(layers.len() - 1);
        slot[i] += r.share;
    }
    let years: Vec<f64> = per_year.keys().map(|&y| f64::from(y)).collect();
    let (x0, x1) = (years[0], *years.last().expect("nonempty share table"));
    let mut plot = Plot::new((x0, x1), (0.0, 1.0));
    let mut lower = vec![0.0; years.len()];
    for (li, name) in layers.iter().enumerate() {
        let upper: Vec<f64> = per_year
            .values()
            .zip(&lower)
            .map(|(v, lo)| lo + v[li])
            .collect();
        let mut pts: Vec<(f64, f64)> = years.iter().copied().zip(upper.iter().copied()).collect();
        if years.len() == 1 {
            pts = vec![(x0 - 0.4, upper[0]), (x0 + 0.4, upper[0])];
        }
        let mut base: Vec<(f64, f64)> = if years.len() == 1 {
            vec![(x0 - 0.4, lower[0]), (x0 + 0.4, lower[0])]
        } else {
            years.iter().copied().zip(lower.iter().copied()).collect()
        };
        base.reverse();
        pts.extend(base);
        plot.polygon(name, &pts, color(li));
        lower = upper;
    }
    plot.finish(
        &format!("{} {} share ({})", s.base_type, s.param.as_str(), s.tool),
        "crawl year",
        "share of resources",
        &int_ticks(x0, x1),
        &[0.0, 0.25, 0.5, 0.75, 1.0],
        |v| format!("{v}"),
    )
}
