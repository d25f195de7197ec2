//! Benchmark harness: timed runs over generated workloads, log-log scaling
//! fits, CSV tables and SVG charts.

use std::fmt;
use std::fs;
use std::hint::black_box;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use crate::bulk::bulk_resolve;
use crate::error::{Error, Result};
use crate::generate::{default_key, GenSpec, Workload};
use crate::oracle::oracle_resolve;
use crate::resolve::resolve;

pub const CSV_HEADER: [&str; 10] = [
    "suite",
    "family",
    "n_users",
    "n_mappings",
    "n_objects",
    "conflict_fraction",
    "trials",
    "elapsed_mean_s",
    "elapsed_min_s",
    "elapsed_max_s",
];

/// Records below this size are left out of scaling fits by default.
pub const MIN_FIT_SIZE: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Ra,
    Oracle,
    Bulk,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Ra => "ra",
            Suite::Oracle => "oracle",
            Suite::Bulk => "bulk",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ra" => Ok(Suite::Ra),
            "oracle" => Ok(Suite::Oracle),
            "bulk" => Ok(Suite::Bulk),
            other => Err(Error::Parse(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub suite: Suite,
    pub family: String,
    pub n_users: usize,
    pub n_mappings: usize,
    pub n_objects: usize,
    pub conflict_fraction: f64,
    pub trials: usize,
    /// seconds
    pub elapsed_mean_s: f64,
    pub elapsed_min_s: f64,
    pub elapsed_max_s: f64,
    /// Raw per-trial times; not part of the summary CSV.
    pub trial_times: Vec<f64>,
}

impl BenchRecord {
    /// Network elements (users + mappings), or objects for bulk runs.
    pub fn size(&self) -> usize {
        match self.suite {
            Suite::Bulk => self.n_objects,
            _ => self.n_users + self.n_mappings,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub trials: usize,
    pub atom_limit: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { trials: 20, atom_limit: crate::program::DEFAULT_ATOM_LIMIT }
    }
}

/// Mean, min and max of `trials` timed runs after one discarded warm-up run.
fn time_runs(trials: usize, mut run: impl FnMut() -> Result<()>) -> Result<Vec<f64>> {
    run()?;
    let mut times = Vec::with_capacity(trials);
    for _ in 0..trials {
        let start = Instant::now();
        run()?;
        times.push(start.elapsed().as_secs_f64().max(1e-9));
    }
    Ok(times)
}

/// One record per spec. Workload generation is not timed.
pub fn run_benchmark(suite: Suite, specs: &[GenSpec], options: &BenchOptions) -> Result<Vec<BenchRecord>> {
    if specs.is_empty() {
        return Err(Error::Usage("no workloads to measure".into()));
    }
    if options.trials == 0 {
        return Err(Error::Usage("trials must be at least 1".into()));
    }
    let key = default_key();
    let mut records = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let workload = spec.generate();
        let (n_users, n_mappings, n_objects, conflict_fraction, times) = match (suite, &workload) {
            (Suite::Ra, Workload::Network(net)) => {
                let t = time_runs(options.trials, || {
                    black_box(resolve(black_box(net), &key));
                    Ok(())
                })?;
                (net.num_users(), net.num_mappings(), 1, 0.0, t)
            }
            (Suite::Oracle, Workload::Network(net)) => {
                let t = time_runs(options.trials, || {
                    black_box(oracle_resolve(black_box(net), &key, options.atom_limit)?);
                    Ok(())
                })?;
                (net.num_users(), net.num_mappings(), 1, 0.0, t)
            }
            (Suite::Bulk, Workload::Bulk { topology, beliefs }) => {
                let t = time_runs(options.trials, || {
                    black_box(bulk_resolve(black_box(topology), black_box(beliefs))?);
                    Ok(())
                })?;
                let fraction = match spec {
                    GenSpec::Bulk { conflict_fraction, .. } => *conflict_fraction,
                    _ => 0.0,
                };
                let objects = beliefs.rows.len() / 2;
                (topology.num_users(), topology.num_mappings(), objects, fraction, t)
            }
            _ => return Err(Error::Usage(format!("suite {suite} cannot run {} workloads", spec.family()))),
        };
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        records.push(BenchRecord {
            suite,
            family: spec.to_string(),
            n_users,
            n_mappings,
            n_objects,
            conflict_fraction,
            trials: times.len(),
            elapsed_mean_s: mean,
            elapsed_min_s: times.iter().copied().fold(f64::INFINITY, f64::min),
            elapsed_max_s: times.iter().copied().fold(0.0, f64::max),
            trial_times: times,
        });
    }
    Ok(records)
}

/// Least-squares slope of log(elapsed) against log(size).
pub fn fit_scaling_exponent(records: &[BenchRecord]) -> Result<ScalingFit> {
    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.size() as f64, r.elapsed_mean_s)).collect();
    fit_points(&points)
}

/// Fit over (size, elapsed) pairs; needs at least four strictly increasing sizes.
pub fn fit_points(points: &[(f64, f64)]) -> Result<ScalingFit> {
    let increasing = points.windows(2).all(|w| w[0].0 < w[1].0);
    if points.len() < 4 || !increasing || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::InsufficientData { needed: 4, got: points.len() });
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let exponent = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(ScalingFit { exponent, r_squared })
}

/// Records at or above `min_size`, the ones a scaling fit should see.
pub fn fit_eligible(records: &[BenchRecord], min_size: usize) -> Vec<BenchRecord> {
    records.iter().filter(|r| r.size() >= min_size).cloned().collect()
}

pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.suite.to_string(),
            r.family.clone(),
            r.n_users.to_string(),
            r.n_mappings.to_string(),
            r.n_objects.to_string(),
            r.conflict_fraction.to_string(),
            r.trials.to_string(),
            r.elapsed_mean_s.to_string(),
            r.elapsed_min_s.to_string(),
            r.elapsed_max_s.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn records_from_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut rows = reader.records();
    match rows.next() {
        Some(Ok(h)) if h.iter().eq(CSV_HEADER) => {}
        _ => return Err(Error::Parse("missing or malformed bench CSV header".into())),
    }
    fn num<T: FromStr>(s: &str) -> Result<T> {
        s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))
    }
    let mut out = Vec::new();
    for rec in rows {
        let rec = rec?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len())));
        }
        out.push(BenchRecord {
            suite: rec[0].parse()?,
            family: rec[1].to_string(),
            n_users: num(&rec[2])?,
            n_mappings: num(&rec[3])?,
            n_objects: num(&rec[4])?,
            conflict_fraction: num(&rec[5])?,
            trials: num(&rec[6])?,
            elapsed_mean_s: num(&rec[7])?,
            elapsed_min_s: num(&rec[8])?,
            elapsed_max_s: num(&rec[9])?,
            trial_times: Vec::new(),
        });
    }
    Ok(out)
}

pub fn emit_csv(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, records_to_csv(records))?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    records_from_csv(&fs::read_to_string(path)?)
}

/// Raw trial times: `suite,family,trial,elapsed_s`.
pub fn emit_trials_csv(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(["suite", "family", "trial", "elapsed_s"])?;
    for r in records {
        for (i, t) in r.trial_times.iter().enumerate() {
            w.write_record([r.suite.to_string(), r.family.clone(), i.to_string(), t.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const MARGIN: f64 = 70.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

/// Log-log line chart of mean elapsed time against size, one polyline per suite.
pub fn render_svg(records: &[BenchRecord]) -> String {
    let pts: Vec<(f64, f64)> =
        records.iter().map(|r| ((r.size().max(1) as f64).log10(), r.elapsed_mean_s.log10())).collect();
    let (mut x0, mut x1) = bounds(pts.iter().map(|p| p.0));
    let (mut y0, mut y1) = bounds(pts.iter().map(|p| p.1));
    x0 = x0.floor();
    x1 = x1.ceil().max(x0 + 1.0);
    y0 = y0.floor();
    y1 = y1.ceil().max(y0 + 1.0);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    ));
    for d in x0 as i32..=x1 as i32 {
        let x = sx(d as f64);
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">1e{d}</text>\n",
            HEIGHT - MARGIN + 18.0
        ));
    }
    for d in y0 as i32..=y1 as i32 {
        let y = sy(d as f64);
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"12\" text-anchor=\"end\">1e{d}</text>\n",
            MARGIN - 6.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">size (elements or objects)</text>\n",
        WIDTH / 2.0,
        HEIGHT - 20.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">mean elapsed (s)</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));

    let mut suites: Vec<Suite> = records.iter().map(|r| r.suite).collect();
    suites.sort();
    suites.dedup();
    for (i, suite) in suites.iter().enumerate() {
        let mut series: Vec<(f64, f64)> =
            records.iter().zip(&pts).filter(|(r, _)| r.suite == *suite).map(|(_, p)| *p).collect();
        series.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = series.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            coords.join(" ")
        ));
        for &(x, y) in &series {
            svg.push_str(&format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n", sx(x), sy(y)));
        }
        let ly = MARGIN + 16.0 * i as f64;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\" font-size=\"12\" fill=\"{color}\">{suite}</text>\n",
            WIDTH - MARGIN - 60.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

pub fn emit_svg(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Usage("no records to plot".into()));
    }
    fs::write(path, render_svg(records))?;
    Ok(())
}
