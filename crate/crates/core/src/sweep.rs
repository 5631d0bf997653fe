//! Batch experiment harness: fit a predictor, run the `ell` / `theta` grids
//! and write `results.csv` plus per-panel scatter data.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::dataset::{candidate_sets, RatingsDataset, MAX_RATING, MIN_RATING};
use crate::error::{Error, Result};
use crate::metrics::{DisparityReport, Provenance};
use crate::predictors::{KnnParams, NmfParams, Predictor, ScoreGraph};
use crate::reranking::{
    greedy_rerank, random_rerank, top_k, GreedyParams, RandomParams, RecommendationSet,
};

pub const RESULTS_HEADER: &str = "predictor,post,param,k,agg_div,d_s,d_r";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostProcessor {
    None,
    Random,
    Greedy,
}

impl PostProcessor {
    pub fn name(self) -> &'static str {
        match self {
            PostProcessor::None => "none",
            PostProcessor::Random => "random",
            PostProcessor::Greedy => "greedy",
        }
    }
}

impl FromStr for PostProcessor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(PostProcessor::None),
            "random" => Ok(PostProcessor::Random),
            "greedy" => Ok(PostProcessor::Greedy),
            other => Err(Error::Config(format!(
                "unknown post-processor {other:?} (expected none, random or greedy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    Knn,
    Nmf,
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "knn" => Ok(PredictorKind::Knn),
            "nmf" => Ok(PredictorKind::Nmf),
            other => Err(Error::Config(format!(
                "unknown predictor {other:?} (expected knn or nmf)"
            ))),
        }
    }
}

/// Parses a comma-separated list such as `knn,nmf` or `10,50,100`.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse {p:?} in list {s:?}")))
        })
        .collect()
}

/// Everything needed to reproduce one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub data_path: PathBuf,
    pub predictors: Vec<PredictorKind>,
    pub knn: KnnParams,
    pub nmf: NmfParams,
    pub post: PostProcessor,
    pub k: usize,
    pub ell_grid: Vec<usize>,
    pub theta_grid: Vec<usize>,
    pub threshold: f64,
    /// Seeds both the Random sampler and the NMF initialization.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Store and reuse fitted scores under `output_dir`.
    pub cache: bool,
    /// Also write an SVG next to each scatter data file.
    pub svg: bool,
    /// Also write per-user lists and metric vectors for every grid point.
    pub details: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            data_path: PathBuf::from("data/ml-100k/u.data"),
            predictors: vec![PredictorKind::Knn],
            knn: KnnParams::default(),
            nmf: NmfParams::default(),
            post: PostProcessor::None,
            k: 5,
            ell_grid: vec![10, 50, 100, 500],
            theta_grid: vec![10, 100, 200, 500, 1000],
            threshold: 3.5,
            seed: 42,
            output_dir: PathBuf::from("out"),
            cache: false,
            svg: true,
            details: false,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    data: Option<PathBuf>,
    predictor: Option<String>,
    post: Option<String>,
    k: Option<usize>,
    ell: Option<Vec<usize>>,
    theta: Option<Vec<usize>>,
    threshold: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    cache: Option<bool>,
    svg: Option<bool>,
    details: Option<bool>,
    knn: Option<KnnSection>,
    nmf: Option<NmfSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct KnnSection {
    n_neighbors: Option<usize>,
    min_overlap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NmfSection {
    n_factors: Option<usize>,
    n_epochs: Option<usize>,
}

impl SweepConfig {
    /// Reads `key = value` settings (TOML syntax) on top of the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut cfg = SweepConfig::default();
        if let Some(v) = file.data {
            cfg.data_path = v;
        }
        if let Some(v) = file.predictor {
            cfg.predictors = parse_list(&v)?;
        }
        if let Some(v) = file.post {
            cfg.post = v.parse()?;
        }
        if let Some(v) = file.k {
            cfg.k = v;
        }
        if let Some(v) = file.ell {
            cfg.ell_grid = v;
        }
        if let Some(v) = file.theta {
            cfg.theta_grid = v;
        }
        if let Some(v) = file.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.out {
            cfg.output_dir = v;
        }
        if let Some(v) = file.cache {
            cfg.cache = v;
        }
        if let Some(v) = file.svg {
            cfg.svg = v;
        }
        if let Some(v) = file.details {
            cfg.details = v;
        }
        if let Some(s) = file.knn {
            cfg.knn.n_neighbors = s.n_neighbors.unwrap_or(cfg.knn.n_neighbors);
            cfg.knn.min_overlap = s.min_overlap.unwrap_or(cfg.knn.min_overlap);
        }
        if let Some(s) = file.nmf {
            cfg.nmf.n_factors = s.n_factors.unwrap_or(cfg.nmf.n_factors);
            cfg.nmf.n_epochs = s.n_epochs.unwrap_or(cfg.nmf.n_epochs);
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.predictors.is_empty() {
            return Err(Error::Config("no predictor selected".into()));
        }
        match self.post {
            PostProcessor::None => {}
            PostProcessor::Random => {
                if self.ell_grid.is_empty() {
                    return Err(Error::Config("ell grid is empty".into()));
                }
                if let Some(ell) = self.ell_grid.iter().find(|&&l| l < self.k) {
                    return Err(Error::Config(format!(
                        "ell = {ell} is smaller than k = {}",
                        self.k
                    )));
                }
            }
            PostProcessor::Greedy => {
                if self.theta_grid.is_empty() {
                    return Err(Error::Config("theta grid is empty".into()));
                }
                if !(MIN_RATING..=MAX_RATING).contains(&self.threshold) {
                    return Err(Error::Config(format!(
                        "threshold {} outside [1, 5]",
                        self.threshold
                    )));
                }
            }
        }
        Ok(())
    }

    fn predictor(&self, kind: PredictorKind) -> Predictor {
        match kind {
            PredictorKind::Knn => Predictor::Knn(self.knn.clone()),
            PredictorKind::Nmf => Predictor::Nmf(NmfParams {
                init_seed: self.seed,
                ..self.nmf.clone()
            }),
        }
    }

    fn grid(&self) -> &[usize] {
        match self.post {
            PostProcessor::None => &[],
            PostProcessor::Random => &self.ell_grid,
            PostProcessor::Greedy => &self.theta_grid,
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub report: DisparityReport,
    pub recommendations: RecommendationSet,
    /// Requested and achieved diversity increase for Greedy points.
    pub greedy: Option<(usize, usize)>,
}

/// Everything computed for one predictor.
#[derive(Debug, Clone)]
pub struct PredictorRun {
    pub predictor: Predictor,
    pub scores: ScoreGraph,
    /// Baseline first, then grid points in grid order.
    pub points: Vec<SweepPoint>,
}

fn cache_path(cfg: &SweepConfig, predictor: &Predictor) -> PathBuf {
    let label: String = predictor
        .to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    cfg.output_dir.join(format!("scores__{label}.csv"))
}

fn load_or_fit(
    cfg: &SweepConfig,
    d: &RatingsDataset,
    c: &crate::dataset::CandidateSets,
    predictor: &Predictor,
) -> Result<ScoreGraph> {
    if !cfg.cache {
        return predictor.fit(d, c);
    }
    let path = cache_path(cfg, predictor);
    if !path.exists() {
        let fitted = predictor.fit(d, c)?;
        fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        fitted
            .write_csv(d, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
    }
    // Always read back, so cached and fresh runs see the same 6-decimal scores.
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let scores = ScoreGraph::read_csv(d, predictor.to_string(), BufReader::new(file))?;
    scores.check_covers(c)?;
    Ok(scores)
}

/// Fits every configured predictor and evaluates the baseline plus every
/// grid point. No files are written except the optional score cache.
pub fn compute_sweep(cfg: &SweepConfig, d: &RatingsDataset) -> Result<Vec<PredictorRun>> {
    cfg.validate()?;
    let c = candidate_sets(d, cfg.k)?;
    let n_items = d.n_items();
    let mut runs = Vec::new();
    for &kind in &cfg.predictors {
        let predictor = cfg.predictor(kind);
        let scores = load_or_fit(cfg, d, &c, &predictor)?;
        let top = top_k(&scores, cfg.k)?;
        let provenance = |post: PostProcessor, param: usize, detail: String| Provenance {
            predictor: predictor.name().to_string(),
            post: post.name().to_string(),
            param,
            k: cfg.k,
            detail,
        };

        let baseline = SweepPoint {
            report: DisparityReport::evaluate(
                &scores,
                &top,
                &top,
                n_items,
                provenance(PostProcessor::None, cfg.k, predictor.to_string()),
            )?,
            recommendations: top.clone(),
            greedy: None,
        };

        let grid_points = cfg
            .grid()
            .par_iter()
            .map(|&param| {
                let (set, greedy) = match cfg.post {
                    PostProcessor::None => unreachable!("empty grid"),
                    PostProcessor::Random => (
                        random_rerank(
                            &scores,
                            RandomParams {
                                ell: param,
                                seed: cfg.seed,
                            },
                            cfg.k,
                        )?,
                        None,
                    ),
                    PostProcessor::Greedy => {
                        let out = greedy_rerank(
                            &scores,
                            &top,
                            GreedyParams {
                                theta: param,
                                threshold: cfg.threshold,
                            },
                        )?;
                        (out.set, Some((param, out.achieved)))
                    }
                };
                let detail = format!("{predictor} {}", set.procedure());
                Ok(SweepPoint {
                    report: DisparityReport::evaluate(
                        &scores,
                        &set,
                        &top,
                        n_items,
                        provenance(cfg.post, param, detail),
                    )?,
                    recommendations: set,
                    greedy,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut points = vec![baseline];
        points.extend(grid_points);
        runs.push(PredictorRun {
            predictor,
            scores,
            points,
        });
    }
    Ok(runs)
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub predictor: String,
    pub post: String,
    pub param: usize,
    pub k: usize,
    pub agg_div: f64,
    pub d_s: f64,
    pub d_r: f64,
}

impl From<&DisparityReport> for ResultRow {
    fn from(r: &DisparityReport) -> Self {
        ResultRow {
            predictor: r.provenance.predictor.clone(),
            post: r.provenance.post.clone(),
            param: r.provenance.param,
            k: r.provenance.k,
            agg_div: r.aggregate_diversity,
            d_s: r.score_disparity,
            d_r: r.recommendation_disparity,
        }
    }
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{RESULTS_HEADER}").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            r.predictor, r.post, r.param, r.k, r.agg_div, r.d_s, r.d_r
        )
        .unwrap();
    }
    out
}

pub fn read_results_csv<R: BufRead>(source: R) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (pos, line) in source.lines().enumerate() {
        let line_no = pos + 1;
        let line = line.map_err(|e| Error::io("<results>", e))?;
        if line_no == 1 {
            if line.trim() != RESULTS_HEADER {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header {RESULTS_HEADER:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: line_no, message };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(format!("expected 7 fields, found {}", f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer {s:?}")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
        rows.push(ResultRow {
            predictor: f[0].to_string(),
            post: f[1].to_string(),
            param: int(f[2])?,
            k: int(f[3])?,
            agg_div: real(f[4])?,
            d_s: real(f[5])?,
            d_r: real(f[6])?,
        });
    }
    Ok(rows)
}

/// One scatter panel: x = aggregate diversity, y = one disparity measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub post: String,
    pub predictor: String,
    /// `d_s` or `d_r`.
    pub metric: &'static str,
    pub baseline: Option<(f64, f64)>,
    /// Sorted by x, then y.
    pub points: Vec<(f64, f64)>,
}

impl Panel {
    pub fn file_stem(&self) -> String {
        format!("{}__agg_div__{}__{}", self.post, self.metric, self.predictor)
    }

    /// Two-column text: comment header, a comment flagging the baseline,
    /// then one `agg_div disparity` row per point.
    pub fn to_data(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# post={} predictor={} x=agg_div y={}",
            self.post, self.predictor, self.metric
        )
        .unwrap();
        if let Some((x, y)) = self.baseline {
            writeln!(out, "# baseline {x:.6} {y:.6}").unwrap();
        }
        for (x, y) in &self.points {
            writeln!(out, "{x:.6} {y:.6}").unwrap();
        }
        out
    }

    pub fn to_svg(&self) -> String {
        const W: f64 = 420.0;
        const H: f64 = 320.0;
        const M: f64 = 50.0;
        let max_x = self.points.iter().map(|p| p.0).fold(0.0, f64::max).max(1e-9) * 1.05;
        let max_y = self.points.iter().map(|p| p.1).fold(0.0, f64::max).max(1e-9) * 1.05;
        let px = |x: f64| M + x / max_x * (W - 2.0 * M);
        let py = |y: f64| H - M - y / max_y * (H - 2.0 * M);

        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<path d="M{M} {top} V{bottom} H{right}" stroke="black" fill="none"/>"#,
            top = M,
            bottom = H - M,
            right = W - M
        )
        .unwrap();
        for t in 0..=4 {
            let fx = max_x * t as f64 / 4.0;
            let fy = max_y * t as f64 / 4.0;
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
                px(fx),
                H - M + 16.0,
                100.0 * fx
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}</text>"#,
                M - 6.0,
                py(fy) + 4.0,
                100.0 * fy
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">aggregate diversity (%)</text>"#,
            W / 2.0,
            H - 12.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{} (%)</text>"#,
            H / 2.0,
            H / 2.0,
            if self.metric == "d_s" { "score disparity" } else { "recommendation disparity" }
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.1}" y="20" text-anchor="middle">{} / {}</text>"#,
            W / 2.0,
            self.post,
            self.predictor
        )
        .unwrap();
        for &(x, y) in &self.points {
            if Some((x, y)) == self.baseline {
                writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{:.1}" width="8" height="8" fill="black"/>"#,
                    px(x) - 4.0,
                    py(y) - 4.0
                )
                .unwrap();
            } else {
                writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="steelblue"/>"#,
                    px(x),
                    py(y)
                )
                .unwrap();
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Groups result rows into scatter panels, one per (post, metric,
/// predictor). Each post-processed panel also carries that predictor's
/// baseline point.
pub fn build_panels(rows: &[ResultRow]) -> Vec<Panel> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in rows {
        let key = (r.post.clone(), r.predictor.clone());
        if r.post != "none" && !keys.contains(&key) {
            keys.push(key);
        }
    }
    if keys.is_empty() {
        for r in rows {
            let key = (r.post.clone(), r.predictor.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }

    let mut panels = Vec::new();
    for (post, predictor) in keys {
        for metric in ["d_s", "d_r"] {
            let value = |r: &ResultRow| -> (f64, f64) {
                (r.agg_div, if metric == "d_s" { r.d_s } else { r.d_r })
            };
            let baseline = rows
                .iter()
                .find(|r| r.predictor == predictor && r.post == "none")
                .map(value);
            let mut points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.predictor == predictor && (r.post == post || r.post == "none"))
                .map(value)
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            panels.push(Panel {
                post: post.clone(),
                predictor: predictor.clone(),
                metric,
                baseline,
                points,
            });
        }
    }
    panels
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes one `.dat` file (and optionally `.svg`) per panel into `dir`.
/// Returns the written paths.
pub fn emit_plot_data(rows: &[ResultRow], dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no reports to plot".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for panel in build_panels(rows) {
        let data = dir.join(format!("{}.dat", panel.file_stem()));
        write_file(&data, &panel.to_data())?;
        written.push(data);
        if svg {
            let path = dir.join(format!("{}.svg", panel.file_stem()));
            write_file(&path, &panel.to_svg())?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Output of [`run_sweep`].
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub runs: Vec<PredictorRun>,
    pub rows: Vec<ResultRow>,
    pub files: Vec<PathBuf>,
}

/// Loads the data, runs the sweep and writes `results.csv`, `greedy.csv`
/// (Greedy only), the plot files and, if requested, per-point details.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let d = RatingsDataset::load(&cfg.data_path)?;
    let runs = compute_sweep(cfg, &d)?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let rows: Vec<ResultRow> = runs
        .iter()
        .flat_map(|run| run.points.iter().map(|p| ResultRow::from(&p.report)))
        .collect();
    let csv = results_csv(&rows);
    let results_path = out.join("results.csv");
    write_file(&results_path, &csv)?;
    let mut files = vec![results_path];

    if cfg.post == PostProcessor::Greedy {
        let mut g = String::from("predictor,theta,threshold,achieved\n");
        for run in &runs {
            for (theta, achieved) in run.points.iter().filter_map(|p| p.greedy) {
                writeln!(
                    g,
                    "{},{},{},{}",
                    run.predictor.name(),
                    theta,
                    cfg.threshold,
                    achieved
                )
                .unwrap();
            }
        }
        let path = out.join("greedy.csv");
        write_file(&path, &g)?;
        files.push(path);
    }

    // Plot from the serialized rows so that re-plotting results.csv later
    // reproduces the same bytes.
    let parsed = read_results_csv(csv.as_bytes())?;
    files.extend(emit_plot_data(&parsed, &out.join("plots"), cfg.svg)?);

    if cfg.details {
        let dir = out.join("details");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for run in &runs {
            for p in &run.points {
                let prov = &p.report.provenance;
                let stem = format!("{}__{}__{}", prov.predictor, prov.post, prov.param);
                let mut lists = Vec::new();
                p.recommendations
                    .write_csv(&d, &mut lists)
                    .expect("write to Vec");
                let path = dir.join(format!("{stem}__lists.csv"));
                write_file(&path, &String::from_utf8_lossy(&lists))?;
                files.push(path);
                let mut users = Vec::new();
                p.report
                    .write_per_user_csv(&d, &mut users)
                    .expect("write to Vec");
                let path = dir.join(format!("{stem}__users.csv"));
                write_file(&path, &String::from_utf8_lossy(&users))?;
                files.push(path);
            }
        }
    }

    Ok(SweepOutput { runs, rows, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(post: &str, param: usize, agg: f64, ds: f64, dr: f64) -> ResultRow {
        ResultRow {
            predictor: "knn".into(),
            post: post.into(),
            param,
            k: 5,
            agg_div: agg,
            d_s: ds,
            d_r: dr,
        }
    }

    #[test]
    fn config_file_overrides_defaults() {
        let cfg = SweepConfig::from_toml_str(
            r#"
            data = "x/u.data"
            predictor = "knn,nmf"
            post = "random"
            k = 3
            ell = [3, 30]
            seed = 7

            [knn]
            n_neighbors = 10
            "#,
        )
        .unwrap();
        assert_eq!(cfg.predictors, vec![PredictorKind::Knn, PredictorKind::Nmf]);
        assert_eq!(cfg.post, PostProcessor::Random);
        assert_eq!(cfg.ell_grid, vec![3, 30]);
        assert_eq!(cfg.knn.n_neighbors, 10);
        assert_eq!(cfg.knn.min_overlap, 1);
        assert_eq!(cfg.theta_grid, vec![10, 100, 200, 500, 1000]);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        assert!(SweepConfig::from_toml_str("colour = 1").is_err());
        assert!(SweepConfig::from_toml_str("post = \"sideways\"").is_err());
        let cfg = SweepConfig {
            post: PostProcessor::Random,
            ell_grid: vec![2],
            ..SweepConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig {
            post: PostProcessor::Greedy,
            theta_grid: vec![],
            ..SweepConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig {
            k: 0,
            ..SweepConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn results_csv_round_trip() {
        let rows = vec![row("none", 5, 0.016, 0.0, 0.0), row("greedy", 10, 0.02, 0.0001, 0.002)];
        let text = results_csv(&rows);
        assert!(text.starts_with("predictor,post,param,k,agg_div,d_s,d_r\n"));
        assert_eq!(read_results_csv(text.as_bytes()).unwrap(), rows);
        assert!(read_results_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn single_report_single_row() {
        let panels = build_panels(&[row("none", 5, 0.1, 0.0, 0.0)]);
        assert_eq!(panels.len(), 2);
        let data = panels[0].to_data();
        let rows: Vec<&str> = data.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows, vec!["0.100000 0.000000"]);
    }

    #[test]
    fn baseline_plus_four_points() {
        let rows = vec![
            row("none", 5, 0.02, 0.0, 0.0),
            row("random", 500, 0.40, 0.03, 0.2),
            row("random", 10, 0.05, 0.01, 0.05),
            row("random", 100, 0.20, 0.02, 0.1),
            row("random", 50, 0.10, 0.015, 0.08),
        ];
        let panels = build_panels(&rows);
        assert_eq!(panels.len(), 2);
        let data = panels[1].to_data();
        assert!(data.contains("# baseline 0.020000 0.000000\n"));
        let xs: Vec<&str> = data
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split(' ').next().unwrap())
            .collect();
        assert_eq!(xs, vec!["0.020000", "0.050000", "0.100000", "0.200000", "0.400000"]);
        assert_eq!(panels[1].file_stem(), "random__agg_div__d_r__knn");
        assert!(panels[1].to_svg().contains("<rect x="));
    }

    #[test]
    fn emit_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row("none", 5, 0.02, 0.0, 0.0), row("greedy", 10, 0.03, 0.001, 0.01)];
        let a = emit_plot_data(&rows, &dir.path().join("a"), true).unwrap();
        let b = emit_plot_data(&rows, &dir.path().join("b"), true).unwrap();
        assert_eq!(a.len(), 4);
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
        }
        assert!(emit_plot_data(&[], dir.path(), false).is_err());
    }
}
