//! Declarative Monte-Carlo sweeps: JSON specs in, CSV tables and SVG plots
//! out. Every trial is a pure function of the spec and its derived seed, so a
//! spec and master seed fix every output byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{csv_path_error, oneshot_scheme_bounds, lossy_scheme_bounds, SchemeBounds, SecondOrderCurve};
use crate::codec::{derandomize, PrefixCode};
use crate::error::{Error, Result};
use crate::ibrd::{solve_ib, solve_noisy_rd, DistortionMeasure};
use crate::poisson::derive_substream;
use crate::prob::{mutual_information, JointPmf, Kernel, Pmf};
use crate::schemes::{BetaRule, NoisyVLConfig, NoisyVlScheme, RelayConfig, RelayScheme, RelayVariant, TrialResult, TrialSeeds};

/// Environment variable holding the default worker count.
pub const PARALLELISM_ENV: &str = "IBRELAY_PARALLELISM";

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Either a joint `P_{X,Y}` or an input law with a channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Instance {
    Channel { p_x: Pmf, channel: Kernel },
    Joint { p_xy: JointPmf },
}

impl Instance {
    pub fn p_xy(&self) -> Result<JointPmf> {
        match self {
            Instance::Joint { p_xy } => Ok(p_xy.clone()),
            Instance::Channel { p_x, channel } => JointPmf::from_marginal_and_kernel(p_x, channel),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchemeSpec {
    /// Noisy lossy source coding of `X` from `Y`.
    NoisyVl {
        /// Defaults to Hamming.
        #[serde(default)]
        distortion: Option<DistortionMeasure>,
        #[serde(default = "BetaRule::zero")]
        beta: BetaRule,
        /// Defaults to the reconstruction marginal of the rate-distortion
        /// solution at the cell's level.
        #[serde(default)]
        reference: Option<Pmf>,
        /// Typical-set rule: `eps` is the total budget split by block size.
        #[serde(default)]
        typical: bool,
        #[serde(default)]
        code: Option<PrefixCode>,
    },
    Relay {
        variant: RelayVariant,
        /// Defaults to the bottleneck kernel at the cell's `C`.
        #[serde(default)]
        kernel_u_given_y: Option<Kernel>,
        #[serde(default = "BetaRule::zero")]
        beta: BetaRule,
        #[serde(default = "yes")]
        strengthen_threshold: bool,
        #[serde(default)]
        code: Option<PrefixCode>,
    },
}

fn yes() -> bool {
    true
}

/// Axes of the sweep; an empty axis is not varied.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Grid {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub c: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub distortion: Vec<f64>,
    #[serde(default, rename = "L")]
    pub l: Vec<u64>,
    #[serde(default, rename = "K")]
    pub k: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Outputs {
    /// Directory for every output; relative file names are joined to it.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "summary_name")]
    pub summary_csv: PathBuf,
    #[serde(default)]
    pub trials_csv: Option<PathBuf>,
    #[serde(default)]
    pub plot_svg: Option<PathBuf>,
    #[serde(default)]
    pub summary_json: Option<PathBuf>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: None, summary_csv: summary_name(), trials_csv: None, plot_svg: None, summary_json: None }
    }
}

fn summary_name() -> PathBuf {
    PathBuf::from("summary.csv")
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub instance: Instance,
    pub scheme: SchemeSpec,
    pub grid: Grid,
    #[serde(default = "one")]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Evaluate the scheme's guarantee for each cell.
    #[serde(default = "yes")]
    pub bounds: bool,
    /// Number of common-randomness groups for the derandomized summary.
    #[serde(default)]
    pub common_groups: Option<u64>,
    /// Normal quantile of the reported intervals.
    #[serde(default = "default_z")]
    pub z: f64,
}

fn default_z() -> f64 {
    Z95
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.common_groups == Some(0) {
            return Err(Error::Config("common_groups must be positive".into()));
        }
        if !(self.z > 0.0) {
            return Err(Error::Config("z must be positive".into()));
        }
        let p_xy = self.instance.p_xy()?;
        match &self.scheme {
            SchemeSpec::NoisyVl { distortion, reference, .. } => {
                if self.grid.distortion.is_empty() {
                    return Err(Error::Config("a noisy lossy sweep needs at least one distortion level".into()));
                }
                if let Some(d) = distortion {
                    if d.x_size() != p_xy.n_rows() {
                        return Err(Error::AlphabetMismatch("distortion rows differ from |X|".into()));
                    }
                    if let Some(r) = reference {
                        if r.len() != d.z_size() {
                            return Err(Error::AlphabetMismatch("reference size differs from |Z|".into()));
                        }
                    }
                }
            }
            SchemeSpec::Relay { variant, kernel_u_given_y, .. } => {
                if !matches!(self.instance, Instance::Channel { .. }) {
                    return Err(Error::Config("a relay sweep needs p_x and channel".into()));
                }
                if self.grid.c.is_empty() {
                    return Err(Error::Config("a relay sweep needs at least one value of C".into()));
                }
                if *variant == RelayVariant::FlTruncated && self.grid.k.is_empty() {
                    return Err(Error::Config("the fixed-length variant needs K values".into()));
                }
                if let Some(k) = kernel_u_given_y {
                    if k.input_size() != p_xy.n_cols() {
                        return Err(Error::AlphabetMismatch("kernel input differs from |Y|".into()));
                    }
                }
            }
        }
        if self.cells().is_empty() {
            return Err(Error::Config("the grid is empty".into()));
        }
        Ok(())
    }

    /// Cartesian product of the axes, `n` varying fastest.
    pub fn cells(&self) -> Vec<Cell> {
        fn axis<T: Copy>(v: &[T]) -> Vec<Option<T>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().copied().map(Some).collect()
            }
        }
        let g = &self.grid;
        if g.n.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for k in axis(&g.k) {
            for l in axis(&g.l) {
                for d in axis(&g.distortion) {
                    for e in axis(&g.eps) {
                        for c in axis(&g.c) {
                            for &n in &g.n {
                                out.push(Cell { n, c, eps: e, distortion: d, l, k });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn output_path(&self, name: &Path, out_dir: Option<&Path>) -> PathBuf {
        let base = out_dir.or(self.outputs.dir.as_deref());
        match base {
            Some(b) if name.is_relative() => b.join(name),
            _ => name.to_path_buf(),
        }
    }
}

/// Coordinates of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub c: Option<f64>,
    pub eps: Option<f64>,
    pub distortion: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<u64>,
    #[serde(rename = "K")]
    pub k: Option<u64>,
}

impl Cell {
    /// Stable text key used for seed derivation.
    pub fn key(&self) -> String {
        fn f<T: std::fmt::Display>(v: Option<T>) -> String {
            v.map_or_else(|| "-".to_string(), |v| v.to_string())
        }
        format!(
            "n={};c={};eps={};d={};L={};K={}",
            self.n,
            f(self.c),
            f(self.eps),
            f(self.distortion),
            f(self.l),
            f(self.k)
        )
    }
}

/// Per-trial seed `derive_substream(master, cell‖trial)`.
pub fn trial_seed(master: u64, cell: &Cell, trial: u64) -> u64 {
    derive_substream(master, &format!("{}#{trial}", cell.key()))
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Aggregated outcome of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub c: Option<f64>,
    pub eps: Option<f64>,
    pub distortion: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<u64>,
    #[serde(rename = "K")]
    pub k: Option<u64>,
    pub trials: u64,
    pub errors: u64,
    pub pe: f64,
    pub pe_lo: f64,
    pub pe_hi: f64,
    pub mean_bits: f64,
    /// Mean description bits per symbol.
    pub mean_rate: f64,
    pub rate_lo: f64,
    pub rate_hi: f64,
    pub pe_bound: Option<f64>,
    pub len_bound: Option<f64>,
    pub derandomized_pe: Option<f64>,
    pub derandomized_bits: Option<f64>,
    pub skipped: Option<String>,
}

impl CellSummary {
    /// Documented CSV header.
    pub const HEADER: [&'static str; 20] = [
        "n",
        "c",
        "eps",
        "distortion",
        "L",
        "K",
        "trials",
        "errors",
        "pe",
        "pe_lo",
        "pe_hi",
        "mean_bits",
        "mean_rate",
        "rate_lo",
        "rate_hi",
        "pe_bound",
        "len_bound",
        "derandomized_pe",
        "derandomized_bits",
        "skipped",
    ];

    fn skipped(cell: &Cell, reason: String) -> Self {
        CellSummary {
            n: cell.n,
            c: cell.c,
            eps: cell.eps,
            distortion: cell.distortion,
            l: cell.l,
            k: cell.k,
            trials: 0,
            errors: 0,
            pe: 0.0,
            pe_lo: 0.0,
            pe_hi: 1.0,
            mean_bits: 0.0,
            mean_rate: 0.0,
            rate_lo: 0.0,
            rate_hi: 0.0,
            pe_bound: None,
            len_bound: None,
            derandomized_pe: None,
            derandomized_bits: None,
            skipped: Some(reason),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }

    /// Aggregates trial results; order of `results` does not matter.
    pub fn from_trials(cell: &Cell, results: &[TrialResult], z: f64) -> Self {
        let t = results.len() as u64;
        let errors = results.iter().filter(|r| r.error).count() as u64;
        let mut bits: Vec<f64> = results.iter().map(|r| r.description_bits as f64).collect();
        // sorted so the floating-point sums do not depend on input order
        bits.sort_by(f64::total_cmp);
        let tf = t.max(1) as f64;
        let mean = bits.iter().sum::<f64>() / tf;
        let var = if t > 1 {
            bits.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (tf - 1.0)
        } else {
            0.0
        };
        let half = z * (var / tf).sqrt();
        let (lo, hi) = wilson_interval(errors, t, z);
        let n = cell.n as f64;
        CellSummary {
            trials: t,
            errors,
            pe: errors as f64 / tf,
            pe_lo: lo,
            pe_hi: hi,
            mean_bits: mean,
            mean_rate: mean / n,
            rate_lo: (mean - half) / n,
            rate_hi: (mean + half) / n,
            skipped: None,
            ..Self::skipped(cell, String::new())
        }
    }
}

/// A prepared cell: the scheme plus its guarantee.
enum Runner {
    Lossy(Box<NoisyVlScheme>),
    Relay(Box<RelayScheme>),
}

impl Runner {
    fn run(&self, label: u64, seeds: TrialSeeds) -> Result<TrialResult> {
        match self {
            Runner::Lossy(s) => s.run_trial_with(label, seeds),
            Runner::Relay(s) => s.run_trial_with(label, seeds),
        }
    }

    fn bounds(&self) -> Result<SchemeBounds> {
        match self {
            Runner::Lossy(s) => lossy_scheme_bounds(s),
            Runner::Relay(s) => oneshot_scheme_bounds(s),
        }
    }
}

fn prepare(spec: &ExperimentSpec, cell: &Cell) -> Result<Runner> {
    let p_xy = spec.instance.p_xy()?;
    match &spec.scheme {
        SchemeSpec::NoisyVl { distortion, beta, reference, typical, code } => {
            let d = match distortion {
                Some(d) => d.clone(),
                None => DistortionMeasure::hamming(p_xy.n_rows())?,
            };
            let level = cell
                .distortion
                .ok_or_else(|| Error::Config("missing distortion level".into()))?;
            let eps = cell.eps.ok_or_else(|| Error::Config("missing eps".into()))?;
            let reference = match reference {
                Some(r) => r.clone(),
                None => {
                    let rd = solve_noisy_rd(&p_xy, &d, level, d.z_size())?;
                    Pmf::normalized(d.z_alphabet().clone(), rd.z_marginal())?
                }
            };
            let mut cfg = if *typical {
                NoisyVLConfig::typical(p_xy, d, level, eps, reference, cell.n)?
            } else {
                let mut c = NoisyVLConfig::new(p_xy, d, level, eps, reference, cell.n);
                c.beta = beta.clone();
                c
            };
            cfg.master_seed = spec.master_seed;
            if let Some(code) = code {
                cfg.code = code.clone();
            }
            Ok(Runner::Lossy(Box::new(NoisyVlScheme::new(cfg)?)))
        }
        SchemeSpec::Relay { variant, kernel_u_given_y, beta, strengthen_threshold, code } => {
            let Instance::Channel { p_x, channel } = &spec.instance else {
                return Err(Error::Config("a relay sweep needs p_x and channel".into()));
            };
            let c = cell.c.ok_or_else(|| Error::Config("missing C".into()))?;
            let kernel = match kernel_u_given_y {
                Some(k) => k.clone(),
                None => {
                    let i = mutual_information(&p_xy);
                    let ib = solve_ib(&p_xy, c.min(i), crate::ibrd::default_u_size(&p_xy))?.compacted()?;
                    ib.kernel_u_given_y
                }
            };
            let mut cfg = RelayConfig::new(p_x.clone(), channel.clone(), kernel, cell.n, c, *variant);
            if let Some(l) = cell.l {
                cfg.message_count = l;
            }
            cfg.fl_description_size = cell.k;
            if let Some(e) = cell.eps {
                cfg.eps_prime = e;
            }
            cfg.beta = beta.clone();
            cfg.strengthen_threshold = *strengthen_threshold;
            cfg.master_seed = spec.master_seed;
            if let Some(code) = code {
                cfg.code = code.clone();
            }
            Ok(Runner::Relay(Box::new(RelayScheme::new(cfg)?)))
        }
    }
}

/// Summaries and (optionally) every trial of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub summaries: Vec<CellSummary>,
    pub trials: Vec<TrialResult>,
}

/// Worker count: explicit value, else the environment, else all cores.
pub fn resolve_parallelism(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(PARALLELISM_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&p| p > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CellSummary>> {
    Ok(run_experiment_report(spec)?.summaries)
}

pub fn run_experiment_report(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_parallelism(spec.parallelism))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut summaries = Vec::new();
        let mut trials = Vec::new();
        for cell in spec.cells() {
            let (summary, results) = run_cell(spec, &cell);
            summaries.push(summary);
            trials.extend(results);
        }
        Ok(ExperimentReport { summaries, trials })
    })
}

fn cell_seeds(spec: &ExperimentSpec, cell: &Cell, trial: u64) -> (u64, TrialSeeds) {
    let label = trial_seed(spec.master_seed, cell, trial);
    let mut seeds = TrialSeeds::from_trial_seed(label);
    if let Some(g) = spec.common_groups {
        seeds.common = derive_substream(spec.master_seed, &format!("{}#common{}", cell.key(), trial % g));
    }
    (label, seeds)
}

fn run_cell(spec: &ExperimentSpec, cell: &Cell) -> (CellSummary, Vec<TrialResult>) {
    let runner = match prepare(spec, cell) {
        Ok(r) => r,
        Err(e) => return (CellSummary::skipped(cell, e.to_string()), Vec::new()),
    };
    let results: Result<Vec<TrialResult>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let (label, seeds) = cell_seeds(spec, cell, t);
            runner.run(label, seeds)
        })
        .collect();
    let results = match results {
        Ok(r) => r,
        Err(e) => return (CellSummary::skipped(cell, e.to_string()), Vec::new()),
    };
    let mut s = CellSummary::from_trials(cell, &results, spec.z);
    if spec.bounds {
        match runner.bounds() {
            Ok(b) => {
                s.pe_bound = Some(b.pe_bound);
                s.len_bound = Some(b.len_bound);
            }
            Err(_) => {}
        }
    }
    if let Some(g) = spec.common_groups {
        if let Some((pe, bits)) = derandomized_summary(&results, g) {
            s.derandomized_pe = Some(pe);
            s.derandomized_bits = Some(bits);
        }
    }
    (s, results)
}

/// Time-sharing between at most two common-randomness values: per group the
/// empirical `(P_e, E|W|)` is a point, and the derandomized scheme pays one
/// extra bit to signal its choice.
pub fn derandomized_summary(results: &[TrialResult], groups: u64) -> Option<(f64, f64)> {
    let mut acc = vec![(0u64, 0u64, 0u64); groups as usize];
    for (t, r) in results.iter().enumerate() {
        let a = &mut acc[t % groups as usize];
        a.0 += 1;
        a.1 += r.error as u64;
        a.2 += r.description_bits;
    }
    let pts: Vec<(f64, f64)> = acc
        .iter()
        .filter(|a| a.0 > 0)
        .map(|&(n, e, b)| (e as f64 / n as f64, b as f64 / n as f64))
        .collect();
    let d = derandomize(&pts).ok()?;
    let (pi, pj) = (pts[d.i], pts[d.j]);
    let pe = d.lambda * pi.0 + (1.0 - d.lambda) * pj.0;
    let bits = d.lambda * pi.1 + (1.0 - d.lambda) * pj.1 + 1.0;
    Some((pe, bits))
}

/// Writes the summary CSV with [`CellSummary::HEADER`].
pub fn write_results(summaries: &[CellSummary], path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_path_error(path, e))?;
    w.write_record(CellSummary::HEADER)?;
    for s in summaries {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<CellSummary>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_path_error(path, e))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CellSummary::HEADER {
        return Err(Error::Config(format!("{}: unexpected header", path.display())));
    }
    Ok(r.deserialize().collect::<std::result::Result<Vec<CellSummary>, _>>()?)
}

/// Trial log with [`TrialResult::CSV_HEADER`].
pub fn write_trials(trials: &[TrialResult], path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_path_error(path, e))?;
    w.write_record(TrialResult::CSV_HEADER)?;
    for t in trials {
        w.serialize(t)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// Plot of mean rate (bits/symbol) against `n`: one `circle.point` per
/// non-skipped summary with its interval, and the second-order curves of the
/// first `ε` in `curve` as polylines.
pub fn render_plot(summaries: &[CellSummary], curve: Option<&SecondOrderCurve>) -> Result<String> {
    let pts: Vec<&CellSummary> = summaries.iter().filter(|s| !s.is_skipped()).collect();
    if pts.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let mut series: Vec<(&str, Vec<(f64, f64)>)> = Vec::new();
    if let Some(c) = curve {
        if let Some(e0) = c.rows.first().map(|r| r.eps) {
            let rows: Vec<_> = c.rows.iter().filter(|r| r.eps == e0).collect();
            series.push(("eq3", rows.iter().map(|r| (r.n as f64, r.eq3)).collect()));
            series.push(("eq5", rows.iter().map(|r| (r.n as f64, r.eq5)).collect()));
            series.push(("thm3", rows.iter().map(|r| (r.n as f64, r.thm3_len / r.n as f64)).collect()));
            series.push(("thm4", rows.iter().map(|r| (r.n as f64, r.thm4_len / r.n as f64)).collect()));
        }
    }
    let xs = pts.iter().map(|s| s.n as f64).chain(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let ys = pts
        .iter()
        .flat_map(|s| [s.rate_lo, s.rate_hi, s.mean_rate])
        .chain(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)))
        .filter(|v| v.is_finite());
    let (x0, x1) = span(xs);
    let (y0, y1) = span(ys);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">blocklength n</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">rate (bits/symbol)</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(s, r#"<text class="tick" x="{x:.2}" y="{:.2}" text-anchor="middle">{v}</text>"#, H - MARGIN + 18.0);
    }
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(s, r#"<text class="tick" x="{:.2}" y="{y:.2}" text-anchor="end">{v:.4}</text>"#, MARGIN - 6.0);
    }
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (i, (name, line)) in series.iter().enumerate() {
        let mut line = line.clone();
        line.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = line
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" data-name="{name}" fill="none" stroke="{}" points="{}"/>"#,
            colors[i % colors.len()],
            path.join(" ")
        );
    }
    for p in &pts {
        let (x, y) = (sx(p.n as f64), sy(p.mean_rate));
        let _ = writeln!(
            s,
            r#"<line class="errorbar" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            sy(p.rate_lo),
            sy(p.rate_hi)
        );
        let _ = writeln!(s, r#"<circle class="point" cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

pub fn emit_plot(summaries: &[CellSummary], curve: Option<&SecondOrderCurve>, path: &Path) -> Result<()> {
    let svg = render_plot(summaries, curve)?;
    ensure_parent(path)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Runs a spec and writes every configured output; returns the written
/// paths.
pub fn run_and_write(spec: &ExperimentSpec, out_dir: Option<&Path>, curve: Option<&SecondOrderCurve>) -> Result<Vec<PathBuf>> {
    let report = run_experiment_report(spec)?;
    let mut written = Vec::new();
    let summary = spec.output_path(&spec.outputs.summary_csv, out_dir);
    write_results(&report.summaries, &summary)?;
    written.push(summary);
    if let Some(t) = &spec.outputs.trials_csv {
        let p = spec.output_path(t, out_dir);
        write_trials(&report.trials, &p)?;
        written.push(p);
    }
    if let Some(j) = &spec.outputs.summary_json {
        let p = spec.output_path(j, out_dir);
        ensure_parent(&p)?;
        fs::write(&p, serde_json::to_string_pretty(&report.summaries)?).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    if let Some(svg) = &spec.outputs.plot_svg {
        if report.summaries.iter().any(|s| !s.is_skipped()) {
            let p = spec.output_path(svg, out_dir);
            emit_plot(&report.summaries, curve, &p)?;
            written.push(p);
        }
    }
    Ok(written)
}
