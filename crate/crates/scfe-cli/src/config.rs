//! Line-oriented key=value configuration.
//!
//! One assignment per line, `#` starts a comment line, blank lines are
//! skipped. Sections are spelled as dotted keys (`solver.gamma`) instead of
//! headers so the file stays flat, greppable, and trivially diffable. Later
//! assignments win, and the override chain is built exactly that way: the
//! `SCFE_OUT_DIR` environment fallback first, then the config file, then
//! repeated `--set KEY=VALUE` flags, then the dedicated flags. Unknown keys
//! are rejected rather than ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use scfe_core::error::{Result, ScfeError};
use scfe_core::harness::{log_grid, ExperimentConfig, SearchSpace, TargetPolicy};
use scfe_core::plausibility::{PlausibilityKind, PlausibilityParams};
use scfe_core::proximal::{PenaltyNorm, SparsityMode};
use scfe_core::solver::{InitMode, SolverConfig};

/// One accepted config key with a sample value and a help line.
pub struct KeySpec {
    pub name: &'static str,
    pub sample: &'static str,
    pub help: &'static str,
}

/// Every accepted key. The table drives unknown-key rejection, the `--help`
/// appendix, and the test that feeds each key a sample value.
pub const KEYS: &[KeySpec] = &[
    KeySpec { name: "data.source", sample: "wine", help: "dataset source: csv, synth2d, wine, housing" },
    KeySpec { name: "data.path", sample: "points.csv", help: "CSV file with a header row (source=csv)" },
    KeySpec { name: "data.label", sample: "label", help: "label column name (source=csv)" },
    KeySpec { name: "data.n_per_class", sample: "100", help: "points per class for synthetic sources" },
    KeySpec { name: "data.n", sample: "400", help: "total rows for the housing source" },
    KeySpec { name: "data.centers", sample: "-5,0,5,0", help: "blob centers x0,y0,x1,y1 (source=synth2d)" },
    KeySpec { name: "data.cov", sample: "1,0,0,1", help: "blob covariance, row major (source=synth2d)" },
    KeySpec { name: "data.n_test", sample: "100", help: "rows held out as the test split" },
    KeySpec { name: "data.pca_dims", sample: "8", help: "PCA dimensions fit on training rows, or none" },
    KeySpec { name: "model.path", sample: "model.txt", help: "classifier file; relative paths land in out_dir" },
    KeySpec { name: "model.hidden", sample: "20,20", help: "hidden layer widths; empty means linear" },
    KeySpec { name: "model.epochs", sample: "150", help: "training epochs" },
    KeySpec { name: "model.batch", sample: "32", help: "minibatch size" },
    KeySpec { name: "model.lr", sample: "0.05", help: "Adam learning rate" },
    KeySpec { name: "method", sample: "scfe", help: "label for the report's method column" },
    KeySpec { name: "plausibility.kind", sample: "kde", help: "density surrogate: none, kde, gmm, knn" },
    KeySpec { name: "plausibility.bandwidth", sample: "scott", help: "KDE bandwidth: scott or a positive number" },
    KeySpec { name: "plausibility.components", sample: "5", help: "GMM component count" },
    KeySpec { name: "plausibility.em_iters", sample: "100", help: "GMM EM iteration cap" },
    KeySpec { name: "plausibility.em_tol", sample: "1e-6", help: "GMM EM log-likelihood tolerance" },
    KeySpec { name: "plausibility.k", sample: "5", help: "gravity neighbor count outside the search" },
    KeySpec { name: "sparsity.mode", sample: "penalty", help: "penalty or constraint" },
    KeySpec { name: "sparsity.p", sample: "l1", help: "penalty norm: l0, lhalf, l1" },
    KeySpec { name: "sparsity.beta", sample: "0.1", help: "template penalty weight; the search fills it in" },
    KeySpec { name: "sparsity.m", sample: "1", help: "constraint-mode bound on changed features" },
    KeySpec { name: "solver.gamma", sample: "1.0", help: "template classifier-loss weight" },
    KeySpec { name: "solver.tau", sample: "0.0", help: "template plausibility weight" },
    KeySpec { name: "solver.cutoff", sample: "1.0", help: "hinge cut-off c" },
    KeySpec { name: "solver.iterations", sample: "200", help: "prox step count T" },
    KeySpec { name: "solver.sigma0", sample: "0.1", help: "initial step size" },
    KeySpec { name: "solver.init", sample: "factual", help: "start point: factual or zero" },
    KeySpec { name: "search.beta", sample: "0.01,0.1,1", help: "penalty weight grid, ascending" },
    KeySpec { name: "search.tau", sample: "0.5,1,2", help: "plausibility weight grid, ascending" },
    KeySpec { name: "search.gamma_lo", sample: "-3", help: "log10 lower bracket of the gamma bisection" },
    KeySpec { name: "search.gamma_hi", sample: "3", help: "log10 upper bracket of the gamma bisection" },
    KeySpec { name: "search.gamma_steps", sample: "10", help: "gamma evaluations per grid cell" },
    KeySpec { name: "search.k", sample: "3,4,5", help: "gravity neighbor counts tried" },
    KeySpec { name: "target.policy", sample: "flip", help: "flip, next, or fixed:N" },
    KeySpec { name: "lof.k", sample: "20", help: "neighbor count for the LOF metric" },
    KeySpec { name: "robustness.radii", sample: "0,0.05,0.1", help: "perturbation radii" },
    KeySpec { name: "robustness.kinds", sample: "none,kde,gmm,knn", help: "plausibility kinds the robustness run compares" },
    KeySpec { name: "demo.n", sample: "5", help: "instances traced by the demo" },
    KeySpec { name: "demo.tau", sample: "0.5", help: "plausibility weight of the demo's KDE arm" },
    KeySpec { name: "explain.out", sample: "explain.csv", help: "optional CSV copy of the explain result" },
    KeySpec { name: "seed", sample: "0", help: "master seed; every random stream derives from it" },
    KeySpec { name: "jobs", sample: "1", help: "workers: 1 sequential, 0 all cores" },
    KeySpec { name: "out_dir", sample: "out", help: "artifact directory; SCFE_OUT_DIR when unset" },
];

/// Key appendix for `--help`, one `key=sample  description` line each.
pub fn key_help() -> String {
    let width = KEYS
        .iter()
        .map(|k| k.name.len() + 1 + k.sample.len())
        .max()
        .unwrap_or(0);
    let mut out = String::from(
        "Config keys (KEY=VALUE per line, '#' comments; each is also a --set override):\n",
    );
    for key in KEYS {
        let assign = format!("{}={}", key.name, key.sample);
        out.push_str(&format!("  {assign:width$}  {}\n", key.help));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Csv,
    Synth2d,
    Wine,
    Housing,
}

/// Dedicated flag values; applied after `--set` so they always win.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub set: Vec<String>,
}

/// Fully resolved configuration shared by every subcommand.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub source: DataSource,
    /// Set whenever `source` is csv; `load` rejects the combination otherwise.
    pub data_path: Option<PathBuf>,
    pub label_column: String,
    pub n_per_class: usize,
    pub housing_n: usize,
    pub centers: [[f64; 2]; 2],
    pub cov: [[f64; 2]; 2],
    pub n_test: usize,
    pub pca_dims: Option<usize>,
    pub model_path: PathBuf,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub experiment: ExperimentConfig,
    pub radii: Vec<f64>,
    pub robustness_kinds: Vec<PlausibilityKind>,
    pub demo_n: usize,
    pub demo_tau: f64,
    pub explain_out: Option<PathBuf>,
    pub out_dir: PathBuf,
}

/// Reads and resolves a config file together with the override chain.
pub fn load(path: &Path, env_out_dir: Option<String>, ov: &Overrides) -> Result<CliConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScfeError::io(path.display().to_string(), e))?;
    let mut pairs = Vec::new();
    if let Some(dir) = env_out_dir {
        pairs.push(("out_dir".to_string(), dir));
    }
    pairs.extend(parse_pairs(&text)?);
    for entry in &ov.set {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| ScfeError::invalid(format!("--set expects KEY=VALUE, got '{entry}'")))?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    if let Some(seed) = ov.seed {
        pairs.push(("seed".to_string(), seed.to_string()));
    }
    if let Some(jobs) = ov.jobs {
        pairs.push(("jobs".to_string(), jobs.to_string()));
    }
    if let Some(dir) = &ov.out_dir {
        pairs.push(("out_dir".to_string(), dir.display().to_string()));
    }
    from_pairs(pairs)
}

/// Splits config text into (key, value) pairs, preserving order.
fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ScfeError::parse(no + 1, format!("expected KEY=VALUE, found '{line}'")))?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn bad(key: &str, what: &str, value: &str) -> ScfeError {
    ScfeError::invalid(format!("config key '{key}': expected {what}, got '{value}'"))
}

struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn string(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    fn num<T: FromStr>(&self, key: &str, what: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(key, what, v)),
        }
    }

    fn list<T: FromStr>(&self, key: &str, what: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| bad(key, what, v)))
                .collect(),
        }
    }

    /// Four comma-separated numbers folded into a 2x2 array.
    fn quad(&self, key: &str, default: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
        let flat = self.list::<f64>(key, "four numbers", vec![])?;
        if flat.is_empty() && self.raw(key).is_none() {
            return Ok(default);
        }
        if flat.len() != 4 {
            return Err(bad(key, "four numbers", self.raw(key).unwrap_or("")));
        }
        Ok([[flat[0], flat[1]], [flat[2], flat[3]]])
    }
}

fn from_pairs(pairs: Vec<(String, String)>) -> Result<CliConfig> {
    for (key, _) in &pairs {
        if !KEYS.iter().any(|k| k.name == key) {
            return Err(ScfeError::invalid(format!("unknown config key '{key}'")));
        }
    }
    let cfg = Fields {
        map: pairs.into_iter().collect(),
    };

    let source = match cfg.string("data.source", "synth2d").as_str() {
        "csv" => DataSource::Csv,
        "synth2d" => DataSource::Synth2d,
        "wine" => DataSource::Wine,
        "housing" => DataSource::Housing,
        other => return Err(bad("data.source", "csv, synth2d, wine, or housing", other)),
    };
    let data_path = cfg.raw("data.path").map(PathBuf::from);
    if source == DataSource::Csv && data_path.is_none() {
        return Err(ScfeError::invalid("data.source=csv requires data.path"));
    }

    let pca_dims = match cfg.raw("data.pca_dims") {
        None | Some("none") => None,
        Some(v) => Some(v.parse().map_err(|_| bad("data.pca_dims", "a count or none", v))?),
    };

    let out_dir = PathBuf::from(cfg.string("out_dir", "."));
    let model_path = {
        let p = PathBuf::from(cfg.string("model.path", "model.txt"));
        if p.is_relative() { out_dir.join(p) } else { p }
    };

    let plausibility = parse_kind("plausibility.kind", cfg.string("plausibility.kind", "none").as_str())?;
    let defaults = PlausibilityParams::default();
    let bandwidth = match cfg.raw("plausibility.bandwidth") {
        None | Some("scott") => None,
        Some(v) => Some(v.parse().map_err(|_| bad("plausibility.bandwidth", "scott or a number", v))?),
    };
    let plausibility_params = PlausibilityParams {
        bandwidth,
        n_components: cfg.num("plausibility.components", "a count", defaults.n_components)?,
        em_max_iter: cfg.num("plausibility.em_iters", "a count", defaults.em_max_iter)?,
        em_tol: cfg.num("plausibility.em_tol", "a number", defaults.em_tol)?,
        k: cfg.num("plausibility.k", "a count", defaults.k)?,
    };

    let penalty_norm = match cfg.string("sparsity.p", "l1").as_str() {
        "l0" => PenaltyNorm::L0,
        "lhalf" => PenaltyNorm::LHalf,
        "l1" => PenaltyNorm::L1,
        other => return Err(bad("sparsity.p", "l0, lhalf, or l1", other)),
    };
    let sparsity = match cfg.string("sparsity.mode", "penalty").as_str() {
        "penalty" => SparsityMode::Penalty {
            p: penalty_norm,
            beta: cfg.num("sparsity.beta", "a number", 0.1)?,
        },
        "constraint" => SparsityMode::Constraint {
            m: cfg.num("sparsity.m", "a count", 1)?,
        },
        other => return Err(bad("sparsity.mode", "penalty or constraint", other)),
    };

    let init_mode = match cfg.string("solver.init", "factual").as_str() {
        "factual" => InitMode::Factual,
        "zero" => InitMode::Zero,
        other => return Err(bad("solver.init", "factual or zero", other)),
    };
    // Cutoff 1.0 by default: the binary sigmoid hinge loses its gradient below
    // the decision threshold for any smaller cut-off, and a margin-1 target is
    // harmless for the multiclass hinge.
    let solver = SolverConfig {
        gamma: cfg.num("solver.gamma", "a number", 1.0)?,
        tau: cfg.num("solver.tau", "a number", 0.0)?,
        sparsity,
        cutoff: cfg.num("solver.cutoff", "a number", 1.0)?,
        iterations: cfg.num("solver.iterations", "a count", 200)?,
        sigma0: cfg.num("solver.sigma0", "a number", 0.1)?,
        init_mode,
        record_trajectory: false,
    };

    let space = SearchSpace {
        beta_grid: cfg.list("search.beta", "numbers", log_grid(-3, 3, 7))?,
        tau_grid: cfg.list("search.tau", "numbers", log_grid(-3, 3, 7))?,
        gamma_lo_exp: cfg.num("search.gamma_lo", "a number", -3.0)?,
        gamma_hi_exp: cfg.num("search.gamma_hi", "a number", 3.0)?,
        gamma_steps: cfg.num("search.gamma_steps", "a count", 10)?,
        k_candidates: cfg.list("search.k", "counts", vec![3, 4, 5])?,
    };

    let target = parse_policy(cfg.string("target.policy", "flip").as_str())?;

    let experiment = ExperimentConfig {
        method: cfg.string("method", "scfe"),
        plausibility,
        plausibility_params,
        target,
        space,
        solver,
        lof_k: cfg.num("lof.k", "a count", 20)?,
        seed: cfg.num("seed", "an integer", 0)?,
        jobs: cfg.num("jobs", "a count", 1)?,
    };

    let robustness_kinds = match cfg.raw("robustness.kinds") {
        None => vec![plausibility],
        Some(v) => v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_kind("robustness.kinds", s))
            .collect::<Result<_>>()?,
    };

    Ok(CliConfig {
        source,
        data_path,
        label_column: cfg.string("data.label", "label"),
        n_per_class: cfg.num("data.n_per_class", "a count", 100)?,
        housing_n: cfg.num("data.n", "a count", 400)?,
        centers: cfg.quad("data.centers", [[-5.0, 0.0], [5.0, 0.0]])?,
        cov: cfg.quad("data.cov", [[1.0, 0.0], [0.0, 1.0]])?,
        n_test: cfg.num("data.n_test", "a count", 100)?,
        pca_dims,
        model_path,
        hidden: cfg.list("model.hidden", "counts", vec![20, 20])?,
        epochs: cfg.num("model.epochs", "a count", 150)?,
        batch: cfg.num("model.batch", "a count", 32)?,
        lr: cfg.num("model.lr", "a number", 0.05)?,
        experiment,
        radii: cfg.list("robustness.radii", "numbers", vec![0.0, 0.05, 0.1])?,
        robustness_kinds,
        demo_n: cfg.num("demo.n", "a count", 5)?,
        demo_tau: cfg.num("demo.tau", "a number", 0.5)?,
        explain_out: cfg.raw("explain.out").map(PathBuf::from),
        out_dir,
    })
}

fn parse_kind(key: &str, name: &str) -> Result<PlausibilityKind> {
    PlausibilityKind::from_name(name).ok_or_else(|| bad(key, "none, kde, gmm, or knn", name))
}

fn parse_policy(value: &str) -> Result<TargetPolicy> {
    match value {
        "flip" => Ok(TargetPolicy::Flip),
        "next" => Ok(TargetPolicy::Next),
        other => match other.strip_prefix("fixed:").map(str::parse) {
            Some(Ok(class)) => Ok(TargetPolicy::Fixed(class)),
            _ => Err(bad("target.policy", "flip, next, or fixed:N", value)),
        },
    }
}
