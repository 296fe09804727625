//! Experiment configuration: parsing, validation, and normalization.
//!
//! Configs are JSON objects with four sections:
//!
//! ```json
//! {
//!   "curve":      {"base_radius": 1.0, "cos": [], "sin": [], "n_nodes": 256},
//!   "solver":     {"basis_order": 24, "svd_tol": 1e-12, "n_nodes": 256},
//!   "experiment": "spectrum",
//!   "params":     {"k_max": 10, "delta_cluster": 1e-5},
//!   "output":     {"path": ".", "format": "json"}
//! }
//! ```
//!
//! Only `curve` and `experiment` are required; everything else defaults.
//! Validation is a single manual pass over the JSON value tree that collects
//! *every* violation (unknown key, wrong type, missing field, semantic
//! conflict) with its exact field path, instead of stopping at the first.
//! A config that validates is normalized — all defaults filled in — and
//! `to_value` emits JSON that re-parses to the identical config, so a run
//! can always be reproduced from its report's config echo alone.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{json, Map, Value};
use steklov_core::{CurveSpec, SolverOptions, SplitParams, TrigSeries};
use steklov_core::{
    DEFAULT_DELTA_CLUSTER, DEFAULT_EPS_CRIT, DEFAULT_R_MIN, DEFAULT_SVD_TOL, DEFAULT_T_STEP,
    DEFAULT_UC_TOL, DEFAULT_UC_WINDOW_FRACTION,
};

/// Default grid size when neither section provides one.
pub const DEFAULT_N_NODES: usize = 256;
/// Default harmonic basis order.
pub const DEFAULT_BASIS_ORDER: usize = 24;
/// Default retained-eigenvalue cap (index of the highest kept eigenvalue).
pub const DEFAULT_K_MAX: usize = 10;

/// One schema violation, addressed by JSON field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

/// Validation failure carrying every violation found in one pass.
#[derive(Debug, Clone)]
pub struct SchemaError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(out, "config rejected: {} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(out, "  at {}: {}", v.path, v.reason)?;
        }
        Ok(())
    }
}

impl std::error::Error for SchemaError {}

impl SchemaError {
    /// Machine-readable form, mirrored on stderr by the binary.
    pub fn to_value(&self) -> Value {
        json!({
            "schema_violations": self.violations.iter().map(|v| {
                json!({"path": v.path, "reason": v.reason})
            }).collect::<Vec<_>>()
        })
    }
}

/// Output format of the data files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    JsonCsv,
}

impl OutputFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::JsonCsv => "json+csv",
        }
    }
}

/// Where and how result files are written.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// Directory for result files (the CLI `--out` flag overrides it).
    pub path: String,
    pub format: OutputFormat,
}

/// The experiment to run, with its parameters fully defaulted.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Spectrum {
        k_max: usize,
        delta_cluster: f64,
    },
    DerivativeCheck {
        cluster: usize,
        sigma: TrigSeries,
        t_step: f64,
        k_max: usize,
        delta_cluster: f64,
    },
    Split {
        trials: usize,
        amplitude: f64,
        max_mode: usize,
        seed: u64,
        t_step: f64,
        gap_min: Option<f64>,
        k_max: usize,
        delta_cluster: f64,
    },
    CriticalScan {
        cluster: usize,
        n_samples: usize,
        eps_crit: f64,
        k_max: usize,
        delta_cluster: f64,
    },
    UcCheck {
        n_fields: usize,
        window_fraction: f64,
        tol: f64,
        k_max: usize,
        delta_cluster: f64,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Spectrum { .. } => "spectrum",
            Experiment::DerivativeCheck { .. } => "derivative-check",
            Experiment::Split { .. } => "split",
            Experiment::CriticalScan { .. } => "critical-scan",
            Experiment::UcCheck { .. } => "uc-check",
        }
    }

    pub fn k_max(&self) -> usize {
        match self {
            Experiment::Spectrum { k_max, .. }
            | Experiment::DerivativeCheck { k_max, .. }
            | Experiment::Split { k_max, .. }
            | Experiment::CriticalScan { k_max, .. }
            | Experiment::UcCheck { k_max, .. } => *k_max,
        }
    }

    pub fn delta_cluster(&self) -> f64 {
        match self {
            Experiment::Spectrum { delta_cluster, .. }
            | Experiment::DerivativeCheck { delta_cluster, .. }
            | Experiment::Split { delta_cluster, .. }
            | Experiment::CriticalScan { delta_cluster, .. }
            | Experiment::UcCheck { delta_cluster, .. } => *delta_cluster,
        }
    }
}

/// A validated, fully-defaulted experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub curve: CurveSpec,
    pub basis_order: usize,
    pub svd_tol: f64,
    pub experiment: Experiment,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Solver knobs in the shape the core operations take.
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            basis_order: self.basis_order,
            svd_tol: self.svd_tol,
            k_max: self.experiment.k_max(),
            delta_cluster: self.experiment.delta_cluster(),
        }
    }

    /// Normalized JSON echo; parsing it back yields `self`.
    pub fn to_value(&self) -> Value {
        let params = match &self.experiment {
            Experiment::Spectrum {
                k_max,
                delta_cluster,
            } => json!({"k_max": k_max, "delta_cluster": delta_cluster}),
            Experiment::DerivativeCheck {
                cluster,
                sigma,
                t_step,
                k_max,
                delta_cluster,
            } => json!({
                "cluster": cluster,
                "sigma": sigma_value(sigma),
                "t_step": t_step,
                "k_max": k_max,
                "delta_cluster": delta_cluster,
            }),
            Experiment::Split {
                trials,
                amplitude,
                max_mode,
                seed,
                t_step,
                gap_min,
                k_max,
                delta_cluster,
            } => {
                let mut m = json!({
                    "trials": trials,
                    "amplitude": amplitude,
                    "max_mode": max_mode,
                    "seed": seed,
                    "t_step": t_step,
                    "k_max": k_max,
                    "delta_cluster": delta_cluster,
                });
                if let Some(g) = gap_min {
                    m["gap_min"] = json!(g);
                }
                m
            }
            Experiment::CriticalScan {
                cluster,
                n_samples,
                eps_crit,
                k_max,
                delta_cluster,
            } => json!({
                "cluster": cluster,
                "n_samples": n_samples,
                "eps_crit": eps_crit,
                "k_max": k_max,
                "delta_cluster": delta_cluster,
            }),
            Experiment::UcCheck {
                n_fields,
                window_fraction,
                tol,
                k_max,
                delta_cluster,
            } => json!({
                "n_fields": n_fields,
                "window_fraction": window_fraction,
                "tol": tol,
                "k_max": k_max,
                "delta_cluster": delta_cluster,
            }),
        };
        let mut curve = json!({
            "base_radius": self.curve.base_radius,
            "cos": self.curve.cos,
            "sin": self.curve.sin,
            "n_nodes": self.curve.n_nodes,
        });
        if self.curve.r_min != DEFAULT_R_MIN {
            curve["r_min"] = json!(self.curve.r_min);
        }
        json!({
            "curve": curve,
            "solver": {
                "basis_order": self.basis_order,
                "svd_tol": self.svd_tol,
                "n_nodes": self.curve.n_nodes,
            },
            "experiment": self.experiment.kind(),
            "params": params,
            "output": {
                "path": self.output.path,
                "format": self.output.format.as_str(),
            },
        })
    }
}

fn sigma_value(s: &TrigSeries) -> Value {
    json!({"mean": s.mean, "cos": s.cos, "sin": s.sin})
}

// ---------------------------------------------------------------------------
// Validation walk
// ---------------------------------------------------------------------------

struct Walker {
    violations: Vec<Violation>,
}

impl Walker {
    fn push(&mut self, path: &str, reason: impl Into<String>) {
        self.violations.push(Violation {
            path: path.to_string(),
            reason: reason.into(),
        });
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(m) => Some(m),
            None => {
                self.push(path, format!("expected an object, got {}", kind_of(v)));
                None
            }
        }
    }

    /// Reject keys outside the allowed set (typo defense: configs must not
    /// silently ignore anything).
    fn check_keys(&mut self, map: &Map<String, Value>, path: &str, allowed: &[&str]) {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        for key in map.keys() {
            if !allowed.contains(key.as_str()) {
                self.push(
                    &format!("{path}.{key}"),
                    format!("unknown key (allowed: {})", allowed_list(&allowed)),
                );
            }
        }
    }

    fn f64(&mut self, map: &Map<String, Value>, path: &str, key: &str) -> Option<f64> {
        let v = map.get(key)?;
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(
                    &format!("{path}.{key}"),
                    format!("expected a finite number, got {}", kind_of(v)),
                );
                None
            }
        }
    }

    fn positive_f64(&mut self, map: &Map<String, Value>, path: &str, key: &str) -> Option<f64> {
        let x = self.f64(map, path, key)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.push(&format!("{path}.{key}"), format!("must be > 0, got {x}"));
            None
        }
    }

    fn usize(&mut self, map: &Map<String, Value>, path: &str, key: &str) -> Option<usize> {
        let v = map.get(key)?;
        match v.as_u64() {
            Some(x) => Some(x as usize),
            None => {
                self.push(
                    &format!("{path}.{key}"),
                    format!("expected a nonnegative integer, got {}", terse(v)),
                );
                None
            }
        }
    }

    fn u64(&mut self, map: &Map<String, Value>, path: &str, key: &str) -> Option<u64> {
        let v = map.get(key)?;
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                self.push(
                    &format!("{path}.{key}"),
                    format!("expected a nonnegative integer, got {}", terse(v)),
                );
                None
            }
        }
    }

    fn string<'a>(
        &mut self,
        map: &'a Map<String, Value>,
        path: &str,
        key: &str,
    ) -> Option<&'a str> {
        let v = map.get(key)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                self.push(
                    &format!("{path}.{key}"),
                    format!("expected a string, got {}", kind_of(v)),
                );
                None
            }
        }
    }

    fn f64_list(&mut self, map: &Map<String, Value>, path: &str, key: &str) -> Option<Vec<f64>> {
        let v = map.get(key)?;
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.push(
                    &format!("{path}.{key}"),
                    format!("expected an array of numbers, got {}", kind_of(v)),
                );
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, item) in arr.iter().enumerate() {
            match item.as_f64() {
                Some(x) if x.is_finite() => out.push(x),
                _ => {
                    self.push(
                        &format!("{path}.{key}[{i}]"),
                        format!("expected a finite number, got {}", kind_of(item)),
                    );
                    return None;
                }
            }
        }
        Some(out)
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn terse(v: &Value) -> String {
    let s = v.to_string();
    if s.len() > 32 {
        format!("{}...", &s[..32])
    } else {
        s
    }
}

fn allowed_list(set: &BTreeSet<&str>) -> String {
    set.iter().copied().collect::<Vec<_>>().join(", ")
}

const EXPERIMENT_KINDS: [&str; 5] = [
    "spectrum",
    "derivative-check",
    "split",
    "critical-scan",
    "uc-check",
];

/// Parse and validate a config, collecting every violation before failing.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, SchemaError> {
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return Err(SchemaError {
                violations: vec![Violation {
                    path: "<root>".to_string(),
                    reason: format!("invalid JSON: {e}"),
                }],
            })
        }
    };

    let mut w = Walker {
        violations: Vec::new(),
    };
    let config = walk_root(&mut w, &root);
    match config {
        Some(c) if w.violations.is_empty() => Ok(c),
        _ => Err(SchemaError {
            violations: w.violations,
        }),
    }
}

fn walk_root(w: &mut Walker, root: &Value) -> Option<ExperimentConfig> {
    let top = w.object(root, "<root>")?;
    w.check_keys(top, "<root>", &["curve", "solver", "experiment", "params", "output"]);

    // --- solver section (all optional) ---
    let mut basis_order = DEFAULT_BASIS_ORDER;
    let mut svd_tol = DEFAULT_SVD_TOL;
    let mut solver_n_nodes: Option<usize> = None;
    if let Some(sv) = top.get("solver") {
        if let Some(solver) = w.object(sv, "solver") {
            w.check_keys(solver, "solver", &["basis_order", "svd_tol", "n_nodes"]);
            if solver.contains_key("basis_order") {
                if let Some(m) = w.usize(solver, "solver", "basis_order") {
                    if m == 0 {
                        w.push("solver.basis_order", "must be at least 1");
                    } else {
                        basis_order = m;
                    }
                }
            }
            if solver.contains_key("svd_tol") {
                if let Some(t) = w.positive_f64(solver, "solver", "svd_tol") {
                    if t >= 1.0 {
                        w.push("solver.svd_tol", format!("must be < 1, got {t}"));
                    } else {
                        svd_tol = t;
                    }
                }
            }
            if solver.contains_key("n_nodes") {
                solver_n_nodes = w.usize(solver, "solver", "n_nodes");
            }
        }
    }

    // --- curve section (required) ---
    let mut base_radius: Option<f64> = None;
    let mut cos: Option<Vec<f64>> = None;
    let mut sin: Option<Vec<f64>> = None;
    let mut curve_n_nodes: Option<usize> = None;
    let mut r_min: Option<f64> = None;
    match top.get("curve") {
        None => w.push("curve", "missing required section"),
        Some(cv) => {
            if let Some(cm) = w.object(cv, "curve") {
                w.check_keys(cm, "curve", &["base_radius", "cos", "sin", "n_nodes", "r_min"]);
                base_radius = if cm.contains_key("base_radius") {
                    w.positive_f64(cm, "curve", "base_radius")
                } else {
                    Some(1.0)
                };
                cos = if cm.contains_key("cos") {
                    w.f64_list(cm, "curve", "cos")
                } else {
                    Some(Vec::new())
                };
                sin = if cm.contains_key("sin") {
                    w.f64_list(cm, "curve", "sin")
                } else {
                    Some(Vec::new())
                };
                if cm.contains_key("n_nodes") {
                    curve_n_nodes = w.usize(cm, "curve", "n_nodes");
                }
                r_min = if cm.contains_key("r_min") {
                    w.positive_f64(cm, "curve", "r_min")
                } else {
                    Some(DEFAULT_R_MIN)
                };
            }
        }
    }

    // n_nodes resolution: the curve's own value wins; the solver value
    // fills in when the curve omits it; both present and unequal is a
    // contradiction, not a precedence question. The checks run regardless
    // of whether the other curve fields validated, so one bad field does
    // not mask grid problems.
    let n_nodes = match (curve_n_nodes, solver_n_nodes) {
        (Some(nc), Some(ns)) if nc != ns => {
            w.push(
                "solver.n_nodes",
                format!("conflicts with curve.n_nodes ({ns} vs {nc})"),
            );
            nc
        }
        (Some(nc), _) => nc,
        (None, Some(ns)) => ns,
        (None, None) => DEFAULT_N_NODES,
    };
    let n_path = if curve_n_nodes.is_some() {
        "curve.n_nodes"
    } else {
        "solver.n_nodes"
    };
    let mut grid_ok = true;
    if n_nodes < 4 || n_nodes % 2 != 0 {
        w.push(n_path, format!("must be an even integer >= 4, got {n_nodes}"));
        grid_ok = false;
    } else if basis_order * 4 > n_nodes {
        w.push(
            "solver.basis_order",
            format!("must be at most n_nodes/4 = {}, got {basis_order}", n_nodes / 4),
        );
    }

    let curve = if let (Some(base_radius), Some(cos), Some(sin), Some(r_min)) =
        (base_radius, cos, sin, r_min)
    {
        let spec = CurveSpec {
            base_radius,
            cos,
            sin,
            n_nodes,
            r_min,
        };
        if grid_ok {
            if n_nodes < 4 * spec.max_mode() {
                w.push(
                    n_path,
                    format!(
                        "must be at least 4x the highest curve mode ({}), got {n_nodes}",
                        spec.max_mode()
                    ),
                );
            } else if let Err(e) = spec.validate() {
                w.push("curve", e.to_string());
            }
        }
        Some(spec)
    } else {
        None
    };

    // --- experiment + params ---
    let kind = match top.get("experiment") {
        None => {
            w.push("experiment", "missing required field");
            None
        }
        Some(v) => match v.as_str() {
            Some(s) if EXPERIMENT_KINDS.contains(&s) => Some(s.to_string()),
            Some(s) => {
                w.push(
                    "experiment",
                    format!(
                        "unknown experiment {s:?} (one of: {})",
                        EXPERIMENT_KINDS.join(", ")
                    ),
                );
                None
            }
            None => {
                w.push("experiment", format!("expected a string, got {}", kind_of(v)));
                None
            }
        },
    };

    let empty = Map::new();
    let params: &Map<String, Value> = match top.get("params") {
        None => &empty,
        Some(pv) => w.object(pv, "params").unwrap_or(&empty),
    };
    let experiment = kind.and_then(|k| walk_params(w, &k, params));

    // --- output section ---
    let mut output = OutputConfig {
        path: ".".to_string(),
        format: OutputFormat::Json,
    };
    if let Some(ov) = top.get("output") {
        if let Some(om) = w.object(ov, "output") {
            w.check_keys(om, "output", &["path", "format"]);
            if om.contains_key("path") {
                if let Some(p) = w.string(om, "output", "path") {
                    output.path = p.to_string();
                }
            }
            if om.contains_key("format") {
                match w.string(om, "output", "format") {
                    Some("json") => output.format = OutputFormat::Json,
                    Some("json+csv") => output.format = OutputFormat::JsonCsv,
                    Some(other) => w.push(
                        "output.format",
                        format!("expected \"json\" or \"json+csv\", got {other:?}"),
                    ),
                    None => {}
                }
            }
        }
    }

    Some(ExperimentConfig {
        curve: curve?,
        basis_order,
        svd_tol,
        experiment: experiment?,
        output,
    })
}

fn walk_params(w: &mut Walker, kind: &str, p: &Map<String, Value>) -> Option<Experiment> {
    // Shared knobs every experiment accepts.
    let mut k_max = DEFAULT_K_MAX;
    if p.contains_key("k_max") {
        if let Some(k) = w.usize(p, "params", "k_max") {
            k_max = k;
        }
    }
    let mut delta_cluster = DEFAULT_DELTA_CLUSTER;
    if p.contains_key("delta_cluster") {
        if let Some(d) = w.positive_f64(p, "params", "delta_cluster") {
            delta_cluster = d;
        }
    }
    let t_step = |w: &mut Walker| -> f64 {
        if p.contains_key("t_step") {
            w.positive_f64(p, "params", "t_step").unwrap_or(DEFAULT_T_STEP)
        } else {
            DEFAULT_T_STEP
        }
    };

    match kind {
        "spectrum" => {
            w.check_keys(p, "params", &["k_max", "delta_cluster"]);
            Some(Experiment::Spectrum {
                k_max,
                delta_cluster,
            })
        }
        "derivative-check" => {
            w.check_keys(
                p,
                "params",
                &["cluster", "sigma", "t_step", "k_max", "delta_cluster"],
            );
            let cluster = if p.contains_key("cluster") {
                w.usize(p, "params", "cluster").unwrap_or(1)
            } else {
                1
            };
            let sigma = match p.get("sigma") {
                None => {
                    w.push("params.sigma", "missing required field (perturbation direction)");
                    None
                }
                Some(sv) => walk_sigma(w, sv, "params.sigma"),
            };
            Some(Experiment::DerivativeCheck {
                cluster,
                sigma: sigma?,
                t_step: t_step(w),
                k_max,
                delta_cluster,
            })
        }
        "split" => {
            w.check_keys(
                p,
                "params",
                &[
                    "trials",
                    "amplitude",
                    "max_mode",
                    "seed",
                    "t_step",
                    "gap_min",
                    "k_max",
                    "delta_cluster",
                ],
            );
            let trials = if p.contains_key("trials") {
                match w.usize(p, "params", "trials") {
                    Some(0) => {
                        w.push("params.trials", "must be at least 1");
                        20
                    }
                    Some(t) => t,
                    None => 20,
                }
            } else {
                20
            };
            let amplitude = if p.contains_key("amplitude") {
                w.positive_f64(p, "params", "amplitude").unwrap_or(0.05)
            } else {
                0.05
            };
            let max_mode = if p.contains_key("max_mode") {
                match w.usize(p, "params", "max_mode") {
                    Some(0) => {
                        w.push("params.max_mode", "must be at least 1");
                        6
                    }
                    Some(m) => m,
                    None => 6,
                }
            } else {
                6
            };
            let seed = if p.contains_key("seed") {
                w.u64(p, "params", "seed").unwrap_or(42)
            } else {
                42
            };
            let gap_min = if p.contains_key("gap_min") {
                w.positive_f64(p, "params", "gap_min")
            } else {
                None
            };
            Some(Experiment::Split {
                trials,
                amplitude,
                max_mode,
                seed,
                t_step: t_step(w),
                gap_min,
                k_max,
                delta_cluster,
            })
        }
        "critical-scan" => {
            w.check_keys(
                p,
                "params",
                &["cluster", "n_samples", "eps_crit", "k_max", "delta_cluster"],
            );
            let cluster = if p.contains_key("cluster") {
                w.usize(p, "params", "cluster").unwrap_or(1)
            } else {
                1
            };
            let n_samples = if p.contains_key("n_samples") {
                match w.usize(p, "params", "n_samples") {
                    Some(0) => {
                        w.push("params.n_samples", "must be at least 1");
                        64
                    }
                    Some(n) => n,
                    None => 64,
                }
            } else {
                64
            };
            let eps_crit = if p.contains_key("eps_crit") {
                w.positive_f64(p, "params", "eps_crit").unwrap_or(DEFAULT_EPS_CRIT)
            } else {
                DEFAULT_EPS_CRIT
            };
            Some(Experiment::CriticalScan {
                cluster,
                n_samples,
                eps_crit,
                k_max,
                delta_cluster,
            })
        }
        "uc-check" => {
            w.check_keys(
                p,
                "params",
                &["n_fields", "window_fraction", "tol", "k_max", "delta_cluster"],
            );
            let n_fields = if p.contains_key("n_fields") {
                match w.usize(p, "params", "n_fields") {
                    Some(0) => {
                        w.push("params.n_fields", "must be at least 1");
                        10
                    }
                    Some(n) => n,
                    None => 10,
                }
            } else {
                10
            };
            if k_max < n_fields {
                w.push(
                    "params.k_max",
                    format!("must be at least n_fields ({n_fields}) to retain enough eigenfields"),
                );
            }
            let window_fraction = if p.contains_key("window_fraction") {
                match w.positive_f64(p, "params", "window_fraction") {
                    Some(f) if f < 1.0 => f,
                    Some(f) => {
                        w.push("params.window_fraction", format!("must be < 1, got {f}"));
                        DEFAULT_UC_WINDOW_FRACTION
                    }
                    None => DEFAULT_UC_WINDOW_FRACTION,
                }
            } else {
                DEFAULT_UC_WINDOW_FRACTION
            };
            let tol = if p.contains_key("tol") {
                w.positive_f64(p, "params", "tol").unwrap_or(DEFAULT_UC_TOL)
            } else {
                DEFAULT_UC_TOL
            };
            Some(Experiment::UcCheck {
                n_fields,
                window_fraction,
                tol,
                k_max,
                delta_cluster,
            })
        }
        _ => unreachable!("kind is pre-validated"),
    }
}

fn walk_sigma(w: &mut Walker, v: &Value, path: &str) -> Option<TrigSeries> {
    let m = w.object(v, path)?;
    w.check_keys(m, path, &["mean", "cos", "sin"]);
    let mean = if m.contains_key("mean") {
        w.f64(m, path, "mean")?
    } else {
        0.0
    };
    let cos = if m.contains_key("cos") {
        w.f64_list(m, path, "cos")?
    } else {
        Vec::new()
    };
    let sin = if m.contains_key("sin") {
        w.f64_list(m, path, "sin")?
    } else {
        Vec::new()
    };
    Some(TrigSeries { mean, cos, sin })
}

/// Split-experiment parameters in core's shape.
pub fn split_params(experiment: &Experiment) -> Option<SplitParams> {
    if let Experiment::Split {
        trials,
        amplitude,
        max_mode,
        seed,
        t_step,
        gap_min,
        ..
    } = experiment
    {
        Some(SplitParams {
            n_trials: *trials,
            amplitude: *amplitude,
            max_mode: *max_mode,
            seed: *seed,
            t_step: *t_step,
            gap_min: *gap_min,
        })
    } else {
        None
    }
}
