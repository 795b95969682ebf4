//! Convergence paths and diagnostic sweeps over a list of horizons, with
//! CSV output.
//!
//! Problem paths solve the manufactured problem `u0 = x1^2 x2 + x2^2`,
//! `f = -2 (x2 + 1)` with `u = u0` imposed on the interaction layer and
//! report the L2 error against `u0`. Diagnostic paths put their own metric
//! in the error column; [`StudyReport::metric`] names it.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Manufactured, ManufacturedForcing, SinSin};
use crate::geometry::{regular_polygon, NeighborhoodSpec, Point2};
use crate::kernels::{Kernel, KernelFamily};
use crate::operator::{energy_norm_sq, k_gamma_estimate, sigma_polygon};
use crate::solver::{build_grid, build_stencil, l2_error, solve_with_constraint, DEFAULT_REFINE, DEFAULT_TOL};

/// Largest number of free cells a row may use.
pub const MAX_DOF: usize = 4_000_000;
/// Largest stencil radius in cells.
pub const MAX_STENCIL_RADIUS: usize = 64;

pub const CSV_HEADER: &str = "k,delta,n,h,dof,l2_error,rate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyPath {
    #[serde(alias = "FixedN")]
    FixedN,
    #[serde(alias = "GrowingN")]
    GrowingN,
    #[serde(alias = "BallBaseline")]
    BallBaseline,
    #[serde(alias = "SigmaTable")]
    SigmaTable,
    #[serde(alias = "NormLimit")]
    NormLimit,
    #[serde(alias = "KGamma")]
    KGamma,
}

impl StudyPath {
    fn is_problem(self) -> bool {
        matches!(self, StudyPath::FixedN | StudyPath::GrowingN | StudyPath::BallBaseline)
    }

    /// What the `l2_error` column holds for this path.
    pub fn metric(self) -> &'static str {
        match self {
            StudyPath::FixedN | StudyPath::GrowingN | StudyPath::BallBaseline => "l2_error",
            StudyPath::SigmaTable => "one_minus_sigma",
            StudyPath::NormLimit => "energy_minus_dirichlet",
            StudyPath::KGamma => "k_gamma",
        }
    }
}

/// Side count as a function of the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NRule {
    Fixed(usize),
    /// `n = multiple * ceil(c delta^-p)`, rounded up to even.
    Power { c: f64, p: f64, multiple: usize },
}

impl NRule {
    pub fn side_count(&self, delta: f64) -> usize {
        match *self {
            NRule::Fixed(n) => n,
            NRule::Power { c, p, multiple } => {
                let base = (c * delta.powf(-p) - 1e-12).ceil().max(1.0) as usize;
                let n = (multiple * base).max(3);
                n + n % 2
            }
        }
    }
}

fn default_beta() -> f64 {
    1.5
}

fn default_kernel() -> KernelFamily {
    KernelFamily::Constant
}

fn default_quad_order() -> usize {
    16
}

fn default_cg_tol() -> f64 {
    DEFAULT_TOL
}

fn default_refine() -> usize {
    DEFAULT_REFINE
}

fn default_multiple() -> usize {
    1
}

/// Flat study configuration, read from JSON.
///
/// The side-count rule is `n` for a fixed count, or `n_c`, `n_p` (and
/// optionally `n_multiple`) for `n = n_multiple * ceil(n_c delta^-n_p)`
/// rounded up to even. Without either, diagnostics use the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub path: StudyPath,
    pub delta_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_p: Option<f64>,
    #[serde(default = "default_multiple")]
    pub n_multiple: usize,
    /// Mesh exponent: `h = 1 / ceil(delta^-beta)`.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_kernel")]
    pub kernel: KernelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
    #[serde(default = "default_refine")]
    pub refine: usize,
}

impl StudyConfig {
    /// A config with defaults for everything but the path and horizons.
    pub fn new(path: StudyPath, delta_list: Vec<f64>) -> Self {
        Self {
            path,
            delta_list,
            n: None,
            n_c: None,
            n_p: None,
            n_multiple: default_multiple(),
            beta: default_beta(),
            kernel: default_kernel(),
            s: None,
            quad_order: default_quad_order(),
            cg_tol: default_cg_tol(),
            refine: default_refine(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// `h = 1 / ceil(delta^-beta)`.
    pub fn mesh_size(&self, delta: f64) -> f64 {
        1.0 / (delta.powf(-self.beta) - 1e-9).ceil()
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Kernel::new(self.kernel, 2, self.s)
    }

    /// The side-count rule, or `None` for the ball.
    pub fn n_rule(&self) -> Result<Option<NRule>> {
        match (self.n, self.n_c, self.n_p) {
            (Some(n), None, None) => Ok(Some(NRule::Fixed(n))),
            (None, Some(c), Some(p)) => Ok(Some(NRule::Power {
                c,
                p,
                multiple: self.n_multiple,
            })),
            (None, None, None) => Ok(None),
            _ => Err(Error::Config(
                "give either `n` or both `n_c` and `n_p`".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.delta_list.is_empty() {
            return bad("delta_list is empty".into());
        }
        if self.delta_list.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return bad("delta_list entries must be positive".into());
        }
        if self.delta_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("delta_list must be strictly decreasing".into());
        }
        if !(self.beta > 1.0) || !self.beta.is_finite() {
            return bad(format!("beta must exceed 1, got {}", self.beta));
        }
        if !(self.cg_tol > 0.0) {
            return bad(format!("cg_tol must be positive, got {}", self.cg_tol));
        }
        if self.refine == 0 {
            return bad("refine must be at least 1".into());
        }
        if self.quad_order < 2 {
            return bad(format!("quad_order must be at least 2, got {}", self.quad_order));
        }
        if self.n_multiple == 0 {
            return bad("n_multiple must be at least 1".into());
        }
        let rule = self.n_rule()?;
        match (self.path, rule) {
            (StudyPath::FixedN, Some(NRule::Fixed(n))) if n >= 3 => {}
            (StudyPath::FixedN, _) => return bad("FixedN needs `n` >= 3".into()),
            (StudyPath::GrowingN, Some(NRule::Power { c, p, .. })) => {
                if !(p > 0.0) || !(c > 0.0) {
                    return bad(format!("GrowingN needs n_c > 0 and n_p > 0, got {c}, {p}"));
                }
            }
            (StudyPath::GrowingN, _) => return bad("GrowingN needs `n_c` and `n_p`".into()),
            (StudyPath::BallBaseline, Some(_)) => {
                return bad("BallBaseline takes no side-count rule".into())
            }
            (StudyPath::SigmaTable, None) => return bad("SigmaTable needs a side-count rule".into()),
            (StudyPath::KGamma, None) => return bad("KGamma needs a side-count rule".into()),
            _ => {}
        }
        if let Some(NRule::Fixed(n)) = rule {
            if n < 3 {
                return bad(format!("n must be at least 3, got {n}"));
            }
        }
        self.kernel()?;
        Ok(())
    }
}

/// One horizon of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub k: usize,
    pub delta: f64,
    /// Side count; 0 for the ball.
    pub n: usize,
    /// Cell size; 0 when no grid is used.
    pub h: f64,
    pub dof: usize,
    pub l2_error: f64,
    /// `log2(e_{k-1} / e_k)`; absent for the first row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub config: StudyConfig,
    pub metric: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub metadata: StudyMetadata,
}

impl StudyReport {
    pub fn metric(&self) -> &str {
        &self.metadata.metric
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l2_error).collect()
    }
}

impl fmt::Display for StudyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>3} {:>10} {:>5} {:>12} {:>9} {:>22} {:>8}",
            "k", "delta", "n", "h", "dof", self.metadata.metric, "rate"
        )?;
        for r in &self.rows {
            let rate = r.rate.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
            writeln!(
                f,
                "{:>3} {:>10.6} {:>5} {:>12.6e} {:>9} {:>22.6e} {:>8}",
                r.k, r.delta, r.n, r.h, r.dof, r.l2_error, rate
            )?;
        }
        write!(f, "wall time {:.2} s", self.metadata.wall_time_s)
    }
}

fn neighborhood(delta: f64, n: Option<usize>) -> NeighborhoodSpec {
    match n {
        Some(n) => NeighborhoodSpec::regular(delta, n),
        None => NeighborhoodSpec::ball(delta),
    }
}

/// Errors before any work is done if the grid or stencil is too large.
fn check_size(h: f64, delta: f64) -> Result<()> {
    let grid = build_grid(h, delta)?;
    if grid.dof() > MAX_DOF {
        return Err(Error::Sizing(format!(
            "{} unknowns exceeds the limit of {MAX_DOF}",
            grid.dof()
        )));
    }
    if grid.layer_cells() > MAX_STENCIL_RADIUS {
        return Err(Error::Sizing(format!(
            "stencil radius {} cells exceeds the limit of {MAX_STENCIL_RADIUS}",
            grid.layer_cells()
        )));
    }
    Ok(())
}

fn run_row(cfg: &StudyConfig, kernel: &Kernel, rule: Option<NRule>, k: usize, delta: f64) -> Result<StudyRow> {
    let n = rule.map(|r| r.side_count(delta));
    let mut row = StudyRow {
        k,
        delta,
        n: n.unwrap_or(0),
        h: 0.0,
        dof: 0,
        l2_error: 0.0,
        rate: None,
    };
    match cfg.path {
        path if path.is_problem() => {
            let h = cfg.mesh_size(delta);
            check_size(h, delta)?;
            let grid = build_grid(h, delta)?;
            let stencil = build_stencil(&grid, kernel, &neighborhood(delta, n), cfg.refine)?;
            let sol = solve_with_constraint(&stencil, &grid, &ManufacturedForcing, Some(&Manufactured), cfg.cg_tol)?;
            row.h = h;
            row.dof = grid.dof();
            row.l2_error = l2_error(&sol.field, &Manufactured);
        }
        StudyPath::SigmaTable => {
            let n = n.expect("validated");
            let poly = regular_polygon(Point2::ORIGIN, 1.0, n, 0.0)?;
            let (s1, _) = sigma_polygon(kernel, &poly)?;
            row.l2_error = (1.0 - s1).abs();
        }
        StudyPath::NormLimit => {
            let h = cfg.mesh_size(delta);
            check_size(h, delta)?;
            let grid = build_grid(h, delta)?;
            let u = crate::solver::Field::sample(&grid, &SinSin);
            let e = energy_norm_sq(&u, kernel, &neighborhood(delta, n), cfg.refine)?;
            row.h = h;
            row.dof = grid.dof();
            row.l2_error = (e.polygon - SinSin::DIRICHLET_ENERGY).abs();
        }
        StudyPath::KGamma => {
            row.l2_error = k_gamma_estimate(kernel, &neighborhood(delta, n), 1)?;
        }
        _ => unreachable!("problem paths handled above"),
    }
    Ok(row)
}

/// Runs every horizon of `cfg`; rows are computed concurrently and reported in order.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let start = Instant::now();
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    let rule = cfg.n_rule()?;
    let mut rows = cfg
        .delta_list
        .par_iter()
        .enumerate()
        .map(|(k, &delta)| {
            run_row(cfg, &kernel, rule, k, delta).map_err(|e| Error::Row {
                k,
                delta,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for k in 1..rows.len() {
        rows[k].rate = Some((rows[k - 1].l2_error / rows[k].l2_error).log2());
    }
    Ok(StudyReport {
        rows,
        metadata: StudyMetadata {
            config: cfg.clone(),
            metric: cfg.path.metric().to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

/// Writes the rows as CSV with shortest round-trip float formatting.
pub fn write_csv(report: &StudyReport, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write_rows(&report.rows, &mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Shortest decimal that parses back to `v`; exponent form for very small or large magnitudes.
fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn write_rows<W: Write>(rows: &[StudyRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let rate = r.rate.map(fmt_float).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.k,
            fmt_float(r.delta),
            r.n,
            fmt_float(r.h),
            r.dof,
            fmt_float(r.l2_error),
            rate
        )?;
    }
    Ok(())
}

/// Reads rows written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<StudyRow>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::invalid(format!("{}: unexpected CSV header", path.display())));
    }
    lines
        .enumerate()
        .map(|(i, line)| parse_row(line).map_err(|msg| Error::invalid(format!("{}:{}: {msg}", path.display(), i + 2))))
        .collect()
}

fn parse_row(line: &str) -> std::result::Result<StudyRow, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 7 {
        return Err(format!("expected 7 fields, got {}", fields.len()));
    }
    fn num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
        s.parse().map_err(|_| format!("bad number `{s}`"))
    }
    Ok(StudyRow {
        k: num(fields[0])?,
        delta: num(fields[1])?,
        n: num(fields[2])?,
        h: num(fields[3])?,
        dof: num(fields[4])?,
        l2_error: num(fields[5])?,
        rate: if fields[6].is_empty() { None } else { Some(num(fields[6])?) },
    })
}
