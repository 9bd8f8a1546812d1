//! Subcommand drivers: read a config, run the core routines, write files.

use std::path::PathBuf;

use amdim_core::groups::folner_by_name;
use amdim_core::mdim::{
    mdim_slopes, s_profile, verify_vp, MeasureFamily, Slopes, DEFAULT_BUDGET_POINTS,
};
use amdim_core::ratedist::{rd_normalized, DEFAULT_BUDGET_CELLS};
use amdim_core::stock::StockName;
use amdim_core::tilings::{covering_multiplicity, density_report, greedy_tiling, tile_boxes, validate, Multiplicity};
use amdim_core::{
    Distortion, Elem, FiniteSubset, FiniteTiling, FolnerSequence, GroupModel, InvariantMeasureModel, MdimEstimate,
    MetricAlphabet, SolverOptions, VpConfig, VpReport,
};
use anyhow::Result;
use serde::Serialize;

use crate::config::{ConfigError, RawConfig};
use crate::output::Sink;

/// Files written by a run and the exact inequalities that failed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

const MODEL_KEYS: [&str; 9] =
    ["group", "folner", "alphabet", "eps_grid", "n_min", "n_max", "seed", "budget_points", "budget_cells"];
const SOLVER_KEYS: [&str; 6] = ["strict_margin", "s_max_factor", "max_outer", "max_inner", "inner_tol", "target_tol"];

fn known(extra: &[&'static str], solver: bool) -> Vec<&'static str> {
    let mut v: Vec<&str> = MODEL_KEYS.to_vec();
    v.extend_from_slice(extra);
    if solver {
        v.extend_from_slice(&SOLVER_KEYS);
    }
    v
}

fn core_err<'a>(cfg: &'a RawConfig, key: &str) -> impl Fn(amdim_core::Error) -> ConfigError + 'a {
    let key = key.to_string();
    move |e| cfg.error(&key, e.to_string())
}

/// `binary`, `hamming:k`, `grid:m`, `points:[...]` or `metric:[[...]]`.
pub fn parse_alphabet(cfg: &RawConfig) -> Result<MetricAlphabet, ConfigError> {
    let v = cfg.raw("alphabet").unwrap_or("binary");
    let (kind, arg) = v.split_once(':').map_or((v, ""), |(a, b)| (a.trim(), b.trim()));
    let err = core_err(cfg, "alphabet");
    let int = |s: &str| s.parse::<usize>().map_err(|e| cfg.error("alphabet", format!("cannot parse `{s}`: {e}")));
    let json = |s: &str| cfg.error("alphabet", format!("invalid JSON in `{s}`"));
    match kind {
        "binary" => Ok(MetricAlphabet::binary()),
        "hamming" => MetricAlphabet::hamming(int(arg)?).map_err(err),
        "grid" => MetricAlphabet::grid(int(arg)?).map_err(err),
        "points" => {
            let pts: Vec<f64> = serde_json::from_str(arg).map_err(|_| json(arg))?;
            MetricAlphabet::from_points(&pts).map_err(err)
        }
        "metric" => {
            let m: Vec<Vec<f64>> = serde_json::from_str(arg).map_err(|_| json(arg))?;
            MetricAlphabet::new((0..m.len()).map(|i| i.to_string()).collect(), &m).map_err(err)
        }
        other => Err(cfg.error("alphabet", format!("unknown alphabet `{other}`"))),
    }
}

pub fn parse_group(cfg: &RawConfig) -> Result<GroupModel, ConfigError> {
    GroupModel::parse(cfg.raw("group").unwrap_or("Z")).map_err(core_err(cfg, "group"))
}

pub fn parse_folner(cfg: &RawConfig, group: &GroupModel) -> Result<FolnerSequence, ConfigError> {
    folner_by_name(group, cfg.raw("folner").unwrap_or("boxes")).map_err(core_err(cfg, "folner"))
}

/// `L1`, `Lp:<p>` or `Linf:<alpha>`.
pub fn parse_distortion(s: &str) -> Result<Distortion, String> {
    let (kind, arg) = s.split_once(':').map_or((s.trim(), ""), |(a, b)| (a.trim(), b.trim()));
    let num = |a: &str| a.parse::<f64>().map_err(|e| format!("cannot parse `{a}`: {e}"));
    match kind {
        "L1" => Ok(Distortion::L1),
        "Lp" => Ok(Distortion::Lp { p: num(arg)? }),
        "Linf" => Ok(Distortion::Linf { alpha: num(arg)? }),
        other => Err(format!("unknown distortion `{other}` (use L1, Lp:<p> or Linf:<alpha>)")),
    }
}

fn eps_grid(cfg: &RawConfig) -> Result<Vec<f64>, ConfigError> {
    let grid: Vec<f64> = cfg.list("eps_grid")?.ok_or_else(|| cfg.error("eps_grid", "required key is missing"))?;
    if grid.is_empty() {
        return Err(cfg.error("eps_grid", "must list at least one value"));
    }
    if let Some(e) = grid.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(cfg.error("eps_grid", format!("eps must be positive, got {e}")));
    }
    Ok(grid)
}

fn n_range(cfg: &RawConfig) -> Result<(usize, usize), ConfigError> {
    let lo = cfg.get_or("n_min", 1usize)?;
    let hi = cfg.get_or("n_max", 3usize)?;
    if lo == 0 || lo > hi {
        return Err(cfg.error(if lo == 0 { "n_min" } else { "n_max" }, "need 1 <= n_min <= n_max"));
    }
    Ok((lo, hi))
}

fn solver_options(cfg: &RawConfig) -> Result<SolverOptions, ConfigError> {
    let d = SolverOptions::default();
    Ok(SolverOptions {
        strict_margin: cfg.get_or("strict_margin", d.strict_margin)?,
        s_max_factor: cfg.get_or("s_max_factor", d.s_max_factor)?,
        max_outer: cfg.get_or("max_outer", d.max_outer)?,
        max_inner: cfg.get_or("max_inner", d.max_inner)?,
        inner_tol: cfg.get_or("inner_tol", d.inner_tol)?,
        target_tol: cfg.get_or("target_tol", d.target_tol)?,
    })
}

#[derive(Serialize)]
struct BracketCsv {
    eps: f64,
    n: usize,
    window_size: usize,
    points: usize,
    s_lower: f64,
    s_upper: f64,
    stilde_lower: f64,
    stilde_upper: f64,
    max_cover_lower: usize,
    max_cover_upper: usize,
    avg_cover_lower: usize,
    avg_cover_upper: usize,
    exact: bool,
}

fn bracket_rows(rows: &[amdim_core::mdim::SRow]) -> Vec<BracketCsv> {
    rows.iter()
        .map(|r| BracketCsv {
            eps: r.eps,
            n: r.n,
            window_size: r.window_size,
            points: r.points,
            s_lower: r.s_lower,
            s_upper: r.s_upper,
            stilde_lower: r.stilde_lower,
            stilde_upper: r.stilde_upper,
            max_cover_lower: r.max_cover.lower,
            max_cover_upper: r.max_cover.upper,
            avg_cover_lower: r.avg_cover.lower,
            avg_cover_upper: r.avg_cover.upper,
            exact: r.max_cover.exact && r.avg_cover.exact,
        })
        .collect()
}

#[derive(Serialize)]
struct MdimJson {
    estimate: MdimEstimate,
    slopes: Option<Slopes>,
    slopes_unavailable: Option<String>,
}

pub fn cmd_mdim(cfg: &RawConfig, sink: &Sink) -> Result<Outcome> {
    cfg.check_known(&known(&[], false))?;
    let group = parse_group(cfg)?;
    let folner = parse_folner(cfg, &group)?;
    let alphabet = parse_alphabet(cfg)?;
    let grid = eps_grid(cfg)?;
    let (lo, hi) = n_range(cfg)?;
    let budget = cfg.get_or("budget_points", DEFAULT_BUDGET_POINTS)?;
    let estimate = s_profile(&alphabet, &folner, &grid, lo..=hi, budget)?;
    let (slopes, slopes_unavailable) = match mdim_slopes(&estimate) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut out = Outcome::default();
    out.files.push(sink.csv("mdim.csv", &bracket_rows(&estimate.rows))?);
    if !estimate.monotone_consistent {
        out.failures.push("covering brackets contradict monotonicity in eps".into());
    }
    for r in estimate.rows.iter().filter(|r| !r.ordering_holds()) {
        out.failures.push(format!("S~ <= S fails at eps={} n={}", r.eps, r.n));
    }
    out.files.push(sink.json("mdim.json", &MdimJson { estimate, slopes, slopes_unavailable })?);
    Ok(out)
}

/// `product:[...]`, `markov:[[...]]`, `point:<k>` or a JSON measure model.
pub fn parse_measure(cfg: &RawConfig, alphabet_size: usize) -> Result<InvariantMeasureModel, ConfigError> {
    let v = cfg.raw("measure").ok_or_else(|| cfg.error("measure", "required key is missing"))?;
    let err = core_err(cfg, "measure");
    let json_err = |e: serde_json::Error| cfg.error("measure", format!("invalid JSON: {e}"));
    let m = if v.starts_with('{') {
        serde_json::from_str(v).map_err(json_err)?
    } else {
        let (kind, arg) = v.split_once(':').ok_or_else(|| cfg.error("measure", "expected `kind:argument`"))?;
        match kind.trim() {
            "product" => InvariantMeasureModel::product(serde_json::from_str(arg).map_err(json_err)?).map_err(&err)?,
            "markov" => InvariantMeasureModel::markov(serde_json::from_str(arg).map_err(json_err)?).map_err(&err)?,
            "point" => {
                let k = arg.trim().parse::<usize>().map_err(|e| cfg.error("measure", e.to_string()))?;
                InvariantMeasureModel::point_mass(k, alphabet_size).map_err(&err)?
            }
            other => return Err(cfg.error("measure", format!("unknown measure kind `{other}`"))),
        }
    };
    if m.alphabet_size().is_some_and(|k| k != alphabet_size) {
        return Err(cfg.error("measure", format!("measure is over {} symbols, alphabet has {alphabet_size}", m.alphabet_size().unwrap_or(0))));
    }
    Ok(m)
}

#[derive(Serialize)]
struct RdCsv {
    eps: f64,
    n: usize,
    rate_per_symbol: f64,
    distortion: f64,
    multiplier: f64,
    gap: f64,
    mode: String,
    alpha: Option<f64>,
    window_size: usize,
    support: usize,
    status: String,
    flagged: bool,
}

pub fn cmd_rd(cfg: &RawConfig, sink: &Sink) -> Result<Outcome> {
    cfg.check_known(&known(&["measure", "distortion", "alphas"], true))?;
    let group = parse_group(cfg)?;
    let folner = parse_folner(cfg, &group)?;
    let alphabet = parse_alphabet(cfg)?;
    let grid = eps_grid(cfg)?;
    let (lo, hi) = n_range(cfg)?;
    let measure = parse_measure(cfg, alphabet.size())?;
    let opts = solver_options(cfg)?;
    let budget = cfg.get_or("budget_cells", DEFAULT_BUDGET_CELLS)?;
    let base = parse_distortion(cfg.raw("distortion").unwrap_or("L1")).map_err(|e| cfg.error("distortion", e))?;
    let modes: Vec<Distortion> = match (base, cfg.list::<f64>("alphas")?) {
        (Distortion::Linf { .. }, Some(alphas)) if !alphas.is_empty() => {
            alphas.into_iter().map(|alpha| Distortion::Linf { alpha }).collect()
        }
        (_, Some(_)) => return Err(cfg.error("alphas", "an alpha grid needs distortion = Linf:<alpha>").into()),
        (d, None) => vec![d],
    };
    let mut rows = Vec::new();
    let mut truncated = Vec::new();
    for mode in &modes {
        for &eps in &grid {
            let out = rd_normalized(&measure, &alphabet, mode, eps, &folner, lo..=hi, budget, &opts)
                .map_err(|e| cfg.error("distortion", e.to_string()))?;
            if let Some((n, why)) = &out.truncated {
                truncated.push(format!("{} eps={eps} n={n}: {why}", mode.label()));
            }
            for r in out.rows {
                let status = format!("{:?}", r.result.status).to_lowercase();
                rows.push(RdCsv {
                    eps,
                    n: r.n,
                    rate_per_symbol: r.rate_per_symbol,
                    distortion: r.result.distortion,
                    multiplier: r.result.multiplier,
                    gap: r.result.gap,
                    mode: mode.label(),
                    alpha: match mode {
                        Distortion::Linf { alpha } => Some(*alpha),
                        _ => None,
                    },
                    window_size: r.window_size,
                    support: r.support,
                    flagged: !matches!(r.result.status, amdim_core::ratedist::SolveStatus::Converged | amdim_core::ratedist::SolveStatus::Trivial),
                    status,
                });
            }
        }
    }
    let mut out = Outcome::default();
    out.files.push(sink.csv("rd.csv", &rows)?);
    #[derive(Serialize)]
    struct RdJson<'a> {
        measure: &'a InvariantMeasureModel,
        modes: Vec<String>,
        solver: SolverOptions,
        truncated: Vec<String>,
        flagged_rows: usize,
    }
    let flagged_rows = rows.iter().filter(|r| r.flagged).count();
    out.files.push(sink.json(
        "rd.json",
        &RdJson { measure: &measure, modes: modes.iter().map(Distortion::label).collect(), solver: opts, truncated, flagged_rows },
    )?);
    Ok(out)
}

fn parse_stock(s: &str) -> Option<StockName> {
    serde_json::from_value(serde_json::Value::String(s.trim().to_string())).ok()
}

/// Resolves a verify-vp config: an optional `stock` model whose fields may
/// be overridden key by key.
pub fn vp_setup(cfg: &RawConfig) -> Result<(MetricAlphabet, FolnerSequence, VpConfig), ConfigError> {
    let seed = cfg.get_or("seed", 0u64)?;
    let (mut alphabet, mut folner, mut vp) = match cfg.raw("stock") {
        Some(name) => {
            let stock = parse_stock(name)
                .ok_or_else(|| cfg.error("stock", "unknown stock model (binary_z, grid16_z, binary_z2)"))?
                .build(seed)
                .map_err(core_err(cfg, "stock"))?;
            (stock.alphabet, stock.folner, stock.vp)
        }
        None => {
            let group = parse_group(cfg)?;
            (MetricAlphabet::binary(), parse_folner(cfg, &group)?, VpConfig { seed, ..VpConfig::default() })
        }
    };
    if cfg.contains("alphabet") {
        alphabet = parse_alphabet(cfg)?;
    }
    if cfg.contains("group") || cfg.contains("folner") {
        let group = parse_group(cfg)?;
        folner = parse_folner(cfg, &group)?;
    }
    if cfg.contains("eps_grid") {
        vp.eps_grid = eps_grid(cfg)?;
    }
    vp.n_min = cfg.get_or("n_min", vp.n_min)?;
    vp.n_max = cfg.get_or("n_max", vp.n_max)?;
    if vp.n_min == 0 || vp.n_min > vp.n_max {
        return Err(cfg.error("n_max", "need 1 <= n_min <= n_max"));
    }
    if let Some(f) = cfg.json::<Vec<MeasureFamily>>("families")? {
        vp.families = f;
    }
    if let Some(m) = cfg.list::<String>("modes")? {
        vp.modes = m.iter().map(|s| parse_distortion(s)).collect::<Result<_, _>>().map_err(|e| cfg.error("modes", e))?;
    }
    if let Some(p) = cfg.list("ordering_p")? {
        vp.ordering_p = p;
    }
    if let Some(a) = cfg.list("ordering_alpha")? {
        vp.ordering_alpha = a;
    }
    vp.delta = cfg.get_or("delta", vp.delta)?;
    vp.seed = seed;
    vp.budget_points = cfg.get_or("budget_points", vp.budget_points)?;
    vp.budget_cells = cfg.get_or("budget_cells", vp.budget_cells)?;
    vp.slack = cfg.get_or("slack", vp.slack)?;
    let mut solver = solver_options(cfg)?;
    if !SOLVER_KEYS.iter().any(|k| cfg.contains(k)) {
        solver = vp.solver;
    }
    vp.solver = solver;
    for (i, f) in vp.families.iter().enumerate() {
        let bad = match f {
            MeasureFamily::Product { site, .. } => site.len() != alphabet.size(),
            MeasureFamily::Markov { transition, .. } => transition.len() != alphabet.size(),
            MeasureFamily::PointMass { symbol } => *symbol >= alphabet.size(),
            MeasureFamily::Empirical { .. } => false,
        };
        if bad {
            return Err(cfg.error("families", format!("family {i} ({}) does not match the alphabet size {}", f.label(), alphabet.size())));
        }
    }
    Ok((alphabet, folner, vp))
}

#[derive(Serialize)]
struct BoundCsv<'a> {
    eps: f64,
    n: usize,
    family: &'a str,
    mode: &'a str,
    support: usize,
    codebook: usize,
    rate_per_symbol: f64,
    bound_metric: String,
    bound: f64,
    gap: f64,
    status: String,
    holds: bool,
}

/// Writes a verify-vp report under `prefix` and returns its failures.
pub fn write_vp(report: &VpReport, vp: &VpConfig, sink: &Sink, prefix: &str) -> Result<Outcome> {
    let mut out = Outcome::default();
    #[derive(Serialize)]
    struct VpJson<'a> {
        config: &'a VpConfig,
        passed: bool,
        report: &'a VpReport,
    }
    out.files.push(sink.json(&format!("{prefix}.json"), &VpJson { config: vp, passed: report.passed(), report })?);
    out.files.push(sink.csv(&format!("{prefix}_brackets.csv"), &bracket_rows(&report.brackets))?);
    let bounds: Vec<BoundCsv> = report
        .bounds
        .iter()
        .map(|b| BoundCsv {
            eps: b.eps,
            n: b.n,
            family: &b.family,
            mode: &b.mode,
            support: b.support,
            codebook: b.codebook,
            rate_per_symbol: b.rate_per_symbol,
            bound_metric: match b.bound_metric {
                amdim_core::mdim::CoverMetric::Max => "max".into(),
                amdim_core::mdim::CoverMetric::Average => "avg".into(),
                amdim_core::mdim::CoverMetric::PowerMean(p) => format!("power_mean({p})"),
            },
            bound: b.bound,
            gap: b.gap,
            status: format!("{:?}", b.status).to_lowercase(),
            holds: b.holds,
        })
        .collect();
    out.files.push(sink.csv(&format!("{prefix}_bounds.csv"), &bounds)?);
    out.files.push(sink.csv(&format!("{prefix}_orderings.csv"), &report.orderings)?);
    out.files.push(sink.csv(&format!("{prefix}_ratios.csv"), &report.ratios)?);
    out.failures = report.failures.clone();
    Ok(out)
}

pub fn cmd_verify_vp(cfg: &RawConfig, sink: &Sink) -> Result<Outcome> {
    cfg.check_known(&known(
        &["stock", "families", "modes", "ordering_p", "ordering_alpha", "delta", "slack"],
        true,
    ))?;
    let (alphabet, folner, vp) = vp_setup(cfg)?;
    let report = verify_vp(&alphabet, &folner, &vp)?;
    write_vp(&report, &vp, sink, "vp")
}

#[derive(Serialize)]
struct TilingJson<'a> {
    tiling: &'a FiniteTiling,
    valid: bool,
    report: amdim_core::tilings::TilingReport,
    density: amdim_core::tilings::DensityReport,
    multiplicity: Vec<Multiplicity>,
}

#[derive(Serialize)]
struct TilingCsv {
    shape: usize,
    shape_size: usize,
    tiles: usize,
    density: f64,
    covered_fraction: Option<f64>,
    max_mult: Option<usize>,
    threshold: Option<f64>,
}

fn box_set(cfg: &RawConfig, key: &str, d: usize) -> Result<Option<FiniteSubset>, ConfigError> {
    let Some(dims) = cfg.json::<Vec<usize>>(key)? else { return Ok(None) };
    if dims.len() != d || dims.contains(&0) {
        return Err(cfg.error(key, format!("expected {d} positive side lengths")));
    }
    Ok(Some(FiniteSubset::lattice_box(&vec![0; d], &dims)))
}

pub fn cmd_tiling(cfg: &RawConfig, sink: &Sink) -> Result<Outcome> {
    cfg.check_known(&["group", "window", "side", "shapes", "tiler", "centers", "h", "multiplicity_eps", "seed"])?;
    let group = parse_group(cfg)?;
    let d = group.rank();
    let window = box_set(cfg, "window", d)?.ok_or_else(|| cfg.error("window", "required key is missing"))?;
    let shapes: Vec<FiniteSubset> = match (cfg.json::<Vec<Vec<Elem>>>("shapes")?, cfg.get::<usize>("side")?) {
        (Some(s), _) => s.into_iter().map(|v| v.into_iter().collect()).collect(),
        (None, Some(side)) => {
            if side == 0 {
                return Err(cfg.error("side", "must be positive").into());
            }
            vec![FiniteSubset::lattice_box(&vec![0; d], &vec![side; d])]
        }
        (None, None) => return Err(cfg.error("side", "give `side` or `shapes`").into()),
    };
    for (j, s) in shapes.iter().enumerate() {
        if let Some(bad) = s.iter().find(|e| group.check_elem(e).is_err()) {
            return Err(cfg.error("shapes", format!("shape {j}: element {:?} is not in {}", bad.0, group.name())).into());
        }
    }
    let tiling = match cfg.json::<Vec<Vec<Elem>>>("centers")? {
        Some(centers) => FiniteTiling { shapes, centers, window },
        None => match cfg.raw("tiler").unwrap_or("grid") {
            "grid" => {
                if shapes.len() != 1 || cfg.contains("shapes") {
                    return Err(cfg.error("tiler", "the grid tiler takes `side`; use `tiler = greedy` for shapes").into());
                }
                tile_boxes(&group, &window, cfg.require("side")?).map_err(core_err(cfg, "side"))?
            }
            "greedy" => greedy_tiling(&group, &window, &shapes, cfg.get_or("seed", 0u64)?)
                .map_err(core_err(cfg, "shapes"))?,
            other => return Err(cfg.error("tiler", format!("unknown tiler `{other}` (grid, greedy)")).into()),
        },
    };
    let report = validate(&group, &tiling);
    let mut out = Outcome::default();
    out.failures.extend(report.violations.iter().map(|v| format!("tiling violation: {v:?}")));
    let density = if report.violations.iter().any(|v| matches!(v, amdim_core::tilings::Violation::CenterListMismatch { .. })) {
        amdim_core::tilings::DensityReport { window_size: tiling.window.len(), per_shape: vec![], total: 0.0 }
    } else {
        density_report(&group, &tiling, &tiling.window)?
    };
    let multiplicity = match box_set(cfg, "h", d)? {
        Some(h) if density.per_shape.len() == tiling.shapes.len() => {
            let eps = cfg.get_or("multiplicity_eps", 0.1)?;
            (0..tiling.shapes.len())
                .map(|j| covering_multiplicity(&group, &tiling, &h, j, eps))
                .collect::<amdim_core::Result<Vec<_>>>()
                .map_err(core_err(cfg, "multiplicity_eps"))?
        }
        _ => vec![],
    };
    let rows: Vec<TilingCsv> = density
        .per_shape
        .iter()
        .enumerate()
        .map(|(j, &dens)| TilingCsv {
            shape: j,
            shape_size: tiling.shapes[j].len(),
            tiles: tiling.centers[j].len(),
            density: dens,
            covered_fraction: multiplicity.get(j).map(|m| m.covered_fraction),
            max_mult: multiplicity.get(j).map(|m| m.max_mult),
            threshold: multiplicity.get(j).map(|m| m.threshold),
        })
        .collect();
    out.files.push(sink.csv("tiling.csv", &rows)?);
    out.files.push(sink.json(
        "tiling.json",
        &TilingJson { tiling: &tiling, valid: report.valid, report, density, multiplicity },
    )?);
    Ok(out)
}
