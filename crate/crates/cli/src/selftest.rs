//! Fixed battery over every module: information properties, closed-form
//! rate curves, tilings, the stock verify-vp models and the Fano sweep.

use amdim_core::groups::{folner_boxes, folner_centered};
use amdim_core::infotheory::{binary_entropy, run_property_suite, PropertySuiteConfig};
use amdim_core::mdim::{fano_sweep, folner_cross_check, verify_vp, FanoSweepConfig, DEFAULT_BUDGET_POINTS};
use amdim_core::ratedist::{rd_normalized, DEFAULT_BUDGET_CELLS};
use amdim_core::stock::StockName;
use amdim_core::tilings::{covering_multiplicity, density, tile_boxes, validate};
use amdim_core::{Distortion, FiniteSubset, GroupModel, InvariantMeasureModel, MetricAlphabet, SolverOptions};
use anyhow::Result;
use serde::Serialize;

use crate::commands::{write_vp, Outcome};
use crate::output::Sink;

/// Tolerance on the Bernoulli closed form.
const RD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct SelftestSettings {
    pub seed: u64,
    pub property_trials: usize,
    pub budget_cells: usize,
    pub budget_points: usize,
}

impl SelftestSettings {
    pub fn canonical(&self) -> String {
        format!(
            "budget_cells={}\nbudget_points={}\nproperty_trials={}\nseed={}\nselftest=full\n",
            self.budget_cells, self.budget_points, self.property_trials, self.seed
        )
    }
}

#[derive(Serialize)]
struct Section {
    name: &'static str,
    passed: bool,
    failures: Vec<String>,
}

#[derive(Serialize)]
struct RdRow {
    eps: f64,
    n: usize,
    rate_per_symbol: f64,
    closed_form: f64,
    error: f64,
}

#[derive(Serialize)]
struct TilingRow {
    group: String,
    side: usize,
    window: String,
    valid: bool,
    remainder: f64,
    expected_remainder: f64,
    density: f64,
    counted_density: f64,
}

#[derive(Serialize)]
struct MultiplicityRow {
    group: String,
    side: usize,
    h: String,
    covered_fraction: f64,
    max_mult: usize,
    threshold: f64,
}

#[derive(Serialize)]
struct FanoCsv {
    n: usize,
    seed: u64,
    separation_factor: f64,
    set_size: usize,
    channel: String,
    codebook: usize,
    bound: f64,
    status: &'static str,
    mutual_information: Option<f64>,
}

fn section(name: &'static str, failures: Vec<String>) -> Section {
    Section { name, passed: failures.is_empty(), failures }
}

fn rd_section(sink: &Sink, out: &mut Outcome) -> Result<Section> {
    let a = MetricAlphabet::binary();
    let f = folner_boxes(&GroupModel::z())?;
    let mu = InvariantMeasureModel::product(vec![0.5, 0.5])?;
    let opts = SolverOptions::default();
    let mut rows = Vec::new();
    for eps in [0.05, 0.1, 0.2, 0.3] {
        let closed_form = std::f64::consts::LN_2 - binary_entropy(eps * (1.0 - opts.strict_margin));
        let curve = rd_normalized(&mu, &a, &Distortion::L1, eps, &f, 1..=3, DEFAULT_BUDGET_CELLS, &opts)?;
        for r in curve.rows {
            rows.push(RdRow { eps, n: r.n, rate_per_symbol: r.rate_per_symbol, closed_form, error: (r.rate_per_symbol - closed_form).abs() });
        }
    }
    out.files.push(sink.csv("selftest_rd.csv", &rows)?);
    let failures = rows
        .iter()
        .filter(|r| r.error > RD_TOL)
        .map(|r| format!("Bernoulli(1/2) rate at eps={} n={} off by {}", r.eps, r.n, r.error))
        .collect();
    Ok(section("rd_closed_form", failures))
}

fn counted_density(group: &GroupModel, t: &amdim_core::FiniteTiling, f: &FiniteSubset) -> f64 {
    let cells: usize = t.centers[0].iter().map(|c| t.tile(group, 0, c)).filter(|tile| tile.is_subset(f)).map(|tile| tile.len()).sum();
    cells as f64 / f.len() as f64
}

fn tiling_section(sink: &Sink, out: &mut Outcome) -> Result<Section> {
    let mut rows = Vec::new();
    let z = GroupModel::z();
    for side in [3usize, 4, 5] {
        for len in 1..=120usize {
            let window = FiniteSubset::interval(0, len as i64);
            let t = tile_boxes(&z, &window, side)?;
            let rep = validate(&z, &t);
            rows.push(TilingRow {
                group: "Z".into(),
                side,
                window: len.to_string(),
                valid: rep.valid,
                remainder: rep.remainder_fraction,
                expected_remainder: (len % side) as f64 / len as f64,
                density: density(&z, &t, &window, 0)?,
                counted_density: counted_density(&z, &t, &window),
            });
        }
    }
    let z2 = GroupModel::zd(2)?;
    let window = FiniteSubset::lattice_box(&[0, 0], &[30, 30]);
    let t = tile_boxes(&z2, &window, 3)?;
    let rep = validate(&z2, &t);
    rows.push(TilingRow {
        group: "Z2".into(),
        side: 3,
        window: "30x30".into(),
        valid: rep.valid,
        remainder: rep.remainder_fraction,
        expected_remainder: 0.0,
        density: density(&z2, &t, &window, 0)?,
        counted_density: counted_density(&z2, &t, &window),
    });
    let mut failures: Vec<String> = rows
        .iter()
        .filter(|r| !r.valid || (r.remainder - r.expected_remainder).abs() > 1e-15 || r.density != r.counted_density)
        .map(|r| format!("tiling {} side {} window {} fails", r.group, r.side, r.window))
        .collect();

    // H is at least ten times the shape; the tiling reaches H·H
    let mut mult = Vec::new();
    for side in [3usize, 4, 5] {
        let h = FiniteSubset::interval(0, 10 * side as i64);
        let t = tile_boxes(&z, &FiniteSubset::interval(-1, 20 * side as i64 + 1), side)?;
        let m = covering_multiplicity(&z, &t, &h, 0, 0.1)?;
        mult.push(MultiplicityRow { group: "Z".into(), side, h: (10 * side).to_string(), covered_fraction: m.covered_fraction, max_mult: m.max_mult, threshold: m.threshold });
    }
    let h = FiniteSubset::lattice_box(&[0, 0], &[30, 30]);
    let t = tile_boxes(&z2, &FiniteSubset::lattice_box(&[0, 0], &[61, 61]), 3)?;
    let m = covering_multiplicity(&z2, &t, &h, 0, 0.1)?;
    mult.push(MultiplicityRow { group: "Z2".into(), side: 3, h: "30x30".into(), covered_fraction: m.covered_fraction, max_mult: m.max_mult, threshold: m.threshold });
    failures.extend(
        mult.iter()
            .filter(|m| m.covered_fraction < 0.9)
            .map(|m| format!("multiplicity {} side {}: covered fraction {}", m.group, m.side, m.covered_fraction)),
    );
    out.files.push(sink.csv("selftest_tiling.csv", &rows)?);
    out.files.push(sink.csv("selftest_multiplicity.csv", &mult)?);
    Ok(section("tilings", failures))
}

fn fano_section(settings: &SelftestSettings, sink: &Sink, out: &mut Outcome) -> Result<Section> {
    let stock = StockName::Grid16Z.build(settings.seed)?;
    let cfg = FanoSweepConfig {
        eps: 1.0 / 32.0,
        d: 4.0,
        // (8D+2)ε as in the continuum argument, and the 2Dε the Fano step needs
        separation_factors: vec![34.0, 8.0],
        n_min: 1,
        n_max: 3,
        seeds: (settings.seed..settings.seed + 3).collect(),
        budget_points: settings.budget_points,
        budget_cells: settings.budget_cells,
    };
    let rows = fano_sweep(&stock.alphabet, &stock.folner, &cfg, &SolverOptions::default())?;
    let csv: Vec<FanoCsv> = rows
        .iter()
        .map(|r| {
            let (status, mi) = match &r.outcome {
                amdim_core::infotheory::FanoOutcome::NotApplicable { .. } => ("not_applicable", None),
                amdim_core::infotheory::FanoOutcome::Holds { mutual_information, .. } => ("holds", Some(*mutual_information)),
                amdim_core::infotheory::FanoOutcome::Violated { mutual_information, .. } => ("violated", Some(*mutual_information)),
            };
            FanoCsv {
                n: r.n,
                seed: r.seed,
                separation_factor: r.separation_factor,
                set_size: r.set_size,
                channel: r.channel.clone(),
                codebook: r.codebook,
                bound: r.bound,
                status,
                mutual_information: mi,
            }
        })
        .collect();
    out.files.push(sink.csv("selftest_fano.csv", &csv)?);
    let failures = rows
        .iter()
        .filter(|r| r.outcome.is_violation())
        .map(|r| format!("Fano bound violated: n={} seed={} factor={} channel={}", r.n, r.seed, r.separation_factor, r.channel))
        .collect();
    Ok(section("fano", failures))
}

fn cross_check_section(sink: &Sink, out: &mut Outcome) -> Result<Section> {
    let z = GroupModel::z();
    let mu = InvariantMeasureModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]])?;
    let rows = folner_cross_check(
        &mu,
        &MetricAlphabet::binary(),
        &Distortion::L1,
        0.1,
        &folner_boxes(&z)?,
        &folner_centered(&z)?,
        1..=6,
        DEFAULT_BUDGET_CELLS,
        &SolverOptions::default(),
    )?;
    out.files.push(sink.csv("selftest_folner_cross_check.csv", &rows)?);
    // reported, not asserted: the two families need not agree at finite n
    Ok(section("folner_cross_check", vec![]))
}

pub fn run(settings: &SelftestSettings, sink: &Sink) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut sections = Vec::new();

    let props = run_property_suite(&PropertySuiteConfig {
        trials: settings.property_trials,
        seed: settings.seed,
        ..PropertySuiteConfig::default()
    });
    out.files.push(sink.json("selftest_properties.json", &props)?);
    sections.push(section(
        "information_properties",
        props.testcases.iter().filter(|c| c.failures > 0).map(|c| format!("{}: {} failures", c.name, c.failures)).collect(),
    ));
    sections.push(rd_section(sink, &mut out)?);
    sections.push(tiling_section(sink, &mut out)?);
    for name in StockName::ALL {
        let mut stock = name.build(settings.seed)?;
        stock.vp.budget_cells = settings.budget_cells;
        stock.vp.budget_points = settings.budget_points;
        let report = verify_vp(&stock.alphabet, &stock.folner, &stock.vp)?;
        let vp_out = write_vp(&report, &stock.vp, sink, &format!("selftest_vp_{}", stock.name))?;
        out.files.extend(vp_out.files);
        sections.push(section(
            match name {
                StockName::BinaryZ => "verify_vp_binary_z",
                StockName::Grid16Z => "verify_vp_grid16_z",
                StockName::BinaryZ2 => "verify_vp_binary_z2",
            },
            vp_out.failures,
        ));
    }
    sections.push(fano_section(settings, sink, &mut out)?);
    sections.push(cross_check_section(sink, &mut out)?);

    #[derive(Serialize)]
    struct Summary<'a> {
        settings: &'a SelftestSettings,
        passed: bool,
        sections: &'a [Section],
    }
    let passed = sections.iter().all(|s| s.passed);
    out.files.push(sink.json("selftest.json", &Summary { settings, passed, sections: &sections })?);
    out.failures = sections.iter().flat_map(|s| s.failures.iter().map(move |f| format!("{}: {f}", s.name))).collect();
    Ok(out)
}

pub fn default_settings(seed: u64) -> SelftestSettings {
    SelftestSettings { seed, property_trials: 10_000, budget_cells: DEFAULT_BUDGET_CELLS, budget_points: DEFAULT_BUDGET_POINTS }
}
