//! Stock shift models and sweep configurations used by the self-test and
//! the acceptance suite.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::groups::{folner_boxes, FolnerSequence, GroupModel};
use crate::mdim::{MeasureFamily, VpConfig};
use crate::spaces::{MetricAlphabet, OrbitKind};

#[derive(Clone, Debug)]
pub struct StockModel {
    pub name: &'static str,
    pub alphabet: MetricAlphabet,
    pub folner: FolnerSequence,
    pub vp: VpConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StockName {
    BinaryZ,
    Grid16Z,
    BinaryZ2,
}

impl StockName {
    pub const ALL: [StockName; 3] = [StockName::BinaryZ, StockName::Grid16Z, StockName::BinaryZ2];

    pub fn build(self, seed: u64) -> Result<StockModel> {
        match self {
            StockName::BinaryZ => binary_z(seed),
            StockName::Grid16Z => grid16_z(seed),
            StockName::BinaryZ2 => binary_z2(seed),
        }
    }
}

fn empirical() -> MeasureFamily {
    MeasureFamily::Empirical { factor: 2.0, metric: OrbitKind::Average }
}

fn product(name: &str, site: Vec<f64>) -> MeasureFamily {
    MeasureFamily::Product { name: name.into(), site }
}

/// Full binary shift over `Z` with the discrete metric.
pub fn binary_z(seed: u64) -> Result<StockModel> {
    let group = GroupModel::z();
    let vp = VpConfig {
        eps_grid: vec![0.3, 0.2, 0.1, 0.05],
        n_min: 1,
        n_max: 4,
        families: vec![
            product("bernoulli(0.5)", vec![0.5, 0.5]),
            product("bernoulli(0.2)", vec![0.8, 0.2]),
            MeasureFamily::Markov { name: "markov(0.9,0.8)".into(), transition: vec![vec![0.9, 0.1], vec![0.2, 0.8]] },
            empirical(),
            MeasureFamily::PointMass { symbol: 0 },
        ],
        seed,
        ..VpConfig::default()
    };
    Ok(StockModel { name: "binary_z", alphabet: MetricAlphabet::binary(), folner: folner_boxes(&group)?, vp })
}

/// Full shift over `Z` on `A_16 = {0, 1/16, ..., 1}` with `|a - b|`.
pub fn grid16_z(seed: u64) -> Result<StockModel> {
    let group = GroupModel::z();
    let vp = VpConfig {
        eps_grid: vec![0.25, 0.125, 1.0 / 16.0, 1.0 / 32.0],
        n_min: 1,
        n_max: 3,
        families: vec![
            product("uniform", vec![1.0 / 17.0; 17]),
            product("tilted", (0..17).map(|i| (i as f64 + 1.0) / 153.0).collect()),
            empirical(),
            MeasureFamily::PointMass { symbol: 8 },
        ],
        seed,
        ..VpConfig::default()
    };
    Ok(StockModel { name: "grid16_z", alphabet: MetricAlphabet::grid(16)?, folner: folner_boxes(&group)?, vp })
}

/// Full binary shift over `Z^2` on square windows up to `2 x 2`.
pub fn binary_z2(seed: u64) -> Result<StockModel> {
    let group = GroupModel::zd(2)?;
    let vp = VpConfig {
        eps_grid: vec![0.3, 0.1],
        n_min: 1,
        n_max: 2,
        families: vec![
            product("bernoulli(0.5)", vec![0.5, 0.5]),
            product("bernoulli(0.2)", vec![0.8, 0.2]),
            empirical(),
            MeasureFamily::PointMass { symbol: 1 },
        ],
        seed,
        ..VpConfig::default()
    };
    Ok(StockModel { name: "binary_z2", alphabet: MetricAlphabet::binary(), folner: folner_boxes(&group)?, vp })
}
