//! Numerical toolkit for metric mean dimension and rate distortion of shift
//! systems over amenable groups.
//!
//! Everything operates on finite windows: Følner sets, exact tilings of a
//! window, finite-alphabet configurations, and finite probability tables.

pub mod error;
pub mod groups;
pub mod infotheory;
pub mod mdim;
pub mod ratedist;
pub mod spaces;
pub mod stock;
pub mod tilings;

pub use error::{Error, Result};
pub use infotheory::{JointPmf, Kernel, Pmf};
pub use groups::{Elem, FiniteSubset, FolnerSequence, GroupModel};
pub use spaces::{Config, CoverBracket, MetricAlphabet, OrbitKind, OrbitMetric, SystemModel};
pub use tilings::FiniteTiling;
pub use mdim::{MdimEstimate, VpConfig, VpReport};
pub use ratedist::{Distortion, InvariantMeasureModel, SolverOptions};
