//! Best-worst scaling for ranking items by perceived difficulty.
//!
//! * [`design`] builds pair-covering sets of 4-item tasks.
//! * [`judgments`] turns best/worst votes into a mean-score scale.
//! * [`analysis`] compares rankings and labelings.
//! * [`simulate`] provides synthetic annotators with known latent difficulties.
//! * [`formats`] reads and writes the items, votes and scale files.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix it to `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub mod analysis;
pub mod design;
pub mod error;
pub mod formats;
pub mod judgments;
pub mod simulate;

pub use design::{combination_count, generate_design, pair_count, redundancy_report, Design, RedundancyReport};
pub use error::{Error, Result};
pub use judgments::{
    aggregate_scale, infer_relations, score_vote, validate_vote, CefrLevel, Item, Relation, ValidationError, Vote,
};

/// Floating-point type the numeric routines are written against.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static {}

pub type RankedScale = judgments::RankedScale<f64>;
pub type RankedScaleF32 = judgments::RankedScale<f32>;
pub type ScaleEntry = judgments::ScaleEntry<f64>;
pub type RankingComparison = analysis::RankingComparison<f64>;
pub type AgreementReport = analysis::AgreementReport<f64>;
pub type LatentWorld = simulate::LatentWorld<f64>;
pub type SyntheticAnnotator = simulate::SyntheticAnnotator<f64>;
