//! Ranking with unobserved consideration: a Plackett-Luce model whose
//! choosers first sample a consideration set item-by-item and then rank the
//! considered items.
//!
//! The crate provides
//!
//! - exact, randomized (additive-error), and binned (multiplicative-error)
//!   computation of ranking probabilities under the mixture model,
//! - maximum-likelihood utility fitting on data with known consideration
//!   sets,
//! - absolute and relative bounds on the unobserved per-item consideration
//!   probabilities, tightened by propagation over the utility-vs-rank flip
//!   graph, and
//! - generative samplers for everything above.
//!
//! All operations are deterministic given their inputs and seeds.
//!
//! ```
//! use plc_core::bounds::{derive_bounds, AlphaAssumption, CRatioPolicy};
//! use plc_core::plc::{plc_exact_top_l_stats, plc_prob_exact};
//! use plc_core::{ConsiderationProbs, Ranking, Utilities};
//!
//! let utilities = Utilities::new(vec![1.4, 0.9, 0.2, 0.0])?;
//! let consideration = ConsiderationProbs::new(vec![0.5, 0.9, 0.8, 0.6])?;
//!
//! // Probability that items 1 then 2 are the observed top-2 ranking.
//! let ranking = Ranking::new(vec![1, 2]);
//! let prob = plc_prob_exact(&ranking, &utilities, &consideration)?;
//! assert!(prob > 0.0 && prob < 1.0);
//!
//! // Bounds on the (unobservable) consideration probabilities, given the
//! // assumption that at least 1.4 * 2 items are considered on average.
//! let stats = plc_exact_top_l_stats(&utilities, &consideration, 2)?;
//! let assumption = AlphaAssumption::new(1.4, 2)?;
//! let outcome = derive_bounds(&stats, &utilities, &assumption, CRatioPolicy::Point)?;
//! for i in 0..4 {
//!     assert!(outcome.tightened.lower()[i] <= consideration.get(i));
//!     assert!(outcome.tightened.upper()[i] >= consideration.get(i));
//! }
//! # Ok::<(), plc_core::Error>(())
//! ```

pub mod bounds;
pub mod consideration;
pub mod error;
pub mod plackett_luce;
pub mod plc;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    normalize_utilities, validate_ranking, ConsiderationProbs, ItemSet, NormalizeMode,
    Observation, Ranking, RankingDataset, StatsSource, TopLStats, Universe, Utilities,
};
