//! Geometric outlier detection for functional data.
//!
//! Curves are compared with a functional dissimilarity ([`dist`]), embedded
//! with classical MDS or ISOMAP ([`embed`]) and scored with the Local Outlier
//! Factor ([`score`]). Observations from a structurally different process
//! end up separated from the bulk of the data in the embedding and receive
//! high scores. [`dgp`] provides seeded synthetic scenarios with known
//! outliers and [`bench`] runs replicated AUC benchmarks over them.
//!
//! ```
//! use geofod::dgp::{generate, DgpConfig, DgpName};
//! use geofod::dist::{pairwise, MetricSpec};
//! use geofod::embed::classical_mds;
//! use geofod::score::{lof_on_embedding, LofConfig};
//! use geofod::bench::auc;
//!
//! let data = generate(&DgpConfig::new(DgpName::SimShift, 100, 0.1, 7)).unwrap();
//! let d = pairwise(&data, MetricSpec::lp(2.0)).unwrap();
//! let emb = classical_mds(&d, 5).unwrap();
//! let scores = lof_on_embedding(&emb, LofConfig::default_for(data.n()).unwrap()).unwrap();
//! let a = auc(&scores, data.labels().unwrap()).unwrap();
//! assert!(a > 0.9);
//! ```

pub mod bench;
pub mod dgp;
pub mod dist;
pub mod embed;
pub mod error;
pub mod functional;
pub mod score;

pub use error::{Error, Result};
