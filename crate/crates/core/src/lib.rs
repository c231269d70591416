//! Appliance identification from electrical power traces.
//!
//! A trace is reshaped row-major into a 2D [`PowerMatrix`](signal2d::PowerMatrix).
//! Two maps are computed over it in parallel: the conventional 8-neighbour
//! LBP code map ([`lbp`]) and a binarized map of locally normalized principal
//! eigenvalues ([`bevm`]). The BEVM bit decides whether each sample's LBP code
//! is counted in the "up" or the "down" histogram ([`features`]); their
//! concatenation is the appliance signature. Signatures are classified with an
//! ensemble of bagged CART trees ([`ebt`]) and scored with [`metrics`].
//!
//! ```
//! use lbpbevm::features::{extract_lbp_bevm, ExtractionConfig};
//! use lbpbevm::signal2d::PowerSignal;
//!
//! let trace = PowerSignal::new(vec![42.0; 900], 1.0).unwrap();
//! let cfg = ExtractionConfig { width: Some(30), ..Default::default() };
//! let sig = extract_lbp_bevm(&trace, &cfg).unwrap();
//! // A flat trace never crosses the default threshold: all mass is "down", code 255.
//! assert_eq!(sig.h_down()[255], 1.0);
//! ```

pub mod bevm;
pub mod datasets;
pub mod ebt;
pub mod error;
pub mod features;
pub mod lbp;
pub mod metrics;
pub mod signal2d;

pub use error::{Error, Result};
