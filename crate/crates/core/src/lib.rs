//! Hyperspectral anomaly detection in the signed cumulative distribution
//! transform domain.
//!
//! Each pixel spectrum is mapped to its signed CDT, a background subspace is
//! fitted to the transformed pixels, and the anomaly score of a pixel is its
//! squared residual off that subspace. A global RX detector, a synthetic
//! scene generator, ROC evaluation and file I/O are included.

pub mod error;
pub mod eval;
pub mod io;
pub mod monotone;
pub mod rx;
pub mod scdt;
pub mod subspace;
pub mod synth;
pub mod types;

pub use error::Error;
pub use eval::{auc_report, roc, threshold_at_fpr, AucReport, OperatingPoint, RocCurve};
pub use monotone::MonotoneMap;
pub use rx::{fit_rx, rx_score, rx_score_cube, RxModel};
pub use scdt::{scdt_forward, CdtProfile, ScdtVector};
pub use subspace::{anomaly_score, fit_subspace, BackgroundSubspace, ScdtDetector};
pub use synth::{generate_scene, SceneSpec};
pub use types::{Domain, GroundTruthMask, HsiCube, ScoreMap, SpectralSignal};
