//! Mask-compliant spectral precoding for CP-OFDM.
//!
//! The crate models the out-of-band leakage of a CP-OFDM symbol at discrete
//! frequency points, turns an emission mask into per-point power limits and
//! solves for the precoded symbol nearest to the data that meets them. See
//! [`precoders`] for the solvers and [`runner`] for batch experiments.

pub mod error;
pub mod leakage;
pub mod metrics;
pub mod precoders;
pub mod runner;
pub mod scenario;
pub mod signal;

pub use error::{Error, Result};
pub use leakage::{build_leakage_matrix, leakage_coefficient, mask_to_gamma, oobe_amplitudes, LeakageMatrix, MaskSpec, MaskTable};
pub use metrics::{aclr_first_adjacent, evm, psd_periodogram, sem_margin, EvmReport, PowerCalibration, PsdEstimate};
pub use precoders::{
    admm_precode, dykstra_oracle, nsp_precode, pocs_precode, project_rank1, sherman_morrison_apply, ssp_precode,
    AdmmState, ConvergenceTrace, PrecoderResult, Rank1Constraint, SspState,
};
pub use runner::{benchmark, run_scenario, RunOptions};
pub use scenario::{parse_scenario, Scenario};
pub use signal::{gen_ofdm_symbol, ofdm_modulate, CarrierConfig, Constellation, OfdmSymbol};
