//! Device-independent QKD key rates for photonic setups.
//!
//! The crate evaluates the asymptotic key rate of CHSH-based DIQKD protocols
//! with and without noisy pre-processing, for an SPDC photon-pair source with
//! threshold detectors and for an ideal two-qubit source, and searches for the
//! smallest global detection efficiency that still gives a positive rate.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod entropy;
pub mod error;
pub mod eve;
pub mod fock;
pub mod hermitian;
pub mod optim;
pub mod oracle;
pub mod qubit;
pub mod rate;
pub mod spdc;
pub mod stats;
pub mod verify;

pub use entropy::{
    binary_entropy, conditional_entropy, eve_info_bound, h_q, n_q, shannon_entropy, ChshScore,
    DistributionTable, NoiseParam, Probability, TSIRELSON,
};
pub use error::{Error, Result};
pub use eve::{
    bell_chsh, eve_conditional_entropy, eve_conditional_state, eve_information,
    verify_monotonicity, BellDiagonalWeights, EveConditionalState, MeasurementAngle,
};
pub use fock::fock_joint_distribution;
pub use oracle::{oracle_max_eve_info, OracleResolution, OracleResult};
pub use qubit::{qubit_chsh, qubit_source_distribution, QubitOutcome};
pub use rate::{
    key_rate, optimize_rate, protocol_curves, rate_curve, threshold_efficiency, NoiseChoice,
    OptimizerOptions, ParameterPoint, ProtocolSpec, ProtocolVariant, RateResult, SourceKind,
    SourcePoint, Threshold,
};
pub use spdc::{
    binarize, chsh_score, coupling_matrix, error_correction_term, joint_outcome_distribution,
    noclick_probability, ChshSettings, ClickPattern, DetectionModel, Detector, DetectorSet,
    MeasurementSetting, SqueezedSourceParams,
};
pub use stats::{symmetrize, EcVariant, JointOutcomeDistribution, LocalOutcome};
