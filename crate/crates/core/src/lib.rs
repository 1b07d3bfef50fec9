//! Quantum light through turbulent channels.
//!
//! The crate models the probability distribution of the complex transmission
//! coefficient (PDTC) of an atmospheric link, propagates Glauber–Sudarshan P
//! functions and normally ordered moments through it, simulates balanced
//! homodyne detection with a probe beam, reconstructs the PDTC from the measured
//! characteristic function, and evaluates nonclassicality criteria.
//!
//! Numerics are generic over [`Real`] (implemented for `f32` and `f64`); the
//! `*64` aliases below fix the common double-precision case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod homodyne;
pub mod linalg;
pub mod nonclassicality;
pub mod pdtc;
pub mod phase_space;
pub mod quadrature;
pub mod reconstruct;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use grid::Lattice;
pub use homodyne::{
    char_fn_exact, estimate_char_fn, estimate_photon_moments, simulate_records, CharFnEstimate,
    HomodyneRecord, LocalOscillator,
};
pub use nonclassicality::{
    classicality_bound, mandel_out, mandel_q, super_poisson_threshold, verify_bound_numerically,
    BoundReport, MandelReport,
};
pub use pdtc::{
    density_model, normal_approximation, pdtc_moments, EtaStats, GaussianPdtc, LogNormalPdtc, Pdtc,
    PdtcRecord, TurbulenceModelParams, ValidityWarning,
};
pub use phase_space::{
    attenuate_p, estimate_pdtc_moments, eval_p_in, laplace_output_p, moments_coherent,
    moments_displaced_spats, negativity_scan, output_p, transform_moments, AnalyticP, MomentMatrix,
    PField,
};
pub use quadrature::QuadOptions;
pub use reconstruct::{beta_grid, end_to_end, reconstruct, PdtcEstimate, ReconstructionPlan};
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type Pdtc64 = Pdtc<f64>;
pub type Pdtc32 = Pdtc<f32>;
pub type GaussianPdtc64 = GaussianPdtc<f64>;
pub type ModelParams64 = TurbulenceModelParams<f64>;
pub type MomentMatrix64 = MomentMatrix<f64>;
pub type PField64 = PField<f64>;
