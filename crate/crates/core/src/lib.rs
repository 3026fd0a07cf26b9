//! Locating a fluorescent target in a diffusive half-space from peak times.
//!
//! A point fluorophore below a planar boundary is excited by a pulse from a
//! source on the boundary and observed at a detector. This crate provides
//!
//! * the forward model: the detected temporal response with and without a
//!   fluorescence lifetime ([`forward`]);
//! * approximate peak times from root-finding on the asymptotic profile
//!   ([`approx`]);
//! * a direct three-measurement inversion of peak times to the target
//!   location ([`inversion`]);
//! * batch drivers for curves, sweeps and reconstruction tables
//!   ([`experiments`]).
//!
//! ```no_run
//! use fdot::{simulate, InversionConfig, NoiseSpec, PhysicalParams, SdPair, Target};
//!
//! let params = PhysicalParams::tissue(100.0);
//! let pair = SdPair::planar([6.0, 10.0], [14.0, 10.0]).unwrap();
//! let target = Target::at(8.0, 7.0, 20.0).unwrap();
//! let result = simulate(&target, &pair, &InversionConfig::new(params), NoiseSpec::none()).unwrap();
//! println!("{:?}", result.estimate);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod inversion;
pub mod physics;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use approx::{
    approx_peak, approx_peak_large_ell, approx_peak_small_ell, asymptotic_peak_large_ell,
    asymptotic_peak_small_ell, large_ell_validity, solve_p_root, PeakEquationContext, PeakMethod,
    PeakTimeEstimate,
};
pub use error::{FdotError, Result};
pub use forward::{
    khat, peak_time_numeric, um_asymptotic, um_lifetime, um_zero_lifetime, ForwardModel,
    PeakSearch, ResponseCurve, TimeGrid,
};
pub use inversion::{
    invert, lambda_from_peak, place_sd_pairs, reconstruct_target, rel_err, simulate, Branch,
    BranchPolicy, InversionConfig, NoiseSpec, PeakTimeSource, ReconstructionResult,
    StagedInversion,
};
pub use physics::{
    k_rate, lambda_param, radius_with_rule, PhysicalParams, Point, RadiusRule, SdPair, Target,
};
pub use special::erfcx;
