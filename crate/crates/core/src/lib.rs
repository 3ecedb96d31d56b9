//! Dense RGB-D frame-to-frame tracking with uncertainty-normalised
//! feature-metric residuals and optional point-to-plane ICP.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod imagegrid;
pub mod residuals;
pub mod scalar;
pub mod solver;

pub use features::{FeatureProvider, Frame};
pub use geometry::{CameraIntrinsics, Pose, Twist};
pub use imagegrid::{DenseMap, Pyramid};
pub use residuals::NormalEquations;
pub use scalar::Real;
pub use solver::{track, SolverConfig, TrackResult};

pub type Pose64 = Pose<f64>;
pub type Pose32 = Pose<f32>;
pub type Twist64 = Twist<f64>;
pub type Twist32 = Twist<f32>;
pub type Intrinsics64 = CameraIntrinsics<f64>;
pub type Intrinsics32 = CameraIntrinsics<f32>;
pub type DenseMap64 = DenseMap<f64>;
pub type DenseMap32 = DenseMap<f32>;
pub type Frame64 = Frame<f64>;
pub type Frame32 = Frame<f32>;
pub type TrackResult64 = TrackResult<f64>;
pub type TrackResult32 = TrackResult<f32>;
