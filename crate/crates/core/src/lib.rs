//! Chiral calculus for 4-dimensional Einstein geometry.
//!
//! The crate has three layers:
//!
//! * a small exact symbolic engine ([`symcalc`]) feeding a differential-form
//!   and curvature calculus on 4-dimensional charts ([`riemann4`]);
//! * SO(3)-connection machinery: curvature, definiteness, the canonical
//!   metric `g_A`, torsion and its linearisation ([`so3conn`], [`definite`],
//!   [`torsionlin`]), plus the Bianchi-gauge operators ([`bianchi`]);
//! * the explicit hyperbolic half-space model: frames, almost complex
//!   structures, the gauge-fixing projector and its normal operator,
//!   indicial roots and grid numerics ([`h4model`]).
//!
//! Heavy inner loops (sampling batteries, quadrature, grid sweeps) run on
//! rayon when the default `parallel` feature is enabled and fall back to
//! sequential execution without it; reductions are deterministic either way.

pub mod par;
pub mod quad;
pub mod randfield;
pub mod torsionlin;
pub mod definite;
pub mod h4model;
pub mod riemann4;
pub mod so3conn;
pub mod symcalc;
