//! compsim-core: a desk-scale real–sim–real data generation pipeline.
//!
//! The crate hosts the full loop:
//!
//! - [`blockworld`] — deterministic 2.5D tabletop simulator with action
//!   primitives, scripted task scheduling, exact replay, and a sim-style
//!   renderer.
//! - [`realchannel`] — a synthetic "real world": the same geometry rendered
//!   through an appearance gap (color remaps, lighting, vignette, sensor
//!   noise), giving ground-truth action-aligned (sim, real) video pairs.
//! - [`calib`] — checkerboard rendering/detection, planar PnP extrinsics
//!   recovery, lattice pose snapping, median albedo extraction.
//! - [`dataset`] — episode persistence, pairing validation, and seeded
//!   real/pseudo mixture sampling.
//! - [`neuralsim`] — a conditional denoising-diffusion model over frames with
//!   separate visual-dynamics and control-dynamics condition branches,
//!   composed at sampling time for guided sim-to-real translation.
//! - [`metrics`] — PSNR/SSIM with exact constants and a plugin seam for
//!   learned metrics.
//! - [`policy`] — behavior-cloning policy plus the six-regime data-mixture
//!   evaluation harness.

pub mod blockworld;
pub mod calib;
pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod frame;
pub mod metrics;
pub mod neuralsim;
pub mod policy;
pub mod realchannel;
pub mod rng;

pub use frame::Frame;
