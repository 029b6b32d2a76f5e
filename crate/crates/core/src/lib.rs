//! Diffuse scattering from building surfaces at millimeter-wave frequencies.
//!
//! This crate holds the numerical core and is `no_std` (it needs `alloc`):
//!
//! * [`materials`]: smooth and rough Fresnel reflection, the Rayleigh
//!   roughness factor and the theoretical scattering coefficient.
//! * [`lobes`]: single-lobe (directive) and dual-lobe (backscattering)
//!   effective-roughness models with their normalization integrals.
//! * [`geometry`]: wall scene, arc / semicylinder receiver scans, the image
//!   method and per-patch scattering angles.
//! * [`raytrace`]: one-bounce specular plus tiled diffuse simulation with
//!   power and path-length gating.
//! * [`fitting`]: FVU metric and the staged grid search over model
//!   parameters.
//!
//! File formats and the command line tool live in the `wallscatter` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fitting;
pub mod geometry;
pub mod lobes;
pub mod materials;
pub mod quadrature;
pub mod raytrace;
pub mod special;
pub mod units;
pub mod vector;

pub use error::{Error, Result};
pub use fitting::{FitReport, ModelKind, Scan, ScanPoint, SearchConfig};
pub use geometry::{ScanSpec, Scene, Wall};
pub use lobes::{LobeParams, NormalizationMode, RadioLink, ScatterGeometry, WidthFactor};
pub use materials::{IncidenceContext, Material, MaterialDb, Polarization, ReflectionBundle};
pub use raytrace::{SimConfig, SimResult};
pub use vector::Vec3;
