//! Engines for multiphoton scattering tomography with coherent-state probes.
//!
//! The crate is `no_std` (with `alloc`) and purely numerical.
#![no_std]
#![allow(unused_imports)]

extern crate alloc;

mod error;
pub mod grid;
pub mod deconvolution;
pub mod extrapolation;
pub mod hilbert;
pub mod imperfections;
pub mod protocol;
pub mod quadrature;
pub mod stats;
pub mod waveguide;

pub use error::{Error, Result};
pub use num_complex::Complex64;
