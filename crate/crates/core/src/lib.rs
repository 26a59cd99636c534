//! Geodesics between orthogonal projections in finite-dimensional matrix
//! algebras.
//!
//! The crate is organised bottom-up: [`numkit`] holds the dense complex
//! kernels, [`projlat`] the projection lattice and the Halmos
//! decomposition, [`geo`] geodesic construction and measurement,
//! [`factor`] finite von Neumann algebras with their traces, and [`jones`]
//! index-pair models, conditional expectations and parallel transport.
//! [`batch`] runs randomized trials, in parallel when the `parallel`
//! feature is on.

pub mod batch;
pub mod error;
pub mod factor;
pub mod geo;
pub mod jones;
pub mod numkit;
pub mod projlat;
pub mod sample;

pub use error::{Error, Result};
pub use numkit::{CMatrix, ToleranceProfile};
pub use projlat::Projection;
