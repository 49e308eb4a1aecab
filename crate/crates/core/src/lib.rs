//! Numerics for compact, rotationally symmetric ancient Ricci flows on S³.

pub mod ansatz;
pub mod asymptotics;
pub mod barriers;
pub mod bryant;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod heat_kernel;
pub mod numerics;
pub mod pipeline;
pub mod spectral;
pub mod stiff;

pub use error::{Error, Result};
pub use geometry::{curvatures, neck_quality, tip_scalar_curvature, CurvatureField, Ends, Profile, Side};
