//! Lattice fields, spectral transforms, Leray projection and synthesis of
//! random fields with prescribed Hölder regularity.

mod grid;
mod spectral;
mod synth;

pub use grid::{energy, l2_norm_sq, Geometry, Grid, GridField};
pub(crate) use grid::norm3;
pub use spectral::{
    forward_transform, gradient_field, grad_norm_sq, inverse_transform, leray_project, SpectralField,
    Wavenumbers,
};
pub(crate) use spectral::{forward_scalar, inverse_scalar};
pub use synth::{
    random_band_limited, synthesize_holder_field, synthesize_spectral, synthesize_white_noise,
    SynthesisSpec,
};
pub(crate) use synth::random_phase_coefficients;
