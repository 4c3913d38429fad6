//! Hankel–Fourier analysis of SO(4)-radial fields and dyadic shell calculus.

pub mod partition;
pub mod shells;
pub mod transform;
pub mod vector;

pub use partition::{cutoff, smoothstep, DyadicPartition, Profile};
pub use shells::{
    gradient5, random_band_limited, square_function_sum, square_function_sum_over, DyadicDecomposition,
    LittlewoodPaley,
};
pub use transform::{Basis, SpectralField, SpectralPlan};
pub use vector::{VectorFieldRZ, VectorSpectrum};
