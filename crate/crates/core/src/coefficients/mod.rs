//! Coefficient laws, the change to purely non-Fickian stress, the
//! homogenized system and its bound certificates.

pub mod background;
pub mod certificate;
pub mod homogenized;
pub mod laws;
pub mod residual;
pub mod transform;

pub use background::BackgroundField;
pub use certificate::{certify_bounds, BoundsCertificate, CoefficientSample, SamplingBox};
pub use homogenized::{homogenize, FaceCoefficients, HomogenizedCoefficients};
pub use laws::{beta_tanh, e_rational, Partials};
pub use residual::homogenized_residual;
pub use transform::{transform, NuLaw, PrimalCoefficients, TransformedCoefficients};
