//! Overcomplete symmetric order-3 tensor decomposition and its uses in
//! moment-based estimation of discrete and Gaussian mixtures.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the common double-precision instantiations.

pub mod cumulants;
pub mod eval;
pub mod io;
pub mod jennrich;
pub mod linalg;
pub mod mixtures;
pub mod overcomplete;
pub mod probe;
pub mod scalar;
pub mod synth;
pub mod tensor;

pub use scalar::Real;

pub type SymTensor3F64 = tensor::SymTensor3<f64>;
pub type SymTensor3F32 = tensor::SymTensor3<f32>;
pub type ComponentMatrixF64 = tensor::ComponentMatrix<f64>;
pub type ComponentMatrixF32 = tensor::ComponentMatrix<f32>;
pub type MatrixF64 = linalg::Matrix<f64>;
pub type SampleSetF64 = cumulants::SampleSet<f64>;
pub type DecompositionConfigF64 = overcomplete::DecompositionConfig<f64>;
pub type DecompositionResultF64 = overcomplete::DecompositionResult<f64>;
pub type DiscreteMixtureParamsF64 = mixtures::DiscreteMixtureParams<f64>;
pub type DeconvolutionConfigF64 = mixtures::DeconvolutionConfig<f64>;
