//! Dense linear algebra, seeded randomness, feature scaling, and PCA.
//!
//! Everything downstream works in `f64` on plain `Vec` storage. The types
//! here are deliberately small: a row-major [`Matrix`], a [`Rng`] with a
//! documented xorshift-family state (bit-identical streams per seed across
//! platforms), a min-max [`MinMaxScaler`], and a [`PcaModel`] whose
//! eigendecomposition uses cyclic Jacobi rotations, which is exact enough and
//! dependency-free at the dimensionalities involved (d <= 30).

mod matrix;
mod pca;
mod rng;
mod scaler;
mod split;

pub use matrix::{dot, l2_norm, squared_distance, Matrix, Vector};
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use rng::Rng;
pub use scaler::{minmax_fit_transform, MinMaxScaler};
pub use split::seeded_shuffle_split;
