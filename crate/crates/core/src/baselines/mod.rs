//! Reference detectors: linear PCA, Gaussian-kernel PCA and a plain
//! bottleneck autoencoder.

pub mod autoencoder;
pub mod kpca;
pub mod pca;

pub use autoencoder::{fit_autoencoder, reconstruction_gradients, AutoencoderModel};
pub use kpca::{fit_kpca, gram_matrix, kpca_extract, kpca_spe, KernelWidth, KpcaModel};
pub use pca::{fit_pca, select_dimension_cpv, PcaModel};
