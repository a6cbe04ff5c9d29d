//! Virtual-screening toolkit: SMILES molecular graphs, descriptors and ADME
//! flags, circular fingerprints, Tanimoto similarity and clustering, an MLP
//! pIC50 regressor, topological pharmacophores and a screening pipeline.

pub mod chem;
pub mod descriptors;
pub mod fingerprint;
pub mod hash;
pub mod pdenet;
pub mod pharmacophore;
pub mod scalar;
pub mod screen;
pub mod simcluster;

pub use chem::{canonical_smiles, parse_smiles, ChemError, Molecule};
pub use scalar::Scalar;

/// Double-precision pIC50 network, the default used by the pipeline.
pub type PdeNet = pdenet::MlpModel<f64>;
pub type PdeNet32 = pdenet::MlpModel<f32>;
pub type SimMatrix = simcluster::SimilarityMatrix<f64>;
pub type DistMatrix = simcluster::DistanceMatrix<f64>;
